#pragma once

#include <vector>

#include "cpsim/mps.hpp"

namespace cpsim {

// Local basis convention: index 0 = empty |o>, index 1 = occupied |*>.
// Double-space (vectorized) local index: s = 2*ket + bra, so the vectorized
// |o><o| projector is the basis state s = 0.

struct ModelSpec {
  enum class Kind { classical, quantum };
  Kind kind = Kind::quantum;
  int sites = 2;
  double gamma = 1.0;   // decay rate
  double omega = 0.0;   // coherent branching (quantum), units of gamma
  double Gamma = 0.0;   // classical branching rate, units of gamma

  double branching() const {
    return kind == Kind::quantum ? omega : Gamma;
  }
  void validate() const;
  /// 0-based central seed site, floor(L/2).
  int seed_site() const { return sites / 2; }
};

namespace ops {
Matrix identity2();
Matrix sigma_minus();
Matrix sigma_plus();
Matrix number();
Matrix sigma_x();
/// Double-space lift of a single-site ket operator, kron(op, 1).
Matrix lift_ket(const Matrix& op);
/// Superoperator for rho -> A rho B^dagger on one site, kron(A, conj(B)).
Matrix local_super(const Matrix& a, const Matrix& b);
/// Two-site superoperator: A acts on the ket pair, B on the bra pair, with
/// per-site double index s = 2*ket + bra.
Matrix two_site_super(const Matrix& a4, const Matrix& b4);
/// Single-site Lindblad dissipator superoperator for jump J (4x4).
Matrix dissipator_super(const Matrix& j);
}  // namespace ops

enum class Picture { schrodinger_double, heisenberg_double, pure_state_nonhermitian };

/// One full second-order Trotter step: odd bonds at dt/2, even bonds at dt,
/// odd bonds at dt/2, in application order.
struct GateSchedule {
  Picture picture;
  double dt = 0.0;
  std::vector<TwoSiteGate> gates;
};

/// L-1 Hermitian 4x4 bond terms h_k = Omega (sx x n + n x sx). Empty for the
/// classical process, which has no Hamiltonian.
std::vector<Matrix> build_hamiltonian_terms(const ModelSpec& spec);

/// L-1 double-space 16x16 bond terms whose embedded sum is the full Lindblad
/// generator. Single-site decay is split across adjacent bonds (boundary
/// sites put their full weight on the only adjacent bond).
std::vector<Matrix> build_double_space_bond_terms(const ModelSpec& spec);

/// L-1 complex 4x4 bond terms of H_eff = H - (i/2) gamma sum_k n_k with the
/// same edge-sharing convention. Quantum kind only.
std::vector<Matrix> build_effective_hamiltonian_terms(const ModelSpec& spec);

struct JumpOp {
  int site;
  Matrix op;    // 2x2, rate folded out
  double rate;
};
/// The QCP's jumps: one sigma_minus per site at rate gamma.
std::vector<JumpOp> jump_operators(const ModelSpec& spec);

GateSchedule build_trotter_schedule(const ModelSpec& spec, Picture picture,
                                    double dt);

}  // namespace cpsim
