#pragma once

#include <cstdint>
#include <vector>

#include "cpsim/model.hpp"
#include "cpsim/mps.hpp"

// Brute-force dense evolution for small systems: exact Lindblad propagation,
// exact Trotterized propagation, and exact stochastic unravelling. Ground
// truth for the MPS engines.
namespace cpsim::dense {

struct DenseState {
  enum class Kind { pure, vectorized };
  Vector v;
  Kind kind;
};

/// Global doubled index with per-site interleaving s_k = 2*ket_k + bra_k,
/// site 0 slowest; matches the d = 4 MPS convention.
std::int64_t doubled_index(int ket, int bra, int sites);

/// Vectorize a 2^L x 2^L density matrix into the doubled-space convention.
Vector vectorize(const Matrix& rho, int sites);
Matrix devectorize(const Vector& v, int sites);

/// Embed a single-site operator (d x d) at `site` in a chain of length L.
Matrix kron_at(const Matrix& op, int site, int sites);
/// Embed a two-site operator (d^2 x d^2) on sites (bond, bond+1).
Matrix embed_two_site(const Matrix& op, int bond, int sites);

/// Full doubled-space Lindblad generator, assembled from the global
/// Hamiltonian and the jump list rather than from per-bond terms.
Matrix lindblad_generator(const ModelSpec& spec);

/// tr[rho] of a vectorized state.
Cplx vec_trace(const Vector& v, int sites);
/// tr[rho op_site] for a single-site operator.
Cplx vec_expectation(const Vector& v, const Matrix& op, int site, int sites);
/// <psi| op_site |psi> for a pure state.
Cplx pure_expectation(const Vector& v, const Matrix& op, int site, int sites);

/// e^{t L} applied by dense matrix exponential over `substeps` slices.
DenseState lindblad_evolve(const ModelSpec& spec, const DenseState& rho0,
                           double t, int substeps = 1);

/// Applies the schedule's gate matrices densely, n_steps times.
DenseState trotter_evolve(const ModelSpec& spec, const DenseState& state,
                          const GateSchedule& schedule, int n_steps);

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;            // normalized, one per recorded time
  std::vector<std::pair<double, int>> jumps;
};

/// Identical jump/no-jump protocol as the MPS trajectory engine, including
/// RNG stream discipline, on dense pure states.
Trajectory qjmc_trajectory(const ModelSpec& spec, const Vector& psi0,
                           double t_max, double dt, std::uint64_t master_seed,
                           std::uint64_t trajectory_index,
                           int measure_every = 1);

}  // namespace cpsim::dense
