#include "cpsim/model.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace cpsim {

void ModelSpec::validate() const {
  if (sites < 2) throw std::invalid_argument("ModelSpec: need at least 2 sites");
  if (gamma <= 0.0) throw std::invalid_argument("ModelSpec: gamma must be > 0");
  if (branching() < 0.0)
    throw std::invalid_argument("ModelSpec: branching rate must be >= 0");
}

namespace ops {

Matrix identity2() { return Matrix::Identity(2, 2); }

Matrix sigma_minus() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;  // |o><*|
  return m;
}

Matrix sigma_plus() { return sigma_minus().adjoint(); }

Matrix number() {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 1) = 1.0;
  return m;
}

Matrix sigma_x() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}

Matrix lift_ket(const Matrix& op) {
  return local_super(op, Matrix::Identity(op.rows(), op.cols()));
}

Matrix local_super(const Matrix& a, const Matrix& b) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.rows());
  Matrix out(n * m, n * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.block(i * m, j * m, m, m) = a(i, j) * b.conjugate();
  return out;
}

Matrix two_site_super(const Matrix& a4, const Matrix& b4) {
  Matrix out = Matrix::Zero(16, 16);
  for (int k1 = 0; k1 < 2; ++k1)
    for (int b1 = 0; b1 < 2; ++b1)
      for (int k2 = 0; k2 < 2; ++k2)
        for (int b2 = 0; b2 < 2; ++b2)
          for (int k1p = 0; k1p < 2; ++k1p)
            for (int b1p = 0; b1p < 2; ++b1p)
              for (int k2p = 0; k2p < 2; ++k2p)
                for (int b2p = 0; b2p < 2; ++b2p) {
                  const int row = 4 * (2 * k1 + b1) + (2 * k2 + b2);
                  const int col = 4 * (2 * k1p + b1p) + (2 * k2p + b2p);
                  out(row, col) = a4(2 * k1 + k2, 2 * k1p + k2p) *
                                  b4(2 * b1 + b2, 2 * b1p + b2p);
                }
  return out;
}

Matrix dissipator_super(const Matrix& j) {
  const Matrix jj = j.adjoint() * j;
  const Matrix id = Matrix::Identity(j.rows(), j.cols());
  return local_super(j, j) - 0.5 * local_super(jj, id) -
         0.5 * local_super(id, jj);
}

}  // namespace ops

namespace {

// Share of each site's single-site term assigned to bond k (0-based).
// Boundary sites put their full weight on the only adjacent bond.
std::pair<double, double> edge_weights(int bond, int sites) {
  const double wl = bond == 0 ? 1.0 : 0.5;
  const double wr = bond == sites - 2 ? 1.0 : 0.5;
  return {wl, wr};
}

Matrix kron4(const Matrix& a, const Matrix& b) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.rows());
  Matrix out(n * m, n * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.block(i * m, j * m, m, m) = a(i, j) * b;
  return out;
}

Matrix hamiltonian_bond(const ModelSpec& spec) {
  const double om = spec.omega * spec.gamma;
  return om * (kron4(ops::sigma_x(), ops::number()) +
               kron4(ops::number(), ops::sigma_x()));
}

// 16x16 dissipator for a two-site jump operator acting on the ket pair.
Matrix bond_dissipator(const Matrix& j) {
  const Matrix jj = j.adjoint() * j;
  const Matrix id4 = Matrix::Identity(4, 4);
  return ops::two_site_super(j, j.conjugate()) -
         0.5 * ops::two_site_super(jj, id4) -
         0.5 * ops::two_site_super(id4, jj.transpose());
}

}  // namespace

std::vector<Matrix> build_hamiltonian_terms(const ModelSpec& spec) {
  spec.validate();
  if (spec.kind == ModelSpec::Kind::classical) return {};
  return std::vector<Matrix>(spec.sites - 1, hamiltonian_bond(spec));
}

std::vector<Matrix> build_double_space_bond_terms(const ModelSpec& spec) {
  spec.validate();
  const Matrix decay =
      spec.gamma * ops::dissipator_super(ops::sigma_minus());
  const Matrix id4 = Matrix::Identity(4, 4);
  const Cplx mi(0.0, -1.0);

  Matrix coherent = Matrix::Zero(16, 16);
  if (spec.kind == ModelSpec::Kind::quantum) {
    const Matrix h = hamiltonian_bond(spec);
    coherent = mi * (ops::two_site_super(h, Matrix::Identity(4, 4)) -
                     ops::two_site_super(Matrix::Identity(4, 4), h.transpose()));
  } else {
    const double rate = spec.Gamma * spec.gamma;
    const Matrix jl = kron4(ops::sigma_x(), ops::number());
    const Matrix jr = kron4(ops::number(), ops::sigma_x());
    coherent = rate * (bond_dissipator(jl) + bond_dissipator(jr));
  }

  std::vector<Matrix> terms;
  terms.reserve(spec.sites - 1);
  for (int k = 0; k + 1 < spec.sites; ++k) {
    auto [wl, wr] = edge_weights(k, spec.sites);
    terms.push_back(coherent + wl * kron4(decay, id4) + wr * kron4(id4, decay));
  }
  return terms;
}

std::vector<Matrix> build_effective_hamiltonian_terms(const ModelSpec& spec) {
  spec.validate();
  if (spec.kind != ModelSpec::Kind::quantum)
    throw std::invalid_argument(
        "effective Hamiltonian: trajectories support the quantum process only");
  const Matrix h = hamiltonian_bond(spec);
  const Matrix id2 = ops::identity2();
  const Cplx half_decay(0.0, -0.5 * spec.gamma);
  std::vector<Matrix> terms;
  terms.reserve(spec.sites - 1);
  for (int k = 0; k + 1 < spec.sites; ++k) {
    auto [wl, wr] = edge_weights(k, spec.sites);
    terms.push_back(h + half_decay * (wl * kron4(ops::number(), id2) +
                                      wr * kron4(id2, ops::number())));
  }
  return terms;
}

std::vector<JumpOp> jump_operators(const ModelSpec& spec) {
  spec.validate();
  if (spec.kind != ModelSpec::Kind::quantum)
    throw std::invalid_argument(
        "jump operators: trajectories support the quantum process only");
  std::vector<JumpOp> jumps;
  jumps.reserve(spec.sites);
  for (int k = 0; k < spec.sites; ++k)
    jumps.push_back({k, ops::sigma_minus(), spec.gamma});
  return jumps;
}

GateSchedule build_trotter_schedule(const ModelSpec& spec, Picture picture,
                                    double dt) {
  spec.validate();
  if (dt <= 0.0) throw std::invalid_argument("Trotter step must be positive");

  std::vector<Matrix> gens;
  if (picture == Picture::pure_state_nonhermitian) {
    const Cplx mi(0.0, -1.0);
    for (const Matrix& h : build_effective_hamiltonian_terms(spec))
      gens.push_back(mi * h);
  } else {
    gens = build_double_space_bond_terms(spec);
    if (picture == Picture::heisenberg_double)
      for (Matrix& g : gens) g = g.adjoint().eval();
  }

  auto make_gate = [&](int bond, double tau) {
    TwoSiteGate g;
    g.site = bond;
    Matrix m = (tau * gens[bond]).exp();
    // The empty pair is exactly invariant under the forward generators
    // (structural zero column); pin the exponential column so light-cone
    // skips and absorbing-state detection stay exact.
    if (gens[bond].col(0).isZero(0.0)) {
      m.col(0).setZero();
      m(0, 0) = 1.0;
    }
    const int n = static_cast<int>(m.rows());
    g.is_unitary =
        (m.adjoint() * m - Matrix::Identity(n, n)).norm() < 1e-12;
    g.matrix = std::move(m);
    return g;
  };

  GateSchedule sched;
  sched.picture = picture;
  sched.dt = dt;
  const int nb = spec.sites - 1;
  // Even bonds ascending, odd bonds descending, even bonds ascending. Gates
  // within each half-step commute (disjoint supports), so the descending
  // middle sweep is the same operator while keeping the orthogonality
  // center's walk short.
  for (int k = 0; k < nb; k += 2) sched.gates.push_back(make_gate(k, dt / 2));
  const int top_odd = nb % 2 == 0 ? nb - 1 : nb - 2;
  for (int k = top_odd; k >= 1; k -= 2) sched.gates.push_back(make_gate(k, dt));
  for (int k = 0; k < nb; k += 2) sched.gates.push_back(make_gate(k, dt / 2));
  if (picture == Picture::heisenberg_double)
    std::reverse(sched.gates.begin(), sched.gates.end());
  return sched;
}

}  // namespace cpsim
