#include "cpsim/dense.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "cpsim/jump_protocol.hpp"

namespace cpsim::dense {

namespace {

void guard_size(int sites, int local_dim) {
  if (local_dim == 4 && sites > 6)
    throw std::invalid_argument("dense vectorized evolution limited to L <= 6");
  if (local_dim == 2 && sites > 12)
    throw std::invalid_argument("dense pure-state evolution limited to L <= 12");
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

std::int64_t doubled_index(int ket, int bra, int sites) {
  std::int64_t g = 0;
  for (int k = sites - 1; k >= 0; --k) {
    const int m = (ket >> (sites - 1 - k)) & 1;
    const int n = (bra >> (sites - 1 - k)) & 1;
    g += static_cast<std::int64_t>(2 * m + n) << (2 * (sites - 1 - k));
  }
  return g;
}

Vector vectorize(const Matrix& rho, int sites) {
  const std::int64_t dim = std::int64_t(1) << sites;
  Vector v = Vector::Zero(dim * dim);
  for (std::int64_t m = 0; m < dim; ++m)
    for (std::int64_t n = 0; n < dim; ++n)
      v(doubled_index(static_cast<int>(m), static_cast<int>(n), sites)) =
          rho(m, n);
  return v;
}

Matrix devectorize(const Vector& v, int sites) {
  const std::int64_t dim = std::int64_t(1) << sites;
  Matrix rho(dim, dim);
  for (std::int64_t m = 0; m < dim; ++m)
    for (std::int64_t n = 0; n < dim; ++n)
      rho(m, n) =
          v(doubled_index(static_cast<int>(m), static_cast<int>(n), sites));
  return rho;
}

Matrix kron_at(const Matrix& op, int site, int sites) {
  const int d = static_cast<int>(op.rows());
  Matrix out = Matrix::Identity(1, 1);
  for (int k = 0; k < sites; ++k)
    out = kron(out, k == site ? op : Matrix::Identity(d, d));
  return out;
}

Matrix embed_two_site(const Matrix& op, int bond, int sites) {
  const int d2 = static_cast<int>(op.rows());
  const int d = d2 == 16 ? 4 : 2;
  Matrix out = Matrix::Identity(1, 1);
  for (int k = 0; k < sites; ++k) {
    if (k == bond) {
      out = kron(out, op);
      ++k;  // op covers sites bond and bond+1
      continue;
    }
    out = kron(out, Matrix::Identity(d, d));
  }
  return out;
}

Matrix lindblad_generator(const ModelSpec& spec) {
  spec.validate();
  guard_size(spec.sites, 4);
  const std::int64_t dim = std::int64_t(1) << (2 * spec.sites);
  Matrix gen = Matrix::Zero(dim, dim);

  if (spec.kind == ModelSpec::Kind::quantum) {
    const double om = spec.omega * spec.gamma;
    const Matrix h_bond =
        om * (kron(ops::sigma_x(), ops::number()) +
              kron(ops::number(), ops::sigma_x()));
    const Matrix hd = ops::two_site_super(h_bond, Matrix::Identity(4, 4)) -
                      ops::two_site_super(Matrix::Identity(4, 4),
                                          h_bond.transpose());
    const Cplx mi(0.0, -1.0);
    for (int k = 0; k + 1 < spec.sites; ++k)
      gen += mi * embed_two_site(hd, k, spec.sites);
  } else {
    const double rate = spec.Gamma * spec.gamma;
    const Matrix jl = kron(ops::sigma_x(), ops::number());
    const Matrix jr = kron(ops::number(), ops::sigma_x());
    const Matrix id4 = Matrix::Identity(4, 4);
    for (const Matrix& j : {jl, jr}) {
      const Matrix jj = j.adjoint() * j;
      const Matrix diss = ops::two_site_super(j, j.conjugate()) -
                          0.5 * ops::two_site_super(jj, id4) -
                          0.5 * ops::two_site_super(id4, jj.transpose());
      for (int k = 0; k + 1 < spec.sites; ++k)
        gen += rate * embed_two_site(diss, k, spec.sites);
    }
  }

  const Matrix decay = spec.gamma * ops::dissipator_super(ops::sigma_minus());
  for (int k = 0; k < spec.sites; ++k)
    gen += kron_at(decay, k, spec.sites);
  return gen;
}

Cplx vec_trace(const Vector& v, int sites) {
  const std::int64_t dim = std::int64_t(1) << sites;
  Cplx tr(0.0, 0.0);
  for (std::int64_t m = 0; m < dim; ++m)
    tr += v(doubled_index(static_cast<int>(m), static_cast<int>(m), sites));
  return tr;
}

Cplx vec_expectation(const Vector& v, const Matrix& op, int site, int sites) {
  const Matrix lifted = kron_at(ops::lift_ket(op), site, sites);
  return vec_trace(lifted * v, sites);
}

Cplx pure_expectation(const Vector& v, const Matrix& op, int site, int sites) {
  return v.dot(kron_at(op, site, sites) * v);
}

DenseState lindblad_evolve(const ModelSpec& spec, const DenseState& rho0,
                           double t, int substeps) {
  if (rho0.kind != DenseState::Kind::vectorized)
    throw std::invalid_argument("lindblad_evolve expects a vectorized state");
  if (t < 0.0) throw std::invalid_argument("negative evolution time");
  if (substeps < 1) substeps = 1;
  const Matrix gen = lindblad_generator(spec);
  const Matrix prop = ((t / substeps) * gen).exp();
  DenseState out = rho0;
  for (int s = 0; s < substeps; ++s) out.v = prop * out.v;
  return out;
}

DenseState trotter_evolve(const ModelSpec& spec, const DenseState& state,
                          const GateSchedule& schedule, int n_steps) {
  const int d = schedule.picture == Picture::pure_state_nonhermitian ? 2 : 4;
  guard_size(spec.sites, d);
  std::vector<Matrix> embedded;
  embedded.reserve(schedule.gates.size());
  for (const TwoSiteGate& g : schedule.gates)
    embedded.push_back(embed_two_site(g.matrix, g.site, spec.sites));
  DenseState out = state;
  for (int s = 0; s < n_steps; ++s)
    for (const Matrix& m : embedded) out.v = m * out.v;
  return out;
}

Trajectory qjmc_trajectory(const ModelSpec& spec, const Vector& psi0,
                           double t_max, double dt, std::uint64_t master_seed,
                           std::uint64_t trajectory_index, int measure_every) {
  guard_size(spec.sites, 2);
  const GateSchedule sched =
      build_trotter_schedule(spec, Picture::pure_state_nonhermitian, dt);
  std::vector<Matrix> embedded;
  for (const TwoSiteGate& g : sched.gates)
    embedded.push_back(embed_two_site(g.matrix, g.site, spec.sites));
  std::vector<Matrix> number_ops;
  for (int k = 0; k < spec.sites; ++k)
    number_ops.push_back(kron_at(ops::number(), k, spec.sites));
  std::vector<Matrix> lowering;
  for (const JumpOp& j : jump_operators(spec))
    lowering.push_back(kron_at(j.op, j.site, spec.sites));

  CounterRng rng(master_seed, trajectory_index);
  Vector psi = psi0 / psi0.norm();
  const int n_steps = static_cast<int>(std::llround(t_max / dt));

  Trajectory out;
  out.times.push_back(0.0);
  out.states.push_back(psi);
  std::vector<double> p(spec.sites);
  for (int step = 1; step <= n_steps; ++step) {
    for (int k = 0; k < spec.sites; ++k)
      p[k] = dt * spec.gamma * std::real(psi.dot(number_ops[k] * psi));
    const JumpDraw draw = draw_jump(p, rng);
    if (draw.jumped) {
      psi = lowering[draw.site] * psi;
      out.jumps.emplace_back(step * dt, draw.site);
    } else {
      for (const Matrix& m : embedded) psi = m * psi;
    }
    const double nrm = psi.norm();
    if (nrm < 1e-12) throw std::runtime_error("trajectory norm collapse");
    psi /= nrm;
    if (step % measure_every == 0) {
      out.times.push_back(step * dt);
      out.states.push_back(psi);
    }
  }
  return out;
}

}  // namespace cpsim::dense
