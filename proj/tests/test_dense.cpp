#include <doctest.h>

#include <cmath>

#include "cpsim/dense.hpp"
#include "cpsim/rng.hpp"

using namespace cpsim;

namespace {

ModelSpec qcp(int sites, double omega = 6.0) {
  ModelSpec s;
  s.kind = ModelSpec::Kind::quantum;
  s.sites = sites;
  s.omega = omega;
  return s;
}

dense::DenseState seed_state(const ModelSpec& spec) {
  const int dim = 1 << spec.sites;
  Matrix rho = Matrix::Zero(dim, dim);
  std::int64_t idx = 0;
  for (int k = 0; k < spec.sites; ++k)
    idx = 2 * idx + (k == spec.seed_site() ? 1 : 0);
  rho(idx, idx) = 1.0;
  return {dense::vectorize(rho, spec.sites), dense::DenseState::Kind::vectorized};
}

}  // namespace

TEST_CASE("vectorize round trip and index convention") {
  const int L = 3;
  const int dim = 1 << L;
  Matrix rho = Matrix::Random(dim, dim);
  rho = (rho + Matrix(rho.adjoint())).eval();
  Vector v = dense::vectorize(rho, L);
  CHECK((dense::devectorize(v, L) - rho).norm() < 1e-14);
  // Interleaved index: s_k = 2 ket_k + bra_k, site 0 slowest.
  CHECK(dense::doubled_index(0, 0, L) == 0);
  CHECK(dense::doubled_index((1 << L) - 1, (1 << L) - 1, L) == (1ll << 2 * L) - 1);
  // ket = |100>, bra = |001> -> s = (2, 0, 1) base 4.
  CHECK(dense::doubled_index(4, 1, L) == 2 * 16 + 0 * 4 + 1);
  CHECK(std::abs(v(dense::doubled_index(4, 1, L)) - rho(4, 1)) < 1e-14);
}

TEST_CASE("trace and expectation of a vectorized state") {
  ModelSpec spec = qcp(3);
  dense::DenseState rho = seed_state(spec);
  CHECK(std::abs(dense::vec_trace(rho.v, 3) - Cplx(1.0)) < 1e-14);
  CHECK(std::real(dense::vec_expectation(rho.v, ops::number(), 1, 3)) ==
        doctest::Approx(1.0));
  CHECK(std::real(dense::vec_expectation(rho.v, ops::number(), 0, 3)) ==
        doctest::Approx(0.0));
}

TEST_CASE("lindblad evolution preserves trace and hermiticity") {
  ModelSpec spec = qcp(3);
  dense::DenseState rho = seed_state(spec);
  dense::DenseState out = dense::lindblad_evolve(spec, rho, 1.3, 8);
  CHECK(std::abs(dense::vec_trace(out.v, 3) - Cplx(1.0)) < 1e-12);
  Matrix m = dense::devectorize(out.v, 3);
  CHECK((m - Matrix(m.adjoint())).norm() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("single site decays exponentially") {
  ModelSpec spec = qcp(2, 0.0);
  dense::DenseState rho = seed_state(spec);
  for (double t : {0.5, 1.0, 2.0}) {
    dense::DenseState out = dense::lindblad_evolve(spec, rho, t, 16);
    const double n1 =
        std::real(dense::vec_expectation(out.v, ops::number(), 1, 2));
    CHECK(n1 == doctest::Approx(std::exp(-t)).epsilon(1e-10));
  }
}

TEST_CASE("substep count does not change the exact propagator") {
  ModelSpec spec = qcp(2);
  dense::DenseState rho = seed_state(spec);
  dense::DenseState a = dense::lindblad_evolve(spec, rho, 0.8, 1);
  dense::DenseState b = dense::lindblad_evolve(spec, rho, 0.8, 7);
  CHECK((a.v - b.v).norm() < 1e-11);
}

TEST_CASE("trotterized propagation converges at second order") {
  // Moderate coupling so the largest step is inside the asymptotic regime
  // (omega * dt = 1.2 at the critical point saturates the error instead).
  ModelSpec spec = qcp(4, 2.0);
  dense::DenseState rho = seed_state(spec);
  const double t = 1.0;
  dense::DenseState exact = dense::lindblad_evolve(spec, rho, t, 64);

  std::vector<double> dts = {0.2, 0.1, 0.05};
  std::vector<double> errs;
  for (double dt : dts) {
    GateSchedule sched =
        build_trotter_schedule(spec, Picture::schrodinger_double, dt);
    const int n = static_cast<int>(std::llround(t / dt));
    dense::DenseState approx = dense::trotter_evolve(spec, rho, sched, n);
    errs.push_back((approx.v - exact.v).norm());
  }
  // Least-squares slope of log err vs log dt.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const double x = std::log(dts[i]), y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(dts.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("classical generator keeps diagonal states diagonal") {
  ModelSpec spec;
  spec.kind = ModelSpec::Kind::classical;
  spec.sites = 3;
  spec.Gamma = 6.75;
  dense::DenseState rho = seed_state(spec);
  dense::DenseState out = dense::lindblad_evolve(spec, rho, 1.0, 8);
  Matrix m = dense::devectorize(out.v, 3);
  Matrix off = m;
  off.diagonal().setZero();
  CHECK(off.norm() < 1e-12);
  // Diagonal stays a probability distribution.
  double total = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    CHECK(std::real(m(i, i)) > -1e-13);
    total += std::real(m(i, i));
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dense trajectory protocol reproduces the seeded draws") {
  ModelSpec spec = qcp(2);
  Vector psi0 = Vector::Zero(4);
  psi0(1) = 1.0;  // |01>, occupied second site
  dense::Trajectory a =
      dense::qjmc_trajectory(spec, psi0, 1.0, 0.01, 1234, 5, 10);
  dense::Trajectory b =
      dense::qjmc_trajectory(spec, psi0, 1.0, 0.01, 1234, 5, 10);
  REQUIRE(a.jumps.size() == b.jumps.size());
  for (std::size_t i = 0; i < a.jumps.size(); ++i) {
    CHECK(a.jumps[i].first == b.jumps[i].first);
    CHECK(a.jumps[i].second == b.jumps[i].second);
  }
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t i = 0; i < a.states.size(); ++i)
    CHECK((a.states[i] - b.states[i]).norm() == 0.0);
  // Different stream, different history (with overwhelming probability).
  dense::Trajectory c =
      dense::qjmc_trajectory(spec, psi0, 1.0, 0.01, 1234, 6, 10);
  bool identical = a.jumps == c.jumps;
  CHECK(!identical);
}

TEST_CASE("dense trajectory means approach the lindblad solution") {
  ModelSpec spec = qcp(2);
  Vector psi0 = Vector::Zero(4);
  psi0(1) = 1.0;
  const double t_max = 1.0, dt = 0.005;
  const int n_traj = 2000, every = 40;

  std::vector<double> mean_n;
  std::size_t n_times = 0;
  for (int i = 0; i < n_traj; ++i) {
    dense::Trajectory tr =
        dense::qjmc_trajectory(spec, psi0, t_max, dt, 99, i, every);
    if (mean_n.empty()) {
      n_times = tr.times.size();
      mean_n.assign(n_times, 0.0);
    }
    for (std::size_t j = 0; j < n_times; ++j)
      mean_n[j] += std::real(dense::pure_expectation(tr.states[j],
                                                     ops::number(), 1, 2)) /
                   n_traj;
  }
  dense::DenseState rho0 = {dense::vectorize(psi0 * psi0.adjoint(), 2),
                            dense::DenseState::Kind::vectorized};
  dense::DenseState at = dense::lindblad_evolve(spec, rho0, t_max, 16);
  const double exact =
      std::real(dense::vec_expectation(at.v, ops::number(), 1, 2));
  // Binomial-scale tolerance: ~3 sigma for 2000 samples.
  CHECK(mean_n.back() == doctest::Approx(exact).epsilon(0.06));
}

TEST_CASE("size guards") {
  ModelSpec spec = qcp(8);
  dense::DenseState rho{Vector::Zero(1), dense::DenseState::Kind::vectorized};
  CHECK_THROWS(dense::lindblad_evolve(spec, rho, 1.0, 1));
}
