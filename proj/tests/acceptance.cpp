// Acceptance gate: ten end-to-end checks of the contact-process simulator,
// one pass/fail line each. Slow ensemble checks (5-7) run last so quick
// regressions surface first. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cpsim/analysis.hpp"
#include "cpsim/dense.hpp"
#include "cpsim/io.hpp"
#include "cpsim/qjmc.hpp"
#include "cpsim/tebd.hpp"

using namespace cpsim;
namespace fs = std::filesystem;

namespace {

int g_failed = 0;
std::vector<int> g_only;  // optional criterion filter from argv

bool selected(int id) {
  if (g_only.empty()) return true;
  for (int v : g_only)
    if (v == id) return true;
  return false;
}

void report(int id, const char* what, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", id, what,
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failed;
}

template <typename Fn>
void criterion(int id, const char* what, Fn&& fn) {
  if (!selected(id)) return;
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  std::string detail;
  try {
    ok = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%.1f s", detail.empty() ? "" : "; ", secs);
  report(id, what, ok, detail + buf);
}

ModelSpec qcp(int sites, double omega = 6.0) {
  ModelSpec s;
  s.kind = ModelSpec::Kind::quantum;
  s.sites = sites;
  s.omega = omega;
  return s;
}

ModelSpec ccp(int sites, double Gamma = 6.75) {
  ModelSpec s;
  s.kind = ModelSpec::Kind::classical;
  s.sites = sites;
  s.Gamma = Gamma;
  return s;
}

dense::DenseState dense_seed(const ModelSpec& spec) {
  const std::int64_t dim = std::int64_t(1) << spec.sites;
  Matrix rho = Matrix::Zero(dim, dim);
  std::int64_t idx = 0;
  for (int k = 0; k < spec.sites; ++k)
    idx = 2 * idx + (k == spec.seed_site() ? 1 : 0);
  rho(idx, idx) = 1.0;
  return {dense::vectorize(rho, spec.sites),
          dense::DenseState::Kind::vectorized};
}

std::size_t index_of_time(const std::vector<double>& times, double t) {
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) < 1e-9) return i;
  throw std::runtime_error("measurement grid misses t=" + std::to_string(t));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0,
                double d = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// --- criterion 7 execution parameters ------------------------------------
// The check pins L = 51, 200 band trajectories at chi in {64, 128} and a
// 1000-trajectory survival-exponent run; step size and cutoff are chosen for
// single-core runtime. The cutoff matters mostly for trajectories that have
// effectively died: their residual occupation sits at a relative
// singular-value scale of ~1e-4, so tighter cutoffs make every dead
// trajectory as expensive as a live one for no measurable change in the
// ensemble curves (chi = 32 ensembles at 1e-3 vs 3e-4 agree to < 0.6 SE at
// every grid point and give the same fitted exponents). Both chi runs share a
// master seed: the jump protocol consumes a fixed number of random draws per
// step, so paired trajectories follow the same random sequence and the band
// check isolates the truncation effect. The chi = 64 run does 1000
// trajectories; its first 200 records form the band ensemble and the full
// set yields the exponent.
constexpr double kC7Dt = 0.04;
constexpr double kC7Cutoff = 1e-3;
constexpr int kC7MeasureEvery = 5;  // gamma*t grid of 0.2
constexpr std::uint64_t kC7Seed = 20260826;

bool c1(std::string& detail) {
  ModelSpec spec = qcp(4);
  const double dt = 0.01;
  DoubleSpaceOptions o;
  o.spec = spec;
  o.chi_max = 256;  // exact for L = 4 in the doubled space
  o.dt = dt;
  o.t_max = 2.0;
  o.measure_every = 10;
  o.record_profile = true;
  ObservableSeries series = run_schrodinger(o);

  GateSchedule sched =
      build_trotter_schedule(spec, Picture::schrodinger_double, dt);
  dense::DenseState state = dense_seed(spec);
  double max_diff = 0.0;
  for (std::size_t i = 1; i < series.times.size(); ++i) {
    const int steps = static_cast<int>(
        std::llround((series.times[i] - series.times[i - 1]) / dt));
    state = dense::trotter_evolve(spec, state, sched, steps);
    Vector v = state.v / dense::vec_trace(state.v, spec.sites);
    for (int k = 0; k < spec.sites; ++k) {
      const double nk =
          std::real(dense::vec_expectation(v, ops::number(), k, spec.sites));
      max_diff =
          std::max(max_diff, std::abs(series.density_profile[i][k] - nk));
    }
  }
  detail = fmt("max |dn| = %.2e", max_diff);
  return max_diff <= 1e-10;
}

bool c2_order(std::string& detail) {
  // Moderate coupling keeps the largest step inside the asymptotic regime.
  ModelSpec spec = qcp(4, 2.0);
  dense::DenseState rho = dense_seed(spec);
  const double t = 1.0;
  dense::DenseState exact = dense::lindblad_evolve(spec, rho, t, 64);
  const std::vector<double> dts = {0.2, 0.1, 0.05};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double dt : dts) {
    GateSchedule sched =
        build_trotter_schedule(spec, Picture::schrodinger_double, dt);
    dense::DenseState approx = dense::trotter_evolve(
        spec, rho, sched, static_cast<int>(std::llround(t / dt)));
    const double x = std::log(dt), y = std::log((approx.v - exact.v).norm());
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = 3.0;
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  detail = fmt("fitted order %.3f", slope);
  return std::abs(slope - 2.0) <= 0.2;
}

bool c3_decay(std::string& detail) {
  const std::vector<double> probes = {0.5, 1.0, 2.0};
  double worst_det = 0.0;

  DoubleSpaceOptions o;
  o.spec = qcp(5, 0.0);
  o.chi_max = 64;
  o.dt = 0.05;
  o.t_max = 2.0;
  o.measure_every = 2;
  ObservableSeries fwd = run_schrodinger(o);
  ObservableSeries dual = run_heisenberg(
      o, vectorized_site_operator(o.spec.sites, ops::number(),
                                  o.spec.seed_site()));
  for (double t : probes) {
    const std::size_t i = index_of_time(fwd.times, t);
    worst_det = std::max(worst_det, std::abs(fwd.seed_density[i] - std::exp(-t)));
    worst_det = std::max(worst_det, std::abs(dual.value[i] - std::exp(-t)));
  }

  TrajectoryOptions to;
  to.spec = qcp(2, 0.0);
  to.chi_max = 4;
  to.dt = 0.005;
  to.t_max = 2.0;
  to.measure_every = 25;
  to.master_seed = 7;
  Ensemble ens = run_ensemble(to, 10000);
  double worst_sigma = 0.0;
  for (double t : probes) {
    const std::size_t i = index_of_time(ens.stats.times, t);
    worst_sigma = std::max(
        worst_sigma, std::abs(ens.stats.seed_density_mean[i] - std::exp(-t)) /
                         ens.stats.seed_density_se[i]);
  }
  detail = fmt("deterministic max |dn| = %.2e, jump-MC worst %.2f SE",
               worst_det, worst_sigma);
  return worst_det <= 1e-4 && worst_sigma <= 3.0;
}

bool c4_absorbing(std::string& detail) {
  double worst = 0.0;
  for (const ModelSpec& spec : {qcp(4), ccp(4)}) {
    Matrix gen = dense::lindblad_generator(spec);
    const std::int64_t dim = std::int64_t(1) << spec.sites;
    Matrix vac = Matrix::Zero(dim, dim);
    vac(0, 0) = 1.0;  // all-empty product state
    worst = std::max(worst,
                     (gen * dense::vectorize(vac, spec.sites)).cwiseAbs()
                         .maxCoeff());
  }

  // A trajectory started in the vacuum must never jump or move.
  ModelSpec spec = qcp(4);
  Vector psi0 = Vector::Zero(std::int64_t(1) << spec.sites);
  psi0(0) = 1.0;
  dense::Trajectory tr =
      dense::qjmc_trajectory(spec, psi0, 2.0, 0.01, 11, 0, 20);
  bool frozen = tr.jumps.empty();
  for (const Vector& v : tr.states)
    frozen = frozen && std::abs(std::abs(psi0.dot(v)) - 1.0) < 1e-12;

  detail = fmt("max |L rho_a| = %.2e, vacuum trajectory ", worst) +
           (frozen ? "frozen" : "moved");
  return worst <= 1e-14 && frozen;
}

bool c5_ccp(std::string& detail) {
  // 51 sites leaves the fit window contaminated by boundary reflections (the
  // occupied cluster reaches the open ends before gamma*t = 10); 101 sites is
  // the smallest tested size whose [5, 10] window is boundary-clean.
  DoubleSpaceOptions o;
  o.spec = ccp(101);
  o.chi_max = 64;
  o.dt = 0.1;
  o.t_max = 10.0;
  ObservableSeries s = run_schrodinger(o);
  const double theta = powerlaw_fit(s.times, s.total_density, 5, 10).exponent;
  const double delta = -powerlaw_fit(s.times, s.survival, 5, 10).exponent;
  detail = fmt("Theta = %.4f (target 0.31 +- 10%%), delta = %.4f "
               "(target 0.16 +- 10%%)", theta, delta);
  return std::abs(theta - 0.31) <= 0.031 && std::abs(delta - 0.16) <= 0.016;
}

bool c6_unravelling(std::string& detail) {
  ModelSpec spec = qcp(4);
  TrajectoryOptions to;
  to.spec = spec;
  to.chi_max = 16;
  to.dt = 0.005;
  to.t_max = 2.0;
  to.measure_every = 20;
  to.master_seed = 13;
  Ensemble ens = run_ensemble(to, 20000);

  dense::DenseState state = dense_seed(spec);
  double prev_t = 0.0, worst = 0.0;
  for (double t : {0.5, 1.0, 2.0}) {
    state = dense::lindblad_evolve(spec, state, t - prev_t, 32);
    prev_t = t;
    Vector v = state.v / dense::vec_trace(state.v, spec.sites);
    double na = 0.0;
    for (int k = 0; k < spec.sites; ++k)
      na += std::real(dense::vec_expectation(v, ops::number(), k, spec.sites));
    const double ns = std::real(
        dense::vec_expectation(v, ops::number(), spec.seed_site(), spec.sites));
    const std::size_t i = index_of_time(ens.stats.times, t);
    worst = std::max(worst, std::abs(ens.stats.total_density_mean[i] - na) /
                                ens.stats.total_density_se[i]);
    worst = std::max(worst, std::abs(ens.stats.seed_density_mean[i] - ns) /
                                ens.stats.seed_density_se[i]);
  }
  detail = fmt("worst deviation %.2f SE over N_a and n_seed", worst);
  return worst <= 3.0;
}

bool c7_trajectories(std::string& detail) {
  TrajectoryOptions to;
  to.spec = qcp(51);
  to.dt = kC7Dt;
  to.t_max = 10.0;
  to.measure_every = kC7MeasureEvery;
  to.svd_cutoff = kC7Cutoff;
  to.master_seed = kC7Seed;

  to.chi_max = 64;
  Ensemble big = run_ensemble(to, 1000);
  to.chi_max = 128;
  Ensemble hi = run_ensemble(to, 200);

  const EnsembleStats lo = compute_stats(std::vector<TrajectoryRecord>(
      big.records.begin(), big.records.begin() + 200));

  bool in_band = true;
  for (std::size_t i = 0; i < hi.stats.times.size(); ++i) {
    in_band = in_band && std::abs(lo.total_density_mean[i] -
                                  hi.stats.total_density_mean[i]) <=
                             2.0 * hi.stats.total_density_se[i] + 1e-12;
    in_band = in_band &&
              std::abs(lo.survival_mean[i] - hi.stats.survival_mean[i]) <=
                  2.0 * hi.stats.survival_se[i] + 1e-12;
  }
  const double res_na =
      powerlaw_fit(hi.stats.times, hi.stats.total_density_mean, 5, 10)
          .residual_rms;
  const double res_ps =
      powerlaw_fit(hi.stats.times, hi.stats.survival_mean, 5, 10).residual_rms;

  const double delta =
      -powerlaw_fit(big.stats.times, big.stats.survival_mean, 5, 10).exponent;

  detail = (in_band ? "band ok, " : "band exceeded, ") +
           fmt("fit residual RMS %.3f / %.3f, delta(1000 traj) = %.3f", res_na,
               res_ps, delta);
  return in_band && res_na < 0.05 && res_ps < 0.05 && delta >= 0.18 &&
         delta <= 0.34;
}

bool c8_barrier(std::string& detail) {
  DoubleSpaceOptions o;
  o.spec = qcp(21);
  o.chi_max = 64;
  o.dt = 0.05;
  o.t_max = 3.0;
  ObservableSeries q = run_schrodinger(o);
  ObservableSeries h =
      run_heisenberg(o, vectorized_absorbing_state(o.spec.sites), true);
  o.spec = ccp(21);
  ObservableSeries c = run_schrodinger(o);

  SeriesPeak pq = peak_of(q.times, q.op_entropy);
  SeriesPeak pc = peak_of(c.times, c.op_entropy);
  SeriesPeak ph = peak_of(h.times, h.op_entropy);
  detail = fmt("quantum peak %.2f nats at gamma*t = %.2f; classical %.2f; "
               "heisenberg %.2f", pq.value, pq.time, pc.value, ph.value);
  return pq.time >= 0.3 && pq.time <= 0.8 && pc.value < pq.value &&
         ph.value < pq.value;
}

bool c9_duality(std::string& detail) {
  ModelSpec spec = qcp(4);
  DoubleSpaceOptions o;
  o.spec = spec;
  o.chi_max = 256;
  o.dt = 0.02;
  o.t_max = 1.0;
  ObservableSeries fwd = run_schrodinger(o);
  ObservableSeries dual_s =
      run_heisenberg(o, vectorized_absorbing_state(spec.sites), true);
  DoubleSpaceOptions po = o;
  po.record_profile = true;
  ObservableSeries prof = run_schrodinger(po);
  double worst = 0.0;
  for (std::size_t i = 0; i < fwd.times.size(); ++i)
    worst = std::max(worst, std::abs(fwd.survival[i] - dual_s.survival[i]));
  for (int k = 0; k < spec.sites; ++k) {
    ObservableSeries dual_n =
        run_heisenberg(o, vectorized_site_operator(spec.sites, ops::number(), k));
    for (std::size_t i = 0; i < prof.times.size(); ++i)
      worst = std::max(worst,
                       std::abs(prof.density_profile[i][k] - dual_n.value[i]));
  }
  detail = fmt("max picture mismatch %.2e", worst);
  return worst <= 1e-8;
}

bool c10_determinism(std::string& detail) {
  TrajectoryOptions to;
  to.spec = qcp(9);
  to.chi_max = 16;
  to.dt = 0.01;
  to.t_max = 1.0;
  to.measure_every = 10;
  to.master_seed = 42;
  Ensemble a = run_ensemble(to, 20);
  Ensemble b = run_ensemble(to, 20);

  const fs::path base = fs::temp_directory_path() / "cpsim_acceptance_c10";
  fs::remove_all(base);
  const fs::path da = base / "a", db = base / "b";
  io::write_ensemble_store(da, a.opts, a.records);
  io::write_ensemble_store(db, b.opts, b.records);
  std::size_t n_files = 0;
  bool identical = true;
  for (const auto& entry : fs::directory_iterator(da)) {
    ++n_files;
    identical = identical &&
                read_file(entry.path()) == read_file(db / entry.path().filename());
  }
  fs::remove_all(base);
  detail = fmt("%g store files byte-compared", double(n_files));
  return identical && n_files > 0;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) g_only.push_back(std::atoi(argv[i]));
  criterion(1, "MPS evolution matches dense propagation of identical gates",
            c1);
  criterion(2, "dense Trotter error is second order in the step size",
            c2_order);
  criterion(3, "all three engines reproduce the analytic pure-decay law",
            c3_decay);
  criterion(4, "the empty lattice is exactly stationary in every engine",
            c4_absorbing);
  criterion(9, "Heisenberg and Schrodinger pictures agree to 1e-8", c9_duality);
  criterion(10, "fixed master seed reproduces byte-identical stores",
            c10_determinism);
  criterion(8, "operator-entanglement barrier phenomenology", c8_barrier);
  criterion(6, "jump Monte Carlo mean matches dense Lindblad evolution",
            c6_unravelling);
  criterion(5, "classical-model critical exponents near 1d DP values", c5_ccp);
  criterion(7, "critical quantum ensembles: chi band, fit quality, delta",
            c7_trajectories);

  std::printf("acceptance: %d criteria failed\n", g_failed);
  return g_failed;
}
