#include "cpsim/qjmc.hpp"

#include <cmath>

#include "cpsim/jump_protocol.hpp"
#include "cpsim/tebd.hpp"

namespace cpsim {

namespace {

constexpr double kVacuumThreshold = 1e-12;

bool fixes_vacuum(const TwoSiteGate& g) {
  for (Eigen::Index i = 0; i < g.matrix.rows(); ++i)
    if (g.matrix(i, 0) != Cplx(i == 0 ? 1.0 : 0.0, 0.0)) return false;
  return true;
}

}  // namespace

TrajectoryRecord run_trajectory(const TrajectoryOptions& opts,
                                std::uint64_t index) {
  opts.spec.validate();
  if (opts.spec.kind != ModelSpec::Kind::quantum)
    throw std::invalid_argument("trajectories support the quantum process only");
  const int sites = opts.spec.sites;
  const GateSchedule sched = build_trotter_schedule(
      opts.spec, Picture::pure_state_nonhermitian, opts.dt);
  const Matrix n_op = ops::number();
  const Matrix lower = ops::sigma_minus();
  const Mps vacuum = pure_vacuum_state(sites);
  CounterRng rng(opts.master_seed, index);

  Mps state = pure_seed_state(sites);
  // Active window: sites outside [lo, hi] are exactly the local vacuum and
  // are never touched by gates, so the light cone is tracked exactly.
  int lo = opts.spec.seed_site(), hi = lo;

  TrajectoryRecord rec;
  rec.index = index;
  rec.chi_max = opts.chi_max;
  double cumulative_discard = 0.0;
  bool frozen = false;

  struct Snapshot {
    double survival_overlap, total, seed, entropy;
  };
  Snapshot frozen_values{};

  std::vector<double> profile(sites, 0.0);

  auto live_snapshot = [&]() {
    Snapshot s{};
    s.survival_overlap = std::norm(overlap(vacuum, state));
    std::vector<Cplx> ex = state.site_expectations(n_op, lo, hi);
    for (const Cplx& v : ex) s.total += v.real();
    const int seed = opts.spec.seed_site();
    s.seed = seed >= lo && seed <= hi ? ex[seed - lo].real() : 0.0;
    state.refresh_spectra();
    s.entropy = state.max_entropy_over_bonds();
    return s;
  };

  auto measure = [&](double t) {
    const Snapshot s = frozen ? frozen_values : live_snapshot();
    rec.times.push_back(t);
    rec.survival_overlap.push_back(s.survival_overlap);
    rec.total_density.push_back(s.total);
    rec.seed_density.push_back(s.seed);
    rec.s_traj.push_back(s.entropy);
    rec.discarded.push_back(cumulative_discard);
  };

  measure(0.0);
  const int n_steps = static_cast<int>(std::llround(opts.t_max / opts.dt));
  for (int step = 1; step <= n_steps; ++step) {
    if (!frozen) {
      // Jump probabilities from pre-step expectations.
      std::fill(profile.begin(), profile.end(), 0.0);
      std::vector<Cplx> ex = state.site_expectations(n_op, lo, hi);
      double p_tot = 0.0;
      for (int k = lo; k <= hi; ++k) {
        profile[k] = opts.dt * opts.spec.gamma * std::real(ex[k - lo]);
        p_tot += profile[k];
      }
      if (p_tot < sites * kVacuumThreshold * opts.dt * opts.spec.gamma) {
        bool vac = true;
        for (int k = lo; k <= hi; ++k)
          if (std::real(ex[k - lo]) >= kVacuumThreshold) vac = false;
        if (vac) {
          frozen = true;
          rec.absorbed_at = (step - 1) * opts.dt;
          frozen_values = live_snapshot();
        }
      }
      if (!frozen) {
        const JumpDraw draw = draw_jump(profile, rng);
        if (draw.jumped) {
          state.apply_local(lower, draw.site, false);
          const double nrm = state.norm();
          if (nrm < 1e-12)
            throw std::runtime_error(
                "norm collapse after jump: protocol applied sigma_minus to an "
                "empty site");
          state.normalize();
          rec.jumps.emplace_back(step * opts.dt, draw.site);
        } else {
          // Skip decided per gate at application time: earlier gates in the
          // sweep may populate a previously empty site, so a fixed pre-step
          // window would truncate the sweep and diverge from the dense
          // reference. The triviality check is exact (pinned vacuum column).
          const std::size_t ng = sched.gates.size();
          for (std::size_t i = 0; i < ng; ++i) {
            const TwoSiteGate& g = sched.gates[i];
            if (state.is_trivial_basis_site(g.site) &&
                state.is_trivial_basis_site(g.site + 1) && fixes_vacuum(g))
              continue;
            const SweepDir dir =
                i + 1 < ng && sched.gates[i + 1].site < g.site
                    ? SweepDir::Left
                    : SweepDir::Right;
            TruncationReport rep =
                state.apply_gate(g, opts.chi_max, opts.svd_cutoff, dir);
            cumulative_discard += rep.summed_discarded_weight();
            lo = std::min(lo, g.site);
            hi = std::max(hi, g.site + 1);
          }
          state.normalize();
        }
        // Shrink the window where truncation collapsed edges to the vacuum.
        while (lo < hi && state.is_trivial_basis_site(lo)) ++lo;
        while (hi > lo && state.is_trivial_basis_site(hi)) --hi;
      }
    }
    if (step % opts.measure_every == 0) measure(step * opts.dt);
  }
  return rec;
}

EnsembleStats compute_stats(const std::vector<TrajectoryRecord>& records) {
  EnsembleStats st;
  st.n_traj = static_cast<int>(records.size());
  if (records.empty()) return st;
  st.times = records.front().times;
  const std::size_t nt = st.times.size();

  auto aggregate = [&](auto getter, std::vector<double>& mean,
                       std::vector<double>& se) {
    mean.assign(nt, 0.0);
    se.assign(nt, std::nan(""));
    for (std::size_t i = 0; i < nt; ++i) {
      double sum = 0.0, sumsq = 0.0;
      for (const TrajectoryRecord& r : records) {
        const double v = getter(r, i);
        sum += v;
        sumsq += v * v;
      }
      const double n = static_cast<double>(records.size());
      mean[i] = sum / n;
      if (records.size() > 1) {
        const double var =
            std::max(0.0, (sumsq - n * mean[i] * mean[i]) / (n - 1.0));
        se[i] = std::sqrt(var / n);
      }
    }
  };

  aggregate([](const TrajectoryRecord& r,
               std::size_t i) { return 1.0 - r.survival_overlap[i]; },
            st.survival_mean, st.survival_se);
  aggregate([](const TrajectoryRecord& r,
               std::size_t i) { return r.total_density[i]; },
            st.total_density_mean, st.total_density_se);
  aggregate([](const TrajectoryRecord& r,
               std::size_t i) { return r.seed_density[i]; },
            st.seed_density_mean, st.seed_density_se);

  for (const TrajectoryRecord& r : records)
    for (double s : r.s_traj) st.s_bar = std::max(st.s_bar, s);
  return st;
}

Ensemble run_ensemble(const TrajectoryOptions& opts, int n_traj) {
  if (n_traj < 1) throw std::invalid_argument("n_traj must be >= 1");
  Ensemble ens;
  ens.opts = opts;
  ens.records.reserve(n_traj);
  for (int i = 0; i < n_traj; ++i)
    ens.records.push_back(run_trajectory(opts, static_cast<std::uint64_t>(i)));
  ens.stats = compute_stats(ens.records);
  return ens;
}

namespace {

std::size_t snapshot_index(const Ensemble& ens, double t) {
  const auto& times = ens.records.front().times;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) < 1e-9) return i;
  throw std::invalid_argument("snapshot time not recorded in ensemble");
}

}  // namespace

Histogram entanglement_histogram(const Ensemble& ens, double t_snapshot,
                                 const Ensemble& reference) {
  if (ens.records.empty() || reference.records.empty())
    throw std::invalid_argument("empty ensemble");
  const std::size_t idx = snapshot_index(ens, t_snapshot);
  const std::size_t ref_idx = reference.records.front().times.size() - 1;

  double ref_min = std::numeric_limits<double>::infinity();
  double ref_max = -ref_min;
  for (const TrajectoryRecord& r : reference.records) {
    ref_min = std::min(ref_min, r.s_traj[ref_idx]);
    ref_max = std::max(ref_max, r.s_traj[ref_idx]);
  }
  if (!(ref_max > ref_min)) ref_max = ref_min + 1.0;

  constexpr int kBins = 50;
  Histogram h;
  h.snapshot_time = t_snapshot;
  const double width = (ref_max - ref_min) / kBins;
  for (int b = 0; b < kBins; ++b) {
    h.bin_left.push_back(ref_min + b * width);
    h.bin_right.push_back(ref_min + (b + 1) * width);
  }
  h.height.assign(kBins, 0.0);
  double sum_s = 0.0;
  for (const TrajectoryRecord& r : ens.records) {
    const double s = r.s_traj[idx];
    sum_s += s;
    int b = static_cast<int>((s - ref_min) / width);
    b = std::clamp(b, 0, kBins - 1);
    h.height[b] += 1.0;
  }
  for (double& v : h.height) v /= static_cast<double>(ens.records.size());
  h.mean_s = sum_s / static_cast<double>(ens.records.size());
  h.s_bar = ens.stats.s_bar;
  return h;
}

}  // namespace cpsim
