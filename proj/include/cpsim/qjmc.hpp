#pragma once

#include <cstdint>
#include <vector>

#include "cpsim/model.hpp"
#include "cpsim/mps.hpp"

namespace cpsim {

struct TrajectoryOptions {
  ModelSpec spec;
  int chi_max = 128;
  double dt = 0.01;
  double t_max = 10.0;
  int measure_every = 10;
  double svd_cutoff = 1e-12;
  std::uint64_t master_seed = 0;
};

struct TrajectoryRecord {
  std::uint64_t index = 0;  // RNG stream = (master_seed, index)
  int chi_max = 0;
  std::vector<double> times;
  std::vector<double> survival_overlap;  // |<vac|psi>|^2
  std::vector<double> total_density;
  std::vector<double> seed_density;
  std::vector<double> s_traj;     // max-over-bonds entanglement
  std::vector<double> discarded;  // cumulative discarded weight
  std::vector<std::pair<double, int>> jumps;
  double absorbed_at = -1.0;  // time of entry into the vacuum, or -1
};

struct EnsembleStats {
  int n_traj = 0;
  std::vector<double> times;
  std::vector<double> survival_mean, survival_se;  // P_sur = 1 - mean overlap
  std::vector<double> total_density_mean, total_density_se;
  std::vector<double> seed_density_mean, seed_density_se;
  double s_bar = 0.0;  // max S_traj over all times and trajectories
};

struct Ensemble {
  TrajectoryOptions opts;
  std::vector<TrajectoryRecord> records;
  EnsembleStats stats;
};

TrajectoryRecord run_trajectory(const TrajectoryOptions& opts,
                                std::uint64_t index);

EnsembleStats compute_stats(const std::vector<TrajectoryRecord>& records);

Ensemble run_ensemble(const TrajectoryOptions& opts, int n_traj);

struct Histogram {
  double snapshot_time = 0.0;
  std::vector<double> bin_left, bin_right, height;
  double mean_s = 0.0;
  double s_bar = 0.0;  // of the binned ensemble
};

/// 50 equal-width bins spanning the reference ensemble's entanglement values
/// at its final recorded time; heights normalized by trajectory count.
Histogram entanglement_histogram(const Ensemble& ens, double t_snapshot,
                                 const Ensemble& reference);

}  // namespace cpsim
