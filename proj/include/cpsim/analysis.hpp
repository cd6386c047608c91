#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpsim/qjmc.hpp"

namespace cpsim {

struct FitResult {
  double exponent = 0.0;
  double amplitude = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  double residual_rms = 0.0;  // in log space
  double error = 0.0;
  enum class ErrorMethod { none, chi_difference, bootstrap_2sigma } method =
      ErrorMethod::none;
};

/// Unweighted least-squares line in (log t, log y) over [t_lo, t_hi].
FitResult powerlaw_fit(const std::vector<double>& times,
                       const std::vector<double>& values, double t_lo,
                       double t_hi);

/// Best-estimate fit at the largest chi with |exponent difference| from the
/// half-chi fit as its error.
FitResult chi_difference_error(const FitResult& fit_hi,
                               const FitResult& fit_half);

enum class TrajObservable { survival, total_density, seed_density };

/// Ensemble-mean series of one observable from per-trajectory records.
std::vector<double> ensemble_mean_series(
    const std::vector<TrajectoryRecord>& records, TrajObservable obs);

/// Point estimate from the full ensemble; error = 2 x stddev of exponents
/// refit to n_resample trajectory resamples (with replacement).
FitResult bootstrap_exponent(const std::vector<TrajectoryRecord>& records,
                             TrajObservable obs, double t_lo, double t_hi,
                             int n_resample = 1000,
                             std::uint64_t seed = 0x626f6f74ULL);

/// z = 1 / (Theta - s) with first-order independent error propagation.
FitResult propagate_z(const FitResult& theta_fit,
                      const FitResult& seed_slope_fit);

/// Joint bootstrap of z: each resample refits Theta and the seed slope on
/// the same resampled trajectories, capturing their correlation.
FitResult bootstrap_z(const std::vector<TrajectoryRecord>& records,
                      double t_lo, double t_hi, int n_resample = 1000,
                      std::uint64_t seed = 0x626f6f74ULL);

struct SignificanceReport {
  double sigma_distance = 0.0;  // |fit - reference| in standard errors
  double reference_value = 0.0;
  std::string reference_label;
};

SignificanceReport compare_to_reference(const FitResult& fit,
                                        double reference_value,
                                        const std::string& reference_label);

}  // namespace cpsim
