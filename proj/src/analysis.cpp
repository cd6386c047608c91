#include "cpsim/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "cpsim/rng.hpp"

namespace cpsim {

namespace {

constexpr double kWindowEps = 1e-9;

double traj_value(const TrajectoryRecord& r, TrajObservable obs,
                  std::size_t i) {
  switch (obs) {
    case TrajObservable::survival:
      return 1.0 - r.survival_overlap[i];
    case TrajObservable::total_density:
      return r.total_density[i];
    case TrajObservable::seed_density:
      return r.seed_density[i];
  }
  throw std::logic_error("unknown observable");
}

FitResult fit_mean_of(const std::vector<TrajectoryRecord>& records,
                      const std::vector<std::size_t>& pick, TrajObservable obs,
                      double t_lo, double t_hi) {
  const auto& times = records.front().times;
  std::vector<double> mean(times.size(), 0.0);
  for (std::size_t idx : pick)
    for (std::size_t i = 0; i < times.size(); ++i)
      mean[i] += traj_value(records[idx], obs, i);
  for (double& v : mean) v /= static_cast<double>(pick.size());
  return powerlaw_fit(times, mean, t_lo, t_hi);
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

std::vector<std::size_t> resample_indices(std::size_t n, CounterRng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i)
    idx[i] = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
  return idx;
}

double stddev(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(xs.size()));
}

}  // namespace

FitResult powerlaw_fit(const std::vector<double>& times,
                       const std::vector<double>& values, double t_lo,
                       double t_hi) {
  if (times.size() != values.size())
    throw std::invalid_argument("powerlaw_fit: length mismatch");
  if (!(t_hi > t_lo)) throw std::invalid_argument("powerlaw_fit: bad window");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_lo - kWindowEps || times[i] > t_hi + kWindowEps) continue;
    if (!(times[i] > 0.0) || !(values[i] > 0.0))
      throw std::invalid_argument(
          "powerlaw_fit: nonpositive data inside the fit window");
    lx.push_back(std::log(times[i]));
    ly.push_back(std::log(values[i]));
  }
  if (lx.size() < 5)
    throw std::invalid_argument(
        "powerlaw_fit: fewer than 5 points in the fit window");
  const double n = static_cast<double>(lx.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("powerlaw_fit: degenerate x");
  FitResult fit;
  fit.exponent = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - fit.exponent * sx) / n;
  fit.amplitude = std::exp(intercept);
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (intercept + fit.exponent * lx[i]);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  return fit;
}

FitResult chi_difference_error(const FitResult& fit_hi,
                               const FitResult& fit_half) {
  if (fit_hi.t_lo != fit_half.t_lo || fit_hi.t_hi != fit_half.t_hi)
    throw std::invalid_argument("chi_difference_error: mismatched windows");
  FitResult out = fit_hi;
  out.error = std::abs(fit_hi.exponent - fit_half.exponent);
  out.method = FitResult::ErrorMethod::chi_difference;
  return out;
}

std::vector<double> ensemble_mean_series(
    const std::vector<TrajectoryRecord>& records, TrajObservable obs) {
  if (records.empty()) throw std::invalid_argument("empty ensemble");
  std::vector<double> mean(records.front().times.size(), 0.0);
  for (const TrajectoryRecord& r : records)
    for (std::size_t i = 0; i < mean.size(); ++i)
      mean[i] += traj_value(r, obs, i);
  for (double& v : mean) v /= static_cast<double>(records.size());
  return mean;
}

FitResult bootstrap_exponent(const std::vector<TrajectoryRecord>& records,
                             TrajObservable obs, double t_lo, double t_hi,
                             int n_resample, std::uint64_t seed) {
  if (records.empty()) throw std::invalid_argument("empty ensemble");
  FitResult fit = fit_mean_of(records, all_indices(records.size()), obs, t_lo,
                              t_hi);
  std::vector<double> exps;
  exps.reserve(n_resample);
  for (int r = 0; r < n_resample; ++r) {
    CounterRng rng(seed, static_cast<std::uint64_t>(r));
    exps.push_back(
        fit_mean_of(records, resample_indices(records.size(), rng), obs, t_lo,
                    t_hi)
            .exponent);
  }
  fit.error = 2.0 * stddev(exps);
  fit.method = FitResult::ErrorMethod::bootstrap_2sigma;
  return fit;
}

FitResult propagate_z(const FitResult& theta_fit,
                      const FitResult& seed_slope_fit) {
  const double gap = theta_fit.exponent - seed_slope_fit.exponent;
  if (gap <= 0.0)
    throw std::domain_error("propagate_z: Theta - seed slope must be positive");
  FitResult out;
  out.exponent = 1.0 / gap;
  out.t_lo = theta_fit.t_lo;
  out.t_hi = theta_fit.t_hi;
  out.error = out.exponent * out.exponent *
              std::sqrt(theta_fit.error * theta_fit.error +
                        seed_slope_fit.error * seed_slope_fit.error);
  out.method = theta_fit.method;
  return out;
}

FitResult bootstrap_z(const std::vector<TrajectoryRecord>& records,
                      double t_lo, double t_hi, int n_resample,
                      std::uint64_t seed) {
  if (records.empty()) throw std::invalid_argument("empty ensemble");
  const auto all = all_indices(records.size());
  const double theta =
      fit_mean_of(records, all, TrajObservable::total_density, t_lo, t_hi)
          .exponent;
  const double slope =
      fit_mean_of(records, all, TrajObservable::seed_density, t_lo, t_hi)
          .exponent;
  if (theta - slope <= 0.0)
    throw std::domain_error("bootstrap_z: Theta - seed slope must be positive");
  FitResult out;
  out.exponent = 1.0 / (theta - slope);
  out.t_lo = t_lo;
  out.t_hi = t_hi;
  std::vector<double> zs;
  zs.reserve(n_resample);
  for (int r = 0; r < n_resample; ++r) {
    CounterRng rng(seed, static_cast<std::uint64_t>(r));
    const auto pick = resample_indices(records.size(), rng);
    const double th =
        fit_mean_of(records, pick, TrajObservable::total_density, t_lo, t_hi)
            .exponent;
    const double sl =
        fit_mean_of(records, pick, TrajObservable::seed_density, t_lo, t_hi)
            .exponent;
    if (th - sl > 0.0) zs.push_back(1.0 / (th - sl));
  }
  if (zs.empty()) throw std::domain_error("bootstrap_z: no valid resamples");
  out.error = 2.0 * stddev(zs);
  out.method = FitResult::ErrorMethod::bootstrap_2sigma;
  return out;
}

SignificanceReport compare_to_reference(const FitResult& fit,
                                        double reference_value,
                                        const std::string& reference_label) {
  if (fit.method != FitResult::ErrorMethod::bootstrap_2sigma)
    throw std::invalid_argument(
        "compare_to_reference requires a bootstrap error");
  SignificanceReport rep;
  rep.reference_value = reference_value;
  rep.reference_label = reference_label;
  const double se = fit.error / 2.0;
  rep.sigma_distance =
      se > 0.0 ? std::abs(fit.exponent - reference_value) / se
               : (fit.exponent == reference_value
                      ? 0.0
                      : std::numeric_limits<double>::infinity());
  return rep;
}

}  // namespace cpsim
