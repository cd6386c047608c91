#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cpsim/analysis.hpp"

using namespace cpsim;

namespace {

std::vector<double> grid(double t0, double t1, double dt) {
  std::vector<double> t;
  for (double x = t0; x <= t1 + 1e-9; x += dt) t.push_back(x);
  return t;
}

std::vector<double> powerlaw(const std::vector<double>& t, double a, double p) {
  std::vector<double> y;
  y.reserve(t.size());
  for (double x : t) y.push_back(a * std::pow(x, p));
  return y;
}

// A trajectory whose three observables are exact power laws.
TrajectoryRecord powerlaw_record(const std::vector<double>& t, double p_sur,
                                 double p_density, double p_seed) {
  TrajectoryRecord r;
  r.times = t;
  for (double x : t) {
    r.survival_overlap.push_back(1.0 - std::pow(x, p_sur));
    r.total_density.push_back(std::pow(x, p_density));
    r.seed_density.push_back(std::pow(x, p_seed));
  }
  return r;
}

}  // namespace

TEST_CASE("powerlaw_fit recovers an exact power law") {
  const auto t = grid(1.0, 10.0, 0.1);
  const auto fit = powerlaw_fit(t, powerlaw(t, 2.5, -0.16), 2.0, 8.0);
  CHECK(fit.exponent == doctest::Approx(-0.16).epsilon(1e-12));
  CHECK(fit.amplitude == doctest::Approx(2.5).epsilon(1e-10));
  CHECK(fit.residual_rms < 1e-12);
  CHECK(fit.t_lo == 2.0);
  CHECK(fit.t_hi == 8.0);
  CHECK(fit.error == 0.0);
  CHECK(fit.method == FitResult::ErrorMethod::none);
}

TEST_CASE("powerlaw_fit on constant data gives exponent zero") {
  const auto t = grid(1.0, 10.0, 0.5);
  const std::vector<double> y(t.size(), 3.7);
  const auto fit = powerlaw_fit(t, y, 1.0, 10.0);
  CHECK(fit.exponent == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(fit.amplitude == doctest::Approx(3.7).epsilon(1e-12));
}

TEST_CASE("powerlaw_fit uses only points inside the window") {
  // Power law inside [2, 8]; garbage outside must not affect the fit.
  auto t = grid(1.0, 10.0, 0.25);
  auto y = powerlaw(t, 1.0, 0.31);
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] < 2.0 - 1e-9 || t[i] > 8.0 + 1e-9) y[i] = 1e6;
  const auto fit = powerlaw_fit(t, y, 2.0, 8.0);
  CHECK(fit.exponent == doctest::Approx(0.31).epsilon(1e-12));
}

TEST_CASE("powerlaw_fit error conditions") {
  const auto t = grid(1.0, 10.0, 0.5);
  auto y = powerlaw(t, 1.0, -0.2);

  SUBCASE("length mismatch") {
    auto bad = y;
    bad.pop_back();
    CHECK_THROWS_AS(powerlaw_fit(t, bad, 2.0, 8.0), std::invalid_argument);
  }
  SUBCASE("inverted window") {
    CHECK_THROWS_AS(powerlaw_fit(t, y, 8.0, 2.0), std::invalid_argument);
  }
  SUBCASE("nonpositive value inside the window") {
    auto bad = y;
    bad[6] = 0.0;  // t = 4.0
    CHECK_THROWS_AS(powerlaw_fit(t, bad, 2.0, 8.0), std::invalid_argument);
    bad[6] = -1.0;
    CHECK_THROWS_AS(powerlaw_fit(t, bad, 2.0, 8.0), std::invalid_argument);
  }
  SUBCASE("window outside the data range") {
    CHECK_THROWS_AS(powerlaw_fit(t, y, 20.0, 30.0), std::invalid_argument);
  }
  SUBCASE("fewer than five points") {
    CHECK_THROWS_AS(powerlaw_fit(t, y, 4.0, 5.0), std::invalid_argument);
  }
}

TEST_CASE("chi_difference_error") {
  const auto t = grid(1.0, 10.0, 0.1);
  const auto hi = powerlaw_fit(t, powerlaw(t, 1.0, 0.31), 5.0, 10.0);
  const auto half = powerlaw_fit(t, powerlaw(t, 1.0, 0.29), 5.0, 10.0);

  SUBCASE("error is the absolute exponent difference") {
    const auto out = chi_difference_error(hi, half);
    CHECK(out.exponent == doctest::Approx(0.31).epsilon(1e-12));
    CHECK(out.error == doctest::Approx(0.02).epsilon(1e-9));
    CHECK(out.method == FitResult::ErrorMethod::chi_difference);
  }
  SUBCASE("identical fits give zero error") {
    const auto out = chi_difference_error(hi, hi);
    CHECK(out.error == 0.0);
  }
  SUBCASE("mismatched windows are rejected") {
    auto other = powerlaw_fit(t, powerlaw(t, 1.0, 0.29), 2.0, 4.0);
    CHECK_THROWS_AS(chi_difference_error(hi, other), std::invalid_argument);
  }
}

TEST_CASE("ensemble_mean_series averages over trajectories") {
  const auto t = grid(1.0, 5.0, 1.0);
  TrajectoryRecord a, b;
  a.times = b.times = t;
  for (std::size_t i = 0; i < t.size(); ++i) {
    a.survival_overlap.push_back(0.0);  // P_sur contribution 1
    b.survival_overlap.push_back(1.0);  // P_sur contribution 0
    a.total_density.push_back(2.0);
    b.total_density.push_back(4.0);
    a.seed_density.push_back(0.1);
    b.seed_density.push_back(0.3);
  }
  const std::vector<TrajectoryRecord> recs{a, b};
  for (double v : ensemble_mean_series(recs, TrajObservable::survival))
    CHECK(v == doctest::Approx(0.5));
  for (double v : ensemble_mean_series(recs, TrajObservable::total_density))
    CHECK(v == doctest::Approx(3.0));
  for (double v : ensemble_mean_series(recs, TrajObservable::seed_density))
    CHECK(v == doctest::Approx(0.2));
  CHECK_THROWS_AS(ensemble_mean_series({}, TrajObservable::survival),
                  std::invalid_argument);
}

TEST_CASE("bootstrap_exponent: identical trajectories resample to zero error") {
  const auto t = grid(1.0, 10.0, 0.1);
  const auto rec = powerlaw_record(t, -0.16, 0.31, -0.1);
  const std::vector<TrajectoryRecord> recs(20, rec);
  const auto fit =
      bootstrap_exponent(recs, TrajObservable::total_density, 5.0, 10.0, 200);
  CHECK(fit.exponent == doctest::Approx(0.31).epsilon(1e-12));
  CHECK(fit.error < 1e-12);
  CHECK(fit.method == FitResult::ErrorMethod::bootstrap_2sigma);
}

TEST_CASE("bootstrap_exponent: deterministic given the seed") {
  const auto t = grid(1.0, 10.0, 0.2);
  std::vector<TrajectoryRecord> recs;
  for (int i = 0; i < 30; ++i)
    recs.push_back(powerlaw_record(t, -0.16, 0.31 + 0.01 * (i % 3), -0.1));
  const auto a =
      bootstrap_exponent(recs, TrajObservable::total_density, 2.0, 8.0, 100, 7);
  const auto b =
      bootstrap_exponent(recs, TrajObservable::total_density, 2.0, 8.0, 100, 7);
  const auto c =
      bootstrap_exponent(recs, TrajObservable::total_density, 2.0, 8.0, 100, 8);
  CHECK(a.error == b.error);
  CHECK(a.error > 0.0);
  CHECK(a.error != c.error);
}

TEST_CASE("bootstrap_exponent error shrinks like 1/sqrt(n)") {
  // Duplicating every record 4x keeps the empirical distribution but
  // quadruples n, so the bootstrap error should roughly halve.
  const auto t = grid(1.0, 10.0, 0.2);
  std::vector<TrajectoryRecord> small;
  for (int i = 0; i < 40; ++i)
    small.push_back(
        powerlaw_record(t, -0.16, 0.25 + 0.004 * static_cast<double>(i % 20),
                        -0.1));
  std::vector<TrajectoryRecord> big;
  for (int c = 0; c < 4; ++c)
    big.insert(big.end(), small.begin(), small.end());
  const auto fs = bootstrap_exponent(small, TrajObservable::total_density, 2.0,
                                     8.0, 400);
  const auto fb =
      bootstrap_exponent(big, TrajObservable::total_density, 2.0, 8.0, 400);
  CHECK(fs.exponent == doctest::Approx(fb.exponent).epsilon(1e-9));
  CHECK(fb.error == doctest::Approx(fs.error / 2.0).epsilon(0.25));
}

TEST_CASE("propagate_z") {
  FitResult theta, seed;
  theta.t_lo = seed.t_lo = 5.0;
  theta.t_hi = seed.t_hi = 10.0;

  SUBCASE("inversion identity") {
    theta.exponent = 0.31;
    seed.exponent = 0.31 - 1.0 / 1.58;
    const auto z = propagate_z(theta, seed);
    CHECK(z.exponent == doctest::Approx(1.58).epsilon(1e-12));
  }
  SUBCASE("zero input errors give zero output error") {
    theta.exponent = 0.31;
    seed.exponent = -0.2;
    const auto z = propagate_z(theta, seed);
    CHECK(z.error == 0.0);
  }
  SUBCASE("first-order propagation formula") {
    theta.exponent = 0.3;
    theta.error = 0.03;
    seed.exponent = -0.3;
    seed.error = 0.04;
    const auto z = propagate_z(theta, seed);
    const double zval = 1.0 / 0.6;
    CHECK(z.exponent == doctest::Approx(zval));
    CHECK(z.error ==
          doctest::Approx(zval * zval * std::sqrt(0.03 * 0.03 + 0.04 * 0.04)));
  }
  SUBCASE("non-positive gap is unphysical") {
    theta.exponent = 0.1;
    seed.exponent = 0.2;
    CHECK_THROWS_AS(propagate_z(theta, seed), std::domain_error);
  }
}

TEST_CASE("bootstrap_z joint resampling") {
  const auto t = grid(1.0, 10.0, 0.2);
  std::vector<TrajectoryRecord> recs;
  for (int i = 0; i < 30; ++i)
    recs.push_back(powerlaw_record(t, -0.16, 0.31 + 0.002 * (i % 5),
                                   -0.32 + 0.002 * (i % 5)));
  const auto z = bootstrap_z(recs, 2.0, 8.0, 200);
  // Theta ~ 0.314, seed slope ~ -0.316 on the ensemble mean.
  CHECK(z.exponent == doctest::Approx(1.0 / 0.63).epsilon(0.05));
  CHECK(z.error > 0.0);
  CHECK(z.method == FitResult::ErrorMethod::bootstrap_2sigma);

  // Exponent shifts are fully correlated across the two observables here, so
  // the joint bootstrap error must be far smaller than independent
  // propagation would suggest.
  auto th = bootstrap_exponent(recs, TrajObservable::total_density, 2.0, 8.0,
                               200);
  auto sl = bootstrap_exponent(recs, TrajObservable::seed_density, 2.0, 8.0,
                               200);
  const auto indep = propagate_z(th, sl);
  CHECK(z.error < 0.5 * indep.error);
}

TEST_CASE("compare_to_reference") {
  FitResult fit;
  fit.exponent = 0.26;
  fit.error = 0.04;  // bootstrap convention: two standard errors
  fit.method = FitResult::ErrorMethod::bootstrap_2sigma;

  const auto low = compare_to_reference(fit, 0.16, "reference A");
  CHECK(low.sigma_distance == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(low.reference_label == "reference A");

  const auto high = compare_to_reference(fit, 0.45, "reference B");
  CHECK(high.sigma_distance == doctest::Approx(9.5).epsilon(1e-12));

  const auto same = compare_to_reference(fit, 0.26, "self");
  CHECK(same.sigma_distance == doctest::Approx(0.0));

  FitResult chi = fit;
  chi.method = FitResult::ErrorMethod::chi_difference;
  CHECK_THROWS_AS(compare_to_reference(chi, 0.16, "x"), std::invalid_argument);
}
