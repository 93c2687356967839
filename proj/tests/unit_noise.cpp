#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "gpamp/clock_state.hpp"
#include "gpamp/noise.hpp"

using namespace gpamp;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("phase noise: quadrature of projection and technical terms") {
  NoiseBudget budget;  // 5000 atoms, 8 cycles, 0.1 technical, v = 1
  const double projection = 1.0 / (1.0 * std::sqrt(5000.0 * 8.0));
  CHECK(std::abs(phase_noise(budget) -
                 std::hypot(projection, 0.1)) <= 1e-15);
  CHECK(std::abs(phase_noise(budget) - 0.1001249219725039) <= 1e-12);

  // No technical floor, low visibility: pure projection term.
  budget.technical = 0.0;
  budget.visibility = 0.025;
  CHECK(std::abs(phase_noise(budget) - 0.2) <= 1e-15);

  // Scaling: doubling atoms*cycles shrinks the projection term by sqrt 2.
  NoiseBudget a;
  a.technical = 0.0;
  NoiseBudget b = a;
  b.cycles = 16.0;
  CHECK(std::abs(phase_noise(a) / phase_noise(b) - std::sqrt(2.0)) <= 1e-12);

  // Zero visibility is a sentinel, not an error.
  NoiseBudget blind;
  blind.visibility = 0.0;
  CHECK(std::isinf(phase_noise(blind)));

  NoiseBudget bad;
  bad.atoms = 0.5;
  CHECK_THROWS_AS(phase_noise(bad), std::domain_error);
  bad = NoiseBudget{};
  bad.cycles = 0.0;
  CHECK_THROWS_AS(phase_noise(bad), std::domain_error);
  bad = NoiseBudget{};
  bad.technical = -0.1;
  CHECK_THROWS_AS(phase_noise(bad), std::domain_error);
  bad = NoiseBudget{};
  bad.visibility = 1.5;
  CHECK_THROWS_AS(phase_noise(bad), std::domain_error);
}

TEST_CASE("sensitivity: readout noise referred through the slope") {
  CHECK(std::abs(sensitivity(0.2, 4.0) - 0.05) <= 1e-15);
  CHECK(std::abs(sensitivity(0.2, -4.0) - 0.05) <= 1e-15);
  CHECK_THROWS_AS(sensitivity(0.2, 0.0), std::domain_error);
}

TEST_CASE("two-point sensitivity: clock pair pinned arithmetic") {
  const TwoPointMeasurement clock_a{0.94 * kPi, -1.36, 0.186};
  const TwoPointMeasurement clock_b{1.04 * kPi, -5.71, 0.192};
  const auto clock = two_point_sensitivity(clock_a, clock_b);
  CHECK(std::abs(clock.slope - (-13.846480048994893)) <= 1e-12);
  CHECK(std::abs(clock.delta2_phi - 3.7272132672841625e-4) <= 1e-16);

  const TwoPointMeasurement ref_a{0.94 * kPi, -2.93, 0.085};
  const TwoPointMeasurement ref_b{1.04 * kPi, -3.68, 0.094};
  const auto reference = two_point_sensitivity(ref_a, ref_b);
  CHECK(std::abs(reference.slope - (-2.3873241463784303)) <= 1e-12);
  CHECK(std::abs(reference.delta2_phi - 2.8180571784159323e-3) <= 1e-15);

  const double gain = gain_db(clock.delta2_phi, reference.delta2_phi);
  CHECK(std::abs(gain - 8.78565557357873) <= 1e-9);

  CHECK_THROWS_AS(two_point_sensitivity(clock_a, clock_a), std::domain_error);
  const TwoPointMeasurement flat_a{0.0, 1.0, 0.1};
  const TwoPointMeasurement flat_b{1.0, 1.0, 0.1};
  CHECK_THROWS_AS(two_point_sensitivity(flat_a, flat_b), std::domain_error);
}

TEST_CASE("gain in decibels") {
  CHECK(gain_db(1.0, 1.0) == 0.0);
  CHECK(std::abs(gain_db(0.1, 1.0) - 10.0) <= 1e-12);
  CHECK(std::abs(gain_db(1.0, 0.1) + 10.0) <= 1e-12);
  CHECK_THROWS_AS(gain_db(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(gain_db(1.0, -2.0), std::domain_error);
  CHECK_THROWS_AS(gain_db(std::numeric_limits<double>::infinity(), 1.0),
                  std::domain_error);
}

TEST_CASE("gain curve: structure, identities, and the dip peak") {
  GainCurveConfig config;  // p2 = 0.514, default budget, reference P2 = 1
  for (int k = 0; k <= 240; ++k)
    config.phi.push_back(2.0 * kPi * k / 240.0);
  const auto curve = gain_curve(config);
  REQUIRE(curve.size() == config.phi.size());

  const double theta = theta_from_population(config.p2);
  double best_gain = -1e300;
  double best_phi = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto& point = curve[i];
    CHECK(point.phi == config.phi[i]);
    // Per-point identities against the state-space primitives.
    CHECK(std::abs(point.slope - phase_slope(theta, point.phi)) <= 1e-12);
    CHECK(std::abs(point.dphi_signal -
                   point.dphi_total / std::abs(point.slope)) <= 1e-15);
    NoiseBudget budget = config.budget;
    budget.visibility = visibility(theta, point.phi);
    CHECK(std::abs(point.dphi_total - phase_noise(budget)) <= 1e-15);
    if (point.gain_db > best_gain) {
      best_gain = point.gain_db;
      best_phi = point.phi;
    }
    if (i > 0) {
      // Unwrapped readout phase: continuous along the sweep.
      CHECK(std::abs(point.total_phase - curve[i - 1].total_phase) <= 0.6);
    }
  }
  // Peak gain sits at the contrast dip; 13.51 dB for these resources.
  CHECK(std::abs(best_phi - kPi) <= 0.02 * kPi);
  CHECK(std::abs(best_gain - 13.506) <= 0.01);
  // Over a full control sweep the unwrapped readout advances by 4 pi
  // (both dressing tones return to their start).
  CHECK(std::abs((curve.back().total_phase - curve.front().total_phase) -
                 4.0 * kPi) <= 1e-9);
}

TEST_CASE("gain curve: plain interferometer baseline is -6 dB flat") {
  GainCurveConfig config;
  config.p2 = 0.0;  // all population in the driven lower level: slope 1
  for (int k = 0; k <= 40; ++k)
    config.phi.push_back(2.0 * kPi * k / 40.0);
  const auto curve = gain_curve(config);
  const double expected = -20.0 * std::log10(2.0);
  for (const auto& point : curve) {
    CHECK(std::abs(point.gain_db - expected) <= 1e-9);
    CHECK(std::abs(std::abs(point.slope) - 1.0) <= 1e-12);
  }
}

TEST_CASE("gain curve: zero-contrast grid point is rejected") {
  GainCurveConfig config;
  config.p2 = 0.5;
  config.phi = {0.1, kPi};
  CHECK_THROWS_AS(gain_curve(config), singular_phase_error);
}

TEST_CASE("population-error amplification and correlated noise") {
  // 2 g0^2 (n2 - n1) dphi: quadratic in the working slope.
  CHECK(std::abs(population_noise_amplification(10.0, 0.4, 0.6, 0.01) -
                 2.0 * 100.0 * 0.2 * 0.01) <= 1e-15);
  CHECK(population_noise_amplification(10.0, 0.5, 0.5, 0.01) == 0.0);

  // g (b - a) + a: common mode passes through unamplified.
  CHECK(std::abs(correlated_phase_noise(17.0, 0.02, 0.02) - 0.02) <= 1e-15);
  CHECK(std::abs(correlated_phase_noise(17.0, 0.0, 0.01) - 0.17) <= 1e-15);
  CHECK(std::abs(correlated_phase_noise(-17.0, 0.01, 0.0) -
                 (-17.0 * (-0.01) + 0.01)) <= 1e-15);

  // First-order signal budget: di + dt + 2 dz.
  CHECK(std::abs(signal_uncertainty_budget(0.05, 0.05, 0.05) - 0.2) <= 1e-15);
  CHECK(signal_uncertainty_budget(0.0, 0.0, 0.0) == 0.0);
}
