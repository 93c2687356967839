#include "gpamp/clock_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace gpamp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string singular_message(double theta, double phi) {
  return "interference phase undefined: zero fringe contrast at theta=" +
         std::to_string(theta) + ", phi=" + std::to_string(phi);
}

}  // namespace

singular_phase_error::singular_phase_error(double theta, double phi)
    : std::domain_error(singular_message(theta, phi)), theta_(theta), phi_(phi) {}

double population_from_theta(double theta) {
  double p2 = 0.5 * (1.0 + std::cos(theta));
  return std::clamp(p2, 0.0, 1.0);
}

double theta_from_population(double p2) {
  if (!(p2 >= 0.0 && p2 <= 1.0))
    throw std::domain_error("population must lie in [0, 1]");
  return 2.0 * std::acos(std::sqrt(p2));
}

double total_phase(const ClockState& state) {
  const double p2 = population_from_theta(state.theta);
  const double p1 = 1.0 - p2;
  const double delta = state.phi1 - state.phi2;
  const double re = p2 + p1 * std::cos(delta);
  const double im = p1 * std::sin(delta);
  if (std::hypot(re, im) < kSingularOverlapFloor)
    throw singular_phase_error(state.theta, state.relative_phase());
  return state.phi2 + std::atan2(im, re);
}

double visibility_from_population(double p2, double phi) {
  if (!(p2 >= 0.0 && p2 <= 1.0))
    throw std::domain_error("population must lie in [0, 1]");
  const double p1 = 1.0 - p2;
  const double s = std::sin(0.5 * phi);
  const double arg = 1.0 - 4.0 * p1 * p2 * s * s;
  return std::sqrt(std::max(arg, 0.0));
}

double visibility(double theta, double phi) {
  return visibility_from_population(population_from_theta(theta), phi);
}

double amplification_slope(double p2) {
  if (!(p2 >= 0.0 && p2 <= 1.0))
    throw std::domain_error("population must lie in [0, 1]");
  if (p2 == 1.0) return 0.0;
  const double ratio = p2 / (1.0 - p2);
  if (ratio == 1.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (1.0 - ratio);
}

double phase_slope(double theta, double phi, const PhaseMapping& mapping) {
  const double p2 = population_from_theta(theta);
  const double p1 = 1.0 - p2;
  const double delta = (mapping.phi1_rate - mapping.phi2_rate) * phi;
  const double c = std::cos(delta);
  const double den = p2 * p2 + 2.0 * p1 * p2 * c + p1 * p1;
  if (std::sqrt(den) < kSingularOverlapFloor)
    throw singular_phase_error(theta, (mapping.phi2_rate - mapping.phi1_rate) * phi);
  const double inner_rate = (p1 * p2 * c + p1 * p1) / den;
  return mapping.phi2_rate + inner_rate * (mapping.phi1_rate - mapping.phi2_rate);
}

PhaseDecomposition decompose_phase(const ClockState& state) {
  PhaseDecomposition out;
  out.total = total_phase(state);
  out.dynamical = state.relative_phase() * (1.0 - std::cos(state.theta)) / 2.0;
  out.geometric = out.total - out.dynamical;
  return out;
}

double geometric_phase(double theta, double phi) {
  const double p2 = population_from_theta(theta);
  const double p1 = 1.0 - p2;
  const double re = p2 * std::cos(p1 * phi) + p1 * std::cos(p2 * phi);
  const double im = p2 * std::sin(p1 * phi) - p1 * std::sin(p2 * phi);
  if (std::hypot(re, im) < kSingularOverlapFloor)
    throw singular_phase_error(theta, phi);
  return std::atan2(im, re);
}

double wrap_angle(double x) {
  double y = std::remainder(x, kTwoPi);
  if (y <= -kPi) y += kTwoPi;
  return y;
}

std::vector<double> unwrap_sweep(const std::vector<double>& values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i == 0) {
      out.push_back(values[0]);
      continue;
    }
    out.push_back(values[i] + kTwoPi * std::round((out[i - 1] - values[i]) / kTwoPi));
  }
  return out;
}

}  // namespace gpamp
