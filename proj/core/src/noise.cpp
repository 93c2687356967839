#include "gpamp/noise.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gpamp/clock_state.hpp"

namespace gpamp {

double phase_noise(const NoiseBudget& budget) {
  if (!(budget.atoms >= 1.0)) throw std::domain_error("atoms must be >= 1");
  if (!(budget.cycles >= 1.0)) throw std::domain_error("cycles must be >= 1");
  if (!(budget.technical >= 0.0))
    throw std::domain_error("technical noise must be >= 0");
  if (!(budget.visibility >= 0.0 && budget.visibility <= 1.0))
    throw std::domain_error("visibility must lie in [0, 1]");
  if (budget.visibility == 0.0)
    return std::numeric_limits<double>::infinity();
  const double projection =
      1.0 / (budget.visibility * std::sqrt(budget.atoms * budget.cycles));
  return std::sqrt(projection * projection + budget.technical * budget.technical);
}

double sensitivity(double dphi_total, double slope) {
  if (slope == 0.0) throw std::domain_error("sensitivity needs a nonzero slope");
  return dphi_total / std::abs(slope);
}

TwoPointSensitivity two_point_sensitivity(const TwoPointMeasurement& a,
                                          const TwoPointMeasurement& b) {
  if (a.phi == b.phi)
    throw std::domain_error("two-point sensitivity needs distinct control phases");
  TwoPointSensitivity out;
  out.slope = (b.value - a.value) / (b.phi - a.phi);
  if (out.slope == 0.0)
    throw std::domain_error("two-point sensitivity needs a nonzero slope");
  out.delta2_phi = (a.error * a.error + b.error * b.error) / (out.slope * out.slope);
  return out;
}

double gain_db(double delta2_test, double delta2_reference) {
  if (!(delta2_test > 0.0) || !std::isfinite(delta2_test) ||
      !(delta2_reference > 0.0) || !std::isfinite(delta2_reference))
    throw std::domain_error("gain needs positive finite squared sensitivities");
  return 10.0 * std::log10(delta2_reference / delta2_test);
}

std::vector<SensitivityPoint> gain_curve(const GainCurveConfig& config) {
  const double theta = theta_from_population(config.p2);
  const double theta_ref = theta_from_population(config.reference_p2);
  std::vector<SensitivityPoint> out;
  out.reserve(config.phi.size());

  std::vector<double> raw_phase;
  raw_phase.reserve(config.phi.size());
  const auto mapping = PhaseMapping::experimental();
  for (double phi : config.phi)
    raw_phase.push_back(total_phase(mapping.state_at(theta, phi)));
  const std::vector<double> phase = unwrap_sweep(raw_phase);

  for (std::size_t i = 0; i < config.phi.size(); ++i) {
    const double phi = config.phi[i];
    SensitivityPoint point;
    point.phi = phi;
    point.total_phase = phase[i];
    point.slope = phase_slope(theta, phi, mapping);

    NoiseBudget budget = config.budget;
    budget.visibility = visibility(theta, phi);
    point.dphi_total = phase_noise(budget);  // throws on zero contrast via slope above
    point.dphi_signal = sensitivity(point.dphi_total, point.slope);

    NoiseBudget reference = config.budget;
    reference.visibility = visibility(theta_ref, phi);
    const double ref_slope = phase_slope(theta_ref, phi, mapping);
    const double ref_dphi = sensitivity(phase_noise(reference), ref_slope);
    point.gain_db = gain_db(point.dphi_signal * point.dphi_signal,
                            ref_dphi * ref_dphi);
    out.push_back(point);
  }
  return out;
}

double population_noise_amplification(double g0, double n1, double n2,
                                      double dphi_sig) {
  return 2.0 * g0 * g0 * (n2 - n1) * dphi_sig;
}

double correlated_phase_noise(double g, double dphi_a, double dphi_b) {
  return g * (dphi_b - dphi_a) + dphi_a;
}

double signal_uncertainty_budget(double di, double dt, double dz) {
  return di + dt + 2.0 * dz;
}

}  // namespace gpamp
