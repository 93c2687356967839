#pragma once

#include <vector>

namespace gpamp {

// Per-point measurement resources: atoms per shot, shots averaged per
// point, additive technical phase noise (radians per shot), and the fringe
// visibility at the operating point.
struct NoiseBudget {
  double atoms = 5000.0;
  double cycles = 8.0;
  double technical = 0.1;
  double visibility = 1.0;
};

// One point of a sensitivity / gain sweep.
struct SensitivityPoint {
  double phi = 0.0;          // control phase, radians
  double total_phase = 0.0;  // readout phase, unwrapped along the sweep
  double slope = 0.0;        // d(readout phase) / d(phi)
  double dphi_total = 0.0;   // readout phase noise, radians
  double dphi_signal = 0.0;  // inferred control-phase noise, dphi_total / |slope|
  double gain_db = 0.0;      // improvement over the reference curve, dB
};

// Readout phase noise: quadrature sum of the projection term
// 1 / (v sqrt(atoms * cycles)) and the technical floor. Returns +infinity
// when visibility is zero (sentinel for an unreadable fringe, not an
// error). Throws std::domain_error for atoms < 1, cycles < 1,
// technical < 0, or visibility outside [0, 1].
double phase_noise(const NoiseBudget& budget);

// Control-phase uncertainty implied by a readout uncertainty and a local
// slope: dphi_total / |slope|. Requires slope != 0.
double sensitivity(double dphi_total, double slope);

// A measured readout phase at one control-phase setting.
struct TwoPointMeasurement {
  double phi = 0.0;    // control phase, radians
  double value = 0.0;  // measured readout phase, radians
  double error = 0.0;  // 1-sigma uncertainty of value, radians
};

struct TwoPointSensitivity {
  double slope = 0.0;       // (b.value - a.value) / (b.phi - a.phi)
  double delta2_phi = 0.0;  // squared control-phase sensitivity
};

// Finite-difference sensitivity from two measured points:
//   slope      = (b.value - a.value) / (b.phi - a.phi)
//   delta2_phi = (a.error^2 + b.error^2) / slope^2
// Requires a.phi != b.phi and a nonzero slope.
TwoPointSensitivity two_point_sensitivity(const TwoPointMeasurement& a,
                                          const TwoPointMeasurement& b);

// Sensitivity improvement in decibels, 10 log10(reference / test), for two
// squared sensitivities. Both must be positive and finite.
double gain_db(double delta2_test, double delta2_reference);

struct GainCurveConfig {
  double p2 = 0.514;
  NoiseBudget budget;       // visibility field is ignored; derived per point
  std::vector<double> phi;  // evaluation grid; zero-contrast points rejected
  double reference_p2 = 1.0;
};

// Sensitivity sweep with per-point gain against a reference population run
// with identical resources. The reference population defaults to a plain
// interferometer (P2 = 1: slope 2, full visibility). Throws
// singular_phase_error if the grid contains a zero-contrast point.
std::vector<SensitivityPoint> gain_curve(const GainCurveConfig& config);

// Readout phase error produced by a splitting (population) error through
// the amplification slope: 2 g0^2 (n2 - n1) dphi_sig.
double population_noise_amplification(double g0, double n1, double n2,
                                      double dphi_sig);

// Readout phase error when the two levels see correlated control errors:
// g (dphi_b - dphi_a) + dphi_a. Common-mode errors (dphi_a == dphi_b) pass
// through without amplification.
double correlated_phase_noise(double g, double dphi_a, double dphi_b);

// First-order relative uncertainty of an interference signal from relative
// intensity, transmission, and (double-weighted) position errors:
// di + dt + 2 dz.
double signal_uncertainty_budget(double di, double dt, double dz);

}  // namespace gpamp
