#pragma once

#include <stdexcept>
#include <vector>

namespace gpamp {

// State of a two-path interferometer whose particle carries an internal
// two-level superposition. theta sets the level populations; phi1 and phi2
// are the phases accumulated between the paths by the lower and upper level.
//
// Conventions used throughout the library:
//   P2 = cos^2(theta/2)   upper-level population
//   P1 = sin^2(theta/2)   lower-level population, P1 + P2 = 1
//   phi = phi2 - phi1     relative rotation between the levels
struct ClockState {
  double theta = 0.0;  // polar angle, radians, in [0, pi]
  double phi1 = 0.0;   // lower-level path phase, radians
  double phi2 = 0.0;   // upper-level path phase, radians

  double relative_phase() const { return phi2 - phi1; }
};

// Split of the readout phase into the population-weighted linear part and
// the remainder. See decompose_phase().
struct PhaseDecomposition {
  double total = 0.0;
  double dynamical = 0.0;
  double geometric = 0.0;
};

// Linear dependence of (phi1, phi2) on a scanned control phase.
// The laboratory drive advances the upper level twice as fast as the lower
// one, so the relative rotation equals the scan variable itself.
struct PhaseMapping {
  double phi1_rate = 1.0;
  double phi2_rate = 2.0;

  static PhaseMapping experimental() { return {1.0, 2.0}; }
  // Only the upper level is driven: phi = scan variable, phi1 = 0.
  static PhaseMapping upper_only() { return {0.0, 1.0}; }
  static PhaseMapping lower_only() { return {1.0, 0.0}; }

  ClockState state_at(double theta, double phi) const {
    return {theta, phi1_rate * phi, phi2_rate * phi};
  }
};

// Thrown where the interference phase is undefined because the fringe
// contrast vanishes (theta = pi/2 with phi = pi modulo 2 pi).
class singular_phase_error : public std::domain_error {
 public:
  singular_phase_error(double theta, double phi);
  double theta() const noexcept { return theta_; }
  double phi() const noexcept { return phi_; }

 private:
  double theta_ = 0.0;
  double phi_ = 0.0;
};

// Path-overlap magnitudes below this floor count as a vanished fringe.
inline constexpr double kSingularOverlapFloor = 1e-12;

// P2 = cos^2(theta/2), evaluated as (1 + cos(theta)) / 2; exact 0 at the
// south pole. Clamped to [0, 1].
double population_from_theta(double theta);

// Inverse of population_from_theta on [0, pi]. p2 must lie in [0, 1].
double theta_from_population(double p2);

// Interference phase of the two-path readout,
//   Phi_T = phi2 + atan2(P1 sin(phi1 - phi2), P2 + P1 cos(phi1 - phi2)),
// reported on the branch anchored to phi2 (inner term in (-pi, pi]).
// Throws singular_phase_error when the fringe contrast vanishes.
double total_phase(const ClockState& state);

// Fringe contrast v = sqrt(1 - 4 P1 P2 sin^2(phi / 2)), equal to the
// magnitude of the complex path overlap. Zero only at theta = pi/2,
// phi = pi (mod 2 pi).
double visibility(double theta, double phi);
double visibility_from_population(double p2, double phi);

// Small-signal amplification factor G = 1 / (1 - R) with R = P2 / (1 - P2):
// the slope of the readout phase against a differential path phase at the
// fringe-contrast minimum. G(0) = 1, G(1) = 0, and G diverges at
// P2 = 1/2 (IEEE infinity is returned, sign from the approach direction).
// The sign encodes the direction of the amplified response.
double amplification_slope(double p2);

// Analytic derivative d(Phi_T)/d(phi) when (phi1, phi2) follow a linear
// mapping of the scanned phase. Throws singular_phase_error at
// zero-contrast points.
double phase_slope(double theta, double phi,
                   const PhaseMapping& mapping = PhaseMapping::experimental());

// Splits Phi_T with the linear term attributed as
//   dynamical = (phi2 - phi1) (1 - cos theta) / 2,
//   geometric = total - dynamical.
// This split depends on how the common phase is shared between the levels;
// geometric_phase() gives the convention-free quantity.
PhaseDecomposition decompose_phase(const ClockState& state);

// Convention-free geometric part of the readout phase for a relative
// rotation phi at fixed theta:
//   Phi_G = arg(P2 exp(i P1 phi) + P1 exp(-i P2 phi)).
// Invariant under shifting a common phase onto either level, and equal
// (modulo 2 pi) to half the signed solid angle enclosed by the matching
// fixed-latitude Bloch trajectory closed with a geodesic.
// Throws singular_phase_error at zero-contrast points.
double geometric_phase(double theta, double phi);

// Wraps an angle to (-pi, pi].
double wrap_angle(double x);

// Continues a sampled phase series onto a single branch: each element is
// shifted by the multiple of 2 pi that brings it closest to its
// predecessor. The first element is kept as given.
std::vector<double> unwrap_sweep(const std::vector<double>& values);

}  // namespace gpamp
