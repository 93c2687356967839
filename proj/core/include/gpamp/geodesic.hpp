#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gpamp {

using Vec3 = std::array<double, 3>;

// Sampled path of the state's Bloch vector on the unit sphere.
// Samples must be unit vectors and consecutive samples must subtend less
// than pi/2 so every edge has an unambiguous short geodesic. When
// close_with_geodesic is set the loop is completed by the geodesic from the
// last sample back to the first, which requires the endpoints to be
// non-antipodal; when it is unset the endpoints must already coincide.
struct BlochTrajectory {
  std::vector<Vec3> samples;
  bool close_with_geodesic = true;
};

// Thrown for ill-posed trajectories: non-unit samples, sampling coarser
// than pi/2, antipodal endpoints under geodesic closure, open trajectories
// without closure, or latitude arcs pinned at a pole.
class trajectory_error : public std::domain_error {
 public:
  explicit trajectory_error(const std::string& what) : std::domain_error(what) {}
};

// Fixed-latitude arc at polar angle theta from azimuth 0 to span with n
// uniformly spaced samples. Requires theta strictly between the poles,
// n >= 2, and 0 <= span <= 2 pi. The arc runs in the direction of
// increasing azimuth (x toward y).
BlochTrajectory latitude_arc(double theta, double span, std::size_t n);

// Signed solid angle swept by the closed loop, edges taken as short
// geodesics. Positive for loops that run counterclockwise as seen from
// outside the sphere on the side of the loop normal (an equatorial loop of
// increasing azimuth gives +2 pi). Computed as a fan of signed spherical
// triangle excesses about the loop-normal axis; the value is meaningful
// modulo 4 pi and is not reduced, so large far-from-normal loops can exceed
// 2 pi in magnitude. Degenerate loops (all samples equal) give 0.
double enclosed_solid_angle(const BlochTrajectory& trajectory);

// Geometric phase of the trajectory under the geodesic closure rule: half
// the enclosed signed solid angle, meaningful modulo 2 pi. The sign is
// fixed so that fixed-latitude arcs reproduce geometric_phase(theta, span).
double geometric_phase_area(const BlochTrajectory& trajectory);

}  // namespace gpamp
