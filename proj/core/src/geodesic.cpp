#include "gpamp/geodesic.hpp"

#include <cmath>
#include <numbers>

namespace gpamp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kUnitTolerance = 1e-9;
constexpr double kDegenerateNormal = 1e-12;
constexpr double kAntipodalAngle = 1e-6;

double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// Signed solid angle of the geodesic triangle (a, b, c); positive when the
// vertices run counterclockwise as seen from outside the sphere.
double triangle_excess(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double triple = dot(a, cross(b, c));
  const double denom = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
  return 2.0 * std::atan2(triple, denom);
}

void validate(const BlochTrajectory& trajectory) {
  const auto& pts = trajectory.samples;
  if (pts.size() < 2)
    throw trajectory_error("trajectory needs at least two samples");
  for (const auto& p : pts) {
    if (std::abs(norm(p) - 1.0) > kUnitTolerance)
      throw trajectory_error("trajectory samples must be unit vectors");
  }
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (dot(pts[i], pts[i + 1]) <= 0.0)
      throw trajectory_error(
          "consecutive samples subtend >= pi/2; sample the path more finely");
  }
  const double end_dot = dot(pts.front(), pts.back());
  if (trajectory.close_with_geodesic) {
    if (end_dot < -std::cos(kAntipodalAngle))
      throw trajectory_error(
          "endpoints are antipodal; the closing geodesic is ambiguous");
  } else {
    if (std::abs(norm({pts.front()[0] - pts.back()[0], pts.front()[1] - pts.back()[1],
                       pts.front()[2] - pts.back()[2]})) > kUnitTolerance)
      throw trajectory_error(
          "trajectory is not closed and geodesic closure was disabled");
  }
}

}  // namespace

BlochTrajectory latitude_arc(double theta, double span, std::size_t n) {
  if (!(theta > 0.0 && theta < kPi))
    throw trajectory_error("latitude arc degenerates at a pole");
  if (n < 2) throw trajectory_error("latitude arc needs at least two samples");
  if (!(span >= 0.0 && span <= kTwoPi))
    throw trajectory_error("latitude arc span must lie in [0, 2 pi]");
  const double st = std::sin(theta);
  const double ct = std::cos(theta);
  BlochTrajectory out;
  out.samples.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double azimuth = span * static_cast<double>(k) / static_cast<double>(n - 1);
    out.samples.push_back({st * std::cos(azimuth), st * std::sin(azimuth), ct});
  }
  return out;
}

double enclosed_solid_angle(const BlochTrajectory& trajectory) {
  validate(trajectory);
  const auto& pts = trajectory.samples;
  const std::size_t n = pts.size();

  // Loop normal: sum of edge cross products (including the closing edge).
  // Its sign is canonicalized so a reversed loop uses the same fan apex and
  // the result is exactly antisymmetric under traversal reversal.
  Vec3 total{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 c = cross(pts[i], pts[(i + 1) % n]);
    total[0] += c[0];
    total[1] += c[1];
    total[2] += c[2];
  }
  const double total_norm = norm(total);
  if (total_norm < kDegenerateNormal) return 0.0;  // zero-area trajectory

  Vec3 apex{total[0] / total_norm, total[1] / total_norm, total[2] / total_norm};
  for (int axis : {2, 1, 0}) {
    if (std::abs(apex[axis]) > kDegenerateNormal) {
      if (apex[axis] < 0.0)
        apex = {-apex[0], -apex[1], -apex[2]};
      break;
    }
  }

  double omega = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    omega += triangle_excess(apex, pts[i], pts[(i + 1) % n]);
  return omega;
}

double geometric_phase_area(const BlochTrajectory& trajectory) {
  return 0.5 * enclosed_solid_angle(trajectory);
}

}  // namespace gpamp
