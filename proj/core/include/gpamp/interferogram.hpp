#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace gpamp {

// Fringe profile parameters. Lengths are micrometers, phases radians.
// The atom-number density along the imaging axis is
//   n(z) = amplitude * exp(-(z - z_com)^2 / (2 sigma_z^2))
//        * (1 + visibility * sin(2 pi (z - z_ref) / wavelength + phase))
//        + background
// with amplitude and background in counts per micrometer.
struct InterferogramParams {
  double amplitude = 100.0;
  double z_com = 0.0;
  double sigma_z = 12.0;
  double visibility = 1.0;
  double wavelength = 6.3241876118498195;  // fringe_wavelength(0.01, 7.26, kRb87MassKg)
  double z_ref = 0.0;
  double phase = 0.0;
  double background = 0.0;
};

// Uniform detection grid. Pixel j covers
// [origin + j * pixel_size, origin + (j + 1) * pixel_size) and is reported
// at its center.
struct CameraGrid {
  double pixel_size = 1.0;  // micrometers
  std::int64_t n_pixels = 72;
  double origin = -36.0;  // left edge of pixel 0, micrometers

  double center(std::int64_t j) const { return origin + (static_cast<double>(j) + 0.5) * pixel_size; }
  double span() const { return static_cast<double>(n_pixels) * pixel_size; }

  // Grid centered on the profile, covering +- half_width_sigmas * sigma_z
  // rounded up to whole pixels.
  static CameraGrid centered(const InterferogramParams& p, double pixel_size = 1.0,
                             double half_width_sigmas = 3.0);
};

struct Image {
  std::vector<double> counts;
  CameraGrid grid;
  std::int64_t dropped = 0;  // samples that fell outside the grid
};

struct FitOptions {
  bool fit_amplitude = true;
  bool fit_z_com = true;
  bool fit_sigma_z = true;
  bool fit_visibility = true;
  bool fit_wavelength = false;  // default: wavelength pinned by ballistics
  bool fit_phase = true;
  bool fit_background = true;
  // Weight residuals by 1 / max(model, 1) (Poisson variance). The unweighted
  // alternative is kept for diagnostics; its reported errors overstate the
  // high-visibility precision.
  bool poisson_weighted = true;
  int max_iterations = 200;
  // Starting point; when absent the start is derived from the image moments
  // and the fringe phase is multi-started over {0, pi/2, pi, 3 pi/2}.
  std::optional<InterferogramParams> init;
};

struct FitResult {
  InterferogramParams params;
  InterferogramParams errors;  // 1-sigma; zero entries for fixed parameters
  double chi2 = 0.0;           // Poisson-normalized, per degree of freedom
  bool converged = false;
  int iterations = 0;
  int n_free = 0;
};

// Thrown for images or configurations a fit cannot start from (flat or
// empty images, no free parameters, inconsistent sizes).
class fit_error : public std::invalid_argument {
 public:
  explicit fit_error(const std::string& what) : std::invalid_argument(what) {}
};

inline constexpr double kPlanckJs = 6.62607015e-34;
inline constexpr double kRb87MassKg = 1.44316060e-25;

// Fringe period of two point sources separated by `separation_um` after a
// free flight of tof_s seconds: lambda = h * tof / (mass * separation),
// returned in micrometers. All arguments must be positive.
double fringe_wavelength(double tof_s, double separation_um,
                         double mass_kg = kRb87MassKg);

// Profile density at a point, counts per micrometer.
double density_profile(const InterferogramParams& p, double z);

// n independent positions drawn from the background-free profile by
// inverse-CDF lookup on a grid finer than wavelength / 50 and sigma_z / 20,
// supported on +- 8 sigma_z. Deterministic for a given seed. Requires
// n >= 1, positive amplitude / sigma_z / wavelength, and visibility in
// [0, 1].
std::vector<double> sample_atoms(const InterferogramParams& p, std::int64_t n,
                                 std::uint64_t seed);

// Histogram of positions on the grid. The grid must cover the sampled
// mass: more than 1% of positions falling outside is an error. Out-of-grid
// stragglers below that are counted in Image::dropped.
Image bin_to_image(const std::vector<double>& positions, const CameraGrid& grid);

// Pixel-integrated expected counts (including background) for the profile,
// by fixed-order Gauss-Legendre quadrature per pixel; relative accuracy is
// ~1e-10 for pixels up to about a quarter wavelength.
std::vector<double> expected_counts(const InterferogramParams& p,
                                    const CameraGrid& grid);

// Damped least-squares fit of the pixel-integrated profile to an image.
// Deterministic: identical inputs give bit-identical results. The fitted
// visibility is canonicalized to be non-negative (a negative visibility is
// folded into a pi phase shift) and the phase is reported in (-pi, pi].
// z_ref is never fitted; it defines the phase reference. Returns
// converged = false with the best parameters found when the iteration cap
// is reached. Throws fit_error for flat or empty images.
FitResult fit_interferogram(const Image& image, const FitOptions& options = {});

// Convenience wrapper that pins the fixed parameters (wavelength, z_ref,
// anything excluded by the options) to `fixed`, derives the envelope start
// from the image, and multi-starts the fringe phase over {0, pi/2, pi,
// 3 pi/2}, keeping the best fit. This is the fit the simulated pipelines
// use on every synthetic shot.
FitResult fit_interferogram_multistart(const Image& image,
                                       const InterferogramParams& fixed,
                                       const FitOptions& options = {});

struct McFitSummary {
  int trials = 0;
  int failed = 0;                    // non-converged fits
  double mean_abs_error = 0.0;       // mean |fitted - true| phase, wrapped
  double stddev_error = 0.0;         // scatter of the wrapped phase error
  double mean_reported_error = 0.0;  // mean 1-sigma phase error from the fits
  double mean_visibility = 0.0;      // mean fitted visibility
};

// Repeated sample -> bin -> fit cycle against the known truth. Trial t
// draws its atoms with a seed derived from (seed, t), so results are
// reproducible and independent of execution order. Failed fits are
// excluded from the averages and counted.
McFitSummary mc_fit_error(const InterferogramParams& p, const CameraGrid& grid,
                          std::int64_t n_atoms, int trials, std::uint64_t seed,
                          const FitOptions& options = {});

}  // namespace gpamp
