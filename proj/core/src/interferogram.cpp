#include "gpamp/interferogram.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gpamp/clock_state.hpp"
#include "gpamp/rng.hpp"

namespace gpamp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// 5-point Gauss-Legendre rule on [-1, 1].
constexpr double kGlNode[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                               0.5384693101056831, 0.9061798459386640};
constexpr double kGlWeight[5] = {0.2369268850561891, 0.4786286704993665,
                                 0.5688888888888889, 0.4786286704993665,
                                 0.2369268850561891};

constexpr int kParamCount = 7;

enum ParamIndex {
  kAmplitude = 0,
  kZCom = 1,
  kSigmaZ = 2,
  kVisibility = 3,
  kWavelength = 4,
  kPhase = 5,
  kBackground = 6,
};

double get_param(const InterferogramParams& p, int index) {
  switch (index) {
    case kAmplitude: return p.amplitude;
    case kZCom: return p.z_com;
    case kSigmaZ: return p.sigma_z;
    case kVisibility: return p.visibility;
    case kWavelength: return p.wavelength;
    case kPhase: return p.phase;
    default: return p.background;
  }
}

void set_param(InterferogramParams& p, int index, double value) {
  switch (index) {
    case kAmplitude: p.amplitude = value; break;
    case kZCom: p.z_com = value; break;
    case kSigmaZ: p.sigma_z = value; break;
    case kVisibility: p.visibility = value; break;
    case kWavelength: p.wavelength = value; break;
    case kPhase: p.phase = value; break;
    default: p.background = value; break;
  }
}

// Density and its derivative against every parameter at one point.
void density_with_gradient(const InterferogramParams& p, double z,
                           double* value, double grad[kParamCount]) {
  const double u = (z - p.z_com) / p.sigma_z;
  const double gauss = std::exp(-0.5 * u * u);
  const double arg = kTwoPi * (z - p.z_ref) / p.wavelength + p.phase;
  const double s = std::sin(arg);
  const double c = std::cos(arg);
  const double fringe = 1.0 + p.visibility * s;
  const double envelope = p.amplitude * gauss;

  *value = envelope * fringe + p.background;
  grad[kAmplitude] = gauss * fringe;
  grad[kZCom] = envelope * fringe * u / p.sigma_z;
  grad[kSigmaZ] = envelope * fringe * u * u / p.sigma_z;
  grad[kVisibility] = envelope * s;
  grad[kWavelength] =
      envelope * p.visibility * c * (-kTwoPi * (z - p.z_ref) / (p.wavelength * p.wavelength));
  grad[kPhase] = envelope * p.visibility * c;
  grad[kBackground] = 1.0;
}

// Pixel-integrated model and Jacobian rows for the free parameters.
void evaluate_model(const InterferogramParams& p, const CameraGrid& grid,
                    const std::vector<int>& free_indices, Eigen::VectorXd* model,
                    Eigen::MatrixXd* jacobian) {
  const auto n = static_cast<Eigen::Index>(grid.n_pixels);
  model->resize(n);
  if (jacobian) jacobian->resize(n, static_cast<Eigen::Index>(free_indices.size()));
  double grad[kParamCount];
  for (Eigen::Index j = 0; j < n; ++j) {
    const double a = grid.origin + static_cast<double>(j) * grid.pixel_size;
    const double half = 0.5 * grid.pixel_size;
    const double mid = a + half;
    double value = 0.0;
    double row[kParamCount] = {0, 0, 0, 0, 0, 0, 0};
    for (int q = 0; q < 5; ++q) {
      double density = 0.0;
      density_with_gradient(p, mid + half * kGlNode[q], &density, grad);
      const double w = kGlWeight[q] * half;
      value += w * density;
      if (jacobian)
        for (int k = 0; k < kParamCount; ++k) row[k] += w * grad[k];
    }
    (*model)(j) = value;
    if (jacobian)
      for (std::size_t k = 0; k < free_indices.size(); ++k)
        (*jacobian)(j, static_cast<Eigen::Index>(k)) = row[free_indices[k]];
  }
}

bool params_valid(const InterferogramParams& p, const CameraGrid& grid) {
  if (!(p.amplitude > 0.0) || !std::isfinite(p.amplitude)) return false;
  if (!(p.sigma_z > 0.0) || !std::isfinite(p.sigma_z)) return false;
  if (!(p.wavelength > 0.0) || !std::isfinite(p.wavelength)) return false;
  if (!(std::abs(p.visibility) <= 1.5)) return false;
  if (!std::isfinite(p.z_com) ||
      std::abs(p.z_com - (grid.origin + 0.5 * grid.span())) > 2.0 * grid.span())
    return false;
  if (!std::isfinite(p.phase) || !std::isfinite(p.background)) return false;
  return true;
}

struct LmOutcome {
  InterferogramParams params;
  double cost = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
};

double weighted_cost(const Eigen::VectorXd& residual, const Eigen::VectorXd& weight) {
  return residual.cwiseProduct(weight).dot(residual);
}

Eigen::VectorXd residual_weights(const Eigen::VectorXd& model, bool poisson) {
  if (!poisson) return Eigen::VectorXd::Ones(model.size());
  return model.cwiseMax(1.0).cwiseInverse();
}

// One damped least-squares solve under a fixed weight vector. Freezing the
// weights keeps the objective an honest function of the parameters, so the
// gradient is exact and accepted steps strictly decrease the cost; the
// variance refresh happens between solves, not inside them.
LmOutcome run_lm_fixed_weights(const Image& image,
                               const InterferogramParams& start,
                               const std::vector<int>& free_indices,
                               const FitOptions& options,
                               const Eigen::VectorXd& weight) {
  const auto n = static_cast<Eigen::Index>(image.grid.n_pixels);
  const auto counts =
      Eigen::Map<const Eigen::VectorXd>(image.counts.data(), n);

  LmOutcome out;
  out.params = start;

  Eigen::VectorXd model;
  Eigen::MatrixXd jac;
  evaluate_model(out.params, image.grid, free_indices, &model, &jac);
  Eigen::VectorXd residual = counts - model;
  out.cost = weighted_cost(residual, weight);

  double lambda = 1e-3;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    out.iterations = iter + 1;
    const Eigen::MatrixXd jw = weight.asDiagonal() * jac;
    const Eigen::MatrixXd normal = jac.transpose() * jw;
    const Eigen::VectorXd gradient = jw.transpose() * residual;

    if (gradient.cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + out.cost)) {
      out.converged = true;
      break;
    }

    Eigen::MatrixXd damped = normal;
    for (Eigen::Index k = 0; k < damped.rows(); ++k)
      damped(k, k) += lambda * std::max(normal(k, k), 1e-30);
    const Eigen::VectorXd step = damped.ldlt().solve(gradient);
    if (!step.allFinite()) {
      lambda *= 10.0;
      if (lambda > 1e14) break;
      continue;
    }

    InterferogramParams candidate = out.params;
    for (std::size_t k = 0; k < free_indices.size(); ++k)
      set_param(candidate, free_indices[k],
                get_param(out.params, free_indices[k]) + step(static_cast<Eigen::Index>(k)));

    bool accepted = false;
    if (params_valid(candidate, image.grid)) {
      Eigen::VectorXd cand_model;
      Eigen::MatrixXd cand_jac;
      evaluate_model(candidate, image.grid, free_indices, &cand_model, &cand_jac);
      const Eigen::VectorXd cand_residual = counts - cand_model;
      const double cand_cost = weighted_cost(cand_residual, weight);
      if (cand_cost <= out.cost) {
        const double improvement = out.cost - cand_cost;
        double step_scale = 0.0;
        for (std::size_t k = 0; k < free_indices.size(); ++k) {
          const double reference =
              std::max(1.0, std::abs(get_param(out.params, free_indices[k])));
          step_scale = std::max(
              step_scale, std::abs(step(static_cast<Eigen::Index>(k))) / reference);
        }
        out.params = candidate;
        model.swap(cand_model);
        jac.swap(cand_jac);
        residual = cand_residual;
        out.cost = cand_cost;
        accepted = true;
        lambda = std::max(lambda / 3.0, 1e-12);
        if (improvement <= 1e-13 * (out.cost + 1e-30) || step_scale <= 1e-11) {
          out.converged = true;
          break;
        }
      }
    }
    if (!accepted) {
      lambda *= 10.0;
      if (lambda > 1e14) {
        // Damping saturated: the surface is locally flat along all free
        // directions, which is as converged as the data allows.
        out.converged = gradient.cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + out.cost);
        break;
      }
    }
  }
  return out;
}

// Full solve: fixed-weight rounds with the Poisson variances refreshed from
// the converged model between rounds, until the refresh no longer moves the
// solution. Unweighted fits need a single round (their weights are constant).
LmOutcome run_lm(const Image& image, const InterferogramParams& start,
                 const std::vector<int>& free_indices, const FitOptions& options) {
  Eigen::VectorXd model;
  evaluate_model(start, image.grid, free_indices, &model, nullptr);
  Eigen::VectorXd weight = residual_weights(model, options.poisson_weighted);
  LmOutcome out = run_lm_fixed_weights(image, start, free_indices, options, weight);
  if (!options.poisson_weighted) return out;

  for (int round = 0; round < 3; ++round) {
    evaluate_model(out.params, image.grid, free_indices, &model, nullptr);
    const Eigen::VectorXd refreshed = residual_weights(model, true);
    if (((refreshed - weight).cwiseAbs().cwiseQuotient(weight.cwiseMax(1e-300)))
            .maxCoeff() <= 1e-10)
      break;
    weight = refreshed;
    LmOutcome next =
        run_lm_fixed_weights(image, out.params, free_indices, options, weight);
    next.iterations += out.iterations;
    const bool moved = [&] {
      for (int k : free_indices) {
        const double a = get_param(out.params, k);
        const double b = get_param(next.params, k);
        if (std::abs(b - a) > 1e-12 * std::max(1.0, std::abs(a))) return true;
      }
      return false;
    }();
    out = next;
    if (!moved) break;
  }
  return out;
}

InterferogramParams moment_start(const Image& image, const InterferogramParams& fixed) {
  const auto& counts = image.counts;
  const double lo = *std::min_element(counts.begin(), counts.end());
  double mass = 0.0, mean = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const double w = counts[j] - lo;
    mass += w;
    mean += w * image.grid.center(static_cast<std::int64_t>(j));
  }
  mean /= mass;
  double var = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const double d = image.grid.center(static_cast<std::int64_t>(j)) - mean;
    var += (counts[j] - lo) * d * d;
  }
  var /= mass;

  InterferogramParams start = fixed;
  start.z_com = mean;
  start.sigma_z = std::clamp(std::sqrt(std::max(var, 0.0)),
                             2.0 * image.grid.pixel_size, 0.5 * image.grid.span());
  start.background = std::max(lo, 0.0) / image.grid.pixel_size;
  start.amplitude = std::max(
      mass * image.grid.pixel_size / (std::sqrt(kTwoPi) * start.sigma_z) /
          image.grid.pixel_size,
      1e-6);
  start.visibility = 0.5;
  return start;
}

}  // namespace

CameraGrid CameraGrid::centered(const InterferogramParams& p, double pixel_size,
                                double half_width_sigmas) {
  if (!(pixel_size > 0.0)) throw fit_error("pixel size must be positive");
  CameraGrid grid;
  grid.pixel_size = pixel_size;
  const double half_width = half_width_sigmas * p.sigma_z;
  const auto half_pixels =
      static_cast<std::int64_t>(std::ceil(half_width / pixel_size));
  grid.n_pixels = std::max<std::int64_t>(2 * half_pixels, 16);
  grid.origin = p.z_com - 0.5 * static_cast<double>(grid.n_pixels) * pixel_size;
  return grid;
}

double fringe_wavelength(double tof_s, double separation_um, double mass_kg) {
  if (!(tof_s > 0.0) || !(separation_um > 0.0) || !(mass_kg > 0.0))
    throw std::domain_error("fringe wavelength needs positive inputs");
  // h * t has units J s^2 = kg m^2; dividing by (kg * m) leaves meters once
  // the separation is converted, so the micrometers cancel out neatly:
  const double separation_m = separation_um * 1e-6;
  const double lambda_m = kPlanckJs * tof_s / (mass_kg * separation_m);
  return lambda_m * 1e6;
}

double density_profile(const InterferogramParams& p, double z) {
  return p.amplitude * std::exp(-(z - p.z_com) * (z - p.z_com) / (2.0 * p.sigma_z * p.sigma_z)) *
             (1.0 + p.visibility * std::sin(kTwoPi * (z - p.z_ref) / p.wavelength + p.phase)) +
         p.background;
}

std::vector<double> sample_atoms(const InterferogramParams& p, std::int64_t n,
                                 std::uint64_t seed) {
  if (n < 1) throw std::domain_error("sample_atoms needs n >= 1");
  if (!(p.amplitude > 0.0) || !(p.sigma_z > 0.0) || !(p.wavelength > 0.0))
    throw std::domain_error("sample_atoms needs a positive profile");
  if (!(p.visibility >= 0.0 && p.visibility <= 1.0))
    throw std::domain_error("sample_atoms needs visibility in [0, 1]");

  // Tabulate the background-free density on a grid fine enough to resolve
  // both the fringe and the envelope, then invert the piecewise-linear CDF.
  const double lo = p.z_com - 8.0 * p.sigma_z;
  const double hi = p.z_com + 8.0 * p.sigma_z;
  const double step_target = std::min(p.wavelength / 50.0, p.sigma_z / 20.0);
  const auto cells = static_cast<std::size_t>(std::ceil((hi - lo) / step_target));
  const double h = (hi - lo) / static_cast<double>(cells);

  std::vector<double> density(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i)
    density[i] =
        std::max(density_profile(p, lo + h * static_cast<double>(i)) - p.background, 0.0);

  std::vector<double> cdf(cells + 1, 0.0);
  for (std::size_t i = 1; i <= cells; ++i)
    cdf[i] = cdf[i - 1] + 0.5 * (density[i - 1] + density[i]) * h;
  const double total = cdf.back();
  if (!(total > 0.0)) throw std::domain_error("profile has no mass to sample");

  Rng rng(seed);
  std::vector<double> positions;
  positions.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) {
    const double target = rng.uniform() * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    const auto cell = static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(it - cdf.begin() - 1, 0,
                                   static_cast<std::ptrdiff_t>(cells - 1)));
    const double need = target - cdf[cell];
    const double d0 = density[cell];
    const double d1 = density[cell + 1];
    // Area within the cell grows as h (d0 t + (d1 - d0) t^2 / 2); solve for t.
    double t;
    const double slope = d1 - d0;
    if (std::abs(slope) * h < 1e-14 * (d0 + 1e-300)) {
      t = need / std::max(d0 * h, 1e-300);
    } else {
      const double disc = std::max(d0 * d0 + 2.0 * slope * need / h, 0.0);
      t = (std::sqrt(disc) - d0) / slope;
    }
    t = std::clamp(t, 0.0, 1.0);
    positions.push_back(lo + h * (static_cast<double>(cell) + t));
  }
  return positions;
}

Image bin_to_image(const std::vector<double>& positions, const CameraGrid& grid) {
  if (grid.n_pixels < 1) throw fit_error("camera grid needs at least one pixel");
  if (!(grid.pixel_size > 0.0)) throw fit_error("pixel size must be positive");
  Image image;
  image.grid = grid;
  image.counts.assign(static_cast<std::size_t>(grid.n_pixels), 0.0);
  for (double z : positions) {
    const double offset = (z - grid.origin) / grid.pixel_size;
    if (offset < 0.0 || offset >= static_cast<double>(grid.n_pixels)) {
      ++image.dropped;
      continue;
    }
    image.counts[static_cast<std::size_t>(offset)] += 1.0;
  }
  if (!positions.empty() &&
      static_cast<double>(image.dropped) > 0.01 * static_cast<double>(positions.size()))
    throw fit_error("camera grid covers less than 99% of the sampled mass");
  return image;
}

std::vector<double> expected_counts(const InterferogramParams& p,
                                    const CameraGrid& grid) {
  std::vector<int> no_free;
  Eigen::VectorXd model;
  evaluate_model(p, grid, no_free, &model, nullptr);
  return {model.data(), model.data() + model.size()};
}

FitResult fit_interferogram(const Image& image, const FitOptions& options) {
  const auto n = static_cast<std::int64_t>(image.counts.size());
  if (n == 0 || n != image.grid.n_pixels)
    throw fit_error("image size does not match its grid");
  const double lo = *std::min_element(image.counts.begin(), image.counts.end());
  const double hi = *std::max_element(image.counts.begin(), image.counts.end());
  if (!(hi > lo))
    throw fit_error("image is flat; the profile is unidentifiable");

  const bool free_flags[kParamCount] = {
      options.fit_amplitude, options.fit_z_com,      options.fit_sigma_z,
      options.fit_visibility, options.fit_wavelength, options.fit_phase,
      options.fit_background};
  std::vector<int> free_indices;
  for (int k = 0; k < kParamCount; ++k)
    if (free_flags[k]) free_indices.push_back(k);
  if (free_indices.empty()) throw fit_error("fit needs at least one free parameter");
  if (static_cast<std::int64_t>(free_indices.size()) >= n)
    throw fit_error("fit needs fewer free parameters than pixels");

  // Starting points: explicit init wins; otherwise image moments with the
  // fringe phase multi-started around the circle.
  std::vector<InterferogramParams> starts;
  if (options.init) {
    starts.push_back(*options.init);
  } else {
    InterferogramParams base = moment_start(image, InterferogramParams{});
    if (options.fit_wavelength) {
      // Coarse wavelength scan: best quadrature fringe power on the
      // background-subtracted residual decides the starting period.
      Eigen::VectorXd envelope;
      std::vector<int> none;
      InterferogramParams smooth = base;
      smooth.visibility = 0.0;
      evaluate_model(smooth, image.grid, none, &envelope, nullptr);
      double best_power = -1.0, best_lambda = base.wavelength;
      const double lo_lambda = 4.0 * image.grid.pixel_size;
      const double hi_lambda = 0.5 * image.grid.span();
      for (int s = 0; s < 64; ++s) {
        const double lambda =
            lo_lambda * std::pow(hi_lambda / lo_lambda, s / 63.0);
        double cs = 0.0, sn = 0.0;
        for (std::int64_t j = 0; j < n; ++j) {
          const double z = image.grid.center(j);
          const double r = image.counts[static_cast<std::size_t>(j)] -
                           envelope(static_cast<Eigen::Index>(j));
          cs += r * std::cos(kTwoPi * z / lambda);
          sn += r * std::sin(kTwoPi * z / lambda);
        }
        const double power = cs * cs + sn * sn;
        if (power > best_power) {
          best_power = power;
          best_lambda = lambda;
        }
      }
      base.wavelength = best_lambda;
    }
    for (double phase0 : {0.0, 0.5 * std::numbers::pi, std::numbers::pi,
                          1.5 * std::numbers::pi}) {
      InterferogramParams start = base;
      start.phase = phase0;
      starts.push_back(start);
    }
  }

  LmOutcome best;
  for (const auto& start : starts) {
    if (!params_valid(start, image.grid))
      throw fit_error("fit starting point is invalid for this grid");
    const LmOutcome outcome = run_lm(image, start, free_indices, options);
    if (outcome.cost < best.cost) best = outcome;
  }

  // Canonical form: non-negative visibility, phase on the principal branch.
  if (best.params.visibility < 0.0) {
    best.params.visibility = -best.params.visibility;
    best.params.phase += std::numbers::pi;
  }
  best.params.phase = wrap_angle(best.params.phase);
  best.params.sigma_z = std::abs(best.params.sigma_z);

  FitResult result;
  result.params = best.params;
  result.converged = best.converged;
  result.iterations = best.iterations;
  result.n_free = static_cast<int>(free_indices.size());

  Eigen::VectorXd model;
  Eigen::MatrixXd jac;
  evaluate_model(result.params, image.grid, free_indices, &model, &jac);
  const auto counts = Eigen::Map<const Eigen::VectorXd>(image.counts.data(),
                                                        static_cast<Eigen::Index>(n));
  const Eigen::VectorXd residual = counts - model;

  const auto dof = static_cast<double>(n - static_cast<std::int64_t>(free_indices.size()));
  result.chi2 = residual.cwiseProduct(model.cwiseMax(1.0).cwiseInverse())
                    .dot(residual) / dof;

  const Eigen::VectorXd weight = residual_weights(model, options.poisson_weighted);
  const Eigen::MatrixXd normal = jac.transpose() * (weight.asDiagonal() * jac);
  const Eigen::MatrixXd covariance =
      normal.ldlt().solve(Eigen::MatrixXd::Identity(normal.rows(), normal.cols()));
  const double scale =
      options.poisson_weighted ? 1.0 : weighted_cost(residual, weight) / dof;
  result.errors = InterferogramParams{};
  for (int k = 0; k < kParamCount; ++k) set_param(result.errors, k, 0.0);
  for (std::size_t k = 0; k < free_indices.size(); ++k) {
    const double var = covariance(static_cast<Eigen::Index>(k),
                                  static_cast<Eigen::Index>(k)) * scale;
    set_param(result.errors, free_indices[k], std::sqrt(std::max(var, 0.0)));
  }
  return result;
}

FitResult fit_interferogram_multistart(const Image& image,
                                       const InterferogramParams& fixed,
                                       const FitOptions& options) {
  // Envelope start from the image moments, fixed parameters from `fixed`.
  InterferogramParams base = moment_start(image, fixed);
  if (!options.fit_wavelength) base.wavelength = fixed.wavelength;
  base.z_ref = fixed.z_ref;

  FitResult best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (double phase0 : {0.0, 0.5 * std::numbers::pi, std::numbers::pi,
                        1.5 * std::numbers::pi}) {
    FitOptions attempt = options;
    attempt.init = base;
    attempt.init->phase = phase0;
    const FitResult fit = fit_interferogram(image, attempt);
    if (fit.chi2 < best_cost) {
      best_cost = fit.chi2;
      best = fit;
    }
  }
  return best;
}

McFitSummary mc_fit_error(const InterferogramParams& p, const CameraGrid& grid,
                          std::int64_t n_atoms, int trials, std::uint64_t seed,
                          const FitOptions& options) {
  if (trials < 1) throw std::domain_error("mc_fit_error needs trials >= 1");
  McFitSummary summary;
  summary.trials = trials;

  std::vector<double> errors;
  errors.reserve(static_cast<std::size_t>(trials));
  double reported_sum = 0.0;
  double visibility_sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(seed, 0x4d43u, static_cast<std::uint64_t>(t));
    const auto positions = sample_atoms(p, n_atoms, trial_seed);
    const Image image = bin_to_image(positions, grid);
    const FitResult best = options.init
                               ? fit_interferogram(image, options)
                               : fit_interferogram_multistart(image, p, options);

    if (!best.converged) {
      ++summary.failed;
      continue;
    }
    errors.push_back(wrap_angle(best.params.phase - p.phase));
    reported_sum += best.errors.phase;
    visibility_sum += best.params.visibility;
  }

  const auto used = static_cast<double>(errors.size());
  if (!errors.empty()) {
    double abs_sum = 0.0, sum = 0.0;
    for (double e : errors) {
      abs_sum += std::abs(e);
      sum += e;
    }
    summary.mean_abs_error = abs_sum / used;
    const double mean = sum / used;
    double var = 0.0;
    for (double e : errors) var += (e - mean) * (e - mean);
    summary.stddev_error = errors.size() > 1 ? std::sqrt(var / (used - 1.0)) : 0.0;
    summary.mean_reported_error = reported_sum / used;
    summary.mean_visibility = visibility_sum / used;
  }
  return summary;
}

}  // namespace gpamp
