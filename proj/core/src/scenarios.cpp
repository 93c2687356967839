#include "gpamp/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gpamp/clock_state.hpp"
#include "gpamp/io.hpp"
#include "gpamp/rng.hpp"

namespace gpamp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

using nlohmann::json;

std::string printf_string(const char* format, ...) {
  char buffer[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buffer, sizeof(buffer), format, args);
  va_end(args);
  return buffer;
}

}  // namespace

bool is_known_scenario(const std::string& id) {
  return std::find_if(kScenarioIds.begin(), kScenarioIds.end(),
                      [&](const char* s) { return id == s; }) != kScenarioIds.end();
}

double ImagingDefaults::wavelength_um() const {
  return fringe_wavelength(tof_s, separation_um, mass_kg);
}

InterferogramParams ImagingDefaults::params(double visibility, double phase) const {
  InterferogramParams p;
  p.amplitude = amplitude;
  p.z_com = z_com_um;
  p.sigma_z = sigma_z_um;
  p.visibility = visibility;
  p.wavelength = wavelength_um();
  p.z_ref = z_ref_um;
  p.phase = phase;
  p.background = background;
  return p;
}

CameraGrid ImagingDefaults::grid() const {
  InterferogramParams p = params(1.0, 0.0);
  return CameraGrid::centered(p, pixel_um, half_width_sigmas);
}

// ---- config parsing -------------------------------------------------------

namespace {

struct Parser {
  ValidationReport report;

  void error(const std::string& pointer, const std::string& message) {
    report.errors.push_back({pointer, message});
  }
  void warn(const std::string& pointer, const std::string& message) {
    report.warnings.push_back({pointer, message});
  }

  bool number(const json& node, const std::string& pointer, double lo, double hi,
              double* out) {
    if (!node.is_number()) {
      error(pointer, "must be a number");
      return false;
    }
    const double value = node.get<double>();
    if (!std::isfinite(value) || value < lo || value > hi) {
      error(pointer, printf_string("must lie in [%g, %g]", lo, hi));
      return false;
    }
    *out = value;
    return true;
  }

  void check_known_keys(const json& node, const std::string& prefix,
                        std::initializer_list<const char*> known) {
    for (const auto& item : node.items()) {
      bool ok = false;
      for (const char* key : known)
        if (item.key() == key) ok = true;
      if (!ok) warn(prefix + "/" + item.key(), "unknown key ignored");
    }
  }
};

}  // namespace

ScenarioConfig config_from_json_text(const std::string& text,
                                     ValidationReport* report) {
  ScenarioConfig config;
  Parser parser;

  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    parser.error("", "document is not valid JSON");
    if (report) *report = parser.report;
    return config;
  }
  if (!doc.is_object()) {
    parser.error("", "document must be a JSON object");
    if (report) *report = parser.report;
    return config;
  }

  parser.check_known_keys(doc, "",
                          {"scenario", "seed", "population", "phi_grid", "atoms",
                           "noise", "imaging", "replications"});

  if (!doc.contains("scenario")) {
    parser.error("/scenario", "required");
  } else if (!doc["scenario"].is_string()) {
    parser.error("/scenario", "must be a string");
  } else {
    config.scenario = doc["scenario"].get<std::string>();
    if (!is_known_scenario(config.scenario)) {
      std::string known;
      for (const char* id : kScenarioIds) {
        if (!known.empty()) known += ", ";
        known += id;
      }
      parser.error("/scenario", "unknown scenario; expected one of: " + known);
    }
  }

  if (doc.contains("seed")) {
    const auto& seed = doc["seed"];
    if (!seed.is_number_integer() || seed.get<double>() < 0)
      parser.error("/seed", "must be a non-negative integer");
    else
      config.seed = seed.get<std::uint64_t>();
  } else {
    parser.warn("/seed", printf_string("missing; using the default seed %llu",
                                       static_cast<unsigned long long>(kDefaultSeed)));
  }

  if (doc.contains("population")) {
    const auto& pop = doc["population"];
    if (!pop.is_object()) {
      parser.error("/population", "must be an object");
    } else {
      parser.check_known_keys(pop, "/population", {"p2", "p2_list", "uncertainty"});
      if (pop.contains("p2"))
        parser.number(pop["p2"], "/population/p2", 0.0, 1.0, &config.p2);
      if (pop.contains("uncertainty"))
        parser.number(pop["uncertainty"], "/population/uncertainty", 0.0, 0.5,
                      &config.p2_uncertainty);
      if (pop.contains("p2_list")) {
        if (!pop["p2_list"].is_array()) {
          parser.error("/population/p2_list", "must be an array of numbers");
        } else {
          std::size_t index = 0;
          for (const auto& item : pop["p2_list"]) {
            double value = 0.0;
            if (parser.number(item,
                              printf_string("/population/p2_list/%zu", index), 0.0,
                              1.0, &value))
              config.p2_list.push_back(value);
            ++index;
          }
        }
      }
    }
  }

  if (doc.contains("phi_grid")) {
    const auto& grid = doc["phi_grid"];
    if (!grid.is_object()) {
      parser.error("/phi_grid", "must be an object");
    } else {
      parser.check_known_keys(grid, "/phi_grid", {"values", "start", "stop", "points"});
      if (grid.contains("values")) {
        if (!grid["values"].is_array()) {
          parser.error("/phi_grid/values", "must be an array of numbers");
        } else {
          std::size_t index = 0;
          for (const auto& item : grid["values"]) {
            double value = 0.0;
            if (parser.number(item, printf_string("/phi_grid/values/%zu", index),
                              -1e6, 1e6, &value))
              config.phi_grid.push_back(value);
            ++index;
          }
        }
      } else {
        double start = 0.0, stop = kTwoPi, points = 241.0;
        bool ok = true;
        if (grid.contains("start"))
          ok &= parser.number(grid["start"], "/phi_grid/start", -1e6, 1e6, &start);
        if (grid.contains("stop"))
          ok &= parser.number(grid["stop"], "/phi_grid/stop", -1e6, 1e6, &stop);
        if (grid.contains("points"))
          ok &= parser.number(grid["points"], "/phi_grid/points", 2.0, 1e6, &points);
        if (ok && !(stop > start))
          parser.error("/phi_grid/stop", "must exceed start");
        else if (ok) {
          const auto n = static_cast<std::size_t>(points);
          for (std::size_t k = 0; k < n; ++k)
            config.phi_grid.push_back(
                start + (stop - start) * static_cast<double>(k) /
                            static_cast<double>(n - 1));
        }
      }
    }
  }

  if (doc.contains("atoms")) {
    const auto& atoms = doc["atoms"];
    if (!atoms.is_object()) {
      parser.error("/atoms", "must be an object");
    } else {
      parser.check_known_keys(atoms, "/atoms", {"n", "cycles"});
      if (atoms.contains("n"))
        parser.number(atoms["n"], "/atoms/n", 1.0, 1e12, &config.atoms);
      if (atoms.contains("cycles"))
        parser.number(atoms["cycles"], "/atoms/cycles", 1.0, 1e9, &config.cycles);
    }
  }

  if (doc.contains("noise")) {
    const auto& noise = doc["noise"];
    if (!noise.is_object()) {
      parser.error("/noise", "must be an object");
    } else {
      parser.check_known_keys(noise, "/noise", {"technical"});
      if (noise.contains("technical"))
        parser.number(noise["technical"], "/noise/technical", 0.0, 100.0,
                      &config.technical);
    }
  }

  if (doc.contains("imaging")) {
    const auto& imaging = doc["imaging"];
    if (!imaging.is_object()) {
      parser.error("/imaging", "must be an object");
    } else {
      parser.check_known_keys(
          imaging, "/imaging",
          {"separation_um", "tof_s", "mass_kg", "sigma_z_um", "pixel_um",
           "amplitude", "background", "z_com_um", "z_ref_um", "half_width_sigmas"});
      auto& target = config.imaging;
      if (imaging.contains("separation_um"))
        parser.number(imaging["separation_um"], "/imaging/separation_um", 1e-6, 1e6,
                      &target.separation_um);
      if (imaging.contains("tof_s"))
        parser.number(imaging["tof_s"], "/imaging/tof_s", 1e-9, 1e3, &target.tof_s);
      if (imaging.contains("mass_kg"))
        parser.number(imaging["mass_kg"], "/imaging/mass_kg", 1e-30, 1e-20,
                      &target.mass_kg);
      if (imaging.contains("sigma_z_um"))
        parser.number(imaging["sigma_z_um"], "/imaging/sigma_z_um", 1e-3, 1e6,
                      &target.sigma_z_um);
      if (imaging.contains("pixel_um"))
        parser.number(imaging["pixel_um"], "/imaging/pixel_um", 1e-3, 1e3,
                      &target.pixel_um);
      if (imaging.contains("amplitude"))
        parser.number(imaging["amplitude"], "/imaging/amplitude", 1e-9, 1e12,
                      &target.amplitude);
      if (imaging.contains("background"))
        parser.number(imaging["background"], "/imaging/background", 0.0, 1e12,
                      &target.background);
      if (imaging.contains("z_com_um"))
        parser.number(imaging["z_com_um"], "/imaging/z_com_um", -1e6, 1e6,
                      &target.z_com_um);
      if (imaging.contains("z_ref_um"))
        parser.number(imaging["z_ref_um"], "/imaging/z_ref_um", -1e6, 1e6,
                      &target.z_ref_um);
      if (imaging.contains("half_width_sigmas"))
        parser.number(imaging["half_width_sigmas"], "/imaging/half_width_sigmas",
                      2.0, 16.0, &target.half_width_sigmas);
    }
  }

  if (doc.contains("replications")) {
    double value = 0.0;
    if (parser.number(doc["replications"], "/replications", 1.0, 100000.0, &value))
      config.replications = static_cast<int>(value);
  }

  // Cross-field rules: sweeps that scan through phi = pi need populations
  // away from 1/2, where the fringe contrast vanishes.
  const bool scans_pi = config.scenario == "fig4a" || config.scenario == "fig4b" ||
                        config.scenario == "end_to_end";
  if (scans_pi && std::abs(config.p2 - 0.5) < 1e-4)
    parser.error("/population/p2",
                 "amplified sweeps need p2 away from 1/2 (zero contrast at phi = pi)");
  const bool traces = config.scenario == "fig2d" || config.scenario == "figS5";
  if (traces) {
    for (std::size_t i = 0; i < config.p2_list.size(); ++i) {
      if (std::abs(config.p2_list[i] - 0.5) < 1e-4)
        parser.error(printf_string("/population/p2_list/%zu", i),
                     "phase traces need populations away from 1/2 (zero contrast "
                     "at phi = pi)");
    }
  }

  if (report) *report = parser.report;
  return config;
}

ScenarioConfig config_from_file(const std::string& path, ValidationReport* report) {
  return config_from_json_text(read_text_file(path), report);
}

ValidationReport validate_config_text(const std::string& text) {
  ValidationReport report;
  config_from_json_text(text, &report);
  return report;
}

// ---- grids ----------------------------------------------------------------

std::vector<double> default_phi_grid() {
  std::vector<double> grid;
  grid.reserve(282);
  for (int k = 0; k <= 240; ++k)
    grid.push_back(kTwoPi * (static_cast<double>(k) / 240.0));
  for (int i = 0; i <= 40; ++i)
    grid.push_back(kPi * (0.9 + static_cast<double>(i) / 200.0));
  std::sort(grid.begin(), grid.end());
  std::vector<double> out;
  out.reserve(grid.size());
  for (double value : grid) {
    if (out.empty() || value - out.back() > 1e-12) out.push_back(value);
  }
  return out;
}

namespace {

std::vector<double> effective_phi_grid(const ScenarioConfig& config) {
  return config.phi_grid.empty() ? default_phi_grid() : config.phi_grid;
}

std::vector<double> effective_p2_list(const ScenarioConfig& config,
                                      std::initializer_list<double> fallback) {
  if (!config.p2_list.empty()) return config.p2_list;
  return std::vector<double>(fallback);
}

}  // namespace

// ---- phase traces ---------------------------------------------------------

TraceSet reproduce_fig2d(const ScenarioConfig& config) {
  TraceSet out;
  out.phi = effective_phi_grid(config);
  out.p2 = effective_p2_list(config, {0.0, 0.514, 1.0});
  const auto mapping = PhaseMapping::experimental();
  for (double p2 : out.p2) {
    const double theta = theta_from_population(p2);
    std::vector<double> raw;
    raw.reserve(out.phi.size());
    for (double phi : out.phi)
      raw.push_back(total_phase(mapping.state_at(theta, phi)));
    out.total.push_back(unwrap_sweep(raw));
  }
  return out;
}

TraceSet reproduce_figS5(const ScenarioConfig& config) {
  TraceSet out;
  out.phi = effective_phi_grid(config);
  out.p2 = effective_p2_list(config, {0.09, 0.35, 0.61, 0.78});
  const auto mapping = PhaseMapping::upper_only();
  for (double p2 : out.p2) {
    const double theta = theta_from_population(p2);
    std::vector<double> raw;
    std::vector<double> geo;
    raw.reserve(out.phi.size());
    geo.reserve(out.phi.size());
    for (double phi : out.phi) {
      raw.push_back(total_phase(mapping.state_at(theta, phi)));
      geo.push_back(geometric_phase(theta, phi));
    }
    out.total.push_back(unwrap_sweep(raw));
    out.geometric.push_back(std::move(geo));
  }
  return out;
}

// ---- visibility and noise model ---------------------------------------------

Fig3Result reproduce_fig3(const ScenarioConfig& config) {
  Fig3Result out;
  out.phi = effective_phi_grid(config);
  const double lo = std::clamp(config.p2 - config.p2_uncertainty, 0.0, 1.0);
  const double hi = std::clamp(config.p2 + config.p2_uncertainty, 0.0, 1.0);
  out.min_vis = 1.0;
  out.min_vis_low = 1.0;
  out.min_vis_high = 1.0;
  for (double phi : out.phi) {
    out.vis.push_back(visibility_from_population(config.p2, phi));
    out.vis_low.push_back(visibility_from_population(lo, phi));
    out.vis_high.push_back(visibility_from_population(hi, phi));
    out.min_vis = std::min(out.min_vis, out.vis.back());
    out.min_vis_low = std::min(out.min_vis_low, out.vis_low.back());
    out.min_vis_high = std::min(out.min_vis_high, out.vis_high.back());
  }

  // Visibility axis for the noise model: logarithmic from 0.01 to 1 plus the
  // exact working points used elsewhere.
  for (int s = 0; s <= 60; ++s)
    out.v_grid.push_back(0.01 * std::pow(100.0, static_cast<double>(s) / 60.0));
  out.v_grid.push_back(0.025);
  out.v_grid.push_back(0.028);
  std::sort(out.v_grid.begin(), out.v_grid.end());
  out.v_grid.erase(std::unique(out.v_grid.begin(), out.v_grid.end(),
                               [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
                   out.v_grid.end());

  for (double v : out.v_grid) {
    NoiseBudget projection{config.atoms, config.cycles, 0.0, v};
    NoiseBudget total{config.atoms, config.cycles, config.technical, v};
    out.noise_projection.push_back(phase_noise(projection));
    out.noise_total.push_back(phase_noise(total));
  }
  return out;
}

// ---- gain curves ------------------------------------------------------------

Fig4aResult reproduce_fig4a(const ScenarioConfig& config) {
  Fig4aResult out;
  const auto phi = effective_phi_grid(config);
  GainCurveConfig gain;
  gain.budget = {config.atoms, config.cycles, config.technical, 1.0};
  gain.phi = phi;

  gain.p2 = config.p2;
  out.main = gain_curve(gain);
  gain.p2 = std::clamp(config.p2 - config.p2_uncertainty, 0.0, 1.0);
  out.band_low = gain_curve(gain);
  gain.p2 = std::clamp(config.p2 + config.p2_uncertainty, 0.0, 1.0);
  out.band_high = gain_curve(gain);
  gain.p2 = 0.0;
  out.plain = gain_curve(gain);

  out.peak_gain_db = -std::numeric_limits<double>::infinity();
  for (const auto& point : out.main) {
    if (point.gain_db > out.peak_gain_db) {
      out.peak_gain_db = point.gain_db;
      out.peak_phi = point.phi;
    }
  }
  return out;
}

Fig4bResult reproduce_fig4b(const ScenarioConfig& config) {
  Fig4bResult out;
  for (int s = 0; s <= 56; ++s)
    out.atoms.push_back(100.0 * std::pow(10.0, static_cast<double>(s) / 8.0));

  const auto populations = effective_p2_list(config, {0.514, 0.505, 0.501});
  const auto mapping = PhaseMapping::experimental();
  const double ref_slope =
      phase_slope(theta_from_population(1.0), kPi, mapping);

  for (double p2 : populations) {
    Fig4bCurve curve;
    curve.p2 = p2;
    curve.technical = config.technical;
    const double theta = theta_from_population(p2);
    const double slope = phase_slope(theta, kPi, mapping);
    const double vis = visibility(theta, kPi);
    for (double n : out.atoms) {
      NoiseBudget test{n, config.cycles, config.technical, vis};
      NoiseBudget reference{n, config.cycles, config.technical, 1.0};
      const double dphi_test = sensitivity(phase_noise(test), slope);
      const double dphi_ref = sensitivity(phase_noise(reference), ref_slope);
      curve.gain_db.push_back(
          gain_db(dphi_test * dphi_test, dphi_ref * dphi_ref));
    }
    curve.plateau_db = 20.0 * std::log10(std::abs(slope) / std::abs(ref_slope));
    out.curves.push_back(std::move(curve));
  }
  return out;
}

// ---- end-to-end simulated experiment ----------------------------------------

namespace {

struct PipelineResult {
  std::vector<EndToEndPoint> points;
  int fits_total = 0;
  int fits_failed = 0;
};

PipelineResult run_pipeline(const ScenarioConfig& config, double p2,
                            const std::vector<double>& phi_points,
                            std::uint64_t master_seed) {
  PipelineResult result;
  const double theta = theta_from_population(p2);
  const auto mapping = PhaseMapping::experimental();
  const CameraGrid grid = config.imaging.grid();
  const auto cycles = static_cast<int>(config.cycles);
  const auto n_atoms = static_cast<std::int64_t>(config.atoms);

  FitOptions options;  // wavelength fixed by ballistics, Poisson-weighted

  for (std::size_t i = 0; i < phi_points.size(); ++i) {
    EndToEndPoint point;
    point.phi = phi_points[i];
    point.truth_phase = wrap_angle(total_phase(mapping.state_at(theta, point.phi)));
    point.visibility = visibility(theta, point.phi);

    std::vector<double> fitted;
    fitted.reserve(static_cast<std::size_t>(cycles));
    for (int a = 0; a < cycles; ++a) {
      // The control jitter stream is shared by both pipelines (it depends
      // only on the point and cycle), mimicking a common technical drift.
      const std::uint64_t jitter_seed =
          derive_seed(master_seed, 1, static_cast<std::uint64_t>(i),
                      static_cast<std::uint64_t>(a));
      const std::uint64_t atom_seed =
          derive_seed(master_seed, 2, static_cast<std::uint64_t>(i),
                      static_cast<std::uint64_t>(a));
      Rng jitter(jitter_seed);
      const double shot_phase =
          wrap_angle(point.truth_phase + config.technical * jitter.normal());

      const InterferogramParams truth =
          config.imaging.params(point.visibility, shot_phase);
      const auto positions = sample_atoms(truth, n_atoms, atom_seed);
      const Image image = bin_to_image(positions, grid);
      const FitResult fit = fit_interferogram_multistart(image, truth, options);
      ++result.fits_total;
      if (!fit.converged) {
        ++result.fits_failed;
        ++point.cycles_failed;
        continue;
      }
      fitted.push_back(fit.params.phase);
      ++point.cycles_used;
    }

    if (fitted.size() < 2)
      throw std::runtime_error(
          "end_to_end: fewer than two usable cycles at a grid point");

    // Average on a branch anchored to the first usable cycle so points near
    // +-pi do not straddle the wrap.
    const double anchor = fitted.front();
    double sum = 0.0;
    for (double f : fitted) sum += anchor + wrap_angle(f - anchor);
    const double mean = sum / static_cast<double>(fitted.size());
    double var = 0.0;
    for (double f : fitted) {
      const double aligned = anchor + wrap_angle(f - anchor);
      var += (aligned - mean) * (aligned - mean);
    }
    var /= static_cast<double>(fitted.size() - 1);
    point.mean_phase = wrap_angle(mean);
    point.sem = std::sqrt(var / static_cast<double>(fitted.size()));
    result.points.push_back(point);
  }
  return result;
}

// Unwrapped change of the analytic readout phase between two control
// phases, by continuity along a dense grid. Near the working point the
// amplified response advances by more than pi between bracketing points,
// so a naive wrap of the measured difference would land on the wrong
// branch; the truth curve supplies the winding, exactly as a dense
// experimental sweep does.
double unwrapped_truth_difference(double theta, double phi_a, double phi_b) {
  const auto mapping = PhaseMapping::experimental();
  constexpr int kSteps = 512;
  std::vector<double> phases;
  phases.reserve(kSteps + 1);
  for (int s = 0; s <= kSteps; ++s) {
    const double phi =
        phi_a + (phi_b - phi_a) * (static_cast<double>(s) / kSteps);
    phases.push_back(total_phase(mapping.state_at(theta, phi)));
  }
  const std::vector<double> unwrapped = unwrap_sweep(phases);
  return unwrapped.back() - unwrapped.front();
}

TwoPointSensitivity bracket_sensitivity(const std::vector<EndToEndPoint>& points,
                                        double theta) {
  const EndToEndPoint* below = nullptr;
  const EndToEndPoint* above = nullptr;
  for (const auto& point : points) {
    if (point.phi < kPi && (!below || point.phi > below->phi)) below = &point;
    if (point.phi > kPi && (!above || point.phi < above->phi)) above = &point;
  }
  if (!below || !above)
    throw std::runtime_error("end_to_end: grid does not bracket phi = pi");
  const double truth_diff =
      unwrapped_truth_difference(theta, below->phi, above->phi);
  const double measured = above->mean_phase - below->mean_phase;
  const double difference = truth_diff + wrap_angle(measured - truth_diff);
  TwoPointMeasurement a{below->phi, 0.0, below->sem};
  TwoPointMeasurement b{above->phi, difference, above->sem};
  return two_point_sensitivity(a, b);
}

}  // namespace

EndToEndRun end_to_end_run(const ScenarioConfig& config, std::uint64_t master_seed) {
  std::vector<double> phi_points = config.phi_grid;
  if (phi_points.empty()) phi_points = {0.94 * kPi, 1.04 * kPi};

  EndToEndRun run;
  PipelineResult clock = run_pipeline(config, config.p2, phi_points, master_seed);
  PipelineResult reference = run_pipeline(config, 1.0, phi_points, master_seed);

  for (const auto* pipeline : {&clock, &reference}) {
    if (pipeline->fits_failed * 2 > pipeline->fits_total)
      throw std::runtime_error(printf_string(
          "end_to_end: %d of %d fits failed to converge; the synthetic images "
          "are not fittable with this configuration",
          pipeline->fits_failed, pipeline->fits_total));
  }

  run.clock_points = std::move(clock.points);
  run.reference_points = std::move(reference.points);
  run.clock = bracket_sensitivity(run.clock_points, theta_from_population(config.p2));
  run.reference = bracket_sensitivity(run.reference_points, theta_from_population(1.0));
  run.gain_db = gain_db(run.clock.delta2_phi, run.reference.delta2_phi);
  return run;
}

EndToEndReport end_to_end_experiment(const ScenarioConfig& config) {
  EndToEndReport report;
  for (int r = 0; r < config.replications; ++r) {
    const std::uint64_t master =
        derive_seed(config.seed, 0xe2e, static_cast<std::uint64_t>(r));
    report.runs.push_back(end_to_end_run(config, master));
    report.gains_db.push_back(report.runs.back().gain_db);
  }
  double sum = 0.0;
  for (double g : report.gains_db) sum += g;
  report.mean_gain_db = sum / static_cast<double>(report.gains_db.size());
  double var = 0.0;
  for (double g : report.gains_db)
    var += (g - report.mean_gain_db) * (g - report.mean_gain_db);
  report.stddev_gain_db =
      report.gains_db.size() > 1
          ? std::sqrt(var / static_cast<double>(report.gains_db.size() - 1))
          : 0.0;
  return report;
}

// ---- built-in two-point sensitivity arithmetic ------------------------------

SmSensitivityReport sm_sensitivity_report() {
  SmSensitivityReport report;
  report.clock = two_point_sensitivity(kSmClockA, kSmClockB);
  report.reference = two_point_sensitivity(kSmReferenceA, kSmReferenceB);
  report.gain_db = gain_db(report.clock.delta2_phi, report.reference.delta2_phi);
  return report;
}

// ---- artifact writing --------------------------------------------------------

namespace {

json config_echo(const ScenarioConfig& config) {
  json imaging{{"separation_um", config.imaging.separation_um},
               {"tof_s", config.imaging.tof_s},
               {"mass_kg", config.imaging.mass_kg},
               {"sigma_z_um", config.imaging.sigma_z_um},
               {"pixel_um", config.imaging.pixel_um},
               {"amplitude", config.imaging.amplitude},
               {"background", config.imaging.background},
               {"z_com_um", config.imaging.z_com_um},
               {"z_ref_um", config.imaging.z_ref_um},
               {"half_width_sigmas", config.imaging.half_width_sigmas},
               {"wavelength_um", config.imaging.wavelength_um()}};
  return json{{"scenario", config.scenario},
              {"seed", config.seed},
              {"population",
               {{"p2", config.p2},
                {"p2_list", config.p2_list},
                {"uncertainty", config.p2_uncertainty}}},
              {"atoms", {{"n", config.atoms}, {"cycles", config.cycles}}},
              {"noise", {{"technical", config.technical}}},
              {"imaging", imaging},
              {"replications", config.replications},
              {"phi_points",
               config.phi_grid.empty() ? json("default") : json(config.phi_grid.size())}};
}

std::string artifact_prefix(const ScenarioConfig& config, const std::string& out_dir) {
  std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
  return (dir / (config.scenario + "_seed" + std::to_string(config.seed))).string();
}

void write_trace_csv(const std::string& path, const TraceSet& traces,
                     const std::vector<std::vector<double>>& columns,
                     const std::string& quantity) {
  std::string out = "phi_rad";
  for (double p2 : traces.p2) out += "," + quantity + "_p2_" + format_double(p2);
  out += '\n';
  for (std::size_t i = 0; i < traces.phi.size(); ++i) {
    out += format_double(traces.phi[i]);
    for (const auto& column : columns) out += "," + format_double(column[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace

ScenarioArtifacts run_scenario(const ScenarioConfig& config,
                               const std::string& out_dir, bool svg) {
  if (!is_known_scenario(config.scenario))
    throw std::invalid_argument("unknown scenario id: " + config.scenario);

  ScenarioArtifacts artifacts;
  const std::string prefix = artifact_prefix(config, out_dir);
  json summary{{"config", config_echo(config)}};

  auto emit = [&](const std::string& path, const std::string& content) {
    write_text_file(path, content);
    artifacts.files.push_back(path);
  };
  auto emit_json = [&](const json& doc) {
    emit(prefix + "_summary.json", doc.dump(2) + "\n");
  };

  if (config.scenario == "fig2d" || config.scenario == "figS5") {
    const bool with_geometric = config.scenario == "figS5";
    const TraceSet traces =
        with_geometric ? reproduce_figS5(config) : reproduce_fig2d(config);
    write_trace_csv(prefix + "_total.csv", traces, traces.total, "total");
    artifacts.files.push_back(prefix + "_total.csv");
    if (with_geometric) {
      write_trace_csv(prefix + "_geometric.csv", traces, traces.geometric,
                      "geometric");
      artifacts.files.push_back(prefix + "_geometric.csv");
    }
    summary["results"] = {{"traces", traces.p2.size()},
                          {"points_per_trace", traces.phi.size()}};
    emit_json(summary);
    if (svg) {
      const auto& series = with_geometric ? traces.geometric : traces.total;
      std::vector<std::string> labels;
      for (double p2 : traces.p2) labels.push_back("p2=" + format_double(p2));
      write_svg_curves(prefix + ".svg", traces.phi, series, labels, "phi [rad]",
                       with_geometric ? "geometric phase [rad]" : "readout phase [rad]");
      artifacts.files.push_back(prefix + ".svg");
    }
    artifacts.summary_line = printf_string(
        "%s: %zu traces x %zu points", config.scenario.c_str(), traces.p2.size(),
        traces.phi.size());
  } else if (config.scenario == "fig3a" || config.scenario == "fig3b") {
    const Fig3Result result = reproduce_fig3(config);
    if (config.scenario == "fig3a") {
      std::string csv = "phi_rad,visibility,visibility_low,visibility_high\n";
      for (std::size_t i = 0; i < result.phi.size(); ++i) {
        csv += format_double(result.phi[i]) + ',' + format_double(result.vis[i]) +
               ',' + format_double(result.vis_low[i]) + ',' +
               format_double(result.vis_high[i]) + '\n';
      }
      emit(prefix + "_visibility.csv", csv);
      if (svg) {
        write_svg_curves(prefix + ".svg", result.phi,
                         {result.vis, result.vis_low, result.vis_high},
                         {"p2", "p2-u", "p2+u"}, "phi [rad]", "visibility");
        artifacts.files.push_back(prefix + ".svg");
      }
    } else {
      std::string csv = "visibility,dPhi_projection_rad,dPhi_total_rad\n";
      for (std::size_t i = 0; i < result.v_grid.size(); ++i) {
        csv += format_double(result.v_grid[i]) + ',' +
               format_double(result.noise_projection[i]) + ',' +
               format_double(result.noise_total[i]) + '\n';
      }
      emit(prefix + "_noise.csv", csv);
      if (svg) {
        write_svg_curves(prefix + ".svg", result.v_grid,
                         {result.noise_projection, result.noise_total},
                         {"projection", "with technical"}, "visibility",
                         "phase noise [rad]");
        artifacts.files.push_back(prefix + ".svg");
      }
    }
    summary["results"] = {{"min_visibility", result.min_vis},
                          {"min_visibility_low", result.min_vis_low},
                          {"min_visibility_high", result.min_vis_high}};
    emit_json(summary);
    artifacts.summary_line = printf_string(
        "%s: min visibility %.4f (band %.4f..%.4f)", config.scenario.c_str(),
        result.min_vis, result.min_vis_low, result.min_vis_high);
  } else if (config.scenario == "fig4a") {
    const Fig4aResult result = reproduce_fig4a(config);
    write_sensitivity_csv(prefix + "_gain.csv", result.main);
    artifacts.files.push_back(prefix + "_gain.csv");
    write_sensitivity_csv(prefix + "_gain_low.csv", result.band_low);
    artifacts.files.push_back(prefix + "_gain_low.csv");
    write_sensitivity_csv(prefix + "_gain_high.csv", result.band_high);
    artifacts.files.push_back(prefix + "_gain_high.csv");
    write_sensitivity_csv(prefix + "_gain_plain.csv", result.plain);
    artifacts.files.push_back(prefix + "_gain_plain.csv");
    summary["results"] = {{"peak_gain_db", result.peak_gain_db},
                          {"peak_phi_rad", result.peak_phi}};
    emit_json(summary);
    if (svg) {
      std::vector<double> phi;
      std::vector<double> gain, low, high, plain;
      for (const auto& p : result.main) {
        phi.push_back(p.phi);
        gain.push_back(p.gain_db);
      }
      for (const auto& p : result.band_low) low.push_back(p.gain_db);
      for (const auto& p : result.band_high) high.push_back(p.gain_db);
      for (const auto& p : result.plain) plain.push_back(p.gain_db);
      write_svg_curves(prefix + ".svg", phi, {gain, low, high, plain},
                       {"p2", "p2-u", "p2+u", "p2=0"}, "phi [rad]", "gain [dB]");
      artifacts.files.push_back(prefix + ".svg");
    }
    artifacts.summary_line =
        printf_string("fig4a: peak_gain_db=%.2f at phi_rad=%.4f",
                      result.peak_gain_db, result.peak_phi);
  } else if (config.scenario == "fig4b") {
    const Fig4bResult result = reproduce_fig4b(config);
    std::string csv = "atoms";
    for (const auto& curve : result.curves)
      csv += ",gain_db_p2_" + format_double(curve.p2);
    csv += '\n';
    for (std::size_t i = 0; i < result.atoms.size(); ++i) {
      csv += format_double(result.atoms[i]);
      for (const auto& curve : result.curves)
        csv += "," + format_double(curve.gain_db[i]);
      csv += '\n';
    }
    emit(prefix + "_gain_vs_atoms.csv", csv);
    json plateaus = json::array();
    for (const auto& curve : result.curves)
      plateaus.push_back({{"p2", curve.p2},
                          {"technical", curve.technical},
                          {"plateau_db", curve.plateau_db}});
    summary["results"] = {{"plateaus", plateaus}};
    emit_json(summary);
    if (svg) {
      std::vector<double> log_atoms;
      for (double n : result.atoms) log_atoms.push_back(std::log10(n));
      std::vector<std::vector<double>> series;
      std::vector<std::string> labels;
      for (const auto& curve : result.curves) {
        series.push_back(curve.gain_db);
        labels.push_back("p2=" + format_double(curve.p2));
      }
      write_svg_curves(prefix + ".svg", log_atoms, series, labels,
                       "log10 atoms", "gain [dB]");
      artifacts.files.push_back(prefix + ".svg");
    }
    artifacts.summary_line =
        printf_string("fig4b: %zu curves, first plateau %.2f dB",
                      result.curves.size(),
                      result.curves.empty() ? 0.0 : result.curves[0].plateau_db);
  } else if (config.scenario == "end_to_end") {
    const EndToEndReport report = end_to_end_experiment(config);
    std::string points_csv =
        "run,pipeline,phi_rad,truth_phase_rad,visibility,mean_phase_rad,sem_rad,"
        "cycles_used,cycles_failed\n";
    for (std::size_t r = 0; r < report.runs.size(); ++r) {
      const auto& run = report.runs[r];
      for (const auto* points : {&run.clock_points, &run.reference_points}) {
        const bool is_clock = points == &run.clock_points;
        for (const auto& p : *points) {
          points_csv += std::to_string(r);
          points_csv += is_clock ? ",clock," : ",reference,";
          points_csv += format_double(p.phi) + ',' + format_double(p.truth_phase) +
                        ',' + format_double(p.visibility) + ',' +
                        format_double(p.mean_phase) + ',' + format_double(p.sem) +
                        ',' + std::to_string(p.cycles_used) + ',' +
                        std::to_string(p.cycles_failed) + '\n';
        }
      }
    }
    emit(prefix + "_points.csv", points_csv);

    std::string gains_csv =
        "run,gain_db,slope_clock,slope_reference,delta2_clock,delta2_reference\n";
    for (std::size_t r = 0; r < report.runs.size(); ++r) {
      const auto& run = report.runs[r];
      gains_csv += std::to_string(r) + ',' + format_double(run.gain_db) + ',' +
                   format_double(run.clock.slope) + ',' +
                   format_double(run.reference.slope) + ',' +
                   format_double(run.clock.delta2_phi) + ',' +
                   format_double(run.reference.delta2_phi) + '\n';
    }
    emit(prefix + "_gains.csv", gains_csv);

    summary["results"] = {{"mean_gain_db", report.mean_gain_db},
                          {"stddev_gain_db", report.stddev_gain_db},
                          {"gains_db", report.gains_db}};
    emit_json(summary);
    if (svg) {
      std::vector<double> run_index;
      for (std::size_t r = 0; r < report.gains_db.size(); ++r)
        run_index.push_back(static_cast<double>(r));
      write_svg_curves(prefix + ".svg", run_index, {report.gains_db}, {"gain"},
                       "run", "gain [dB]");
      artifacts.files.push_back(prefix + ".svg");
    }
    artifacts.summary_line = printf_string(
        "end_to_end: mean_gain_db=%.2f (std %.2f over %zu runs)",
        report.mean_gain_db, report.stddev_gain_db, report.gains_db.size());
  } else {  // sm_sensitivity
    const SmSensitivityReport report = sm_sensitivity_report();
    std::string csv = "pipeline,phi_rad,phase_rad,error_rad\n";
    for (const auto& [name, point] :
         {std::pair{"clock", kSmClockA}, std::pair{"clock", kSmClockB},
          std::pair{"reference", kSmReferenceA},
          std::pair{"reference", kSmReferenceB}}) {
      csv += std::string(name) + ',' + format_double(point.phi) + ',' +
             format_double(point.value) + ',' + format_double(point.error) + '\n';
    }
    emit(prefix + "_points.csv", csv);
    summary["results"] = {
        {"slope_clock", report.clock.slope},
        {"slope_reference", report.reference.slope},
        {"delta2_clock", report.clock.delta2_phi},
        {"delta2_reference", report.reference.delta2_phi},
        {"gain_db", report.gain_db}};
    emit_json(summary);
    artifacts.summary_line = printf_string(
        "sm_sensitivity: gain_db=%.2f slope_clock=%.2f slope_reference=%.2f",
        report.gain_db, report.clock.slope, report.reference.slope);
  }
  return artifacts;
}

}  // namespace gpamp
