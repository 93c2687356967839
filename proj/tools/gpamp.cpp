// Command-line front end for the clock-interferometer amplification toolkit.
//
// Exit codes: 0 success, 2 configuration/usage violation, 3 numerical or
// domain failure, 4 I/O failure. Errors are mirrored as one JSON object on
// stderr so scripts can parse them.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gpamp/clock_state.hpp"
#include "gpamp/interferogram.hpp"
#include "gpamp/io.hpp"
#include "gpamp/noise.hpp"
#include "gpamp/scenarios.hpp"
#include "gpamp/version.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

void print_error(int code, const std::string& kind, const std::string& message,
                 const json& detail = json::object()) {
  json doc{{"error", {{"code", code}, {"kind", kind}, {"message", message}}}};
  if (!detail.empty()) doc["error"]["detail"] = detail;
  std::cerr << doc.dump() << "\n";
}

json report_to_json(const gpamp::ValidationReport& report) {
  json errors = json::array();
  for (const auto& issue : report.errors)
    errors.push_back({{"pointer", issue.pointer}, {"message", issue.message}});
  json warnings = json::array();
  for (const auto& issue : report.warnings)
    warnings.push_back({{"pointer", issue.pointer}, {"message", issue.message}});
  return json{{"valid", report.valid()}, {"errors", errors}, {"warnings", warnings}};
}

// Shared command state filled by CLI11.
struct Cli {
  std::string out_dir = ".";
  std::uint64_t seed = gpamp::kDefaultSeed;
  bool svg = false;
  bool degrees = false;

  double angle(double value) const {
    return degrees ? value * std::numbers::pi / 180.0 : value;
  }
};

gpamp::ScenarioConfig load_config(const std::string& path, std::uint64_t seed,
                                  bool seed_given) {
  gpamp::ValidationReport report;
  gpamp::ScenarioConfig config;
  if (!path.empty()) {
    config = gpamp::config_from_file(path, &report);
    if (!report.valid()) {
      print_error(kExitConfig, "config", "configuration is invalid",
                  report_to_json(report));
      throw CLI::RuntimeError(kExitConfig);
    }
  }
  if (seed_given || path.empty()) config.seed = seed;
  return config;
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clock-interferometer geometric-phase amplification toolkit"};
  app.name("gpamp");
  app.require_subcommand(1);
  app.fallthrough();  // let --out/--seed/--svg/--deg appear after the subcommand
  app.set_version_flag("--version", std::string(gpamp::kVersion));

  Cli cli;
  app.add_option("--out", cli.out_dir, "Directory for output artifacts")
      ->capture_default_str();
  auto* seed_option =
      app.add_option("--seed", cli.seed,
                     "Seed for every stochastic step (default 12345)")
          ->capture_default_str();
  app.add_flag("--svg", cli.svg, "Also write a quick-look SVG plot");
  app.add_flag("--deg", cli.degrees, "Interpret angle inputs as degrees");

  // ---- phase ----
  auto* cmd_phase = app.add_subcommand(
      "phase", "Readout phase of a clock state (theta or p2, phi1, phi2)");
  struct {
    double theta = 0.0, p2 = 0.0, phi1 = 0.0, phi2 = 0.0;
  } phase_args;
  auto* phase_theta = cmd_phase->add_option("--theta", phase_args.theta,
                                            "Polar angle of the internal state");
  auto* phase_p2 =
      cmd_phase->add_option("--p2", phase_args.p2, "Upper-level population");
  cmd_phase->add_option("--phi1", phase_args.phi1, "Lower-level path phase")
      ->required();
  cmd_phase->add_option("--phi2", phase_args.phi2, "Upper-level path phase")
      ->required();
  phase_theta->excludes(phase_p2);
  cmd_phase->callback([&] {
    if (!*phase_theta && !*phase_p2)
      throw CLI::RequiredError("--theta or --p2");
    const double theta = *phase_p2 ? gpamp::theta_from_population(phase_args.p2)
                                   : cli.angle(phase_args.theta);
    const gpamp::ClockState state{theta, cli.angle(phase_args.phi1),
                                  cli.angle(phase_args.phi2)};
    std::cout << gpamp::format_double(gpamp::total_phase(state)) << "\n";
  });

  // ---- visibility ----
  auto* cmd_vis = app.add_subcommand(
      "visibility", "Fringe contrast at a population and relative phase");
  struct {
    double theta = 0.0, p2 = 0.0, phi = 0.0;
  } vis_args;
  auto* vis_theta = cmd_vis->add_option("--theta", vis_args.theta,
                                        "Polar angle of the internal state");
  auto* vis_p2 = cmd_vis->add_option("--p2", vis_args.p2, "Upper-level population");
  cmd_vis->add_option("--phi", vis_args.phi, "Relative rotation")->required();
  vis_theta->excludes(vis_p2);
  cmd_vis->callback([&] {
    if (!*vis_theta && !*vis_p2) throw CLI::RequiredError("--theta or --p2");
    const double value =
        *vis_p2 ? gpamp::visibility_from_population(vis_args.p2, cli.angle(vis_args.phi))
                : gpamp::visibility(cli.angle(vis_args.theta), cli.angle(vis_args.phi));
    std::cout << gpamp::format_double(value) << "\n";
  });

  // ---- synth ----
  auto* cmd_synth = app.add_subcommand(
      "synth", "Synthesize one interferogram image (sample, bin, write CSV)");
  struct {
    std::string config;
    double n = 5000.0;
    double visibility = -1.0;
    double phase = 0.0;
    double p2 = -1.0;
    double phi = 0.0;
  } synth_args;
  cmd_synth->add_option("--config", synth_args.config, "Scenario config file");
  cmd_synth->add_option("--n", synth_args.n, "Atoms per shot")
      ->capture_default_str();
  auto* synth_vis = cmd_synth->add_option("--visibility", synth_args.visibility,
                                          "Fringe visibility of the profile");
  auto* synth_phase =
      cmd_synth->add_option("--phase", synth_args.phase, "Fringe phase");
  auto* synth_p2 = cmd_synth->add_option(
      "--p2", synth_args.p2, "Derive visibility and phase from this population");
  auto* synth_phi = cmd_synth->add_option(
      "--phi", synth_args.phi, "Control phase used with --p2");
  cmd_synth->callback([&] {
    const auto config =
        load_config(synth_args.config, cli.seed, static_cast<bool>(*seed_option));
    double visibility = 1.0;
    double phase = 0.0;
    if (*synth_p2) {
      if (!*synth_phi) throw CLI::RequiredError("--phi (with --p2)");
      const double theta = gpamp::theta_from_population(synth_args.p2);
      const double phi = cli.angle(synth_args.phi);
      visibility = gpamp::visibility(theta, phi);
      phase = gpamp::wrap_angle(gpamp::total_phase(
          gpamp::PhaseMapping::experimental().state_at(theta, phi)));
    }
    if (*synth_vis) visibility = synth_args.visibility;
    if (*synth_phase) phase = cli.angle(synth_args.phase);

    const auto params = config.imaging.params(visibility, phase);
    const auto grid = config.imaging.grid();
    const auto n_atoms = static_cast<std::int64_t>(synth_args.n);
    const auto positions = gpamp::sample_atoms(params, n_atoms, config.seed);
    const auto image = gpamp::bin_to_image(positions, grid);

    const std::filesystem::path dir(cli.out_dir);
    const std::string csv_path =
        (dir / ("synth_seed" + std::to_string(config.seed) + ".csv")).string();
    gpamp::write_image_csv(csv_path, image);
    json params_doc{{"amplitude", params.amplitude},
                    {"z_com", params.z_com},
                    {"sigma_z", params.sigma_z},
                    {"visibility", params.visibility},
                    {"wavelength", params.wavelength},
                    {"z_ref", params.z_ref},
                    {"phase", params.phase},
                    {"background", params.background},
                    {"atoms", n_atoms},
                    {"dropped", image.dropped},
                    {"seed", config.seed}};
    const std::string json_path =
        (dir / ("synth_seed" + std::to_string(config.seed) + "_params.json")).string();
    gpamp::write_text_file(json_path, params_doc.dump(2) + "\n");
    std::printf("wrote %s atoms=%lld visibility=%s phase_rad=%s\n",
                csv_path.c_str(), static_cast<long long>(n_atoms),
                gpamp::format_double(visibility).c_str(),
                gpamp::format_double(phase).c_str());
  });

  // ---- fit ----
  auto* cmd_fit =
      app.add_subcommand("fit", "Fit the fringe model to an image CSV");
  struct {
    std::string image;
    std::string config;
    bool free_wavelength = false;
    bool unweighted = false;
  } fit_args;
  cmd_fit->add_option("--image", fit_args.image, "Image CSV to fit")->required();
  cmd_fit->add_option("--config", fit_args.config,
                      "Scenario config supplying wavelength and z_ref");
  cmd_fit->add_flag("--free-wavelength", fit_args.free_wavelength,
                    "Fit the fringe wavelength instead of pinning it");
  cmd_fit->add_flag("--unweighted", fit_args.unweighted,
                    "Plain least squares instead of Poisson weighting");
  cmd_fit->callback([&] {
    const auto config =
        load_config(fit_args.config, cli.seed, static_cast<bool>(*seed_option));
    const gpamp::Image image = gpamp::read_image_csv(fit_args.image);
    gpamp::FitOptions options;
    options.fit_wavelength = fit_args.free_wavelength;
    options.poisson_weighted = !fit_args.unweighted;
    const auto fixed = config.imaging.params(1.0, 0.0);
    const gpamp::FitResult fit =
        gpamp::fit_interferogram_multistart(image, fixed, options);

    const std::filesystem::path dir(cli.out_dir);
    const std::string json_path =
        (dir / (stem_of(fit_args.image) + "_fit.json")).string();
    gpamp::write_text_file(json_path, gpamp::fit_result_to_json(fit));
    std::printf(
        "phase_rad=%s phase_err_rad=%s visibility=%s chi2=%s converged=%d "
        "wrote=%s\n",
        gpamp::format_double(fit.params.phase).c_str(),
        gpamp::format_double(fit.errors.phase).c_str(),
        gpamp::format_double(fit.params.visibility).c_str(),
        gpamp::format_double(fit.chi2).c_str(), fit.converged ? 1 : 0,
        json_path.c_str());
  });

  // ---- mc ----
  auto* cmd_mc = app.add_subcommand(
      "mc", "Monte Carlo fit-error study against a known truth");
  struct {
    std::string config;
    double n = 5000.0;
    int trials = 100;
    double visibility = 0.028;
    double phase = 0.0;
  } mc_args;
  cmd_mc->add_option("--config", mc_args.config, "Scenario config file");
  cmd_mc->add_option("--n", mc_args.n, "Atoms per shot")->capture_default_str();
  cmd_mc->add_option("--trials", mc_args.trials, "Number of trials")
      ->capture_default_str();
  cmd_mc->add_option("--visibility", mc_args.visibility, "True fringe visibility")
      ->capture_default_str();
  cmd_mc->add_option("--phase", mc_args.phase, "True fringe phase")
      ->capture_default_str();
  cmd_mc->callback([&] {
    const auto config =
        load_config(mc_args.config, cli.seed, static_cast<bool>(*seed_option));
    const auto params =
        config.imaging.params(mc_args.visibility, cli.angle(mc_args.phase));
    const auto summary = gpamp::mc_fit_error(
        params, config.imaging.grid(), static_cast<std::int64_t>(mc_args.n),
        mc_args.trials, config.seed);
    json doc{{"trials", summary.trials},
             {"failed", summary.failed},
             {"mean_abs_error_rad", summary.mean_abs_error},
             {"stddev_error_rad", summary.stddev_error},
             {"mean_reported_error_rad", summary.mean_reported_error},
             {"mean_visibility", summary.mean_visibility},
             {"atoms", mc_args.n},
             {"true_visibility", mc_args.visibility},
             {"true_phase", cli.angle(mc_args.phase)},
             {"seed", config.seed}};
    const std::filesystem::path dir(cli.out_dir);
    const std::string json_path =
        (dir / ("mc_seed" + std::to_string(config.seed) + ".json")).string();
    gpamp::write_text_file(json_path, doc.dump(2) + "\n");
    std::printf(
        "trials=%d failed=%d mean_abs_error_rad=%s stddev_error_rad=%s "
        "mean_reported_error_rad=%s wrote=%s\n",
        summary.trials, summary.failed,
        gpamp::format_double(summary.mean_abs_error).c_str(),
        gpamp::format_double(summary.stddev_error).c_str(),
        gpamp::format_double(summary.mean_reported_error).c_str(),
        json_path.c_str());
  });

  // ---- gain ----
  auto* cmd_gain = app.add_subcommand(
      "gain", "Sensitivity gain sweep against the plain interferometer");
  struct {
    double p2 = 0.514;
    double n = 5000.0;
    double cycles = 8.0;
    double technical = 0.1;
    double ref_p2 = 1.0;
  } gain_args;
  cmd_gain->add_option("--p2", gain_args.p2, "Upper-level population")
      ->capture_default_str();
  cmd_gain->add_option("--n", gain_args.n, "Atoms per shot")->capture_default_str();
  cmd_gain->add_option("--a", gain_args.cycles, "Shots averaged per point")
      ->capture_default_str();
  cmd_gain->add_option("--technical", gain_args.technical,
                       "Technical phase noise floor")
      ->capture_default_str();
  cmd_gain->add_option("--ref-p2", gain_args.ref_p2, "Reference population")
      ->capture_default_str();
  cmd_gain->callback([&] {
    gpamp::GainCurveConfig config;
    config.p2 = gain_args.p2;
    config.budget = {gain_args.n, gain_args.cycles, gain_args.technical, 1.0};
    config.phi = gpamp::default_phi_grid();
    config.reference_p2 = gain_args.ref_p2;
    const auto points = gpamp::gain_curve(config);

    double peak = -1e300, peak_phi = 0.0;
    for (const auto& point : points) {
      if (point.gain_db > peak) {
        peak = point.gain_db;
        peak_phi = point.phi;
      }
    }
    const std::filesystem::path dir(cli.out_dir);
    const std::string base = "gain_p2_" + gpamp::format_double(gain_args.p2);
    const std::string csv_path = (dir / (base + ".csv")).string();
    gpamp::write_sensitivity_csv(csv_path, points);
    json doc{{"p2", gain_args.p2},
             {"atoms", gain_args.n},
             {"cycles", gain_args.cycles},
             {"technical", gain_args.technical},
             {"reference_p2", gain_args.ref_p2},
             {"peak_gain_db", peak},
             {"peak_phi_rad", peak_phi},
             {"points", points.size()}};
    const std::string json_path = (dir / (base + "_summary.json")).string();
    gpamp::write_text_file(json_path, doc.dump(2) + "\n");
    if (cli.svg) {
      std::vector<double> phi, gain;
      for (const auto& point : points) {
        phi.push_back(point.phi);
        gain.push_back(point.gain_db);
      }
      gpamp::write_svg_curves((dir / (base + ".svg")).string(), phi, {gain},
                              {"gain"}, "phi [rad]", "gain [dB]");
    }
    std::printf("peak_gain_db=%.2f phi_rad=%.4f points=%zu wrote=%s\n", peak,
                peak_phi, points.size(), csv_path.c_str());
  });

  // ---- budget ----
  auto* cmd_budget = app.add_subcommand(
      "budget", "Evaluate the analytic noise budget at one operating point");
  struct {
    double visibility = -1.0;
    double p2 = 0.514;
    double phi = 0.0;
    double n = 5000.0;
    double cycles = 8.0;
    double technical = 0.1;
    double slope = 0.0;
    double g0 = 0.0, n1 = 0.0, n2 = 0.0, dphi_sig = 0.0;
    double g = 0.0, dphi_a = 0.0, dphi_b = 0.0;
    double di = 0.0, dt = 0.0, dz = 0.0;
  } budget_args;
  auto* budget_vis = cmd_budget->add_option("--v", budget_args.visibility,
                                            "Fringe visibility");
  cmd_budget->add_option("--p2", budget_args.p2, "Upper-level population");
  auto* budget_phi =
      cmd_budget->add_option("--phi", budget_args.phi, "Control phase");
  cmd_budget->add_option("--n", budget_args.n, "Atoms per shot")
      ->capture_default_str();
  cmd_budget->add_option("--a", budget_args.cycles, "Shots averaged per point")
      ->capture_default_str();
  cmd_budget->add_option("--technical", budget_args.technical,
                         "Technical phase noise floor")
      ->capture_default_str();
  auto* budget_slope = cmd_budget->add_option(
      "--slope", budget_args.slope, "Slope for the control-phase conversion");
  auto* budget_g0 = cmd_budget->add_option(
      "--g0", budget_args.g0, "Amplification factor for the population term");
  cmd_budget->add_option("--n1", budget_args.n1, "Lower-level population error in");
  cmd_budget->add_option("--n2", budget_args.n2, "Upper-level population error in");
  cmd_budget->add_option("--dphi-sig", budget_args.dphi_sig,
                         "Signal phase offset for the population term");
  auto* budget_g = cmd_budget->add_option(
      "--g", budget_args.g, "Amplification factor for the correlated term");
  cmd_budget->add_option("--dphi-a", budget_args.dphi_a,
                         "Lower-level correlated phase error");
  cmd_budget->add_option("--dphi-b", budget_args.dphi_b,
                         "Upper-level correlated phase error");
  auto* budget_di = cmd_budget->add_option(
      "--di", budget_args.di, "Relative intensity error for the signal budget");
  cmd_budget->add_option("--dt", budget_args.dt,
                         "Relative transmission error for the signal budget");
  cmd_budget->add_option("--dz", budget_args.dz,
                         "Relative position error for the signal budget");
  cmd_budget->callback([&] {
    double visibility = budget_args.visibility;
    double slope = budget_args.slope;
    if (!*budget_vis) {
      if (!*budget_phi) throw CLI::RequiredError("--v or (--p2 and --phi)");
      const double theta = gpamp::theta_from_population(budget_args.p2);
      const double phi = cli.angle(budget_args.phi);
      visibility = gpamp::visibility(theta, phi);
      if (!*budget_slope) slope = gpamp::phase_slope(theta, phi);
    }
    const gpamp::NoiseBudget budget{budget_args.n, budget_args.cycles,
                                    budget_args.technical, visibility};
    const double dphi_total = gpamp::phase_noise(budget);
    std::printf("visibility=%s\n", gpamp::format_double(visibility).c_str());
    std::printf("dphi_total_rad=%s\n", gpamp::format_double(dphi_total).c_str());
    if (slope != 0.0) {
      std::printf("slope=%s\n", gpamp::format_double(slope).c_str());
      std::printf("dphi_signal_rad=%s\n",
                  gpamp::format_double(gpamp::sensitivity(dphi_total, slope)).c_str());
    }
    if (*budget_g0) {
      std::printf("population_term_rad=%s\n",
                  gpamp::format_double(gpamp::population_noise_amplification(
                                           budget_args.g0, budget_args.n1,
                                           budget_args.n2, budget_args.dphi_sig))
                      .c_str());
    }
    if (*budget_g) {
      std::printf("correlated_term_rad=%s\n",
                  gpamp::format_double(gpamp::correlated_phase_noise(
                                           budget_args.g, budget_args.dphi_a,
                                           budget_args.dphi_b))
                      .c_str());
    }
    if (*budget_di) {
      std::printf("signal_budget=%s\n",
                  gpamp::format_double(gpamp::signal_uncertainty_budget(
                                           budget_args.di, budget_args.dt,
                                           budget_args.dz))
                      .c_str());
    }
  });

  // ---- reproduce ----
  auto* cmd_reproduce = app.add_subcommand(
      "reproduce", "Run a canned scenario and write its artifacts");
  struct {
    std::string scenario;
    std::string config;
  } reproduce_args;
  cmd_reproduce->add_option("scenario", reproduce_args.scenario,
                            "Scenario id (see gpamp reproduce --help)");
  cmd_reproduce->add_option("--config", reproduce_args.config,
                            "Scenario config file");
  cmd_reproduce->callback([&] {
    auto config = load_config(reproduce_args.config, cli.seed,
                              static_cast<bool>(*seed_option));
    if (!reproduce_args.scenario.empty()) config.scenario = reproduce_args.scenario;
    if (reproduce_args.scenario.empty() && reproduce_args.config.empty())
      throw CLI::RequiredError("scenario id or --config");
    if (!gpamp::is_known_scenario(config.scenario)) {
      gpamp::ValidationReport report;
      report.errors.push_back({"/scenario", "unknown scenario id: " + config.scenario});
      print_error(kExitConfig, "config", "configuration is invalid",
                  report_to_json(report));
      throw CLI::RuntimeError(kExitConfig);
    }
    const auto artifacts = gpamp::run_scenario(config, cli.out_dir, cli.svg);
    std::printf("%s\n", artifacts.summary_line.c_str());
    for (const auto& file : artifacts.files)
      std::printf("wrote %s\n", file.c_str());
  });

  // ---- validate ----
  auto* cmd_validate =
      app.add_subcommand("validate", "Validate a scenario config file");
  struct {
    std::string config;
  } validate_args;
  cmd_validate->add_option("--config", validate_args.config, "Config file to check")
      ->required();
  cmd_validate->callback([&] {
    const std::string text = gpamp::read_text_file(validate_args.config);
    const auto report = gpamp::validate_config_text(text);
    std::cout << report_to_json(report).dump(2) << "\n";
    if (!report.valid()) throw CLI::RuntimeError(kExitConfig);
  });

  try {
    app.parse(argc, argv);
    return kExitOk;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::RuntimeError& e) {
    // Error JSON already printed by the failing command.
    return e.get_exit_code();
  } catch (const CLI::ParseError& e) {
    print_error(kExitConfig, "usage", e.what());
    return kExitConfig;
  } catch (const gpamp::io_error& e) {
    print_error(kExitIo, "io", e.what());
    return kExitIo;
  } catch (const gpamp::singular_phase_error& e) {
    print_error(kExitNumerical, "singular", e.what(),
                json{{"theta", e.theta()}, {"phi", e.phi()}});
    return kExitNumerical;
  } catch (const std::domain_error& e) {
    print_error(kExitNumerical, "domain", e.what());
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    print_error(kExitNumerical, "domain", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    print_error(kExitNumerical, "numerical", e.what());
    return kExitNumerical;
  }
}
