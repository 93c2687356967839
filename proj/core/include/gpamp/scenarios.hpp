#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "gpamp/interferogram.hpp"
#include "gpamp/noise.hpp"
#include "gpamp/version.hpp"

namespace gpamp {

// Canned studies runnable from a config file. Each writes deterministic
// CSV/JSON artifacts whose names embed the scenario id and seed.
inline constexpr std::array<const char*, 8> kScenarioIds = {
    "fig2d", "fig3a", "fig3b", "fig4a", "fig4b", "figS5", "end_to_end", "sm_sensitivity"};

bool is_known_scenario(const std::string& id);

// Geometry and ballistics defaults shared by the synthetic-image studies.
struct ImagingDefaults {
  double separation_um = 7.26;
  double tof_s = 0.01;
  double mass_kg = kRb87MassKg;
  double sigma_z_um = 12.0;
  double pixel_um = 1.0;
  double amplitude = 100.0;
  double background = 0.0;
  double z_com_um = 0.0;
  double z_ref_um = 0.0;
  double half_width_sigmas = 3.0;

  double wavelength_um() const;
  InterferogramParams params(double visibility, double phase) const;
  CameraGrid grid() const;
};

struct ScenarioConfig {
  std::string scenario = "sm_sensitivity";
  double p2 = 0.514;
  std::vector<double> p2_list;   // scenario-specific default when empty
  double p2_uncertainty = 0.004;
  std::vector<double> phi_grid;  // default figure grid when empty
  double atoms = 5000.0;
  double cycles = 8.0;
  double technical = 0.1;
  ImagingDefaults imaging;
  std::uint64_t seed = kDefaultSeed;
  int replications = 20;  // master-seed replications / MC trials
};

struct ConfigIssue {
  std::string pointer;  // JSON pointer to the offending value
  std::string message;
};

struct ValidationReport {
  std::vector<ConfigIssue> errors;
  std::vector<ConfigIssue> warnings;
  bool valid() const { return errors.empty(); }
};

// Parses and validates a config document. Unknown keys produce warnings; a
// missing seed is filled with kDefaultSeed and warned about. On errors the
// returned config contains the fields that did parse; check the report.
ScenarioConfig config_from_json_text(const std::string& text, ValidationReport* report);
ScenarioConfig config_from_file(const std::string& path, ValidationReport* report);
ValidationReport validate_config_text(const std::string& text);

// Default sweep: 241 uniform points on [0, 2 pi] merged with a step-0.005pi
// refinement of [0.9 pi, 1.1 pi]. Sorted, unique, includes pi exactly.
std::vector<double> default_phi_grid();

// ---- phase traces ------------------------------------------------------

// Readout-phase traces on a common control-phase grid, one per population.
struct TraceSet {
  std::vector<double> phi;
  std::vector<double> p2;                      // one entry per trace
  std::vector<std::vector<double>> total;      // unwrapped, anchored at phi = 0
  std::vector<std::vector<double>> geometric;  // empty unless requested
};

// Readout phase vs control phase for each population in p2_list
// (default {0, 0.514, 1}).
TraceSet reproduce_fig2d(const ScenarioConfig& config);

// Readout and geometric phase for each population in p2_list
// (default {0.09, 0.35, 0.61, 0.78}).
TraceSet reproduce_figS5(const ScenarioConfig& config);

// ---- visibility and noise model ----------------------------------------

struct Fig3Result {
  std::vector<double> phi;
  std::vector<double> vis, vis_low, vis_high;  // band from p2 +- uncertainty
  double min_vis = 0.0, min_vis_low = 0.0, min_vis_high = 0.0;
  std::vector<double> v_grid;           // visibility axis for the noise model
  std::vector<double> noise_projection; // phase_noise at technical = 0
  std::vector<double> noise_total;      // phase_noise at the configured floor
};

Fig3Result reproduce_fig3(const ScenarioConfig& config);

// ---- gain curves ---------------------------------------------------------

struct Fig4aResult {
  std::vector<SensitivityPoint> main;       // at p2
  std::vector<SensitivityPoint> band_low;   // at p2 - uncertainty
  std::vector<SensitivityPoint> band_high;  // at p2 + uncertainty
  std::vector<SensitivityPoint> plain;      // single-level curve (P2 = 0)
  double peak_gain_db = 0.0;
  double peak_phi = 0.0;
};

Fig4aResult reproduce_fig4a(const ScenarioConfig& config);

struct Fig4bCurve {
  double p2 = 0.0;
  double technical = 0.0;
  std::vector<double> gain_db;   // vs atom number, at phi = pi
  double plateau_db = 0.0;       // technical-floor limit of the gain
};

struct Fig4bResult {
  std::vector<double> atoms;  // logarithmic atom-number axis
  std::vector<Fig4bCurve> curves;
};

Fig4bResult reproduce_fig4b(const ScenarioConfig& config);

// ---- end-to-end simulated experiment -------------------------------------

struct EndToEndPoint {
  double phi = 0.0;
  double truth_phase = 0.0;  // analytic readout phase, wrapped
  double visibility = 0.0;   // analytic fringe contrast
  double mean_phase = 0.0;   // mean fitted phase over cycles, wrapped
  double sem = 0.0;          // standard error of that mean
  int cycles_used = 0;
  int cycles_failed = 0;
};

struct EndToEndRun {
  std::vector<EndToEndPoint> clock_points;      // amplified pipeline, at p2
  std::vector<EndToEndPoint> reference_points;  // plain pipeline, P2 = 1
  TwoPointSensitivity clock;
  TwoPointSensitivity reference;
  double gain_db = 0.0;
};

struct EndToEndReport {
  std::vector<double> gains_db;  // one per master-seed replication
  double mean_gain_db = 0.0;
  double stddev_gain_db = 0.0;
  std::vector<EndToEndRun> runs;
};

// One simulated experiment: for each grid point (default {0.94 pi,
// 1.04 pi}) and each of the `cycles` shots, draw a common-mode control
// jitter, synthesize an interferogram at the analytic phase and visibility,
// fit it, and average the fitted phases. The same is repeated for the
// reference pipeline (P2 = 1) with the identical seed schedule, and the
// two-point sensitivities around phi = pi are compared. Aborts with a
// diagnostic if more than half the fits in either pipeline fail.
EndToEndRun end_to_end_run(const ScenarioConfig& config, std::uint64_t master_seed);

// `replications` independent runs with master seeds derived from
// config.seed; reports the per-run gains and their spread.
EndToEndReport end_to_end_experiment(const ScenarioConfig& config);

// ---- built-in two-point sensitivity arithmetic ---------------------------

// Measured readout phases at the two control points bracketing phi = pi,
// for the amplified and the plain interferometer.
inline constexpr TwoPointMeasurement kSmClockA{0.94 * std::numbers::pi, -1.36, 0.186};
inline constexpr TwoPointMeasurement kSmClockB{1.04 * std::numbers::pi, -5.71, 0.192};
inline constexpr TwoPointMeasurement kSmReferenceA{0.94 * std::numbers::pi, -2.93, 0.085};
inline constexpr TwoPointMeasurement kSmReferenceB{1.04 * std::numbers::pi, -3.68, 0.094};

struct SmSensitivityReport {
  TwoPointSensitivity clock;
  TwoPointSensitivity reference;
  double gain_db = 0.0;
};

// Recomputes the two-point sensitivities and gain from the built-in
// measurement set above.
SmSensitivityReport sm_sensitivity_report();

// ---- artifact writing -----------------------------------------------------

struct ScenarioArtifacts {
  std::vector<std::string> files;  // paths written, in order
  std::string summary_line;        // one-line human summary
};

// Runs the configured scenario and writes its artifacts into out_dir.
// Filenames embed the scenario id and seed; identical config + seed yields
// byte-identical files. Set svg to also emit a quick-look plot.
ScenarioArtifacts run_scenario(const ScenarioConfig& config,
                               const std::string& out_dir, bool svg = false);

}  // namespace gpamp
