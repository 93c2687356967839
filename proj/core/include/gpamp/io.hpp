#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gpamp/interferogram.hpp"
#include "gpamp/noise.hpp"

namespace gpamp {

class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Shortest decimal text that round-trips the double exactly.
std::string format_double(double value);

// Writes "pixel_index,position_um,counts" rows; positions are pixel
// centers. Deterministic byte output.
void write_image_csv(const std::string& path, const Image& image);

// Reads an image written by write_image_csv, reconstructing the grid from
// the (uniform) pixel positions.
Image read_image_csv(const std::string& path);

// Writes "phi_rad,phase_rad,slope,dPhi_rad,dphi_rad,gain_db" rows.
void write_sensitivity_csv(const std::string& path,
                           const std::vector<SensitivityPoint>& points);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Fit result as a flat JSON object with stable key order.
std::string fit_result_to_json(const FitResult& result);

// Minimal multi-series polyline plot for quick visual checks. All series
// share the x vector; labels must match the series count.
void write_svg_curves(const std::string& path, const std::vector<double>& x,
                      const std::vector<std::vector<double>>& series,
                      const std::vector<std::string>& labels,
                      const std::string& x_label, const std::string& y_label);

}  // namespace gpamp
