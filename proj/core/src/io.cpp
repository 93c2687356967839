#include "gpamp/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gpamp {

std::string format_double(double value) {
  char buffer[64];
  const auto out = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, out.ptr);
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(target.parent_path(), ec);
  }
  std::ofstream stream(path, std::ios::binary | std::ios::trunc);
  if (!stream) throw io_error("cannot open for writing: " + path);
  stream << content;
  if (!stream) throw io_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) throw io_error("cannot open for reading: " + path);
  std::ostringstream out;
  out << stream.rdbuf();
  return out.str();
}

void write_image_csv(const std::string& path, const Image& image) {
  std::string out = "pixel_index,position_um,counts\n";
  for (std::size_t j = 0; j < image.counts.size(); ++j) {
    out += std::to_string(j);
    out += ',';
    out += format_double(image.grid.center(static_cast<std::int64_t>(j)));
    out += ',';
    out += format_double(image.counts[j]);
    out += '\n';
  }
  write_text_file(path, out);
}

Image read_image_csv(const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream stream(text);
  std::string line;
  if (!std::getline(stream, line) || line != "pixel_index,position_um,counts")
    throw io_error("unrecognized image CSV header in " + path);

  std::vector<double> positions, counts;
  while (std::getline(stream, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    if (!std::getline(row, field, ',')) throw io_error("bad row in " + path);
    if (!std::getline(row, field, ',')) throw io_error("bad row in " + path);
    positions.push_back(std::stod(field));
    if (!std::getline(row, field, ',')) throw io_error("bad row in " + path);
    counts.push_back(std::stod(field));
  }
  if (counts.size() < 2) throw io_error("image CSV has fewer than 2 pixels: " + path);

  const double pixel = positions[1] - positions[0];
  if (!(pixel > 0)) throw io_error("image CSV positions are not increasing: " + path);
  for (std::size_t j = 1; j < positions.size(); ++j) {
    if (std::abs(positions[j] - positions[j - 1] - pixel) > 1e-9 * pixel)
      throw io_error("image CSV positions are not uniformly spaced: " + path);
  }
  Image image;
  image.grid.pixel_size = pixel;
  image.grid.n_pixels = static_cast<std::int64_t>(counts.size());
  image.grid.origin = positions[0] - 0.5 * pixel;
  image.counts = std::move(counts);
  return image;
}

void write_sensitivity_csv(const std::string& path,
                           const std::vector<SensitivityPoint>& points) {
  std::string out = "phi_rad,phase_rad,slope,dPhi_rad,dphi_rad,gain_db\n";
  for (const auto& p : points) {
    out += format_double(p.phi);
    out += ',';
    out += format_double(p.total_phase);
    out += ',';
    out += format_double(p.slope);
    out += ',';
    out += format_double(p.dphi_total);
    out += ',';
    out += format_double(p.dphi_signal);
    out += ',';
    out += format_double(p.gain_db);
    out += '\n';
  }
  write_text_file(path, out);
}

std::string fit_result_to_json(const FitResult& result) {
  nlohmann::json doc;
  doc["amplitude"] = result.params.amplitude;
  doc["amplitude_error"] = result.errors.amplitude;
  doc["z_com"] = result.params.z_com;
  doc["z_com_error"] = result.errors.z_com;
  doc["sigma_z"] = result.params.sigma_z;
  doc["sigma_z_error"] = result.errors.sigma_z;
  doc["visibility"] = result.params.visibility;
  doc["visibility_error"] = result.errors.visibility;
  doc["wavelength"] = result.params.wavelength;
  doc["wavelength_error"] = result.errors.wavelength;
  doc["z_ref"] = result.params.z_ref;
  doc["phase"] = result.params.phase;
  doc["phase_error"] = result.errors.phase;
  doc["background"] = result.params.background;
  doc["background_error"] = result.errors.background;
  doc["chi2"] = result.chi2;
  doc["converged"] = result.converged;
  doc["iterations"] = result.iterations;
  doc["n_free"] = result.n_free;
  return doc.dump(2) + "\n";
}

void write_svg_curves(const std::string& path, const std::vector<double>& x,
                      const std::vector<std::vector<double>>& series,
                      const std::vector<std::string>& labels,
                      const std::string& x_label, const std::string& y_label) {
  if (series.empty() || x.size() < 2 || labels.size() != series.size())
    throw io_error("svg plot needs at least two x values and matching labels");
  for (const auto& s : series)
    if (s.size() != x.size()) throw io_error("svg series length mismatch");

  double x_lo = x.front(), x_hi = x.front();
  for (double v : x) {
    x_lo = std::min(x_lo, v);
    x_hi = std::max(x_hi, v);
  }
  double y_lo = series[0][0], y_hi = series[0][0];
  for (const auto& s : series)
    for (double v : s) {
      if (std::isfinite(v)) {
        y_lo = std::min(y_lo, v);
        y_hi = std::max(y_hi, v);
      }
    }
  if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
  if (!(y_hi > y_lo)) y_hi = y_lo + 1.0;

  constexpr double kW = 800.0, kH = 500.0, kPad = 60.0;
  const auto map_x = [&](double v) {
    return kPad + (v - x_lo) / (x_hi - x_lo) * (kW - 2 * kPad);
  };
  const auto map_y = [&](double v) {
    return kH - kPad - (v - y_lo) / (y_hi - y_lo) * (kH - 2 * kPad);
  };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
      << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH
      << "\">\n";
  svg << "<rect width=\"" << kW << "\" height=\"" << kH
      << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\""
      << kW - kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad
      << "\" y2=\"" << kH - kPad << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 15
      << "\" text-anchor=\"middle\" font-size=\"14\">" << x_label
      << "</text>\n";
  svg << "<text x=\"18\" y=\"" << kH / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 "
         "18 "
      << kH / 2 << ")\">" << y_label << "</text>\n";
  svg << "<text x=\"" << kPad << "\" y=\"" << kH - kPad + 18
      << "\" font-size=\"11\">" << format_double(x_lo) << "</text>\n";
  svg << "<text x=\"" << kW - kPad << "\" y=\"" << kH - kPad + 18
      << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(x_hi)
      << "</text>\n";
  svg << "<text x=\"" << kPad - 6 << "\" y=\"" << kH - kPad
      << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(y_lo)
      << "</text>\n";
  svg << "<text x=\"" << kPad - 6 << "\" y=\"" << kPad + 4
      << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(y_hi)
      << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % 6];
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) {
      double v = series[s][i];
      if (!std::isfinite(v)) continue;
      svg << map_x(x[i]) << ',' << map_y(v) << ' ';
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << kW - kPad + 4 << "\" y=\"" << kPad + 16.0 * static_cast<double>(s)
        << "\" font-size=\"12\" fill=\"" << color << "\">" << labels[s]
        << "</text>\n";
  }
  svg << "</svg>\n";
  write_text_file(path, svg.str());
}

}  // namespace gpamp
