#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "twinbeam/errors.hpp"
#include "twinbeam/fit.hpp"
#include "twinbeam/scan.hpp"

namespace twinbeam {

/// Shortest decimal form that round-trips the exact double (std::to_chars),
/// so repeated runs serialize bit-identically and files parse back exactly.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& context) {
  double v = 0.0;
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw data_error(context + ": cannot parse number '" + std::string(text) + "'");
  return v;
}

/// Writes bytes to `path` via a temporary sibling and an atomic rename, so
/// readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path,
                              std::string_view bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw data_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// `# key = value` metadata lines placed before the CSV header, carrying
/// the full effective configuration of the run.
inline std::string csv_metadata_block(const std::vector<std::pair<std::string, std::string>>& meta) {
  std::string out;
  for (const auto& [key, value] : meta) out += "# " + key + " = " + value + "\n";
  return out;
}

inline std::string trajectory_csv(const std::vector<TrajectoryRecord>& records,
                                  const std::vector<std::pair<std::string, std::string>>& meta) {
  std::string out = csv_metadata_block(meta);
  out += "z,com1,com2,peak1,peak2,power1,power2,gain,separation,free_line\n";
  for (const auto& r : records) {
    out += format_double(r.z) + ',' + format_double(r.com1) + ',' +
           format_double(r.com2) + ',' + format_double(r.peak1) + ',' +
           format_double(r.peak2) + ',' + format_double(r.power1) + ',' +
           format_double(r.power2) + ',' + format_double(r.gain_so_far) + ',' +
           format_double(r.separation) + ',' + format_double(r.free_line) + '\n';
  }
  return out;
}

inline std::string exit_curve_csv(const std::vector<ExitCurvePoint>& points,
                                  const std::vector<std::pair<std::string, std::string>>& meta) {
  std::string out = csv_metadata_block(meta);
  out += "b,net_gain,exit_com1,exit_com2,hitch_distance,status\n";
  for (const auto& p : points) {
    std::string status = p.status;
    for (char& ch : status)
      if (ch == ',' || ch == '\n') ch = ';';
    out += format_double(p.b) + ',' + format_double(p.net_gain) + ',' +
           format_double(p.exit_com1) + ',' + format_double(p.exit_com2) + ',' +
           format_double(p.hitch_distance) + ',' + status + '\n';
  }
  return out;
}

inline std::string residuals_csv(const HitchDataset& data, const FitResult& fit,
                                 const std::vector<std::pair<std::string, std::string>>& meta) {
  std::string out = csv_metadata_block(meta);
  out += "net_gain,pos1,model1,offset1,resid1,sigma1,pos2,model2,offset2,resid2,sigma2\n";
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const HitchRow& r = data.rows[i];
    out += format_double(r.net_gain) + ',' + format_double(r.pos1) + ',' +
           format_double(fit.model1[i]) + ',' + format_double(fit.offset1) + ',' +
           format_double(fit.resid1[i]) + ',' + format_double(r.sigma1) + ',' +
           format_double(r.pos2) + ',' + format_double(fit.model2[i]) + ',' +
           format_double(fit.offset2) + ',' + format_double(fit.resid2[i]) + ',' +
           format_double(r.sigma2) + '\n';
  }
  return out;
}

// ---- hitching dataset CSV ----
//
// # angle_rad = ...
// # length_lambda = ...
// # k_rad_per_lambda = ...
// # seed_sigma_lambda = ...
// net_gain,pos1,pos2,sigma1,sigma2
// <one row per measurement, positions in lambda>

inline std::string dataset_csv(const HitchDataset& ds) {
  std::string out;
  out += "# angle_rad = " + format_double(ds.meta.angle) + "\n";
  out += "# length_lambda = " + format_double(ds.meta.length) + "\n";
  out += "# k_rad_per_lambda = " + format_double(ds.meta.k) + "\n";
  out += "# seed_sigma_lambda = " + format_double(ds.meta.seed_sigma) + "\n";
  out += "net_gain,pos1,pos2,sigma1,sigma2\n";
  for (const auto& r : ds.rows) {
    out += format_double(r.net_gain) + ',' + format_double(r.pos1) + ',' +
           format_double(r.pos2) + ',' + format_double(r.sigma1) + ',' +
           format_double(r.sigma2) + '\n';
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

} // namespace detail

inline HitchDataset parse_dataset_csv(std::string_view text) {
  HitchDataset ds;
  bool have[4] = {false, false, false, false};
  bool header_seen = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos
                                                 ? text.size() - pos
                                                 : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    line = detail::trim(line);
    const std::string where = "dataset line " + std::to_string(line_no);
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view body = detail::trim(line.substr(1));
      const std::size_t eq = body.find('=');
      if (eq == std::string_view::npos)
        throw data_error(where + ": metadata line without '='");
      const std::string_view key = detail::trim(body.substr(0, eq));
      const std::string_view value = detail::trim(body.substr(eq + 1));
      if (key == "angle_rad") {
        ds.meta.angle = parse_double(value, where);
        have[0] = true;
      } else if (key == "length_lambda") {
        ds.meta.length = parse_double(value, where);
        have[1] = true;
      } else if (key == "k_rad_per_lambda") {
        ds.meta.k = parse_double(value, where);
        have[2] = true;
      } else if (key == "seed_sigma_lambda") {
        ds.meta.seed_sigma = parse_double(value, where);
        have[3] = true;
      } else {
        throw data_error(where + ": unknown metadata key '" + std::string(key) + "'");
      }
      continue;
    }
    if (!header_seen) {
      if (line != "net_gain,pos1,pos2,sigma1,sigma2")
        throw data_error(where + ": expected header 'net_gain,pos1,pos2,sigma1,sigma2'");
      header_seen = true;
      continue;
    }
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 5)
      throw data_error(where + ": expected 5 comma-separated fields, got " +
                       std::to_string(fields.size()));
    HitchRow row;
    row.net_gain = parse_double(detail::trim(fields[0]), where);
    row.pos1 = parse_double(detail::trim(fields[1]), where);
    row.pos2 = parse_double(detail::trim(fields[2]), where);
    row.sigma1 = parse_double(detail::trim(fields[3]), where);
    row.sigma2 = parse_double(detail::trim(fields[4]), where);
    ds.rows.push_back(row);
  }
  if (!header_seen) throw data_error("dataset: missing CSV header");
  if (!(have[0] && have[1] && have[2] && have[3]))
    throw data_error("dataset: metadata block must define angle_rad, length_lambda, "
                     "k_rad_per_lambda and seed_sigma_lambda");
  ds.validate();
  return ds;
}

inline HitchDataset read_dataset_csv(const std::filesystem::path& path) {
  return parse_dataset_csv(read_file(path));
}

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples). `values` is a
/// row-major rows x cols raster scaled so that `scale_max` maps to 65535.
inline std::string pgm16(std::size_t rows, std::size_t cols,
                         const std::vector<double>& values, double scale_max) {
  if (values.size() != rows * cols)
    throw parameter_error("pgm16: raster size mismatch");
  std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) +
                    "\n65535\n";
  out.reserve(out.size() + 2 * values.size());
  const double scale = scale_max > 0.0 ? 65535.0 / scale_max : 0.0;
  for (double v : values) {
    double s = v * scale;
    if (!(s >= 0.0)) s = 0.0;
    if (s > 65535.0) s = 65535.0;
    const auto q = static_cast<std::uint16_t>(std::lround(s));
    out.push_back(static_cast<char>(q >> 8));
    out.push_back(static_cast<char>(q & 0xff));
  }
  return out;
}

inline std::string intensity_map_pgm(const IntensityMaps& maps, bool mode1) {
  const std::vector<double>& v = mode1 ? maps.mode1 : maps.mode2;
  double peak = 0.0;
  for (double x : v) peak = std::max(peak, x);
  return pgm16(maps.nz, maps.nx, v, peak);
}

} // namespace twinbeam
