#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "twinbeam/core.hpp"
#include "twinbeam/errors.hpp"
#include "twinbeam/fit.hpp"
#include "twinbeam/io.hpp"

namespace twinbeam {

struct GridConfig {
  std::size_t n = 4096;
  double width = 4096.0;
};

struct MediumConfig {
  double a1_re = 0.0, a1_im = 0.0;
  double a2_re = 0.0, a2_im = 0.0;
  double b = 0.0;
  double length = 5e4;
  double k = two_pi;
};

struct SeedConfig {
  double sigma = 100.0;
  double x0 = 0.0;
  double tilt = 0.0;
  double amplitude = 1.0;
};

struct ScanConfig {
  std::size_t nz = 201;
  std::vector<double> b_values;    // sweep control values
  std::vector<double> gain_values; // alternative control: target net gains
  bool normalize_per_z = true;
};

struct FitCmdConfig {
  bool fit_im_a1 = true;
  bool shared_offset = false;
  bool weighted = true;
  double im_a1_min = 0.0;
  double im_a1_max = 1e-3;
  double simplex_tol = 1e-8;
  double chi2_rel_tol = 1e-10;
  std::size_t max_evaluations = 500;
};

struct OutputConfig {
  std::string directory = "out";
};

struct RunConfig {
  GridConfig grid;
  MediumConfig medium;
  SeedConfig seed;
  ScanConfig scan;
  FitCmdConfig fit;
  OutputConfig output;

  Grid1D make_grid() const { return Grid1D(grid.n, grid.width); }

  MediumParams medium_params() const {
    MediumParams m;
    m.a1 = cplx(medium.a1_re, medium.a1_im);
    m.a2 = cplx(medium.a2_re, medium.a2_im);
    m.b = medium.b;
    m.length = medium.length;
    m.k = medium.k;
    return m;
  }

  SeedSpec seed_spec() const {
    return SeedSpec{seed.sigma, seed.x0, seed.tilt, seed.amplitude};
  }

  FitOptions fit_options() const {
    FitOptions o;
    o.fit_im_a1 = fit.fit_im_a1;
    o.shared_offset = fit.shared_offset;
    o.weighted = fit.weighted;
    o.im_a1_min = fit.im_a1_min;
    o.im_a1_max = fit.im_a1_max;
    o.simplex_tol = fit.simplex_tol;
    o.chi2_rel_tol = fit.chi2_rel_tol;
    o.max_evaluations = fit.max_evaluations;
    return o;
  }

  /// Flat `section.key = value` listing of the effective configuration, in
  /// a fixed order; used for CSV metadata blocks and --help.
  std::vector<std::pair<std::string, std::string>> flat() const {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("grid.n", std::to_string(grid.n));
    kv.emplace_back("grid.width", format_double(grid.width));
    kv.emplace_back("medium.a1_re", format_double(medium.a1_re));
    kv.emplace_back("medium.a1_im", format_double(medium.a1_im));
    kv.emplace_back("medium.a2_re", format_double(medium.a2_re));
    kv.emplace_back("medium.a2_im", format_double(medium.a2_im));
    kv.emplace_back("medium.b", format_double(medium.b));
    kv.emplace_back("medium.length", format_double(medium.length));
    kv.emplace_back("medium.k", format_double(medium.k));
    kv.emplace_back("seed.sigma", format_double(seed.sigma));
    kv.emplace_back("seed.x0", format_double(seed.x0));
    kv.emplace_back("seed.tilt", format_double(seed.tilt));
    kv.emplace_back("seed.amplitude", format_double(seed.amplitude));
    kv.emplace_back("scan.nz", std::to_string(scan.nz));
    std::string bs, gs;
    for (double b : scan.b_values) bs += (bs.empty() ? "" : " ") + format_double(b);
    for (double g : scan.gain_values) gs += (gs.empty() ? "" : " ") + format_double(g);
    kv.emplace_back("scan.b_values", bs);
    kv.emplace_back("scan.gain_values", gs);
    kv.emplace_back("scan.normalize_per_z", scan.normalize_per_z ? "true" : "false");
    kv.emplace_back("fit.fit_im_a1", fit.fit_im_a1 ? "true" : "false");
    kv.emplace_back("fit.shared_offset", fit.shared_offset ? "true" : "false");
    kv.emplace_back("fit.weighted", fit.weighted ? "true" : "false");
    kv.emplace_back("fit.im_a1_min", format_double(fit.im_a1_min));
    kv.emplace_back("fit.im_a1_max", format_double(fit.im_a1_max));
    kv.emplace_back("fit.simplex_tol", format_double(fit.simplex_tol));
    kv.emplace_back("fit.chi2_rel_tol", format_double(fit.chi2_rel_tol));
    kv.emplace_back("fit.max_evaluations", std::to_string(fit.max_evaluations));
    kv.emplace_back("output.directory", output.directory);
    return kv;
  }
};

namespace detail {

inline void require_known_keys(const nlohmann::json& obj, const std::string& section,
                               std::initializer_list<const char*> known) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok)
      throw data_error("config: unknown key '" +
                       (section.empty() ? key : section + "." + key) + "'");
  }
}

template <typename T>
inline void maybe(const nlohmann::json& obj, const char* key, T& target) {
  if (const auto it = obj.find(key); it != obj.end()) {
    try {
      target = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw data_error("config: bad value for '" + std::string(key) + "': " + e.what());
    }
  }
}

} // namespace detail

/// Builds a RunConfig from JSON text. Unknown keys anywhere are a hard
/// error; values unset in the file keep their defaults (or the preset's).
inline RunConfig config_from_json(const std::string& text, RunConfig base = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("config: JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw data_error("config: top level must be an object");
  detail::require_known_keys(j, "", {"grid", "medium", "seed", "scan", "fit", "output"});

  RunConfig c = std::move(base);
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    detail::require_known_keys(g, "grid", {"n", "width"});
    detail::maybe(g, "n", c.grid.n);
    detail::maybe(g, "width", c.grid.width);
  }
  if (j.contains("medium")) {
    const auto& m = j["medium"];
    detail::require_known_keys(
        m, "medium", {"a1_re", "a1_im", "a2_re", "a2_im", "b", "length", "k"});
    detail::maybe(m, "a1_re", c.medium.a1_re);
    detail::maybe(m, "a1_im", c.medium.a1_im);
    detail::maybe(m, "a2_re", c.medium.a2_re);
    detail::maybe(m, "a2_im", c.medium.a2_im);
    detail::maybe(m, "b", c.medium.b);
    detail::maybe(m, "length", c.medium.length);
    detail::maybe(m, "k", c.medium.k);
  }
  if (j.contains("seed")) {
    const auto& s = j["seed"];
    detail::require_known_keys(s, "seed", {"sigma", "x0", "tilt", "amplitude"});
    detail::maybe(s, "sigma", c.seed.sigma);
    detail::maybe(s, "x0", c.seed.x0);
    detail::maybe(s, "tilt", c.seed.tilt);
    detail::maybe(s, "amplitude", c.seed.amplitude);
  }
  if (j.contains("scan")) {
    const auto& s = j["scan"];
    detail::require_known_keys(s, "scan",
                               {"nz", "b_values", "gain_values", "normalize_per_z"});
    detail::maybe(s, "nz", c.scan.nz);
    detail::maybe(s, "b_values", c.scan.b_values);
    detail::maybe(s, "gain_values", c.scan.gain_values);
    detail::maybe(s, "normalize_per_z", c.scan.normalize_per_z);
  }
  if (j.contains("fit")) {
    const auto& f = j["fit"];
    detail::require_known_keys(f, "fit",
                               {"fit_im_a1", "shared_offset", "weighted", "im_a1_min",
                                "im_a1_max", "simplex_tol", "chi2_rel_tol",
                                "max_evaluations"});
    detail::maybe(f, "fit_im_a1", c.fit.fit_im_a1);
    detail::maybe(f, "shared_offset", c.fit.shared_offset);
    detail::maybe(f, "weighted", c.fit.weighted);
    detail::maybe(f, "im_a1_min", c.fit.im_a1_min);
    detail::maybe(f, "im_a1_max", c.fit.im_a1_max);
    detail::maybe(f, "simplex_tol", c.fit.simplex_tol);
    detail::maybe(f, "chi2_rel_tol", c.fit.chi2_rel_tol);
    detail::maybe(f, "max_evaluations", c.fit.max_evaluations);
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    detail::require_known_keys(o, "output", {"directory"});
    detail::maybe(o, "directory", c.output.directory);
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
  return config_from_json(read_file(path), std::move(base));
}

namespace detail {

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return v;
}

} // namespace detail

/// Built-in parameter sets, one per reference scenario:
///   fig1        tilted narrow seed in a lossless medium, gain ~ 5e3
///   free        the same geometry with the medium switched off
///   fig2-loss   fig1 plus probe absorption Im(a1) = 2.3e-5
///   experiment  20 mm cell at 795 nm (L = 25157 lambda), 5 mrad geometry,
///               direct coupling on the probe only
inline RunConfig preset_config(const std::string& name) {
  RunConfig c;
  if (name == "fig1" || name == "free" || name == "fig2-loss") {
    c.medium = MediumConfig{2.8e-5, 0.0, 2.8e-5, 0.0, 1e-4, 5e4, two_pi};
    c.seed = SeedConfig{100.0, 0.0, 3e-3, 1.0};
    c.scan.b_values = detail::linspace(1.3e-5, 4.9e-5, 20);
    if (name == "free") {
      c.medium.a1_re = c.medium.a2_re = 0.0;
      c.medium.b = 0.0;
    } else if (name == "fig2-loss") {
      c.medium.a1_im = 2.3e-5;
    }
    return c;
  }
  if (name == "experiment") {
    // 20 mm / 795 nm = 25157 lambda; phase matched at 5 mrad with a2 = 0.
    const double angle = 5e-3;
    c.medium = MediumConfig{two_pi * angle * angle, 0.0, 0.0, 0.0,
                            1e-4, 25157.0, two_pi};
    c.seed = SeedConfig{100.0, 0.0, angle, 1.0};
    c.scan.b_values = detail::linspace(2.743e-5, 9.877e-5, 20);
    return c;
  }
  throw parameter_error("unknown preset '" + name +
                        "' (available: fig1, free, fig2-loss, experiment)");
}

} // namespace twinbeam
