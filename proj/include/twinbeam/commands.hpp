#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "twinbeam/config.hpp"
#include "twinbeam/core.hpp"
#include "twinbeam/fit.hpp"
#include "twinbeam/io.hpp"
#include "twinbeam/scan.hpp"
#include "twinbeam/transfer.hpp"

namespace twinbeam {

namespace detail {

inline nlohmann::json config_json(const RunConfig& config) {
  nlohmann::json j;
  for (const auto& [key, value] : config.flat()) j[key] = value;
  return j;
}

inline nlohmann::json diagnostics_json(const BeamDiagnostics& d) {
  return {{"power", d.power},   {"com", d.com},
          {"peak", d.peak},     {"width", d.width},
          {"mean_kx", d.mean_kx}, {"mean_angle", d.mean_angle}};
}

} // namespace detail

/// `phasematch`: the seed tilt that phase-matches the configured medium,
/// or (given a target angle) the Re(a1) that would realize it.
inline int cmd_phasematch(const RunConfig& config, std::optional<double> angle,
                          std::optional<double> a2_re, std::ostream& out) {
  MediumParams medium = config.medium_params();
  if (a2_re) medium.a2 = cplx(*a2_re, medium.a2.imag());
  medium.validate();
  if (angle) {
    const double implied = medium.k * (*angle) * (*angle) - medium.a2.real();
    out << "angle_rad = " << format_double(*angle) << "\n";
    out << "implied_a1_re = " << format_double(implied) << "\n";
  } else {
    out << "phase_matched_angle_rad = " << format_double(phase_matched_angle(medium))
        << "\n";
  }
  return 0;
}

/// `propagate` / `trajectory`: z-resolved twin-beam diagnostics
/// (diagnostics.csv, summary.json) plus, for `propagate`, raw and per-z
/// normalized intensity rasters of both modes.
inline int cmd_propagate(const RunConfig& config, bool write_maps, std::ostream& out) {
  const Grid1D grid = config.make_grid();
  const MediumParams medium = config.medium_params();
  const SeedSpec seed = config.seed_spec();
  const std::filesystem::path dir(config.output.directory);
  std::filesystem::create_directories(dir);

  const auto records = trajectory(seed, grid, medium, config.scan.nz);
  write_file_atomic(dir / "diagnostics.csv", trajectory_csv(records, config.flat()));

  if (write_maps) {
    const IntensityMaps raw = intensity_map(seed, grid, medium, config.scan.nz, false);
    const IntensityMaps norm = normalized_per_z(raw);
    write_file_atomic(dir / "mode1.pgm", intensity_map_pgm(raw, true));
    write_file_atomic(dir / "mode2.pgm", intensity_map_pgm(raw, false));
    write_file_atomic(dir / "mode1_norm.pgm", intensity_map_pgm(norm, true));
    write_file_atomic(dir / "mode2_norm.pgm", intensity_map_pgm(norm, false));
  }

  const Field1D seed_field = synthesize_seed(seed, grid, medium.k);
  const TwinBeamState exit_state = propagate_to(seed_field, medium.length, medium);
  nlohmann::json summary;
  summary["config"] = detail::config_json(config);
  summary["exit"]["z"] = medium.length;
  summary["exit"]["mode1"] = detail::diagnostics_json(diagnostics(exit_state.spec1, medium.k));
  summary["exit"]["net_gain"] = net_gain(exit_state, seed_field);
  summary["exit"]["free_line"] = seed.x0 + seed.tilt * medium.length;
  if (total_power(exit_state.spec2) > 0.0) {
    summary["exit"]["mode2"] = detail::diagnostics_json(diagnostics(exit_state.spec2, medium.k));
    summary["exit"]["hitching_distance"] = hitching_distance(exit_state, medium.k);
  } else {
    summary["exit"]["mode2"] = nullptr;
    summary["exit"]["hitching_distance"] = nullptr;
  }
  try {
    const HitchingOnset onset = hitching_onset(records);
    summary["onset"]["z_star"] = onset.z_star;
    summary["onset"]["gain_star"] = onset.gain_star;
  } catch (const onset_error& e) {
    summary["onset"] = e.what();
  }
  write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");

  out << "wrote " << (dir / "diagnostics.csv").string();
  if (write_maps) out << " and 4 intensity maps";
  out << "\n";
  return 0;
}

/// `sweep`: exit positions vs cross coupling (or vs requested net gains),
/// one CSV per Im(a1) value.
inline int cmd_sweep(const RunConfig& config, const std::vector<double>& a1_im_values,
                     std::ostream& out) {
  const Grid1D grid = config.make_grid();
  const SeedSpec seed = config.seed_spec();
  const std::filesystem::path dir(config.output.directory);
  std::filesystem::create_directories(dir);

  const std::vector<double> ims =
      a1_im_values.empty() ? std::vector<double>{config.medium.a1_im} : a1_im_values;

  std::size_t succeeded = 0;
  for (std::size_t vi = 0; vi < ims.size(); ++vi) {
    RunConfig effective = config;
    effective.medium.a1_im = ims[vi];
    const MediumParams medium = effective.medium_params();

    std::vector<double> b_values = effective.scan.b_values;
    if (!effective.scan.gain_values.empty()) {
      b_values.clear();
      for (double gain : effective.scan.gain_values)
        b_values.push_back(b_from_gain(gain, medium, seed, grid));
    }
    if (b_values.empty())
      throw data_error("sweep: no b_values or gain_values configured");

    const auto points = exit_curve(seed, grid, medium, b_values);
    for (const auto& p : points)
      if (p.ok()) ++succeeded;

    const std::string name =
        ims.size() == 1 ? "exit_curve.csv" : "exit_curve_" + std::to_string(vi) + ".csv";
    write_file_atomic(dir / name, exit_curve_csv(points, effective.flat()));
    out << "wrote " << (dir / name).string() << "\n";
  }
  return succeeded > 0 ? 0 : 1;
}

/// `fit`: least-squares fit of the hitching model to a measured dataset.
/// Non-convergence is reported in the result file, not as a process error.
inline int cmd_fit(const RunConfig& config, const std::filesystem::path& data_path,
                   std::ostream& out) {
  const HitchDataset data = read_dataset_csv(data_path);
  const Grid1D grid = config.make_grid();
  const FitResult fit = fit_hitching(data, grid, config.fit_options());

  const std::filesystem::path dir(config.output.directory);
  std::filesystem::create_directories(dir);

  nlohmann::json report;
  report["im_a1"] = fit.im_a1;
  report["im_a1_fitted"] = fit.im_a1_fitted;
  report["offset1"] = fit.offset1;
  report["offset2"] = fit.offset2;
  report["chi2"] = fit.chi2;
  report["dof"] = fit.dof;
  report["chi2_per_dof"] = fit.dof > 0 ? fit.chi2 / static_cast<double>(fit.dof) : 0.0;
  report["converged"] = fit.converged;
  report["at_bound"] = fit.at_bound;
  report["evaluations"] = fit.evaluations;
  report["config"] = detail::config_json(config);
  write_file_atomic(dir / "fit_result.json", report.dump(2) + "\n");
  write_file_atomic(dir / "residuals.csv", residuals_csv(data, fit, config.flat()));

  out << "im_a1 = " << format_double(fit.im_a1)
      << (fit.im_a1_fitted ? "" : " (fixed)")
      << ", offsets = (" << format_double(fit.offset1) << ", "
      << format_double(fit.offset2) << ")"
      << ", chi2/dof = "
      << format_double(fit.dof > 0 ? fit.chi2 / static_cast<double>(fit.dof) : 0.0)
      << ", converged = " << (fit.converged ? "true" : "false") << "\n";
  return 0;
}

} // namespace twinbeam
