#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "twinbeam/beams.hpp"
#include "twinbeam/core.hpp"
#include "twinbeam/errors.hpp"

namespace twinbeam {

struct TrajectoryRecord {
  double z = 0.0;
  double com1 = 0.0, com2 = 0.0;
  double peak1 = 0.0, peak2 = 0.0;
  double power1 = 0.0, power2 = 0.0;
  double mean_kx1 = 0.0, mean_kx2 = 0.0;
  double gain_so_far = 1.0;  // power1 / seed power
  double free_line = 0.0;    // x0 + tilt * z
  double separation = 0.0;   // |com1 - com2|
};

struct ExitCurvePoint {
  double b = 0.0;
  double net_gain = std::numeric_limits<double>::quiet_NaN();
  double exit_com1 = std::numeric_limits<double>::quiet_NaN();
  double exit_com2 = std::numeric_limits<double>::quiet_NaN();
  double hitch_distance = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok"; // "ok", "no-idler", or the failure message

  bool ok() const { return status == "ok" || status == "no-idler"; }
};

struct IntensityMaps {
  std::size_t nz = 0;
  std::size_t nx = 0;
  std::vector<double> z_samples;
  std::vector<double> mode1; // row-major nz x nx, row j at z_samples[j]
  std::vector<double> mode2;
  bool normalized_per_z = false;
};

namespace detail {

/// Evenly spaced z samples including both ends of the medium.
inline std::vector<double> z_ladder(double length, std::size_t nz) {
  std::vector<double> zs(nz);
  for (std::size_t j = 0; j < nz; ++j)
    zs[j] = length * static_cast<double>(j) / static_cast<double>(nz - 1);
  zs.back() = length;
  return zs;
}

} // namespace detail

/// Samples the twin-beam state at nz evenly spaced z positions, each from
/// an exact 0 -> z transfer (no step chaining, no error accumulation).
/// At z = 0 mode 2 carries no power yet; its com/peak columns hold the
/// z -> 0+ limit, which is the seed position.
inline std::vector<TrajectoryRecord> trajectory(const SeedSpec& spec,
                                                const Grid1D& grid,
                                                const MediumParams& medium,
                                                std::size_t nz) {
  medium.validate();
  if (nz < 2) throw parameter_error("trajectory: nz must be >= 2");
  const Field1D seed = synthesize_seed(spec, grid, medium.k);
  const double seed_power = total_power(seed);

  std::vector<TrajectoryRecord> records;
  records.reserve(nz);
  for (const double z : detail::z_ladder(medium.length, nz)) {
    try {
      const TwinBeamState state = propagate_to(seed, z, medium);
      TrajectoryRecord r;
      r.z = z;
      const BeamDiagnostics d1 = diagnostics(state.spec1, medium.k);
      r.com1 = d1.com;
      r.peak1 = d1.peak;
      r.power1 = d1.power;
      r.mean_kx1 = d1.mean_kx;
      if (total_power(state.spec2) > 0.0) {
        const BeamDiagnostics d2 = diagnostics(state.spec2, medium.k);
        r.com2 = d2.com;
        r.peak2 = d2.peak;
        r.power2 = d2.power;
        r.mean_kx2 = d2.mean_kx;
      } else {
        r.com2 = r.com1;
        r.peak2 = r.peak1;
        r.power2 = 0.0;
        r.mean_kx2 = std::numeric_limits<double>::quiet_NaN();
      }
      r.gain_so_far = r.power1 / seed_power;
      r.free_line = spec.x0 + spec.tilt * z;
      r.separation = std::abs(r.com1 - r.com2);
      records.push_back(r);
    } catch (const guard_error& e) {
      throw guard_error("at z = " + std::to_string(z) + ": " + e.what());
    }
  }
  return records;
}

/// Intensity |E_i(x, z_j)|^2 on an nz x n raster for both modes.
/// With normalize_per_z each row is scaled to a maximum of 1, matching the
/// per-z normalized view of the apparent trajectory.
inline IntensityMaps intensity_map(const SeedSpec& spec, const Grid1D& grid,
                                   const MediumParams& medium, std::size_t nz,
                                   bool normalize_per_z) {
  medium.validate();
  if (nz < 2) throw parameter_error("intensity_map: nz must be >= 2");
  const Field1D seed = synthesize_seed(spec, grid, medium.k);
  const std::size_t n = grid.size();

  IntensityMaps maps;
  maps.nz = nz;
  maps.nx = n;
  maps.z_samples = detail::z_ladder(medium.length, nz);
  maps.mode1.resize(nz * n);
  maps.mode2.resize(nz * n);
  maps.normalized_per_z = normalize_per_z;

  for (std::size_t j = 0; j < nz; ++j) {
    const TwinBeamState state = propagate_to(seed, maps.z_samples[j], medium);
    const Field1D f1 = inverse_transform(state.spec1);
    const Field1D f2 = inverse_transform(state.spec2);
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double i1 = std::norm(f1.values[i]);
      const double i2 = std::norm(f2.values[i]);
      maps.mode1[j * n + i] = i1;
      maps.mode2[j * n + i] = i2;
      m1 = std::max(m1, i1);
      m2 = std::max(m2, i2);
    }
    if (normalize_per_z) {
      if (m1 > 0.0)
        for (std::size_t i = 0; i < n; ++i) maps.mode1[j * n + i] /= m1;
      if (m2 > 0.0)
        for (std::size_t i = 0; i < n; ++i) maps.mode2[j * n + i] /= m2;
    }
  }
  return maps;
}

/// Per-z normalized view of an already computed raster (each row scaled to
/// max 1). Identical to intensity_map(..., normalize_per_z = true).
inline IntensityMaps normalized_per_z(IntensityMaps maps) {
  const auto normalize = [&](std::vector<double>& raster) {
    for (std::size_t j = 0; j < maps.nz; ++j) {
      double peak = 0.0;
      for (std::size_t i = 0; i < maps.nx; ++i)
        peak = std::max(peak, raster[j * maps.nx + i]);
      if (peak > 0.0)
        for (std::size_t i = 0; i < maps.nx; ++i) raster[j * maps.nx + i] /= peak;
    }
  };
  normalize(maps.mode1);
  normalize(maps.mode2);
  maps.normalized_per_z = true;
  return maps;
}

/// Exit diagnostics as a function of the cross coupling b, every other
/// parameter held fixed. One degenerate point (b = 0 has no idler; a guard
/// may trip) is recorded in its status and does not abort the sweep.
inline std::vector<ExitCurvePoint> exit_curve(const SeedSpec& spec,
                                              const Grid1D& grid,
                                              const MediumParams& medium_template,
                                              const std::vector<double>& b_values) {
  for (double b : b_values)
    if (!(b >= 0.0)) throw parameter_error("exit_curve: b values must be >= 0");
  const Field1D seed = synthesize_seed(spec, grid, medium_template.k);

  std::vector<ExitCurvePoint> points;
  points.reserve(b_values.size());
  for (const double b : b_values) {
    ExitCurvePoint p;
    p.b = b;
    try {
      MediumParams medium = medium_template;
      medium.b = b;
      medium.validate();
      const TwinBeamState state = propagate_to(seed, medium.length, medium);
      p.net_gain = net_gain(state, seed);
      p.exit_com1 = diagnostics(state.spec1, medium.k).com;
      if (total_power(state.spec2) > 0.0) {
        p.exit_com2 = diagnostics(state.spec2, medium.k).com;
        p.hitch_distance = std::abs(p.exit_com1 - p.exit_com2);
      } else {
        p.status = "no-idler";
      }
    } catch (const std::exception& e) {
      p.status = e.what();
    }
    points.push_back(p);
  }
  return points;
}

struct HitchingOnset {
  double z_star = 0.0;
  double gain_star = 1.0;
};

/// Locates where the twin-beam separation first reaches
/// threshold_fraction * separation(L), with the gain there interpolated
/// linearly between samples. If that crossing happens beyond
/// boundary_fraction * L the separation is still growing at the exit and
/// no plateau can be claimed (a separation growing linearly to the end
/// crosses 90% of its final value at exactly 0.9 L, so the boundary sits
/// below the threshold fraction). A trajectory whose separation never
/// leaves zero is degenerate: onset at z = 0, gain 1.
inline HitchingOnset hitching_onset(const std::vector<TrajectoryRecord>& records,
                                    double threshold_fraction = 0.9,
                                    double boundary_fraction = 0.85) {
  if (records.size() < 2)
    throw parameter_error("hitching_onset: need at least 2 trajectory records");
  if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0))
    throw parameter_error("hitching_onset: threshold fraction must be in (0,1)");

  const double length = records.back().z;
  const double sep_end = records.back().separation;
  double sep_max = 0.0;
  for (const auto& r : records) sep_max = std::max(sep_max, r.separation);
  if (sep_max <= 1e-9 * records.front().peak1 + 1e-12)
    return {0.0, 1.0}; // separation never develops

  if (!(sep_end > 0.0))
    throw onset_error("hitching_onset: zero separation at the medium exit");

  const double threshold = threshold_fraction * sep_end;
  for (std::size_t j = 0; j < records.size(); ++j) {
    if (records[j].separation < threshold) continue;
    double z_star = records[j].z;
    double gain_star = records[j].gain_so_far;
    if (j > 0) {
      const auto& lo = records[j - 1];
      const auto& hi = records[j];
      const double t = (threshold - lo.separation) / (hi.separation - lo.separation);
      z_star = lo.z + t * (hi.z - lo.z);
      gain_star = lo.gain_so_far + t * (hi.gain_so_far - lo.gain_so_far);
    }
    if (z_star > boundary_fraction * length)
      throw onset_error("hitching_onset: separation still growing at the exit "
                        "(no plateau before z = " +
                        std::to_string(boundary_fraction) + " L)");
    return {z_star, gain_star};
  }
  throw onset_error("hitching_onset: threshold crossing not found");
}

} // namespace twinbeam
