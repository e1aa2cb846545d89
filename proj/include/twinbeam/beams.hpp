#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "twinbeam/core.hpp"
#include "twinbeam/errors.hpp"
#include "twinbeam/transfer.hpp"

namespace twinbeam {

/// Spectral bins whose intensity falls below this fraction of the peak are
/// skipped during medium propagation; their contribution sits ~14 decades
/// below double precision of any reported quantity.
inline constexpr double spectral_support_cutoff = 1e-30;

/// Fraction of the window (each side) checked by the edge-leakage guard,
/// and the intensity fraction that trips it.
inline constexpr double edge_guard_window_fraction = 0.01;
inline constexpr double edge_guard_intensity_fraction = 1e-6;

struct BeamDiagnostics {
  double power = 0.0;    // sum I dx
  double com = 0.0;      // intensity center of mass [lambda]
  double peak = 0.0;     // parabolic-refined position of max intensity [lambda]
  double width = 0.0;    // intensity std [lambda]
  double mean_kx = 0.0;  // spectral-intensity-weighted <kx> [rad/lambda]
  double mean_angle = 0.0; // <kx>/k [rad]
};

/// Tilted Gaussian seed on the grid:
///   E(x) = amplitude * exp(-(x-x0)^2/(2 sigma^2)) * exp(i k tilt (x-x0)).
/// The tilt phase must stay below the spectral Nyquist limit.
inline Field1D synthesize_seed(const SeedSpec& spec, const Grid1D& grid,
                               double k = two_pi) {
  spec.validate();
  if (!(k > 0.0)) throw parameter_error("synthesize_seed: k must be > 0");
  if (!(std::abs(spec.tilt) * k < std::numbers::pi / grid.dx()))
    throw parameter_error("synthesize_seed: tilt phase would alias on this grid");
  Field1D f{grid, std::vector<cplx>(grid.size()), 0.0};
  const double inv2s2 = 1.0 / (2.0 * spec.sigma * spec.sigma);
  const double q = k * spec.tilt;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double u = grid.x(j) - spec.x0;
    f.values[j] = spec.amplitude * std::exp(-u * u * inv2s2) *
                  std::polar(1.0, q * u);
  }
  return f;
}

namespace detail {

inline void edge_leakage_guard(const std::vector<double>& I, const Grid1D& g) {
  const std::size_t margin =
      std::max<std::size_t>(1, static_cast<std::size_t>(
                                   static_cast<double>(g.size()) * edge_guard_window_fraction));
  double peak = 0.0;
  for (double v : I) peak = std::max(peak, v);
  if (peak <= 0.0) return;
  double edge = 0.0;
  for (std::size_t j = 0; j < margin; ++j) {
    edge = std::max(edge, I[j]);
    edge = std::max(edge, I[I.size() - 1 - j]);
  }
  if (edge > edge_guard_intensity_fraction * peak)
    throw guard_error(
        "edge-leakage guard: beam intensity reaches the window border "
        "(wraparound would corrupt diagnostics); enlarge the grid window");
}

/// Center of mass of a sampled nonnegative weight. `coords` gives the
/// coordinate of each sample.
inline double weighted_mean(const std::vector<double>& w,
                            const std::vector<double>& coords) {
  std::vector<double> xw(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) xw[j] = w[j] * coords[j];
  return pairwise_sum(xw) / pairwise_sum(w);
}

inline double refined_peak(const std::vector<double>& I, const Grid1D& g,
                           bool spectral) {
  const std::size_t j =
      static_cast<std::size_t>(std::max_element(I.begin(), I.end()) - I.begin());
  const auto coord = [&](std::size_t idx) {
    return spectral ? g.kx(idx) : g.x(idx);
  };
  if (j == 0 || j + 1 == I.size()) return coord(j);
  const double y0 = I[j - 1], y1 = I[j], y2 = I[j + 1];
  const double denom = y0 - 2.0 * y1 + y2;
  if (denom == 0.0) return coord(j);
  const double delta = 0.5 * (y0 - y2) / denom;
  const double step = spectral ? g.dkx() : g.dx();
  return coord(j) + delta * step;
}

/// Center of mass alone, on the fast path used by the fit model (no peak,
/// width or spectral moments). Runs the same zero-field and edge-leakage
/// guards as the full diagnostics.
inline double center_of_mass(const Spectrum1D& spectrum) {
  const Field1D f = inverse_transform(spectrum);
  const Grid1D& g = f.grid;
  const std::vector<double> I = intensity_of(f.values);
  const double mass = pairwise_sum(I);
  if (!(mass > 0.0))
    throw guard_error("diagnostics: zero field, diagnostics undefined");
  edge_leakage_guard(I, g);
  std::vector<double> xw(I.size());
  for (std::size_t j = 0; j < I.size(); ++j) xw[j] = I[j] * g.x(j);
  return pairwise_sum(xw) / mass;
}

inline BeamDiagnostics diagnostics_impl(const Field1D& f, const Spectrum1D& s,
                                        double k) {
  const Grid1D& g = f.grid;
  const std::vector<double> I = intensity_of(f.values);
  const double mass = pairwise_sum(I);
  if (!(mass > 0.0))
    throw guard_error("diagnostics: zero field, diagnostics undefined");
  edge_leakage_guard(I, g);

  BeamDiagnostics d;
  d.power = mass * g.dx();
  const std::vector<double> xs = g.x_samples();
  d.com = weighted_mean(I, xs);
  d.peak = refined_peak(I, g, /*spectral=*/false);
  std::vector<double> dev(I.size());
  for (std::size_t j = 0; j < I.size(); ++j) {
    const double u = xs[j] - d.com;
    dev[j] = I[j] * u * u;
  }
  d.width = std::sqrt(pairwise_sum(dev) / mass);

  const std::vector<double> W = intensity_of(s.values);
  d.mean_kx = weighted_mean(W, g.kx_samples());
  d.mean_angle = d.mean_kx / k;
  return d;
}

} // namespace detail

/// Beam diagnostics of an x-domain field (its spectrum is computed
/// internally for the <kx> moments).
inline BeamDiagnostics diagnostics(const Field1D& field, double k = two_pi) {
  detail::require_size(field.values.size(), field.grid);
  return detail::diagnostics_impl(field, forward_transform(field), k);
}

/// Beam diagnostics of a spectral envelope (the x-domain profile is
/// reconstructed internally).
inline BeamDiagnostics diagnostics(const Spectrum1D& spectrum, double k = two_pi) {
  detail::require_size(spectrum.values.size(), spectrum.grid);
  return detail::diagnostics_impl(inverse_transform(spectrum), spectrum, k);
}

namespace detail {

/// Core spectral propagation, shared between propagate_to and the fit
/// machinery (which holds the seed spectrum precomputed).
inline TwinBeamState propagate_spectrum(const Spectrum1D& seed_spec, double z,
                                        const MediumParams& medium) {
  medium.validate();
  if (!(z >= 0.0) || !(z <= medium.length))
    throw parameter_error("propagate_to: z must lie in [0, medium length]");
  if (medium.a1.imag() > 0.0 || medium.a2.imag() > 0.0)
    absorption_sign_self_test();

  const Grid1D& g = seed_spec.grid;
  const std::size_t n = g.size();

  double peak = 0.0;
  for (const cplx& v : seed_spec.values) peak = std::max(peak, std::norm(v));
  const double cutoff = spectral_support_cutoff * peak;

  std::vector<cplx> e1(n, cplx(0.0, 0.0));
  std::vector<cplx> c(n, cplx(0.0, 0.0));
  for (std::size_t m = 0; m < n; ++m) {
    const cplx es = seed_spec.values[m];
    if (std::norm(es) < cutoff) continue;
    const TransferMatrix tm = transfer_matrix(g.kx(m), z, medium);
    e1[m] = tm.m11 * es;
    c[m] = tm.m21 * es;
  }

  std::vector<cplx> e2(n);
  for (std::size_t m = 0; m < n; ++m) e2[m] = std::conj(c[g.mirror_index(m)]);
  return TwinBeamState{z, Spectrum1D{g, std::move(e1), z},
                       Spectrum1D{g, std::move(e2), z}};
}

} // namespace detail

/// Propagates a mode-1 seed from the medium entrance to z via the exact
/// spectral transfer. For each kx the pair [E1(kx), conj(E2(-kx))] starts
/// as [Es(kx), 0]; the second output component c(kx) is then unfolded as
/// E2(kx, z) = conj(c(-kx)). This pairing makes mode 2 emerge mirrored
/// across the pump axis, which is what conservation of transverse momentum
/// demands (the momentum property test pins it down).
inline TwinBeamState propagate_to(const Field1D& seed, double z,
                                  const MediumParams& medium) {
  if (seed.z != 0.0)
    throw parameter_error("propagate_to: seed must be tagged z = 0");
  return detail::propagate_spectrum(forward_transform(seed), z, medium);
}

/// Free-space (no medium) propagation: the paraxial phase e^{-i kx^2 z / 2k}
/// per spectral component. The center of mass follows x0 + tilt * z.
inline Field1D free_propagate(const Field1D& seed, double z, double k = two_pi) {
  if (!(k > 0.0)) throw parameter_error("free_propagate: k must be > 0");
  if (!std::isfinite(z)) throw parameter_error("free_propagate: z must be finite");
  Spectrum1D spec = forward_transform(seed);
  const Grid1D& g = seed.grid;
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double kx = g.kx(m);
    spec.values[m] *= std::polar(1.0, -kx * kx / (2.0 * k) * z);
  }
  Field1D out = inverse_transform(spec);
  out.z = seed.z + z;
  return out;
}

/// Power gain of the seeded mode: power(mode 1 at state.z) / power(seed).
/// Powers are evaluated spectrally (equal to the x-domain sums under the
/// unitary transform convention).
inline double net_gain(const TwinBeamState& state, const Field1D& seed) {
  const double p0 = total_power(seed);
  if (!(p0 > 0.0)) throw parameter_error("net_gain: seed power is zero");
  return total_power(state.spec1) / p0;
}

/// |com(mode 1) - com(mode 2)| at the state's z. Requires mode 2 to carry
/// power: before any conversion happened (z = 0, or b = 0) the distance is
/// undefined.
inline double hitching_distance(const TwinBeamState& state, double k = two_pi) {
  if (!(total_power(state.spec2) > 0.0))
    throw guard_error("hitching_distance: idler not yet generated (mode 2 empty)");
  const BeamDiagnostics d1 = diagnostics(state.spec1, k);
  const BeamDiagnostics d2 = diagnostics(state.spec2, k);
  return std::abs(d1.com - d2.com);
}

} // namespace twinbeam
