#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "twinbeam/detail/fft.hpp"
#include "twinbeam/detail/numeric.hpp"
#include "twinbeam/errors.hpp"

namespace twinbeam {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Unit conventions used throughout: lengths in units of the wavelength
/// lambda, transverse wavenumbers and coupling coefficients in rad/lambda,
/// and the carrier wave number k = 2*pi rad/lambda unless overridden.

/// Coupled-mode coefficients of the gain medium. a1/a2 are the direct
/// (single-beam) susceptibility terms; a positive imaginary part means
/// absorption of that mode under this library's sign convention. b is the
/// real cross coupling driving the parametric process.
struct MediumParams {
  cplx a1{0.0, 0.0};
  cplx a2{0.0, 0.0};
  double b = 0.0;
  double length = 0.0;
  double k = two_pi;

  void validate() const {
    if (!(b >= 0.0) || !std::isfinite(b))
      throw parameter_error("medium: cross coupling b must be real, finite and >= 0");
    if (!(length > 0.0) || !std::isfinite(length))
      throw parameter_error("medium: length must be > 0");
    if (!(k > 0.0) || !std::isfinite(k))
      throw parameter_error("medium: wave number k must be > 0");
    if (a1.imag() < 0.0 || a2.imag() < 0.0)
      throw parameter_error("medium: Im(a1), Im(a2) must be >= 0 (absorption convention)");
  }
};

/// Tilted Gaussian seed: field std sigma, center x0, propagation angle tilt
/// against the z axis. The intensity profile then has std sigma/sqrt(2).
struct SeedSpec {
  double sigma = 100.0;
  double x0 = 0.0;
  double tilt = 0.0;
  double amplitude = 1.0;

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw parameter_error("seed: sigma must be > 0");
    if (!(amplitude > 0.0) || !std::isfinite(amplitude))
      throw parameter_error("seed: amplitude must be > 0");
    if (!std::isfinite(x0) || !std::isfinite(tilt))
      throw parameter_error("seed: x0/tilt must be finite");
  }
};

/// Uniform transverse grid of n samples over a window of the given width,
/// together with its discrete-transform conjugate grid.
///
/// x(j) ascends and is centered: x = (j - n/2) * dx.
/// kx(m) is stored in transform-natural order and spans (-pi/dx, pi/dx]
/// with spacing 2*pi/width; use kx_sorted_order() for a monotone view.
class Grid1D {
public:
  Grid1D(std::size_t n, double width) : n_(n), width_(width) {
    if (n < 16 || !detail::is_pow2(n))
      throw parameter_error("grid: n must be a power of two >= 16");
    if (!(width > 0.0) || !std::isfinite(width))
      throw parameter_error("grid: width must be > 0");
    dx_ = width_ / static_cast<double>(n_);
    dkx_ = two_pi / width_;
  }

  std::size_t size() const { return n_; }
  double width() const { return width_; }
  double dx() const { return dx_; }
  double dkx() const { return dkx_; }

  double x(std::size_t j) const {
    return (static_cast<double>(j) - static_cast<double>(n_ / 2)) * dx_;
  }

  double kx(std::size_t m) const {
    const auto half = n_ / 2;
    const double idx = m <= half ? static_cast<double>(m)
                                 : static_cast<double>(m) - static_cast<double>(n_);
    return idx * dkx_;
  }

  std::vector<double> x_samples() const {
    std::vector<double> v(n_);
    for (std::size_t j = 0; j < n_; ++j) v[j] = x(j);
    return v;
  }

  std::vector<double> kx_samples() const {
    std::vector<double> v(n_);
    for (std::size_t m = 0; m < n_; ++m) v[m] = kx(m);
    return v;
  }

  /// Indices that put kx_samples() in ascending order.
  std::vector<std::size_t> kx_sorted_order() const {
    std::vector<std::size_t> order(n_);
    std::size_t pos = 0;
    for (std::size_t m = n_ / 2 + 1; m < n_; ++m) order[pos++] = m;
    for (std::size_t m = 0; m <= n_ / 2; ++m) order[pos++] = m;
    return order;
  }

  /// Index of -kx for a natural-order index (Nyquist maps to itself).
  std::size_t mirror_index(std::size_t m) const { return m == 0 ? 0 : n_ - m; }

  friend bool operator==(const Grid1D& a, const Grid1D& b) {
    return a.n_ == b.n_ && a.width_ == b.width_;
  }

private:
  std::size_t n_;
  double width_;
  double dx_;
  double dkx_;
};

inline Grid1D make_grid(std::size_t n, double width) { return Grid1D(n, width); }

/// Complex envelope sampled on grid.x, tagged with its z position.
struct Field1D {
  Grid1D grid;
  std::vector<cplx> values;
  double z = 0.0;
};

/// Complex spectral envelope sampled on grid.kx (natural order).
struct Spectrum1D {
  Grid1D grid;
  std::vector<cplx> values;
  double z = 0.0;
};

/// Both spectral envelopes at one z. spec2 stores mode 2 itself
/// (un-conjugated); the (kx, -kx) conjugate pairing lives inside
/// propagation, not in this container.
struct TwinBeamState {
  double z;
  Spectrum1D spec1;
  Spectrum1D spec2;
};

namespace detail {

inline void require_size(std::size_t have, const Grid1D& grid) {
  if (have != grid.size())
    throw parameter_error("field/spectrum sample count does not match its grid");
}

} // namespace detail

/// Unitary discrete transform with forward kernel e^{-i kx x}:
///   S(kx_m) = dx/sqrt(2 pi) * sum_j E(x_j) e^{-i kx_m x_j}.
/// Power sum |E|^2 dx equals sum |S|^2 dkx, and the pair round-trips to
/// machine precision. (A continuous-convention prefactor would only rescale
/// amplitudes; every diagnostic downstream is a ratio or a position.)
inline Spectrum1D forward_transform(const Field1D& field) {
  const Grid1D& g = field.grid;
  detail::require_size(field.values.size(), g);
  Spectrum1D out{g, field.values, field.z};
  detail::fft_pow2(out.values, -1);
  // Centered x origin shows up as alternating signs on the raw transform.
  const double scale = g.dx() / std::sqrt(two_pi);
  for (std::size_t m = 0; m < out.values.size(); ++m)
    out.values[m] *= (m & 1u) ? -scale : scale;
  return out;
}

inline Field1D inverse_transform(const Spectrum1D& spectrum) {
  const Grid1D& g = spectrum.grid;
  detail::require_size(spectrum.values.size(), g);
  Field1D out{g, spectrum.values, spectrum.z};
  const double scale = g.dkx() / std::sqrt(two_pi);
  for (std::size_t m = 0; m < out.values.size(); ++m)
    out.values[m] *= (m & 1u) ? -scale : scale;
  detail::fft_pow2(out.values, +1);
  return out;
}

namespace detail {

inline std::vector<double> intensity_of(const std::vector<cplx>& v) {
  std::vector<double> I(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) I[i] = std::norm(v[i]);
  return I;
}

} // namespace detail

/// Total power sum |E|^2 dx (or the spectral equivalent, which is equal
/// under the unitary convention).
inline double total_power(const Field1D& f) {
  return detail::pairwise_sum(detail::intensity_of(f.values)) * f.grid.dx();
}

inline double total_power(const Spectrum1D& s) {
  return detail::pairwise_sum(detail::intensity_of(s.values)) * s.grid.dkx();
}

} // namespace twinbeam
