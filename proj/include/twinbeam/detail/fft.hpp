#pragma once

#include <bit>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace twinbeam::detail {

/// In-place iterative radix-2 Cooley-Tukey transform, unnormalized.
/// direction = -1: forward kernel e^{-2 pi i m j / n}
/// direction = +1: inverse kernel e^{+2 pi i m j / n}
/// Grids in this library are powers of two by construction, so radix-2 is
/// all we need. Twiddles come from a per-call table filled with std::polar,
/// keeping the round trip accurate to ~1e-15 relative at n = 4096.
inline void fft_pow2(std::span<std::complex<double>> v, int direction) {
  const std::size_t n = v.size();
  if (n < 2) return;

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(v[i], v[j]);
  }

  // forward-sign twiddle table, cached per thread for the last grid size
  thread_local std::vector<std::complex<double>> twiddle;
  thread_local std::size_t twiddle_n = 0;
  if (twiddle_n != n) {
    twiddle.resize(n / 2);
    for (std::size_t j = 0; j < n / 2; ++j) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) /
                           static_cast<double>(n);
      twiddle[j] = std::polar(1.0, angle);
    }
    twiddle_n = n;
  }

  const bool conjugate = direction > 0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    for (std::size_t block = 0; block < n; block += len) {
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> base = twiddle[j * stride];
        const std::complex<double> w = conjugate ? std::conj(base) : base;
        std::complex<double>& lo = v[block + j];
        std::complex<double>& hi = v[block + j + len / 2];
        const std::complex<double> t = w * hi;
        hi = lo - t;
        lo += t;
      }
    }
  }
}

inline bool is_pow2(std::size_t n) { return n != 0 && std::has_single_bit(n); }

} // namespace twinbeam::detail
