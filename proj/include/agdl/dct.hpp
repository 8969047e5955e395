#pragma once

// Orthonormal 8x8 2-D DCT-II. For a constant block of value v the DC
// coefficient is 8*v and all AC terms vanish.

#include <array>
#include <cmath>
#include <numbers>

namespace agdl {

inline constexpr int kBlock = 8;

namespace detail {

// m[u*8+x] = a(u) * cos((2x+1) u pi / 16), a(0)=sqrt(1/8), a(u>0)=1/2.
inline const std::array<double, 64>& dct_basis() {
  static const std::array<double, 64> m = [] {
    std::array<double, 64> t{};
    for (int u = 0; u < kBlock; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
      for (int x = 0; x < kBlock; ++x) {
        t[u * kBlock + x] =
            a * std::cos((2 * x + 1) * u * std::numbers::pi / (2 * kBlock));
      }
    }
    return t;
  }();
  return m;
}

}  // namespace detail

// coeff[u*8+v] = sum_xy basis[u][x] basis[v][y] pixel[x*8+y]
inline void fdct8x8(const double* pixel, double* coeff) {
  const auto& m = detail::dct_basis();
  double tmp[64];
  for (int u = 0; u < kBlock; ++u) {
    for (int y = 0; y < kBlock; ++y) {
      double s = 0.0;
      for (int x = 0; x < kBlock; ++x) s += m[u * kBlock + x] * pixel[x * kBlock + y];
      tmp[u * kBlock + y] = s;
    }
  }
  for (int u = 0; u < kBlock; ++u) {
    for (int v = 0; v < kBlock; ++v) {
      double s = 0.0;
      for (int y = 0; y < kBlock; ++y) s += tmp[u * kBlock + y] * m[v * kBlock + y];
      coeff[u * kBlock + v] = s;
    }
  }
}

inline void idct8x8(const double* coeff, double* pixel) {
  const auto& m = detail::dct_basis();
  double tmp[64];
  for (int x = 0; x < kBlock; ++x) {
    for (int v = 0; v < kBlock; ++v) {
      double s = 0.0;
      for (int u = 0; u < kBlock; ++u) s += m[u * kBlock + x] * coeff[u * kBlock + v];
      tmp[x * kBlock + v] = s;
    }
  }
  for (int x = 0; x < kBlock; ++x) {
    for (int y = 0; y < kBlock; ++y) {
      double s = 0.0;
      for (int v = 0; v < kBlock; ++v) s += tmp[x * kBlock + v] * m[v * kBlock + y];
      pixel[x * kBlock + y] = s;
    }
  }
}

}  // namespace agdl
