#pragma once

#include <cmath>
#include <cstddef>

#include "agdl/raster.hpp"

namespace agdl {

inline constexpr double kPsnrCap = 99.0;

inline double mse(const Image& a, const Image& b, const Mask* mask = nullptr) {
  require_valid(a, "mse");
  if (!a.same_size(b)) throw InvalidParameter("mse: dimension mismatch");
  if (mask && !(mask->width == a.width && mask->height == a.height)) {
    throw InvalidParameter("mse: mask dimension mismatch");
  }
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    if (mask && !mask->data[i]) continue;
    const double d = a.data[i] - b.data[i];
    acc += d * d;
    ++n;
  }
  if (n == 0) throw InvalidParameter("mse: empty mask");
  return acc / static_cast<double>(n);
}

// 20*log10(255/sqrt(MSE)), capped at 99 dB so identical inputs stay numeric.
inline double psnr(const Image& a, const Image& b, const Mask* mask = nullptr) {
  const double e = mse(a, b, mask);
  if (e <= 0.0) return kPsnrCap;
  const double v = 20.0 * std::log10(255.0 / std::sqrt(e));
  return v > kPsnrCap ? kPsnrCap : v;
}

}  // namespace agdl
