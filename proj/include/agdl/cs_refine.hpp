#pragma once

// Compressive-sensing refinement layer: a seeded +-1/sqrt(M) sampling
// matrix H, 16-bit uniform quantization of the measurements y = H*c, and
// the closed-form least-norm adjustment
//     delta* = H^T (H H^T)^{-1} (y - H*c_g)
// solved with a Cholesky factorization of H H^T, which makes the refined
// critical pixels satisfy H*c_hat = y.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "agdl/critical_mask.hpp"
#include "agdl/errors.hpp"
#include "agdl/raster.hpp"

namespace agdl {

// SplitMix64; the k-th output is a pure function of (seed, k).
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

struct CsMatrix {
  int rows = 0;  // M
  int cols = 0;  // N_c
  std::vector<double> a;  // row-major
  std::uint64_t effective_seed = 0;

  double at(int i, int j) const {
    return a[static_cast<std::size_t>(i) * cols + j];
  }
};

namespace detail {

// Lower-triangular Cholesky factor of a symmetric matrix; returns false
// when a pivot falls at or below the tolerance.
inline bool cholesky(std::vector<double>& m, int n, double pivot_tol) {
  for (int j = 0; j < n; ++j) {
    double d = m[static_cast<std::size_t>(j) * n + j];
    for (int k = 0; k < j; ++k) {
      const double ljk = m[static_cast<std::size_t>(j) * n + k];
      d -= ljk * ljk;
    }
    if (!(d > pivot_tol)) return false;
    const double ljj = std::sqrt(d);
    m[static_cast<std::size_t>(j) * n + j] = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = m[static_cast<std::size_t>(i) * n + j];
      for (int k = 0; k < j; ++k) {
        s -= m[static_cast<std::size_t>(i) * n + k] *
             m[static_cast<std::size_t>(j) * n + k];
      }
      m[static_cast<std::size_t>(i) * n + j] = s / ljj;
    }
  }
  return true;
}

// Solves (L L^T) x = b in place given the factor from cholesky().
inline void cholesky_solve(const std::vector<double>& l, int n,
                           std::vector<double>& b) {
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l[static_cast<std::size_t>(i) * n + k] * b[k];
    b[i] = s / l[static_cast<std::size_t>(i) * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < n; ++k) s -= l[static_cast<std::size_t>(k) * n + i] * b[k];
    b[i] = s / l[static_cast<std::size_t>(i) * n + i];
  }
}

inline std::vector<double> gram(const CsMatrix& h) {
  const int m = h.rows;
  std::vector<double> g(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int k = 0; k < h.cols; ++k) s += h.at(i, k) * h.at(j, k);
      g[static_cast<std::size_t>(i) * m + j] = s;
      g[static_cast<std::size_t>(j) * m + i] = s;
    }
  }
  return g;
}

inline constexpr double kCholeskyPivotTol = 1e-9;

}  // namespace detail

// Builds the M x N sampling matrix with +-1/sqrt(M) entries drawn from
// SplitMix64(seed); entry (i,j) uses the low bit of the (i*n+j)-th output.
// If the full-row-rank check fails the seed is bumped and the build
// retried; the seed that succeeded is recorded in the result.
inline CsMatrix build_matrix(std::uint64_t seed, int m, int n) {
  if (m < 0 || n < 0 || m > n) {
    throw InvalidParameter("build_matrix: need 0 <= m <= n");
  }
  CsMatrix h;
  h.rows = m;
  h.cols = n;
  h.effective_seed = seed;
  if (m == 0) return h;

  const double magnitude = 1.0 / std::sqrt(static_cast<double>(m));
  constexpr int kMaxAttempts = 16;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const std::uint64_t trial_seed = seed + static_cast<std::uint64_t>(attempt);
    SplitMix64 rng(trial_seed);
    h.a.assign(static_cast<std::size_t>(m) * n, 0.0);
    for (std::size_t k = 0; k < h.a.size(); ++k) {
      h.a[k] = (rng.next() & 1ULL) ? magnitude : -magnitude;
    }
    std::vector<double> g = detail::gram(h);
    if (detail::cholesky(g, m, detail::kCholeskyPivotTol)) {
      h.effective_seed = trial_seed;
      return h;
    }
  }
  throw RankFailure("build_matrix: no full-rank matrix after 16 attempts");
}

inline std::vector<double> sample(const CsMatrix& h,
                                  std::span<const double> c) {
  if (static_cast<int>(c.size()) != h.cols) {
    throw InvalidParameter("sample: vector length does not match matrix");
  }
  std::vector<double> y(h.rows, 0.0);
  for (int i = 0; i < h.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < h.cols; ++j) s += h.at(i, j) * c[j];
    y[i] = s;
  }
  return y;
}

// 16-bit uniform measurement quantization with transmitted offset/step.
struct Measurements {
  std::vector<std::uint16_t> codes;
  double offset = 0.0;
  double step = 0.0;  // 0 only when empty

  std::size_t count() const { return codes.size(); }
};

inline Measurements quantize(std::span<const double> raw) {
  Measurements q;
  if (raw.empty()) return q;
  double lo = raw[0], hi = raw[0];
  for (const double v : raw) {
    if (!std::isfinite(v)) {
      throw InvalidParameter("quantize: non-finite measurement");
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  q.offset = lo;
  q.step = std::max((hi - lo) / 65535.0, 1e-6);
  q.codes.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double code = round_half_away((raw[i] - q.offset) / q.step);
    q.codes[i] = static_cast<std::uint16_t>(std::clamp(code, 0.0, 65535.0));
  }
  return q;
}

inline std::vector<double> dequantize(const Measurements& q) {
  std::vector<double> out(q.codes.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = q.offset + static_cast<double>(q.codes[i]) * q.step;
  }
  return out;
}

// delta* = H^T (H H^T)^{-1} (y - H*c_g); Cholesky plus two triangular
// solves, never an explicit inverse.
inline std::vector<double> least_norm_adjust(const CsMatrix& h,
                                             std::span<const double> y,
                                             std::span<const double> c_g) {
  if (static_cast<int>(y.size()) != h.rows ||
      static_cast<int>(c_g.size()) != h.cols) {
    throw InvalidParameter("least_norm_adjust: size mismatch");
  }
  std::vector<double> delta(h.cols, 0.0);
  if (h.rows == 0) return delta;

  std::vector<double> residual(h.rows);
  for (int i = 0; i < h.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < h.cols; ++j) s += h.at(i, j) * c_g[j];
    residual[i] = y[i] - s;
  }
  std::vector<double> g = detail::gram(h);
  if (!detail::cholesky(g, h.rows, detail::kCholeskyPivotTol)) {
    throw RankFailure("least_norm_adjust: H H^T is not positive definite");
  }
  detail::cholesky_solve(g, h.rows, residual);
  for (int j = 0; j < h.cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < h.rows; ++i) s += h.at(i, j) * residual[i];
    delta[j] = s;
  }
  return delta;
}

// I_hat = I_g + delta* at the critical coordinates; other pixels untouched.
inline Image apply_adjustment(const Image& img, const CriticalSet& set,
                              std::span<const double> delta) {
  require_valid(img, "apply_adjustment");
  if (delta.size() != set.count()) {
    throw InvalidParameter("apply_adjustment: adjustment length mismatch");
  }
  Image out = img;
  for (std::size_t i = 0; i < set.count(); ++i) {
    const PixelCoord p = set.coords[i];
    if (p.row < 0 || p.row >= img.height || p.col < 0 || p.col >= img.width) {
      throw InvalidParameter("apply_adjustment: coordinate out of bounds");
    }
    out.at(p.row, p.col) += delta[i];
  }
  return out;
}

}  // namespace agdl
