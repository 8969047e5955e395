#pragma once

// Critical pixel detection. The critical set is the intersection of the
// edge skeleton (Canny), the salient region (spectral residual) and an
// error proxy (restorer activity |soft - base|), ranked by the product of
// the three cues. Everything here is computed from decoder-available data
// only, so encoder and decoder derive identical sets with no side
// information in the stream.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "agdl/raster.hpp"

namespace agdl {

struct MaskParams {
  double canny_sigma = 1.4;           // 5x5 Gaussian
  double canny_low_ratio = 0.1;       // of max gradient magnitude
  double canny_high_ratio = 0.3;
  double saliency_threshold = 0.25;   // of max saliency score
  int saliency_dilation_radius = 2;   // disk, pixels
  double error_threshold = 4.0;       // tau_e, intensity levels
  double critical_fraction = 0.02;    // rho, fraction of W*H

  void validate() const {
    if (!(canny_low_ratio > 0.0 && canny_low_ratio < canny_high_ratio &&
          canny_high_ratio <= 1.0)) {
      throw InvalidParameter("MaskParams: need 0 < low < high <= 1");
    }
    if (!(critical_fraction > 0.0 && critical_fraction <= 1.0)) {
      throw InvalidParameter("MaskParams: need 0 < critical_fraction <= 1");
    }
    if (canny_sigma <= 0.0 || saliency_dilation_radius < 0 ||
        error_threshold < 0.0) {
      throw InvalidParameter("MaskParams: bad detector parameter");
    }
  }
};

struct PixelCoord {
  int row = 0;
  int col = 0;
  bool operator==(const PixelCoord&) const = default;
};

// Ordered critical pixels: strictly decreasing score, ties broken by
// ascending raster index.
struct CriticalSet {
  std::vector<PixelCoord> coords;
  std::vector<double> values;  // read from the image given to the detector

  std::size_t count() const { return coords.size(); }
};

namespace detail {

inline ScoreMap gaussian_blur(const ScoreMap& img, double sigma, int radius) {
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;

  ScoreMap tmp(img.width, img.height);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += k[i + radius] * sample_clamped(img, r, c + i);
      }
      tmp.at(r, c) = acc;
    }
  }
  ScoreMap out(img.width, img.height);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += k[i + radius] * sample_clamped(tmp, r + i, c);
      }
      out.at(r, c) = acc;
    }
  }
  return out;
}

// 3x3 box filter with wrap-around edges; the spectrum it runs on is
// periodic by construction.
inline ScoreMap box3_periodic(const ScoreMap& img) {
  ScoreMap out(img.width, img.height);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      double acc = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int rr = (r + dy + img.height) % img.height;
          const int cc = (c + dx + img.width) % img.width;
          acc += img.at(rr, cc);
        }
      }
      out.at(r, c) = acc / 9.0;
    }
  }
  return out;
}

inline Mask dilate_disk(const Mask& mask, int radius) {
  if (radius <= 0) return mask;
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dy * dy + dx * dx <= radius * radius) offsets.emplace_back(dy, dx);
    }
  }
  Mask out(mask.width, mask.height, 0);
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      if (!mask.at(r, c)) continue;
      for (const auto& [dy, dx] : offsets) {
        const int rr = r + dy;
        const int cc = c + dx;
        if (rr >= 0 && rr < mask.height && cc >= 0 && cc < mask.width) {
          out.at(rr, cc) = 1;
        }
      }
    }
  }
  return out;
}

// Naive 2-D DFT on a small square tile, separable, O(n^3).
inline void dft2(std::vector<std::complex<double>>& data, int n,
                 bool inverse) {
  std::vector<std::complex<double>> tw(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (int i = 0; i < n; ++i) {
    const double a = sign * 2.0 * std::numbers::pi * i / n;
    tw[i] = {std::cos(a), std::sin(a)};
  }
  std::vector<std::complex<double>> line(n);
  // rows
  for (int r = 0; r < n; ++r) {
    for (int k = 0; k < n; ++k) {
      std::complex<double> acc = 0.0;
      for (int j = 0; j < n; ++j) {
        acc += data[r * n + j] * tw[(static_cast<long long>(j) * k) % n];
      }
      line[k] = acc;
    }
    for (int k = 0; k < n; ++k) data[r * n + k] = line[k];
  }
  // columns
  for (int c = 0; c < n; ++c) {
    for (int k = 0; k < n; ++k) {
      std::complex<double> acc = 0.0;
      for (int j = 0; j < n; ++j) {
        acc += data[j * n + c] * tw[(static_cast<long long>(j) * k) % n];
      }
      line[k] = acc;
    }
    for (int k = 0; k < n; ++k) data[k * n + c] = line[k];
  }
  if (inverse) {
    const double scale = 1.0 / (static_cast<double>(n) * n);
    for (auto& v : data) v *= scale;
  }
}

}  // namespace detail

struct CannyResult {
  Mask edges;
  ScoreMap magnitude;  // post-blur Sobel gradient magnitude
};

inline CannyResult canny_with_magnitude(const Image& img,
                                        const MaskParams& params) {
  require_valid(img, "canny_edges");
  params.validate();
  const int w = img.width;
  const int h = img.height;

  const ScoreMap blurred = detail::gaussian_blur(img, params.canny_sigma, 2);

  ScoreMap gx(w, h), gy(w, h), mag(w, h);
  double max_mag = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double p00 = sample_clamped(blurred, r - 1, c - 1);
      const double p01 = sample_clamped(blurred, r - 1, c);
      const double p02 = sample_clamped(blurred, r - 1, c + 1);
      const double p10 = sample_clamped(blurred, r, c - 1);
      const double p12 = sample_clamped(blurred, r, c + 1);
      const double p20 = sample_clamped(blurred, r + 1, c - 1);
      const double p21 = sample_clamped(blurred, r + 1, c);
      const double p22 = sample_clamped(blurred, r + 1, c + 1);
      const double dx = (p02 + 2.0 * p12 + p22) - (p00 + 2.0 * p10 + p20);
      const double dy = (p20 + 2.0 * p21 + p22) - (p00 + 2.0 * p01 + p02);
      gx.at(r, c) = dx;
      gy.at(r, c) = dy;
      mag.at(r, c) = std::sqrt(dx * dx + dy * dy);
      max_mag = std::max(max_mag, mag.at(r, c));
    }
  }

  CannyResult result{Mask(w, h, 0), mag};
  if (max_mag <= 0.0) return result;

  // non-maximum suppression over 4 quantized directions; the 1-px image
  // border never survives
  Mask thin(w, h, 0);
  for (int r = 1; r < h - 1; ++r) {
    for (int c = 1; c < w - 1; ++c) {
      const double m = mag.at(r, c);
      if (m <= 0.0) continue;
      double angle =
          std::atan2(gy.at(r, c), gx.at(r, c)) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      double n1, n2;
      if (angle < 22.5 || angle >= 157.5) {          // horizontal gradient
        n1 = mag.at(r, c - 1);
        n2 = mag.at(r, c + 1);
      } else if (angle < 67.5) {                      // diagonal /
        n1 = mag.at(r - 1, c + 1);
        n2 = mag.at(r + 1, c - 1);
      } else if (angle < 112.5) {                     // vertical gradient
        n1 = mag.at(r - 1, c);
        n2 = mag.at(r + 1, c);
      } else {                                        // diagonal backslash
        n1 = mag.at(r - 1, c - 1);
        n2 = mag.at(r + 1, c + 1);
      }
      if (m >= n1 && m >= n2) thin.at(r, c) = 1;
    }
  }

  // hysteresis: seed at strong pixels, grow through weak ones, 8-connected
  const double high = params.canny_high_ratio * max_mag;
  const double low = params.canny_low_ratio * max_mag;
  std::vector<PixelCoord> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (thin.at(r, c) && mag.at(r, c) >= high) {
        result.edges.at(r, c) = 1;
        stack.push_back({r, c});
      }
    }
  }
  while (!stack.empty()) {
    const PixelCoord p = stack.back();
    stack.pop_back();
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int rr = p.row + dy;
        const int cc = p.col + dx;
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
        if (result.edges.at(rr, cc)) continue;
        if (thin.at(rr, cc) && mag.at(rr, cc) >= low) {
          result.edges.at(rr, cc) = 1;
          stack.push_back({rr, cc});
        }
      }
    }
  }
  return result;
}

inline Mask canny_edges(const Image& img, const MaskParams& params) {
  return canny_with_magnitude(img, params).edges;
}

struct SaliencyResult {
  ScoreMap score;
  Mask roi;
};

// Spectral-residual saliency on a 64x64 working tile. The tile is
// mean-subtracted and Hann-windowed before the transform so the DFT's
// periodic wrap-around does not register the image border as an edge, and
// the log amplitude is floored at 1e-3 of the peak so exact spectrum
// nulls (common in synthetic rasters) cannot blow up the residual.
inline SaliencyResult spectral_saliency(const Image& img,
                                        const MaskParams& params) {
  require_valid(img, "spectral_saliency");
  params.validate();
  constexpr int n = 64;

  SaliencyResult result{ScoreMap(img.width, img.height, 0.0),
                        Mask(img.width, img.height, 0)};

  const Image small = resize_bilinear(img, n, n);
  const auto [mn, mx] = std::minmax_element(small.data.begin(), small.data.end());
  if (*mx - *mn <= 1e-9) return result;  // flat image, no residual

  double mean = 0.0;
  for (const double v : small.data) mean += v;
  mean /= static_cast<double>(n) * n;

  std::vector<double> hann(n);
  for (int i = 0; i < n; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 0.5) / n);
  }

  std::vector<std::complex<double>> freq(n * n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      freq[r * n + c] = (small.at(r, c) - mean) * hann[r] * hann[c];
    }
  }
  detail::dft2(freq, n, false);

  double max_amp = 0.0;
  for (const auto& v : freq) max_amp = std::max(max_amp, std::abs(v));
  if (max_amp <= 0.0) return result;
  const double floor = 1e-3 * max_amp;

  ScoreMap logamp(n, n);
  for (int i = 0; i < n * n; ++i) {
    logamp.data[i] = std::log(std::max(std::abs(freq[i]), floor));
  }
  const ScoreMap smoothed = detail::box3_periodic(logamp);

  for (int i = 0; i < n * n; ++i) {
    const double residual = logamp.data[i] - smoothed.data[i];
    const double phase = std::atan2(freq[i].imag(), freq[i].real());
    const double amp = std::exp(residual);
    freq[i] = {amp * std::cos(phase), amp * std::sin(phase)};
  }
  detail::dft2(freq, n, true);

  ScoreMap sal(n, n);
  for (int i = 0; i < n * n; ++i) sal.data[i] = std::norm(freq[i]);
  sal = detail::gaussian_blur(sal, 2.5, 8);

  result.score = resize_bilinear(sal, img.width, img.height);
  double max_score = 0.0;
  for (const double v : result.score.data) max_score = std::max(max_score, v);
  if (max_score <= 0.0) return result;

  const double threshold = params.saliency_threshold * max_score;
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      result.roi.at(r, c) = result.score.at(r, c) >= threshold ? 1 : 0;
    }
  }
  result.roi = detail::dilate_disk(result.roi, params.saliency_dilation_radius);
  return result;
}

inline ScoreMap change_map(const Image& base, const Image& soft) {
  require_valid(base, "change_map");
  if (!base.same_size(soft)) {
    throw InvalidParameter("change_map: dimension mismatch");
  }
  ScoreMap out(base.width, base.height);
  for (std::size_t i = 0; i < base.data.size(); ++i) {
    out.data[i] = std::abs(soft.data[i] - base.data[i]);
  }
  return out;
}

// How many critical pixels a rho fraction allows. The fraction is carried
// in the bitstream header as a numerator over 10^4, so quantize the same
// way here to keep encoder and decoder arithmetic identical.
inline std::size_t critical_budget(double fraction, int width, int height) {
  const long long num = std::llround(fraction * 10000.0);
  const long long pixels = static_cast<long long>(width) * height;
  return static_cast<std::size_t>((num * pixels + 9999) / 10000);
}

inline CriticalSet detect_critical(const Image& base, const Image& soft,
                                   const MaskParams& params) {
  require_valid(base, "detect_critical");
  if (!base.same_size(soft)) {
    throw InvalidParameter("detect_critical: dimension mismatch");
  }
  params.validate();

  const CannyResult edges = canny_with_magnitude(base, params);
  const SaliencyResult saliency = spectral_saliency(base, params);
  const ScoreMap change = change_map(base, soft);

  struct Candidate {
    std::size_t raster;
    double score;
  };
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < base.data.size(); ++i) {
    if (edges.edges.data[i] && saliency.roi.data[i] &&
        change.data[i] >= params.error_threshold) {
      candidates.push_back(i);
    }
  }
  if (candidates.empty()) return {};

  double max_grad = 0.0, max_sal = 0.0, max_chg = 0.0;
  for (const std::size_t i : candidates) {
    max_grad = std::max(max_grad, edges.magnitude.data[i]);
    max_sal = std::max(max_sal, saliency.score.data[i]);
    max_chg = std::max(max_chg, change.data[i]);
  }

  std::vector<Candidate> ranked;
  ranked.reserve(candidates.size());
  for (const std::size_t i : candidates) {
    double score = 1.0;
    if (max_grad > 0.0) score *= edges.magnitude.data[i] / max_grad;
    if (max_sal > 0.0) score *= saliency.score.data[i] / max_sal;
    if (max_chg > 0.0) score *= change.data[i] / max_chg;
    ranked.push_back({i, score});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.raster < b.raster;
  });

  const std::size_t budget =
      critical_budget(params.critical_fraction, base.width, base.height);
  const std::size_t n = std::min(budget, ranked.size());

  CriticalSet set;
  set.coords.reserve(n);
  set.values.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = ranked[k].raster;
    const int row = static_cast<int>(i / base.width);
    const int col = static_cast<int>(i % base.width);
    set.coords.push_back({row, col});
    set.values.push_back(soft.data[i]);
  }
  return set;
}

}  // namespace agdl
