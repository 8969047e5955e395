#pragma once

// Row-major rasters, binary PGM (P5) I/O and the shared resampling /
// padding helpers used across the codec.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "agdl/errors.hpp"

namespace agdl {

template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> data;  // row-major, data[row * width + col]

  Grid() = default;
  Grid(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int row, int col) {
    return data[static_cast<std::size_t>(row) * width + col];
  }
  const T& at(int row, int col) const {
    return data[static_cast<std::size_t>(row) * width + col];
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
  bool same_size(const Grid& other) const {
    return width == other.width && height == other.height;
  }
  bool empty() const { return data.empty(); }
};

using Image = Grid<double>;        // intensities, [0,255] at I/O boundaries
using Mask = Grid<std::uint8_t>;   // 0 or 1
using ScoreMap = Grid<double>;

inline void require_valid(const Image& img, const char* who) {
  if (img.width <= 0 || img.height <= 0 ||
      img.data.size() != img.pixel_count()) {
    throw InvalidParameter(std::string(who) + ": invalid image dimensions");
  }
}

// Round half away from zero; the single rounding rule used everywhere.
inline double round_half_away(double v) { return std::round(v); }

inline std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(round_half_away(v), 0.0, 255.0));
}

// Rounds and clamps every sample to the 8-bit export range.
inline Image quantize_to_export(const Image& img) {
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = static_cast<double>(to_u8(img.data[i]));
  }
  return out;
}

inline int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

// Edge-replicating sample access.
template <typename T>
inline T sample_clamped(const Grid<T>& g, int row, int col) {
  return g.at(clamp_index(row, g.height), clamp_index(col, g.width));
}

// Replicate-pad to the next multiple of `block` in each dimension.
inline Image pad_to_multiple(const Image& img, int block) {
  const int pw = (img.width + block - 1) / block * block;
  const int ph = (img.height + block - 1) / block * block;
  Image out(pw, ph);
  for (int r = 0; r < ph; ++r) {
    for (int c = 0; c < pw; ++c) {
      out.at(r, c) = sample_clamped(img, r, c);
    }
  }
  return out;
}

inline Image crop(const Image& img, int w, int h) {
  Image out(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      out.at(r, c) = img.at(r, c);
    }
  }
  return out;
}

// Center-aligned bilinear resampling.
inline Image resize_bilinear(const Image& img, int out_w, int out_h) {
  require_valid(img, "resize_bilinear");
  if (out_w <= 0 || out_h <= 0) {
    throw InvalidParameter("resize_bilinear: output size must be positive");
  }
  Image out(out_w, out_h);
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  for (int r = 0; r < out_h; ++r) {
    const double fy = (r + 0.5) * sy - 0.5;
    const int y0 = static_cast<int>(std::floor(fy));
    const double wy = fy - y0;
    for (int c = 0; c < out_w; ++c) {
      const double fx = (c + 0.5) * sx - 0.5;
      const int x0 = static_cast<int>(std::floor(fx));
      const double wx = fx - x0;
      const double v00 = sample_clamped(img, y0, x0);
      const double v01 = sample_clamped(img, y0, x0 + 1);
      const double v10 = sample_clamped(img, y0 + 1, x0);
      const double v11 = sample_clamped(img, y0 + 1, x0 + 1);
      out.at(r, c) = (1.0 - wy) * ((1.0 - wx) * v00 + wx * v01) +
                     wy * ((1.0 - wx) * v10 + wx * v11);
    }
  }
  return out;
}

// ---- PGM (P5, 8-bit, single channel) ----

namespace detail {

inline int pgm_next_int(const std::vector<char>& buf, std::size_t& pos) {
  // skip whitespace and '#' comment lines
  while (pos < buf.size()) {
    const char ch = buf[pos];
    if (ch == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= buf.size() || buf[pos] < '0' || buf[pos] > '9') {
    throw MalformedPayload("PGM: expected integer in header");
  }
  int value = 0;
  while (pos < buf.size() && buf[pos] >= '0' && buf[pos] <= '9') {
    value = value * 10 + (buf[pos] - '0');
    if (value > 1 << 20) throw MalformedPayload("PGM: header value too large");
    ++pos;
  }
  return value;
}

}  // namespace detail

inline Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedPayload("PGM: cannot open " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  if (buf.size() < 2 || buf[0] != 'P' || buf[1] != '5') {
    throw MalformedPayload("PGM: not a binary P5 file: " + path);
  }
  std::size_t pos = 2;
  const int w = detail::pgm_next_int(buf, pos);
  const int h = detail::pgm_next_int(buf, pos);
  const int maxval = detail::pgm_next_int(buf, pos);
  if (w <= 0 || h <= 0) throw MalformedPayload("PGM: bad dimensions");
  if (maxval <= 0 || maxval > 255) {
    throw MalformedPayload("PGM: only 8-bit maxval supported");
  }
  ++pos;  // single whitespace byte after maxval
  const std::size_t need = static_cast<std::size_t>(w) * h;
  if (pos + need > buf.size()) throw MalformedPayload("PGM: truncated data");
  Image img(w, h);
  for (std::size_t i = 0; i < need; ++i) {
    img.data[i] = static_cast<double>(static_cast<std::uint8_t>(buf[pos + i]));
  }
  return img;
}

inline void save_pgm(const std::string& path, const Image& img) {
  require_valid(img, "save_pgm");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MalformedPayload("PGM: cannot write " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> row(img.width);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) row[c] = to_u8(img.at(r, c));
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
}

inline void save_pgm(const std::string& path, const Mask& mask) {
  Image img(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    img.data[i] = mask.data[i] ? 255.0 : 0.0;
  }
  save_pgm(path, img);
}

}  // namespace agdl
