#pragma once

// Block-DCT base layer. Pipeline per 8x8 block (image replicate-padded to
// block multiples): level shift by -128, orthonormal DCT-II, division by
// the scaled quantization table with round-half-away-from-zero, zigzag
// scan, zero-run-length + Exp-Golomb entropy coding.
//
// Payload bit syntax, per block in raster order:
//   ( ue(run) se(value) )*  ue(64)
// where run < 64 counts zeros before the next nonzero coefficient and
// ue(64) is the end-of-block symbol. The stream is padded with zero bits
// to a byte boundary.

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "agdl/bitio.hpp"
#include "agdl/dct.hpp"
#include "agdl/errors.hpp"
#include "agdl/raster.hpp"

namespace agdl {

inline constexpr int kEndOfBlock = 64;

// Natural (row-major) index of each zigzag scan position.
inline constexpr std::array<int, 64> kZigzagToNatural = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

// JPEG Annex-K luminance table, natural order.
inline constexpr std::array<int, 64> kBaseLuminanceTable = {
    16, 11, 10, 16, 24,  40,  51,  61,  //
    12, 12, 14, 19, 26,  58,  60,  55,  //
    14, 13, 16, 24, 40,  57,  69,  56,  //
    14, 17, 22, 29, 51,  87,  80,  62,  //
    18, 22, 37, 56, 68,  109, 103, 77,  //
    24, 35, 55, 64, 81,  104, 113, 92,  //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99};

namespace detail {

inline const std::array<int, 64>& natural_to_zigzag() {
  static const std::array<int, 64> inv = [] {
    std::array<int, 64> t{};
    for (int z = 0; z < 64; ++z) t[kZigzagToNatural[z]] = z;
    return t;
  }();
  return inv;
}

}  // namespace detail

struct QuantTable {
  std::array<int, 64> entries{};  // zigzag-indexed divisors, each in [1,255]

  int at_zig(int z) const { return entries[z]; }
  int at_natural(int pos) const {
    return entries[detail::natural_to_zigzag()[pos]];
  }
};

// JPEG-style quality scaling of the base luminance table.
inline QuantTable scale_quant_table(int quality) {
  if (quality < 1 || quality > 100) {
    throw InvalidParameter("scale_quant_table: quality must be in [1,100]");
  }
  const long long s = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  QuantTable table;
  for (int z = 0; z < 64; ++z) {
    const long long base = kBaseLuminanceTable[kZigzagToNatural[z]];
    long long e = (base * s + 50) / 100;
    if (e < 1) e = 1;
    if (e > 255) e = 255;
    table.entries[z] = static_cast<int>(e);
  }
  return table;
}

// Quantized coefficient indices of every 8x8 block of the padded image,
// stored per block in natural (row-major) order. The dequantized
// coefficient is index * divisor exactly.
struct DctGrid {
  int blocks_x = 0;
  int blocks_y = 0;
  std::vector<std::int32_t> coeffs;  // blocks_x * blocks_y * 64

  int padded_width() const { return blocks_x * kBlock; }
  int padded_height() const { return blocks_y * kBlock; }
  std::size_t block_count() const {
    return static_cast<std::size_t>(blocks_x) * blocks_y;
  }
  const std::int32_t* block(std::size_t b) const { return &coeffs[b * 64]; }
  std::int32_t* block(std::size_t b) { return &coeffs[b * 64]; }

  bool operator==(const DctGrid&) const = default;
};

struct BaseLayerPayload {
  int width = 0;   // unpadded image size
  int height = 0;
  int quality = 0;
  std::vector<std::uint8_t> bytes;
};

inline std::vector<std::uint8_t> entropy_encode(const DctGrid& grid) {
  const auto& nat_to_zig = detail::natural_to_zigzag();
  BitWriter w;
  for (std::size_t b = 0; b < grid.block_count(); ++b) {
    const std::int32_t* blk = grid.block(b);
    std::int32_t zig[64];
    for (int pos = 0; pos < 64; ++pos) zig[nat_to_zig[pos]] = blk[pos];
    int run = 0;
    for (int z = 0; z < 64; ++z) {
      if (zig[z] == 0) {
        ++run;
        continue;
      }
      w.put_ue(static_cast<std::uint64_t>(run));
      w.put_se(zig[z]);
      run = 0;
    }
    w.put_ue(kEndOfBlock);
  }
  return w.finish();
}

inline DctGrid entropy_decode(std::span<const std::uint8_t> bytes,
                              int blocks_x, int blocks_y) {
  if (blocks_x <= 0 || blocks_y <= 0) {
    throw InvalidParameter("entropy_decode: bad block grid");
  }
  DctGrid grid;
  grid.blocks_x = blocks_x;
  grid.blocks_y = blocks_y;
  grid.coeffs.assign(grid.block_count() * 64, 0);
  BitReader r(bytes);
  for (std::size_t b = 0; b < grid.block_count(); ++b) {
    std::int32_t* blk = grid.block(b);
    int z = 0;
    for (;;) {
      const std::uint64_t run = r.get_ue();
      if (run == kEndOfBlock) break;
      if (run > kEndOfBlock || z + static_cast<int>(run) > 63) {
        throw MalformedPayload("entropy stream: run exceeds block");
      }
      z += static_cast<int>(run);
      const std::int64_t value = r.get_se();
      blk[kZigzagToNatural[z]] = static_cast<std::int32_t>(value);
      ++z;
    }
  }
  return grid;
}

inline std::pair<BaseLayerPayload, DctGrid> encode_base(const Image& img,
                                                        int quality) {
  require_valid(img, "encode_base");
  const QuantTable table = scale_quant_table(quality);
  const Image padded = pad_to_multiple(img, kBlock);

  DctGrid grid;
  grid.blocks_x = padded.width / kBlock;
  grid.blocks_y = padded.height / kBlock;
  grid.coeffs.assign(grid.block_count() * 64, 0);

  double pixel[64];
  double coeff[64];
  for (int by = 0; by < grid.blocks_y; ++by) {
    for (int bx = 0; bx < grid.blocks_x; ++bx) {
      for (int r = 0; r < kBlock; ++r) {
        for (int c = 0; c < kBlock; ++c) {
          pixel[r * kBlock + c] =
              padded.at(by * kBlock + r, bx * kBlock + c) - 128.0;
        }
      }
      fdct8x8(pixel, coeff);
      std::int32_t* blk = grid.block(
          static_cast<std::size_t>(by) * grid.blocks_x + bx);
      for (int pos = 0; pos < 64; ++pos) {
        const int q = table.at_natural(pos);
        blk[pos] =
            static_cast<std::int32_t>(round_half_away(coeff[pos] / q));
      }
    }
  }

  BaseLayerPayload payload;
  payload.width = img.width;
  payload.height = img.height;
  payload.quality = quality;
  payload.bytes = entropy_encode(grid);
  return {std::move(payload), std::move(grid)};
}

struct DecodedBase {
  Image image;       // pixels rounded and clamped to [0,255]
  DctGrid grid;
  QuantTable table;
};

inline DecodedBase decode_base(const BaseLayerPayload& payload) {
  if (payload.width <= 0 || payload.height <= 0) {
    throw MalformedPayload("decode_base: bad payload dimensions");
  }
  const int blocks_x = (payload.width + kBlock - 1) / kBlock;
  const int blocks_y = (payload.height + kBlock - 1) / kBlock;
  DecodedBase out;
  out.table = scale_quant_table(payload.quality);
  out.grid = entropy_decode(payload.bytes, blocks_x, blocks_y);

  Image padded(blocks_x * kBlock, blocks_y * kBlock);
  double pixel[64];
  double coeff[64];
  for (int by = 0; by < blocks_y; ++by) {
    for (int bx = 0; bx < blocks_x; ++bx) {
      const std::int32_t* blk =
          out.grid.block(static_cast<std::size_t>(by) * blocks_x + bx);
      for (int pos = 0; pos < 64; ++pos) {
        coeff[pos] = static_cast<double>(blk[pos]) * out.table.at_natural(pos);
      }
      idct8x8(coeff, pixel);
      for (int r = 0; r < kBlock; ++r) {
        for (int c = 0; c < kBlock; ++c) {
          const double v = round_half_away(pixel[r * kBlock + c] + 128.0);
          padded.at(by * kBlock + r, bx * kBlock + c) =
              std::clamp(v, 0.0, 255.0);
        }
      }
    }
  }
  out.image = crop(padded, payload.width, payload.height);
  return out;
}

}  // namespace agdl
