#pragma once

// MSB-first bit I/O with unsigned / signed Exp-Golomb codes.
// Signed mapping: n > 0 -> 2n-1, n <= 0 -> -2n.

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "agdl/errors.hpp"

namespace agdl {

class BitWriter {
 public:
  void put_bit(unsigned bit) {
    cur_ = static_cast<std::uint8_t>((cur_ << 1) | (bit & 1u));
    if (++nbits_ == 8) {
      bytes_.push_back(cur_);
      cur_ = 0;
      nbits_ = 0;
    }
  }

  void put_bits(std::uint64_t value, int count) {
    for (int i = count - 1; i >= 0; --i) put_bit((value >> i) & 1u);
  }

  void put_ue(std::uint64_t v) {
    const std::uint64_t x = v + 1;
    const int k = std::bit_width(x);
    for (int i = 0; i < k - 1; ++i) put_bit(0);
    put_bits(x, k);
  }

  void put_se(std::int64_t v) {
    const std::uint64_t mapped =
        v > 0 ? 2 * static_cast<std::uint64_t>(v) - 1
              : 2 * static_cast<std::uint64_t>(-v);
    put_ue(mapped);
  }

  // Pads the tail with zero bits to a byte boundary and returns the buffer.
  std::vector<std::uint8_t> finish() {
    while (nbits_ != 0) put_bit(0);
    return std::move(bytes_);
  }

  std::size_t bit_count() const { return bytes_.size() * 8 + nbits_; }

 private:
  std::vector<std::uint8_t> bytes_;
  std::uint8_t cur_ = 0;
  int nbits_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  unsigned get_bit() {
    if (pos_ >= bytes_.size() * 8) {
      throw MalformedPayload("entropy stream: codeword overruns buffer");
    }
    const unsigned bit = (bytes_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u;
    ++pos_;
    return bit;
  }

  std::uint64_t get_ue() {
    int zeros = 0;
    while (get_bit() == 0) {
      if (++zeros > 63) {
        throw MalformedPayload("entropy stream: oversized Exp-Golomb prefix");
      }
    }
    std::uint64_t x = 1;
    for (int i = 0; i < zeros; ++i) x = (x << 1) | get_bit();
    return x - 1;
  }

  std::int64_t get_se() {
    const std::uint64_t u = get_ue();
    if (u & 1) return static_cast<std::int64_t>((u + 1) / 2);
    return -static_cast<std::int64_t>(u / 2);
  }

  std::size_t bit_pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace agdl
