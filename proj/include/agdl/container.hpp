#pragma once

// The .agdl container and the end-to-end pipeline. A bitstream carries a
// fixed header, the entropy-coded base layer and the quantized CS
// measurements of the critical pixel set. No mask geometry is transmitted:
// the decoder reruns the detector on its own base-layer decode and lands
// on the same pixel set.
//
// Byte layout, big-endian throughout:
//   0   magic "AGDL"
//   4   u8  version (1)
//   5   u16 width          9  u8  quality
//   7   u16 height        10  u64 seed (effective)
//   18  u16 rho numerator (fraction of 1e4)
//   20  u16 m-rate numerator (fraction of 1e4)
//   22  u16 tau_e * 16
//   24  u8  POCS iterations
//   25  u32 base payload length, then payload bytes
//   ..  u32 measurement count M, f64 offset, f64 step, M x u16 codes

#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "agdl/base_codec.hpp"
#include "agdl/critical_mask.hpp"
#include "agdl/cs_refine.hpp"
#include "agdl/errors.hpp"
#include "agdl/raster.hpp"
#include "agdl/soft_decoder.hpp"

namespace agdl {

inline constexpr std::uint8_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 25;
inline constexpr char kMagic[4] = {'A', 'G', 'D', 'L'};

struct AgdlHeader {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::uint8_t quality = 50;
  std::uint64_t seed = 0;           // effective seed after rank retries
  std::uint16_t rho_num = 200;      // critical fraction rho, over 1e4
  std::uint16_t mrate_num = 5000;   // measurement ratio M/N_c, over 1e4
  std::uint16_t tau_e_x16 = 64;     // error-proxy threshold tau_e * 16
  std::uint8_t pocs_iterations = 1;

  bool operator==(const AgdlHeader&) const = default;

  MaskParams mask_params() const {
    MaskParams p;
    p.critical_fraction = rho_num / 10000.0;
    p.error_threshold = tau_e_x16 / 16.0;
    return p;
  }
  PocsParams pocs_params() const {
    PocsParams p;
    p.iterations = pocs_iterations;
    return p;
  }
  // ceil(mrate * n) in exact integer arithmetic
  std::size_t measurement_count_for(std::size_t n_critical) const {
    const unsigned long long num =
        static_cast<unsigned long long>(mrate_num) * n_critical;
    return static_cast<std::size_t>((num + 9999) / 10000);
  }
};

struct AgdlBitstream {
  AgdlHeader header;
  BaseLayerPayload base;
  Measurements measurements;
};

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}
inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}
inline void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

struct ByteCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) const {
    if (pos + n > bytes.size()) {
      throw MalformedBitstream(std::string("truncated ") + what, pos);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes[pos++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = (static_cast<std::uint16_t>(bytes[pos]) << 8) | bytes[pos + 1];
    pos += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes[pos + i];
    pos += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | bytes[pos + i];
    pos += 8;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
};

}  // namespace detail

inline std::vector<std::uint8_t> serialize(const AgdlBitstream& b) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 4 + b.base.bytes.size() + 20 +
              2 * b.measurements.count());
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kFormatVersion);
  detail::put_u16(out, b.header.width);
  detail::put_u16(out, b.header.height);
  out.push_back(b.header.quality);
  detail::put_u64(out, b.header.seed);
  detail::put_u16(out, b.header.rho_num);
  detail::put_u16(out, b.header.mrate_num);
  detail::put_u16(out, b.header.tau_e_x16);
  out.push_back(b.header.pocs_iterations);
  detail::put_u32(out, static_cast<std::uint32_t>(b.base.bytes.size()));
  out.insert(out.end(), b.base.bytes.begin(), b.base.bytes.end());
  detail::put_u32(out, static_cast<std::uint32_t>(b.measurements.count()));
  detail::put_f64(out, b.measurements.offset);
  detail::put_f64(out, b.measurements.step);
  for (const std::uint16_t code : b.measurements.codes) {
    detail::put_u16(out, code);
  }
  return out;
}

inline AgdlBitstream parse(std::span<const std::uint8_t> bytes) {
  detail::ByteCursor cur{bytes};
  cur.need(4, "magic");
  for (int i = 0; i < 4; ++i) {
    if (bytes[i] != static_cast<std::uint8_t>(kMagic[i])) {
      throw MalformedBitstream("bad magic", i);
    }
  }
  cur.pos = 4;
  const std::uint8_t version = cur.u8("version");
  if (version != kFormatVersion) {
    throw MalformedBitstream("unsupported version", 4);
  }
  AgdlBitstream b;
  b.header.width = cur.u16("width");
  b.header.height = cur.u16("height");
  b.header.quality = cur.u8("quality");
  b.header.seed = cur.u64("seed");
  b.header.rho_num = cur.u16("rho numerator");
  b.header.mrate_num = cur.u16("m-rate numerator");
  b.header.tau_e_x16 = cur.u16("tau_e");
  b.header.pocs_iterations = cur.u8("pocs iterations");

  if (b.header.width == 0 || b.header.height == 0) {
    throw MalformedBitstream("zero image dimension", 5);
  }
  if (b.header.quality < 1 || b.header.quality > 100) {
    throw MalformedBitstream("quality out of range", 9);
  }
  if (b.header.rho_num < 1 || b.header.rho_num > 10000) {
    throw MalformedBitstream("rho numerator out of range", 18);
  }
  if (b.header.mrate_num > 10000) {
    throw MalformedBitstream("m-rate numerator out of range", 20);
  }
  if (b.header.pocs_iterations < 1) {
    throw MalformedBitstream("pocs iterations out of range", 24);
  }

  const std::uint32_t base_len = cur.u32("base payload length");
  cur.need(base_len, "base payload");
  b.base.width = b.header.width;
  b.base.height = b.header.height;
  b.base.quality = b.header.quality;
  b.base.bytes.assign(bytes.begin() + cur.pos, bytes.begin() + cur.pos + base_len);
  cur.pos += base_len;

  const std::uint32_t m = cur.u32("measurement count");
  b.measurements.offset = cur.f64("measurement offset");
  b.measurements.step = cur.f64("measurement step");
  cur.need(2 * static_cast<std::size_t>(m), "measurement codes");
  b.measurements.codes.resize(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    b.measurements.codes[i] = cur.u16("measurement code");
  }
  if (cur.pos != bytes.size()) {
    throw MalformedBitstream("trailing bytes after bitstream", cur.pos);
  }
  return b;
}

struct EncodeConfig {
  int quality = 50;
  std::uint16_t rho_num = 200;      // rho = 0.02
  std::uint16_t mrate_num = 5000;   // M = ceil(0.5 * N_c)
  std::uint16_t tau_e_x16 = 64;     // tau_e = 4.0
  std::uint8_t pocs_iterations = 1;
  std::uint64_t seed = 0x4147444CULL;

  void validate() const {
    if (quality < 1 || quality > 100) {
      throw InvalidParameter("EncodeConfig: quality must be in [1,100]");
    }
    if (rho_num < 1 || rho_num > 10000) {
      throw InvalidParameter("EncodeConfig: rho numerator must be in [1,1e4]");
    }
    if (mrate_num > 10000) {
      throw InvalidParameter("EncodeConfig: m-rate numerator must be <= 1e4");
    }
    if (pocs_iterations < 1) {
      throw InvalidParameter("EncodeConfig: POCS iterations must be >= 1");
    }
  }
};

// Everything the detector pass produces; shared by encoder and decoder so
// by construction both sides run the same arithmetic.
struct DetectorPass {
  Image soft;      // real-valued
  CriticalSet set; // values are the soft image's (c_g)
  Mask roi;        // detector's saliency region, for ROI metrics
};

inline DetectorPass run_detector(const DecodedBase& base,
                                 const AgdlHeader& header) {
  DetectorPass pass;
  pass.soft = soft_decode(base.image, base.grid, base.table,
                          header.pocs_params());
  const MaskParams mask_params = header.mask_params();
  pass.set = detect_critical(base.image, pass.soft, mask_params);
  pass.roi = spectral_saliency(base.image, mask_params).roi;
  return pass;
}

struct EncodeTrace {
  Image base;
  Image soft;
  CriticalSet set;
  Mask roi;
  std::vector<double> original_values;   // c, from the input image
  std::vector<double> raw_measurements;  // y before quantization
  CsMatrix matrix;
};

inline AgdlBitstream encode(const Image& img, const EncodeConfig& config,
                            EncodeTrace* trace = nullptr) {
  require_valid(img, "encode");
  config.validate();
  if (img.width > 65535 || img.height > 65535) {
    throw InvalidParameter("encode: image dimensions exceed 16 bits");
  }

  AgdlBitstream b;
  b.header.width = static_cast<std::uint16_t>(img.width);
  b.header.height = static_cast<std::uint16_t>(img.height);
  b.header.quality = static_cast<std::uint8_t>(config.quality);
  b.header.seed = config.seed;
  b.header.rho_num = config.rho_num;
  b.header.mrate_num = config.mrate_num;
  b.header.tau_e_x16 = config.tau_e_x16;
  b.header.pocs_iterations = config.pocs_iterations;

  auto [payload, grid] = encode_base(img, config.quality);
  b.base = std::move(payload);

  // Work from the decoded payload, exactly as the decoder will.
  const DecodedBase decoded = decode_base(b.base);
  DetectorPass pass = run_detector(decoded, b.header);

  const std::size_t n_c = pass.set.count();
  const std::size_t m = b.header.measurement_count_for(n_c);
  CsMatrix h = build_matrix(config.seed, static_cast<int>(m),
                            static_cast<int>(n_c));
  b.header.seed = h.effective_seed;

  // Measurements sample the original image: this is where the refinement
  // layer picks up information the base layer lost.
  std::vector<double> c(n_c);
  for (std::size_t i = 0; i < n_c; ++i) {
    c[i] = img.at(pass.set.coords[i].row, pass.set.coords[i].col);
  }
  std::vector<double> y = sample(h, c);
  b.measurements = quantize(y);

  if (trace) {
    trace->base = decoded.image;
    trace->soft = std::move(pass.soft);
    trace->set = std::move(pass.set);
    trace->roi = std::move(pass.roi);
    trace->original_values = std::move(c);
    trace->raw_measurements = std::move(y);
    trace->matrix = std::move(h);
  }
  return b;
}

enum class DecodeMode { base, soft, full };

struct DecodeTrace {
  Image base;
  Image soft;       // real-valued
  Image full_real;  // refined, before export rounding
  CriticalSet set;
  Mask roi;
  CsMatrix matrix;
  std::vector<double> dequantized;  // y as seen by the refinement
  std::vector<double> adjustment;   // delta*
  std::vector<double> refined;      // c_hat = c_g + delta*
};

inline Image decode(const AgdlBitstream& b, DecodeMode mode = DecodeMode::full,
                    DecodeTrace* trace = nullptr) {
  const DecodedBase decoded = decode_base(b.base);
  if (trace) trace->base = decoded.image;
  if (mode == DecodeMode::base) return decoded.image;

  if (mode == DecodeMode::soft) {
    Image soft = soft_decode(decoded.image, decoded.grid, decoded.table,
                             b.header.pocs_params());
    Image out = quantize_to_export(soft);
    if (trace) trace->soft = std::move(soft);
    return out;
  }

  DetectorPass pass = run_detector(decoded, b.header);
  const std::size_t n_c = pass.set.count();
  if (b.header.measurement_count_for(n_c) != b.measurements.count()) {
    throw IntegrityError(
        "decode: measurement count inconsistent with recomputed critical set");
  }
  CsMatrix h = build_matrix(b.header.seed,
                            static_cast<int>(b.measurements.count()),
                            static_cast<int>(n_c));
  if (h.effective_seed != b.header.seed) {
    throw IntegrityError("decode: sampling matrix seed retry mismatch");
  }
  const std::vector<double> y = dequantize(b.measurements);
  const std::vector<double> delta = least_norm_adjust(h, y, pass.set.values);
  Image refined_img = apply_adjustment(pass.soft, pass.set, delta);
  Image out = quantize_to_export(refined_img);

  if (trace) {
    trace->soft = std::move(pass.soft);
    trace->full_real = std::move(refined_img);
    trace->roi = std::move(pass.roi);
    trace->matrix = std::move(h);
    trace->dequantized = y;
    trace->adjustment = delta;
    trace->refined.resize(n_c);
    for (std::size_t i = 0; i < n_c; ++i) {
      trace->refined[i] = pass.set.values[i] + delta[i];
    }
    trace->set = std::move(pass.set);
  }
  return out;
}

// Bit accounting used by the benchmark: the base-only rate covers the
// header, the length field and the base payload; the measurement layer is
// everything after it.
inline std::size_t base_layer_bits(const AgdlBitstream& b) {
  return (kHeaderBytes + 4 + b.base.bytes.size()) * 8;
}
inline std::size_t measurement_layer_bits(const AgdlBitstream& b) {
  return (4 + 8 + 8 + 2 * b.measurements.count()) * 8;
}
inline std::size_t total_bits(const AgdlBitstream& b) {
  return base_layer_bits(b) + measurement_layer_bits(b);
}

}  // namespace agdl
