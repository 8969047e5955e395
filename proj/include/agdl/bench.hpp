#pragma once

// Rate-distortion harness: encode every (image, quality) pair once, decode
// in the three variants and emit deterministic CSV rows with whole-frame,
// ROI and critical-pixel PSNR next to the exact bit accounting.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "agdl/container.hpp"
#include "agdl/metrics.hpp"
#include "agdl/raster.hpp"

namespace agdl {

struct RdPoint {
  std::string image;
  int quality = 0;
  std::string variant;  // base | soft | full
  double bpp = 0.0;
  double psnr = 0.0;
  double roi_psnr = 0.0;
  double crit_psnr = 0.0;
  std::size_t n_c = 0;
  std::size_t m = 0;
};

struct BenchConfig {
  std::vector<int> qualities = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  EncodeConfig enc;
};

inline constexpr const char* kCsvHeader =
    "image,quality,variant,bpp,psnr,roi_psnr,crit_psnr,n_c,m";

// Rows for one already-loaded image; `name` is the image id in the CSV.
inline std::vector<RdPoint> rd_points_for_image(const std::string& name,
                                                const Image& original,
                                                const BenchConfig& config) {
  std::vector<int> ladder = config.qualities;
  std::sort(ladder.begin(), ladder.end());

  std::vector<RdPoint> rows;
  for (const int quality : ladder) {
    EncodeConfig enc = config.enc;
    enc.quality = quality;
    const AgdlBitstream bs = encode(original, enc);

    DecodeTrace trace;
    const Image full = decode(bs, DecodeMode::full, &trace);
    const Image soft = quantize_to_export(trace.soft);
    const Image& base = trace.base;

    const double pixels = static_cast<double>(original.pixel_count());
    const double bpp_base = static_cast<double>(base_layer_bits(bs)) / pixels;
    const double bpp_full = static_cast<double>(total_bits(bs)) / pixels;

    const Mask* roi = nullptr;
    for (const auto v : trace.roi.data) {
      if (v) {
        roi = &trace.roi;  // empty ROI falls back to the whole frame
        break;
      }
    }
    Mask crit(original.width, original.height, 0);
    for (const PixelCoord& p : trace.set.coords) crit.at(p.row, p.col) = 1;
    const bool have_crit = trace.set.count() > 0;

    const auto emit = [&](const char* variant, const Image& img, double bpp) {
      RdPoint row;
      row.image = name;
      row.quality = quality;
      row.variant = variant;
      row.bpp = bpp;
      row.psnr = psnr(original, img);
      row.roi_psnr = psnr(original, img, roi);
      row.crit_psnr = have_crit ? psnr(original, img, &crit) : kPsnrCap;
      row.n_c = trace.set.count();
      row.m = bs.measurements.count();
      rows.push_back(std::move(row));
    };
    emit("base", base, bpp_base);
    emit("soft", soft, bpp_base);
    emit("full", full, bpp_full);
  }
  return rows;
}

// Scans `dir` for *.pgm (name ascending); unreadable images are reported
// to `diagnostics` and skipped.
inline std::vector<RdPoint> run_rd(const std::string& dir,
                                   const BenchConfig& config,
                                   std::ostream* diagnostics = nullptr) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename() < b.filename(); });

  std::vector<RdPoint> rows;
  for (const auto& path : files) {
    try {
      const Image img = load_pgm(path.string());
      auto image_rows =
          rd_points_for_image(path.stem().string(), img, config);
      rows.insert(rows.end(), image_rows.begin(), image_rows.end());
    } catch (const Error& e) {
      if (diagnostics) {
        *diagnostics << "bench: skipping " << path.string() << ": " << e.what()
                     << "\n";
      }
    }
  }
  return rows;
}

inline std::string to_csv_row(const RdPoint& row) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%d,%s,%.6f,%.4f,%.4f,%.4f,%zu,%zu",
                row.image.c_str(), row.quality, row.variant.c_str(), row.bpp,
                row.psnr, row.roi_psnr, row.crit_psnr, row.n_c, row.m);
  return buf;
}

inline void write_csv(std::ostream& out, const std::vector<RdPoint>& rows) {
  out << kCsvHeader << "\n";
  for (const RdPoint& row : rows) out << to_csv_row(row) << "\n";
}

}  // namespace agdl
