// Command-line front end: encode, decode, inspect and bench subcommands
// over .agdl bitstreams and binary PGM images.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "agdl/agdl.hpp"

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw agdl::Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw agdl::Error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

// "10:100:10", "10,20,30" or a single value
std::vector<int> parse_qualities(const std::string& spec) {
  std::vector<int> out;
  if (spec.find(':') != std::string::npos) {
    int start = 0, stop = 0, step = 0;
    if (std::sscanf(spec.c_str(), "%d:%d:%d", &start, &stop, &step) != 3 ||
        step <= 0 || start > stop) {
      throw CLI::ValidationError("--qualities", "expected start:stop:step");
    }
    for (int q = start; q <= stop; q += step) out.push_back(q);
  } else {
    std::size_t pos = 0;
    while (pos < spec.size()) {
      std::size_t next = spec.find(',', pos);
      if (next == std::string::npos) next = spec.size();
      out.push_back(std::stoi(spec.substr(pos, next - pos)));
      pos = next + 1;
    }
  }
  if (out.empty()) {
    throw CLI::ValidationError("--qualities", "no quality values given");
  }
  return out;
}

std::uint16_t fraction_numerator(double fraction, const char* what) {
  const long long num = std::llround(fraction * 10000.0);
  if (num < 0 || num > 10000) {
    throw agdl::InvalidParameter(std::string(what) + " must be in [0,1]");
  }
  return static_cast<std::uint16_t>(num);
}

void dump_masks(const std::string& prefix, const agdl::Image& original,
                const agdl::AgdlBitstream& bs, const agdl::EncodeTrace& trace) {
  const agdl::MaskParams params = bs.header.mask_params();
  agdl::save_pgm(prefix + "-edges.pgm", agdl::canny_edges(trace.base, params));
  const auto saliency = agdl::spectral_saliency(trace.base, params);
  agdl::save_pgm(prefix + "-roi.pgm", saliency.roi);

  agdl::Image scores(saliency.score.width, saliency.score.height);
  double max_score = 0.0;
  for (const double v : saliency.score.data) max_score = std::max(max_score, v);
  for (std::size_t i = 0; i < scores.data.size(); ++i) {
    scores.data[i] = max_score > 0.0 ? 255.0 * saliency.score.data[i] / max_score : 0.0;
  }
  agdl::save_pgm(prefix + "-saliency.pgm", scores);

  const agdl::ScoreMap change = agdl::change_map(trace.base, trace.soft);
  agdl::Image change_img(change.width, change.height);
  for (std::size_t i = 0; i < change.data.size(); ++i) {
    change_img.data[i] = std::min(255.0, change.data[i] * 16.0);
  }
  agdl::save_pgm(prefix + "-change.pgm", change_img);

  agdl::Mask crit(original.width, original.height, 0);
  for (const auto& p : trace.set.coords) crit.at(p.row, p.col) = 1;
  agdl::save_pgm(prefix + "-critical.pgm", crit);
}

int run(int argc, char** argv) {
  CLI::App app{"AGDL dual-layer image codec (base layer + compressive-sensed "
               "critical-pixel refinement)"};
  app.require_subcommand(1);

  // encode
  std::string enc_input, enc_output, enc_mask_prefix;
  double enc_rho = 0.02, enc_mrate = 0.5, enc_tau = 4.0;
  int enc_quality = 50, enc_iters = 1;
  std::uint64_t enc_seed = 0x4147444CULL;
  auto* enc = app.add_subcommand("encode", "Encode a PGM image to .agdl");
  enc->add_option("--input", enc_input, "input PGM (binary P5)")->required();
  enc->add_option("--output", enc_output, "output .agdl path")->required();
  enc->add_option("--quality", enc_quality, "base-layer quality 1..100")
      ->required()->check(CLI::Range(1, 100));
  enc->add_option("--ncrit", enc_rho, "critical pixel fraction rho (default 0.02)");
  enc->add_option("--mrate", enc_mrate, "measurements per critical pixel (default 0.5)");
  enc->add_option("--seed", enc_seed, "sampling matrix seed");
  enc->add_option("--tau", enc_tau, "error-proxy threshold tau_e (default 4.0)");
  enc->add_option("--iters", enc_iters, "POCS iterations (default 1)")
      ->check(CLI::Range(1, 255));
  enc->add_option("--dump-masks", enc_mask_prefix,
                  "write detector masks as PREFIX-*.pgm");

  // decode
  std::string dec_input, dec_output, dec_mode = "full";
  auto* dec = app.add_subcommand("decode", "Decode an .agdl bitstream to PGM");
  dec->add_option("input", dec_input, ".agdl file")->required();
  dec->add_option("--output", dec_output, "output PGM path")->required();
  dec->add_option("--mode", dec_mode, "base | soft | full (default full)")
      ->check(CLI::IsMember({"base", "soft", "full"}));

  // inspect
  std::string ins_input;
  auto* ins = app.add_subcommand("inspect", "Print header and layer summary");
  ins->add_option("input", ins_input, ".agdl file")->required();

  // bench
  std::string bench_dir, bench_qualities = "10:100:10", bench_csv = "-";
  double bench_rho = 0.02, bench_mrate = 0.5;
  std::uint64_t bench_seed = 0x4147444CULL;
  auto* bench = app.add_subcommand("bench", "Rate-distortion sweep over a PGM directory");
  bench->add_option("--dir", bench_dir, "directory of PGM images")->required();
  bench->add_option("--qualities", bench_qualities, "ladder, e.g. 10:100:10");
  bench->add_option("--csv", bench_csv, "output CSV path, '-' for stdout");
  bench->add_option("--ncrit", bench_rho, "critical pixel fraction rho");
  bench->add_option("--mrate", bench_mrate, "measurements per critical pixel");
  bench->add_option("--seed", bench_seed, "sampling matrix seed");

  CLI11_PARSE(app, argc, argv);

  if (enc->parsed()) {
    agdl::EncodeConfig config;
    config.quality = enc_quality;
    config.rho_num = fraction_numerator(enc_rho, "--ncrit");
    config.mrate_num = fraction_numerator(enc_mrate, "--mrate");
    config.tau_e_x16 = static_cast<std::uint16_t>(
        std::clamp(std::llround(enc_tau * 16.0), 0LL, 65535LL));
    config.pocs_iterations = static_cast<std::uint8_t>(enc_iters);
    config.seed = enc_seed;

    const agdl::Image img = agdl::load_pgm(enc_input);
    agdl::EncodeTrace trace;
    const agdl::AgdlBitstream bs = agdl::encode(img, config, &trace);
    const auto bytes = agdl::serialize(bs);
    write_file(enc_output, bytes);
    if (!enc_mask_prefix.empty()) dump_masks(enc_mask_prefix, img, bs, trace);
    std::cerr << "encoded " << enc_input << ": " << img.width << "x" << img.height
              << " quality=" << enc_quality << " n_c=" << trace.set.count()
              << " m=" << bs.measurements.count() << " bytes=" << bytes.size()
              << " bpp=" << static_cast<double>(bytes.size() * 8) / img.pixel_count()
              << "\n";
    return 0;
  }

  if (dec->parsed()) {
    const auto bytes = read_file(dec_input);
    const agdl::AgdlBitstream bs = agdl::parse(bytes);
    const agdl::DecodeMode mode = dec_mode == "base"   ? agdl::DecodeMode::base
                                  : dec_mode == "soft" ? agdl::DecodeMode::soft
                                                       : agdl::DecodeMode::full;
    agdl::save_pgm(dec_output, agdl::decode(bs, mode));
    return 0;
  }

  if (ins->parsed()) {
    const auto bytes = read_file(ins_input);
    const agdl::AgdlBitstream bs = agdl::parse(bytes);
    const agdl::AgdlHeader& h = bs.header;
    const double pixels = static_cast<double>(h.width) * h.height;

    // the critical set is not transmitted; rerun the detector to report it
    const agdl::DecodedBase decoded = agdl::decode_base(bs.base);
    const agdl::DetectorPass pass = agdl::run_detector(decoded, h);

    std::printf("agdl bitstream: %s\n", ins_input.c_str());
    std::printf("  size          %ux%u\n", h.width, h.height);
    std::printf("  quality       %u\n", h.quality);
    std::printf("  seed          0x%016llx\n",
                static_cast<unsigned long long>(h.seed));
    std::printf("  rho           %.4f\n", h.rho_num / 10000.0);
    std::printf("  m_rate        %.4f\n", h.mrate_num / 10000.0);
    std::printf("  tau_e         %.4f\n", h.tau_e_x16 / 16.0);
    std::printf("  pocs_iters    %u\n", h.pocs_iterations);
    std::printf("  n_c           %zu\n", pass.set.count());
    std::printf("  m             %zu\n", bs.measurements.count());
    std::printf("  base payload  %zu bytes\n", bs.base.bytes.size());
    std::printf("  layer bpp     header+base %.6f, measurements %.6f, total %.6f\n",
                agdl::base_layer_bits(bs) / pixels,
                agdl::measurement_layer_bits(bs) / pixels,
                agdl::total_bits(bs) / pixels);
    return 0;
  }

  // bench
  agdl::BenchConfig config;
  config.qualities = parse_qualities(bench_qualities);
  config.enc.rho_num = fraction_numerator(bench_rho, "--ncrit");
  config.enc.mrate_num = fraction_numerator(bench_mrate, "--mrate");
  config.enc.seed = bench_seed;
  const auto rows = agdl::run_rd(bench_dir, config, &std::cerr);
  if (bench_csv == "-") {
    agdl::write_csv(std::cout, rows);
  } else {
    std::ofstream out(bench_csv);
    if (!out) throw agdl::Error("cannot write " + bench_csv);
    agdl::write_csv(out, rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const agdl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
