#include <catch_amalgamated.hpp>

#include <cmath>

#include "agdl/metrics.hpp"
#include "agdl/soft_decoder.hpp"
#include "testutil.hpp"

using namespace agdl;

namespace {

Image fixed_16x16() {
  Image img(16, 16);
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 16; ++c) {
      img.at(r, c) = 30.0 + 12.0 * ((r * 7 + c * 13) % 15) + (r > 7 ? 60.0 : 0.0);
    }
  }
  return img;
}

}  // namespace

TEST_CASE("bilateral smoothing basics") {
  const PocsParams params;
  SECTION("constant image is a fixed point") {
    const Image img(12, 9, 77.0);
    const Image out = smooth_pixels(img, params);
    for (const double v : out.data) CHECK(std::abs(v - 77.0) < 1e-12);
  }
  SECTION("an isolated impulse is attenuated") {
    Image img(15, 15, 50.0);
    img.at(7, 7) = 150.0;
    const Image out = smooth_pixels(img, params);
    CHECK(out.at(7, 7) < 150.0);
    CHECK(out.at(7, 7) > 50.0);
  }
  SECTION("matches the double-loop reference on a fixed raster") {
    const Image img = fixed_16x16();
    const Image got = smooth_pixels(img, params);
    const Image want = testutil::oracle_bilateral(img, params.spatial_sigma,
                                                  params.range_sigma, 2);
    REQUIRE(got.same_size(want));
    for (std::size_t i = 0; i < got.data.size(); ++i) {
      REQUIRE(std::abs(got.data[i] - want.data[i]) < 1e-9);
    }
  }
  SECTION("invalid parameters are rejected") {
    PocsParams bad;
    bad.iterations = 0;
    CHECK_THROWS_AS(smooth_pixels(Image(4, 4, 0.0), bad), InvalidParameter);
  }
}

TEST_CASE("DCT-bin projection") {
  const Image source = testutil::make_textured_disk();
  const auto [payload, grid] = encode_base(source, 50);
  const DecodedBase decoded = decode_base(payload);

  SECTION("a bin-centered image is a fixed point") {
    // rebuild the exact dequantized reconstruction; with this source it
    // stays inside [0,255], so its coefficients sit at bin centers
    Image centered(decoded.image.width, decoded.image.height);
    double coeff[64], pixel[64];
    for (int by = 0; by < decoded.grid.blocks_y; ++by) {
      for (int bx = 0; bx < decoded.grid.blocks_x; ++bx) {
        const std::int32_t* blk = decoded.grid.block(
            static_cast<std::size_t>(by) * decoded.grid.blocks_x + bx);
        for (int pos = 0; pos < 64; ++pos) {
          coeff[pos] = static_cast<double>(blk[pos]) *
                       decoded.table.at_natural(pos);
        }
        idct8x8(coeff, pixel);
        for (int r = 0; r < 8; ++r) {
          for (int c = 0; c < 8; ++c) {
            centered.at(by * 8 + r, bx * 8 + c) = pixel[r * 8 + c] + 128.0;
          }
        }
      }
    }
    const Image projected = project_dct_bins(centered, decoded.grid, decoded.table);
    for (std::size_t i = 0; i < centered.data.size(); ++i) {
      REQUIRE(std::abs(projected.data[i] - centered.data[i]) < 1e-9);
    }
  }
  SECTION("projection is idempotent within 1e-6") {
    const Image smoothed = smooth_pixels(decoded.image, PocsParams{});
    const Image once = project_dct_bins(smoothed, decoded.grid, decoded.table);
    const Image twice = project_dct_bins(once, decoded.grid, decoded.table);
    for (std::size_t i = 0; i < once.data.size(); ++i) {
      REQUIRE(std::abs(twice.data[i] - once.data[i]) < 1e-6);
    }
  }
  SECTION("the decoded base image barely moves") {
    const Image projected =
        project_dct_bins(decoded.image, decoded.grid, decoded.table);
    double worst = 0.0;
    for (std::size_t i = 0; i < projected.data.size(); ++i) {
      worst = std::max(worst, std::abs(projected.data[i] - decoded.image.data[i]));
    }
    // the only motion comes from export rounding of the base image
    CHECK(worst < 1.0);
  }
  SECTION("grid/image mismatch is rejected") {
    CHECK_THROWS_AS(project_dct_bins(Image(8, 8, 0.0), decoded.grid, decoded.table),
                    InvalidParameter);
  }
}

TEST_CASE("soft decoding") {
  SECTION("quality 100 pins the output to the base layer") {
    // bins of width 1 pin every DCT coefficient to half a level of the
    // transmitted value; in the pixel domain that means sub-half-level
    // deviation on average, a few levels worst case where the per
    // coefficient half-steps align
    const Image source = testutil::make_rings();
    const auto [payload, grid] = encode_base(source, 100);
    const DecodedBase decoded = decode_base(payload);
    const Image soft =
        soft_decode(decoded.image, decoded.grid, decoded.table, PocsParams{});
    CHECK(testutil::max_bin_violation(soft, decoded.grid, decoded.table) <= 1e-6);
    double mean_dev = 0.0;
    for (std::size_t i = 0; i < soft.data.size(); ++i) {
      const double dev = std::abs(soft.data[i] - decoded.image.data[i]);
      mean_dev += dev;
      REQUIRE(dev <= 4.0);
    }
    CHECK(mean_dev / static_cast<double>(soft.data.size()) <= 0.5);
  }
  SECTION("soft decode does not hurt on photographic content at quality 10") {
    for (const auto& [name, source] : testutil::natural_corpus()) {
      const auto [payload, grid] = encode_base(source, 10);
      const DecodedBase decoded = decode_base(payload);
      const Image soft =
          soft_decode(decoded.image, decoded.grid, decoded.table, PocsParams{});
      INFO(name);
      CHECK(mse(source, soft) <= mse(source, decoded.image));
    }
  }
  SECTION("output respects the quantization bins") {
    const Image source = testutil::make_checker_patch();
    const auto [payload, grid] = encode_base(source, 20);
    const DecodedBase decoded = decode_base(payload);
    const Image soft =
        soft_decode(decoded.image, decoded.grid, decoded.table, PocsParams{});
    CHECK(testutil::max_bin_violation(soft, decoded.grid, decoded.table) <= 1e-6);
  }
  SECTION("two runs are bit-identical") {
    const Image source = testutil::make_ribbon();
    const auto [payload, grid] = encode_base(source, 25);
    const DecodedBase decoded = decode_base(payload);
    const Image a =
        soft_decode(decoded.image, decoded.grid, decoded.table, PocsParams{});
    const Image b =
        soft_decode(decoded.image, decoded.grid, decoded.table, PocsParams{});
    REQUIRE(a.data == b.data);
  }
}
