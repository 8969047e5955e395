#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "agdl/cs_refine.hpp"
#include "testutil.hpp"

using namespace agdl;

namespace {

CsMatrix manual_matrix(int rows, int cols, std::vector<double> entries) {
  CsMatrix h;
  h.rows = rows;
  h.cols = cols;
  h.a = std::move(entries);
  return h;
}

std::vector<double> random_vector(std::mt19937_64& rng, int n, double scale) {
  std::vector<double> v(n);
  for (double& x : v) x = (testutil::u01(rng) * 2.0 - 1.0) * scale;
  return v;
}

}  // namespace

TEST_CASE("sampling matrix construction") {
  SECTION("m = 0 yields an empty matrix") {
    const CsMatrix h = build_matrix(123, 0, 10);
    CHECK(h.rows == 0);
    CHECK(h.cols == 10);
    CHECK(h.a.empty());
    CHECK(h.effective_seed == 123);
  }
  SECTION("construction is deterministic in the seed") {
    const CsMatrix a = build_matrix(7, 16, 64);
    const CsMatrix b = build_matrix(7, 16, 64);
    CHECK(a.a == b.a);
    CHECK(a.effective_seed == b.effective_seed);
  }
  SECTION("entries are +-1/sqrt(m) and the Gram matrix is SPD") {
    const CsMatrix h = build_matrix(7, 16, 64);
    const double mag = 1.0 / std::sqrt(16.0);
    for (const double v : h.a) CHECK(std::abs(std::abs(v) - mag) < 1e-15);
    // build_matrix already ran the Cholesky check; re-run it here
    auto g = detail::gram(h);
    CHECK(detail::cholesky(g, h.rows, 1e-9));
  }
  SECTION("m > n is rejected") {
    CHECK_THROWS_AS(build_matrix(1, 5, 4), InvalidParameter);
  }
}

TEST_CASE("sampling") {
  SECTION("zero vector maps to zero measurements") {
    const CsMatrix h = build_matrix(3, 8, 32);
    const std::vector<double> c(32, 0.0);
    for (const double y : sample(h, c)) CHECK(y == 0.0);
  }
  SECTION("1x1 identity matrix passes the value through") {
    const CsMatrix h = manual_matrix(1, 1, {1.0});
    const std::vector<double> y = sample(h, std::vector<double>{200.0});
    REQUIRE(y.size() == 1);
    CHECK(y[0] == 200.0);
  }
  SECTION("sampling is linear") {
    std::mt19937_64 rng(5);
    const CsMatrix h = build_matrix(9, 12, 48);
    const auto a = random_vector(rng, 48, 255.0);
    const auto b = random_vector(rng, 48, 255.0);
    std::vector<double> apb(48);
    for (int i = 0; i < 48; ++i) apb[i] = a[i] + b[i];
    const auto ya = sample(h, a);
    const auto yb = sample(h, b);
    const auto yab = sample(h, apb);
    for (int i = 0; i < 12; ++i) {
      REQUIRE(std::abs(yab[i] - ya[i] - yb[i]) < 1e-9);
    }
  }
  SECTION("length mismatch is rejected") {
    const CsMatrix h = build_matrix(3, 4, 16);
    CHECK_THROWS_AS(sample(h, std::vector<double>(15, 0.0)), InvalidParameter);
  }
}

TEST_CASE("measurement quantization") {
  SECTION("an all-equal vector reconstructs exactly") {
    const std::vector<double> raw(9, 123.456);
    const Measurements q = quantize(raw);
    CHECK(q.step == 1e-6);
    for (const auto code : q.codes) CHECK(code == 0);
    const auto back = dequantize(q);
    for (const double v : back) CHECK(v == 123.456);
  }
  SECTION("range endpoints are exactly representable") {
    const double step = 1e-5;
    const std::vector<double> raw = {0.0, 65535.0 * step};
    const Measurements q = quantize(raw);
    CHECK(q.codes[0] == 0);
    CHECK(q.codes[1] == 65535);
    const auto back = dequantize(q);
    CHECK(back[0] == 0.0);
    CHECK(std::abs(back[1] - raw[1]) < 1e-15);
  }
  SECTION("error never exceeds half a step") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
      const auto raw = random_vector(rng, 64, 3000.0);
      const Measurements q = quantize(raw);
      const auto back = dequantize(q);
      for (std::size_t i = 0; i < raw.size(); ++i) {
        REQUIRE(std::abs(back[i] - raw[i]) <= q.step / 2 + 1e-12);
      }
    }
  }
  SECTION("non-finite input is rejected") {
    CHECK_THROWS_AS(
        quantize(std::vector<double>{1.0, std::numeric_limits<double>::infinity()}),
        InvalidParameter);
  }
  SECTION("empty input round trips") {
    const Measurements q = quantize(std::vector<double>{});
    CHECK(q.count() == 0);
    CHECK(dequantize(q).empty());
  }
}

TEST_CASE("least-norm adjustment") {
  SECTION("hand-checked 1x2 system") {
    // H = [1 1], c_g = (1,1), y = 4: pseudoinverse row (1/2,1/2) applied
    // to residual 2 gives delta* = (1,1)
    const CsMatrix h = manual_matrix(1, 2, {1.0, 1.0});
    const auto delta = least_norm_adjust(h, std::vector<double>{4.0},
                                         std::vector<double>{1.0, 1.0});
    REQUIRE(delta.size() == 2);
    CHECK(std::abs(delta[0] - 1.0) < 1e-12);
    CHECK(std::abs(delta[1] - 1.0) < 1e-12);
  }
  SECTION("consistent measurements need no adjustment") {
    std::mt19937_64 rng(23);
    const CsMatrix h = build_matrix(31, 10, 40);
    const auto c_g = random_vector(rng, 40, 255.0);
    const auto y = sample(h, c_g);
    const auto delta = least_norm_adjust(h, y, c_g);
    for (const double d : delta) CHECK(std::abs(d) < 1e-9);
  }
  SECTION("square invertible system reproduces the dense solve") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 10; ++trial) {
      const CsMatrix h = build_matrix(1000 + trial, 8, 8);
      const auto c_g = random_vector(rng, 8, 100.0);
      const auto y = random_vector(rng, 8, 100.0);
      const auto delta = least_norm_adjust(h, y, c_g);
      const auto direct = testutil::gauss_solve(h.a, y, 8);
      for (int i = 0; i < 8; ++i) {
        REQUIRE(std::abs(c_g[i] + delta[i] - direct[i]) < 1e-7);
      }
    }
  }
  SECTION("matches the KKT oracle on random fat systems") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 25; ++trial) {
      const int m = 1 + static_cast<int>(rng() % 24);
      const int n = m + static_cast<int>(rng() % 40);
      const CsMatrix h = build_matrix(500 + trial, m, n);
      const auto c_g = random_vector(rng, n, 255.0);
      const auto y = random_vector(rng, m, 255.0);
      const auto got = least_norm_adjust(h, y, c_g);
      const auto want = testutil::oracle_least_norm(h, y, c_g);
      const double scale = std::max(testutil::l2(want), 1e-9);
      double err = 0.0;
      for (int i = 0; i < n; ++i) err += (got[i] - want[i]) * (got[i] - want[i]);
      REQUIRE(std::sqrt(err) / scale < 1e-8);
    }
  }
  SECTION("constraint is satisfied after adjustment") {
    std::mt19937_64 rng(37);
    const CsMatrix h = build_matrix(41, 24, 96);
    const auto c_g = random_vector(rng, 96, 255.0);
    const auto y = random_vector(rng, 24, 255.0);
    const auto delta = least_norm_adjust(h, y, c_g);
    std::vector<double> adjusted(96);
    for (int i = 0; i < 96; ++i) adjusted[i] = c_g[i] + delta[i];
    const auto resampled = sample(h, adjusted);
    double worst = 0.0;
    for (int i = 0; i < 24; ++i) worst = std::max(worst, std::abs(resampled[i] - y[i]));
    double ymax = 1.0;
    for (const double v : y) ymax = std::max(ymax, std::abs(v));
    CHECK(worst <= 1e-6 * ymax);
  }
  SECTION("adjustment lies in the row space") {
    std::mt19937_64 rng(41);
    const CsMatrix h = build_matrix(43, 16, 80);
    const auto c_g = random_vector(rng, 80, 255.0);
    const auto y = random_vector(rng, 16, 255.0);
    const auto delta = least_norm_adjust(h, y, c_g);
    const auto projected = testutil::oracle_rowspace_projection(h, delta);
    double err = 0.0;
    for (int i = 0; i < 80; ++i) err += (projected[i] - delta[i]) * (projected[i] - delta[i]);
    CHECK(std::sqrt(err) <= 1e-8 * testutil::l2(delta));
  }
  SECTION("rank-deficient matrix raises rank-failure") {
    const CsMatrix h = manual_matrix(2, 4, {1, 1, 1, 1, 1, 1, 1, 1});
    CHECK_THROWS_AS(least_norm_adjust(h, std::vector<double>{1.0, 2.0},
                                      std::vector<double>(4, 0.0)),
                    RankFailure);
  }
  SECTION("size mismatches are rejected") {
    const CsMatrix h = build_matrix(3, 4, 16);
    CHECK_THROWS_AS(least_norm_adjust(h, std::vector<double>(3, 0.0),
                                      std::vector<double>(16, 0.0)),
                    InvalidParameter);
    CHECK_THROWS_AS(least_norm_adjust(h, std::vector<double>(4, 0.0),
                                      std::vector<double>(15, 0.0)),
                    InvalidParameter);
  }
}

TEST_CASE("applying the adjustment") {
  Image img(16, 16, 60.0);
  CriticalSet set;
  set.coords = {{2, 3}, {5, 5}, {9, 14}};
  set.values = {60.0, 60.0, 60.0};

  SECTION("zero adjustment leaves the image unchanged") {
    const Image out = apply_adjustment(img, set, std::vector<double>(3, 0.0));
    CHECK(out.data == img.data);
  }
  SECTION("empty set leaves the image unchanged") {
    const Image out = apply_adjustment(img, CriticalSet{}, std::vector<double>{});
    CHECK(out.data == img.data);
  }
  SECTION("exactly the targeted pixels change") {
    const std::vector<double> delta = {1.5, -2.25, 7.0};
    const Image out = apply_adjustment(img, set, delta);
    int changed = 0;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      if (out.data[i] != img.data[i]) ++changed;
    }
    CHECK(changed == 3);
    CHECK(out.at(2, 3) == 61.5);
    CHECK(out.at(5, 5) == 57.75);
    CHECK(out.at(9, 14) == 67.0);
  }
  SECTION("length mismatch is rejected") {
    CHECK_THROWS_AS(apply_adjustment(img, set, std::vector<double>(2, 0.0)),
                    InvalidParameter);
  }
}
