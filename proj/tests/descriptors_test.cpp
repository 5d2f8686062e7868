#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "periocular/descriptors.hpp"
#include "periocular/error.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace periocular;

namespace {

Image random_block(int side, std::mt19937_64& rng, bool integer_levels = true) {
  std::uniform_int_distribution<int> level(0, 255);
  std::uniform_real_distribution<double> real(0.0, 255.0);
  std::vector<double> d(static_cast<std::size_t>(side * side));
  for (double& v : d) v = integer_levels ? level(rng) : real(rng);
  return Image(side, side, std::move(d));
}

Image constant(int w, int h, double v) { return Image(w, h, std::vector<double>(static_cast<std::size_t>(w * h), v)); }

template <class R>
std::size_t argmax(const R& r) {
  return static_cast<std::size_t>(std::distance(r.begin(), std::max_element(r.begin(), r.end())));
}

template <class R>
bool strict_argmax(const R& r, std::size_t k) {
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i != k && !(r[i] < r[k])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("descriptor names") {
  CHECK(parse_descriptor("gabor") == Descriptor::kGabor);
  CHECK(parse_descriptor("LBP") == Descriptor::kLbp);
  CHECK_THROWS_AS(parse_descriptor("SIFT"), ConfigError);
  CHECK_THROWS_AS(parse_descriptor("FUSED"), ConfigError);
}

TEST_CASE("lbp_block") {
  SUBCASE("constant block puts everything in bin 0") {
    const auto h = lbp_block(constant(16, 16, 90.0));
    CHECK(h == std::array<double, 8>{1, 0, 0, 0, 0, 0, 0, 0});
  }
  SUBCASE("only the top-left neighbour is brighter") {
    Image b = constant(5, 5, 100.0);
    b.set(1, 1, 200.0);  // top-left of (2, 2)
    CHECK(lbp_code(b, 2, 2) == 128);
    CHECK(oracle::lbp_code(b, 2, 2) == 128);
    Image tiny = constant(3, 3, 10.0);
    tiny.set(0, 0, 11.0);
    CHECK(lbp_block(tiny) == std::array<double, 8>{0, 0, 0, 0, 1, 0, 0, 0});
  }
  SUBCASE("3x3 block gives a one-hot histogram") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20; ++i) {
      const auto h = lbp_block(random_block(3, rng));
      CHECK(std::count(h.begin(), h.end(), 1.0) == 1);
      CHECK(std::count(h.begin(), h.end(), 0.0) == 7);
    }
  }
  SUBCASE("agrees with the brute-force histogram") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 100; ++i) {
      const Image b = random_block(16, rng, i % 2 == 0);
      const auto got = lbp_block(b);
      const auto want = oracle::lbp_histogram(b);
      for (std::size_t k = 0; k < 8; ++k) CHECK(std::abs(got[k] - want[k]) <= 1e-12);
      CHECK(std::accumulate(got.begin(), got.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(lbp_block(constant(2, 2, 0.0)), BlockTooSmallError);
}

TEST_CASE("hog_block") {
  CHECK(hog_block(constant(16, 16, 40.0)) == std::array<double, 8>{});

  SUBCASE("vertical step edge lands in the 0 degree bin") {
    std::vector<double> d(16 * 16);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) d[static_cast<std::size_t>(y * 16 + x)] = x < 8 ? 0.0 : 255.0;
    const Image b(16, 16, d);
    const auto h = hog_block(b);
    CHECK(h[0] == doctest::Approx(1.0));
    for (std::size_t k = 1; k < 8; ++k) CHECK(h[k] == 0.0);
    // Two interior columns straddle the edge, each with 14 interior rows and
    // central difference 255.
    const auto raw = hog_histogram(b);
    CHECK(raw[0] == doctest::Approx(2 * 14 * 255.0));
  }
  SUBCASE("mirroring keeps the total gradient mass") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
      const Image b = random_block(16, rng);
      const auto a = hog_histogram(b);
      const auto m = hog_histogram(mirror_horizontal(b));
      CHECK(std::accumulate(a.begin(), a.end(), 0.0) ==
            doctest::Approx(std::accumulate(m.begin(), m.end(), 0.0)).epsilon(1e-12));
      const auto n = hog_block(b);
      CHECK(std::accumulate(n.begin(), n.end(), 0.0) == doctest::Approx(1.0));
      for (double v : n) CHECK(v >= 0.0);
    }
  }
  CHECK_THROWS_AS(hog_block(constant(2, 5, 0.0)), BlockTooSmallError);
}

TEST_CASE("build_gabor_bank") {
  const GaborBank bank = build_gabor_bank(5, 6, 0.25);
  REQUIRE(bank.size() == 30);
  CHECK(bank.frequencies == std::vector<double>{0.25, 0.125, 0.0625, 0.03125, 0.015625});
  for (int o = 0; o < 6; ++o) CHECK(bank.orientations[static_cast<std::size_t>(o)] == doctest::Approx(30.0 * o));
  CHECK(bank.filter(1, 2).frequency == 0.125);
  CHECK(bank.filter(1, 2).orientation_deg == doctest::Approx(60.0));

  const GaborBank gist = build_gabor_bank(4, 8, 0.25);
  REQUIRE(gist.size() == 32);
  CHECK(gist.orientations[1] == doctest::Approx(22.5));

  for (const GaborBank* b : {&bank, &gist}) {
    for (const GaborFilter& f : b->filters) {
      const auto sum = std::accumulate(f.mask.begin(), f.mask.end(), std::complex<double>(0.0));
      CHECK(std::abs(sum) / static_cast<double>(f.mask.size()) < 1e-10);
      CHECK(f.half == static_cast<int>(std::ceil(3.0 * f.sigma)));
    }
  }
  CHECK_THROWS_AS(build_gabor_bank(5, 6, 0.6), AliasingError);
  CHECK_THROWS_AS(build_gabor_bank(0, 6, 0.25), ArgumentError);
}

TEST_CASE("gabor_at_point") {
  const GaborBank bank = build_gabor_bank(5, 6, 0.25);

  SUBCASE("flat image has no response") {
    const Image img = constant(240, 240, 173.0);
    for (double m : gabor_at_point(img, 120, 120, bank)) CHECK(m < 1e-8);
  }
  SUBCASE("sinusoid selects its own channel") {
    const Image img = synth::sinusoid(256, 256, 0.125, 30.0, 0.7);
    const auto r = gabor_at_point(img, 128, 128, bank);
    CHECK(strict_argmax(r, 1 * 6 + 1));
  }
  SUBCASE("corner point is finite") {
    std::mt19937_64 rng(4);
    const Image img = random_block(64, rng);
    for (double m : gabor_at_point(img, 0, 0, bank)) CHECK(std::isfinite(m));
    CHECK_THROWS_AS(gabor_at_point(img, 64, 0, bank), ArgumentError);
  }
  SUBCASE("matches the closed-form oracle") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) {
      const Image b = random_block(16, rng);
      const auto got = gabor_at_point(b, 8, 8, bank);
      for (int f = 0; f < 5; ++f) {
        for (int o = 0; o < 6; ++o) {
          const double want = oracle::GaborOracle{bank.frequencies[static_cast<std::size_t>(f)],
                                                  bank.orientations[static_cast<std::size_t>(o)]}
                                  .response(b, 8, 8);
          CHECK(std::abs(got[static_cast<std::size_t>(f * 6 + o)] - want) <= 1e-6 * std::max(1.0, want));
        }
      }
    }
  }
}

TEST_CASE("glcm_block") {
  SUBCASE("flat block puts all mass on one diagonal cell") {
    for (int levels : {2, 8, 16}) {
      const auto ms = glcm_block(constant(16, 16, 200.0), levels);
      REQUIRE(ms.size() == 4);
      const int k = quantize_level(200.0, levels);
      for (const Glcm& m : ms) CHECK(m.at(k, k) == 1.0);
    }
  }
  SUBCASE("two-column block") {
    const Image b(2, 2, {0.0, 255.0, 0.0, 255.0});
    const auto ms = glcm_block(b, 2);
    CHECK(ms[0].p == std::vector<double>{0.0, 0.5, 0.5, 0.0});
  }
  SUBCASE("matches pair enumeration and stays a symmetric distribution") {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 100; ++i) {
      const Image b = random_block(16, rng, i % 2 == 1);
      const auto ms = glcm_block(b, 8);
      for (std::size_t k = 0; k < 4; ++k) {
        const auto want = oracle::glcm(b, 8, kGlcmOffsets[k][0], kGlcmOffsets[k][1]);
        double sum = 0.0;
        for (int r = 0; r < 8; ++r) {
          for (int c = 0; c < 8; ++c) {
            CHECK(std::abs(ms[k].at(r, c) - want[static_cast<std::size_t>(r * 8 + c)]) <= 1e-12);
            CHECK(ms[k].at(r, c) == ms[k].at(c, r));
            CHECK(ms[k].at(r, c) >= 0.0);
            sum += ms[k].at(r, c);
          }
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(glcm_block(constant(1, 5, 0.0), 8), BlockTooSmallError);
  CHECK_THROWS_AS(glcm_block(constant(4, 4, 0.0), 1), ArgumentError);
}

TEST_CASE("glcm_features") {
  SUBCASE("single diagonal entry") {
    for (int k = 1; k <= 8; ++k) {
      Glcm m{8, std::vector<double>(64, 0.0)};
      m.p[static_cast<std::size_t>((k - 1) * 8 + (k - 1))] = 1.0;
      const auto f = glcm_features(std::vector<Glcm>{m});
      CHECK(f == std::array<double, 5>{0.0, 1.0, 0.0, 1.0, static_cast<double>(k * k)});
    }
  }
  SUBCASE("anti-diagonal 2x2") {
    const Glcm m{2, {0.0, 0.5, 0.5, 0.0}};
    const auto f = glcm_features(std::vector<Glcm>{m});
    CHECK(f[0] == doctest::Approx(1.0));
    CHECK(f[1] == doctest::Approx(0.5));
    CHECK(f[2] == doctest::Approx(1.0));
    CHECK(f[3] == doctest::Approx(0.5));
    CHECK(f[4] == doctest::Approx(2.0));
    CHECK(glcm_features(std::vector<Glcm>(4, m)) == f);
  }
  SUBCASE("random blocks: oracle agreement and ranges") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
      const Image b = random_block(16, rng);
      const auto f = glcm_features(glcm_block(b, 8));
      std::array<double, 5> want{};
      for (const auto& off : kGlcmOffsets) {
        const auto h = oracle::haralick(oracle::glcm(b, 8, off[0], off[1]), 8);
        for (std::size_t k = 0; k < 5; ++k) want[k] += h[k] / 4.0;
      }
      for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(f[k] - want[k]) <= 1e-9);
      CHECK(f[2] >= 0.0);
      CHECK(f[2] <= 2.0 * std::log2(8.0));
      CHECK(f[3] > 0.0);
      CHECK(f[3] <= 1.0);
      CHECK(f[1] > 0.0);
      CHECK(f[1] <= 1.0);
    }
  }
  CHECK_THROWS_AS(glcm_features(std::vector<Glcm>{{2, std::vector<double>(4)}, {3, std::vector<double>(9)}}),
                  ShapeError);
  CHECK_THROWS_AS(glcm_features(std::vector<Glcm>{}), ArgumentError);
}

TEST_CASE("gist_block") {
  const GaborBank bank = build_gabor_bank(4, 8, 0.25);
  SUBCASE("flat block is all zeros") {
    const auto g = gist_block(constant(16, 16, 91.0), bank);
    REQUIRE(g.size() == 32);
    for (double v : g) CHECK(v == 0.0);
  }
  SUBCASE("sinusoid selects its own channel") {
    for (const auto& [f, o] : std::vector<std::pair<int, int>>{{1, 2}, {0, 5}, {1, 0}}) {
      const Image b = synth::sinusoid(32, 32, bank.frequencies[static_cast<std::size_t>(f)],
                                      bank.orientations[static_cast<std::size_t>(o)], 0.4);
      const auto g = gist_block(b, bank);
      CHECK(strict_argmax(g, static_cast<std::size_t>(f * 8 + o)));
    }
  }
  SUBCASE("local normalization is invariant to gain and offset") {
    std::mt19937_64 rng(8);
    const Image b = random_block(16, rng);
    std::vector<double> scaled(b.pixels().begin(), b.pixels().end());
    for (double& v : scaled) v = 0.5 * v + 20.0;
    const auto a = local_variance_normalize(b, {1e-12, 0.25});
    const auto c = local_variance_normalize(Image(16, 16, scaled), {1e-12, 0.25});
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(c[i]).epsilon(1e-6));
  }
}

TEST_CASE("extract_features dimensions and fusion") {
  std::mt19937_64 rng(9);
  std::vector<double> d(96 * 224);
  std::uniform_int_distribution<int> level(0, 255);
  for (double& v : d) v = level(rng);
  const Image large(224, 96, d);
  const Image small(224, 64, std::vector<double>(d.begin(), d.begin() + 64 * 224));

  const FeatureExtractor fx;
  CHECK(fx.extract(large, Descriptor::kGist, RoiSpec::make(RoiVariant::kLarge, 16)).dims() == 2688);
  CHECK(fx.extract(small, Descriptor::kGlcm, RoiSpec::make(RoiVariant::kSmall, 32)).dims() == 70);
  CHECK(fx.extract(large, Descriptor::kGabor, RoiSpec::make(RoiVariant::kLarge, 32)).dims() == 630);
  CHECK_THROWS_AS(fx.extract(small, Descriptor::kLbp, RoiSpec::make(RoiVariant::kLarge, 16)), ShapeError);

  const RoiSpec spec = RoiSpec::make(RoiVariant::kLarge, 16);
  const FeatureVector lbp = fx.extract(large, Descriptor::kLbp, spec);
  const FeatureVector hog = fx.extract(large, Descriptor::kHog, spec);
  const FeatureVector glcm = fx.extract(large, Descriptor::kGlcm, spec);
  CHECK(lbp.dims() == 672);
  CHECK(glcm.dims() == 420);
  const FeatureVector fused = fuse(std::vector<FeatureVector>{lbp, hog, glcm});
  CHECK(fused.dims() == 1764);
  CHECK(fused.descriptor == Descriptor::kFused);
  CHECK(std::equal(glcm.values.begin(), glcm.values.end(), fused.values.end() - 420));

  const FeatureVector single = fuse(std::vector<FeatureVector>{hog});
  CHECK(single.descriptor == Descriptor::kFused);
  CHECK(single.values == hog.values);
  CHECK(fuse(std::vector<FeatureVector>{lbp, hog}).values != fuse(std::vector<FeatureVector>{hog, lbp}).values);
  CHECK_THROWS_AS(fuse(std::vector<FeatureVector>{}), ArgumentError);

  SUBCASE("second block of LBP is the block histogram") {
    const BlockGrid grid = partition_blocks(large, 16);
    const auto h = lbp_block(grid.blocks[1]);
    CHECK(std::equal(h.begin(), h.end(), lbp.values.begin() + 8));
  }
  SUBCASE("GABOR samples the ROI at block centres") {
    const auto r = gabor_at_point(large, 16 + 8, 16 + 8, fx.gabor_bank());
    CHECK(std::equal(r.begin(), r.end(), fx.extract(large, Descriptor::kGabor, spec).values.begin() + (14 + 1) * 30));
  }
  SUBCASE("outputs are finite and deterministic") {
    for (Descriptor desc : {Descriptor::kLbp, Descriptor::kHog, Descriptor::kGabor, Descriptor::kGlcm}) {
      const FeatureVector a = fx.extract(large, desc, spec);
      const FeatureVector b = extract_features(large, desc, spec);
      CHECK(a.values == b.values);
      for (double v : a.values) CHECK(std::isfinite(v));
    }
  }
}
