#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "core/losses.hpp"

using namespace gi;

namespace {

Tensor random_image(int c, int h, int w, uint64_t seed, float scale = 0.8f) {
  Tensor t({1, c, h, w});
  Rng rng(seed);
  for (size_t i = 0; i < t.size(); ++i)
    t[i] = scale * static_cast<float>(rng.uniform() * 2.0 - 1.0);
  return t;
}

}  // namespace

TEST_CASE("pixel_mae basics and brute-force oracle") {
  Tensor a = random_image(3, 4, 4, 1);
  CHECK(pixel_mae(a, a) == 0.0);
  Tensor b = a;
  for (size_t i = 0; i < b.size(); ++i) b[i] += 0.5f;
  CHECK(pixel_mae(a, b) == doctest::Approx(0.5).epsilon(1e-6));
  Tensor c = random_image(3, 4, 4, 2);
  double brute = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    brute += std::abs(double(a[i]) - double(c[i]));
  brute /= a.size();
  CHECK(pixel_mae(a, c) == doctest::Approx(brute).epsilon(1e-12));
  CHECK(pixel_mae(a, c) == pixel_mae(c, a));
  Tensor wrong({1, 3, 4, 5});
  CHECK_THROWS_AS(pixel_mae(a, wrong), ShapeError);
}

TEST_CASE("pixel_l2 basics and brute-force oracle") {
  Tensor a = random_image(1, 5, 5, 3);
  CHECK(pixel_l2(a, a) == 0.0);
  Tensor b = a;
  for (size_t i = 0; i < b.size(); ++i) b[i] += 0.1f;
  CHECK(pixel_l2(a, b) == doctest::Approx(0.01).epsilon(1e-5));
  Tensor c = random_image(1, 5, 5, 4);
  double brute = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    brute += (double(a[i]) - c[i]) * (double(a[i]) - c[i]);
  brute /= a.size();
  CHECK(pixel_l2(a, c) == doctest::Approx(brute).epsilon(1e-12));
  CHECK(pixel_l2(a, c) == pixel_l2(c, a));
}

TEST_CASE("difference scaling: MAE scales by k, L2 by k^2") {
  Tensor a = random_image(3, 4, 4, 5);
  Tensor d = random_image(3, 4, 4, 6, 0.1f);
  for (double k : {0.25, 0.5, 1.0}) {
    Tensor b = a;
    for (size_t i = 0; i < b.size(); ++i)
      b[i] += static_cast<float>(k) * d[i];
    Tensor b1 = a;
    for (size_t i = 0; i < b1.size(); ++i) b1[i] += d[i];
    CHECK(pixel_mae(a, b) ==
          doctest::Approx(k * pixel_mae(a, b1)).epsilon(1e-5));
    CHECK(pixel_l2(a, b) ==
          doctest::Approx(k * k * pixel_l2(a, b1)).epsilon(1e-4));
  }
}

TEST_CASE("z_loss basics") {
  std::vector<float> z{0.5f, -0.2f, 1.0f};
  CHECK(z_loss(z, z) == 0.0);
  std::vector<float> z1{1.5f, 0.8f, 2.0f};
  CHECK(z_loss(z1, z) == doctest::Approx(1.0).epsilon(1e-6));
  std::vector<float> z2{0.1f, 0.2f, -0.9f};
  double brute =
      (std::abs(0.5 - 0.1) + std::abs(-0.2 - 0.2) + std::abs(1.0 + 0.9)) / 3.0;
  CHECK(z_loss(z, z2) == doctest::Approx(brute).epsilon(1e-6));
  CHECK_THROWS_AS(z_loss(z, {0.0f}), ShapeError);
}

TEST_CASE("perceptual_loss: zero on identical inputs, symmetric") {
  auto ex = FeatureExtractor::build({8, 8, 3, 4, 2, 8}, 42);
  Tensor a = random_image(3, 8, 8, 7);
  Tensor b = random_image(3, 8, 8, 8);
  CHECK(perceptual_loss(ex, a, a) == 0.0);
  CHECK(perceptual_loss(ex, a, b) ==
        doctest::Approx(perceptual_loss(ex, b, a)).epsilon(1e-9));
  CHECK(perceptual_loss(ex, a, b) > 0.0);
}

TEST_CASE("perceptual_loss equals unweighted mean of per-tap MSEs") {
  auto ex = FeatureExtractor::build({8, 8, 3, 4, 3, 8}, 43);
  Tensor a = random_image(3, 8, 8, 9);
  Tensor b = random_image(3, 8, 8, 10);
  auto fa = ex.features(a);
  auto fb = ex.features(b);
  REQUIRE(fa.taps.size() == 3);
  double mean = 0.0;
  for (size_t t = 0; t < fa.taps.size(); ++t) {
    double mse = 0.0;
    for (size_t i = 0; i < fa.taps[t].size(); ++i) {
      double d = double(fa.taps[t][i]) - fb.taps[t][i];
      mse += d * d;
    }
    mean += mse / fa.taps[t].size();
  }
  mean /= fa.taps.size();
  CHECK(perceptual_loss(ex, a, b) == doctest::Approx(mean).epsilon(1e-9));
}

TEST_CASE("single tap point degenerates to plain feature MSE") {
  auto ex = FeatureExtractor::build({8, 8, 3, 4, 1, 8}, 44);
  REQUIRE(ex.tap_points().size() == 1);
  Tensor a = random_image(3, 8, 8, 11);
  Tensor b = random_image(3, 8, 8, 12);
  auto fa = ex.features(a);
  auto fb = ex.features(b);
  double mse = 0.0;
  for (size_t i = 0; i < fa.taps[0].size(); ++i) {
    double d = double(fa.taps[0][i]) - fb.taps[0][i];
    mse += d * d;
  }
  mse /= fa.taps[0].size();
  CHECK(perceptual_loss(ex, a, b) == doctest::Approx(mse).epsilon(1e-9));
}

TEST_CASE("perceptual gradient matches finite differences") {
  auto ex = FeatureExtractor::build({6, 6, 1, 3, 2, 4}, 45);
  Tensor a = random_image(1, 6, 6, 13);
  Tensor b = random_image(1, 6, 6, 14);
  Tensor g = perceptual_grad(ex, a, b);
  REQUIRE(g.same_shape(a));
  const float h = 1e-3f;
  for (size_t i = 0; i < a.size(); i += 3) {
    Tensor ap = a, am = a;
    ap[i] += h;
    am[i] -= h;
    double fd = (perceptual_loss(ex, ap, b) - perceptual_loss(ex, am, b)) /
                (2.0 * h);
    CHECK(std::abs(g[i] - fd) / std::max(1e-3, std::abs(fd)) < 1e-3);
  }
}

TEST_CASE("extractor checkpoint round trip preserves features") {
  auto ex = FeatureExtractor::build({8, 8, 3, 4, 2, 8}, 46);
  ex.save("test_extractor.fckpt");
  auto ex2 = FeatureExtractor::load("test_extractor.fckpt");
  CHECK(ex2.tap_points() == ex.tap_points());
  Tensor a = random_image(3, 8, 8, 15);
  Tensor b = random_image(3, 8, 8, 16);
  double v_orig = perceptual_loss(ex, a, b);
  double v_reload = perceptual_loss(ex2, a, b);
  CHECK(v_reload == v_orig);  // weights are float32 on disk: exact round trip
  CHECK(ex2.weights_fingerprint() == ex.weights_fingerprint());
  std::filesystem::remove("test_extractor.fckpt");
}

TEST_CASE("combine: weighted sum, zero-weight terms skipped") {
  LossWeights w;
  w.pixel = 1;
  w.perceptual = 0;
  w.z = 0;
  CHECK(combine({{"pixel", 1.0}}, w) == 1.0);
  w.perceptual = 1;
  CHECK(combine({{"pixel", 1.0}, {"perceptual", 2.0}}, w) == 3.0);
  // zero-weight terms may carry any value, including non-finite ones
  CHECK(combine({{"pixel", 1.0}, {"z", std::nan("")}}, w) == 1.0);

  // dot-product oracle over random scalars/weights
  Rng rng(47);
  for (int trial = 0; trial < 50; ++trial) {
    LossWeights lw;
    lw.pixel = rng.uniform();
    lw.perceptual = rng.uniform();
    lw.z = rng.uniform() + 0.01;
    double p = rng.normal(), q = rng.normal(), r = rng.normal();
    double expect = lw.pixel * p + lw.perceptual * q + lw.z * r;
    CHECK(combine({{"pixel", p}, {"perceptual", q}, {"z", r}}, lw) ==
          doctest::Approx(expect).epsilon(1e-12));
  }

  LossWeights zero;
  zero.pixel = zero.perceptual = zero.z = 0;
  CHECK_THROWS_AS(combine({{"pixel", 1.0}}, zero), ConfigError);
}
