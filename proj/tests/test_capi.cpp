#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "ganinvert.h"

namespace {

// small conv generator config shared by these tests
const char* kConfig = R"({
  "seed": 5,
  "prior": {"kind": "uniform", "dim": 6},
  "generator": {"image_h": 8, "image_w": 8, "image_c": 1,
                "base_channels": 12, "stages": 1}
})";

}  // namespace

TEST_CASE("capi: prior sampling fills the buffer within bounds") {
  std::vector<float> z(7 * 6, 99.0f);
  REQUIRE(gi_sample_prior("uniform", 6, -1, 1, 7, 3, z.data()) == GI_OK);
  for (float v : z) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }
  std::vector<float> z2(7 * 6);
  REQUIRE(gi_sample_prior("uniform", 6, -1, 1, 7, 3, z2.data()) == GI_OK);
  CHECK(z == z2);

  CHECK(gi_sample_prior("cauchy", 6, -1, 1, 1, 0, z.data()) == GI_ERR_CONFIG);
  CHECK(std::string(gi_last_error()).size() > 0);
  CHECK(gi_sample_prior("uniform", 6, -1, 1, 1, 0, nullptr) == GI_ERR_CONFIG);
}

TEST_CASE("capi: clipping") {
  float z[4] = {-2.0f, 0.5f, 3.0f, -0.25f};
  REQUIRE(gi_stochastic_clip(z, 4, -1, 1, 11) == GI_OK);
  CHECK(z[1] == 0.5f);
  CHECK(z[3] == -0.25f);
  CHECK(z[0] > -1.0f);
  CHECK(z[0] < 1.0f);
  CHECK(z[2] > -1.0f);
  CHECK(z[2] < 1.0f);

  float h[3] = {-2.0f, 0.0f, 2.0f};
  REQUIRE(gi_hard_clip(h, 3, -1, 1) == GI_OK);
  CHECK(h[0] == -1.0f);
  CHECK(h[1] == 0.0f);
  CHECK(h[2] == 1.0f);
}

TEST_CASE("capi: latent container round trip") {
  std::vector<float> vals{0.1f, -0.2f, 0.3f, -0.4f, 0.5f, -0.6f};
  REQUIRE(gi_latents_save("test_capi.zvec", vals.data(), 3, 2) == GI_OK);
  float* out = nullptr;
  int dim = 0;
  long long count = 0;
  REQUIRE(gi_latents_load("test_capi.zvec", &out, &dim, &count) == GI_OK);
  CHECK(dim == 3);
  CHECK(count == 2);
  for (int i = 0; i < 6; ++i) CHECK(out[i] == vals[i]);
  gi_buffer_free(out);
  std::filesystem::remove("test_capi.zvec");

  CHECK(gi_latents_load("missing.zvec", &out, &dim, &count) ==
        GI_ERR_PERSISTENCE);
}

TEST_CASE("capi: generator build/save/load/generate") {
  gi_generator* g = nullptr;
  REQUIRE(gi_generator_build(kConfig, 5, &g) == GI_OK);
  int d, c, h, w;
  REQUIRE(gi_generator_info(g, &d, &c, &h, &w) == GI_OK);
  CHECK(d == 6);
  CHECK(c == 1);
  CHECK(h == 8);
  CHECK(w == 8);

  std::vector<float> z(2 * 6, 0.3f);
  std::vector<float> imgs(2 * 64);
  REQUIRE(gi_generate(g, z.data(), 2, imgs.data()) == GI_OK);
  for (float v : imgs) CHECK(std::abs(v) <= 1.0f);
  // both rows identical for identical latents
  CHECK(std::memcmp(imgs.data(), imgs.data() + 64, 64 * sizeof(float)) == 0);

  REQUIRE(gi_generator_save(g, "test_capi.gckpt") == GI_OK);
  gi_generator* g2 = nullptr;
  REQUIRE(gi_generator_load("test_capi.gckpt", &g2) == GI_OK);
  std::vector<float> imgs2(2 * 64);
  REQUIRE(gi_generate(g2, z.data(), 2, imgs2.data()) == GI_OK);
  CHECK(imgs == imgs2);

  gi_generator_free(g);
  gi_generator_free(g2);
  std::filesystem::remove("test_capi.gckpt");

  gi_generator* bad = nullptr;
  CHECK(gi_generator_load("missing.gckpt", &bad) == GI_ERR_PERSISTENCE);
  CHECK(gi_generator_build("{\"prior\": {\"kind\": \"bogus\"}}", 1, &bad) ==
        GI_ERR_CONFIG);
}

TEST_CASE("capi: inversion drives loss down and respects the box") {
  gi_generator* g = nullptr;
  REQUIRE(gi_generator_build(kConfig, 6, &g) == GI_OK);

  std::vector<float> zt(6);
  REQUIRE(gi_sample_prior("uniform", 6, -1, 1, 1, 7, zt.data()) == GI_OK);
  std::vector<float> target(64);
  REQUIRE(gi_generate(g, zt.data(), 1, target.data()) == GI_OK);

  gi_invert_config cfg;
  gi_invert_config_init(&cfg);
  CHECK(cfg.iterations == 200);
  CHECK(cfg.learning_rate == 0.01);
  CHECK(cfg.loss_kind == 0);
  CHECK(cfg.clip_mode == 0);
  cfg.iterations = 300;
  cfg.learning_rate = 0.03;
  cfg.clip_mode = 2;
  cfg.seed = 8;

  std::vector<float> z(6);
  std::vector<double> trace(cfg.iterations);
  int iters = 0, term = -1;
  double wall = -1.0;
  REQUIRE(gi_invert(g, target.data(), "uniform", -1, 1, &cfg, z.data(),
                    trace.data(), &iters, &term, &wall) == GI_OK);
  CHECK(iters == 300);
  CHECK(term == 0);
  CHECK(wall >= 0.0);
  CHECK(trace[iters - 1] < 0.5 * trace[0]);
  for (float v : z) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }
  gi_generator_free(g);
}

TEST_CASE("capi: metrics") {
  std::vector<float> a(16, 0.5f), b(16, 0.5f);
  double v = -1.0;
  REQUIRE(gi_pixel_mae(a.data(), b.data(), 16, &v) == GI_OK);
  CHECK(v == 0.0);
  REQUIRE(gi_psnr(a.data(), b.data(), 16, &v) == GI_OK);
  CHECK(v == 99.0);
  b.assign(16, 0.7f);
  REQUIRE(gi_pixel_mae(a.data(), b.data(), 16, &v) == GI_OK);
  CHECK(v == doctest::Approx(0.2).epsilon(1e-6));

  float e1[3] = {1, 0, 0};
  float e2[3] = {0, 1, 0};
  REQUIRE(gi_cosine_distance(e1, e2, 3, &v) == GI_OK);
  CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
  float zz[3] = {0, 0, 0};
  CHECK(gi_cosine_distance(e1, zz, 3, &v) == GI_ERR_NUMERICAL);
}

TEST_CASE("capi: extractor build, perceptual and embedding distance") {
  gi_extractor* ex = nullptr;
  REQUIRE(gi_extractor_build(kConfig, &ex) == GI_OK);
  std::vector<float> a(64), b(64);
  for (int i = 0; i < 64; ++i) {
    a[i] = static_cast<float>(std::sin(0.2 * i));
    b[i] = static_cast<float>(std::cos(0.2 * i));
  }
  double p = -1.0;
  REQUIRE(gi_perceptual_loss(ex, a.data(), a.data(), 1, 8, 8, &p) == GI_OK);
  CHECK(p == doctest::Approx(0.0).epsilon(1e-9));
  REQUIRE(gi_perceptual_loss(ex, a.data(), b.data(), 1, 8, 8, &p) == GI_OK);
  CHECK(p > 0.0);

  double d = -1.0;
  REQUIRE(gi_embedding_distance(ex, a.data(), b.data(), 1, 8, 8, &d) == GI_OK);
  CHECK(d >= 0.0);
  CHECK(d <= 2.0);
  gi_extractor_free(ex);
}

TEST_CASE("capi: null arguments are config errors, not crashes") {
  CHECK(gi_generate(nullptr, nullptr, 1, nullptr) == GI_ERR_CONFIG);
  CHECK(gi_invert(nullptr, nullptr, "uniform", -1, 1, nullptr, nullptr,
                  nullptr, nullptr, nullptr, nullptr) == GI_ERR_CONFIG);
  CHECK(gi_cmd_train_gan(nullptr) == GI_ERR_CONFIG);
  char* out = nullptr;
  CHECK(gi_cmd_evaluate(nullptr, "descent", &out) == GI_ERR_CONFIG);
}

TEST_CASE("capi: command pipeline end to end in a temp dir") {
  namespace fs = std::filesystem;
  fs::path work = fs::temp_directory_path() / "gi_capi_cmd";
  fs::remove_all(work);
  fs::create_directories(work);

  std::string cfg = R"({
    "seed": 5,
    "out_dir": ")" + work.generic_string() + R"(",
    "prior": {"kind": "uniform", "dim": 6},
    "generator": {"image_h": 8, "image_w": 8, "image_c": 1,
                  "base_channels": 12, "stages": 1},
    "extractor": {"base_channels": 4, "stages": 2, "embedding_dim": 8},
    "encoder": {"checkpoint": ")" + (work / "encoder.eckpt").generic_string() +
                R"(", "base_channels": 8, "stages": 2,
                "head1": 32, "head2": 24, "head3": 16},
    "encoder_train": {"epochs": 2, "batch_size": 16, "lr": 0.001},
    "loss_weights": {"pixel": 1.0, "perceptual": 0.0, "z": 1.0},
    "inversion": {"iterations": 30},
    "dataset": {"generated_count": 64, "n_targets": 4},
    "compare": {"methods": ["descent", "encoder"]}
  })";

  REQUIRE(gi_cmd_build_dataset(cfg.c_str()) == GI_OK);
  CHECK(fs::exists(work / "dataset" / "latents.zvec"));

  REQUIRE(gi_cmd_train_encoder(cfg.c_str()) == GI_OK);
  CHECK(fs::exists(work / "encoder.eckpt"));

  REQUIRE(gi_cmd_invert(cfg.c_str(), "descent") == GI_OK);
  CHECK(fs::exists(work / "inversions.jsonl"));

  char* report = nullptr;
  REQUIRE(gi_cmd_evaluate(cfg.c_str(), "encoder", &report) == GI_OK);
  REQUIRE(report != nullptr);
  CHECK(std::string(report).find("\"rows\"") != std::string::npos);
  gi_buffer_free(report);

  char* cmp = nullptr;
  REQUIRE(gi_cmd_compare(cfg.c_str(), &cmp) == GI_OK);
  REQUIRE(cmp != nullptr);
  CHECK(std::string(cmp).find("descent") != std::string::npos);
  gi_buffer_free(cmp);
  CHECK(fs::exists(work / "report.csv"));
  CHECK(fs::exists(work / "grid.ppm"));

  fs::remove_all(work);
}
