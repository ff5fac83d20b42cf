#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <thread>

#include "core/eval.hpp"
#include "core/imageio.hpp"
#include "core/rng.hpp"

using namespace gi;

TEST_CASE("psnr: identical images hit the cap") {
  Tensor a({1, 3, 4, 4});
  for (size_t i = 0; i < a.size(); ++i)
    a[i] = static_cast<float>(std::sin(0.3 * double(i)));
  CHECK(psnr(a, a) == kPsnrCap);
}

TEST_CASE("psnr: uniform offset has a closed form") {
  // images differ by constant d in [-1,1] units -> [0,1] MSE = (d/2)^2,
  // PSNR = -10 log10((d/2)^2) = 20 log10(2/d)
  Tensor a({1, 1, 8, 8});
  Tensor b({1, 1, 8, 8});
  const float d = 0.2f;
  for (size_t i = 0; i < a.size(); ++i) {
    a[i] = 0.1f;
    b[i] = 0.1f + d;
  }
  CHECK(psnr(a, b) == doctest::Approx(20.0 * std::log10(2.0 / d)).epsilon(1e-5));
  CHECK(psnr(a, b) == doctest::Approx(psnr(b, a)).epsilon(1e-12));
}

TEST_CASE("psnr: maximal disagreement gives 0 dB") {
  Tensor a({1, 1, 2, 2});
  Tensor b({1, 1, 2, 2});
  a.fill(-1.0f);
  b.fill(1.0f);
  CHECK(psnr(a, b) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("psnr: shape mismatch raises") {
  Tensor a({1, 1, 4, 4});
  Tensor b({1, 1, 2, 2});
  CHECK_THROWS_AS(psnr(a, b), ShapeError);
}

TEST_CASE("cosine_distance oracle values") {
  CHECK(cosine_distance({1, 0}, {1, 0}) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(cosine_distance({1, 0}, {0, 1}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cosine_distance({1, 0}, {-1, 0}) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(cosine_distance({3, 4}, {6, 8}) == doctest::Approx(0.0).epsilon(1e-7));
  // 45 degrees
  CHECK(cosine_distance({1, 0}, {1, 1}) ==
        doctest::Approx(1.0 - std::sqrt(0.5)).epsilon(1e-7));
  CHECK_THROWS_AS(cosine_distance({0, 0}, {1, 0}), NumericalError);
  CHECK_THROWS_AS(cosine_distance({1, 0}, {1, 0, 0}), ShapeError);
}

TEST_CASE("embedding_distance: zero for identical, symmetric, in range") {
  auto ex = FeatureExtractor::build({8, 8, 3, 4, 2, 8}, 90);
  Tensor a({1, 3, 8, 8});
  Tensor b({1, 3, 8, 8});
  Rng rng(91);
  for (size_t i = 0; i < a.size(); ++i) {
    a[i] = static_cast<float>(rng.uniform() * 2 - 1);
    b[i] = static_cast<float>(rng.uniform() * 2 - 1);
  }
  CHECK(embedding_distance(ex, a, a) == doctest::Approx(0.0).epsilon(1e-6));
  double d = embedding_distance(ex, a, b);
  CHECK(d >= 0.0);
  CHECK(d <= 2.0);
  CHECK(embedding_distance(ex, b, a) == doctest::Approx(d).epsilon(1e-9));
}

TEST_CASE("benchmark: identity method, metrics and timing sanity") {
  auto ex = FeatureExtractor::build({8, 8, 1, 4, 2, 8}, 92);
  Tensor targets({4, 1, 8, 8});
  Rng rng(93);
  for (size_t i = 0; i < targets.size(); ++i)
    targets[i] = static_cast<float>(rng.uniform() * 2 - 1);

  BenchMethod identity{"identity", [](const Tensor& t) { return t; }};
  BenchMethod blur{"damped", [](const Tensor& t) {
                     Tensor out = t;
                     for (size_t i = 0; i < out.size(); ++i) out[i] *= 0.5f;
                     return out;
                   }};
  auto report = benchmark({identity, blur}, targets, ex, 7);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.seed == 7);

  const auto& id_row = report.rows[0];
  CHECK(id_row.method == "identity");
  CHECK_FALSE(id_row.failed);
  CHECK(id_row.n_targets == 4);
  CHECK(id_row.psnr_db == kPsnrCap);
  CHECK(id_row.embed_dist == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(id_row.time_total_s >= 0.0);
  CHECK(id_row.time_per_image_s ==
        doctest::Approx(id_row.time_total_s / 4).epsilon(1e-9));

  const auto& dm = report.rows[1];
  CHECK(dm.psnr_db < kPsnrCap);
  CHECK(dm.psnr_db > 0.0);
}

TEST_CASE("benchmark: failing method is isolated into a flagged row") {
  auto ex = FeatureExtractor::build({8, 8, 1, 4, 2, 8}, 94);
  Tensor targets({2, 1, 8, 8});
  targets.fill(0.25f);
  BenchMethod ok{"ok", [](const Tensor& t) { return t; }};
  BenchMethod bad{"bad", [](const Tensor&) -> Tensor {
                    throw NumericalError("synthetic failure");
                  }};
  auto report = benchmark({bad, ok}, targets, ex, 1);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].failed);
  CHECK_FALSE(report.rows[1].failed);
  CHECK(report.rows[1].psnr_db == kPsnrCap);
}

TEST_CASE("benchmark: timing excludes the warm-up pass") {
  auto ex = FeatureExtractor::build({8, 8, 1, 4, 2, 8}, 95);
  Tensor targets({2, 1, 8, 8});
  targets.fill(-0.5f);
  // First invocation sleeps; benchmark's untimed warm-up should absorb it.
  auto calls = std::make_shared<int>(0);
  BenchMethod m{"lazy", [calls](const Tensor& t) {
                  if ((*calls)++ == 0)
                    std::this_thread::sleep_for(std::chrono::milliseconds(400));
                  return t;
                }};
  auto report = benchmark({m}, targets, ex, 2);
  REQUIRE(report.rows.size() == 1);
  CHECK(*calls >= 2);  // warm-up plus the timed batch
  CHECK(report.rows[0].time_total_s < 0.35);
}

TEST_CASE("report rendering: csv columns and value formatting") {
  EvalReport rep;
  rep.generator_id = "gen-abc";
  rep.config_hash = "deadbeef";
  rep.seed = 42;
  rep.rows = {{"descent", 18.4125, 0.123456789, 1143.9, 11.439, 100, false},
              {"encoder", 11.06, 0.5, 3.27, 0.0327, 100, false}};

  auto csv = render_report(rep, ReportFormat::kCsv);
  CHECK(csv.rfind("method,psnr_db,embed_dist,time_total_s,time_per_image_s,"
                  "n_targets",
                  0) == 0);
  CHECK(csv.find("descent,18.4125,0.123457,1143.9,11.439,100") !=
        std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find('\r') == std::string::npos);

  auto md = render_report(rep, ReportFormat::kMarkdown);
  CHECK(md.find("| descent |") != std::string::npos);
  CHECK(md.find("---") != std::string::npos);

  // csv -> parse -> render is byte identical
  auto reparsed = parse_report_csv(csv);
  CHECK(render_report(reparsed, ReportFormat::kCsv) == csv);
  CHECK_THROWS_AS(parse_report_csv("nope\n"), PersistenceError);

  auto json = render_report(rep, ReportFormat::kJson);
  auto parsed = parse_report_json(json);
  REQUIRE(parsed.rows.size() == 2);
  CHECK(parsed.generator_id == "gen-abc");
  CHECK(parsed.config_hash == "deadbeef");
  CHECK(parsed.seed == 42);
  CHECK(parsed.rows[0].method == "descent");
  CHECK(parsed.rows[0].psnr_db == doctest::Approx(18.4125).epsilon(1e-9));
  CHECK(parsed.rows[1].n_targets == 100);
}

TEST_CASE("format_number: six significant digits") {
  CHECK(format_number(18.4125) == "18.4125");
  CHECK(format_number(0.123456789) == "0.123457");
  CHECK(format_number(3.0) == "3");
  CHECK(format_number(1143.9) == "1143.9");
}

TEST_CASE("image round trip through PPM is 8-bit lossless") {
  Tensor img({3, 5, 7});
  Rng rng(96);
  for (size_t i = 0; i < img.size(); ++i)
    img[i] = static_cast<float>(rng.uniform() * 2 - 1);
  save_image(img, "test_img.ppm");
  Tensor back = load_image("test_img.ppm");
  REQUIRE(back.shape() == img.shape());
  // quantization error bounded by half a step of the 8-bit grid (in [-1,1])
  for (size_t i = 0; i < img.size(); ++i)
    CHECK(std::abs(back[i] - img[i]) <= 1.01f / 255.0f);
  // a second trip is exact: the grid is a fixed point
  save_image(back, "test_img2.ppm");
  Tensor again = load_image("test_img2.ppm");
  for (size_t i = 0; i < back.size(); ++i) CHECK(again[i] == back[i]);
  std::filesystem::remove("test_img.ppm");
  std::filesystem::remove("test_img2.ppm");
}

TEST_CASE("grayscale images go through PGM") {
  Tensor img({1, 4, 6});
  for (size_t i = 0; i < img.size(); ++i)
    img[i] = static_cast<float>(i) / 23.0f * 2.0f - 1.0f;
  save_image(img, "test_img.pgm");
  Tensor back = load_image("test_img.pgm");
  REQUIRE(back.shape() == img.shape());
  for (size_t i = 0; i < img.size(); ++i)
    CHECK(std::abs(back[i] - img[i]) <= 1.01f / 255.0f);
  std::filesystem::remove("test_img.pgm");
}

TEST_CASE("adapt_image resizes and converts channels") {
  Tensor img({3, 4, 4});
  img.fill(0.5f);
  Tensor gray = adapt_image(img, 1, 8, 8);
  CHECK(gray.shape() == std::vector<int>{1, 8, 8});
  for (size_t i = 0; i < gray.size(); ++i)
    CHECK(gray[i] == doctest::Approx(0.5f).epsilon(1e-6));
  Tensor rgb = adapt_image(gray, 3, 4, 4);
  CHECK(rgb.shape() == std::vector<int>{3, 4, 4});
}

TEST_CASE("ingest_image_dir: sorted load, bad files skipped, empty errors") {
  namespace fs = std::filesystem;
  fs::create_directories("test_ingest");
  Tensor a({1, 4, 4});
  a.fill(-1.0f);
  Tensor b({1, 4, 4});
  b.fill(1.0f);
  save_image(b, "test_ingest/b_second.pgm");
  save_image(a, "test_ingest/a_first.pgm");
  {
    std::ofstream junk("test_ingest/junk.pgm");
    junk << "not a raster";
  }
  IngestSummary sum;
  Tensor batch = ingest_image_dir("test_ingest", 1, 4, 4, &sum);
  CHECK(batch.shape() == std::vector<int>{2, 1, 4, 4});
  CHECK(sum.loaded == 2);
  CHECK(sum.skipped == 1);
  CHECK(sum.warnings.size() == 1);
  CHECK(batch[0] == doctest::Approx(-1.0f));           // a_first sorted first
  CHECK(batch[16] == doctest::Approx(1.0f));           // b_second
  fs::remove_all("test_ingest");

  fs::create_directories("test_ingest_empty");
  CHECK_THROWS_AS(ingest_image_dir("test_ingest_empty", 1, 4, 4), IoError);
  fs::remove_all("test_ingest_empty");
}

TEST_CASE("emit_image_grid geometry") {
  Tensor t({3, 4, 4});
  t.fill(0.0f);
  std::vector<std::vector<Tensor>> cols{{t, t}, {t, t}};  // 2 methods, 2 rows
  emit_image_grid({"m1", "m2"}, cols, "test_grid.ppm");
  Tensor grid = load_image("test_grid.ppm");
  // 2 columns of width 4 + 2px separator; 2 rows of height 4 + 2px separator
  CHECK(grid.shape() == std::vector<int>{3, 10, 10});
  std::filesystem::remove("test_grid.ppm");
}
