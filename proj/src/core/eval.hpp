#pragma once

#include <functional>
#include <string>
#include <vector>

#include "losses.hpp"
#include "tensor.hpp"

namespace gi {

// Peak signal-to-noise ratio over [0,1]-mapped pixels (inputs are [-1,1]
// images). Identical images return the documented 99.0 dB cap.
constexpr double kPsnrCap = 99.0;
double psnr(const Tensor& a, const Tensor& b);

// 1 - cosine similarity; range [0, 2].
double cosine_distance(const std::vector<float>& a,
                       const std::vector<float>& b);
double embedding_distance(const FeatureExtractor& extractor, const Tensor& a,
                          const Tensor& b);

struct EvalRow {
  std::string method;
  double psnr_db = 0.0;
  double embed_dist = 0.0;
  double time_total_s = 0.0;
  double time_per_image_s = 0.0;
  int n_targets = 0;
  bool failed = false;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::string generator_id;
  std::string config_hash;
  uint64_t seed = 0;
};

// An inversion method under benchmark: maps the target batch to a
// reconstruction batch of the same shape.
struct BenchMethod {
  std::string name;
  std::function<Tensor(const Tensor& targets)> reconstruct;
};

// Runs each method over all targets sequentially, timing the inversion
// compute only (one untimed warm-up target per method; model loading
// excluded by construction). A failing method yields a flagged row.
EvalReport benchmark(const std::vector<BenchMethod>& methods,
                     const Tensor& targets, const FeatureExtractor& extractor,
                     uint64_t seed);

enum class ReportFormat { kCsv, kJson, kMarkdown };

std::string render_report(const EvalReport& report, ReportFormat format);
EvalReport parse_report_json(const std::string& text);
// Parses the canonical CSV; re-rendering a parsed report reproduces the
// input bytes (metadata fields are not carried by CSV and stay empty).
EvalReport parse_report_csv(const std::string& text);
// Canonical number formatting used in all report outputs: 6 significant
// digits, '.' decimal separator, '\n' line endings.
std::string format_number(double v);

}  // namespace gi
