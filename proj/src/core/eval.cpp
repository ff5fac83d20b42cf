#include "eval.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gi {

double psnr(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("psnr: shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
  double mse = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    // map [-1,1] -> [0,1]
    double d = (double(a[i]) - b[i]) * 0.5;
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse <= 0.0) return kPsnrCap;
  double v = 10.0 * std::log10(1.0 / mse);
  return std::min(v, kPsnrCap);
}

double cosine_distance(const std::vector<float>& a,
                       const std::vector<float>& b) {
  if (a.size() != b.size())
    throw ShapeError("cosine_distance: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  if (na <= 0.0 || nb <= 0.0)
    throw NumericalError("cosine_distance: zero-norm embedding");
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

double embedding_distance(const FeatureExtractor& extractor, const Tensor& a,
                          const Tensor& b) {
  Tensor a4 = a, b4 = b;
  if (a4.rank() == 3) a4.reshape({1, a.dim(0), a.dim(1), a.dim(2)});
  if (b4.rank() == 3) b4.reshape({1, b.dim(0), b.dim(1), b.dim(2)});
  return cosine_distance(extractor.embedding(a4), extractor.embedding(b4));
}

EvalReport benchmark(const std::vector<BenchMethod>& methods,
                     const Tensor& targets, const FeatureExtractor& extractor,
                     uint64_t seed) {
  if (methods.empty()) throw ConfigError("benchmark: no methods");
  if (targets.rank() != 4 || targets.dim(0) < 1)
    throw ConfigError("benchmark: need at least one target");
  const int n = targets.dim(0);
  const int c = targets.dim(1), h = targets.dim(2), w = targets.dim(3);
  const size_t img_sz = static_cast<size_t>(c) * h * w;

  EvalReport report;
  report.seed = seed;
  for (const auto& method : methods) {
    EvalRow row;
    row.method = method.name;
    row.n_targets = n;
    try {
      // Warm-up on the first target, untimed (first-call overheads).
      Tensor warm({1, c, h, w});
      std::copy_n(targets.data(), img_sz, warm.data());
      method.reconstruct(warm);

      auto t0 = std::chrono::steady_clock::now();
      Tensor recs = method.reconstruct(targets);
      auto t1 = std::chrono::steady_clock::now();
      if (!recs.same_shape(targets))
        throw ShapeError("method " + method.name +
                         " returned wrong reconstruction shape");
      row.time_total_s = std::chrono::duration<double>(t1 - t0).count();
      row.time_per_image_s = row.time_total_s / n;

      double psnr_sum = 0.0, dist_sum = 0.0;
      for (int i = 0; i < n; ++i) {
        Tensor t({1, c, h, w}), r({1, c, h, w});
        std::copy_n(targets.data() + i * img_sz, img_sz, t.data());
        std::copy_n(recs.data() + i * img_sz, img_sz, r.data());
        psnr_sum += psnr(r, t);
        dist_sum += embedding_distance(extractor, r, t);
      }
      row.psnr_db = psnr_sum / n;
      row.embed_dist = dist_sum / n;
    } catch (const Error&) {
      row.failed = true;
      row.psnr_db = row.embed_dist = 0.0;
      row.time_total_s = row.time_per_image_s = 0.0;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

static std::string render_csv(const EvalReport& r) {
  std::string out =
      "method,psnr_db,embed_dist,time_total_s,time_per_image_s,n_targets\n";
  for (const auto& row : r.rows) {
    out += row.method + "," + format_number(row.psnr_db) + "," +
           format_number(row.embed_dist) + "," +
           format_number(row.time_total_s) + "," +
           format_number(row.time_per_image_s) + "," +
           std::to_string(row.n_targets) + "\n";
  }
  return out;
}

static std::string render_markdown(const EvalReport& r) {
  std::string out =
      "| method | psnr_db | embed_dist | time_total_s | time_per_image_s | "
      "n_targets |\n|---|---|---|---|---|---|\n";
  for (const auto& row : r.rows) {
    out += "| " + row.method + (row.failed ? " (failed)" : "") + " | " +
           format_number(row.psnr_db) + " | " + format_number(row.embed_dist) +
           " | " + format_number(row.time_total_s) + " | " +
           format_number(row.time_per_image_s) + " | " +
           std::to_string(row.n_targets) + " |\n";
  }
  return out;
}

static std::string render_json(const EvalReport& r) {
  nlohmann::json j;
  j["generator_id"] = r.generator_id;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    j["rows"].push_back({{"method", row.method},
                         {"psnr_db", row.psnr_db},
                         {"embed_dist", row.embed_dist},
                         {"time_total_s", row.time_total_s},
                         {"time_per_image_s", row.time_per_image_s},
                         {"n_targets", row.n_targets},
                         {"failed", row.failed}});
  }
  return j.dump(2) + "\n";
}

std::string render_report(const EvalReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kCsv: return render_csv(report);
    case ReportFormat::kMarkdown: return render_markdown(report);
    default: return render_json(report);
  }
}

EvalReport parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line !=
          "method,psnr_db,embed_dist,time_total_s,time_per_image_s,n_targets")
    throw PersistenceError("report csv: bad header");
  EvalReport r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 6)
      throw PersistenceError("report csv: expected 6 fields, got " +
                             std::to_string(fields.size()));
    EvalRow er;
    er.method = fields[0];
    try {
      er.psnr_db = std::stod(fields[1]);
      er.embed_dist = std::stod(fields[2]);
      er.time_total_s = std::stod(fields[3]);
      er.time_per_image_s = std::stod(fields[4]);
      er.n_targets = std::stoi(fields[5]);
    } catch (const std::exception&) {
      throw PersistenceError("report csv: bad numeric field in: " + line);
    }
    r.rows.push_back(std::move(er));
  }
  return r;
}

EvalReport parse_report_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  EvalReport r;
  r.generator_id = j.value("generator_id", "");
  r.config_hash = j.value("config_hash", "");
  r.seed = j.value("seed", 0ULL);
  for (const auto& row : j.at("rows")) {
    EvalRow er;
    er.method = row.at("method").get<std::string>();
    er.psnr_db = row.at("psnr_db").get<double>();
    er.embed_dist = row.at("embed_dist").get<double>();
    er.time_total_s = row.at("time_total_s").get<double>();
    er.time_per_image_s = row.at("time_per_image_s").get<double>();
    er.n_targets = row.at("n_targets").get<int>();
    er.failed = row.value("failed", false);
    r.rows.push_back(std::move(er));
  }
  return r;
}

}  // namespace gi
