#pragma once

#include <optional>
#include <string>
#include <vector>

#include "generator.hpp"
#include "latent.hpp"
#include "losses.hpp"

namespace gi {

enum class LossKind { kMae, kL2 };
enum class ClipMode { kNone, kHard, kStochastic };
enum class Termination { kMaxIters, kThreshold, kNumericalError };

std::string to_string(LossKind k);
std::string to_string(ClipMode m);
std::string to_string(Termination t);
LossKind loss_kind_from_string(const std::string& s);
ClipMode clip_mode_from_string(const std::string& s);

// Bias-corrected adaptive-moment state for a single latent vector.
struct OptimizerState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  int64_t step_count = 0;

  explicit OptimizerState(size_t dim = 0)
      : first_moment(dim, 0.0), second_moment(dim, 0.0) {}
};

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected moment update; returns the vector subtracted from z.
std::vector<double> adaptive_step(OptimizerState& state,
                                  const std::vector<double>& gradient,
                                  double learning_rate,
                                  const AdamParams& params = {});

struct InversionConfig {
  int iterations = 200;
  double learning_rate = 0.01;
  LossKind loss_kind = LossKind::kMae;
  ClipMode clip_mode = ClipMode::kNone;
  AdamParams adam;
  std::optional<double> stop_threshold;
  uint64_t seed = 0;
  // Optional warm start (e.g. an encoder prediction) instead of a prior draw.
  std::optional<std::vector<float>> init_z;

  void validate() const;
};

struct InversionResult {
  std::vector<float> z_final;
  std::vector<double> loss_trace;  // one entry per executed iteration
  double wall_time_s = 0.0;
  int iterations_run = 0;
  Termination termination = Termination::kMaxIters;
};

// Carried state for resumable runs: continuing for m more iterations
// reproduces a single (n+m)-iteration run exactly.
struct InversionState {
  std::vector<double> z;
  OptimizerState opt;
  Rng rng{0};
};

InversionResult invert(const GeneratorModel& model, const Tensor& target,
                       const LatentPrior& prior, const InversionConfig& config,
                       InversionState* carry = nullptr);

// Independent per-target runs with derived seeds (seed + index);
// per-target failures are isolated into numerical_error results.
std::vector<InversionResult> invert_batch(const GeneratorModel& model,
                                          const std::vector<Tensor>& targets,
                                          const LatentPrior& prior,
                                          const InversionConfig& config);

// One JSON object per line: target_id, z_final, loss_trace, wall_time_s,
// iterations_run, termination.
std::string inversion_result_jsonl(const InversionResult& r,
                                   const std::string& target_id);
void save_inversion_results(const std::vector<InversionResult>& rs,
                            const std::string& path);

}  // namespace gi
