#include "optim.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace gi {

std::string to_string(LossKind k) { return k == LossKind::kMae ? "mae" : "l2"; }

std::string to_string(ClipMode m) {
  switch (m) {
    case ClipMode::kNone: return "none";
    case ClipMode::kHard: return "hard";
    default: return "stochastic";
  }
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kMaxIters: return "max_iters";
    case Termination::kThreshold: return "threshold";
    default: return "numerical_error";
  }
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "mae") return LossKind::kMae;
  if (s == "l2") return LossKind::kL2;
  throw ConfigError("unknown loss kind: " + s);
}

ClipMode clip_mode_from_string(const std::string& s) {
  if (s == "none") return ClipMode::kNone;
  if (s == "hard") return ClipMode::kHard;
  if (s == "stochastic") return ClipMode::kStochastic;
  throw ConfigError("unknown clip mode: " + s);
}

std::vector<double> adaptive_step(OptimizerState& state,
                                  const std::vector<double>& gradient,
                                  double learning_rate,
                                  const AdamParams& p) {
  if (gradient.size() != state.first_moment.size())
    throw ShapeError("adaptive_step: gradient dimension mismatch");
  for (double g : gradient)
    if (!std::isfinite(g)) throw NumericalError("non-finite gradient");
  ++state.step_count;
  double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(state.step_count));
  double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(state.step_count));
  std::vector<double> update(gradient.size());
  for (size_t i = 0; i < gradient.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = p.beta1 * m + (1.0 - p.beta1) * gradient[i];
    v = p.beta2 * v + (1.0 - p.beta2) * gradient[i] * gradient[i];
    update[i] = learning_rate * (m / bc1) / (std::sqrt(v / bc2) + p.epsilon);
  }
  return update;
}

void InversionConfig::validate() const {
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
}

static std::unique_ptr<ImageLoss> make_loss(LossKind kind,
                                            const Tensor& target) {
  if (kind == LossKind::kMae)
    return std::make_unique<MaeAgainstTarget>(target);
  return std::make_unique<L2AgainstTarget>(target);
}

InversionResult invert(const GeneratorModel& model, const Tensor& target,
                       const LatentPrior& prior, const InversionConfig& config,
                       InversionState* carry) {
  config.validate();
  if (target.rank() != 4 || target.dim(0) != 1 ||
      target.dim(1) != model.arch().image_c ||
      target.dim(2) != model.arch().image_h ||
      target.dim(3) != model.arch().image_w)
    throw ShapeError("invert: target shape " + target.shape_str() +
                     " does not match generator output");
  if (prior.dim != model.latent_dim())
    throw ConfigError("invert: prior dim does not match generator latent_dim");

  const int d = model.latent_dim();
  InversionState local;
  InversionState& st = carry ? *carry : local;
  if (st.z.empty()) {
    st.opt = OptimizerState(d);
    st.rng = Rng(Rng::derive_seed(config.seed, 0x1337));
    if (config.init_z) {
      if (static_cast<int>(config.init_z->size()) != d)
        throw ConfigError("invert: init_z dimension mismatch");
      st.z.assign(config.init_z->begin(), config.init_z->end());
    } else {
      LatentBatch z0 = sample_prior(prior, 1, config.seed);
      st.z.assign(z0.values.begin(), z0.values.end());
    }
  }

  auto loss = make_loss(config.loss_kind, target);
  InversionResult res;
  auto t0 = std::chrono::steady_clock::now();
  std::vector<float> zf(d);
  for (int it = 0; it < config.iterations; ++it) {
    for (int i = 0; i < d; ++i) zf[i] = static_cast<float>(st.z[i]);
    double loss_value;
    std::vector<float> grad_f;
    try {
      Tensor img = model.generate_one(zf);
      loss_value = loss->value(img);
      if (!std::isfinite(loss_value)) throw NumericalError("non-finite loss");
      res.loss_trace.push_back(loss_value);
      ++res.iterations_run;
      Tensor dimg = loss->grad(img);
      Tensor dz = model.backward_to_latent(dimg);
      grad_f.assign(dz.data(), dz.data() + dz.size());
      for (float g : grad_f)
        if (!std::isfinite(g))
          throw NumericalError("non-finite gradient at iteration " +
                               std::to_string(it));
    } catch (const NumericalError&) {
      res.termination = Termination::kNumericalError;
      break;
    }
    std::vector<double> grad(grad_f.begin(), grad_f.end());
    std::vector<double> update =
        adaptive_step(st.opt, grad, config.learning_rate, config.adam);
    for (int i = 0; i < d; ++i) st.z[i] -= update[i];
    if (config.clip_mode == ClipMode::kHard)
      hard_clip_inplace(st.z.data(), d, prior.lo, prior.hi);
    else if (config.clip_mode == ClipMode::kStochastic)
      stochastic_clip_inplace(st.z.data(), d, prior.lo, prior.hi, st.rng);
    if (config.stop_threshold && loss_value < *config.stop_threshold) {
      res.termination = Termination::kThreshold;
      break;
    }
  }
  auto t1 = std::chrono::steady_clock::now();
  res.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
  res.z_final.resize(d);
  for (int i = 0; i < d; ++i) res.z_final[i] = static_cast<float>(st.z[i]);
  return res;
}

std::vector<InversionResult> invert_batch(const GeneratorModel& model,
                                          const std::vector<Tensor>& targets,
                                          const LatentPrior& prior,
                                          const InversionConfig& config) {
  std::vector<InversionResult> results;
  results.reserve(targets.size());
  for (size_t i = 0; i < targets.size(); ++i) {
    InversionConfig c = config;
    c.seed = config.seed + i;
    try {
      results.push_back(invert(model, targets[i], prior, c));
    } catch (const Error&) {
      InversionResult failed;
      failed.termination = Termination::kNumericalError;
      results.push_back(std::move(failed));
    }
  }
  return results;
}

std::string inversion_result_jsonl(const InversionResult& r,
                                   const std::string& target_id) {
  nlohmann::json j;
  j["target_id"] = target_id;
  j["z_final"] = r.z_final;
  j["loss_trace"] = r.loss_trace;
  j["wall_time_s"] = r.wall_time_s;
  j["iterations_run"] = r.iterations_run;
  j["termination"] = to_string(r.termination);
  return j.dump();
}

void save_inversion_results(const std::vector<InversionResult>& rs,
                            const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  for (size_t i = 0; i < rs.size(); ++i)
    f << inversion_result_jsonl(rs[i], "target_" + std::to_string(i)) << "\n";
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace gi
