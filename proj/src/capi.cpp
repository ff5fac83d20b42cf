#include "ganinvert.h"

#include <cstring>
#include <string>

#include "core/commands.hpp"
#include "core/config.hpp"
#include "core/encoder.hpp"
#include "core/eval.hpp"
#include "core/generator.hpp"
#include "core/latent.hpp"
#include "core/optim.hpp"

namespace {

thread_local std::string g_last_error;

gi_status set_error(gi_status code, const char* what) {
  g_last_error = what;
  return code;
}

// Maps the C++ error taxonomy onto C status codes.
template <typename Fn>
gi_status guarded(Fn&& fn) {
  try {
    fn();
    return GI_OK;
  } catch (const gi::ConfigError& e) {
    return set_error(GI_ERR_CONFIG, e.what());
  } catch (const gi::ShapeError& e) {
    return set_error(GI_ERR_SHAPE, e.what());
  } catch (const gi::NumericalError& e) {
    return set_error(GI_ERR_NUMERICAL, e.what());
  } catch (const gi::PersistenceError& e) {
    return set_error(GI_ERR_PERSISTENCE, e.what());
  } catch (const gi::TrainingError& e) {
    return set_error(GI_ERR_TRAINING, e.what());
  } catch (const gi::IoError& e) {
    return set_error(GI_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return set_error(GI_ERR_UNKNOWN, e.what());
  }
}

void need(const void* p, const char* what) {
  if (!p) throw gi::ConfigError(std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

}  // namespace

struct gi_generator {
  gi::GeneratorModel model;
};
struct gi_encoder {
  gi::EncoderModel model;
};
struct gi_extractor {
  gi::FeatureExtractor model;
};

extern "C" {

const char* gi_last_error(void) { return g_last_error.c_str(); }

gi_status gi_sample_prior(const char* kind, int dim, double lo, double hi,
                          long long n, unsigned long long seed, float* out) {
  return guarded([&] {
    need(kind, "kind");
    need(out, "out");
    gi::LatentPrior prior{gi::prior_kind_from_string(kind), dim, lo, hi};
    gi::LatentBatch b = gi::sample_prior(prior, n, seed);
    std::memcpy(out, b.values.data(), b.values.size() * sizeof(float));
  });
}

gi_status gi_stochastic_clip(float* z, int dim, double lo, double hi,
                             unsigned long long seed) {
  return guarded([&] {
    need(z, "z");
    if (!(lo < hi)) throw gi::ConfigError("clip bounds require lo < hi");
    gi::Rng rng(seed);
    gi::stochastic_clip_inplace(z, dim, lo, hi, rng);
  });
}

gi_status gi_hard_clip(float* z, int dim, double lo, double hi) {
  return guarded([&] {
    need(z, "z");
    if (!(lo < hi)) throw gi::ConfigError("clip bounds require lo < hi");
    gi::hard_clip_inplace(z, dim, lo, hi);
  });
}

gi_status gi_latents_save(const char* path, const float* values, int dim,
                          long long count) {
  return guarded([&] {
    need(path, "path");
    need(values, "values");
    gi::LatentBatch b;
    b.dim = dim;
    b.count = count;
    b.values.assign(values, values + static_cast<size_t>(dim) * count);
    gi::save_latent_batch(b, path);
  });
}

gi_status gi_latents_load(const char* path, float** out, int* dim,
                          long long* count) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    need(dim, "dim");
    need(count, "count");
    gi::LatentBatch b = gi::load_latent_batch(path);
    *dim = b.dim;
    *count = b.count;
    *out = static_cast<float*>(
        std::malloc(b.values.size() * sizeof(float)));
    std::memcpy(*out, b.values.data(), b.values.size() * sizeof(float));
  });
}

void gi_buffer_free(void* p) { std::free(p); }

gi_status gi_generator_load(const char* path, gi_generator** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new gi_generator{gi::GeneratorModel::load(path)};
  });
}

gi_status gi_generator_build(const char* config_json, unsigned long long seed,
                             gi_generator** out) {
  return guarded([&] {
    need(config_json, "config_json");
    need(out, "out");
    gi::RunConfig cfg = gi::RunConfig::from_json_text(config_json);
    *out = new gi_generator{
        gi::GeneratorModel::build(cfg.generator_arch, seed)};
  });
}

gi_status gi_generator_save(const gi_generator* g, const char* path) {
  return guarded([&] {
    need(g, "generator");
    need(path, "path");
    g->model.save(path);
  });
}

void gi_generator_free(gi_generator* g) { delete g; }

gi_status gi_generator_info(const gi_generator* g, int* latent_dim, int* c,
                            int* h, int* w) {
  return guarded([&] {
    need(g, "generator");
    const auto& a = g->model.arch();
    if (latent_dim) *latent_dim = a.latent_dim;
    if (c) *c = a.image_c;
    if (h) *h = a.image_h;
    if (w) *w = a.image_w;
  });
}

gi_status gi_generate(const gi_generator* g, const float* z, int n,
                      float* out_images) {
  return guarded([&] {
    need(g, "generator");
    need(z, "z");
    need(out_images, "out_images");
    gi::Tensor zb({n, g->model.latent_dim()},
                  std::vector<float>(
                      z, z + static_cast<size_t>(n) * g->model.latent_dim()));
    gi::Tensor imgs = g->model.generate(zb);
    std::memcpy(out_images, imgs.data(), imgs.size() * sizeof(float));
  });
}

gi_status gi_encoder_load(const char* path, gi_encoder** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new gi_encoder{gi::EncoderModel::load(path)};
  });
}

void gi_encoder_free(gi_encoder* e) { delete e; }

gi_status gi_encoder_info(const gi_encoder* e, int* latent_dim, int* c,
                          int* h, int* w) {
  return guarded([&] {
    need(e, "encoder");
    const auto& a = e->model.arch();
    if (latent_dim) *latent_dim = a.latent_dim;
    if (c) *c = a.image_c;
    if (h) *h = a.image_h;
    if (w) *w = a.image_w;
  });
}

gi_status gi_encode(const gi_encoder* e, const float* images, int n,
                    float* out_z) {
  return guarded([&] {
    need(e, "encoder");
    need(images, "images");
    need(out_z, "out_z");
    const auto& a = e->model.arch();
    size_t sz = static_cast<size_t>(a.image_c) * a.image_h * a.image_w;
    gi::Tensor imgs({n, a.image_c, a.image_h, a.image_w},
                    std::vector<float>(images, images + n * sz));
    gi::Tensor zs = e->model.encode_batch(imgs);
    std::memcpy(out_z, zs.data(), zs.size() * sizeof(float));
  });
}

gi_status gi_extractor_load(const char* path, gi_extractor** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new gi_extractor{gi::FeatureExtractor::load(path)};
  });
}

gi_status gi_extractor_build(const char* config_json, gi_extractor** out) {
  return guarded([&] {
    need(config_json, "config_json");
    need(out, "out");
    gi::RunConfig cfg = gi::RunConfig::from_json_text(config_json);
    *out = new gi_extractor{
        gi::FeatureExtractor::build(cfg.extractor_arch, cfg.extractor_seed)};
  });
}

void gi_extractor_free(gi_extractor* e) { delete e; }

gi_status gi_perceptual_loss(const gi_extractor* e, const float* a,
                             const float* b, int c, int h, int w,
                             double* out) {
  return guarded([&] {
    need(e, "extractor");
    need(a, "a");
    need(b, "b");
    need(out, "out");
    size_t sz = static_cast<size_t>(c) * h * w;
    gi::Tensor ta({1, c, h, w}, std::vector<float>(a, a + sz));
    gi::Tensor tb({1, c, h, w}, std::vector<float>(b, b + sz));
    *out = gi::perceptual_loss(e->model, ta, tb);
  });
}

void gi_invert_config_init(gi_invert_config* cfg) {
  cfg->iterations = 200;
  cfg->learning_rate = 0.01;
  cfg->loss_kind = 0;
  cfg->clip_mode = 0;
  cfg->beta1 = 0.9;
  cfg->beta2 = 0.999;
  cfg->epsilon = 1e-8;
  cfg->has_stop_threshold = 0;
  cfg->stop_threshold = 0.0;
  cfg->seed = 0;
}

gi_status gi_invert(const gi_generator* g, const float* target,
                    const char* prior_kind, double lo, double hi,
                    const gi_invert_config* cfg, float* z_out,
                    double* loss_trace, int* iterations_run, int* termination,
                    double* wall_time_s) {
  return guarded([&] {
    need(g, "generator");
    need(target, "target");
    need(prior_kind, "prior_kind");
    need(cfg, "cfg");
    need(z_out, "z_out");
    const auto& a = g->model.arch();
    size_t sz = static_cast<size_t>(a.image_c) * a.image_h * a.image_w;
    gi::Tensor t({1, a.image_c, a.image_h, a.image_w},
                 std::vector<float>(target, target + sz));
    gi::LatentPrior prior{gi::prior_kind_from_string(prior_kind),
                          a.latent_dim, lo, hi};
    gi::InversionConfig ic;
    ic.iterations = cfg->iterations;
    ic.learning_rate = cfg->learning_rate;
    ic.loss_kind = cfg->loss_kind == 0 ? gi::LossKind::kMae : gi::LossKind::kL2;
    ic.clip_mode = cfg->clip_mode == 0
                       ? gi::ClipMode::kNone
                       : (cfg->clip_mode == 1 ? gi::ClipMode::kHard
                                              : gi::ClipMode::kStochastic);
    ic.adam = {cfg->beta1, cfg->beta2, cfg->epsilon};
    if (cfg->has_stop_threshold) ic.stop_threshold = cfg->stop_threshold;
    ic.seed = cfg->seed;
    gi::InversionResult r = gi::invert(g->model, t, prior, ic);
    std::memcpy(z_out, r.z_final.data(), r.z_final.size() * sizeof(float));
    if (loss_trace)
      std::memcpy(loss_trace, r.loss_trace.data(),
                  r.loss_trace.size() * sizeof(double));
    if (iterations_run) *iterations_run = r.iterations_run;
    if (termination) *termination = static_cast<int>(r.termination);
    if (wall_time_s) *wall_time_s = r.wall_time_s;
  });
}

gi_status gi_pixel_mae(const float* a, const float* b, long long n,
                       double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    gi::Tensor ta({static_cast<int>(n)}, std::vector<float>(a, a + n));
    gi::Tensor tb({static_cast<int>(n)}, std::vector<float>(b, b + n));
    *out = gi::pixel_mae(ta, tb);
  });
}

gi_status gi_psnr(const float* a, const float* b, long long n, double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    gi::Tensor ta({static_cast<int>(n)}, std::vector<float>(a, a + n));
    gi::Tensor tb({static_cast<int>(n)}, std::vector<float>(b, b + n));
    *out = gi::psnr(ta, tb);
  });
}

gi_status gi_cosine_distance(const float* a, const float* b, int dim,
                             double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    *out = gi::cosine_distance(std::vector<float>(a, a + dim),
                               std::vector<float>(b, b + dim));
  });
}

gi_status gi_embedding_distance(const gi_extractor* e, const float* a,
                                const float* b, int c, int h, int w,
                                double* out) {
  return guarded([&] {
    need(e, "extractor");
    need(a, "a");
    need(b, "b");
    need(out, "out");
    size_t sz = static_cast<size_t>(c) * h * w;
    gi::Tensor ta({1, c, h, w}, std::vector<float>(a, a + sz));
    gi::Tensor tb({1, c, h, w}, std::vector<float>(b, b + sz));
    *out = gi::embedding_distance(e->model, ta, tb);
  });
}

gi_status gi_cmd_train_gan(const char* config_json) {
  return guarded([&] {
    need(config_json, "config_json");
    gi::cmd_train_gan(gi::RunConfig::from_json_text(config_json));
  });
}

gi_status gi_cmd_build_dataset(const char* config_json) {
  return guarded([&] {
    need(config_json, "config_json");
    gi::cmd_build_dataset(gi::RunConfig::from_json_text(config_json));
  });
}

gi_status gi_cmd_train_encoder(const char* config_json) {
  return guarded([&] {
    need(config_json, "config_json");
    gi::cmd_train_encoder(gi::RunConfig::from_json_text(config_json));
  });
}

gi_status gi_cmd_invert(const char* config_json, const char* method) {
  return guarded([&] {
    need(config_json, "config_json");
    need(method, "method");
    gi::cmd_invert(gi::RunConfig::from_json_text(config_json), method);
  });
}

gi_status gi_cmd_evaluate(const char* config_json, const char* method,
                          char** report_json_out) {
  return guarded([&] {
    need(config_json, "config_json");
    need(method, "method");
    gi::EvalReport r =
        gi::cmd_evaluate(gi::RunConfig::from_json_text(config_json), method);
    if (report_json_out)
      *report_json_out =
          dup_string(gi::render_report(r, gi::ReportFormat::kJson));
  });
}

gi_status gi_cmd_compare(const char* config_json, char** report_json_out) {
  return guarded([&] {
    need(config_json, "config_json");
    gi::EvalReport r =
        gi::cmd_compare(gi::RunConfig::from_json_text(config_json));
    if (report_json_out)
      *report_json_out =
          dup_string(gi::render_report(r, gi::ReportFormat::kJson));
  });
}

}  // extern "C"
