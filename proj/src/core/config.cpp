#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gi {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& section) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown config key '" + it.key() + "' in " + section);
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

InversionConfig RunConfig::inversion_config() const {
  InversionConfig c;
  c.iterations = inversion.iterations;
  c.learning_rate = inversion.lr;
  c.loss_kind = loss_kind_from_string(inversion.loss);
  c.clip_mode = clip_mode_from_string(inversion.clip);
  c.stop_threshold = inversion.stop_threshold;
  c.seed = seed;
  c.validate();
  return c;
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  RunConfig c;
  reject_unknown(j,
                 {"seed", "out_dir", "prior", "generator", "extractor",
                  "encoder", "gan_train", "encoder_train", "loss_weights",
                  "inversion", "dataset", "compare"},
                 "top level");
  get_if(j, "seed", c.seed);
  get_if(j, "out_dir", c.out_dir);

  if (j.contains("prior")) {
    const json& p = j["prior"];
    reject_unknown(p, {"kind", "dim", "lo", "hi"}, "prior");
    std::string kind = "uniform";
    get_if(p, "kind", kind);
    c.prior.kind = prior_kind_from_string(kind);
    // bounds default per kind unless given explicitly
    c.prior.lo = c.prior.kind == PriorKind::kUniform ? -1.0 : -3.0;
    c.prior.hi = c.prior.kind == PriorKind::kUniform ? 1.0 : 3.0;
    get_if(p, "dim", c.prior.dim);
    get_if(p, "lo", c.prior.lo);
    get_if(p, "hi", c.prior.hi);
    c.prior.validate();
  }

  if (j.contains("generator")) {
    const json& g = j["generator"];
    reject_unknown(g,
                   {"checkpoint", "kind", "latent_dim", "image_h", "image_w",
                    "image_c", "base_channels", "stages", "output_tanh"},
                   "generator");
    get_if(g, "checkpoint", c.generator_checkpoint);
    get_if(g, "kind", c.generator_arch.kind);
    get_if(g, "latent_dim", c.generator_arch.latent_dim);
    get_if(g, "image_h", c.generator_arch.image_h);
    get_if(g, "image_w", c.generator_arch.image_w);
    get_if(g, "image_c", c.generator_arch.image_c);
    get_if(g, "base_channels", c.generator_arch.base_channels);
    get_if(g, "stages", c.generator_arch.stages);
    get_if(g, "output_tanh", c.generator_arch.output_tanh);
  }
  c.generator_arch.latent_dim = c.prior.dim;

  if (j.contains("extractor")) {
    const json& e = j["extractor"];
    reject_unknown(e,
                   {"checkpoint", "base_channels", "stages", "embedding_dim",
                    "seed"},
                   "extractor");
    get_if(e, "checkpoint", c.extractor_checkpoint);
    get_if(e, "base_channels", c.extractor_arch.base_channels);
    get_if(e, "stages", c.extractor_arch.stages);
    get_if(e, "embedding_dim", c.extractor_arch.embedding_dim);
    get_if(e, "seed", c.extractor_seed);
  }
  c.extractor_arch.image_h = c.generator_arch.image_h;
  c.extractor_arch.image_w = c.generator_arch.image_w;
  c.extractor_arch.image_c = c.generator_arch.image_c;

  if (j.contains("encoder")) {
    const json& e = j["encoder"];
    reject_unknown(e,
                   {"checkpoint", "base_channels", "stages", "head1", "head2",
                    "head3", "output_tanh"},
                   "encoder");
    get_if(e, "checkpoint", c.encoder_checkpoint);
    get_if(e, "base_channels", c.encoder_arch.base_channels);
    get_if(e, "stages", c.encoder_arch.stages);
    get_if(e, "head1", c.encoder_arch.head1);
    get_if(e, "head2", c.encoder_arch.head2);
    get_if(e, "head3", c.encoder_arch.head3);
    get_if(e, "output_tanh", c.encoder_arch.output_tanh);
  }
  c.encoder_arch.latent_dim = c.prior.dim;
  c.encoder_arch.image_h = c.generator_arch.image_h;
  c.encoder_arch.image_w = c.generator_arch.image_w;
  c.encoder_arch.image_c = c.generator_arch.image_c;

  if (j.contains("gan_train")) {
    const json& g = j["gan_train"];
    reject_unknown(g, {"epochs", "batch_size", "lr"}, "gan_train");
    get_if(g, "epochs", c.gan_train.epochs);
    get_if(g, "batch_size", c.gan_train.batch_size);
    get_if(g, "lr", c.gan_train.lr);
  }

  if (j.contains("encoder_train")) {
    const json& e = j["encoder_train"];
    reject_unknown(e, {"lr", "epochs", "batch_size", "regime"},
                   "encoder_train");
    get_if(e, "lr", c.encoder_train.learning_rate);
    get_if(e, "epochs", c.encoder_train.epochs);
    get_if(e, "batch_size", c.encoder_train.batch_size);
    std::string regime = "generated_only";
    get_if(e, "regime", regime);
    if (regime == "generated_only")
      c.encoder_train.regime = TrainRegime::kGeneratedOnly;
    else if (regime == "alternating")
      c.encoder_train.regime = TrainRegime::kAlternating;
    else
      throw ConfigError("unknown encoder_train.regime: " + regime);
  }

  if (j.contains("loss_weights")) {
    const json& w = j["loss_weights"];
    reject_unknown(w, {"pixel", "perceptual", "z"}, "loss_weights");
    get_if(w, "pixel", c.loss_weights.pixel);
    get_if(w, "perceptual", c.loss_weights.perceptual);
    get_if(w, "z", c.loss_weights.z);
    c.loss_weights.validate();
  }
  c.encoder_train.loss_weights = c.loss_weights;

  if (j.contains("inversion")) {
    const json& i = j["inversion"];
    reject_unknown(
        i, {"iterations", "lr", "loss", "clip", "stop_threshold", "init",
            "restarts"},
        "inversion");
    get_if(i, "iterations", c.inversion.iterations);
    get_if(i, "lr", c.inversion.lr);
    get_if(i, "loss", c.inversion.loss);
    get_if(i, "clip", c.inversion.clip);
    if (i.contains("stop_threshold") && !i["stop_threshold"].is_null())
      c.inversion.stop_threshold = i["stop_threshold"].get<double>();
    get_if(i, "init", c.inversion.init);
    get_if(i, "restarts", c.inversion.restarts);
    if (c.inversion.init != "prior" && c.inversion.init != "encoder")
      throw ConfigError("inversion.init must be 'prior' or 'encoder'");
    if (c.inversion.restarts < 1)
      throw ConfigError("inversion.restarts must be >= 1");
  }

  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    reject_unknown(d, {"generated_count", "real_dir", "n_targets"}, "dataset");
    get_if(d, "generated_count", c.dataset.generated_count);
    get_if(d, "real_dir", c.dataset.real_dir);
    get_if(d, "n_targets", c.dataset.n_targets);
  }

  if (j.contains("compare")) {
    const json& cm = j["compare"];
    reject_unknown(cm,
                   {"methods", "encoder_pixel_checkpoint",
                    "encoder_perceptual_checkpoint"},
                   "compare");
    get_if(cm, "methods", c.compare.methods);
    get_if(cm, "encoder_pixel_checkpoint",
           c.compare.encoder_pixel_checkpoint);
    get_if(cm, "encoder_perceptual_checkpoint",
           c.compare.encoder_perceptual_checkpoint);
  }

  if (const char* env = std::getenv("GANINVERT_SEED")) {
    c.seed = std::strtoull(env, nullptr, 10);
  }

  // validate early, before any work starts
  c.generator_arch.validate();
  c.encoder_arch.validate();
  c.inversion_config();
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return from_json_text(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
}

std::string RunConfig::to_json_text() const {
  json j;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["prior"] = {{"kind", to_string(prior.kind)},
                {"dim", prior.dim},
                {"lo", prior.lo},
                {"hi", prior.hi}};
  j["generator"] = {{"checkpoint", generator_checkpoint},
                    {"kind", generator_arch.kind},
                    {"latent_dim", generator_arch.latent_dim},
                    {"image_h", generator_arch.image_h},
                    {"image_w", generator_arch.image_w},
                    {"image_c", generator_arch.image_c},
                    {"base_channels", generator_arch.base_channels},
                    {"stages", generator_arch.stages},
                    {"output_tanh", generator_arch.output_tanh}};
  j["extractor"] = {{"checkpoint", extractor_checkpoint},
                    {"base_channels", extractor_arch.base_channels},
                    {"stages", extractor_arch.stages},
                    {"embedding_dim", extractor_arch.embedding_dim},
                    {"seed", extractor_seed}};
  j["encoder"] = {{"checkpoint", encoder_checkpoint},
                  {"base_channels", encoder_arch.base_channels},
                  {"stages", encoder_arch.stages},
                  {"head1", encoder_arch.head1},
                  {"head2", encoder_arch.head2},
                  {"head3", encoder_arch.head3},
                  {"output_tanh", encoder_arch.output_tanh}};
  j["gan_train"] = {{"epochs", gan_train.epochs},
                    {"batch_size", gan_train.batch_size},
                    {"lr", gan_train.lr}};
  j["encoder_train"] = {
      {"lr", encoder_train.learning_rate},
      {"epochs", encoder_train.epochs},
      {"batch_size", encoder_train.batch_size},
      {"regime", encoder_train.regime == TrainRegime::kGeneratedOnly
                     ? "generated_only"
                     : "alternating"}};
  j["loss_weights"] = {{"pixel", loss_weights.pixel},
                       {"perceptual", loss_weights.perceptual},
                       {"z", loss_weights.z}};
  j["inversion"] = {{"iterations", inversion.iterations},
                    {"lr", inversion.lr},
                    {"loss", inversion.loss},
                    {"clip", inversion.clip},
                    {"init", inversion.init},
                    {"restarts", inversion.restarts}};
  if (inversion.stop_threshold)
    j["inversion"]["stop_threshold"] = *inversion.stop_threshold;
  j["dataset"] = {{"generated_count", dataset.generated_count},
                  {"real_dir", dataset.real_dir},
                  {"n_targets", dataset.n_targets}};
  j["compare"] = {
      {"methods", compare.methods},
      {"encoder_pixel_checkpoint", compare.encoder_pixel_checkpoint},
      {"encoder_perceptual_checkpoint", compare.encoder_perceptual_checkpoint}};
  return j.dump(2);
}

std::string RunConfig::hash() const {
  std::string text = to_json_text();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gi
