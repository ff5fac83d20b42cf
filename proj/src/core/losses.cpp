#include "losses.hpp"

#include <cmath>

#include "checkpoint.hpp"

namespace gi {

static void check_same_shape(const Tensor& a, const Tensor& b,
                             const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_str() +
                     " vs " + b.shape_str());
}

double pixel_mae(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "pixel_mae");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += std::abs(double(a[i]) - b[i]);
  return a.size() ? acc / static_cast<double>(a.size()) : 0.0;
}

double pixel_l2(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "pixel_l2");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = double(a[i]) - b[i];
    acc += d * d;
  }
  return a.size() ? acc / static_cast<double>(a.size()) : 0.0;
}

double z_loss(const std::vector<float>& z_hat,
              const std::vector<float>& z_true) {
  if (z_hat.size() != z_true.size())
    throw ShapeError("z_loss: latent dimension mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < z_hat.size(); ++i)
    acc += std::abs(double(z_hat[i]) - z_true[i]);
  return z_hat.empty() ? 0.0 : acc / static_cast<double>(z_hat.size());
}

double MaeAgainstTarget::value(const Tensor& img) {
  return pixel_mae(img, target);
}

Tensor MaeAgainstTarget::grad(const Tensor& img) {
  check_same_shape(img, target, "pixel_mae grad");
  Tensor g(img.shape());
  float scale = 1.0f / static_cast<float>(img.size());
  for (size_t i = 0; i < img.size(); ++i) {
    float d = img[i] - target[i];
    g[i] = d > 0.0f ? scale : (d < 0.0f ? -scale : 0.0f);
  }
  return g;
}

double L2AgainstTarget::value(const Tensor& img) {
  return pixel_l2(img, target);
}

Tensor L2AgainstTarget::grad(const Tensor& img) {
  check_same_shape(img, target, "pixel_l2 grad");
  Tensor g(img.shape());
  float scale = 2.0f / static_cast<float>(img.size());
  for (size_t i = 0; i < img.size(); ++i) g[i] = scale * (img[i] - target[i]);
  return g;
}

// ---- FeatureExtractor ----

static std::string extractor_spec_text(const ExtractorArch& a) {
  return "extractor;h=" + std::to_string(a.image_h) +
         ";w=" + std::to_string(a.image_w) + ";c=" + std::to_string(a.image_c) +
         ";base=" + std::to_string(a.base_channels) +
         ";stages=" + std::to_string(a.stages) +
         ";emb=" + std::to_string(a.embedding_dim);
}

static ExtractorArch extractor_arch_from_spec(const std::string& spec) {
  ExtractorArch a;
  auto field = [&spec](const std::string& key) {
    auto pos = spec.find(";" + key + "=");
    if (pos == std::string::npos)
      throw PersistenceError("extractor spec missing field " + key);
    pos += key.size() + 2;
    return std::stoi(spec.substr(pos));
  };
  a.image_h = field("h");
  a.image_w = field("w");
  a.image_c = field("c");
  a.base_channels = field("base");
  a.stages = field("stages");
  a.embedding_dim = field("emb");
  return a;
}

FeatureExtractor FeatureExtractor::build(const ExtractorArch& arch,
                                         uint64_t seed) {
  if (arch.stages < 1 || arch.base_channels < 1 || arch.embedding_dim < 1)
    throw ConfigError("invalid extractor architecture");
  FeatureExtractor ex;
  ex.arch_ = arch;
  ex.spec_text_ = extractor_spec_text(arch);
  ex.net_ = std::make_unique<nn::Sequential>();
  Rng rng(seed);
  int cin = arch.image_c;
  int h = arch.image_h;
  for (int s = 0; s < arch.stages; ++s) {
    int cout = arch.base_channels << s;
    ex.net_->add(std::make_unique<nn::Conv2d>(cin, cout, 3, 2, 1, rng));
    ex.net_->add(std::make_unique<nn::LeakyReLU>(0.2f));
    ex.tap_layers_.push_back(ex.net_->size() - 1);
    ex.tap_names_.push_back("stage" + std::to_string(s + 1));
    cin = cout;
    h = (h + 1) / 2;
    if (h < 1) throw ConfigError("extractor downsamples below 1x1");
  }
  ex.net_->add(std::make_unique<nn::GlobalAvgPool>());
  ex.net_->add(std::make_unique<nn::Dense>(cin, arch.embedding_dim, rng));
  return ex;
}

std::vector<nn::ParamRef> FeatureExtractor::params() const {
  std::vector<nn::ParamRef> out;
  net_->collect_params("extractor", out);
  return out;
}

void FeatureExtractor::save(const std::string& path) const {
  CheckpointHeader h;
  h.magic = "FCKPT1";
  h.latent_dim = arch_.embedding_dim;
  h.image_h = arch_.image_h;
  h.image_w = arch_.image_w;
  h.image_c = arch_.image_c;
  // Tap points ride along in layer_spec so perceptual loss is
  // reproducible from the file alone.
  std::string taps;
  for (const auto& t : tap_names_) taps += ";tap=" + t;
  h.layer_spec = spec_text_ + taps + "\n" + net_->spec();
  save_checkpoint(path, h, params());
}

FeatureExtractor FeatureExtractor::load(const std::string& path) {
  CheckpointHeader h = load_checkpoint_header(path, "FCKPT1");
  ExtractorArch arch = extractor_arch_from_spec(h.layer_spec);
  FeatureExtractor ex = build(arch, 0);
  load_checkpoint_tensors(path, "FCKPT1", ex.params());
  return ex;
}

uint64_t FeatureExtractor::weights_fingerprint() const {
  return nn::weights_hash(params());
}

FeatureExtractor::Features FeatureExtractor::features(
    const Tensor& image) const {
  if (image.rank() != 4 || image.dim(1) != arch_.image_c ||
      image.dim(2) != arch_.image_h || image.dim(3) != arch_.image_w)
    throw ShapeError("extractor: bad input shape " + image.shape_str());
  ++forward_calls_;
  std::vector<Tensor> outputs;
  Tensor emb = net_->forward_recording(image, outputs);
  Features f;
  for (size_t idx : tap_layers_) f.taps.push_back(outputs[idx]);
  f.embedding.assign(emb.data(), emb.data() + emb.size());
  return f;
}

std::vector<float> FeatureExtractor::embedding(const Tensor& image) const {
  return features(image).embedding;
}

double perceptual_loss(const FeatureExtractor& ex, const Tensor& a,
                       const Tensor& b) {
  check_same_shape(a, b, "perceptual_loss");
  auto fa = ex.features(a);
  auto fb = ex.features(b);
  double acc = 0.0;
  for (size_t t = 0; t < fa.taps.size(); ++t) {
    const Tensor& ta = fa.taps[t];
    const Tensor& tb = fb.taps[t];
    double mse = 0.0;
    for (size_t i = 0; i < ta.size(); ++i) {
      double d = double(ta[i]) - tb[i];
      mse += d * d;
    }
    acc += mse / static_cast<double>(ta.size());
  }
  return acc / static_cast<double>(fa.taps.size());
}

Tensor perceptual_grad(const FeatureExtractor& ex, const Tensor& a,
                       const Tensor& b) {
  check_same_shape(a, b, "perceptual_grad");
  auto fb = ex.features(b);
  // Re-run a last so layer caches correspond to a.
  std::vector<Tensor> outputs;
  ++ex.forward_calls_;
  Tensor emb = ex.net_->forward_recording(a, outputs);
  std::vector<std::pair<size_t, Tensor>> tap_grads;
  const double ntaps = static_cast<double>(ex.tap_layers_.size());
  for (size_t t = 0; t < ex.tap_layers_.size(); ++t) {
    const Tensor& ta = outputs[ex.tap_layers_[t]];
    const Tensor& tb = fb.taps[t];
    Tensor g(ta.shape());
    float scale = static_cast<float>(2.0 / (ntaps * ta.size()));
    for (size_t i = 0; i < ta.size(); ++i) g[i] = scale * (ta[i] - tb[i]);
    tap_grads.emplace_back(ex.tap_layers_[t], std::move(g));
  }
  Tensor zero_dy({static_cast<int>(emb.dim(0)),
                  static_cast<int>(emb.dim(1))});
  return ex.net_->backward_with_taps(zero_dy, tap_grads);
}

double PerceptualAgainstTarget::value(const Tensor& img) {
  return perceptual_loss(ex, img, target);
}

Tensor PerceptualAgainstTarget::grad(const Tensor& img) {
  return perceptual_grad(ex, img, target);
}

void LossWeights::validate() const {
  if (pixel < 0 || perceptual < 0 || z < 0)
    throw ConfigError("loss weights must be non-negative");
  if (pixel == 0 && perceptual == 0 && z == 0)
    throw ConfigError("at least one loss weight must be positive");
}

double combine(const std::vector<NamedLoss>& losses, const LossWeights& w) {
  w.validate();
  double acc = 0.0;
  for (const auto& l : losses) {
    double weight;
    if (l.name == "pixel")
      weight = w.pixel;
    else if (l.name == "perceptual")
      weight = w.perceptual;
    else if (l.name == "z")
      weight = w.z;
    else
      throw ConfigError("unknown loss term: " + l.name);
    if (weight == 0.0) continue;
    if (!std::isfinite(l.value))
      throw NumericalError("non-finite loss term: " + l.name);
    acc += weight * l.value;
  }
  return acc;
}

}  // namespace gi
