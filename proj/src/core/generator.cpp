#include "generator.hpp"

#include <cmath>

#include "checkpoint.hpp"

namespace gi {

void GeneratorArch::validate() const {
  if (latent_dim < 1) throw ConfigError("generator latent_dim must be >= 1");
  if (image_h < 1 || image_w < 1 || (image_c != 1 && image_c != 3))
    throw ConfigError("generator image shape invalid (channels must be 1 or 3)");
  if (kind == "conv") {
    int div = 1 << stages;
    if (stages < 1 || image_h % div != 0 || image_w % div != 0)
      throw ConfigError("conv generator needs image dims divisible by 2^stages");
    if (base_channels < 1) throw ConfigError("base_channels must be >= 1");
  } else if (kind != "linear") {
    throw ConfigError("unknown generator kind: " + kind);
  }
}

std::string GeneratorArch::spec_text() const {
  return "kind=" + kind + ";latent_dim=" + std::to_string(latent_dim) +
         ";h=" + std::to_string(image_h) + ";w=" + std::to_string(image_w) +
         ";c=" + std::to_string(image_c) +
         ";base=" + std::to_string(base_channels) +
         ";stages=" + std::to_string(stages) +
         ";tanh=" + (output_tanh ? "1" : "0");
}

GeneratorArch GeneratorArch::from_spec_text(const std::string& spec) {
  GeneratorArch a;
  auto str_field = [&spec](const std::string& key) {
    std::string probe = key + "=";
    size_t pos = spec.rfind(probe, 0) == 0 ? 0 : spec.find(";" + probe);
    if (pos == std::string::npos)
      throw PersistenceError("generator spec missing field " + key);
    if (pos != 0) ++pos;
    pos += probe.size();
    size_t end = spec.find_first_of(";\n", pos);
    return spec.substr(pos, end == std::string::npos ? end : end - pos);
  };
  a.kind = str_field("kind");
  a.latent_dim = std::stoi(str_field("latent_dim"));
  a.image_h = std::stoi(str_field("h"));
  a.image_w = std::stoi(str_field("w"));
  a.image_c = std::stoi(str_field("c"));
  a.base_channels = std::stoi(str_field("base"));
  a.stages = std::stoi(str_field("stages"));
  a.output_tanh = str_field("tanh") == "1";
  a.validate();
  return a;
}

static std::unique_ptr<nn::Sequential> build_decoder(const GeneratorArch& a,
                                                     Rng& rng) {
  auto net = std::make_unique<nn::Sequential>();
  if (a.kind == "linear") {
    net->add(std::make_unique<nn::Dense>(
        a.latent_dim, a.image_h * a.image_w * a.image_c, rng));
    net->add(std::make_unique<nn::Reshape>(
        std::vector<int>{a.image_c, a.image_h, a.image_w}));
    if (a.output_tanh) net->add(std::make_unique<nn::Tanh>());
    return net;
  }
  int h0 = a.image_h >> a.stages;
  int w0 = a.image_w >> a.stages;
  net->add(std::make_unique<nn::Dense>(a.latent_dim,
                                       a.base_channels * h0 * w0, rng));
  net->add(std::make_unique<nn::Reshape>(
      std::vector<int>{a.base_channels, h0, w0}));
  net->add(std::make_unique<nn::LeakyReLU>(0.2f));
  int cin = a.base_channels;
  for (int s = 0; s < a.stages; ++s) {
    int cout = std::max(8, a.base_channels >> (s + 1));
    net->add(std::make_unique<nn::Upsample2x>());
    net->add(std::make_unique<nn::Conv2d>(cin, cout, 3, 1, 1, rng));
    net->add(std::make_unique<nn::LeakyReLU>(0.2f));
    cin = cout;
  }
  net->add(std::make_unique<nn::Conv2d>(cin, a.image_c, 3, 1, 1, rng));
  if (a.output_tanh) net->add(std::make_unique<nn::Tanh>());
  return net;
}

GeneratorModel GeneratorModel::build(const GeneratorArch& arch,
                                     uint64_t seed) {
  arch.validate();
  GeneratorModel m;
  m.arch_ = arch;
  Rng rng(seed);
  m.net_ = build_decoder(arch, rng);
  return m;
}

std::vector<nn::ParamRef> GeneratorModel::params() const {
  std::vector<nn::ParamRef> out;
  net_->collect_params("generator", out);
  return out;
}

uint64_t GeneratorModel::weights_fingerprint() const {
  return nn::weights_hash(params());
}

void GeneratorModel::save(const std::string& path) const {
  CheckpointHeader h;
  h.magic = "GCKPT1";
  h.latent_dim = arch_.latent_dim;
  h.image_h = arch_.image_h;
  h.image_w = arch_.image_w;
  h.image_c = arch_.image_c;
  h.layer_spec = arch_.spec_text() + "\n" + net_->spec();
  save_checkpoint(path, h, params());
}

GeneratorModel GeneratorModel::load(const std::string& path) {
  CheckpointHeader h = load_checkpoint_header(path, "GCKPT1");
  GeneratorArch arch = GeneratorArch::from_spec_text(h.layer_spec);
  if (arch.latent_dim != h.latent_dim)
    throw ShapeError("checkpoint latent_dim disagrees with layer spec in " +
                     path);
  GeneratorModel m = build(arch, 0);
  load_checkpoint_tensors(path, "GCKPT1", m.params());
  return m;
}

Tensor GeneratorModel::generate(const Tensor& z_batch) const {
  if (z_batch.rank() != 2 || z_batch.dim(1) != arch_.latent_dim)
    throw ShapeError("generate: expected [N," +
                     std::to_string(arch_.latent_dim) + "], got " +
                     z_batch.shape_str());
  return net_->forward(z_batch);
}

Tensor GeneratorModel::generate(const LatentBatch& z_batch) const {
  Tensor z({static_cast<int>(z_batch.count), z_batch.dim},
           z_batch.values);
  return generate(z);
}

Tensor GeneratorModel::generate_one(const std::vector<float>& z) const {
  Tensor zb({1, static_cast<int>(z.size())}, z);
  return generate(zb);
}

Tensor GeneratorModel::backward_to_latent(const Tensor& dimage) const {
  return net_->backward(dimage);
}

std::vector<float> GeneratorModel::latent_gradient(const std::vector<float>& z,
                                                   ImageLoss& loss) const {
  Tensor img = generate_one(z);
  Tensor dimg = loss.grad(img);
  Tensor dz = backward_to_latent(dimg);
  std::vector<float> out(dz.data(), dz.data() + dz.size());
  for (float v : out)
    if (!std::isfinite(v))
      throw NumericalError("non-finite latent gradient");
  return out;
}

// ---- Discriminator ----

DiscriminatorModel DiscriminatorModel::build(int image_h, int image_w,
                                             int image_c, uint64_t seed) {
  DiscriminatorModel d;
  d.net_ = std::make_unique<nn::Sequential>();
  Rng rng(seed);
  int cin = image_c;
  int h = image_h;
  int cout = 16;
  while (h > 4) {
    d.net_->add(std::make_unique<nn::Conv2d>(cin, cout, 3, 2, 1, rng));
    d.net_->add(std::make_unique<nn::LeakyReLU>(0.2f));
    cin = cout;
    cout = std::min(64, cout * 2);
    h = (h + 1) / 2;
  }
  d.net_->add(std::make_unique<nn::GlobalAvgPool>());
  d.net_->add(std::make_unique<nn::Dense>(cin, 1, rng));
  return d;
}

Tensor DiscriminatorModel::logits(const Tensor& images) const {
  return net_->forward(images);
}

Tensor DiscriminatorModel::backward(const Tensor& dlogits) const {
  return net_->backward(dlogits);
}

std::vector<nn::ParamRef> DiscriminatorModel::params() const {
  std::vector<nn::ParamRef> out;
  net_->collect_params("discriminator", out);
  return out;
}

// ---- GAN training ----

static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// BCE-with-logits; grad filled into dlogits. target 1 = real.
static double bce_logits(const Tensor& logits, float target, Tensor& dlogits) {
  double acc = 0.0;
  int n = static_cast<int>(logits.size());
  for (int i = 0; i < n; ++i) {
    double x = logits[i];
    double p = sigmoid(x);
    // numerically stable form: max(x,0) - x*t + log(1+exp(-|x|))
    acc += std::max(x, 0.0) - x * target + std::log1p(std::exp(-std::abs(x)));
    dlogits[i] = static_cast<float>((p - target) / n);
  }
  return acc / n;
}

GanTrainResult train_desk_gan(const Tensor& dataset, const GanTrainConfig& cfg,
                              uint64_t seed) {
  if (dataset.rank() != 4 || dataset.dim(0) < 1)
    throw ConfigError("train_desk_gan: dataset must be a non-empty [N,C,H,W]");
  GeneratorArch arch = cfg.arch;
  arch.latent_dim = cfg.latent_dim ? cfg.latent_dim : arch.latent_dim;
  if (dataset.dim(1) != arch.image_c || dataset.dim(2) != arch.image_h ||
      dataset.dim(3) != arch.image_w)
    throw ShapeError("train_desk_gan: dataset shape does not match generator");

  GanTrainResult res{GeneratorModel::build(arch, Rng::derive_seed(seed, 0)),
                     DiscriminatorModel::build(arch.image_h, arch.image_w,
                                               arch.image_c,
                                               Rng::derive_seed(seed, 1)),
                     {},
                     {}};
  nn::AdamOpt g_opt(res.generator.params(), cfg.lr);
  nn::AdamOpt d_opt(res.discriminator.params(), cfg.lr);
  Rng rng(Rng::derive_seed(seed, 2));

  const int n = dataset.dim(0);
  const int c = arch.image_c, h = arch.image_h, w = arch.image_w;
  const size_t img_sz = static_cast<size_t>(c) * h * w;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our deterministic rng.
    for (int i = n - 1; i > 0; --i) {
      int j = static_cast<int>(rng.uniform() * (i + 1));
      std::swap(order[i], order[j]);
    }
    double g_sum = 0.0, d_sum = 0.0;
    int batches = 0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      int bs = std::min(cfg.batch_size, n - start);
      Tensor real({bs, c, h, w});
      for (int i = 0; i < bs; ++i)
        std::copy_n(dataset.data() + order[start + i] * img_sz, img_sz,
                    real.data() + i * img_sz);
      // latent batch
      Tensor z({bs, arch.latent_dim});
      for (size_t i = 0; i < z.size(); ++i)
        z[i] = static_cast<float>(rng.normal());

      // discriminator step
      Tensor fake = res.generator.generate(z);
      Tensor logit_real = res.discriminator.logits(real);
      Tensor d_real_grad(logit_real.shape());
      double loss_real = bce_logits(logit_real, 1.0f, d_real_grad);
      d_opt.zero_grad();
      res.discriminator.backward(d_real_grad);
      Tensor logit_fake = res.discriminator.logits(fake);
      Tensor d_fake_grad(logit_fake.shape());
      double loss_fake = bce_logits(logit_fake, 0.0f, d_fake_grad);
      res.discriminator.backward(d_fake_grad);
      d_opt.step();
      double d_loss = 0.5 * (loss_real + loss_fake);

      // generator step (non-saturating: maximize log D(G(z)))
      fake = res.generator.generate(z);
      Tensor logit_g = res.discriminator.logits(fake);
      Tensor g_grad(logit_g.shape());
      double g_loss = bce_logits(logit_g, 1.0f, g_grad);
      g_opt.zero_grad();
      nn::zero_grads(res.discriminator.params());
      Tensor dfake = res.discriminator.backward(g_grad);
      res.generator.backward_to_latent(dfake);  // caches set by generate(z)
      g_opt.step();

      if (!std::isfinite(d_loss) || !std::isfinite(g_loss))
        throw TrainingError("GAN training diverged (NaN loss) at epoch " +
                            std::to_string(epoch));
      d_sum += d_loss;
      g_sum += g_loss;
      ++batches;
    }
    res.d_loss.push_back(d_sum / batches);
    res.g_loss.push_back(g_sum / batches);
  }
  // Discriminator grads are scratch state; leave weights as trained.
  nn::zero_grads(res.discriminator.params());
  nn::zero_grads(res.generator.params());
  return res;
}

}  // namespace gi
