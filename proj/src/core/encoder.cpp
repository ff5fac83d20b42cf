#include "encoder.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "checkpoint.hpp"

namespace gi {

void EncoderArch::validate() const {
  if (latent_dim < 1) throw ConfigError("encoder latent_dim must be >= 1");
  if (image_h < 1 || image_w < 1 || (image_c != 1 && image_c != 3))
    throw ConfigError("encoder image shape invalid");
  if (stages < 1 || base_channels < 1)
    throw ConfigError("encoder needs >= 1 residual stage");
  if (head1 < 1 || head2 < 1 || head3 < 1)
    throw ConfigError("encoder head widths must be >= 1");
  if (image_h >> stages < 1 || image_w >> stages < 1)
    throw ConfigError("encoder downsamples below 1x1");
}

std::string EncoderArch::spec_text() const {
  return "encoder;latent_dim=" + std::to_string(latent_dim) +
         ";h=" + std::to_string(image_h) + ";w=" + std::to_string(image_w) +
         ";c=" + std::to_string(image_c) +
         ";base=" + std::to_string(base_channels) +
         ";stages=" + std::to_string(stages) +
         ";head1=" + std::to_string(head1) + ";head2=" + std::to_string(head2) +
         ";head3=" + std::to_string(head3) +
         ";tanh=" + (output_tanh ? "1" : "0");
}

EncoderArch EncoderArch::from_spec_text(const std::string& spec) {
  auto field = [&spec](const std::string& key) {
    auto pos = spec.find(";" + key + "=");
    if (pos == std::string::npos)
      throw PersistenceError("encoder spec missing field " + key);
    pos += key.size() + 2;
    return std::stoi(spec.substr(pos));
  };
  EncoderArch a;
  a.latent_dim = field("latent_dim");
  a.image_h = field("h");
  a.image_w = field("w");
  a.image_c = field("c");
  a.base_channels = field("base");
  a.stages = field("stages");
  a.head1 = field("head1");
  a.head2 = field("head2");
  a.head3 = field("head3");
  a.output_tanh = field("tanh") == 1;
  a.validate();
  return a;
}

EncoderModel EncoderModel::build(const EncoderArch& arch, uint64_t seed) {
  arch.validate();
  EncoderModel m;
  m.arch_ = arch;
  m.net_ = std::make_unique<nn::Sequential>();
  Rng rng(seed);
  int cin = arch.image_c;
  for (int s = 0; s < arch.stages; ++s) {
    int cout = arch.base_channels << s;
    m.net_->add(std::make_unique<nn::ResidualBlock>(cin, cout, 2, rng));
    cin = cout;
  }
  m.net_->add(std::make_unique<nn::GlobalAvgPool>());
  m.net_->add(std::make_unique<nn::Dense>(cin, arch.head1, rng));
  m.net_->add(std::make_unique<nn::LeakyReLU>(0.2f));
  m.net_->add(std::make_unique<nn::Dense>(arch.head1, arch.head2, rng));
  m.net_->add(std::make_unique<nn::LeakyReLU>(0.2f));
  m.net_->add(std::make_unique<nn::Dense>(arch.head2, arch.head3, rng));
  m.net_->add(std::make_unique<nn::LeakyReLU>(0.2f));
  m.net_->add(std::make_unique<nn::Dense>(arch.head3, arch.latent_dim, rng));
  if (arch.output_tanh) m.net_->add(std::make_unique<nn::Tanh>());
  return m;
}

std::vector<nn::ParamRef> EncoderModel::params() const {
  std::vector<nn::ParamRef> out;
  net_->collect_params("encoder", out);
  return out;
}

uint64_t EncoderModel::weights_fingerprint() const {
  return nn::weights_hash(params());
}

void EncoderModel::save(const std::string& path) const {
  CheckpointHeader h;
  h.magic = "ECKPT1";
  h.latent_dim = arch_.latent_dim;
  h.image_h = arch_.image_h;
  h.image_w = arch_.image_w;
  h.image_c = arch_.image_c;
  h.layer_spec = arch_.spec_text() + "\n" + net_->spec();
  save_checkpoint(path, h, params());
}

EncoderModel EncoderModel::load(const std::string& path) {
  CheckpointHeader h = load_checkpoint_header(path, "ECKPT1");
  EncoderArch arch = EncoderArch::from_spec_text(h.layer_spec);
  EncoderModel m = build(arch, 0);
  load_checkpoint_tensors(path, "ECKPT1", m.params());
  return m;
}

Tensor EncoderModel::encode_batch(const Tensor& images) const {
  if (images.rank() != 4 || images.dim(1) != arch_.image_c ||
      images.dim(2) != arch_.image_h || images.dim(3) != arch_.image_w)
    throw ShapeError("encode: bad input shape " + images.shape_str());
  return net_->forward(images);
}

std::vector<float> EncoderModel::encode(const Tensor& image) const {
  Tensor in = image;
  if (in.rank() == 3)
    in.reshape({1, image.dim(0), image.dim(1), image.dim(2)});
  Tensor z = encode_batch(in);
  std::vector<float> out(z.data(), z.data() + z.size());
  for (float v : out)
    if (!std::isfinite(v)) throw NumericalError("non-finite latent code");
  return out;
}

Tensor EncoderModel::backward(const Tensor& dz) const {
  return net_->backward(dz);
}

PairedDataset build_generated_dataset(const GeneratorModel& model,
                                      const LatentPrior& prior, int64_t n,
                                      uint64_t seed) {
  if (n < 1) throw ConfigError("build_generated_dataset: n must be >= 1");
  PairedDataset d;
  d.latents = sample_prior(prior, n, seed);
  d.has_latents = true;
  // Generate in chunks to bound peak memory on large n.
  const auto& a = model.arch();
  d.images = Tensor({static_cast<int>(n), a.image_c, a.image_h, a.image_w});
  const size_t img_sz = static_cast<size_t>(a.image_c) * a.image_h * a.image_w;
  const int64_t chunk = 256;
  for (int64_t start = 0; start < n; start += chunk) {
    int64_t cn = std::min(chunk, n - start);
    Tensor z({static_cast<int>(cn), prior.dim});
    std::copy_n(d.latents.row(start), cn * prior.dim, z.data());
    Tensor imgs = model.generate(z);
    std::copy_n(imgs.data(), cn * img_sz,
                d.images.data() + static_cast<size_t>(start) * img_sz);
  }
  return d;
}

void EncoderTrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  loss_weights.validate();
}

std::string epoch_log_text(const std::vector<EpochLog>& log) {
  std::ostringstream os;
  os << "epoch\tphase\tmean_loss\twall_time_s\n";
  for (const auto& e : log) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d\t%s\t%.6g\t%.6g\n", e.epoch,
                  e.phase.c_str(), e.mean_loss, e.wall_time_s);
    os << buf;
  }
  return os.str();
}

namespace {

Tensor slice_batch(const Tensor& images, const std::vector<int>& order,
                   int start, int bs) {
  int c = images.dim(1), h = images.dim(2), w = images.dim(3);
  const size_t img_sz = static_cast<size_t>(c) * h * w;
  Tensor out({bs, c, h, w});
  for (int i = 0; i < bs; ++i)
    std::copy_n(images.data() + order[start + i] * img_sz, img_sz,
                out.data() + i * img_sz);
  return out;
}

// One epoch of the generated-images objective. Returns the mean batch loss.
double run_generated_epoch(EncoderModel& enc, const GeneratorModel& gen,
                           const FeatureExtractor& extractor,
                           const PairedDataset& data,
                           const EncoderTrainConfig& cfg, nn::AdamOpt& opt,
                           Rng& rng, int epoch_index) {
  const int n = static_cast<int>(data.count());
  const int d = enc.latent_dim();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.uniform() * (i + 1));
    std::swap(order[i], order[j]);
  }
  double loss_sum = 0.0;
  int batches = 0;
  for (int start = 0; start < n; start += cfg.batch_size) {
    int bs = std::min(cfg.batch_size, n - start);
    Tensor imgs = slice_batch(data.images, order, start, bs);
    Tensor z_pred = enc.encode_batch(imgs);

    // z-loss (MAE) and its gradient.
    double zl = 0.0;
    Tensor dz(z_pred.shape());
    const float zscale = 1.0f / static_cast<float>(z_pred.size());
    for (int i = 0; i < bs; ++i) {
      const float* zt = data.latents.row(order[start + i]);
      for (int k = 0; k < d; ++k) {
        float diff = z_pred[i * d + k] - zt[k];
        zl += std::abs(diff);
        dz[i * d + k] = static_cast<float>(
            cfg.loss_weights.z * (diff > 0 ? zscale : (diff < 0 ? -zscale : 0)));
      }
    }
    zl /= z_pred.size();
    double total = cfg.loss_weights.z * zl;

    if (cfg.loss_weights.perceptual > 0.0) {
      Tensor rec = gen.generate(z_pred);
      double pl = perceptual_loss(extractor, rec, imgs);
      total += cfg.loss_weights.perceptual * pl;
      Tensor drec = perceptual_grad(extractor, rec, imgs);
      for (size_t i = 0; i < drec.size(); ++i)
        drec[i] *= static_cast<float>(cfg.loss_weights.perceptual);
      Tensor dz_perc = gen.backward_to_latent(drec);
      for (size_t i = 0; i < dz.size(); ++i) dz[i] += dz_perc[i];
    }

    if (!std::isfinite(total))
      throw TrainingError("encoder training NaN loss at epoch " +
                          std::to_string(epoch_index) + ", batch " +
                          std::to_string(batches));
    opt.zero_grad();
    enc.backward(dz);
    opt.step();
    loss_sum += total;
    ++batches;
  }
  return loss_sum / batches;
}

// One epoch of the real-images objective (pixel MAE + perceptual on
// reconstructions).
double run_real_epoch(EncoderModel& enc, const GeneratorModel& gen,
                      const FeatureExtractor& extractor,
                      const PairedDataset& data,
                      const EncoderTrainConfig& cfg, nn::AdamOpt& opt,
                      Rng& rng, int epoch_index) {
  const int n = static_cast<int>(data.count());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.uniform() * (i + 1));
    std::swap(order[i], order[j]);
  }
  double loss_sum = 0.0;
  int batches = 0;
  for (int start = 0; start < n; start += cfg.batch_size) {
    int bs = std::min(cfg.batch_size, n - start);
    Tensor imgs = slice_batch(data.images, order, start, bs);
    Tensor z_pred = enc.encode_batch(imgs);
    Tensor rec = gen.generate(z_pred);

    double total = 0.0;
    Tensor drec(rec.shape());
    if (cfg.loss_weights.pixel > 0.0) {
      double mae = pixel_mae(rec, imgs);
      total += cfg.loss_weights.pixel * mae;
      const float scale = static_cast<float>(cfg.loss_weights.pixel) /
                          static_cast<float>(rec.size());
      for (size_t i = 0; i < rec.size(); ++i) {
        float diff = rec[i] - imgs[i];
        drec[i] = diff > 0 ? scale : (diff < 0 ? -scale : 0.0f);
      }
    }
    if (cfg.loss_weights.perceptual > 0.0) {
      double pl = perceptual_loss(extractor, rec, imgs);
      total += cfg.loss_weights.perceptual * pl;
      Tensor dperc = perceptual_grad(extractor, rec, imgs);
      for (size_t i = 0; i < drec.size(); ++i)
        drec[i] += static_cast<float>(cfg.loss_weights.perceptual) * dperc[i];
    }
    if (!std::isfinite(total))
      throw TrainingError("encoder training NaN loss at epoch " +
                          std::to_string(epoch_index) + ", batch " +
                          std::to_string(batches));
    // rec was the last generate() call, so generator caches are valid.
    Tensor dz = gen.backward_to_latent(drec);
    opt.zero_grad();
    enc.backward(dz);
    opt.step();
    loss_sum += total;
    ++batches;
  }
  return loss_sum / batches;
}

void check_shapes(const EncoderModel& enc, const GeneratorModel& gen,
                  const PairedDataset& data) {
  if (enc.latent_dim() != gen.latent_dim())
    throw ConfigError("encoder/generator latent_dim mismatch");
  if (data.count() < 1) throw ConfigError("empty training dataset");
  if (data.images.dim(1) != enc.arch().image_c ||
      data.images.dim(2) != enc.arch().image_h ||
      data.images.dim(3) != enc.arch().image_w)
    throw ShapeError("dataset image shape does not match encoder input");
}

}  // namespace

std::vector<EpochLog> train_on_generated(EncoderModel& enc,
                                         const GeneratorModel& gen,
                                         const FeatureExtractor& extractor,
                                         const PairedDataset& data,
                                         const EncoderTrainConfig& config) {
  config.validate();
  if (config.regime != TrainRegime::kGeneratedOnly)
    throw ConfigError("train_on_generated requires regime=generated_only");
  if (!data.has_latents)
    throw ConfigError("train_on_generated needs ground-truth latents");
  check_shapes(enc, gen, data);

  nn::AdamOpt opt(enc.params(), config.learning_rate);
  Rng rng(Rng::derive_seed(config.seed, 0xe0));
  std::vector<EpochLog> log;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    double mean_loss = run_generated_epoch(enc, gen, extractor, data, config,
                                           opt, rng, epoch);
    auto t1 = std::chrono::steady_clock::now();
    log.push_back({epoch, "z", mean_loss,
                   std::chrono::duration<double>(t1 - t0).count()});
  }
  return log;
}

std::vector<EpochLog> train_alternating(EncoderModel& enc,
                                        const GeneratorModel& gen,
                                        const FeatureExtractor& extractor,
                                        const PairedDataset& gen_data,
                                        const PairedDataset& real_data,
                                        const EncoderTrainConfig& config) {
  config.validate();
  if (config.regime != TrainRegime::kAlternating)
    throw ConfigError("train_alternating requires regime=alternating");
  if (!gen_data.has_latents)
    throw ConfigError("train_alternating: gen_data needs latents");
  if (real_data.has_latents)
    throw ConfigError("train_alternating: real_data must not carry latents");
  check_shapes(enc, gen, gen_data);
  check_shapes(enc, gen, real_data);

  nn::AdamOpt opt(enc.params(), config.learning_rate);
  Rng rng(Rng::derive_seed(config.seed, 0xe1));
  std::vector<EpochLog> log;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    bool z_phase = (epoch % 2) == 1;  // schedule starts with the z phase
    double mean_loss =
        z_phase ? run_generated_epoch(enc, gen, extractor, gen_data, config,
                                      opt, rng, epoch)
                : run_real_epoch(enc, gen, extractor, real_data, config, opt,
                                 rng, epoch);
    auto t1 = std::chrono::steady_clock::now();
    log.push_back({epoch, z_phase ? "z" : "real", mean_loss,
                   std::chrono::duration<double>(t1 - t0).count()});
  }
  return log;
}

Tensor reconstruct(const EncoderModel& enc, const GeneratorModel& gen,
                   const Tensor& image) {
  Tensor in = image;
  if (in.rank() == 3)
    in.reshape({1, image.dim(0), image.dim(1), image.dim(2)});
  return gen.generate(enc.encode_batch(in));
}

}  // namespace gi
