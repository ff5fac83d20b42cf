#pragma once

#include <memory>
#include <string>
#include <vector>

#include "generator.hpp"
#include "latent.hpp"
#include "losses.hpp"
#include "nn.hpp"

namespace gi {

// Residual convolutional backbone plus a three-layer fully-connected
// head and a final linear map to latent_dim.
struct EncoderArch {
  int latent_dim = 32;
  int image_h = 32, image_w = 32, image_c = 3;
  int base_channels = 12;
  int stages = 3;  // residual stages, stride 2 each
  int head1 = 256, head2 = 128, head3 = 64;
  bool output_tanh = false;  // optional saturating output for uniform priors

  void validate() const;
  std::string spec_text() const;
  static EncoderArch from_spec_text(const std::string& spec);
};

class EncoderModel {
 public:
  static EncoderModel build(const EncoderArch& arch, uint64_t seed);
  static EncoderModel load(const std::string& path);
  void save(const std::string& path) const;

  std::vector<float> encode(const Tensor& image) const;
  // images [N,C,H,W] -> latents [N, latent_dim]
  Tensor encode_batch(const Tensor& images) const;
  Tensor backward(const Tensor& dz) const;

  int latent_dim() const { return arch_.latent_dim; }
  const EncoderArch& arch() const { return arch_; }
  std::vector<nn::ParamRef> params() const;
  uint64_t weights_fingerprint() const;

 private:
  EncoderModel() = default;
  EncoderArch arch_;
  mutable std::unique_ptr<nn::Sequential> net_;
};

enum class TrainRegime { kGeneratedOnly, kAlternating };

struct EncoderTrainConfig {
  double learning_rate = 2e-4;
  int epochs = 1;
  int batch_size = 32;
  LossWeights loss_weights;  // z + perceptual for generated, pixel +
                             // perceptual for real epochs
  uint64_t seed = 0;
  TrainRegime regime = TrainRegime::kGeneratedOnly;

  void validate() const;
};

// Aligned (image, latent) pairs; latents present only for generated data.
struct PairedDataset {
  Tensor images;  // [N,C,H,W]
  LatentBatch latents;
  bool has_latents = false;

  int64_t count() const { return images.empty() ? 0 : images.dim(0); }
};

PairedDataset build_generated_dataset(const GeneratorModel& model,
                                      const LatentPrior& prior, int64_t n,
                                      uint64_t seed);

struct EpochLog {
  int epoch = 0;
  std::string phase;  // "z" or "real"
  double mean_loss = 0.0;
  double wall_time_s = 0.0;
};

std::string epoch_log_text(const std::vector<EpochLog>& log);

// Figure-1 regime: per batch, w_z * z_loss(encode(img), z_true)
// + w_perceptual * perceptual(G(encode(img)), img). Generator and
// extractor stay frozen; only encoder weights move.
std::vector<EpochLog> train_on_generated(EncoderModel& enc,
                                         const GeneratorModel& gen,
                                         const FeatureExtractor& extractor,
                                         const PairedDataset& data,
                                         const EncoderTrainConfig& config);

// Figure-2 regime: odd epochs run the generated objective, even epochs run
// w_pixel * MAE(G(encode(img)), img) + w_perceptual * perceptual(...) on
// real images.
std::vector<EpochLog> train_alternating(EncoderModel& enc,
                                        const GeneratorModel& gen,
                                        const FeatureExtractor& extractor,
                                        const PairedDataset& gen_data,
                                        const PairedDataset& real_data,
                                        const EncoderTrainConfig& config);

// generate(gen, encode(enc, image)); used by metrics and the CLI.
Tensor reconstruct(const EncoderModel& enc, const GeneratorModel& gen,
                   const Tensor& image);

}  // namespace gi
