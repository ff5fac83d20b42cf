#pragma once

#include <memory>
#include <string>
#include <vector>

#include "latent.hpp"
#include "losses.hpp"
#include "nn.hpp"
#include "tensor.hpp"

namespace gi {

// Decoder architecture. "conv" is the default desk-scale upsampling
// decoder; "linear" is a single dense map used as an analytically
// tractable oracle target.
struct GeneratorArch {
  std::string kind = "conv";  // "conv" | "linear"
  int latent_dim = 32;
  int image_h = 32, image_w = 32, image_c = 3;
  int base_channels = 48;  // channels at the smallest spatial stage
  int stages = 3;          // 2x upsampling stages
  bool output_tanh = true;

  void validate() const;
  std::string spec_text() const;
  static GeneratorArch from_spec_text(const std::string& spec);
};

class GeneratorModel {
 public:
  static GeneratorModel build(const GeneratorArch& arch, uint64_t seed);
  static GeneratorModel load(const std::string& path);
  void save(const std::string& path) const;

  // z [N, latent_dim] -> images [N, C, H, W]; deterministic.
  Tensor generate(const Tensor& z_batch) const;
  Tensor generate(const LatentBatch& z_batch) const;
  Tensor generate_one(const std::vector<float>& z) const;

  // d loss(generate(z)) / d z for a single latent.
  std::vector<float> latent_gradient(const std::vector<float>& z,
                                     ImageLoss& loss) const;
  // Gradient pass given d loss / d image from an already-run generate().
  // forward must have been the immediately preceding generate() call.
  Tensor backward_to_latent(const Tensor& dimage) const;

  int latent_dim() const { return arch_.latent_dim; }
  const GeneratorArch& arch() const { return arch_; }
  std::vector<nn::ParamRef> params() const;
  uint64_t weights_fingerprint() const;
  nn::Sequential& net() { return *net_; }

 private:
  GeneratorModel() = default;
  GeneratorArch arch_;
  // Layer caches mutate during forward/backward; weights stay fixed
  // outside train_desk_gan.
  mutable std::unique_ptr<nn::Sequential> net_;
};

class DiscriminatorModel {
 public:
  static DiscriminatorModel build(int image_h, int image_w, int image_c,
                                  uint64_t seed);
  // Realness logits, one scalar per image.
  Tensor logits(const Tensor& images) const;
  Tensor backward(const Tensor& dlogits) const;
  std::vector<nn::ParamRef> params() const;

 private:
  DiscriminatorModel() = default;
  mutable std::unique_ptr<nn::Sequential> net_;
};

struct GanTrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double lr = 2e-4;
  int latent_dim = 32;
  GeneratorArch arch;  // latent_dim/image fields are taken from here
};

struct GanTrainResult {
  GeneratorModel generator;
  DiscriminatorModel discriminator;
  std::vector<double> g_loss;  // per-epoch means
  std::vector<double> d_loss;
};

// Non-saturating GAN training at desk scale; deterministic given seed.
GanTrainResult train_desk_gan(const Tensor& dataset, const GanTrainConfig& cfg,
                              uint64_t seed);

}  // namespace gi
