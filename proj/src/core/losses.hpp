#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nn.hpp"
#include "tensor.hpp"

namespace gi {

// Scalar objective over a single image [1,C,H,W] with its gradient;
// used by gradient-based inversion.
struct ImageLoss {
  virtual ~ImageLoss() = default;
  virtual double value(const Tensor& img) = 0;
  virtual Tensor grad(const Tensor& img) = 0;
};

// Mean absolute / squared pixel difference; reduces by mean so values
// are resolution independent.
double pixel_mae(const Tensor& a, const Tensor& b);
double pixel_l2(const Tensor& a, const Tensor& b);

// Mean absolute coordinate difference between latent vectors.
double z_loss(const std::vector<float>& z_hat, const std::vector<float>& z_true);

struct MaeAgainstTarget : ImageLoss {
  explicit MaeAgainstTarget(Tensor target) : target(std::move(target)) {}
  double value(const Tensor& img) override;
  Tensor grad(const Tensor& img) override;
  Tensor target;
};

struct L2AgainstTarget : ImageLoss {
  explicit L2AgainstTarget(Tensor target) : target(std::move(target)) {}
  double value(const Tensor& img) override;
  Tensor grad(const Tensor& img) override;
  Tensor target;
};

// Fixed convolutional network exposing named intermediate activations
// (tap points) and a final embedding. Weights are frozen after build.
struct ExtractorArch {
  int image_h = 32, image_w = 32, image_c = 3;
  int base_channels = 12;
  int stages = 3;  // each stage is a strided conv; every stage is a tap
  int embedding_dim = 32;
};

class FeatureExtractor {
 public:
  static FeatureExtractor build(const ExtractorArch& arch, uint64_t seed);
  static FeatureExtractor load(const std::string& path);
  void save(const std::string& path) const;

  struct Features {
    std::vector<Tensor> taps;
    std::vector<float> embedding;
  };

  // Forward pass collecting tap activations and the embedding.
  Features features(const Tensor& image) const;
  std::vector<float> embedding(const Tensor& image) const;

  const std::vector<std::string>& tap_points() const { return tap_names_; }
  int embedding_dim() const { return arch_.embedding_dim; }
  const ExtractorArch& arch() const { return arch_; }
  uint64_t weights_fingerprint() const;
  int64_t forward_calls() const { return forward_calls_; }

  // Average over tap points of the per-tap feature MSE.
  friend double perceptual_loss(const FeatureExtractor& ex, const Tensor& a,
                                const Tensor& b);
  // d perceptual_loss / d a; b is treated as constant.
  friend Tensor perceptual_grad(const FeatureExtractor& ex, const Tensor& a,
                                const Tensor& b);

 private:
  FeatureExtractor() = default;
  std::vector<nn::ParamRef> params() const;
  ExtractorArch arch_;
  std::string spec_text_;
  mutable std::unique_ptr<nn::Sequential> net_;
  std::vector<size_t> tap_layers_;  // indices into net_ layer outputs
  std::vector<std::string> tap_names_;
  mutable int64_t forward_calls_ = 0;
};

double perceptual_loss(const FeatureExtractor& ex, const Tensor& a,
                       const Tensor& b);
Tensor perceptual_grad(const FeatureExtractor& ex, const Tensor& a,
                       const Tensor& b);

// Perceptual loss against a fixed target, as an ImageLoss.
struct PerceptualAgainstTarget : ImageLoss {
  PerceptualAgainstTarget(const FeatureExtractor& ex, Tensor target)
      : ex(ex), target(std::move(target)) {}
  double value(const Tensor& img) override;
  Tensor grad(const Tensor& img) override;
  const FeatureExtractor& ex;
  Tensor target;
};

struct LossWeights {
  double pixel = 1.0;
  double perceptual = 1.0;
  double z = 1.0;
  void validate() const;
};

struct NamedLoss {
  std::string name;  // "pixel" | "perceptual" | "z"
  double value;
};

// Weighted sum; zero-weight terms are skipped (callers need not compute them).
double combine(const std::vector<NamedLoss>& losses, const LossWeights& w);

}  // namespace gi
