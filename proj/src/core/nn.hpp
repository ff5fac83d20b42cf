#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace gi::nn {

// Named parameter reference (weight tensor + its gradient accumulator).
struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;
};

// Feedforward layer with cached forward state. Batches are [N,C,H,W] for
// spatial layers and [N,F] for dense layers.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual void collect_params(const std::string& prefix,
                              std::vector<ParamRef>& out) {}
  virtual std::string spec() const = 0;
};

class Dense : public Layer {
 public:
  Dense(int in, int out, Rng& rng, bool zero_init = false);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) override;
  std::string spec() const override;

  int in_features() const { return in_; }
  int out_features() const { return out_; }
  Tensor& weight() { return w_; }
  Tensor& bias() { return b_; }

 private:
  int in_, out_;
  Tensor w_, b_, gw_, gb_, x_;
};

// 2D convolution, square kernel, zero padding.
class Conv2d : public Layer {
 public:
  Conv2d(int cin, int cout, int k, int stride, int pad, Rng& rng);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) override;
  std::string spec() const override;

 private:
  int cin_, cout_, k_, stride_, pad_;
  Tensor w_, b_, gw_, gb_, x_;
};

// Nearest-neighbour 2x upsampling.
class Upsample2x : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  std::string spec() const override { return "upsample2x"; }

 private:
  std::vector<int> in_shape_;
};

class LeakyReLU : public Layer {
 public:
  explicit LeakyReLU(float alpha = 0.2f) : alpha_(alpha) {}
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  std::string spec() const override;

 private:
  float alpha_;
  Tensor x_;
};

class Tanh : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  std::string spec() const override { return "tanh"; }

 private:
  Tensor y_;
};

class Identity : public Layer {
 public:
  Tensor forward(const Tensor& x) override { return x; }
  Tensor backward(const Tensor& dy) override { return dy; }
  std::string spec() const override { return "identity"; }
};

// Reshape between [N, F] and [N, C, H, W]; N is preserved.
class Reshape : public Layer {
 public:
  explicit Reshape(std::vector<int> per_sample_shape)
      : per_sample_(std::move(per_sample_shape)) {}
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  std::string spec() const override;

 private:
  std::vector<int> per_sample_;
  std::vector<int> in_shape_;
};

// conv-lrelu-conv plus skip; 1x1 strided projection when shape changes.
class ResidualBlock : public Layer {
 public:
  ResidualBlock(int cin, int cout, int stride, Rng& rng);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) override;
  std::string spec() const override;

 private:
  int cin_, cout_, stride_;
  std::unique_ptr<Conv2d> conv1_, conv2_, proj_;
  LeakyReLU act1_, act_out_;
  Tensor skip_in_;
};

class GlobalAvgPool : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  std::string spec() const override { return "gap"; }

 private:
  std::vector<int> in_shape_;
};

class Sequential : public Layer {
 public:
  Sequential() = default;
  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  size_t size() const { return layers_.size(); }
  Layer& layer(size_t i) { return *layers_[i]; }

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  // Forward that records the output of each layer (for feature taps).
  Tensor forward_recording(const Tensor& x, std::vector<Tensor>& outputs);
  // Backward with extra gradients injected at given layer outputs.
  Tensor backward_with_taps(
      const Tensor& dy,
      const std::vector<std::pair<size_t, Tensor>>& tap_grads);
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) override;
  std::string spec() const override;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Collected parameter helpers.
std::vector<ParamRef> params_of(Layer& layer);
void zero_grads(const std::vector<ParamRef>& params);
size_t param_count(const std::vector<ParamRef>& params);
// FNV-1a over all parameter bytes; used to assert frozen weights.
uint64_t weights_hash(const std::vector<ParamRef>& params);

// Adam over a parameter set (network training).
class AdamOpt {
 public:
  AdamOpt(std::vector<ParamRef> params, double lr, double beta1 = 0.9,
          double beta2 = 0.999, double eps = 1e-8);
  void step();
  void zero_grad();

 private:
  std::vector<ParamRef> params_;
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

}  // namespace gi::nn
