#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace gi {

// Error taxonomy used across the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};
struct PersistenceError : Error {
  using Error::Error;
};
struct TrainingError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

// Dense row-major float tensor. Shapes are small (desk scale), so we keep
// the representation simple: a shape vector plus a flat buffer.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(numel(shape_), 0.0f);
  }
  Tensor(std::vector<int> shape, std::vector<float> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != numel(shape_))
      throw ShapeError("tensor data size does not match shape");
  }

  static size_t numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
      if (d < 0) throw ShapeError("negative tensor dimension");
      n *= static_cast<size_t>(d);
    }
    return n;
  }

  const std::vector<int>& shape() const { return shape_; }
  int dim(size_t i) const { return shape_.at(i); }
  size_t rank() const { return shape_.size(); }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  float& operator[](size_t i) { return data_[i]; }
  float operator[](size_t i) const { return data_[i]; }

  void fill(float v) { data_.assign(data_.size(), v); }
  void reshape(std::vector<int> shape) {
    if (numel(shape) != data_.size())
      throw ShapeError("reshape changes element count");
    shape_ = std::move(shape);
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape_.size(); ++i)
      s += (i ? "," : "") + std::to_string(shape_[i]);
    return s + "]";
  }

  bool all_finite() const;

 private:
  std::vector<int> shape_;
  std::vector<float> data_;
};

}  // namespace gi
