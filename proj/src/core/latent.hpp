#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace gi {

enum class PriorKind { kUniform, kStandardNormal };

std::string to_string(PriorKind k);
PriorKind prior_kind_from_string(const std::string& s);

// Latent prior: distribution, dimensionality and the clipping interval.
// Defaults: [-1, 1] for uniform, [-3, 3] (~3 sigma) for standard normal;
// either can be overridden in config.
struct LatentPrior {
  PriorKind kind = PriorKind::kUniform;
  int dim = 0;
  double lo = -1.0;
  double hi = 1.0;

  static LatentPrior uniform(int dim, double lo = -1.0, double hi = 1.0);
  static LatentPrior standard_normal(int dim, double lo = -3.0,
                                     double hi = 3.0);
  void validate() const;
};

// A batch of latent vectors stored contiguously, row-major [count, dim].
struct LatentBatch {
  int dim = 0;
  int64_t count = 0;
  std::vector<float> values;

  float* row(int64_t i) { return values.data() + i * dim; }
  const float* row(int64_t i) const { return values.data() + i * dim; }
  std::vector<float> row_vec(int64_t i) const {
    return std::vector<float>(row(i), row(i) + dim);
  }
};

LatentBatch sample_prior(const LatentPrior& prior, int64_t n, uint64_t seed);

// Coordinates outside (lo, hi) are replaced with fresh uniform draws
// strictly inside; in-range coordinates pass through untouched.
std::vector<float> stochastic_clip(const std::vector<float>& z, double lo,
                                   double hi, Rng& rng);
void stochastic_clip_inplace(float* z, int dim, double lo, double hi,
                             Rng& rng);
void stochastic_clip_inplace(double* z, int dim, double lo, double hi,
                             Rng& rng);

// Projection onto [lo, hi]; idempotent.
std::vector<float> hard_clip(const std::vector<float>& z, double lo,
                             double hi);
void hard_clip_inplace(float* z, int dim, double lo, double hi);
void hard_clip_inplace(double* z, int dim, double lo, double hi);

// Flat binary container: "ZVEC1", dim as int32, count as int64,
// then row-major float32.
void save_latent_batch(const LatentBatch& batch, const std::string& path);
LatentBatch load_latent_batch(const std::string& path);

}  // namespace gi
