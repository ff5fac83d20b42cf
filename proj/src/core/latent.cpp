#include "latent.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace gi {

std::string to_string(PriorKind k) {
  return k == PriorKind::kUniform ? "uniform" : "standard_normal";
}

PriorKind prior_kind_from_string(const std::string& s) {
  if (s == "uniform") return PriorKind::kUniform;
  if (s == "standard_normal" || s == "normal") return PriorKind::kStandardNormal;
  throw ConfigError("unknown prior kind: " + s);
}

LatentPrior LatentPrior::uniform(int dim, double lo, double hi) {
  LatentPrior p{PriorKind::kUniform, dim, lo, hi};
  p.validate();
  return p;
}

LatentPrior LatentPrior::standard_normal(int dim, double lo, double hi) {
  LatentPrior p{PriorKind::kStandardNormal, dim, lo, hi};
  p.validate();
  return p;
}

void LatentPrior::validate() const {
  if (dim < 1) throw ConfigError("latent prior dim must be >= 1");
  if (!(lo < hi)) throw ConfigError("latent prior bounds require lo < hi");
}

LatentBatch sample_prior(const LatentPrior& prior, int64_t n, uint64_t seed) {
  prior.validate();
  if (n < 0) throw ConfigError("sample count must be >= 0");
  LatentBatch batch;
  batch.dim = prior.dim;
  batch.count = n;
  batch.values.resize(static_cast<size_t>(n) * prior.dim);
  Rng rng(seed);
  for (auto& v : batch.values) {
    v = prior.kind == PriorKind::kUniform
            ? static_cast<float>(rng.uniform_closed(prior.lo, prior.hi))
            : static_cast<float>(rng.normal());
  }
  return batch;
}

template <typename T>
static void stochastic_clip_impl(T* z, int dim, double lo, double hi,
                                 Rng& rng) {
  for (int i = 0; i < dim; ++i) {
    double v = static_cast<double>(z[i]);
    if (v < lo || v > hi) z[i] = static_cast<T>(rng.uniform_open(lo, hi));
  }
}

void stochastic_clip_inplace(float* z, int dim, double lo, double hi,
                             Rng& rng) {
  stochastic_clip_impl(z, dim, lo, hi, rng);
}
void stochastic_clip_inplace(double* z, int dim, double lo, double hi,
                             Rng& rng) {
  stochastic_clip_impl(z, dim, lo, hi, rng);
}

std::vector<float> stochastic_clip(const std::vector<float>& z, double lo,
                                   double hi, Rng& rng) {
  if (!(lo < hi)) throw ConfigError("clip bounds require lo < hi");
  std::vector<float> out = z;
  stochastic_clip_inplace(out.data(), static_cast<int>(out.size()), lo, hi,
                          rng);
  return out;
}

template <typename T>
static void hard_clip_impl(T* z, int dim, double lo, double hi) {
  for (int i = 0; i < dim; ++i) {
    if (z[i] < lo) z[i] = static_cast<T>(lo);
    if (z[i] > hi) z[i] = static_cast<T>(hi);
  }
}

void hard_clip_inplace(float* z, int dim, double lo, double hi) {
  hard_clip_impl(z, dim, lo, hi);
}
void hard_clip_inplace(double* z, int dim, double lo, double hi) {
  hard_clip_impl(z, dim, lo, hi);
}

std::vector<float> hard_clip(const std::vector<float>& z, double lo,
                             double hi) {
  if (!(lo < hi)) throw ConfigError("clip bounds require lo < hi");
  std::vector<float> out = z;
  hard_clip_inplace(out.data(), static_cast<int>(out.size()), lo, hi);
  return out;
}

static constexpr char kZvecMagic[5] = {'Z', 'V', 'E', 'C', '1'};

void save_latent_batch(const LatentBatch& batch, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw PersistenceError("cannot open for writing: " + path);
  f.write(kZvecMagic, 5);
  int32_t dim = batch.dim;
  int64_t count = batch.count;
  f.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
  f.write(reinterpret_cast<const char*>(&count), sizeof(count));
  f.write(reinterpret_cast<const char*>(batch.values.data()),
          static_cast<std::streamsize>(batch.values.size() * sizeof(float)));
  if (!f) throw PersistenceError("write failed: " + path);
}

LatentBatch load_latent_batch(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw PersistenceError("cannot open for reading: " + path);
  char magic[5];
  f.read(magic, 5);
  if (!f || std::memcmp(magic, kZvecMagic, 5) != 0)
    throw PersistenceError("bad latent batch magic in " + path);
  int32_t dim = 0;
  int64_t count = 0;
  f.read(reinterpret_cast<char*>(&dim), sizeof(dim));
  f.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!f || dim < 1 || count < 0)
    throw PersistenceError("corrupt latent batch header in " + path);
  LatentBatch batch;
  batch.dim = dim;
  batch.count = count;
  batch.values.resize(static_cast<size_t>(count) * dim);
  f.read(reinterpret_cast<char*>(batch.values.data()),
         static_cast<std::streamsize>(batch.values.size() * sizeof(float)));
  if (!f) throw PersistenceError("truncated latent batch file: " + path);
  return batch;
}

}  // namespace gi
