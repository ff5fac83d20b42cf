#pragma once

#include <optional>
#include <string>
#include <vector>

#include "encoder.hpp"
#include "generator.hpp"
#include "latent.hpp"
#include "losses.hpp"
#include "optim.hpp"

namespace gi {

// Full run configuration. Parsed from JSON; unknown keys are rejected so
// typos fail before any work starts. GANINVERT_SEED in the environment
// overrides the configured seed.
struct RunConfig {
  uint64_t seed = 1;
  std::string out_dir = "out";

  LatentPrior prior = LatentPrior::uniform(32);

  GeneratorArch generator_arch;
  std::string generator_checkpoint;

  ExtractorArch extractor_arch;
  std::string extractor_checkpoint;
  uint64_t extractor_seed = 77;

  EncoderArch encoder_arch;
  std::string encoder_checkpoint;

  struct {
    int epochs = 10;
    int batch_size = 32;
    double lr = 2e-4;
  } gan_train;

  EncoderTrainConfig encoder_train;
  LossWeights loss_weights;

  struct {
    int iterations = 200;
    double lr = 0.01;
    std::string loss = "mae";
    std::string clip = "none";
    std::optional<double> stop_threshold;
    std::string init = "prior";  // "prior" | "encoder"
    int restarts = 1;
  } inversion;

  struct {
    int64_t generated_count = 5000;
    std::string real_dir;
    int n_targets = 50;
  } dataset;

  struct {
    std::vector<std::string> methods = {"descent", "descent-clip",
                                        "encoder-pixel",
                                        "encoder-pixel-perceptual"};
    std::string encoder_pixel_checkpoint;
    std::string encoder_perceptual_checkpoint;
  } compare;

  InversionConfig inversion_config() const;

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
  std::string to_json_text() const;
  // FNV-1a of the canonical JSON form; recorded in reports.
  std::string hash() const;
};

}  // namespace gi
