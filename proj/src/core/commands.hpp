#pragma once

#include <string>

#include "config.hpp"
#include "eval.hpp"

namespace gi {

// Command-level entry points backing the CLI. Each command validates its
// inputs, does the work, and writes outputs under cfg.out_dir using
// write-to-temp-then-rename so failures leave no partial files.

// Trains the desk GAN on images from dataset.real_dir; writes
// generator.gckpt and gan_loss.tsv.
std::string cmd_train_gan(const RunConfig& cfg);

// Samples the prior and renders paired data; writes dataset/latents.zvec
// and dataset/img_NNNNN.ppm.
std::string cmd_build_dataset(const RunConfig& cfg);

// Trains the encoder in the configured regime; writes encoder.eckpt,
// extractor.fckpt and encoder_train_log.tsv.
std::string cmd_train_encoder(const RunConfig& cfg);

// Recovers latents for the configured targets with one method
// ("descent", "descent-clip" or "encoder"); writes inversions.jsonl and
// per-target reconstruction images.
std::string cmd_invert(const RunConfig& cfg, const std::string& method);

// Metrics for a single method; writes report files for that method.
EvalReport cmd_evaluate(const RunConfig& cfg, const std::string& method);

// Benchmarks every configured method, writes report.{csv,json,md} and a
// side-by-side image grid (targets in the first column).
EvalReport cmd_compare(const RunConfig& cfg);

void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace gi
