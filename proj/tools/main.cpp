// Command-line front end. Talks to the core strictly through the C API;
// flag overrides are applied to the JSON config before handing it over.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ganinvert.h"

using nlohmann::json;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<unsigned long long> seed;
};

json load_config_json(const GlobalOpts& g) {
  json j = json::object();
  if (!g.config_path.empty()) {
    std::ifstream f(g.config_path);
    if (!f) throw CLI::ValidationError("--config", "cannot open " + g.config_path);
    std::ostringstream ss;
    ss << f.rdbuf();
    j = json::parse(ss.str());
  }
  if (!g.out_dir.empty()) j["out_dir"] = g.out_dir;
  if (g.seed) j["seed"] = *g.seed;
  return j;
}

int fail(gi_status st) {
  std::cerr << "error: " << gi_last_error() << "\n";
  return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GAN-inversion toolkit: latent recovery by descent or encoder"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--out", g.out_dir, "output directory (overrides config)");
  app.add_option("--seed", g.seed, "seed (overrides config)");

  auto* train_gan = app.add_subcommand("train-gan", "train the desk GAN");
  auto* build_dataset =
      app.add_subcommand("build-dataset", "render a paired (image, z) dataset");
  auto* train_encoder =
      app.add_subcommand("train-encoder", "train the encoder inverse map");

  auto* invert = app.add_subcommand("invert", "recover latents for targets");
  std::string method = "descent";
  std::optional<int> iterations;
  std::optional<double> lr;
  std::optional<std::string> clip;
  invert->add_option("--method", method, "descent|descent-clip|encoder")
      ->check(CLI::IsMember({"descent", "descent-clip", "encoder"}));
  invert->add_option("--iterations", iterations, "descent iterations");
  invert->add_option("--lr", lr, "descent learning rate");
  invert->add_option("--clip", clip, "none|hard|stochastic")
      ->check(CLI::IsMember({"none", "hard", "stochastic"}));

  auto* evaluate = app.add_subcommand("evaluate", "metrics for one method");
  std::string eval_method = "encoder";
  evaluate->add_option("--method", eval_method,
                       "descent|descent-clip|encoder|encoder-pixel|"
                       "encoder-pixel-perceptual");

  auto* compare = app.add_subcommand(
      "compare", "benchmark all configured methods; report + image grid");

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg = load_config_json(g);
    if (iterations) cfg["inversion"]["iterations"] = *iterations;
    if (lr) cfg["inversion"]["lr"] = *lr;
    if (clip) cfg["inversion"]["clip"] = *clip;
    std::string text = cfg.dump();

    gi_status st = GI_OK;
    if (train_gan->parsed()) {
      st = gi_cmd_train_gan(text.c_str());
    } else if (build_dataset->parsed()) {
      st = gi_cmd_build_dataset(text.c_str());
    } else if (train_encoder->parsed()) {
      st = gi_cmd_train_encoder(text.c_str());
    } else if (invert->parsed()) {
      st = gi_cmd_invert(text.c_str(), method.c_str());
    } else if (evaluate->parsed()) {
      char* report = nullptr;
      st = gi_cmd_evaluate(text.c_str(), eval_method.c_str(), &report);
      if (st == GI_OK && report) {
        std::cout << report;
        gi_buffer_free(report);
      }
    } else if (compare->parsed()) {
      char* report = nullptr;
      st = gi_cmd_compare(text.c_str(), &report);
      if (st == GI_OK && report) {
        std::cout << report;
        gi_buffer_free(report);
      }
    }
    if (st != GI_OK) return fail(st);
  } catch (const json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
