#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "imageio.hpp"

namespace gi {

namespace fs = std::filesystem;

void write_text_atomic(const std::string& path, const std::string& text) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + tmp);
    f << text;
    if (!f) throw IoError("write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

namespace {

void ensure_out_dir(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
}

GeneratorModel load_or_build_generator(const RunConfig& cfg) {
  if (!cfg.generator_checkpoint.empty())
    return GeneratorModel::load(cfg.generator_checkpoint);
  // No checkpoint: a fixed-seed random generator (useful for smoke runs
  // and synthetic benchmarks).
  return GeneratorModel::build(cfg.generator_arch,
                               Rng::derive_seed(cfg.seed, 0x9e4));
}

FeatureExtractor load_or_build_extractor(const RunConfig& cfg) {
  if (!cfg.extractor_checkpoint.empty())
    return FeatureExtractor::load(cfg.extractor_checkpoint);
  return FeatureExtractor::build(cfg.extractor_arch, cfg.extractor_seed);
}

// Benchmark/eval targets: real images when a directory is configured,
// otherwise freshly generated ones with a derived seed.
Tensor make_targets(const RunConfig& cfg, const GeneratorModel& gen) {
  const auto& a = gen.arch();
  if (!cfg.dataset.real_dir.empty()) {
    Tensor all = ingest_image_dir(cfg.dataset.real_dir, a.image_c, a.image_h,
                                  a.image_w);
    int n = std::min(cfg.dataset.n_targets, all.dim(0));
    Tensor out({n, a.image_c, a.image_h, a.image_w});
    std::copy_n(all.data(), out.size(), out.data());
    return out;
  }
  LatentBatch z = sample_prior(cfg.prior, cfg.dataset.n_targets,
                               Rng::derive_seed(cfg.seed, 0x7a));
  return gen.generate(z);
}

Tensor single_target(const Tensor& targets, int i) {
  int c = targets.dim(1), h = targets.dim(2), w = targets.dim(3);
  const size_t sz = static_cast<size_t>(c) * h * w;
  Tensor t({1, c, h, w});
  std::copy_n(targets.data() + i * sz, sz, t.data());
  return t;
}

BenchMethod make_descent_method(const RunConfig& cfg,
                                const GeneratorModel& gen, ClipMode clip,
                                const std::string& name) {
  InversionConfig ic = cfg.inversion_config();
  ic.clip_mode = clip;
  LatentPrior prior = cfg.prior;
  const GeneratorModel* g = &gen;
  return {name, [g, prior, ic](const Tensor& targets) {
            std::vector<Tensor> ts;
            for (int i = 0; i < targets.dim(0); ++i)
              ts.push_back(single_target(targets, i));
            auto results = invert_batch(*g, ts, prior, ic);
            Tensor recs(targets.shape());
            const size_t sz = Tensor::numel(
                {targets.dim(1), targets.dim(2), targets.dim(3)});
            for (size_t i = 0; i < results.size(); ++i) {
              Tensor img = g->generate_one(results[i].z_final);
              std::copy_n(img.data(), sz, recs.data() + i * sz);
            }
            return recs;
          }};
}

BenchMethod make_encoder_method(const GeneratorModel& gen,
                                std::shared_ptr<EncoderModel> enc,
                                const std::string& name) {
  const GeneratorModel* g = &gen;
  return {name, [g, enc](const Tensor& targets) {
            return g->generate(enc->encode_batch(targets));
          }};
}

std::shared_ptr<EncoderModel> load_encoder_checked(const std::string& path,
                                                   const RunConfig& cfg) {
  if (path.empty())
    throw ConfigError("encoder method requested but no checkpoint configured");
  auto enc = std::make_shared<EncoderModel>(EncoderModel::load(path));
  if (enc->latent_dim() != cfg.prior.dim)
    throw ConfigError("encoder checkpoint latent_dim does not match prior");
  return enc;
}

BenchMethod make_method(const std::string& name, const RunConfig& cfg,
                        const GeneratorModel& gen) {
  if (name == "descent")
    return make_descent_method(cfg, gen, ClipMode::kNone, name);
  if (name == "descent-clip")
    return make_descent_method(cfg, gen, ClipMode::kStochastic, name);
  if (name == "encoder")
    return make_encoder_method(
        gen, load_encoder_checked(cfg.encoder_checkpoint, cfg), name);
  if (name == "encoder-pixel")
    return make_encoder_method(
        gen,
        load_encoder_checked(cfg.compare.encoder_pixel_checkpoint.empty()
                                 ? cfg.encoder_checkpoint
                                 : cfg.compare.encoder_pixel_checkpoint,
                             cfg),
        name);
  if (name == "encoder-pixel-perceptual")
    return make_encoder_method(
        gen,
        load_encoder_checked(
            cfg.compare.encoder_perceptual_checkpoint.empty()
                ? cfg.encoder_checkpoint
                : cfg.compare.encoder_perceptual_checkpoint,
            cfg),
        name);
  throw ConfigError("unknown method: " + name);
}

void write_report_files(const RunConfig& cfg, const EvalReport& report,
                        const std::string& stem) {
  write_text_atomic(cfg.out_dir + "/" + stem + ".csv",
                    render_report(report, ReportFormat::kCsv));
  write_text_atomic(cfg.out_dir + "/" + stem + ".json",
                    render_report(report, ReportFormat::kJson));
  write_text_atomic(cfg.out_dir + "/" + stem + ".md",
                    render_report(report, ReportFormat::kMarkdown));
}

}  // namespace

std::string cmd_train_gan(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  if (cfg.dataset.real_dir.empty())
    throw ConfigError("train-gan needs dataset.real_dir");
  const auto& a = cfg.generator_arch;
  Tensor data =
      ingest_image_dir(cfg.dataset.real_dir, a.image_c, a.image_h, a.image_w);
  GanTrainConfig gc;
  gc.epochs = cfg.gan_train.epochs;
  gc.batch_size = cfg.gan_train.batch_size;
  gc.lr = cfg.gan_train.lr;
  gc.latent_dim = cfg.prior.dim;
  gc.arch = cfg.generator_arch;
  GanTrainResult res = train_desk_gan(data, gc, cfg.seed);

  std::string ckpt = cfg.out_dir + "/generator.gckpt";
  res.generator.save(ckpt);
  std::string log = "epoch\tg_loss\td_loss\n";
  for (size_t e = 0; e < res.g_loss.size(); ++e)
    log += std::to_string(e + 1) + "\t" + format_number(res.g_loss[e]) + "\t" +
           format_number(res.d_loss[e]) + "\n";
  write_text_atomic(cfg.out_dir + "/gan_loss.tsv", log);
  return ckpt;
}

std::string cmd_build_dataset(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  GeneratorModel gen = load_or_build_generator(cfg);
  PairedDataset data = build_generated_dataset(
      gen, cfg.prior, cfg.dataset.generated_count, cfg.seed);
  std::string dir = cfg.out_dir + "/dataset";
  fs::create_directories(dir);
  save_latent_batch(data.latents, dir + "/latents.zvec");
  const auto& a = gen.arch();
  const size_t sz = static_cast<size_t>(a.image_c) * a.image_h * a.image_w;
  for (int64_t i = 0; i < data.count(); ++i) {
    Tensor img({a.image_c, a.image_h, a.image_w});
    std::copy_n(data.images.data() + i * sz, sz, img.data());
    char name[32];
    std::snprintf(name, sizeof(name), "/img_%05lld.ppm",
                  static_cast<long long>(i));
    save_image(img, dir + name);
  }
  return dir;
}

std::string cmd_train_encoder(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  GeneratorModel gen = load_or_build_generator(cfg);
  FeatureExtractor extractor = load_or_build_extractor(cfg);
  EncoderModel enc =
      EncoderModel::build(cfg.encoder_arch, Rng::derive_seed(cfg.seed, 0xec));

  PairedDataset gen_data = build_generated_dataset(
      gen, cfg.prior, cfg.dataset.generated_count,
      Rng::derive_seed(cfg.seed, 0xda));

  std::vector<EpochLog> log;
  EncoderTrainConfig tc = cfg.encoder_train;
  tc.seed = cfg.seed;
  if (tc.regime == TrainRegime::kAlternating) {
    if (cfg.dataset.real_dir.empty())
      throw ConfigError("alternating regime needs dataset.real_dir");
    const auto& a = gen.arch();
    PairedDataset real_data;
    real_data.images = ingest_image_dir(cfg.dataset.real_dir, a.image_c,
                                        a.image_h, a.image_w);
    log = train_alternating(enc, gen, extractor, gen_data, real_data, tc);
  } else {
    log = train_on_generated(enc, gen, extractor, gen_data, tc);
  }

  std::string ckpt = cfg.out_dir + "/encoder.eckpt";
  enc.save(ckpt);
  extractor.save(cfg.out_dir + "/extractor.fckpt");
  write_text_atomic(cfg.out_dir + "/encoder_train_log.tsv",
                    epoch_log_text(log));
  return ckpt;
}

std::string cmd_invert(const RunConfig& cfg, const std::string& method) {
  ensure_out_dir(cfg);
  GeneratorModel gen = load_or_build_generator(cfg);
  Tensor targets = make_targets(cfg, gen);
  const int n = targets.dim(0);
  const size_t sz =
      static_cast<size_t>(targets.dim(1)) * targets.dim(2) * targets.dim(3);

  std::vector<InversionResult> results;
  if (method == "descent" || method == "descent-clip") {
    InversionConfig ic = cfg.inversion_config();
    if (method == "descent-clip") ic.clip_mode = ClipMode::kStochastic;
    if (cfg.inversion.init == "encoder") {
      auto enc = load_encoder_checked(cfg.encoder_checkpoint, cfg);
      std::vector<Tensor> ts;
      for (int i = 0; i < n; ++i) ts.push_back(single_target(targets, i));
      results.reserve(n);
      for (int i = 0; i < n; ++i) {
        InversionConfig c = ic;
        c.seed = ic.seed + i;
        c.init_z = enc->encode(ts[i]);
        results.push_back(invert(gen, ts[i], cfg.prior, c));
      }
    } else {
      std::vector<Tensor> ts;
      for (int i = 0; i < n; ++i) ts.push_back(single_target(targets, i));
      results = invert_batch(gen, ts, cfg.prior, ic);
    }
  } else if (method == "encoder") {
    auto enc = load_encoder_checked(cfg.encoder_checkpoint, cfg);
    for (int i = 0; i < n; ++i) {
      auto t0 = std::chrono::steady_clock::now();
      InversionResult r;
      r.z_final = enc->encode(single_target(targets, i));
      auto t1 = std::chrono::steady_clock::now();
      r.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
      results.push_back(std::move(r));
    }
  } else {
    throw ConfigError("unknown invert method: " + method);
  }

  save_inversion_results(results, cfg.out_dir + "/inversions.jsonl");
  fs::create_directories(cfg.out_dir + "/reconstructions");
  for (int i = 0; i < n; ++i) {
    if (results[i].z_final.empty()) continue;  // isolated per-target failure
    Tensor rec = gen.generate_one(results[i].z_final);
    char name[48];
    std::snprintf(name, sizeof(name), "/reconstructions/rec_%05d.ppm", i);
    save_image(rec, cfg.out_dir + name);
    std::snprintf(name, sizeof(name), "/reconstructions/target_%05d.ppm", i);
    save_image(single_target(targets, i), cfg.out_dir + name);
  }
  return cfg.out_dir + "/inversions.jsonl";
}

EvalReport cmd_evaluate(const RunConfig& cfg, const std::string& method) {
  ensure_out_dir(cfg);
  GeneratorModel gen = load_or_build_generator(cfg);
  FeatureExtractor extractor = load_or_build_extractor(cfg);
  Tensor targets = make_targets(cfg, gen);
  EvalReport report =
      benchmark({make_method(method, cfg, gen)}, targets, extractor, cfg.seed);
  report.generator_id = cfg.generator_checkpoint.empty()
                            ? "builtin"
                            : cfg.generator_checkpoint;
  report.config_hash = cfg.hash();
  write_report_files(cfg, report, "evaluate_" + method);
  return report;
}

EvalReport cmd_compare(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  GeneratorModel gen = load_or_build_generator(cfg);
  FeatureExtractor extractor = load_or_build_extractor(cfg);
  Tensor targets = make_targets(cfg, gen);
  std::vector<BenchMethod> methods;
  for (const auto& name : cfg.compare.methods)
    methods.push_back(make_method(name, cfg, gen));
  EvalReport report = benchmark(methods, targets, extractor, cfg.seed);
  report.generator_id = cfg.generator_checkpoint.empty()
                            ? "builtin"
                            : cfg.generator_checkpoint;
  report.config_hash = cfg.hash();
  write_report_files(cfg, report, "report");

  // Figure-style grid: targets first, one column per method.
  const int grid_rows = std::min(8, targets.dim(0));
  std::vector<std::string> names{"target"};
  std::vector<std::vector<Tensor>> columns(1);
  for (int i = 0; i < grid_rows; ++i)
    columns[0].push_back(single_target(targets, i));
  for (const auto& m : methods) {
    Tensor recs = m.reconstruct(targets);
    names.push_back(m.name);
    columns.emplace_back();
    for (int i = 0; i < grid_rows; ++i)
      columns.back().push_back(single_target(recs, i));
  }
  emit_image_grid(names, columns, cfg.out_dir + "/grid.ppm");
  return report;
}

}  // namespace gi
