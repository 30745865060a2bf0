#include "dsgan/cli/commands.hpp"

#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "dsgan/cli/run_config.hpp"
#include "dsgan/core/error.hpp"
#include "dsgan/data/png_io.hpp"
#include "dsgan/evaluation/report.hpp"
#include "dsgan/models/checkpoint.hpp"
#include "dsgan/training/trainer.hpp"

namespace dsgan {
namespace {

constexpr std::uint64_t kSamplerSalt = 0x5a3d1c2b9e8f7a61ULL;

void write_snapshot(const std::filesystem::path& path, const KeyValueText& kv) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << kv.format();
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

KeyValueText parse_overrides(const std::vector<std::string>& items) {
  KeyValueText kv;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--set expects key=value, got '" + item + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv.set(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
  }
  return kv;
}

RunConfig resolve_config(const std::string& config_path, const std::vector<std::string>& sets) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
  cfg.apply(parse_overrides(sets));
  return cfg;
}

std::string sample_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%04zu.png", i);
  return buf;
}

struct ToyFlags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::string> kind, orientation;
  std::optional<std::size_t> height, width;
  std::optional<int> band_width;
  std::optional<double> channel_fraction, meander;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_make_toy_data(const ToyFlags& f, std::ostream& out) {
  RunConfig cfg = resolve_config(f.config, f.sets);
  KeyValueText flags;
  if (f.kind) flags.set("toy_kind", *f.kind);
  if (f.orientation) flags.set("toy_orientation", *f.orientation);
  if (f.height) flags.set("toy_height", std::to_string(*f.height));
  if (f.width) flags.set("toy_width", std::to_string(*f.width));
  if (f.band_width) flags.set("toy_band_width", std::to_string(*f.band_width));
  if (f.channel_fraction) flags.set("toy_channel_fraction", format_double(*f.channel_fraction));
  if (f.meander) flags.set("toy_meander", format_double(*f.meander));
  if (f.seed) flags.set("toy_seed", std::to_string(*f.seed));
  cfg.apply(flags);

  KeyValueText snapshot;
  for (const auto& [k, v] : cfg.to_text().entries())
    if (k.rfind("toy_", 0) == 0) snapshot.set(k, v);

  const SourceImage img = make_toy_texture(cfg.toy_kind, cfg.toy_height, cfg.toy_width, cfg.toy, cfg.toy_seed);
  std::filesystem::path path(f.out);
  if (path.is_relative())
    if (const char* root = std::getenv("DSGAN_OUTPUT_ROOT"); root != nullptr && *root != '\0')
      path = std::filesystem::path(root) / path;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_source(path, img);
  write_snapshot(path.string() + ".config.txt", snapshot);
  out << "wrote " << path.string() << " (" << img.height << "x" << img.width << ")\n";
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets, const std::string& output_dir,
              const std::string& resume, std::ostream& out) {
  RunConfig cfg = resolve_config(config_path, sets);
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  cfg.validate();
  if (!resume.empty() && !std::filesystem::is_regular_file(resume))
    throw ValidationError("resume checkpoint '" + resume + "' does not exist");

  const auto dir = cfg.resolved_output_dir();
  const KeyValueText snapshot = cfg.to_text();
  write_snapshot(dir / "run_config.txt", snapshot);

  auto source = std::make_shared<const SourceImage>(cfg.load_training_image());
  PatchSampler sampler(source, cfg.patch_size, cfg.train.seed ^ kSamplerSalt);
  std::optional<Trainer> trainer;
  if (resume.empty())
    trainer.emplace(cfg.train, std::move(sampler), cfg.generator_spec(), cfg.discriminator_spec());
  else
    trainer.emplace(cfg.train, std::move(sampler), load_checkpoint(resume));

  TrainOutputs outputs{dir, snapshot, [&](const TrainLogRecord& r) {
                         if (r.step % cfg.train.minibatches_per_epoch == 0)
                           out << "epoch " << r.epoch << "/" << cfg.train.epochs << "  step " << r.step
                               << "  loss_G " << r.loss_g << "  loss_D " << r.loss_d << "  D(real) "
                               << r.mean_d_real << "  D(fake) " << r.mean_d_fake << "  " << r.wall_seconds
                               << " s\n"
                               << std::flush;
                       }};
  train(*trainer, outputs);
  out << "wrote " << (dir / "checkpoint_final.ckpt").string() << "\n";
  return kExitOk;
}

struct GenerateFlags {
  std::string checkpoint, out;
  std::size_t noise_h = 12, noise_w = 12, count = 4;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateFlags& f, std::ostream& out) {
  if (f.count < 1) throw ValidationError("--count must be >= 1");
  if (f.noise_h < 1 || f.noise_w < 1) throw ValidationError("--noise-h and --noise-w must be >= 1");
  if (!std::filesystem::is_regular_file(f.checkpoint))
    throw ValidationError("checkpoint '" + f.checkpoint + "' does not exist");
  const Checkpoint ck = load_checkpoint(f.checkpoint);
  std::filesystem::path dir(f.out);
  if (dir.is_relative())
    if (const char* root = std::getenv("DSGAN_OUTPUT_ROOT"); root != nullptr && *root != '\0')
      dir = std::filesystem::path(root) / dir;
  std::filesystem::create_directories(dir);

  KeyValueText snapshot;
  snapshot.set("checkpoint", f.checkpoint);
  snapshot.set("noise_h", std::to_string(f.noise_h));
  snapshot.set("noise_w", std::to_string(f.noise_w));
  snapshot.set("count", std::to_string(f.count));
  snapshot.set("seed", std::to_string(f.seed));
  write_snapshot(dir / "generate_config.txt", snapshot);

  const auto images = generate(ck, f.noise_h, f.noise_w, f.count, f.seed);
  for (std::size_t i = 0; i < images.size(); ++i) write_png(dir / sample_name(i), images[i]);
  out << "wrote " << images.size() << " images of " << images.front().height() << "x" << images.front().width()
      << " to " << dir.string() << "\n";
  return kExitOk;
}

struct EvaluateFlags {
  std::string config, real_dir, synthetic_dir, checkpoint, out;
  std::vector<std::string> sets;
  std::optional<std::size_t> count;
  std::optional<std::uint64_t> seed;
};

// evaluate_config.txt also records the input sets; when such a snapshot is
// passed back as --config those keys fill in the flags that were not given.
int cmd_evaluate(EvaluateFlags f, std::ostream& out) {
  RunConfig cfg;
  if (!f.config.empty()) {
    std::ifstream in(f.config, std::ios::binary);
    if (!in) throw ValidationError("cannot open config '" + f.config + "'");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    KeyValueText kv, rest;
    try {
      kv = KeyValueText::parse(text);
    } catch (const FormatError& e) {
      throw ValidationError("config '" + f.config + "': " + e.what());
    }
    const bool synthetic_given = !f.synthetic_dir.empty() || !f.checkpoint.empty();
    for (const auto& [k, v] : kv.entries()) {
      if (k == "real_dir") {
        if (f.real_dir.empty()) f.real_dir = v;
      } else if (k == "synthetic_dir" || k == "checkpoint") {
        if (!synthetic_given) (k == "checkpoint" ? f.checkpoint : f.synthetic_dir) = v;
      } else {
        rest.set(k, v);
      }
    }
    cfg = RunConfig::from_text(rest);
  }
  cfg.apply(parse_overrides(f.sets));
  if (f.count) cfg.eval_count = *f.count;
  if (f.seed) cfg.eval_seed = *f.seed;
  if (f.synthetic_dir.empty() == f.checkpoint.empty())
    throw ValidationError("give exactly one of --synthetic-dir or --checkpoint");
  if (!f.checkpoint.empty() && !std::filesystem::is_regular_file(f.checkpoint))
    throw ValidationError("checkpoint '" + f.checkpoint + "' does not exist");
  if (f.real_dir.empty()) cfg.validate();
  else {
    cfg.metrics.validate();
    if (cfg.eval_count < 1) throw ValidationError("eval_count must be >= 1");
  }

  std::filesystem::path dir = f.out.empty() ? cfg.resolved_output_dir() / "evaluation" : std::filesystem::path(f.out);
  if (dir.is_relative() && !f.out.empty())
    if (const char* root = std::getenv("DSGAN_OUTPUT_ROOT"); root != nullptr && *root != '\0')
      dir = std::filesystem::path(root) / dir;

  KeyValueText snapshot = cfg.to_text();
  snapshot.set("real_dir", f.real_dir);
  snapshot.set("synthetic_dir", f.synthetic_dir);
  snapshot.set("checkpoint", f.checkpoint);
  write_snapshot(dir / "evaluate_config.txt", snapshot);

  std::vector<TextureImage> real;
  if (!f.real_dir.empty()) {
    real = load_image_dir(f.real_dir);
  } else {
    auto source = std::make_shared<const SourceImage>(cfg.load_training_image());
    PatchSampler sampler(source, cfg.patch_size, cfg.eval_seed);
    for (std::size_t i = 0; i < cfg.eval_count; ++i) real.push_back(sampler.sample());
  }

  std::vector<TextureImage> synthetic;
  std::string checkpoint_id = "dir:" + f.synthetic_dir;
  if (!f.synthetic_dir.empty()) {
    synthetic = load_image_dir(f.synthetic_dir);
  } else {
    const Checkpoint ck = load_checkpoint(f.checkpoint);
    const std::size_t up = ck.generator.upscale();
    const std::size_t h = real.front().height(), w = real.front().width();
    if (h % up != 0 || w % up != 0)
      throw ValidationError("real images (" + std::to_string(h) + "x" + std::to_string(w) +
                            ") are not a multiple of the generator upscale " + std::to_string(up));
    synthetic = generate(ck, h / up, w / up, cfg.eval_count, cfg.eval_seed + 1);
    checkpoint_id = std::filesystem::path(f.checkpoint).filename().string() + "@step=" + std::to_string(ck.step);
  }

  MetricsReport report = evaluate(real, synthetic, cfg.metrics);
  report.config_snapshot = snapshot;
  report.checkpoint_id = checkpoint_id;
  emit_report(report, dir);
  out << summary_table(report) << "wrote " << (dir / "report.json").string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dilated spatial GAN for ergodic binary textures"};
  app.require_subcommand(1);

  ToyFlags toy;
  auto* make = app.add_subcommand("make-toy-data", "Write a procedural binary texture PNG");
  make->add_option("--config", toy.config, "Run config file (toy_* keys)");
  make->add_option("--set", toy.sets, "Override a config key, key=value");
  make->add_option("--kind", toy.kind, "stripes or channels");
  make->add_option("--height", toy.height);
  make->add_option("--width", toy.width);
  make->add_option("--band-width", toy.band_width);
  make->add_option("--orientation", toy.orientation, "vertical or horizontal");
  make->add_option("--channel-fraction", toy.channel_fraction);
  make->add_option("--meander", toy.meander);
  make->add_option("--seed", toy.seed);
  make->add_option("--out", toy.out, "Output PNG path")->required();

  std::string train_config, train_out, resume;
  std::vector<std::string> train_sets;
  auto* train_cmd = app.add_subcommand("train", "Train generator and discriminator");
  train_cmd->add_option("--config", train_config, "Run config file");
  train_cmd->add_option("--set", train_sets, "Override a config key, key=value");
  train_cmd->add_option("--output-dir", train_out, "Overrides output_dir");
  train_cmd->add_option("--resume", resume, "Continue from a checkpoint");

  GenerateFlags gen;
  auto* gen_cmd = app.add_subcommand("generate", "Sample images from a trained generator");
  gen_cmd->add_option("--checkpoint", gen.checkpoint)->required();
  gen_cmd->add_option("--noise-h", gen.noise_h, "Noise grid rows");
  gen_cmd->add_option("--noise-w", gen.noise_w, "Noise grid columns");
  gen_cmd->add_option("--count", gen.count);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  EvaluateFlags ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compare real and synthetic image sets");
  eval_cmd->add_option("--config", ev.config, "Run config file");
  eval_cmd->add_option("--set", ev.sets, "Override a config key, key=value");
  eval_cmd->add_option("--real-dir", ev.real_dir, "Directory of real PNGs (default: patches of the training image)");
  eval_cmd->add_option("--synthetic-dir", ev.synthetic_dir, "Directory of synthetic PNGs");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Generate the synthetic set from this checkpoint");
  eval_cmd->add_option("--count", ev.count, "Overrides eval_count");
  eval_cmd->add_option("--seed", ev.seed, "Overrides eval_seed");
  eval_cmd->add_option("--out", ev.out, "Report directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (make->parsed()) return cmd_make_toy_data(toy, out);
    if (train_cmd->parsed()) return cmd_train(train_config, train_sets, train_out, resume, out);
    if (gen_cmd->parsed()) return cmd_generate(gen, out);
    if (eval_cmd->parsed()) return cmd_evaluate(ev, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace dsgan
