// Command-line toolchain: synthetic data generation, training, evaluation,
// and inference over TMOV traffic movies.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "atg/checkpoint.hpp"
#include "atg/data.hpp"
#include "atg/features.hpp"
#include "atg/model.hpp"
#include "atg/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

// exit codes: 0 ok, 2 config, 3 I/O, 4 numeric abort
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

atg::Date parse_date_flag(const std::string& s) {
  std::string digits;
  for (char c : s)
    if (std::isdigit(static_cast<unsigned char>(c))) digits.push_back(c);
  return atg::parse_date_compact(digits);
}

atg::FeatureFlags parse_features(const std::string& name) {
  if (name == "all") return {true, true, true};
  if (name == "static") return {true, false, false};
  if (name == "dynamic") return {false, false, false};
  throw atg::ValueError("--features must be one of: dynamic, static, all");
}

std::string features_for_channels(int in_channels) {
  for (const char* name : {"all", "static", "dynamic"})
    if (atg::input_channel_count(parse_features(name)) == in_channels)
      return name;
  throw atg::ValueError("checkpoint expects " + std::to_string(in_channels) +
                        " input channels, which no feature preset produces");
}

void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const json& options) {
  json manifest;
  manifest["tool"] = "atgcast";
  manifest["version"] = kToolVersion;
  manifest["command"] = command;
  manifest["options"] = options;
  fs::create_directories(out_dir);
  std::ofstream os(fs::path(out_dir) / "run_manifest.json", std::ios::trunc);
  if (!os) throw atg::IoError("cannot write run manifest in " + out_dir);
  os << manifest.dump(2) << "\n";
}

// ---- gen --------------------------------------------------------------------

struct GenOptions {
  std::string out_dir;
  std::string city = "demo";
  std::uint64_t seed = 1;
  int height = 64;
  int width = 56;
  int days = 7;
  double density = 0.15;
  double noise = 1.0;
  std::string start_date = "2019-01-01";
};

json to_json(const GenOptions& o) {
  return {{"out", o.out_dir},     {"city", o.city},
          {"seed", o.seed},       {"height", o.height},
          {"width", o.width},     {"days", o.days},
          {"density", o.density}, {"noise", o.noise},
          {"start_date", o.start_date}};
}

GenOptions gen_from_json(const json& j) {
  GenOptions o;
  o.out_dir = j.at("out");
  o.city = j.at("city");
  o.seed = j.at("seed");
  o.height = j.at("height");
  o.width = j.at("width");
  o.days = j.at("days");
  o.density = j.at("density");
  o.noise = j.at("noise");
  o.start_date = j.at("start_date");
  return o;
}

void run_gen(const GenOptions& opt) {
  if (opt.days < 1) throw atg::ValueError("gen: --days must be >= 1");
  fs::create_directories(opt.out_dir);
  atg::SynthCity city = atg::synth_city(opt.seed, opt.height, opt.width,
                                        opt.density);
  city.static_map.city = opt.city;
  const std::string static_name = "static_" + opt.city + ".tmov";
  atg::write_static(city.static_map,
                    (fs::path(opt.out_dir) / static_name).string());

  std::vector<atg::ManifestEntry> entries;
  entries.push_back({static_name, opt.city});
  atg::Date date = parse_date_flag(opt.start_date);
  for (int i = 0; i < opt.days; ++i) {
    atg::TrafficMovie movie =
        atg::synth_movie(city, opt.seed + 1000 + static_cast<std::uint64_t>(i),
                         date, opt.noise);
    movie.city = opt.city;
    const std::string name =
        opt.city + "_" + atg::date_compact(date) + ".tmov";
    atg::write_movie(movie, (fs::path(opt.out_dir) / name).string());
    entries.push_back({name, opt.city});
    date = atg::add_days(date, 1);
  }
  atg::write_manifest((fs::path(opt.out_dir) / "manifest.txt").string(),
                      entries);
  write_run_manifest(opt.out_dir, "gen", to_json(opt));
  std::cout << "wrote " << opt.days << " movie(s) + 1 static map to "
            << opt.out_dir << "\n";
}

// ---- train ------------------------------------------------------------------

struct TrainOptions {
  std::string manifest;
  std::string val_manifest;
  std::string out_dir;
  std::string resume;
  int depth = 4;
  int base_channels = 16;
  int multiplier = 2;
  int growth = 8;
  bool no_attention = false;
  int steps = 2650;
  int batch = 2;
  double lr = 3e-4;
  std::uint64_t seed = 1;
  std::vector<int> eval_at = {1000, 2000, 2650};
  std::string features = "all";
  bool multi_city = false;
  bool no_deterministic = false;
};

json to_json(const TrainOptions& o) {
  return {{"manifest", o.manifest},
          {"val_manifest", o.val_manifest},
          {"out", o.out_dir},
          {"resume", o.resume},
          {"depth", o.depth},
          {"base_channels", o.base_channels},
          {"multiplier", o.multiplier},
          {"growth", o.growth},
          {"no_attention", o.no_attention},
          {"steps", o.steps},
          {"batch", o.batch},
          {"lr", o.lr},
          {"seed", o.seed},
          {"eval_at", o.eval_at},
          {"features", o.features},
          {"multi_city", o.multi_city},
          {"no_deterministic", o.no_deterministic}};
}

TrainOptions train_from_json(const json& j) {
  TrainOptions o;
  o.manifest = j.at("manifest");
  o.val_manifest = j.at("val_manifest");
  o.out_dir = j.at("out");
  o.resume = j.at("resume");
  o.depth = j.at("depth");
  o.base_channels = j.at("base_channels");
  o.multiplier = j.at("multiplier");
  o.growth = j.at("growth");
  o.no_attention = j.at("no_attention");
  o.steps = j.at("steps");
  o.batch = j.at("batch");
  o.lr = j.at("lr");
  o.seed = j.at("seed");
  o.eval_at = j.at("eval_at").get<std::vector<int>>();
  o.features = j.at("features");
  o.multi_city = j.at("multi_city");
  o.no_deterministic = j.at("no_deterministic");
  return o;
}

void run_train(const TrainOptions& opt) {
  atg::TrainConfig cfg;
  cfg.batch_size = opt.batch;
  cfg.learning_rate = opt.lr;
  cfg.max_steps = opt.steps;
  cfg.eval_at = opt.eval_at;
  cfg.seed = opt.seed;
  cfg.features = parse_features(opt.features);
  cfg.multi_city = opt.multi_city;
  cfg.deterministic = !opt.no_deterministic;
  cfg.validate();

  atg::ModelConfig mc;
  mc.depth = opt.depth;
  mc.base_channels = opt.base_channels;
  mc.channel_multiplier = opt.multiplier;
  mc.growth = opt.growth;
  mc.in_channels = atg::input_channel_count(cfg.features);
  mc.out_channels = atg::target_channel_count();
  mc.attention_enabled = !opt.no_attention;
  mc.validate();

  atg::UNetModel model;
  atg::AdamState adam;
  std::uint64_t start_step = 0;
  if (!opt.resume.empty()) {
    atg::CheckpointExtras extras;
    model = atg::load_checkpoint(opt.resume, &extras);
    if (atg::config_digest(model.config) != atg::config_digest(mc))
      throw atg::ValueError(
          "resume: checkpoint config does not match requested config");
    start_step = extras.global_step;
    if (extras.has_optimizer) {
      adam.beta1 = extras.beta1;
      adam.beta2 = extras.beta2;
      adam.epsilon = extras.epsilon;
      adam.step = extras.optimizer_step;
      adam.m = std::move(extras.m);
      adam.v = std::move(extras.v);
    }
  } else {
    model = atg::build_model<float>(mc, opt.seed);
  }

  atg::DataSource train_data = atg::DataSource::from_manifest(opt.manifest);
  std::optional<atg::DataSource> val_data;
  if (!opt.val_manifest.empty())
    val_data = atg::DataSource::from_manifest(opt.val_manifest);

  write_run_manifest(opt.out_dir, "train", to_json(opt));
  auto records = atg::train(model, adam, train_data,
                            val_data ? &*val_data : nullptr, cfg, opt.out_dir,
                            start_step);
  for (const auto& r : records)
    std::cout << "step " << r.step << "  mse " << std::scientific
              << std::setprecision(9) << r.mse << "\n";

  // always leave a final checkpoint even when no eval step hit
  atg::CheckpointExtras extras;
  extras.global_step = static_cast<std::uint64_t>(cfg.max_steps);
  extras.has_optimizer = true;
  extras.beta1 = adam.beta1;
  extras.beta2 = adam.beta2;
  extras.epsilon = adam.epsilon;
  extras.learning_rate = adam.learning_rate;
  extras.optimizer_step = adam.step;
  extras.m = adam.m;
  extras.v = adam.v;
  atg::save_checkpoint(model, (fs::path(opt.out_dir) / "latest.ckpt").string(),
                       &extras);
}

// ---- eval -------------------------------------------------------------------

struct EvalOptions {
  std::string checkpoint;
  std::string manifest;
  std::string out_dir;
  std::string features;  // inferred from checkpoint when empty
  bool baseline = false;
  bool rescaled = false;
  bool multi_city = false;
};

json to_json(const EvalOptions& o) {
  return {{"checkpoint", o.checkpoint}, {"manifest", o.manifest},
          {"out", o.out_dir},           {"features", o.features},
          {"baseline", o.baseline},     {"rescaled", o.rescaled},
          {"multi_city", o.multi_city}};
}

EvalOptions eval_from_json(const json& j) {
  EvalOptions o;
  o.checkpoint = j.at("checkpoint");
  o.manifest = j.at("manifest");
  o.out_dir = j.at("out");
  o.features = j.at("features");
  o.baseline = j.at("baseline");
  o.rescaled = j.at("rescaled");
  o.multi_city = j.at("multi_city");
  return o;
}

void print_record(const atg::MetricsRecord& r, bool rescaled) {
  std::cout << r.split << "  mse " << std::scientific << std::setprecision(9)
            << r.mse;
  if (rescaled) std::cout << "  (x255^2: " << r.mse * 255.0 * 255.0 << ")";
  std::cout << "\n  horizons:";
  for (double h : r.horizon_mse) std::cout << " " << h;
  std::cout << "\n";
}

void run_eval(const EvalOptions& opt) {
  atg::CheckpointExtras extras;
  atg::UNetModel model = atg::load_checkpoint(opt.checkpoint, &extras);
  std::string features = opt.features.empty()
                             ? features_for_channels(model.config.in_channels)
                             : opt.features;
  atg::TrainConfig cfg;
  cfg.features = parse_features(features);
  cfg.multi_city = opt.multi_city;
  if (atg::input_channel_count(cfg.features) != model.config.in_channels)
    throw atg::ValueError("eval: feature preset '" + features +
                          "' does not match checkpoint input layout");

  atg::DataSource data = atg::DataSource::from_manifest(opt.manifest);
  atg::MetricsRecord rec = atg::evaluate(model, data, cfg);
  rec.step = static_cast<long>(extras.global_step);
  std::cout << "step " << rec.step << "\n";
  print_record(rec, opt.rescaled);

  std::vector<atg::MetricsRecord> rows{rec};
  if (opt.baseline) {
    atg::MetricsRecord base = atg::evaluate_persistence(data, cfg);
    base.step = rec.step;
    print_record(base, opt.rescaled);
    rows.push_back(base);
  }
  if (!opt.out_dir.empty()) {
    write_run_manifest(opt.out_dir, "eval", to_json(opt));
    std::ofstream os(fs::path(opt.out_dir) / "eval_metrics.csv",
                     std::ios::trunc);
    os << atg::metrics_csv_header() << "\n";
    for (const auto& r : rows) os << atg::metrics_csv_row(r) << "\n";
  }
}

// ---- predict ----------------------------------------------------------------

struct PredictOptions {
  std::string checkpoint;
  std::string movie;
  std::string static_path;
  std::string city;
  std::string out_dir;
  std::string features;  // inferred when empty
  int anchor = 11;
};

json to_json(const PredictOptions& o) {
  return {{"checkpoint", o.checkpoint}, {"movie", o.movie},
          {"static", o.static_path},    {"city", o.city},
          {"out", o.out_dir},           {"features", o.features},
          {"anchor", o.anchor}};
}

PredictOptions predict_from_json(const json& j) {
  PredictOptions o;
  o.checkpoint = j.at("checkpoint");
  o.movie = j.at("movie");
  o.static_path = j.at("static");
  o.city = j.at("city");
  o.out_dir = j.at("out");
  o.features = j.at("features");
  o.anchor = j.at("anchor");
  return o;
}

void run_predict(const PredictOptions& opt) {
  atg::UNetModel model = atg::load_checkpoint(opt.checkpoint);
  std::string features = opt.features.empty()
                             ? features_for_channels(model.config.in_channels)
                             : opt.features;
  atg::FeatureFlags flags = parse_features(features);
  if (atg::input_channel_count(flags) != model.config.in_channels)
    throw atg::ValueError("predict: feature preset '" + features +
                          "' does not match checkpoint input layout");

  atg::TrafficMovie movie = atg::read_movie(opt.movie, opt.city);
  atg::Sample sample = atg::extract_sample(movie, opt.anchor);
  atg::StaticMap static_map;
  const atg::StaticMap* static_ptr = nullptr;
  if (flags.use_static) {
    if (opt.static_path.empty())
      throw atg::ValueError("predict: checkpoint uses static features; pass "
                            "--static");
    static_map = atg::read_static(opt.static_path, opt.city);
    static_ptr = &static_map;
  }

  std::vector<atg::Tensor> alphas;
  atg::Prediction pred =
      atg::predict(model, sample, static_ptr, flags, &alphas);

  fs::create_directories(opt.out_dir);
  atg::write_tmov((fs::path(opt.out_dir) / "prediction.tmov").string(),
                  atg::TmovRole::kPrediction,
                  {static_cast<int>(atg::kTargetOffsets.size()), pred.height,
                   pred.width, atg::kDynamicChannels},
                  pred.frames);
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const atg::Tensor& a = alphas[i];
    std::vector<std::uint8_t> bytes(a.size());
    for (std::size_t k = 0; k < a.size(); ++k)
      bytes[k] = static_cast<std::uint8_t>(
          std::floor(std::min(1.0f, std::max(0.0f, a.data()[k])) * 255.0f +
                     0.5f));
    atg::write_tmov((fs::path(opt.out_dir) /
                     ("attention_gate" + std::to_string(i) + ".tmov"))
                        .string(),
                    atg::TmovRole::kAttentionMap,
                    {a.dim(0), a.dim(1), a.dim(2)}, bytes);
  }
  write_run_manifest(opt.out_dir, "predict", to_json(opt));
  std::cout << "wrote prediction + " << alphas.size()
            << " attention map(s) to " << opt.out_dir << "\n";
}

// ---- dispatch ---------------------------------------------------------------

void run_from_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw atg::IoError("cannot open run manifest " + path);
  json manifest = json::parse(is, nullptr, true, true);
  const std::string command = manifest.at("command");
  const json& options = manifest.at("options");
  if (command == "gen")
    run_gen(gen_from_json(options));
  else if (command == "train")
    run_train(train_from_json(options));
  else if (command == "eval")
    run_eval(eval_from_json(options));
  else if (command == "predict")
    run_predict(predict_from_json(options));
  else
    throw atg::ValueError("unknown command in run manifest: " + command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attention-gated U-Net traffic movie forecaster"};
  app.set_config("--config", "", "structured config file (INI/TOML); "
                                 "defaults < config file < flags");
  std::string from_manifest;
  app.add_option("--from-manifest", from_manifest,
                 "re-run a previously written run_manifest.json");

  GenOptions gen;
  auto* cmd_gen = app.add_subcommand("gen", "generate a synthetic city");
  cmd_gen->add_option("--out", gen.out_dir, "output directory")->required();
  cmd_gen->add_option("--city", gen.city, "city identifier");
  cmd_gen->add_option("--seed", gen.seed, "generator seed");
  cmd_gen->add_option("--height", gen.height, "grid height");
  cmd_gen->add_option("--width", gen.width, "grid width");
  cmd_gen->add_option("--days", gen.days, "number of movie days");
  cmd_gen->add_option("--density", gen.density, "road density (0,1)");
  cmd_gen->add_option("--noise", gen.noise, "sensor noise scale");
  cmd_gen->add_option("--start-date", gen.start_date, "first day, YYYY-MM-DD");

  TrainOptions tr;
  auto* cmd_train = app.add_subcommand("train", "train a model");
  cmd_train->add_option("--manifest", tr.manifest, "training manifest")
      ->required();
  cmd_train->add_option("--val-manifest", tr.val_manifest,
                        "validation manifest");
  cmd_train->add_option("--out", tr.out_dir, "output directory")->required();
  cmd_train->add_option("--resume", tr.resume, "checkpoint to resume from");
  cmd_train->add_option("--depth", tr.depth, "downsampling stages");
  cmd_train->add_option("--base-channels", tr.base_channels,
                        "channels after the first dense block");
  cmd_train->add_option("--multiplier", tr.multiplier,
                        "per-stage channel multiplier");
  cmd_train->add_option("--growth", tr.growth, "dense block growth");
  cmd_train->add_flag("--no-attention", tr.no_attention,
                      "disable attention gates");
  cmd_train->add_option("--steps", tr.steps, "optimizer steps");
  cmd_train->add_option("--batch", tr.batch, "batch size");
  cmd_train->add_option("--lr", tr.lr, "learning rate");
  cmd_train->add_option("--seed", tr.seed, "training seed");
  cmd_train->add_option("--eval-at", tr.eval_at, "evaluation steps");
  cmd_train->add_option("--features", tr.features,
                        "input features: dynamic|static|all");
  cmd_train->add_flag("--multi-city", tr.multi_city,
                      "interleave cities round-robin");
  cmd_train->add_flag("--no-deterministic", tr.no_deterministic,
                      "record wall-clock times (breaks bitwise reproduction)");

  EvalOptions ev;
  auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint");
  cmd_eval->add_option("--checkpoint", ev.checkpoint, "model checkpoint")
      ->required();
  cmd_eval->add_option("--manifest", ev.manifest, "validation manifest")
      ->required();
  cmd_eval->add_option("--out", ev.out_dir, "optional output directory");
  cmd_eval->add_option("--features", ev.features,
                       "feature preset override (default: from checkpoint)");
  cmd_eval->add_flag("--baseline", ev.baseline,
                     "also report the persistence baseline");
  cmd_eval->add_flag("--rescaled", ev.rescaled, "also print x255^2 MSE");
  cmd_eval->add_flag("--multi-city", ev.multi_city, "round-robin cities");

  PredictOptions pr;
  auto* cmd_predict = app.add_subcommand("predict", "predict six frames");
  cmd_predict->add_option("--checkpoint", pr.checkpoint, "model checkpoint")
      ->required();
  cmd_predict->add_option("--movie", pr.movie, "input movie (TMOV)")
      ->required();
  cmd_predict->add_option("--static", pr.static_path, "static map (TMOV)");
  cmd_predict->add_option("--city", pr.city, "city identifier");
  cmd_predict->add_option("--anchor", pr.anchor, "anchor frame t (11..275)");
  cmd_predict->add_option("--out", pr.out_dir, "output directory")->required();
  cmd_predict->add_option("--features", pr.features,
                          "feature preset override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (!from_manifest.empty())
      run_from_manifest(from_manifest);
    else if (*cmd_gen)
      run_gen(gen);
    else if (*cmd_train)
      run_train(tr);
    else if (*cmd_eval)
      run_eval(ev);
    else if (*cmd_predict)
      run_predict(pr);
    else {
      std::cerr << app.help();
      return kExitConfig;
    }
  } catch (const atg::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const atg::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
