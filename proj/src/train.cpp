#include "atg/train.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace atg {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

void AdamState::init(UNetModel& model) {
  m.clear();
  v.clear();
  model.visit_params([&](const std::string&, Tensor& t) {
    m.emplace_back(t.size(), 0.0f);
    v.emplace_back(t.size(), 0.0f);
  });
  step = 0;
}

void adam_step(UNetModel& model, AdamState& st) {
  ++st.step;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  std::size_t idx = 0;
  model.visit_params([&](const std::string& name, Tensor& t) {
    if (idx >= st.m.size() || st.m[idx].size() != t.size())
      throw ValueError("adam state does not match parameter " + name);
    auto& grad = t.grad();
    auto& mi = st.m[idx];
    auto& vi = st.v[idx];
    auto& data = t.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = static_cast<double>(grad[i]);
      const double m_new = st.beta1 * mi[i] + (1.0 - st.beta1) * g;
      const double v_new = st.beta2 * vi[i] + (1.0 - st.beta2) * g * g;
      mi[i] = static_cast<float>(m_new);
      vi[i] = static_cast<float>(v_new);
      const double m_hat = m_new / bc1;
      const double v_hat = v_new / bc2;
      data[i] = static_cast<float>(
          data[i] - st.learning_rate * m_hat / (std::sqrt(v_hat) + st.epsilon));
    }
    ++idx;
  });
  model.zero_grad();
}

DataSource DataSource::from_manifest(const std::string& manifest_path) {
  DataSource src;
  for (const auto& entry : read_manifest(manifest_path)) {
    TmovRole role;
    try {
      role = peek_tmov_role(entry.path);
    } catch (const IoError& e) {
      throw IoError(std::string(e.what()) + " (listed in " + manifest_path +
                    ")");
    }
    if (role == TmovRole::kStatic)
      src.statics_.emplace(entry.city, read_static(entry.path, entry.city));
    else if (role == TmovRole::kMovie)
      src.movies_.push_back(entry);
    else
      throw FormatError("manifest: " + entry.path +
                        " has a role that is neither movie nor static");
  }
  return src;
}

DataSource DataSource::from_entries(std::vector<ManifestEntry> movies,
                                    std::map<std::string, StaticMap> statics) {
  DataSource src;
  src.movies_ = std::move(movies);
  src.statics_ = std::move(statics);
  return src;
}

const TrafficMovie& DataSource::movie(int file_index) {
  const auto& entry = movies_.at(static_cast<std::size_t>(file_index));
  auto it = cache_.find(entry.path);
  if (it == cache_.end())
    it = cache_.emplace(entry.path, read_movie(entry.path, entry.city)).first;
  return it->second;
}

const StaticMap* DataSource::static_map(const std::string& city) const {
  auto it = statics_.find(city);
  return it == statics_.end() ? nullptr : &it->second;
}

std::string metrics_csv_header() {
  return "step,split,mse,mse_h1,mse_h2,mse_h3,mse_h4,mse_h5,mse_h6,seconds";
}

std::string metrics_csv_row(const MetricsRecord& r) {
  std::ostringstream os;
  os.precision(10);
  os << std::scientific;
  os << r.step << "," << r.split << "," << r.mse;
  for (double h : r.horizon_mse) os << "," << h;
  os.precision(3);
  os << std::fixed << "," << r.seconds;
  return os.str();
}

namespace {

MetricsRecord aggregate_errors(UNetModel* model, DataSource& data,
                               const TrainConfig& cfg, bool persistence) {
  if (data.empty()) throw ValueError("evaluate: empty dataset");
  const double t0 = now_seconds();
  DatasetIndex index = build_index(data.movies(), Split::kValidation, 0,
                                   cfg.multi_city);
  const int frames = static_cast<int>(kTargetOffsets.size());
  std::array<double, 6> sse{};
  std::array<std::size_t, 6> count{};
  NoGradGuard no_grad;
  for (const auto& e : index.entries) {
    const TrafficMovie& movie = data.movie(e.file);
    Sample sample = extract_sample(movie, e.anchor);
    Tensor target = assemble_target(sample);
    Tensor pred;
    if (persistence) {
      pred = persistence_baseline(sample);
    } else {
      Tensor x = assemble_input(sample, data.static_map(sample.city),
                                cfg.features);
      pred = forward(*model, x);
    }
    const int c_out = target.dim(2);
    const std::size_t npx =
        static_cast<std::size_t>(target.dim(0)) * target.dim(1);
    for (std::size_t px = 0; px < npx; ++px)
      for (int c = 0; c < c_out; ++c) {
        const std::size_t i = px * static_cast<std::size_t>(c_out) +
                              static_cast<std::size_t>(c);
        const double d = static_cast<double>(pred.data()[i]) -
                         static_cast<double>(target.data()[i]);
        sse[static_cast<std::size_t>(c / kDynamicChannels)] += d * d;
      }
    for (int f = 0; f < frames; ++f)
      count[static_cast<std::size_t>(f)] += npx * kDynamicChannels;
  }
  MetricsRecord rec;
  rec.split = persistence ? "persistence" : "val";
  double total = 0.0;
  for (int f = 0; f < frames; ++f) {
    rec.horizon_mse[static_cast<std::size_t>(f)] =
        sse[static_cast<std::size_t>(f)] /
        static_cast<double>(count[static_cast<std::size_t>(f)]);
    total += rec.horizon_mse[static_cast<std::size_t>(f)];
  }
  rec.mse = total / frames;
  rec.seconds = cfg.deterministic ? 0.0 : now_seconds() - t0;
  return rec;
}

}  // namespace

MetricsRecord evaluate(UNetModel& model, DataSource& val_data,
                       const TrainConfig& cfg) {
  return aggregate_errors(&model, val_data, cfg, false);
}

MetricsRecord evaluate_persistence(DataSource& val_data,
                                   const TrainConfig& cfg) {
  return aggregate_errors(nullptr, val_data, cfg, true);
}

Tensor persistence_baseline(const Sample& sample) {
  const int h = sample.height, w = sample.width;
  const int frames = static_cast<int>(kTargetOffsets.size());
  const int c_out = frames * kDynamicChannels;
  const std::size_t frame =
      static_cast<std::size_t>(h) * w * kDynamicChannels;
  const std::uint8_t* last =
      sample.input.data() + static_cast<std::size_t>(kInputFrames - 1) * frame;
  std::vector<float> out(static_cast<std::size_t>(h) * w * c_out);
  for (int px = 0; px < h * w; ++px) {
    const std::uint8_t* src = last + static_cast<std::size_t>(px) * kDynamicChannels;
    float* dst = out.data() + static_cast<std::size_t>(px) * c_out;
    for (int f = 0; f < frames; ++f)
      for (int c = 0; c < kDynamicChannels; ++c)
        dst[f * kDynamicChannels + c] = src[c] * (1.0f / 255.0f);
  }
  return Tensor::from_data({h, w, c_out}, std::move(out));
}

std::vector<MetricsRecord> train(UNetModel& model, AdamState& adam,
                                 DataSource& train_data, DataSource* val_data,
                                 const TrainConfig& cfg,
                                 const std::string& out_dir,
                                 std::uint64_t start_step) {
  cfg.validate();
  if (train_data.empty()) throw ValueError("train: empty dataset");
  adam.learning_rate = cfg.learning_rate;
  if (adam.m.empty()) adam.init(model);

  std::ofstream csv;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto csv_path = std::filesystem::path(out_dir) / "metrics.csv";
    const bool fresh = !std::filesystem::exists(csv_path) || start_step == 0;
    csv.open(csv_path, fresh ? std::ios::trunc : std::ios::app);
    if (!csv) throw IoError("train: cannot open " + csv_path.string());
    if (fresh) csv << metrics_csv_header() << "\n";
    std::ofstream layout(std::filesystem::path(out_dir) / "layout.txt",
                         std::ios::trunc);
    layout << layout_descriptor(cfg.features);
  }

  std::vector<MetricsRecord> records;
  double best_val = std::numeric_limits<double>::infinity();
  std::uint64_t epoch = 0;
  DatasetIndex index = build_index(train_data.movies(), Split::kTrain,
                                   mix_seed(cfg.seed, epoch), cfg.multi_city);
  std::size_t cursor = 0;
  const double t0 = now_seconds();

  for (std::uint64_t step = start_step + 1;
       step <= static_cast<std::uint64_t>(cfg.max_steps); ++step) {
    Tensor total;
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor >= index.entries.size()) {
        ++epoch;
        index = build_index(train_data.movies(), Split::kTrain,
                            mix_seed(cfg.seed, epoch), cfg.multi_city);
        cursor = 0;
      }
      const auto& e = index.entries[cursor++];
      const TrafficMovie& movie = train_data.movie(e.file);
      Sample sample = extract_sample(movie, e.anchor);
      Tensor x =
          assemble_input(sample, train_data.static_map(sample.city),
                         cfg.features);
      Tensor target = assemble_target(sample);
      Tensor pred = forward(model, x);
      Tensor loss = mse_loss(pred, target);
      total = b == 0 ? loss : add(total, loss);
    }
    Tensor loss = scale(total, 1.0f / static_cast<float>(cfg.batch_size));
    if (!std::isfinite(loss.item()))
      throw NumericError("train: non-finite loss at step " +
                         std::to_string(step));
    backward(loss);
    adam_step(model, adam);

    const bool do_eval =
        val_data && std::find(cfg.eval_at.begin(), cfg.eval_at.end(),
                              static_cast<int>(step)) != cfg.eval_at.end();
    if (do_eval) {
      MetricsRecord rec = evaluate(model, *val_data, cfg);
      rec.step = static_cast<long>(step);
      rec.seconds = cfg.deterministic ? 0.0 : now_seconds() - t0;
      records.push_back(rec);
      if (!out_dir.empty()) {
        csv << metrics_csv_row(rec) << "\n";
        csv.flush();
        CheckpointExtras extras;
        extras.global_step = step;
        extras.has_optimizer = true;
        extras.beta1 = adam.beta1;
        extras.beta2 = adam.beta2;
        extras.epsilon = adam.epsilon;
        extras.learning_rate = adam.learning_rate;
        extras.optimizer_step = adam.step;
        extras.m = adam.m;
        extras.v = adam.v;
        save_checkpoint(model,
                        (std::filesystem::path(out_dir) / "latest.ckpt")
                            .string(),
                        &extras);
        if (rec.mse < best_val) {
          best_val = rec.mse;
          save_checkpoint(model,
                          (std::filesystem::path(out_dir) / "best.ckpt")
                              .string(),
                          &extras);
        }
      }
    }
  }
  return records;
}

Prediction predict(UNetModel& model, const Sample& sample,
                   const StaticMap* static_map, const FeatureFlags& flags,
                   std::vector<Tensor>* alpha_maps) {
  if (input_channel_count(flags) != model.config.in_channels)
    throw ValueError(
        "predict: feature flags produce " +
        std::to_string(input_channel_count(flags)) +
        " channels but the checkpoint expects " +
        std::to_string(model.config.in_channels));
  NoGradGuard no_grad;
  Tensor x = assemble_input(sample, static_map, flags);
  Tensor pred;
  if (alpha_maps && model.config.attention_enabled)
    pred = forward(model, x, alpha_maps);
  else
    pred = forward(model, x);

  const int h = pred.dim(0), w = pred.dim(1), c_out = pred.dim(2);
  const int frames = static_cast<int>(kTargetOffsets.size());
  Prediction out;
  out.height = h;
  out.width = w;
  out.frames.resize(static_cast<std::size_t>(frames) * h * w *
                    kDynamicChannels);
  for (int px = 0; px < h * w; ++px)
    for (int c = 0; c < c_out; ++c) {
      float v = pred.data()[static_cast<std::size_t>(px) * c_out + c];
      v = std::min(1.0f, std::max(0.0f, v));
      const int f = c / kDynamicChannels;
      const int ch = c % kDynamicChannels;
      out.frames[(static_cast<std::size_t>(f) * h * w + px) *
                     kDynamicChannels +
                 ch] =
          static_cast<std::uint8_t>(std::floor(v * 255.0f + 0.5f));
    }
  return out;
}

}  // namespace atg
