#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atg/checkpoint.hpp"
#include "atg/data.hpp"
#include "atg/features.hpp"
#include "atg/model.hpp"
#include "atg/ops.hpp"

namespace atg {

template <typename T>
TensorT<T> mse_loss(const TensorT<T>& pred, const TensorT<T>& target) {
  if (pred.shape() != target.shape())
    throw ShapeError("mse_loss: shape mismatch " + shape_str(pred.shape()) +
                     " vs " + shape_str(target.shape()));
  auto diff = add(pred, scale(target, T(-1)));
  return mean_all(mul(diff, diff));
}

struct AdamState {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;

  void init(UNetModel& model);
};

// Bias-corrected Adam update over every model parameter, followed by a grad
// reset. Moment arrays must have been initialized for this model.
void adam_step(UNetModel& model, AdamState& state);

struct TrainConfig {
  int batch_size = 2;
  double learning_rate = 3e-4;
  int max_steps = 2650;
  std::vector<int> eval_at = {1000, 2000, 2650};
  std::uint64_t seed = 1;
  FeatureFlags features;
  bool multi_city = false;
  bool deterministic = true;

  void validate() const {
    if (batch_size < 1 || max_steps < 1 || learning_rate <= 0)
      throw ValueError("invalid train config");
  }
};

struct MetricsRecord {
  long step = 0;
  std::string split;
  double mse = 0.0;
  std::array<double, 6> horizon_mse{};
  double seconds = 0.0;
};

// Movies resolved lazily from a manifest; static maps loaded up front and
// keyed by city.
class DataSource {
 public:
  static DataSource from_manifest(const std::string& manifest_path);
  static DataSource from_entries(std::vector<ManifestEntry> movies,
                                 std::map<std::string, StaticMap> statics);

  const std::vector<ManifestEntry>& movies() const { return movies_; }
  const TrafficMovie& movie(int file_index);
  const StaticMap* static_map(const std::string& city) const;
  bool empty() const { return movies_.empty(); }

 private:
  std::vector<ManifestEntry> movies_;
  std::map<std::string, StaticMap> statics_;
  std::map<std::string, TrafficMovie> cache_;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRecord& r);

// Runs forward -> MSE -> backward -> Adam over deterministic shuffled batches,
// evaluating (and checkpointing, when out_dir is set) at cfg.eval_at steps.
// Returns one validation record per evaluation. start_step lets a resumed
// checkpoint continue its step count.
std::vector<MetricsRecord> train(UNetModel& model, AdamState& adam,
                                 DataSource& train_data, DataSource* val_data,
                                 const TrainConfig& cfg,
                                 const std::string& out_dir = "",
                                 std::uint64_t start_step = 0);

MetricsRecord evaluate(UNetModel& model, DataSource& val_data,
                       const TrainConfig& cfg);

// Every target frame predicted as a copy of the last input frame X_t.
Tensor persistence_baseline(const Sample& sample);

MetricsRecord evaluate_persistence(DataSource& val_data,
                                   const TrainConfig& cfg);

struct Prediction {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> frames;  // (6, H, W, 9)
};

// Forward, clamp to [0,1], scale by 255, round half up to bytes.
Prediction predict(UNetModel& model, const Sample& sample,
                   const StaticMap* static_map, const FeatureFlags& flags,
                   std::vector<Tensor>* alpha_maps = nullptr);

}  // namespace atg
