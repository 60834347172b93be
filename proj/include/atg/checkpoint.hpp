#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atg/model.hpp"

namespace atg {

// Optimizer state and bookkeeping stored alongside the parameters.
// Moment arrays follow the model's visit_params order.
struct CheckpointExtras {
  std::uint64_t global_step = 0;
  bool has_optimizer = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 3e-4;
  std::uint64_t optimizer_step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
};

std::uint64_t config_digest(const ModelConfig& cfg);

// Binary container: magic "ATGC", format version, config digest and snapshot,
// global step, named parameter records (name length + name + shape +
// little-endian float32 data), then optional Adam moments. Byte layout is
// documented in the README.
void save_checkpoint(UNetModel& model, const std::string& path,
                     const CheckpointExtras* extras = nullptr);

UNetModel load_checkpoint(const std::string& path,
                          CheckpointExtras* extras = nullptr);

}  // namespace atg
