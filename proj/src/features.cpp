#include "atg/features.hpp"

#include <cmath>
#include <sstream>

namespace atg {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr float kByteScale = 1.0f / 255.0f;
}  // namespace

TimeEncoding time_encode(int t) {
  if (t < 0 || t >= kFramesPerDay)
    throw ValueError("time_encode: slot " + std::to_string(t) +
                     " outside [0,287]");
  const double angle = static_cast<double>(t) * 2.0 * kPi / kFramesPerDay;
  return {std::cos(angle), std::sin(angle)};
}

std::array<float, 7> weekday_encode(const Date& date) {
  std::array<float, 7> onehot{};
  onehot[static_cast<std::size_t>(weekday_index(date))] = 1.0f;
  return onehot;
}

int input_channel_count(const FeatureFlags& flags) {
  int c = kInputFrames * kDynamicChannels;
  if (flags.use_static) c += kStaticChannels;
  if (flags.use_weekday) c += 7;
  if (flags.use_time) c += 2;
  return c;
}

int target_channel_count() {
  return static_cast<int>(kTargetOffsets.size()) * kDynamicChannels;
}

Tensor assemble_input(const Sample& sample, const StaticMap* static_map,
                      const FeatureFlags& flags) {
  const int h = sample.height, w = sample.width;
  if (flags.use_static) {
    if (!static_map)
      throw ValueError("assemble_input: static features requested but no map");
    if (static_map->height != h || static_map->width != w)
      throw ShapeError("assemble_input: static map extents (" +
                       std::to_string(static_map->height) + "," +
                       std::to_string(static_map->width) +
                       ") do not match sample (" + std::to_string(h) + "," +
                       std::to_string(w) + ")");
  }
  const int c_in = input_channel_count(flags);
  const int c_dyn = kInputFrames * kDynamicChannels;

  std::array<float, 7> weekday{};
  if (flags.use_weekday) {
    weekday = std::array<float, 7>{};
    weekday[static_cast<std::size_t>(sample.weekday)] = 1.0f;
  }
  TimeEncoding te;
  if (flags.use_time) te = time_encode(sample.anchor - (kInputFrames - 1));
  const float time_cos = static_cast<float>(te.cos_component);
  const float time_sin = static_cast<float>(te.sin_component);

  const std::size_t frame =
      static_cast<std::size_t>(h) * w * kDynamicChannels;
  std::vector<float> out(static_cast<std::size_t>(h) * w * c_in);
  for (int px = 0; px < h * w; ++px) {
    float* dst = out.data() + static_cast<std::size_t>(px) * c_in;
    for (int f = 0; f < kInputFrames; ++f) {
      const std::uint8_t* src =
          sample.input.data() + static_cast<std::size_t>(f) * frame +
          static_cast<std::size_t>(px) * kDynamicChannels;
      for (int c = 0; c < kDynamicChannels; ++c)
        dst[f * kDynamicChannels + c] = src[c] * kByteScale;
    }
    int off = c_dyn;
    if (flags.use_static) {
      const std::uint8_t* src =
          static_map->data.data() +
          static_cast<std::size_t>(px) * kStaticChannels;
      for (int c = 0; c < kStaticChannels; ++c)
        dst[off + c] = src[c] * kByteScale;
      off += kStaticChannels;
    }
    if (flags.use_weekday) {
      for (int c = 0; c < 7; ++c) dst[off + c] = weekday[static_cast<std::size_t>(c)];
      off += 7;
    }
    if (flags.use_time) {
      dst[off] = time_cos;
      dst[off + 1] = time_sin;
    }
  }
  return Tensor::from_data({h, w, c_in}, std::move(out));
}

Tensor assemble_target(const Sample& sample) {
  const int h = sample.height, w = sample.width;
  const int frames = static_cast<int>(kTargetOffsets.size());
  const int c_out = frames * kDynamicChannels;
  const std::size_t frame =
      static_cast<std::size_t>(h) * w * kDynamicChannels;
  std::vector<float> out(static_cast<std::size_t>(h) * w * c_out);
  for (int px = 0; px < h * w; ++px) {
    float* dst = out.data() + static_cast<std::size_t>(px) * c_out;
    for (int f = 0; f < frames; ++f) {
      const std::uint8_t* src =
          sample.target.data() + static_cast<std::size_t>(f) * frame +
          static_cast<std::size_t>(px) * kDynamicChannels;
      for (int c = 0; c < kDynamicChannels; ++c)
        dst[f * kDynamicChannels + c] = src[c] * kByteScale;
    }
  }
  return Tensor::from_data({h, w, c_out}, std::move(out));
}

std::string layout_descriptor(const FeatureFlags& flags) {
  static const char* kDirections[4] = {"nw", "ne", "sw", "se"};
  std::ostringstream os;
  os << "input channels: " << input_channel_count(flags) << "\n";
  int ch = 0;
  for (int f = 0; f < kInputFrames; ++f)
    for (int d = 0; d < 4; ++d) {
      os << ch++ << " frame" << f << ".volume_" << kDirections[d] << "\n";
      os << ch++ << " frame" << f << ".speed_" << kDirections[d] << "\n";
      if (d == 3) os << ch++ << " frame" << f << ".incident\n";
    }
  if (flags.use_static) {
    static const char* kStaticNames[kStaticChannels] = {
        "junction_a", "junction_b", "venues_food", "venues_hospital",
        "venues_parking", "venues_shop", "venues_transit"};
    for (int c = 0; c < kStaticChannels; ++c)
      os << ch++ << " static." << kStaticNames[c] << "\n";
  }
  if (flags.use_weekday)
    for (int c = 0; c < 7; ++c) os << ch++ << " weekday." << c << "\n";
  if (flags.use_time) {
    os << ch++ << " time.cos\n";
    os << ch++ << " time.sin\n";
  }
  return os.str();
}

}  // namespace atg
