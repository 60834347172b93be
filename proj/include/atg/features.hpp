#pragma once

#include "atg/data.hpp"
#include "atg/tensor.hpp"

namespace atg {

// Point on the trigonometric unit circle for a five-minute slot of the day.
struct TimeEncoding {
  double cos_component = 1.0;
  double sin_component = 0.0;
};

// f_time(t) = (cos(t*2*pi/288), sin(t*2*pi/288)), t in [0,287]
TimeEncoding time_encode(int t);

// One-hot over the Monday-based weekday index.
std::array<float, 7> weekday_encode(const Date& date);

struct FeatureFlags {
  bool use_static = true;
  bool use_weekday = true;
  bool use_time = true;
};

// Channel layout: [12 frames x 9 dynamic][static 7][weekday 7][time 2],
// absent blocks skipped. 124 channels with everything on, 108 dynamic-only.
int input_channel_count(const FeatureFlags& flags);
int target_channel_count();  // 6 frames x 9 channels

// Assembles the model input volume: dynamic and static bytes scaled to [0,1],
// weekday planes constant 0/1, time planes constant at the encoding of the
// first input frame's slot (anchor - 11).
Tensor assemble_input(const Sample& sample, const StaticMap* static_map,
                      const FeatureFlags& flags);

// Six target frames concatenated on channels, scaled to [0,1]: (H, W, 54).
Tensor assemble_target(const Sample& sample);

// Human-readable channel-index -> semantic-name block, written alongside
// checkpoints so external consumers can interpret the layout.
std::string layout_descriptor(const FeatureFlags& flags);

}  // namespace atg
