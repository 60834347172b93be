#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "atg/tensor.hpp"

namespace atg {

constexpr int kFramesPerDay = 288;
constexpr int kDynamicChannels = 9;
constexpr int kStaticChannels = 7;
constexpr int kInputFrames = 12;
constexpr std::array<int, 6> kTargetOffsets = {1, 2, 3, 6, 9, 12};
constexpr int kMinAnchor = kInputFrames - 1;              // 11
constexpr int kMaxAnchor = kFramesPerDay - 1 -            // 275
                           kTargetOffsets.back();
constexpr int kAnchorsPerDay = kMaxAnchor - kMinAnchor + 1;  // 265
constexpr int kValidationAnchorStride = 24;

struct Date {
  int year = 2019;
  int month = 1;
  int day = 1;

  bool operator==(const Date&) const = default;
};

// Monday = 0 ... Sunday = 6
int weekday_index(const Date& d);
Date add_days(const Date& d, int days);
std::string date_str(const Date& d);          // YYYY-MM-DD
std::string date_compact(const Date& d);      // YYYYMMDD
Date parse_date_compact(const std::string& s);

// One day of one city: (288, H, W, 9) unsigned bytes, channel-fastest.
// Channels 0..7 are (volume, speed) per ordinal direction NW, NE, SW, SE;
// channel 8 is the incident level. Missing values are 0.
struct TrafficMovie {
  std::string city;
  Date date;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // (288, H, W, 9)

  std::size_t index(int t, int h, int w, int c) const {
    return ((static_cast<std::size_t>(t) * height + h) * width + w) *
               kDynamicChannels +
           c;
  }
  std::uint8_t at(int t, int h, int w, int c) const {
    return data[index(t, h, w, c)];
  }
};

// Per-city static features: (H, W, 7) unsigned bytes.
struct StaticMap {
  std::string city;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // (H, W, 7)

  std::uint8_t at(int h, int w, int c) const {
    return data[(static_cast<std::size_t>(h) * width + w) * kStaticChannels +
                c];
  }
};

// One training example, values copied out of the movie.
struct Sample {
  std::string city;
  int anchor = 0;   // index t of the last input frame
  int weekday = 0;  // Monday = 0
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> input;   // (12, H, W, 9)
  std::vector<std::uint8_t> target;  // (6, H, W, 9), offsets {1,2,3,6,9,12}
};

// ---- TMOV container ---------------------------------------------------------
// magic "TMOV", version u32, role u8, ndim u32, dims u32 each, raw unsigned
// bytes, row-major, channel fastest.
enum class TmovRole : std::uint8_t {
  kMovie = 0,
  kStatic = 1,
  kPrediction = 2,
  kAttentionMap = 3,
};

void write_tmov(const std::string& path, TmovRole role,
                const std::vector<int>& dims,
                const std::vector<std::uint8_t>& payload);
void read_tmov(const std::string& path, TmovRole& role, std::vector<int>& dims,
               std::vector<std::uint8_t>& payload);
TmovRole peek_tmov_role(const std::string& path);

void write_movie(const TrafficMovie& movie, const std::string& path);
// city is taken from the caller (manifest); the date is parsed from the
// file name, which must contain a YYYYMMDD group.
TrafficMovie read_movie(const std::string& path, const std::string& city);
void write_static(const StaticMap& map, const std::string& path);
StaticMap read_static(const std::string& path, const std::string& city);

// ---- sample extraction ------------------------------------------------------

Sample extract_sample(const TrafficMovie& movie, int t);

// ---- synthetic city ---------------------------------------------------------

struct SynthCity {
  StaticMap static_map;
  std::vector<std::uint8_t> road_mask;  // (H, W), 1 on road
};

// Deterministic axis-aligned road grid; static channels are derived from the
// mask (junctions at crossings, venue counts near roads). Off-road pixels have
// all-zero static channels.
SynthCity synth_city(std::uint64_t seed, int height, int width,
                     double road_density);

// Diurnal traffic on the road mask: two Gaussian rush-hour bumps (slots 96
// and 18:00 = 216) over a 0.1 base, scaled by a weekday factor (1.0 Mon-Fri,
// 0.6 Sat-Sun), plus noise. Speeds fall as volume rises. Incidents are sparse
// and independent per frame. Off-road pixels are all zero. noise_scale
// multiplies the sensor noise sigmas and the incident rate.
TrafficMovie synth_movie(const SynthCity& city, std::uint64_t seed,
                         const Date& date, double noise_scale = 1.0);

// ---- dataset manifest and index ---------------------------------------------

struct ManifestEntry {
  std::string path;
  std::string city;
};

// One path per line, optional "city=NAME " prefix, '#' comments. Paths are
// resolved relative to the manifest file. Static maps are listed like movies
// and recognized by their TMOV role byte.
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);

enum class Split { kTrain, kValidation };

struct DatasetIndex {
  struct Entry {
    int file = 0;  // index into files
    int anchor = 0;
  };
  std::vector<ManifestEntry> files;  // movie files only
  std::vector<Entry> entries;
  Split split = Split::kTrain;
};

// Train split: all valid anchors, deterministically shuffled. Validation:
// anchors at a fixed stride. With multi_city, entries cycle the cities
// round-robin.
DatasetIndex build_index(const std::vector<ManifestEntry>& movie_files,
                         Split split, std::uint64_t seed,
                         bool multi_city = false);

}  // namespace atg
