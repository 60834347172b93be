#include "atg/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace atg {

namespace {

// days since 1970-01-01 (civil calendar)
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy =
      static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

Date civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m),
              static_cast<int>(d)};
}

bool valid_date(const Date& d) {
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) return false;
  Date back = civil_from_days(days_from_civil(d.year, d.month, d.day));
  return back == d;
}

constexpr char kTmovMagic[4] = {'T', 'M', 'O', 'V'};
constexpr std::uint32_t kTmovVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw FormatError("tmov: truncated file " + path);
  return v;
}

}  // namespace

int weekday_index(const Date& d) {
  if (!valid_date(d)) throw ValueError("invalid date " + date_str(d));
  // 1970-01-01 was a Thursday (Monday-based index 3)
  const std::int64_t days = days_from_civil(d.year, d.month, d.day);
  return static_cast<int>(((days % 7) + 7 + 3) % 7);
}

Date add_days(const Date& d, int days) {
  if (!valid_date(d)) throw ValueError("invalid date " + date_str(d));
  return civil_from_days(days_from_civil(d.year, d.month, d.day) + days);
}

std::string date_str(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

std::string date_compact(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d%02d%02d", d.year, d.month, d.day);
  return buf;
}

Date parse_date_compact(const std::string& s) {
  // first run of exactly 8 digits
  for (std::size_t i = 0; i + 8 <= s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) continue;
    std::size_t j = i;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j - i == 8) {
      Date d;
      d.year = std::stoi(s.substr(i, 4));
      d.month = std::stoi(s.substr(i + 4, 2));
      d.day = std::stoi(s.substr(i + 6, 2));
      if (!valid_date(d))
        throw ValueError("invalid date '" + s.substr(i, 8) + "' in " + s);
      return d;
    }
    i = j;
  }
  throw ValueError("no YYYYMMDD date found in '" + s + "'");
}

void write_tmov(const std::string& path, TmovRole role,
                const std::vector<int>& dims,
                const std::vector<std::uint8_t>& payload) {
  std::size_t n = 1;
  for (int d : dims) {
    if (d < 1) throw ShapeError("tmov: invalid extent");
    n *= static_cast<std::size_t>(d);
  }
  if (dims.empty() || n != payload.size())
    throw ShapeError("tmov: payload does not match dims");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("tmov: cannot open " + path + " for writing");
  os.write(kTmovMagic, 4);
  write_pod<std::uint32_t>(os, kTmovVersion);
  write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(role));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  os.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size()));
  if (!os) throw IoError("tmov: write failed for " + path);
}

void read_tmov(const std::string& path, TmovRole& role, std::vector<int>& dims,
               std::vector<std::uint8_t>& payload) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("tmov: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kTmovMagic, 4) != 0)
    throw FormatError("tmov: bad magic in " + path);
  const auto version = read_pod<std::uint32_t>(is, path);
  if (version != kTmovVersion)
    throw FormatError("tmov: unsupported version in " + path);
  const auto role_byte = read_pod<std::uint8_t>(is, path);
  if (role_byte > 3) throw FormatError("tmov: unknown role in " + path);
  role = static_cast<TmovRole>(role_byte);
  const auto ndim = read_pod<std::uint32_t>(is, path);
  if (ndim == 0 || ndim > 8)
    throw FormatError("tmov: implausible rank in " + path);
  dims.clear();
  std::size_t n = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    const auto d = read_pod<std::uint32_t>(is, path);
    if (d == 0 || d > (1u << 20))
      throw FormatError("tmov: implausible extent in " + path);
    dims.push_back(static_cast<int>(d));
    n *= d;
  }
  payload.resize(n);
  is.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw FormatError("tmov: truncated payload in " + path);
}

TmovRole peek_tmov_role(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("tmov: cannot open " + path);
  char header[9];
  is.read(header, 9);
  if (!is || std::memcmp(header, kTmovMagic, 4) != 0)
    throw FormatError("tmov: bad magic in " + path);
  const auto role_byte = static_cast<std::uint8_t>(header[8]);
  if (role_byte > 3) throw FormatError("tmov: unknown role in " + path);
  return static_cast<TmovRole>(role_byte);
}

void write_movie(const TrafficMovie& movie, const std::string& path) {
  write_tmov(path, TmovRole::kMovie,
             {kFramesPerDay, movie.height, movie.width, kDynamicChannels},
             movie.data);
}

TrafficMovie read_movie(const std::string& path, const std::string& city) {
  TmovRole role;
  std::vector<int> dims;
  TrafficMovie movie;
  read_tmov(path, role, dims, movie.data);
  if (role != TmovRole::kMovie)
    throw FormatError("tmov: " + path + " is not a movie");
  if (dims.size() != 4 || dims[0] != kFramesPerDay ||
      dims[3] != kDynamicChannels)
    throw FormatError("tmov: movie dims must be (288,H,W,9) in " + path);
  movie.city = city;
  movie.height = dims[1];
  movie.width = dims[2];
  movie.date = parse_date_compact(
      std::filesystem::path(path).filename().string());
  return movie;
}

void write_static(const StaticMap& map, const std::string& path) {
  write_tmov(path, TmovRole::kStatic,
             {map.height, map.width, kStaticChannels}, map.data);
}

StaticMap read_static(const std::string& path, const std::string& city) {
  TmovRole role;
  std::vector<int> dims;
  StaticMap map;
  read_tmov(path, role, dims, map.data);
  if (role != TmovRole::kStatic)
    throw FormatError("tmov: " + path + " is not a static map");
  if (dims.size() != 3 || dims[2] != kStaticChannels)
    throw FormatError("tmov: static dims must be (H,W,7) in " + path);
  map.city = city;
  map.height = dims[0];
  map.width = dims[1];
  return map;
}

Sample extract_sample(const TrafficMovie& movie, int t) {
  if (t < kMinAnchor || t > kMaxAnchor)
    throw ValueError("anchor t=" + std::to_string(t) + " outside [" +
                     std::to_string(kMinAnchor) + "," +
                     std::to_string(kMaxAnchor) + "]");
  Sample s;
  s.city = movie.city;
  s.anchor = t;
  s.weekday = weekday_index(movie.date);
  s.height = movie.height;
  s.width = movie.width;
  const std::size_t frame =
      static_cast<std::size_t>(movie.height) * movie.width * kDynamicChannels;
  s.input.resize(kInputFrames * frame);
  for (int k = 0; k < kInputFrames; ++k)
    std::copy_n(
        movie.data.begin() +
            static_cast<std::size_t>(t - kInputFrames + 1 + k) * frame,
        frame, s.input.begin() + static_cast<std::size_t>(k) * frame);
  s.target.resize(kTargetOffsets.size() * frame);
  for (std::size_t k = 0; k < kTargetOffsets.size(); ++k)
    std::copy_n(movie.data.begin() +
                    static_cast<std::size_t>(t + kTargetOffsets[k]) * frame,
                frame, s.target.begin() + k * frame);
  return s;
}

SynthCity synth_city(std::uint64_t seed, int height, int width,
                     double road_density) {
  if (height < 8 || width < 8) throw ValueError("synth_city: H,W must be >= 8");
  if (road_density <= 0.0 || road_density >= 1.0)
    throw ValueError("synth_city: density must be in (0,1)");
  Rng rng(seed);

  std::vector<std::uint8_t> row_road(static_cast<std::size_t>(height), 0);
  std::vector<std::uint8_t> col_road(static_cast<std::size_t>(width), 0);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(height) * width, 0);
  std::size_t covered = 0;
  const std::size_t target =
      static_cast<std::size_t>(road_density * height * width);
  bool pick_row = true;
  int guard = 4 * (height + width);
  while (covered < target && guard-- > 0) {
    if (pick_row) {
      const int r = static_cast<int>(rng.next_u64() %
                                     static_cast<std::uint64_t>(height));
      if (!row_road[static_cast<std::size_t>(r)]) {
        row_road[static_cast<std::size_t>(r)] = 1;
        for (int c = 0; c < width; ++c) {
          auto& m = mask[static_cast<std::size_t>(r) * width + c];
          if (!m) {
            m = 1;
            ++covered;
          }
        }
      }
    } else {
      const int c = static_cast<int>(rng.next_u64() %
                                     static_cast<std::uint64_t>(width));
      if (!col_road[static_cast<std::size_t>(c)]) {
        col_road[static_cast<std::size_t>(c)] = 1;
        for (int r = 0; r < height; ++r) {
          auto& m = mask[static_cast<std::size_t>(r) * width + c];
          if (!m) {
            m = 1;
            ++covered;
          }
        }
      }
    }
    pick_row = !pick_row;
  }

  SynthCity city;
  city.static_map.height = height;
  city.static_map.width = width;
  city.static_map.data.assign(
      static_cast<std::size_t>(height) * width * kStaticChannels, 0);
  city.road_mask = mask;

  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      if (!mask[static_cast<std::size_t>(r) * width + c]) continue;
      std::uint8_t* px =
          city.static_map.data.data() +
          (static_cast<std::size_t>(r) * width + c) * kStaticChannels;
      const bool crossing = row_road[static_cast<std::size_t>(r)] &&
                            col_road[static_cast<std::size_t>(c)];
      // junction channels
      px[0] = crossing ? 255 : 0;
      if (crossing) px[1] = 128;
      // venue channels; channel 2 is nonzero on every road pixel so the
      // road mask is recoverable from the static map
      px[2] = static_cast<std::uint8_t>(30 + rng.next_u64() % 40);
      for (int k = 3; k < kStaticChannels; ++k)
        px[k] = static_cast<std::uint8_t>(rng.next_u64() % 60);
    }
  return city;
}

namespace {

double diurnal_profile(int t) {
  auto bump = [](double t, double center, double width) {
    const double z = (t - center) / width;
    return std::exp(-0.5 * z * z);
  };
  // asymmetric rush hours: without the time-of-day feature, morning and
  // evening ramps of different height are ambiguous from recent frames alone
  return 0.1 + 1.0 * bump(t, 96.0, 14.0) + 0.7 * bump(t, 216.0, 14.0);
}

std::uint8_t clip_byte(double v) {
  const double r = std::floor(v + 0.5);
  if (r <= 0.0) return 0;
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

}  // namespace

TrafficMovie synth_movie(const SynthCity& city, std::uint64_t seed,
                         const Date& date, double noise_scale) {
  const int h = city.static_map.height;
  const int w = city.static_map.width;
  TrafficMovie movie;
  movie.city = city.static_map.city;
  movie.date = date;
  movie.height = h;
  movie.width = w;
  movie.data.assign(static_cast<std::size_t>(kFramesPerDay) * h * w *
                        kDynamicChannels,
                    0);

  const double weekday_factor = weekday_index(date) < 5 ? 1.0 : 0.6;
  // day-to-day "weather" scale: absolute volume no longer identifies the
  // time of day, so the two equally shaped rush-hour bumps (1.0 vs 0.7) are
  // ambiguous from recent frames alone — only the time encoding resolves them
  Rng day_rng(seed ^ 0xd1cec0ffeeull);
  const double day_scale = day_rng.uniform(0.75, 1.25);
  constexpr double kDirScale[4] = {1.0, 0.8, 0.6, 0.45};

  // stable per-pixel amplitude, independent of the noise stream
  std::vector<double> amplitude(static_cast<std::size_t>(h) * w, 0.0);
  {
    Rng amp_rng(seed ^ 0xa5a5a5a5ull);
    for (std::size_t px = 0; px < amplitude.size(); ++px)
      amplitude[px] = amp_rng.uniform(90.0, 200.0);
  }

  Rng noise(seed);
  for (int t = 0; t < kFramesPerDay; ++t) {
    const double level = diurnal_profile(t) * weekday_factor * day_scale;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const std::size_t px = static_cast<std::size_t>(r) * w + c;
        std::uint8_t* out =
            movie.data.data() +
            (static_cast<std::size_t>(t) * h * w + px) * kDynamicChannels;
        if (!city.road_mask[px]) continue;
        for (int d = 0; d < 4; ++d) {
          const double vol = amplitude[px] * level * kDirScale[d] +
                             noise.normal() * 35.0 * noise_scale;
          out[2 * d] = clip_byte(vol);
          const double speed =
              180.0 - 0.4 * vol + noise.normal() * 15.0 * noise_scale;
          out[2 * d + 1] = clip_byte(speed);
        }
        // incidents: sparse, independent per frame, so the last observed
        // frame carries no information about them — a baseline that repeats
        // the last frame pays their variance twice, a trained model once
        if (noise.uniform() < 0.05 * noise_scale)
          out[8] = static_cast<std::uint8_t>(100 + noise.next_u64() % 156);
      }
  }
  return movie;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("manifest: cannot open " + path);
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string token, city, file;
    while (ls >> token) {
      if (token.rfind("city=", 0) == 0)
        city = token.substr(5);
      else
        file = token;
    }
    if (file.empty()) throw FormatError("manifest: bad line '" + line + "'");
    std::filesystem::path p(file);
    if (p.is_relative()) p = base / p;
    entries.push_back({p.string(), city});
  }
  return entries;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("manifest: cannot open " + path + " for writing");
  for (const auto& e : entries) {
    if (!e.city.empty()) os << "city=" << e.city << " ";
    os << e.path << "\n";
  }
  if (!os) throw IoError("manifest: write failed for " + path);
}

DatasetIndex build_index(const std::vector<ManifestEntry>& movie_files,
                         Split split, std::uint64_t seed, bool multi_city) {
  if (movie_files.empty()) throw ValueError("build_index: no movies");
  DatasetIndex index;
  index.files = movie_files;
  index.split = split;

  // per-city entry queues, cities in first-seen order
  std::vector<std::string> cities;
  std::vector<std::vector<DatasetIndex::Entry>> queues;
  auto queue_for = [&](const std::string& city) -> std::vector<DatasetIndex::Entry>& {
    for (std::size_t i = 0; i < cities.size(); ++i)
      if (cities[i] == city) return queues[i];
    cities.push_back(city);
    queues.emplace_back();
    return queues.back();
  };

  for (std::size_t f = 0; f < movie_files.size(); ++f) {
    auto& q = queue_for(multi_city ? movie_files[f].city : std::string());
    if (split == Split::kTrain) {
      for (int t = kMinAnchor; t <= kMaxAnchor; ++t)
        q.push_back({static_cast<int>(f), t});
    } else {
      for (int t = kMinAnchor; t <= kMaxAnchor; t += kValidationAnchorStride)
        q.push_back({static_cast<int>(f), t});
    }
  }

  if (split == Split::kTrain) {
    Rng rng(seed);
    for (auto& q : queues)
      for (std::size_t i = q.size(); i > 1; --i)
        std::swap(q[i - 1], q[rng.next_u64() % i]);
  }

  // round-robin across cities (a single queue when not multi-city)
  std::vector<std::size_t> pos(queues.size(), 0);
  bool more = true;
  while (more) {
    more = false;
    for (std::size_t c = 0; c < queues.size(); ++c) {
      if (pos[c] < queues[c].size()) {
        index.entries.push_back(queues[c][pos[c]++]);
        more = true;
      }
    }
  }
  return index;
}

}  // namespace atg
