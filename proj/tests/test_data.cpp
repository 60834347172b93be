#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "atg/data.hpp"

using namespace atg;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("atg_data_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

// Sakamoto's day-of-week algorithm, remapped from Sunday=0 to Monday=0.
int weekday_oracle(int y, int m, int d) {
  static const int t[] = {0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4};
  if (m < 3) y -= 1;
  const int sunday0 = (y + y / 4 - y / 100 + y / 400 + t[m - 1] + d) % 7;
  return (sunday0 + 6) % 7;
}

}  // namespace

TEST_CASE("weekday_index agrees with an independent algorithm") {
  CHECK(weekday_index({2019, 1, 1}) == 1);   // Tuesday
  CHECK(weekday_index({2019, 1, 7}) == 0);   // Monday
  CHECK(weekday_index({2020, 2, 29}) == 5);  // Saturday
  CHECK(weekday_index({1970, 1, 1}) == 3);   // Thursday
  Date d{2018, 11, 20};
  for (int i = 0; i < 500; ++i) {
    CHECK(weekday_index(d) == weekday_oracle(d.year, d.month, d.day));
    d = add_days(d, 1);
  }
}

TEST_CASE("date helpers") {
  CHECK(date_str({2019, 7, 4}) == "2019-07-04");
  CHECK(date_compact({2019, 7, 4}) == "20190704");
  CHECK(parse_date_compact("city_20190704.tmov") == Date{2019, 7, 4});
  CHECK(parse_date_compact("pre123_20191231_post.tmov") == Date{2019, 12, 31});
  CHECK_THROWS_AS(parse_date_compact("no_date_here.tmov"), ValueError);
  CHECK_THROWS_AS(parse_date_compact("bad_20191341.tmov"), ValueError);
  CHECK(add_days({2019, 12, 31}, 1) == Date{2020, 1, 1});
  CHECK(add_days({2020, 2, 28}, 1) == Date{2020, 2, 29});
  CHECK(add_days({2019, 1, 1}, 365) == Date{2020, 1, 1});
}

TEST_CASE("tmov round trip is bitwise exact") {
  TempDir tmp;
  std::vector<std::uint8_t> payload(4 * 3 * 9);
  for (std::size_t i = 0; i < payload.size(); ++i)
    payload[i] = static_cast<std::uint8_t>(i * 7 % 256);
  write_tmov(tmp.file("x.tmov"), TmovRole::kPrediction, {4, 3, 9}, payload);

  TmovRole role;
  std::vector<int> dims;
  std::vector<std::uint8_t> back;
  read_tmov(tmp.file("x.tmov"), role, dims, back);
  CHECK(role == TmovRole::kPrediction);
  CHECK(dims == std::vector<int>{4, 3, 9});
  CHECK(back == payload);
  CHECK(peek_tmov_role(tmp.file("x.tmov")) == TmovRole::kPrediction);
}

TEST_CASE("tmov rejects malformed files") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("bad.tmov"), std::ios::binary);
    out.write("XXXX\1\0\0\0", 8);
  }
  TmovRole role;
  std::vector<int> dims;
  std::vector<std::uint8_t> payload;
  CHECK_THROWS_AS(read_tmov(tmp.file("bad.tmov"), role, dims, payload),
                  FormatError);

  write_tmov(tmp.file("ok.tmov"), TmovRole::kMovie, {2, 2, 2}, //
             std::vector<std::uint8_t>(8, 1));
  {
    std::ifstream in(tmp.file("ok.tmov"), std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    bytes.resize(bytes.size() - 3);
    std::ofstream out(tmp.file("trunc.tmov"), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(read_tmov(tmp.file("trunc.tmov"), role, dims, payload),
                  FormatError);
  CHECK_THROWS_AS(read_tmov(tmp.file("missing.tmov"), role, dims, payload),
                  IoError);
}

TEST_CASE("movie and static map files round trip, date from the name") {
  TempDir tmp;
  SynthCity city = synth_city(3, 16, 12, 0.3);
  TrafficMovie movie = synth_movie(city, 4, {2019, 3, 8});
  movie.city = "testville";

  write_movie(movie, tmp.file("testville_20190308.tmov"));
  TrafficMovie back =
      read_movie(tmp.file("testville_20190308.tmov"), "testville");
  CHECK(back.city == "testville");
  CHECK(back.date == Date{2019, 3, 8});
  CHECK(back.height == 16);
  CHECK(back.width == 12);
  CHECK(back.data == movie.data);

  city.static_map.city = "testville";
  write_static(city.static_map, tmp.file("static_testville.tmov"));
  StaticMap sm = read_static(tmp.file("static_testville.tmov"), "testville");
  CHECK(sm.data == city.static_map.data);
  CHECK(peek_tmov_role(tmp.file("static_testville.tmov")) ==
        TmovRole::kStatic);
  CHECK(peek_tmov_role(tmp.file("testville_20190308.tmov")) ==
        TmovRole::kMovie);

  // role confusion is rejected
  CHECK_THROWS_AS(read_movie(tmp.file("static_testville.tmov"), "x"),
                  FormatError);
}

TEST_CASE("extract_sample pulls input frames and the six horizons") {
  SynthCity city = synth_city(5, 8, 8, 0.4);
  TrafficMovie movie = synth_movie(city, 6, {2019, 5, 6});

  Sample s = extract_sample(movie, 11);
  CHECK(s.anchor == 11);
  CHECK(s.weekday == 0);  // 2019-05-06 was a Monday
  CHECK(s.input.size() == 12u * 8 * 8 * 9);
  CHECK(s.target.size() == 6u * 8 * 8 * 9);

  const std::size_t frame = 8 * 8 * 9;
  for (int i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < frame; ++j)
      CHECK(s.input[i * frame + j] == movie.data[i * frame + j]);
  const int offsets[] = {12, 13, 14, 17, 20, 23};
  for (int i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < frame; ++j)
      CHECK(s.target[i * frame + j] == movie.data[offsets[i] * frame + j]);

  Sample last = extract_sample(movie, 275);
  for (std::size_t j = 0; j < frame; ++j)
    CHECK(last.target[5 * frame + j] == movie.data[287 * frame + j]);

  CHECK_THROWS_AS(extract_sample(movie, 10), ValueError);
  CHECK_THROWS_AS(extract_sample(movie, 276), ValueError);
}

TEST_CASE("synth_city is deterministic and shaped by density") {
  SynthCity a = synth_city(7, 32, 24, 0.3);
  SynthCity b = synth_city(7, 32, 24, 0.3);
  CHECK(a.static_map.data == b.static_map.data);
  CHECK(a.road_mask == b.road_mask);

  double on = 0.0;
  for (std::uint8_t v : a.road_mask) on += v;
  const double frac = on / (32.0 * 24.0);
  CHECK(frac >= 0.3 * 0.8);
  CHECK(frac <= 0.3 * 1.4);

  // off-road pixels carry no static features
  for (int h = 0; h < 32; ++h)
    for (int w = 0; w < 24; ++w)
      if (!a.road_mask[static_cast<std::size_t>(h) * 24 + w])
        for (int c = 0; c < kStaticChannels; ++c)
          CHECK(a.static_map.at(h, w, c) == 0);

  SynthCity c = synth_city(8, 32, 24, 0.3);
  CHECK(a.road_mask != c.road_mask);
}

TEST_CASE("synth_movie has diurnal structure confined to the roads") {
  SynthCity city = synth_city(9, 24, 24, 0.35);
  TrafficMovie mon = synth_movie(city, 10, {2019, 5, 6});   // Monday
  TrafficMovie sun = synth_movie(city, 10, {2019, 5, 5});   // Sunday
  TrafficMovie mon2 = synth_movie(city, 10, {2019, 5, 6});
  CHECK(mon.data == mon2.data);

  auto mean_volume = [&](const TrafficMovie& m, int t) {
    double s = 0.0;
    int n = 0;
    for (int h = 0; h < m.height; ++h)
      for (int w = 0; w < m.width; ++w)
        if (city.road_mask[static_cast<std::size_t>(h) * m.width + w]) {
          for (int c = 0; c < 8; c += 2) s += m.at(t, h, w, c);
          n += 4;
        }
    return s / n;
  };

  // rush hour beats 3am, weekday beats weekend
  CHECK(mean_volume(mon, 96) > 2.0 * mean_volume(mon, 36));
  CHECK(mean_volume(mon, 96) > 1.2 * mean_volume(sun, 96));

  // off-road pixels are all zero in every frame
  bool off_road_zero = true;
  for (int t = 0; t < kFramesPerDay; t += 7)
    for (int h = 0; h < mon.height; ++h)
      for (int w = 0; w < mon.width; ++w)
        if (!city.road_mask[static_cast<std::size_t>(h) * mon.width + w])
          for (int c = 0; c < kDynamicChannels; ++c)
            if (mon.at(t, h, w, c) != 0) off_road_zero = false;
  CHECK(off_road_zero);

  // incidents: sparse on road pixels, independent per frame, values >= 100
  long hits = 0, total = 0;
  for (int t = 0; t < kFramesPerDay; t += 7)
    for (int h = 0; h < mon.height; ++h)
      for (int w = 0; w < mon.width; ++w)
        if (city.road_mask[static_cast<std::size_t>(h) * mon.width + w]) {
          const std::uint8_t v = mon.at(t, h, w, 8);
          if (v != 0) {
            CHECK(v >= 100);
            ++hits;
          }
          ++total;
        }
  const double rate = static_cast<double>(hits) / static_cast<double>(total);
  CHECK(rate > 0.03);
  CHECK(rate < 0.07);
}

TEST_CASE("manifest round trip with cities and comments") {
  TempDir tmp;
  std::vector<ManifestEntry> entries = {
      {"a/movie_20190101.tmov", "alpha"},
      {"static_alpha.tmov", "alpha"},
      {"b/movie_20190102.tmov", "beta"},
  };
  write_manifest(tmp.file("m.txt"), entries);
  auto back = read_manifest(tmp.file("m.txt"));
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].city == entries[i].city);
    // paths come back resolved relative to the manifest location
    CHECK(std::filesystem::path(back[i].path) == tmp.path / entries[i].path);
  }

  {
    std::ofstream out(tmp.file("c.txt"));
    out << "# comment line\n\ncity=gamma g/movie_20190103.tmov\nplain.tmov\n";
  }
  auto parsed = read_manifest(tmp.file("c.txt"));
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0].city == "gamma");
  CHECK(parsed[1].city == "");

  CHECK_THROWS_AS(read_manifest(tmp.file("missing.txt")), IoError);
}

TEST_CASE("build_index covers every anchor exactly once for training") {
  std::vector<ManifestEntry> movies;
  for (int i = 0; i < 20; ++i)
    movies.push_back({"m" + std::to_string(i) + ".tmov", "a"});
  DatasetIndex idx = build_index(movies, Split::kTrain, 3);
  CHECK(idx.entries.size() == 20u * kAnchorsPerDay);

  std::set<std::pair<int, int>> seen;
  for (const auto& e : idx.entries) {
    CHECK(e.anchor >= kMinAnchor);
    CHECK(e.anchor <= kMaxAnchor);
    seen.insert({e.file, e.anchor});
  }
  CHECK(seen.size() == idx.entries.size());

  DatasetIndex again = build_index(movies, Split::kTrain, 3);
  bool same = true;
  for (std::size_t i = 0; i < idx.entries.size(); ++i)
    if (idx.entries[i].file != again.entries[i].file ||
        idx.entries[i].anchor != again.entries[i].anchor)
      same = false;
  CHECK(same);

  DatasetIndex other = build_index(movies, Split::kTrain, 4);
  bool differs = false;
  for (std::size_t i = 0; i < idx.entries.size(); ++i)
    if (idx.entries[i].anchor != other.entries[i].anchor) differs = true;
  CHECK(differs);

  // the shuffle is not the identity
  bool shuffled = false;
  for (std::size_t i = 0; i + 1 < idx.entries.size() && !shuffled; ++i)
    if (idx.entries[i + 1].anchor != idx.entries[i].anchor + 1 &&
        idx.entries[i + 1].file == idx.entries[i].file)
      shuffled = true;
  CHECK(shuffled);
}

TEST_CASE("validation index strides anchors deterministically") {
  std::vector<ManifestEntry> movies = {{"a.tmov", "x"}, {"b.tmov", "x"}};
  DatasetIndex idx = build_index(movies, Split::kValidation, 1);
  CHECK(idx.entries.size() == 2u * 12);
  for (const auto& e : idx.entries) {
    CHECK((e.anchor - kMinAnchor) % kValidationAnchorStride == 0);
    CHECK(e.anchor <= kMaxAnchor);
  }
  DatasetIndex again = build_index(movies, Split::kValidation, 77);
  for (std::size_t i = 0; i < idx.entries.size(); ++i) {
    CHECK(idx.entries[i].file == again.entries[i].file);
    CHECK(idx.entries[i].anchor == again.entries[i].anchor);
  }
}

TEST_CASE("multi-city training cycles the cities round-robin") {
  std::vector<ManifestEntry> movies = {
      {"a1.tmov", "a"}, {"a2.tmov", "a"}, {"b1.tmov", "b"}, {"c1.tmov", "c"},
  };
  DatasetIndex idx = build_index(movies, Split::kTrain, 5, true);
  CHECK(idx.entries.size() == 4u * kAnchorsPerDay);
  auto city_of = [&](const DatasetIndex::Entry& e) {
    return idx.files[static_cast<std::size_t>(e.file)].city;
  };
  // first cycle visits each city once before any repeats
  std::set<std::string> first3 = {city_of(idx.entries[0]),
                                  city_of(idx.entries[1]),
                                  city_of(idx.entries[2])};
  CHECK(first3 == std::set<std::string>{"a", "b", "c"});
}

TEST_CASE("build_index rejects an empty movie list") {
  CHECK_THROWS_AS(build_index({}, Split::kTrain, 1), ValueError);
}
