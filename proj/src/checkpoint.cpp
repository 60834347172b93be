#include "atg/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace atg {

namespace {

constexpr char kMagic[4] = {'A', 'T', 'G', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw FormatError("checkpoint: truncated file");
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  const auto n = read_pod<std::uint32_t>(is);
  if (n > 4096) throw FormatError("checkpoint: implausible name length");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw FormatError("checkpoint: truncated file");
  return s;
}

void write_floats(std::ostream& os, const std::vector<float>& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void read_floats(std::istream& is, std::vector<float>& v) {
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(float)));
  if (!is) throw FormatError("checkpoint: truncated file");
}

void write_config(std::ostream& os, const ModelConfig& cfg) {
  write_pod<std::int32_t>(os, cfg.depth);
  write_pod<std::int32_t>(os, cfg.base_channels);
  write_pod<std::int32_t>(os, cfg.channel_multiplier);
  write_pod<std::int32_t>(os, cfg.growth);
  write_pod<std::int32_t>(os, cfg.in_channels);
  write_pod<std::int32_t>(os, cfg.out_channels);
  write_pod<std::uint8_t>(os, cfg.attention_enabled ? 1 : 0);
}

ModelConfig read_config(std::istream& is) {
  ModelConfig cfg;
  cfg.depth = read_pod<std::int32_t>(is);
  cfg.base_channels = read_pod<std::int32_t>(is);
  cfg.channel_multiplier = read_pod<std::int32_t>(is);
  cfg.growth = read_pod<std::int32_t>(is);
  cfg.in_channels = read_pod<std::int32_t>(is);
  cfg.out_channels = read_pod<std::int32_t>(is);
  cfg.attention_enabled = read_pod<std::uint8_t>(is) != 0;
  return cfg;
}

}  // namespace

std::uint64_t config_digest(const ModelConfig& cfg) {
  std::ostringstream os;
  os << cfg.depth << '|' << cfg.base_channels << '|' << cfg.channel_multiplier
     << '|' << cfg.growth << '|' << cfg.in_channels << '|' << cfg.out_channels
     << '|' << (cfg.attention_enabled ? 1 : 0);
  const std::string s = os.str();
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void save_checkpoint(UNetModel& model, const std::string& path,
                     const CheckpointExtras* extras) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, 4);
  write_pod<std::uint32_t>(os, kVersion);
  write_pod<std::uint64_t>(os, config_digest(model.config));
  write_config(os, model.config);
  write_pod<std::uint64_t>(os, extras ? extras->global_step : 0);

  std::vector<std::pair<std::string, Tensor*>> params;
  model.visit_params([&](const std::string& name, Tensor& t) {
    params.emplace_back(name, &t);
  });
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (auto& [name, t] : params) {
    write_string(os, name);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t->ndim()));
    for (int d : t->shape()) write_pod<std::uint32_t>(os,
                                                      static_cast<std::uint32_t>(d));
    write_floats(os, t->data());
  }

  const bool opt = extras && extras->has_optimizer;
  write_pod<std::uint8_t>(os, opt ? 1 : 0);
  if (opt) {
    if (extras->m.size() != params.size() ||
        extras->v.size() != params.size())
      throw ValueError("checkpoint: optimizer state does not match parameters");
    write_pod<double>(os, extras->beta1);
    write_pod<double>(os, extras->beta2);
    write_pod<double>(os, extras->epsilon);
    write_pod<double>(os, extras->learning_rate);
    write_pod<std::uint64_t>(os, extras->optimizer_step);
    for (std::size_t i = 0; i < params.size(); ++i) {
      write_floats(os, extras->m[i]);
      write_floats(os, extras->v[i]);
    }
  }
  if (!os) throw IoError("checkpoint: write failed for " + path);
}

UNetModel load_checkpoint(const std::string& path, CheckpointExtras* extras) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic in " + path);
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kVersion)
    throw FormatError("checkpoint: unsupported version " +
                      std::to_string(version));
  const auto digest = read_pod<std::uint64_t>(is);
  const ModelConfig cfg = read_config(is);
  if (digest != config_digest(cfg))
    throw FormatError("checkpoint: config digest mismatch in " + path);
  const auto global_step = read_pod<std::uint64_t>(is);

  UNetModel model = build_model<float>(cfg, 0);
  std::vector<std::pair<std::string, Tensor*>> params;
  model.visit_params([&](const std::string& name, Tensor& t) {
    params.emplace_back(name, &t);
  });

  const auto count = read_pod<std::uint32_t>(is);
  if (count != params.size())
    throw FormatError("checkpoint: parameter count mismatch");
  for (auto& [name, t] : params) {
    const std::string stored = read_string(is);
    if (stored != name)
      throw FormatError("checkpoint: expected parameter '" + name +
                        "', found '" + stored + "'");
    const auto ndim = read_pod<std::uint32_t>(is);
    if (ndim != static_cast<std::uint32_t>(t->ndim()))
      throw FormatError("checkpoint: rank mismatch for " + name);
    for (int d : t->shape())
      if (read_pod<std::uint32_t>(is) != static_cast<std::uint32_t>(d))
        throw FormatError("checkpoint: shape mismatch for " + name);
    read_floats(is, t->data());
  }

  const auto has_opt = read_pod<std::uint8_t>(is);
  if (extras) {
    extras->global_step = global_step;
    extras->has_optimizer = has_opt != 0;
    extras->m.clear();
    extras->v.clear();
  }
  if (has_opt) {
    const double b1 = read_pod<double>(is);
    const double b2 = read_pod<double>(is);
    const double eps = read_pod<double>(is);
    const double lr = read_pod<double>(is);
    const auto opt_step = read_pod<std::uint64_t>(is);
    if (extras) {
      extras->beta1 = b1;
      extras->beta2 = b2;
      extras->epsilon = eps;
      extras->learning_rate = lr;
      extras->optimizer_step = opt_step;
    }
    for (auto& [name, t] : params) {
      std::vector<float> m(t->size()), v(t->size());
      read_floats(is, m);
      read_floats(is, v);
      if (extras) {
        extras->m.push_back(std::move(m));
        extras->v.push_back(std::move(v));
      }
    }
  }
  return model;
}

}  // namespace atg
