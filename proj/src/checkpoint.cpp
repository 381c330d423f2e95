#include "foley/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace foley {
namespace {

constexpr char kMagic[4] = {'C', 'F', 'L', 'Y'};

template <typename T>
void put_le(std::vector<unsigned char>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::vector<unsigned char>& in, std::size_t pos) {
  if (pos + sizeof(T) > in.size()) throw std::runtime_error("truncated checkpoint");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(in[pos + i]) << (8 * i);
  return v;
}

std::string content_id(const std::vector<unsigned char>& bytes) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

nlohmann::json topology_json(const nn::Topology& t) {
  return {{"latent_height", t.latent_height}, {"latent_width", t.latent_width},
          {"curve_length", t.curve_length},   {"classes", t.classes},
          {"context_channels", t.context_channels}, {"visual_frames", t.visual_frames}};
}

}  // namespace

std::vector<unsigned char> encode_checkpoint(const FoleyConfig& cfg, const data::NormStats& stats,
                                             const nn::DenoiserParams& params) {
  nlohmann::json manifest = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& s : params.layout.specs()) {
    manifest.push_back({{"name", s.name}, {"shape", {s.rows, s.cols}}, {"offset", offset}});
    offset += s.size() * sizeof(float);
  }
  nlohmann::json header = {{"format", "foley-checkpoint"},
                           {"topology", topology_json(params.topo)},
                           {"normalization", {{"mean", stats.mean}, {"std", stats.stddev}}},
                           {"config", to_json(cfg)},
                           {"dtype", "float32-le"},
                           {"tensors", manifest}};
  const std::string text = header.dump();

  std::vector<unsigned char> out(kMagic, kMagic + 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset);
  for (const auto& s : params.layout.specs()) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const float f = static_cast<float>(params.values[s.offset + i]);
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    }
  }
  return out;
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw std::runtime_error("not a checkpoint");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version");
  const auto header_len = get_le<std::uint64_t>(bytes, 8);
  if (16 + header_len > bytes.size()) throw std::runtime_error("truncated checkpoint");
  const auto header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));

  Checkpoint ck;
  ck.config = config_from_json(header.at("config"));
  ck.stats.mean = header.at("normalization").at("mean").get<double>();
  ck.stats.stddev = header.at("normalization").at("std").get<double>();
  const auto topo = nn::Topology::from_config(ck.config);
  if (topology_json(topo) != header.at("topology")) throw std::runtime_error("checkpoint topology mismatch");
  ck.params = nn::zero_params(topo);

  const std::size_t base = 16 + header_len;
  for (const auto& t : header.at("tensors")) {
    const auto& s = ck.params.layout.spec(t.at("name").get<std::string>());
    if (t.at("shape")[0].get<int>() != s.rows || t.at("shape")[1].get<int>() != s.cols)
      throw std::runtime_error("checkpoint shape mismatch: " + s.name);
    const std::size_t off = base + t.at("offset").get<std::size_t>();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto bits = get_le<std::uint32_t>(bytes, off + 4 * i);
      ck.params.values[s.offset + i] = static_cast<double>(std::bit_cast<float>(bits));
    }
  }
  ck.id = content_id(bytes);
  return ck;
}

void save_checkpoint(const std::string& path, const FoleyConfig& cfg, const data::NormStats& stats,
                     const nn::DenoiserParams& params) {
  const auto bytes = encode_checkpoint(cfg, stats, params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  if (!std::filesystem::exists(path)) throw std::invalid_argument("missing checkpoint: " + path);
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace foley
