#include "foley/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace foley::data {

namespace fs = std::filesystem;
using nlohmann::json;

NormStats compute_stats(const std::vector<synth::PairedExample>& examples) {
  if (examples.empty()) throw std::invalid_argument("empty dataset");
  double sum = 0.0, sq = 0.0, n = 0.0;
  for (const auto& ex : examples) {
    sum += ex.spec.values.sum();
    n += static_cast<double>(ex.spec.values.size());
  }
  const double mean = sum / n;
  for (const auto& ex : examples) sq += (ex.spec.values.array() - mean).square().sum();
  NormStats s;
  s.mean = mean;
  s.stddev = std::sqrt(sq / n);
  if (!(s.stddev > 0)) s.stddev = 1.0;
  return s;
}

Latent to_latent(const dsp::MelSpectrogram& spec, const NormStats& stats) {
  Latent z(spec.n_mels(), spec.frames(), 1);
  for (int m = 0; m < spec.n_mels(); ++m) {
    for (int f = 0; f < spec.frames(); ++f) z.at(m, f) = (spec.values(f, m) - stats.mean) / stats.stddev;
  }
  return z;
}

dsp::MelSpectrogram from_latent(const Latent& z, const NormStats& stats, double frame_rate) {
  dsp::MelSpectrogram spec;
  spec.frame_rate = frame_rate;
  spec.values.resize(z.width, z.height);
  for (int m = 0; m < z.height; ++m) {
    for (int f = 0; f < z.width; ++f) spec.values(f, m) = z.at(m, f) * stats.stddev + stats.mean;
  }
  return spec;
}

Dataset generate_dataset(const FoleyConfig& cfg, int count, std::uint64_t seed, bool quantize) {
  std::mt19937_64 rng(seed);
  const auto fb = synth::make_filterbank(cfg);
  Dataset ds;
  ds.examples.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const auto script = synth::sample_script(rng, cfg);
    auto audio = synth::render_audio(script, cfg.audio.sample_rate, cfg.synth);
    if (quantize) audio = quantize_pcm16(audio);
    ds.examples.push_back(synth::example_from_audio(script, std::move(audio), cfg, fb));
  }
  ds.stats = compute_stats(ds.examples);
  return ds;
}

json curve_to_json(const loudness::LoudnessCurve& curve) { return {{"rate", curve.rate}, {"values", curve.values}}; }

loudness::LoudnessCurve curve_from_json(const json& j) {
  if (!j.is_object() || !j.contains("values") || !j["values"].is_array()) {
    throw std::invalid_argument("curve: expected {\"rate\": number, \"values\": [numbers]}");
  }
  loudness::LoudnessCurve c;
  if (j.contains("rate")) {
    if (!j["rate"].is_number() || !(j["rate"].get<double>() > 0)) throw std::invalid_argument("curve: invalid rate");
    c.rate = j["rate"].get<double>();
  }
  for (const auto& v : j["values"]) {
    if (!v.is_number()) throw std::invalid_argument("curve: values must be numbers");
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < 0) throw std::invalid_argument("curve: values must be finite and nonnegative");
    c.values.push_back(x);
  }
  if (c.values.empty()) throw std::invalid_argument("curve: no values");
  return c;
}

json mask_to_json(const cond::MaskTrack& mask) {
  json frames = json::array();
  for (int t = 0; t < mask.frames(); ++t) {
    json rows = json::array();
    for (int r = 0; r < mask.height(); ++r) {
      json row = json::array();
      for (int c = 0; c < mask.width(); ++c) row.push_back(static_cast<int>(mask.at(t, r, c)));
      rows.push_back(std::move(row));
    }
    frames.push_back({{"t", t}, {"cells", std::move(rows)}});
  }
  return {{"frames", std::move(frames)}};
}

cond::MaskTrack mask_from_json(const json& j, const cond::VisualGrid& grid) {
  if (!j.is_object() || !j.contains("frames") || !j["frames"].is_array()) {
    throw std::invalid_argument("mask: expected {\"frames\": [...]}");
  }
  cond::MaskTrack mask(grid.frames, grid.height, grid.width, 1);
  for (const auto& fr : j["frames"]) {
    if (!fr.is_object() || !fr.contains("t") || !fr["t"].is_number_integer() || !fr.contains("cells")) {
      throw std::invalid_argument("mask: each frame needs integer t and cells");
    }
    const int t = fr["t"].get<int>();
    if (t < 0 || t >= grid.frames) throw std::invalid_argument("mask: frame index out of range");
    const auto& cells = fr["cells"];
    if (!cells.is_array() || static_cast<int>(cells.size()) != grid.height) {
      throw std::invalid_argument("mask: expected " + std::to_string(grid.height) + " rows");
    }
    for (int r = 0; r < grid.height; ++r) {
      const auto& row = cells[r];
      if (!row.is_array() || static_cast<int>(row.size()) != grid.width) {
        throw std::invalid_argument("mask: expected " + std::to_string(grid.width) + " columns");
      }
      for (int c = 0; c < grid.width; ++c) {
        if (!row[c].is_number_integer() || (row[c].get<int>() != 0 && row[c].get<int>() != 1)) {
          throw std::invalid_argument("mask: cells must be 0 or 1");
        }
        mask.set(t, r, c, static_cast<std::uint8_t>(row[c].get<int>()));
      }
    }
  }
  return mask;
}

namespace {

const char* envelope_name(synth::Envelope e) {
  switch (e) {
    case synth::Envelope::kRise: return "rise";
    case synth::Envelope::kFall: return "fall";
    default: return "constant";
  }
}

synth::Envelope envelope_from(const std::string& s) {
  if (s == "constant") return synth::Envelope::kConstant;
  if (s == "rise") return synth::Envelope::kRise;
  if (s == "fall") return synth::Envelope::kFall;
  throw std::invalid_argument("script: unknown envelope " + s);
}

}  // namespace

json script_to_json(const synth::EventScript& script) {
  json events = json::array();
  for (const auto& e : script.events) {
    events.push_back({{"class_id", e.class_id},
                      {"onset_s", e.onset},
                      {"duration_s", e.duration},
                      {"gain", e.gain},
                      {"region", {{"row", e.region.row}, {"col", e.region.col}, {"height", e.region.height}, {"width", e.region.width}}},
                      {"envelope", envelope_name(e.envelope)},
                      {"silent", e.silent}});
  }
  return {{"clip_seconds", script.clip_seconds}, {"events", std::move(events)}};
}

synth::EventScript script_from_json(const json& j) {
  try {
    synth::EventScript s;
    s.clip_seconds = j.value("clip_seconds", 2.0);
    for (const auto& e : j.at("events")) {
      synth::Event ev;
      ev.class_id = e.at("class_id").get<int>();
      ev.onset = e.at("onset_s").get<double>();
      ev.duration = e.at("duration_s").get<double>();
      ev.gain = e.at("gain").get<double>();
      const auto& r = e.at("region");
      ev.region = {r.at("row").get<int>(), r.at("col").get<int>(), r.at("height").get<int>(), r.at("width").get<int>()};
      ev.envelope = envelope_from(e.value("envelope", std::string("constant")));
      ev.silent = e.value("silent", false);
      s.events.push_back(ev);
    }
    return s;
  } catch (const json::exception& ex) {
    throw std::invalid_argument(std::string("script: ") + ex.what());
  }
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in " + path + ": " + e.what());
  }
}

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << '\n';
}

namespace {

std::string clip_id(int i) {
  std::ostringstream os;
  os << "clip_" << std::setw(5) << std::setfill('0') << i;
  return os.str();
}

}  // namespace

json write_split(const std::string& root, const std::string& split, const FoleyConfig& cfg, int count,
                 std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("clip count must be positive");
  const fs::path dir = fs::path(root) / split;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  const Dataset ds = generate_dataset(cfg, count, seed, /*quantize=*/true);
  json ids = json::array();
  for (int i = 0; i < count; ++i) {
    const auto& ex = ds.examples[i];
    const std::string id = clip_id(i);
    const fs::path clip = dir / id;
    fs::create_directories(clip, ec);
    if (ec) throw std::runtime_error("cannot create " + clip.string());
    write_wav((clip / "clip.wav").string(), ex.audio);
    write_json((clip / "script.json").string(), script_to_json(ex.script));
    write_json((clip / "curve.json").string(), curve_to_json(ex.curve));
    write_json((clip / "mask.json").string(), mask_to_json(ex.masks));
    ids.push_back(id);
  }
  json manifest = {{"split", split},
                   {"seed", seed},
                   {"count", count},
                   {"ids", ids},
                   {"normalization", {{"mean", ds.stats.mean}, {"std", ds.stats.stddev}}},
                   {"config", to_json(cfg)}};
  write_json((dir / "manifest.json").string(), manifest);
  return manifest;
}

Dataset load_split(const std::string& split_dir, const FoleyConfig& cfg) {
  const fs::path dir(split_dir);
  const json manifest = read_json((dir / "manifest.json").string());
  const auto fb = synth::make_filterbank(cfg);
  Dataset ds;
  for (const auto& id : manifest.at("ids")) {
    const fs::path clip = dir / id.get<std::string>();
    const auto script = script_from_json(read_json((clip / "script.json").string()));
    auto audio = read_wav((clip / "clip.wav").string());
    auto ex = synth::example_from_audio(script, std::move(audio), cfg, fb);
    ex.masks = mask_from_json(read_json((clip / "mask.json").string()), cfg.grid);
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty()) throw std::invalid_argument("empty split " + split_dir);
  ds.stats.mean = manifest.at("normalization").at("mean").get<double>();
  ds.stats.stddev = manifest.at("normalization").at("std").get<double>();
  return ds;
}

}  // namespace foley::data
