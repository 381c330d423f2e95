// foley: data generation, training, sampling, evaluation and serving.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "foley/checkpoint.hpp"
#include "foley/dataset.hpp"
#include "foley/evaluate.hpp"
#include "foley/generate.hpp"
#include "foley/service.hpp"
#include "foley/train.hpp"

namespace {

using json = nlohmann::json;
using namespace foley;

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

FoleyConfig load_or_default(const std::string& path) {
  FoleyConfig cfg = path.empty() ? FoleyConfig{} : load_config(path);
  cfg.validate();
  return cfg;
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string strip_wav(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".wav") return path.substr(0, path.size() - 4);
  return path;
}

struct SampleArgs {
  std::string checkpoint, wav_out, mel_out, env_out, request, curve, mask, script, tag, sampler;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<double> s_text, s_video;
};

// Flags are folded into the same JSON request the service accepts, so both
// paths share one parser and one generator.
json sample_request(const SampleArgs& a) {
  json j = a.request.empty() ? json::object() : data::read_json(a.request);
  if (!a.curve.empty()) j["curve"] = data::read_json(a.curve);
  if (!a.mask.empty()) j["mask"] = data::read_json(a.mask);
  if (!a.script.empty()) j["script"] = data::read_json(a.script);
  if (!a.tag.empty()) j["tag"] = a.tag;
  if (!a.sampler.empty()) j["sampler"] = a.sampler;
  if (a.seed) j["seed"] = *a.seed;
  if (a.steps) j["steps"] = *a.steps;
  if (a.s_text) j["s_text"] = *a.s_text;
  if (a.s_video) j["s_video"] = *a.s_video;
  return j;
}

int run_sample(const SampleArgs& a) {
  const auto ck = load_checkpoint(a.checkpoint);
  const auto req = request_from_json(sample_request(a), ck.config);
  const auto res = generate(ck, req);
  write_bytes(a.wav_out, res.wav);
  const std::string stem = strip_wav(a.wav_out);
  auto full = result_to_json(res, ck.config);
  data::write_json(a.mel_out.empty() ? stem + ".mel.json" : a.mel_out,
                   {{"frame_rate", res.mel.frame_rate}, {"mel", full["mel"]}, {"seed", res.seed}});
  data::write_json(a.env_out.empty() ? stem + ".envelope.json" : a.env_out,
                   {{"achieved_envelope", full["achieved_envelope"]},
                    {"envelope_r", full["envelope_r"]},
                    {"predicted_class", full["predicted_class"]},
                    {"seed", res.seed}});
  std::cout << "seed " << res.seed << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controllable toy foley diffusion"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config (defaults when omitted)");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic split to disk");
  std::string gen_out, gen_split = "train";
  int gen_count = 512;
  std::uint64_t gen_seed = 0;
  gen->add_option("--out", gen_out, "Dataset root")->required();
  gen->add_option("--split", gen_split, "Split name");
  gen->add_option("-n,--count", gen_count, "Number of clips");
  gen->add_option("--seed", gen_seed, "Generator seed");

  // train
  auto* tr = app.add_subcommand("train", "Train the denoiser");
  std::string tr_data, tr_out, tr_log;
  std::optional<int> tr_steps, tr_batch;
  std::optional<double> tr_lr;
  std::optional<std::uint64_t> tr_seed;
  tr->add_option("--data", tr_data, "Split directory")->required();
  tr->add_option("--out", tr_out, "Checkpoint path")->required();
  tr->add_option("--log", tr_log, "Loss CSV (step,loss)");
  tr->add_option("--steps", tr_steps);
  tr->add_option("--batch", tr_batch);
  tr->add_option("--lr", tr_lr);
  tr->add_option("--seed", tr_seed);

  // sample
  auto* sa = app.add_subcommand("sample", "Generate one clip");
  SampleArgs sargs;
  sa->add_option("--checkpoint", sargs.checkpoint)->required();
  sa->add_option("--out", sargs.wav_out, "WAV output")->required();
  sa->add_option("--mel-out", sargs.mel_out, "Mel JSON (default <out>.mel.json)");
  sa->add_option("--envelope-out", sargs.env_out, "Envelope JSON (default <out>.envelope.json)");
  sa->add_option("--request", sargs.request, "GenerateRequest JSON file");
  sa->add_option("--curve", sargs.curve, "Curve JSON file");
  sa->add_option("--mask", sargs.mask, "Mask JSON file");
  sa->add_option("--script", sargs.script, "Toy video script JSON file");
  sa->add_option("--tag", sargs.tag, "Class name");
  sa->add_option("--sampler", sargs.sampler, "ddim or ddpm");
  sa->add_option("--seed", sargs.seed);
  sa->add_option("--steps", sargs.steps);
  sa->add_option("--s-text", sargs.s_text);
  sa->add_option("--s-video", sargs.s_video);

  // eval
  auto* ev = app.add_subcommand("eval", "Metrics over a held-out split");
  std::string ev_ck, ev_data, ev_out;
  EvalOptions ev_opts;
  ev->add_option("--checkpoint", ev_ck)->required();
  ev->add_option("--data", ev_data, "Held-out split directory")->required();
  ev->add_option("--out", ev_out, "Metrics JSON");
  ev->add_option("-n,--count", ev_opts.count);
  ev->add_option("--seed", ev_opts.seed);
  ev->add_option("--steps", ev_opts.steps);

  // grad-check
  auto* gc = app.add_subcommand("grad-check", "Finite-difference gradient check");
  train::GradCheckOptions gc_opts;
  std::string gc_corrupt;
  int gc_batch = 4;
  gc->add_option("--seed", gc_opts.seed);
  gc->add_option("--coords", gc_opts.coords_per_tensor, "Coordinates per tensor");
  gc->add_option("--batch", gc_batch);
  gc->add_option("--corrupt", gc_corrupt, "Double this tensor's analytic gradient");

  // encode-signal
  auto* es = app.add_subcommand("encode-signal", "Loudness curve of a WAV");
  std::string es_in, es_out;
  es->add_option("wav", es_in)->required();
  es->add_option("--out", es_out, "Curve JSON (stdout when omitted)");

  // mix
  auto* mx = app.add_subcommand("mix", "Sum WAV clips");
  std::vector<std::string> mx_in;
  std::string mx_out;
  mx->add_option("clips", mx_in)->required();
  mx->add_option("--out", mx_out)->required();

  // serve
  auto* sv = app.add_subcommand("serve", "HTTP service");
  std::string sv_ck, sv_host = "127.0.0.1";
  int sv_port = 8080;
  sv->add_option("--checkpoint", sv_ck)->required();
  sv->add_option("--host", sv_host);
  sv->add_option("--port", sv_port);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto cfg = load_or_default(config_path);
      const auto manifest = data::write_split(gen_out, gen_split, cfg, gen_count, gen_seed);
      std::cout << manifest["count"] << " clips written to " << gen_out << "/" << gen_split << '\n';
    } else if (*tr) {
      auto cfg = load_or_default(config_path);
      if (tr_steps) cfg.train.steps = *tr_steps;
      if (tr_batch) cfg.train.batch_size = *tr_batch;
      if (tr_lr) cfg.train.learning_rate = *tr_lr;
      if (tr_seed) cfg.train.seed = *tr_seed;
      cfg.validate();
      const auto ds = data::load_split(tr_data, cfg);
      std::ofstream log;
      if (!tr_log.empty()) {
        log.open(tr_log);
        if (!log) throw std::runtime_error("cannot write " + tr_log);
        log << "step,loss\n";
        log.precision(17);
      }
      const auto result = train::train(ds, cfg, [&](int step, double loss) {
        if (log.is_open()) log << step << ',' << loss << '\n';
        if ((step + 1) % 100 == 0) std::cerr << "step " << step + 1 << " loss " << loss << '\n';
      });
      save_checkpoint(tr_out, cfg, ds.stats, result.params);
    } else if (*sa) {
      return run_sample(sargs);
    } else if (*ev) {
      const auto ck = load_checkpoint(ev_ck);
      const auto ds = data::load_split(ev_data, ck.config);
      const auto report = evaluate(ck, ds, ev_opts);
      if (ev_out.empty()) {
        std::cout << report.dump(2) << '\n';
      } else {
        data::write_json(ev_out, report);
      }
    } else if (*gc) {
      const auto cfg = load_or_default(config_path);
      if (!gc_corrupt.empty()) gc_opts.corrupt_tensor = gc_corrupt;
      const auto ds = data::generate_dataset(cfg, gc_batch, gc_opts.seed);
      const auto items = train::make_items(ds, cfg.grid);
      const auto params = nn::init_params(nn::Topology::from_config(cfg), gc_opts.seed);
      const auto sched = train::schedule_for(cfg);
      std::mt19937_64 rng(gc_opts.seed);
      std::vector<const train::TrainItem*> batch;
      std::vector<train::ItemDraw> draws;
      for (std::size_t i = 0; i < items.size(); ++i) {
        batch.push_back(&items[i]);
        auto d = train::draw_item(rng, items[i].z0, sched.steps(), 0.0);
        d.drop_text = d.drop_visual = d.drop_signal = (i % 2 == 1);  // null tokens on the tape
        draws.push_back(std::move(d));
      }
      const auto report = train::grad_check(params, batch, draws, sched, gc_opts);
      for (const auto& e : report.entries) {
        std::printf("%-16s %6zu analytic % .6e numeric % .6e rel %.3e\n", e.tensor.c_str(), e.index, e.analytic,
                    e.numeric, e.rel_error);
      }
      std::printf("coordinates %zu  max rel error %.3e\n", report.entries.size(), report.max_rel_error);
      return report.max_rel_error <= 1e-4 ? 0 : kExitRuntime;
    } else if (*es) {
      const auto cfg = load_or_default(config_path);
      const auto curve = loudness::loudness_pipeline(read_wav(es_in), cfg.loudness);
      if (es_out.empty()) {
        std::cout << data::curve_to_json(curve).dump() << '\n';
      } else {
        data::write_json(es_out, data::curve_to_json(curve));
      }
    } else if (*mx) {
      std::vector<AudioBuffer> clips;
      for (const auto& p : mx_in) clips.push_back(read_wav(p));
      write_wav(mx_out, mix_audio(clips));
    } else if (*sv) {
      auto ck = std::make_shared<const Checkpoint>(load_checkpoint(sv_ck));
      FoleyService service(ck);
      std::cerr << "serving checkpoint " << ck->id << " on " << sv_host << ':' << sv_port << '\n';
      service.serve(sv_host, sv_port);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
