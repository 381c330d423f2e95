#include "foley/service.hpp"

#include <atomic>
#include <iostream>
#include <random>
#include <sstream>

#include <httplib.h>

#include "foley/dataset.hpp"
#include "foley/generate.hpp"

namespace foley {
namespace {

using json = nlohmann::json;

HttpReply reply(int status, const json& j) { return {status, j.dump()}; }

HttpReply bad_request(const std::string& field, const std::string& message) {
  json j = {{"error", message}};
  if (!field.empty()) j["field"] = field;
  return reply(400, j);
}

HttpReply internal_error(const std::exception& e) {
  static std::atomic<std::uint64_t> counter{0};
  std::ostringstream id;
  id << "err-" << std::hex << std::random_device{}() << '-' << counter++;
  std::cerr << "[" << id.str() << "] " << e.what() << '\n';
  return reply(500, {{"error", "internal error"}, {"id", id.str()}});
}

std::optional<json> parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error&) {
    return std::nullopt;
  }
}

}  // namespace

struct FoleyService::Server {
  httplib::Server http;
};

FoleyService::FoleyService(std::shared_ptr<const Checkpoint> checkpoint)
    : ck_(std::move(checkpoint)), server_(std::make_shared<Server>()) {
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    const auto r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json; charset=utf-8");
  };
  server_->http.Get("/health", forward);
  server_->http.Get("/config", forward);
  server_->http.Post("/generate", forward);
  server_->http.Post("/mix", forward);
}

HttpReply FoleyService::handle(const std::string& method, const std::string& path, const std::string& body) const {
  if (method == "GET" && path == "/health") return health();
  if (method == "GET" && path == "/config") return config();
  if (method == "POST" && path == "/generate") return generate(body);
  if (method == "POST" && path == "/mix") return mix(body);
  return reply(404, {{"error", "not found"}});
}

HttpReply FoleyService::health() const { return reply(200, {{"status", "ok"}, {"checkpoint", ck_->id}}); }

HttpReply FoleyService::config() const {
  const auto& cfg = ck_->config;
  return reply(200, {{"checkpoint", ck_->id},
                     {"config", to_json(cfg)},
                     {"curve_length", cfg.curve_length()},
                     {"curve_rate", cfg.loudness.rate},
                     {"mask", {{"frames", cfg.grid.frames}, {"height", cfg.grid.height}, {"width", cfg.grid.width}}},
                     {"classes", cfg.synth.class_names},
                     {"default_scene", data::script_to_json(default_scene(cfg))},
                     {"defaults",
                      {{"s_text", cfg.sample.s_text},
                       {"s_video", cfg.sample.s_video},
                       {"steps", cfg.sample.steps},
                       {"sampler", cfg.sample.sampler}}}});
}

HttpReply FoleyService::generate(const std::string& body) const {
  const auto j = parse_body(body);
  if (!j) return bad_request("", "malformed JSON");
  try {
    const auto req = request_from_json(*j, ck_->config);
    return reply(200, result_to_json(foley::generate(*ck_, req), ck_->config));
  } catch (const RequestError& e) {
    return bad_request(e.field(), e.what());
  } catch (const std::invalid_argument& e) {
    return bad_request("", e.what());
  } catch (const std::exception& e) {
    return internal_error(e);
  }
}

HttpReply FoleyService::mix(const std::string& body) const {
  const auto j = parse_body(body);
  if (!j) return bad_request("", "malformed JSON");
  if (!j->is_object() || !j->contains("clips") || !(*j)["clips"].is_array())
    return bad_request("clips", "clips must be an array of base64 WAV strings");
  try {
    std::vector<AudioBuffer> clips;
    for (const auto& c : (*j)["clips"]) {
      if (!c.is_string()) return bad_request("clips", "clips must be an array of base64 WAV strings");
      clips.push_back(decode_wav(base64_decode(c.get<std::string>())));
    }
    return reply(200, {{"wav", base64_encode(encode_wav(mix_audio(clips)))}});
  } catch (const std::invalid_argument& e) {
    return bad_request("clips", e.what());
  } catch (const std::exception& e) {
    return internal_error(e);
  }
}

void FoleyService::serve(const std::string& host, int port) {
  if (!server_->http.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

int FoleyService::bind_any(const std::string& host) {
  const int port = server_->http.bind_to_any_port(host);
  if (port < 0) throw std::runtime_error("cannot bind " + host);
  return port;
}

void FoleyService::run() { server_->http.listen_after_bind(); }

void FoleyService::stop() { server_->http.stop(); }

}  // namespace foley
