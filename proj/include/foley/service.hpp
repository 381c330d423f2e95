#pragma once

#include <memory>
#include <string>

#include "foley/checkpoint.hpp"

namespace foley {

struct HttpReply {
  int status = 200;
  std::string body;  // JSON, UTF-8
};

/// HTTP front end over one immutable checkpoint. Requests share nothing else.
class FoleyService {
 public:
  explicit FoleyService(std::shared_ptr<const Checkpoint> checkpoint);

  /// Routing without sockets; the network layer forwards to this.
  HttpReply handle(const std::string& method, const std::string& path, const std::string& body) const;

  HttpReply health() const;
  HttpReply config() const;
  HttpReply generate(const std::string& body) const;
  HttpReply mix(const std::string& body) const;

  /// Blocks until stop() is called from another thread.
  void serve(const std::string& host, int port);
  /// Binds to an ephemeral port and returns it; call run() afterwards.
  int bind_any(const std::string& host);
  void run();
  void stop();

 private:
  struct Server;
  std::shared_ptr<const Checkpoint> ck_;
  std::shared_ptr<Server> server_;
};

}  // namespace foley
