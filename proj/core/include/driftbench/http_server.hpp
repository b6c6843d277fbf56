#pragma once

#include <memory>
#include <string>
#include <utility>

#include "driftbench/errors.hpp"
#include "driftbench/service.hpp"

namespace driftbench {

/// Splits `host:port`; a bare port binds 127.0.0.1. Throws Error{validation}.
std::pair<std::string, int> parse_listen_address(const std::string& listen);

int http_status(ErrorCode code);

/// JSON+HTTP front end over a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the socket; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace driftbench
