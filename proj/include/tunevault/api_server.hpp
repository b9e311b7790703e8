#pragma once

#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "tunevault/control_system.hpp"
#include "tunevault/error.hpp"

namespace tunevault {

struct RouteInfo {
  std::string method;
  std::string path;  // documentation form, e.g. /api/tunes/{id}/restore
};

/// One served request, as seen by the access log.
struct AccessRecord {
  std::string method;
  std::string path;  // as requested, including any query string
  int status = 0;
  std::string body;  // empty for streamed responses
};

/// HTTP status carried by an error code on the API.
int http_status(ErrorCode code);

/// Operator API and UI host. JSON bodies use the canonical wire encoding;
/// errors are {"code": ..., "message": ...}.
class ApiServer {
 public:
  explicit ApiServer(ControlSystem& system);
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds `host:port`; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves on a background thread after bind().
  void start();
  /// Serves on the calling thread after bind() until stop().
  void listen();
  void stop();

  /// Called once per request after the response is sent.
  void set_access_log(std::function<void(const AccessRecord&)> log);

  static const std::vector<RouteInfo>& routes();
  /// Routes that have handled at least one request ("GET /api/health").
  std::set<std::string> routes_hit() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace tunevault
