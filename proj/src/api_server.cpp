#include "tunevault/api_server.hpp"

#include <atomic>
#include <charconv>
#include <filesystem>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "tunevault/wire.hpp"

namespace tunevault {

using wire::Json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownChannel:
    case ErrorCode::UnknownTune:
    case ErrorCode::UnknownSnapshot:
    case ErrorCode::UnknownDevice:
    case ErrorCode::UnknownPreset:
    case ErrorCode::NotFound: return 404;
    case ErrorCode::TypeMismatch:
    case ErrorCode::RestoreBusy:
    case ErrorCode::DuplicateName: return 409;
    case ErrorCode::LimitViolation: return 422;
    case ErrorCode::StorageFailure:
    case ErrorCode::WriteFailure:
    case ErrorCode::SubscriberOverflow:
    case ErrorCode::ConnectFailed: return 500;
    default: return 400;
  }
}

namespace {

struct DocPage {
  const char* title;
  const char* body;
};

const std::map<std::string, DocPage>& doc_pages() {
  static const std::map<std::string, DocPage> pages = {
      {"index",
       {"Control System Manual",
        "Pages: operators-manual, sysadmin-manual, error-codes, wire-format."}},
      {"operators-manual",
       {"Operators' Control System Manual",
        "Live channels: GET /api/channels?pattern=RES:*:amplitude. Setpoints are written with "
        "PUT /api/channels/{name} and are checked against device limits.\n"
        "Tunes: POST /api/tunes archives the machine; POST /api/tunes/{id}/restore with a beam "
        "and mode dry_run shows the scaled diff, mode commit loads it.\n"
        "Queries: POST /api/query with a table, filters, sort and page."}},
      {"sysadmin-manual",
       {"System Administrators' Manual",
        "tunevaultd --config <path> [--port N] [--data-dir P] [--seed S]. Archive tables live "
        "under <data_dir>/tables as <name>.log with a <name>.idx sidecar. The index is rebuilt "
        "from the log on start when missing or stale."}},
      {"wire-format",
       {"Wire format",
        "Bodies are compact JSON with fields in a fixed order, e.g. "
        "{\"mass_amu\":16.0,\"charge_state\":8,\"energy_mev_u\":5.0}. Errors are "
        "{\"code\":\"UNKNOWN_TABLE\",\"message\":\"...\"}."}},
  };
  return pages;
}

Json error_codes_page() {
  Json j;
  j["page"] = "error-codes";
  j["title"] = "Error codes";
  j["codes"] = Json::array();
  for (auto code : all_error_codes()) {
    Json c;
    c["code"] = wire_code(code);
    c["status"] = http_status(code);
    j["codes"].push_back(std::move(c));
  }
  return j;
}

std::int64_t parse_id(const std::string& s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error(ErrorCode::NotFound, "bad id '" + s + "'");
  return v;
}

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message,
                int status = 0) {
  send_json(res, wire::error_body(code, message), status ? status : http_status(code));
}

}  // namespace

struct ApiServer::Impl {
  explicit Impl(ControlSystem& s) : sys(s) {}

  ControlSystem& sys;
  httplib::Server server;
  std::thread thread;
  std::atomic<bool> stopping{false};
  std::shared_ptr<std::atomic<bool>> streams_stop = std::make_shared<std::atomic<bool>>(false);
  mutable std::mutex hits_mutex;
  std::set<std::string> hits;

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Registers a route; errors thrown by the handler become JSON error bodies.
  void route(const std::string& method, const std::string& doc_path, const std::string& regex,
             Handler h) {
    auto wrapped = [this, key = method + " " + doc_path, h = std::move(h)](
                       const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(hits_mutex);
        hits.insert(key);
      }
      try {
        h(req, res);
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      } catch (const std::exception& e) {
        send_error(res, ErrorCode::StorageFailure, e.what(), 500);
      }
    };
    if (method == "GET") server.Get(regex, wrapped);
    if (method == "POST") server.Post(regex, wrapped);
    if (method == "PUT") server.Put(regex, wrapped);
  }

  void install();
  void put_channel(const httplib::Request& req, httplib::Response& res);
  void stream_channels(const httplib::Request& req, httplib::Response& res);
};

const std::vector<RouteInfo>& ApiServer::routes() {
  static const std::vector<RouteInfo> r = {
      {"GET", "/api/tables"},
      {"GET", "/api/tables/{name}"},
      {"POST", "/api/query"},
      {"GET", "/api/channels"},
      {"GET", "/api/channels/stream"},
      {"PUT", "/api/channels/{name}"},
      {"GET", "/api/tunes"},
      {"POST", "/api/tunes"},
      {"GET", "/api/tunes/{id}"},
      {"POST", "/api/tunes/{id}/restore"},
      {"GET", "/api/snapshots"},
      {"POST", "/api/snapshots"},
      {"GET", "/api/snapshots/{id}"},
      {"GET", "/api/presets/{device}"},
      {"GET", "/api/beam"},
      {"GET", "/api/docs"},
      {"GET", "/api/docs/{page}"},
      {"GET", "/api/health"},
  };
  return r;
}

void ApiServer::Impl::install() {
  route("GET", "/api/tables", "/api/tables", [](const auto&, auto& res) {
    Json j;
    j["tables"] = Json::array();
    for (const auto& s : table_schemas()) j["tables"].push_back(wire::to_json(s));
    send_json(res, j);
  });
  route("GET", "/api/tables/{name}", R"(/api/tables/([^/]+))", [](const auto& req, auto& res) {
    send_json(res, wire::to_json(QueryEngine::describe(req.matches[1].str())));
  });
  route("POST", "/api/query", "/api/query", [this](const auto& req, auto& res) {
    const auto spec = wire::query_spec_from_json(wire::parse_body(req.body));
    send_json(res, wire::to_json(sys.query().execute(spec)));
  });

  route("GET", "/api/channels", "/api/channels", [this](const auto& req, auto& res) {
    const auto pattern = req.has_param("pattern") ? req.get_param_value("pattern") : "**";
    Json j;
    j["channels"] = Json::array();
    for (const auto& r : sys.channels().read_pattern(pattern))
      j["channels"].push_back(wire::to_json(r));
    send_json(res, j);
  });
  route("GET", "/api/channels/stream", "/api/channels/stream",
        [this](const auto& req, auto& res) { stream_channels(req, res); });
  route("PUT", "/api/channels/{name}", R"(/api/channels/([^/]+))",
        [this](const auto& req, auto& res) { put_channel(req, res); });

  route("GET", "/api/tunes", "/api/tunes", [this](const auto&, auto& res) {
    Json j;
    j["tunes"] = Json::array();
    for (const auto& t : sys.store().list_tunes()) j["tunes"].push_back(wire::to_json(t));
    send_json(res, j);
  });
  route("POST", "/api/tunes", "/api/tunes", [this](const auto& req, auto& res) {
    std::optional<std::string> label;
    if (!req.body.empty()) {
      const auto body = wire::parse_body(req.body);
      if (body.contains("label")) {
        if (!body.at("label").is_string())
          throw Error(ErrorCode::BadRequest, "'label' must be a string");
        label = body.at("label").template get<std::string>();
      }
    }
    const auto id = sys.scanner().trigger_now(CaptureKind::Tune, label);
    send_json(res, wire::to_json(sys.store().load_tune(id).header), 201);
  });
  route("GET", "/api/tunes/{id}", R"(/api/tunes/(\d+))", [this](const auto& req, auto& res) {
    send_json(res, wire::to_json(sys.store().load_tune(parse_id(req.matches[1].str()))));
  });
  route("POST", "/api/tunes/{id}/restore", R"(/api/tunes/(\d+)/restore)",
        [this](const auto& req, auto& res) {
          const auto id = parse_id(req.matches[1].str());
          const auto body = wire::parse_body(req.body);
          if (!body.is_object() || !body.contains("beam"))
            throw Error(ErrorCode::InvalidBeam, "restore body needs a beam");
          const auto beam = wire::beam_from_json(body.at("beam"));
          RestoreMode mode = RestoreMode::DryRun;
          if (body.contains("mode")) {
            const auto& m = body.at("mode");
            auto parsed = m.is_string() ? parse_restore_mode(m.template get<std::string>())
                                        : std::nullopt;
            if (!parsed) throw Error(ErrorCode::BadRequest, "mode must be dry_run or commit");
            mode = *parsed;
          }
          send_json(res, wire::to_json(sys.tunes().restore_tune(id, beam, mode)));
        });

  route("GET", "/api/snapshots", "/api/snapshots", [this](const auto&, auto& res) {
    Json j;
    j["snapshots"] = Json::array();
    for (const auto& s : sys.store().list_snapshots()) j["snapshots"].push_back(wire::to_json(s));
    send_json(res, j);
  });
  route("POST", "/api/snapshots", "/api/snapshots", [this](const auto&, auto& res) {
    const auto id = sys.scanner().trigger_now(CaptureKind::Snapshot);
    send_json(res, wire::to_json(sys.store().load_snapshot(id).header), 201);
  });
  route("GET", "/api/snapshots/{id}", R"(/api/snapshots/(\d+))",
        [this](const auto& req, auto& res) {
          send_json(res,
                    wire::to_json(sys.store().load_snapshot(parse_id(req.matches[1].str()))));
        });

  route("GET", "/api/presets/{device}", R"(/api/presets/([^/]+))",
        [this](const auto& req, auto& res) {
          const auto device = req.matches[1].str();
          const auto* dev = sys.catalog().find_device(device);
          if (!dev) throw Error(ErrorCode::UnknownDevice, "unknown device '" + device + "'");
          Json j;
          j["device_id"] = device;
          j["presets"] = Json::array();
          for (const auto& p : sys.catalog().presets)
            if (p.device_id == device) j["presets"].push_back(wire::to_json(p));
          send_json(res, j);
        });
  route("GET", "/api/beam", "/api/beam", [this](const auto&, auto& res) {
    const auto beam = sys.tunes().current_beam();
    Json j;
    j["beam"] = wire::to_json(beam);
    j["kinematics"] = wire::to_json(kinematics(beam));
    j["beta_warning"] = kinematics(beam).beta > kMachineBetaLimit;
    send_json(res, j);
  });

  route("GET", "/api/docs", "/api/docs", [](const auto&, auto& res) {
    Json j;
    j["pages"] = Json::array();
    for (const auto& [name, page] : doc_pages())
      j["pages"].push_back({{"page", name}, {"title", page.title}});
    j["pages"].push_back({{"page", "error-codes"}, {"title", "Error codes"}});
    send_json(res, j);
  });
  route("GET", "/api/docs/{page}", R"(/api/docs/([^/]+))", [](const auto& req, auto& res) {
    const auto name = req.matches[1].str();
    if (name == "error-codes") return send_json(res, error_codes_page());
    auto it = doc_pages().find(name);
    if (it == doc_pages().end()) throw Error(ErrorCode::NotFound, "no docs page '" + name + "'");
    Json j;
    j["page"] = name;
    j["title"] = it->second.title;
    j["body"] = it->second.body;
    send_json(res, j);
  });
  route("GET", "/api/health", "/api/health", [this](const auto&, auto& res) {
    const auto h = sys.health();
    Json j;
    j["status"] = h.status;
    j["store_version"] = h.store_version;
    j["snapshot_count"] = h.snapshot_count;
    j["skipped_ticks"] = h.skipped_ticks;
    send_json(res, j);
  });

  if (sys.config().ui_dir && std::filesystem::is_directory(*sys.config().ui_dir)) {
    server.set_mount_point("/", sys.config().ui_dir->string());
  } else {
    server.Get("/", [](const auto&, auto& res) {
      res.set_content(
          "<!doctype html><title>tunevault</title><p>Operator UI assets are not installed. "
          "The API is served under <a href=\"/api/docs\">/api</a>.</p>",
          "text/html");
    });
  }

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    send_error(res, ErrorCode::NotFound, "no such route", res.status);
    return httplib::Server::HandlerResponse::Handled;
  });
}

void ApiServer::Impl::put_channel(const httplib::Request& req, httplib::Response& res) {
  const auto name = req.matches[1].str();
  const auto current = sys.channels().read(name);
  const auto body = wire::parse_body(req.body);
  if (!body.is_object() || !body.contains("value"))
    throw Error(ErrorCode::BadRequest, "body must be {\"value\": ...}");
  Value value = wire::value_from_json(body.at("value"), current.tag());
  if (auto lim = sys.catalog().limits_of(name)) {
    const double v = as_number(value).value_or(0.0);
    if (v < lim->min || v > lim->max)
      throw Error(ErrorCode::LimitViolation, "value " + body.at("value").dump() + " outside [" +
                                                 Json(lim->min).dump() + ", " +
                                                 Json(lim->max).dump() + "] for " + name);
  }
  const auto w = sys.channels().write(name, std::move(value));
  Json j;
  j["name"] = name;
  j["seq"] = w.seq;
  j["global_version"] = w.global_version;
  send_json(res, j);
}

void ApiServer::Impl::stream_channels(const httplib::Request& req, httplib::Response& res) {
  const auto pattern = req.has_param("pattern") ? req.get_param_value("pattern") : "**";
  auto sub = std::make_shared<Subscription>(
      sys.channels().subscribe(pattern, sys.config().subscriber_queue));
  auto stop = streams_stop;
  res.set_header("Cache-Control", "no-cache");
  res.set_chunked_content_provider(
      "text/event-stream", [sub, stop](std::size_t, httplib::DataSink& sink) {
        if (stop->load()) {
          sink.done();
          return true;
        }
        try {
          auto rec = sub->next(std::chrono::milliseconds(500));
          std::string frame =
              rec ? "data: " + wire::to_json(*rec).dump() + "\n\n" : std::string(": idle\n\n");
          return sink.write(frame.data(), frame.size());
        } catch (const Error& e) {
          const std::string frame =
              "event: error\ndata: " + wire::error_body(e.code(), e.what()).dump() + "\n\n";
          sink.write(frame.data(), frame.size());
          sink.done();
          return true;
        }
      });
}

ApiServer::ApiServer(ControlSystem& system) : impl_(std::make_unique<Impl>(system)) {
  impl_->install();
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw Error(ErrorCode::StorageFailure, "cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port))
    throw Error(ErrorCode::StorageFailure, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ApiServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void ApiServer::listen() { impl_->server.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_->stopping.exchange(true)) return;
  impl_->streams_stop->store(true);
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void ApiServer::set_access_log(std::function<void(const AccessRecord&)> log) {
  impl_->server.set_logger(
      [log = std::move(log)](const httplib::Request& req, const httplib::Response& res) {
        std::string target = req.path;
        if (!req.params.empty()) target += "?" + httplib::detail::params_to_query_str(req.params);
        log(AccessRecord{req.method, target, res.status, res.body});
      });
}

std::set<std::string> ApiServer::routes_hit() const {
  std::lock_guard lock(impl_->hits_mutex);
  return impl_->hits;
}

}  // namespace tunevault
