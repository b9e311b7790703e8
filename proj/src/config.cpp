#include "tunevault/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tunevault/error.hpp"

namespace tunevault {

Config parse_config(std::string_view text) {
  static const std::set<std::string> known = {
      "port",          "bind",     "data_dir", "catalog",          "scan_interval_s",
      "tune_interval_s", "sim_tick_ms", "seed", "subscriber_queue", "ui_dir"};
  Config cfg;
  try {
    auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
    for (const auto& [key, _] : j.items())
      if (!known.contains(key)) throw Error(ErrorCode::ParseError, "unknown config key '" + key + "'");
    cfg.port = j.value("port", cfg.port);
    cfg.bind = j.value("bind", cfg.bind);
    if (j.contains("data_dir")) cfg.data_dir = j.at("data_dir").get<std::string>();
    if (j.contains("catalog")) cfg.catalog = j.at("catalog").get<std::string>();
    cfg.scan_interval_s = j.value("scan_interval_s", cfg.scan_interval_s);
    cfg.tune_interval_s = j.value("tune_interval_s", cfg.tune_interval_s);
    cfg.sim_tick_ms = j.value("sim_tick_ms", cfg.sim_tick_ms);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.subscriber_queue = j.value("subscriber_queue", cfg.subscriber_queue);
    if (j.contains("ui_dir")) cfg.ui_dir = j.at("ui_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  if (cfg.port < 0 || cfg.port > 65535) throw Error(ErrorCode::ParseError, "port out of range");
  if (!(cfg.scan_interval_s > 0) || !(cfg.tune_interval_s > 0) || cfg.sim_tick_ms <= 0)
    throw Error(ErrorCode::ParseError, "intervals must be positive");
  if (cfg.subscriber_queue == 0) throw Error(ErrorCode::ParseError, "subscriber_queue must be > 0");
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace tunevault
