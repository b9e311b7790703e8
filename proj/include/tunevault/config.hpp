#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace tunevault {

/// Daemon configuration. Stored as a JSON object whose keys match the field
/// names; absent keys keep the defaults below.
struct Config {
  int port = 8080;
  std::string bind = "127.0.0.1";
  std::filesystem::path data_dir = "tunevault-data";
  /// Defaults to `<data_dir>/catalog.src`, written from the built-in catalog
  /// when missing.
  std::optional<std::filesystem::path> catalog;
  // Facility practice is a 4 h tune capture; desk defaults are much shorter.
  double scan_interval_s = 10.0;
  double tune_interval_s = 60.0;
  int sim_tick_ms = 200;
  std::uint64_t seed = 1;
  std::size_t subscriber_queue = 4096;
  /// Directory of operator UI assets served under `/`, if built.
  std::optional<std::filesystem::path> ui_dir;
};

/// Throws Error(ParseError) on malformed JSON, unknown keys or bad values.
Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);

/// Environment variable naming the config file; it takes precedence over
/// the --config flag.
inline constexpr const char* kConfigEnvVar = "TUNEVAULT_CONFIG";

}  // namespace tunevault
