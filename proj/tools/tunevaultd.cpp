#include <csignal>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tunevault/api_server.hpp"
#include "tunevault/config.hpp"
#include "tunevault/control_system.hpp"
#include "tunevault/error.hpp"

int main(int argc, char** argv) {
  using namespace tunevault;

  CLI::App app{"tunevault control-system daemon", "tunevaultd"};
  std::string config_path;
  std::optional<int> port;
  std::optional<std::string> data_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON config file (env TUNEVAULT_CONFIG wins)");
  app.add_option("--port", port, "HTTP port; 0 picks a free one");
  app.add_option("--data-dir", data_dir, "Archive directory");
  app.add_option("--seed", seed, "Simulator seed");
  CLI11_PARSE(app, argc, argv);
  // stdout carries only the "listening PORT" line; logs go to stderr.
  spdlog::set_default_logger(spdlog::stderr_color_mt("tunevaultd"));

  // Signals are taken synchronously by sigwait below; block them before any
  // thread starts so every thread inherits the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  try {
    if (const char* env = std::getenv(kConfigEnvVar); env && *env) config_path = env;
    Config config = config_path.empty() ? Config{} : load_config(config_path);
    if (port) config.port = *port;
    if (data_dir) config.data_dir = *data_dir;
    if (seed) config.seed = *seed;

    ControlSystem system(config);
    ApiServer server(system);
    const int bound = server.bind(config.bind, config.port);
    system.start();
    server.start();
    spdlog::info("tunevaultd listening on http://{}:{} data_dir={}", config.bind, bound,
                 config.data_dir.string());
    // Parent processes (tests, supervisors) read the bound port from stdout.
    std::cout << "listening " << bound << std::endl;

    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("signal {}; shutting down", sig);
    server.stop();
    system.stop();
  } catch (const Error& e) {
    spdlog::error("{}: {}", wire_code(e.code()), e.what());
    return 1;
  }
  return 0;
}
