#pragma once

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <thread>

#include "tunevault/archive_store.hpp"
#include "tunevault/catalog.hpp"
#include "tunevault/channel_db.hpp"
#include "tunevault/clock.hpp"
#include "tunevault/config.hpp"
#include "tunevault/device_sim.hpp"
#include "tunevault/query_engine.hpp"
#include "tunevault/scanner.hpp"
#include "tunevault/tune_engine.hpp"

namespace tunevault {

struct HealthReport {
  std::string status;
  std::uint64_t store_version = 0;
  std::size_t snapshot_count = 0;
  std::uint64_t skipped_ticks = 0;
};

/// Everything the daemon runs, wired together: live channel store fed by the
/// simulator, durable archive, tune engine, scanner and query engine.
class ControlSystem {
 public:
  explicit ControlSystem(Config config, StoreOptions store_options = {});
  ~ControlSystem();

  ControlSystem(const ControlSystem&) = delete;
  ControlSystem& operator=(const ControlSystem&) = delete;

  /// Starts the simulator tick task and the scanner schedules.
  void start();
  void stop();

  const Config& config() const { return config_; }
  ChannelDb& channels() { return channels_; }
  const Catalog& catalog() const { return catalog_; }
  DeviceSim& sim() { return *sim_; }
  ArchiveStore& store() { return *store_; }
  TuneEngine& tunes() { return *tunes_; }
  Scanner& scanner() { return *scanner_; }
  const QueryEngine& query() const { return *query_; }

  HealthReport health() const;

 private:
  void seed_catalog_tables();
  void record_beam_measurement();

  Config config_;
  ChannelDb channels_;
  Catalog catalog_;
  std::unique_ptr<ArchiveStore> store_;
  std::unique_ptr<DeviceSim> sim_;
  std::unique_ptr<TuneEngine> tunes_;
  std::unique_ptr<Scanner> scanner_;
  std::unique_ptr<QueryEngine> query_;

  std::mutex tick_mutex_;
  std::condition_variable tick_cv_;
  bool stopping_ = false;
  std::thread tick_thread_;
};

}  // namespace tunevault
