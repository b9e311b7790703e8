#include "tunevault/control_system.hpp"

#include <fstream>

#include <spdlog/spdlog.h>

#include "tunevault/error.hpp"

namespace tunevault {
namespace {

Catalog resolve_catalog(const Config& cfg) {
  if (cfg.catalog) return read_catalog_file(*cfg.catalog);
  const auto path = cfg.data_dir / "catalog.src";
  if (!std::filesystem::exists(path)) {
    std::filesystem::create_directories(cfg.data_dir);
    std::ofstream out(path, std::ios::binary);
    out << serialize_catalog(default_catalog());
    if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + path.string());
    spdlog::info("wrote default catalog to {}", path.string());
  }
  return read_catalog_file(path);
}

}  // namespace

ControlSystem::ControlSystem(Config config, StoreOptions store_options)
    : config_(std::move(config)), catalog_(resolve_catalog(config_)) {
  install_catalog(catalog_, channels_);
  store_ = std::make_unique<ArchiveStore>(config_.data_dir, store_options);
  SimOptions sim_opts;
  sim_opts.seed = config_.seed;
  sim_ = std::make_unique<DeviceSim>(channels_, catalog_, sim_opts);
  tunes_ = std::make_unique<TuneEngine>(channels_, *store_, catalog_, catalog_.reference_beam);
  scanner_ = std::make_unique<Scanner>(channels_, *store_, *tunes_);
  query_ = std::make_unique<QueryEngine>(*store_);

  tunes_->on_beam_change([this](const BeamParameters& b) { sim_->set_beam(b); });
  sim_->set_alarm_sink([this](const CryoAlarm& a) {
    try {
      store_->insert("cryo_alarms",
                     Row{std::monostate{}, a.raised_at, a.sensor, a.temperature_k, a.threshold_k});
    } catch (const std::exception& e) {
      spdlog::error("cannot archive cryo alarm for {}: {}", a.sensor, e.what());
    }
  });
  scanner_->set_after_scan([this](std::int64_t) { record_beam_measurement(); });
  seed_catalog_tables();
}

ControlSystem::~ControlSystem() { stop(); }

void ControlSystem::seed_catalog_tables() {
  // Catalog tables are reference data: filled once, on first start.
  if (store_->count("camac_modules") == 0) {
    std::map<int, std::int64_t> per_crate;
    for (const auto& d : catalog_.devices) {
      store_->insert("camac_modules",
                     Row{std::monostate{}, std::int64_t{d.camac_address.crate},
                         std::int64_t{d.camac_address.slot}, d.device_id,
                         std::string(to_string(d.device_class))});
      ++per_crate[d.camac_address.crate];
    }
    for (const auto& [crate, n] : per_crate)
      store_->insert("camac_crates", Row{std::monostate{}, std::int64_t{crate}, n});
  }
  if (store_->count("resonators") == 0) {
    for (const auto& d : catalog_.devices) {
      if (d.device_class != DeviceClass::Resonator) continue;
      double nominal = 0.0;
      for (const auto& c : d.channels)
        if (d.law_of(c.name) == ScalingLaw::RfAmplitude)
          nominal = catalog_.golden.setpoints.at(c.name);
      store_->insert("resonators", Row{std::monostate{}, d.device_id,
                                       std::int64_t{d.camac_address.crate},
                                       std::int64_t{d.camac_address.slot}, nominal,
                                       std::string("online")});
    }
  }
  if (store_->count("stepper_presets") == 0) {
    for (const auto& p : catalog_.presets)
      store_->insert("stepper_presets",
                     Row{std::monostate{}, p.device_id, p.preset_name, p.position_steps});
  }
}

void ControlSystem::record_beam_measurement() {
  const int line = sim_->active_target_line();
  for (const auto& d : catalog_.devices) {
    if (d.device_class != DeviceClass::BeamMonitor || d.target_line != line) continue;
    const auto current = channels_.read(d.device_id + ":current");
    const auto transmission = channels_.read(d.device_id + ":transmission");
    store_->insert("beam_measurement",
                   Row{std::monostate{}, current.updated_at, std::int64_t{line},
                       as_number(current.value).value_or(0.0),
                       as_number(transmission.value).value_or(0.0)});
  }
}

void ControlSystem::start() {
  {
    std::lock_guard lock(tick_mutex_);
    if (tick_thread_.joinable()) return;
    stopping_ = false;
  }
  const auto period = std::chrono::milliseconds(config_.sim_tick_ms);
  tick_thread_ = std::thread([this, period] {
    const double dt = static_cast<double>(period.count()) / 1000.0;
    auto next = std::chrono::steady_clock::now() + period;
    std::unique_lock lock(tick_mutex_);
    while (!tick_cv_.wait_until(lock, next, [&] { return stopping_; })) {
      lock.unlock();
      try {
        sim_->tick(dt);
      } catch (const std::exception& e) {
        spdlog::error("simulator tick failed: {}", e.what());
      }
      lock.lock();
      next += period;
    }
  });
  using ms = std::chrono::milliseconds;
  scanner_->start(ms(static_cast<std::int64_t>(config_.scan_interval_s * 1000.0)),
                  ms(static_cast<std::int64_t>(config_.tune_interval_s * 1000.0)));
}

void ControlSystem::stop() {
  scanner_->stop();
  {
    std::lock_guard lock(tick_mutex_);
    stopping_ = true;
  }
  tick_cv_.notify_all();
  if (tick_thread_.joinable()) tick_thread_.join();
}

HealthReport ControlSystem::health() const {
  HealthReport h;
  h.status = "ok";
  h.store_version = channels_.global_version();
  h.snapshot_count = store_->count("snapshots");
  h.skipped_ticks = scanner_->metrics().skipped_ticks;
  return h;
}

}  // namespace tunevault
