#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "tunevault/archive_store.hpp"
#include "tunevault/channel_db.hpp"
#include "tunevault/clock.hpp"
#include "tunevault/tune_engine.hpp"

namespace tunevault {

/// Facility tune-capture cadence. The desk-scale default below is much shorter.
inline constexpr std::chrono::hours kProductionTuneInterval{4};
inline constexpr std::chrono::seconds kDefaultScanInterval{10};
inline constexpr std::chrono::seconds kDefaultTuneInterval{60};

enum class CaptureKind { Snapshot, Tune };

struct ScannerMetrics {
  std::uint64_t scheduled_snapshots = 0;
  std::uint64_t scheduled_tunes = 0;
  std::uint64_t skipped_ticks = 0;
  std::uint64_t failures = 0;
};

/// Archiving daemon: snapshots critical channels and captures full tunes on
/// two independent, drift-free schedules (tick k fires at t0 + k * interval).
/// A tick that comes due while the previous capture of the same kind is
/// still running is skipped and counted, never queued.
class Scanner {
 public:
  Scanner(ChannelDb& db, ArchiveStore& store, TuneEngine& tunes, Clock clock = wall_clock_ms);
  ~Scanner();

  Scanner(const Scanner&) = delete;
  Scanner& operator=(const Scanner&) = delete;

  /// Starts both schedules in the background. Throws BadRequest unless both
  /// intervals are positive.
  void start(std::chrono::milliseconds scan_interval, std::chrono::milliseconds tune_interval);
  /// start() and block until stop() is called from another thread.
  void run(std::chrono::milliseconds scan_interval, std::chrono::milliseconds tune_interval);
  void stop();

  /// Manual capture. Storage failures propagate to the caller.
  std::int64_t trigger_now(CaptureKind kind, std::optional<std::string> label = std::nullopt);

  ScannerMetrics metrics() const;
  /// Wall-clock ms at which the schedules started.
  std::int64_t started_at() const { return started_at_; }

  /// Runs after every successful scheduled snapshot (used for beam logging).
  void set_after_scan(std::function<void(std::int64_t snapshot_id)> hook);

 private:
  void schedule_loop(CaptureKind kind, std::chrono::milliseconds interval,
                     std::chrono::steady_clock::time_point t0);
  std::int64_t capture(CaptureKind kind, bool scheduled, std::optional<std::string> label);

  ChannelDb& db_;
  ArchiveStore& store_;
  TuneEngine& tunes_;
  Clock clock_;

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::thread scan_thread_;
  std::thread tune_thread_;
  std::int64_t started_at_ = 0;
  std::function<void(std::int64_t)> after_scan_;

  std::atomic<std::uint64_t> scheduled_snapshots_{0};
  std::atomic<std::uint64_t> scheduled_tunes_{0};
  std::atomic<std::uint64_t> skipped_ticks_{0};
  std::atomic<std::uint64_t> failures_{0};
};

}  // namespace tunevault
