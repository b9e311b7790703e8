#include "tunevault/scanner.hpp"

#include <spdlog/spdlog.h>

#include "tunevault/error.hpp"

namespace tunevault {

Scanner::Scanner(ChannelDb& db, ArchiveStore& store, TuneEngine& tunes, Clock clock)
    : db_(db), store_(store), tunes_(tunes), clock_(std::move(clock)) {}

Scanner::~Scanner() { stop(); }

void Scanner::start(std::chrono::milliseconds scan_interval,
                    std::chrono::milliseconds tune_interval) {
  if (scan_interval.count() <= 0 || tune_interval.count() <= 0)
    throw Error(ErrorCode::BadRequest, "scanner intervals must be positive");
  std::lock_guard lock(mutex_);
  if (scan_thread_.joinable()) throw Error(ErrorCode::BadRequest, "scanner already running");
  stopping_ = false;
  const auto t0 = std::chrono::steady_clock::now();
  started_at_ = clock_();
  scan_thread_ = std::thread([=, this] { schedule_loop(CaptureKind::Snapshot, scan_interval, t0); });
  tune_thread_ = std::thread([=, this] { schedule_loop(CaptureKind::Tune, tune_interval, t0); });
}

void Scanner::run(std::chrono::milliseconds scan_interval, std::chrono::milliseconds tune_interval) {
  start(scan_interval, tune_interval);
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return stopping_; });
}

void Scanner::stop() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (scan_thread_.joinable()) scan_thread_.join();
  if (tune_thread_.joinable()) tune_thread_.join();
}

void Scanner::schedule_loop(CaptureKind kind, std::chrono::milliseconds interval,
                            std::chrono::steady_clock::time_point t0) {
  const char* what = kind == CaptureKind::Snapshot ? "snapshot" : "tune";
  std::int64_t k = 1;
  while (true) {
    {
      std::unique_lock lock(mutex_);
      if (cv_.wait_until(lock, t0 + k * interval, [&] { return stopping_; })) return;
    }
    try {
      const auto id = capture(kind, true, std::nullopt);
      if (kind == CaptureKind::Snapshot) {
        ++scheduled_snapshots_;
        std::function<void(std::int64_t)> hook;
        {
          std::lock_guard lock(mutex_);
          hook = after_scan_;
        }
        if (hook) hook(id);
      } else {
        ++scheduled_tunes_;
      }
    } catch (const std::exception& e) {
      ++failures_;
      spdlog::error("scheduled {} capture {} failed: {}", what, k, e.what());
    }
    const auto elapsed = std::chrono::steady_clock::now() - t0;
    const auto due = static_cast<std::int64_t>(elapsed / interval);
    if (due > k) {
      skipped_ticks_ += static_cast<std::uint64_t>(due - k);
      spdlog::warn("{} capture overran; skipping {} tick(s)", what, due - k);
      k = due + 1;
    } else {
      ++k;
    }
  }
}

std::int64_t Scanner::capture(CaptureKind kind, bool scheduled, std::optional<std::string> label) {
  if (kind == CaptureKind::Snapshot) {
    const auto taken_at = clock_();
    const auto snap = db_.snapshot(SnapshotFilter::CriticalOnly);
    return store_.persist_snapshot(snap, scheduled ? SnapshotTrigger::Scheduled
                                                   : SnapshotTrigger::Manual,
                                   taken_at);
  }
  std::string l = label.value_or(scheduled ? "scheduled" : "manual");
  return tunes_.archive_tune(std::move(l), scheduled ? Provenance::Scheduled : Provenance::Manual);
}

std::int64_t Scanner::trigger_now(CaptureKind kind, std::optional<std::string> label) {
  return capture(kind, false, std::move(label));
}

ScannerMetrics Scanner::metrics() const {
  return {scheduled_snapshots_.load(), scheduled_tunes_.load(), skipped_ticks_.load(),
          failures_.load()};
}

void Scanner::set_after_scan(std::function<void(std::int64_t)> hook) {
  std::lock_guard lock(mutex_);
  after_scan_ = std::move(hook);
}

}  // namespace tunevault
