#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tunevault/clock.hpp"
#include "tunevault/glob.hpp"
#include "tunevault/value.hpp"

namespace tunevault {

/// One live process variable.
struct ChannelRecord {
  std::string name;
  Value value;
  std::string units;
  Role role = Role::Setpoint;
  bool critical = false;
  Quality quality = Quality::Ok;
  std::uint64_t seq = 0;
  std::int64_t updated_at = 0;  // ms since epoch
  std::uint64_t global_version = 0;

  ValueTag tag() const { return tag_of(value); }
};

struct WriteResult {
  std::uint64_t seq;
  std::uint64_t global_version;
};

struct ChannelWrite {
  std::string name;
  Value value;
  std::optional<Quality> quality;  // unset resets quality to ok
};

struct SnapshotEntry {
  Value value;
  std::uint64_t seq;
  std::int64_t updated_at;
  std::uint64_t global_version;
  Role role;
};

/// Point-in-time cut of the store.
struct StoreSnapshot {
  std::uint64_t version = 0;
  std::map<std::string, SnapshotEntry, std::less<>> entries;
};

enum class SnapshotFilter { CriticalOnly, All };

inline constexpr std::size_t kDefaultSubscriberQueue = 4096;

namespace detail {
struct SubscriberQueue;
}

/// Ordered stream of channel deltas. Deltas for a given channel arrive in seq
/// order with no gaps; when the consumer falls more than the queue bound
/// behind, the stream is cut and the next read throws SubscriberOverflow.
class Subscription {
 public:
  Subscription(Subscription&&) noexcept = default;
  Subscription& operator=(Subscription&&) noexcept = default;
  ~Subscription();

  /// Waits up to `timeout` for the next delta. nullopt on timeout.
  std::optional<ChannelRecord> next(std::chrono::milliseconds timeout);
  /// Everything currently queued, without waiting.
  std::vector<ChannelRecord> drain();
  bool overflowed() const;
  const GlobPattern& pattern() const;

 private:
  friend class ChannelDb;
  explicit Subscription(std::shared_ptr<detail::SubscriberQueue> q) : queue_(std::move(q)) {}
  std::shared_ptr<detail::SubscriberQueue> queue_;
};

/// In-memory real-time database of named channels.
///
/// Writes are serialized under an exclusive lock and stamped with a store-wide
/// version; reads and snapshots take a shared lock, so a snapshot never
/// observes part of a write batch.
class ChannelDb {
 public:
  explicit ChannelDb(Clock clock = wall_clock_ms);

  ChannelDb(const ChannelDb&) = delete;
  ChannelDb& operator=(const ChannelDb&) = delete;

  /// `enum_choices` is required (non-empty) for EnumString channels and the
  /// first choice is the initial value.
  ChannelRecord create_channel(std::string name, ValueTag tag, std::string units, Role role,
                               bool critical, std::vector<std::string> enum_choices = {});

  WriteResult write(std::string_view name, Value value,
                    std::optional<Quality> quality = std::nullopt);

  /// All-or-nothing: every write is validated before any is applied, and no
  /// snapshot or reader sees a partially applied batch.
  std::vector<WriteResult> write_batch(std::span<const ChannelWrite> writes);

  ChannelRecord read(std::string_view name) const;
  std::vector<ChannelRecord> read_pattern(std::string_view glob) const;
  bool contains(std::string_view name) const;
  std::vector<std::string> enum_choices(std::string_view name) const;

  Subscription subscribe(std::string_view glob, std::size_t queue_bound = kDefaultSubscriberQueue);

  StoreSnapshot snapshot(SnapshotFilter filter) const;

  /// Flags the listed readbacks stale when they have not been updated within
  /// `max_age_ms`. A quality change is published like any other update.
  /// Returns the number of channels newly marked.
  std::size_t mark_stale(std::span<const std::string> names, std::int64_t max_age_ms);

  std::uint64_t global_version() const;
  std::size_t size() const;

 private:
  struct Channel {
    ChannelRecord record;
    std::vector<std::string> choices;
  };

  Channel& find_locked(std::string_view name);
  const Channel& find_locked(std::string_view name) const;
  void validate_locked(const ChannelWrite& w) const;
  WriteResult apply_locked(Channel& ch, Value value, Quality quality);
  void publish_locked(const ChannelRecord& rec);

  Clock clock_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Channel, std::less<>> channels_;
  std::uint64_t global_version_ = 0;
  std::vector<std::shared_ptr<detail::SubscriberQueue>> subscribers_;
};

}  // namespace tunevault
