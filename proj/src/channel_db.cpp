#include "tunevault/channel_db.hpp"

#include <algorithm>

#include "tunevault/error.hpp"

namespace tunevault {

namespace detail {

struct SubscriberQueue {
  SubscriberQueue(GlobPattern p, std::size_t b) : pattern(std::move(p)), bound(b) {}

  GlobPattern pattern;
  std::size_t bound;
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<ChannelRecord> items;
  bool overflowed = false;
  bool closed = false;

  // Returns false once the subscriber is gone or cut off.
  bool push(const ChannelRecord& rec) {
    std::lock_guard lock(mutex);
    if (closed || overflowed) return false;
    if (items.size() >= bound) {
      overflowed = true;
      items.clear();
      cv.notify_all();
      return false;
    }
    items.push_back(rec);
    cv.notify_one();
    return true;
  }
};

}  // namespace detail

Subscription::~Subscription() {
  if (!queue_) return;
  std::lock_guard lock(queue_->mutex);
  queue_->closed = true;
  queue_->items.clear();
}

std::optional<ChannelRecord> Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(queue_->mutex);
  queue_->cv.wait_for(lock, timeout, [&] { return !queue_->items.empty() || queue_->overflowed; });
  if (queue_->overflowed)
    throw Error(ErrorCode::SubscriberOverflow,
                "subscriber fell more than " + std::to_string(queue_->bound) + " deltas behind");
  if (queue_->items.empty()) return std::nullopt;
  ChannelRecord rec = std::move(queue_->items.front());
  queue_->items.pop_front();
  return rec;
}

std::vector<ChannelRecord> Subscription::drain() {
  std::lock_guard lock(queue_->mutex);
  if (queue_->overflowed)
    throw Error(ErrorCode::SubscriberOverflow,
                "subscriber fell more than " + std::to_string(queue_->bound) + " deltas behind");
  std::vector<ChannelRecord> out(std::make_move_iterator(queue_->items.begin()),
                                 std::make_move_iterator(queue_->items.end()));
  queue_->items.clear();
  return out;
}

bool Subscription::overflowed() const {
  std::lock_guard lock(queue_->mutex);
  return queue_->overflowed;
}

const GlobPattern& Subscription::pattern() const { return queue_->pattern; }

ChannelDb::ChannelDb(Clock clock) : clock_(std::move(clock)) {}

ChannelRecord ChannelDb::create_channel(std::string name, ValueTag tag, std::string units,
                                        Role role, bool critical,
                                        std::vector<std::string> enum_choices) {
  if (!is_valid_channel_name(name))
    throw Error(ErrorCode::MalformedName, "malformed channel name '" + name + "'");
  if (tag == ValueTag::EnumString && enum_choices.empty())
    throw Error(ErrorCode::TypeMismatch, "enum channel '" + name + "' needs declared choices");

  std::unique_lock lock(mutex_);
  if (channels_.contains(name))
    throw Error(ErrorCode::DuplicateName, "channel '" + name + "' already exists");

  Channel ch;
  ch.record.name = name;
  switch (tag) {
    case ValueTag::Float64: ch.record.value = 0.0; break;
    case ValueTag::Int64: ch.record.value = std::int64_t{0}; break;
    case ValueTag::EnumString: ch.record.value = enum_choices.front(); break;
  }
  ch.record.units = std::move(units);
  ch.record.role = role;
  ch.record.critical = critical;
  ch.record.updated_at = clock_();
  ch.choices = std::move(enum_choices);
  auto [it, _] = channels_.emplace(std::move(name), std::move(ch));
  return it->second.record;
}

ChannelDb::Channel& ChannelDb::find_locked(std::string_view name) {
  auto it = channels_.find(name);
  if (it == channels_.end())
    throw Error(ErrorCode::UnknownChannel, "unknown channel '" + std::string(name) + "'");
  return it->second;
}

const ChannelDb::Channel& ChannelDb::find_locked(std::string_view name) const {
  return const_cast<ChannelDb*>(this)->find_locked(name);
}

void ChannelDb::validate_locked(const ChannelWrite& w) const {
  const Channel& ch = find_locked(w.name);
  if (tag_of(w.value) != ch.record.tag())
    throw Error(ErrorCode::TypeMismatch,
                "channel '" + w.name + "' holds " + std::string(to_string(ch.record.tag())) +
                    ", got " + std::string(to_string(tag_of(w.value))));
  if (const auto* s = std::get_if<std::string>(&w.value)) {
    if (std::find(ch.choices.begin(), ch.choices.end(), *s) == ch.choices.end())
      throw Error(ErrorCode::TypeMismatch,
                  "'" + *s + "' is not a declared choice of '" + w.name + "'");
  }
}

WriteResult ChannelDb::apply_locked(Channel& ch, Value value, Quality quality) {
  ChannelRecord& r = ch.record;
  r.value = std::move(value);
  r.quality = quality;
  r.seq += 1;
  r.updated_at = clock_();
  r.global_version = ++global_version_;
  publish_locked(r);
  return {r.seq, r.global_version};
}

void ChannelDb::publish_locked(const ChannelRecord& rec) {
  bool prune = false;
  for (auto& q : subscribers_) {
    if (!q->pattern.matches(rec.name)) continue;
    if (!q->push(rec)) prune = true;
  }
  if (prune) {
    std::erase_if(subscribers_, [](const auto& q) {
      std::lock_guard lock(q->mutex);
      return q->closed || q->overflowed;
    });
  }
}

WriteResult ChannelDb::write(std::string_view name, Value value, std::optional<Quality> quality) {
  ChannelWrite w{std::string(name), std::move(value), quality};
  std::unique_lock lock(mutex_);
  validate_locked(w);
  return apply_locked(find_locked(w.name), std::move(w.value), quality.value_or(Quality::Ok));
}

std::vector<WriteResult> ChannelDb::write_batch(std::span<const ChannelWrite> writes) {
  std::unique_lock lock(mutex_);
  for (const auto& w : writes) validate_locked(w);
  std::vector<WriteResult> out;
  out.reserve(writes.size());
  for (const auto& w : writes)
    out.push_back(apply_locked(find_locked(w.name), w.value, w.quality.value_or(Quality::Ok)));
  return out;
}

ChannelRecord ChannelDb::read(std::string_view name) const {
  std::shared_lock lock(mutex_);
  return find_locked(name).record;
}

std::vector<ChannelRecord> ChannelDb::read_pattern(std::string_view glob) const {
  auto pattern = GlobPattern::parse(glob);
  std::shared_lock lock(mutex_);
  std::vector<ChannelRecord> out;
  for (const auto& [name, ch] : channels_)
    if (pattern.matches(name)) out.push_back(ch.record);
  return out;
}

bool ChannelDb::contains(std::string_view name) const {
  std::shared_lock lock(mutex_);
  return channels_.find(name) != channels_.end();
}

std::vector<std::string> ChannelDb::enum_choices(std::string_view name) const {
  std::shared_lock lock(mutex_);
  return find_locked(name).choices;
}

Subscription ChannelDb::subscribe(std::string_view glob, std::size_t queue_bound) {
  auto q = std::make_shared<detail::SubscriberQueue>(GlobPattern::parse(glob),
                                                    std::max<std::size_t>(queue_bound, 1));
  std::unique_lock lock(mutex_);
  subscribers_.push_back(q);
  return Subscription(std::move(q));
}

StoreSnapshot ChannelDb::snapshot(SnapshotFilter filter) const {
  StoreSnapshot snap;
  std::shared_lock lock(mutex_);
  snap.version = global_version_;
  for (const auto& [name, ch] : channels_) {
    if (filter == SnapshotFilter::CriticalOnly && !ch.record.critical) continue;
    const auto& r = ch.record;
    snap.entries.emplace(name, SnapshotEntry{r.value, r.seq, r.updated_at, r.global_version, r.role});
  }
  return snap;
}

std::size_t ChannelDb::mark_stale(std::span<const std::string> names, std::int64_t max_age_ms) {
  std::unique_lock lock(mutex_);
  const auto now = clock_();
  std::size_t marked = 0;
  for (const auto& name : names) {
    auto it = channels_.find(name);
    if (it == channels_.end()) continue;
    auto& r = it->second.record;
    if (r.role != Role::Readback || r.quality != Quality::Ok) continue;
    if (now - r.updated_at <= max_age_ms) continue;
    // Quality-only change: value and updated_at are kept so the age stays visible.
    r.quality = Quality::Stale;
    r.seq += 1;
    r.global_version = ++global_version_;
    publish_locked(r);
    ++marked;
  }
  return marked;
}

std::uint64_t ChannelDb::global_version() const {
  std::shared_lock lock(mutex_);
  return global_version_;
}

std::size_t ChannelDb::size() const {
  std::shared_lock lock(mutex_);
  return channels_.size();
}

}  // namespace tunevault
