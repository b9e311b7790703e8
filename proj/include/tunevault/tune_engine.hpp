#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "tunevault/archive_store.hpp"
#include "tunevault/beam.hpp"
#include "tunevault/catalog.hpp"
#include "tunevault/channel_db.hpp"
#include "tunevault/clock.hpp"

namespace tunevault {

enum class RestoreMode { DryRun, Commit };

std::string_view to_string(RestoreMode m);
std::optional<RestoreMode> parse_restore_mode(std::string_view s);

struct RestoreEntry {
  std::string channel;
  ScalingLaw scaling_law = ScalingLaw::None;
  double archived_value = 0.0;
  double factor = 1.0;
  double proposed_value = 0.0;
  bool clamped = false;
  bool applied = false;
  std::string error;  // set when a commit could not write this channel
};

struct RestoreReport {
  std::int64_t tune_id = 0;
  BeamParameters old_beam;
  BeamParameters new_beam;
  RestoreMode mode = RestoreMode::DryRun;
  ScaleFactorSet factors;
  std::vector<RestoreEntry> entries;
  bool beta_warning = false;
};

/// Archives complete machine tunes and restores them scaled to a new beam.
class TuneEngine {
 public:
  TuneEngine(ChannelDb& db, ArchiveStore& store, const Catalog& catalog,
             BeamParameters initial_beam, Clock clock = wall_clock_ms);

  BeamParameters current_beam() const;
  void set_current_beam(const BeamParameters& beam);
  /// Called after a committed restore moves the machine to a new beam.
  void on_beam_change(std::function<void(const BeamParameters&)> callback);

  /// Captures every critical numeric setpoint in one consistent cut and
  /// stores it with the current beam.
  std::int64_t archive_tune(std::string label, Provenance provenance);

  /// proposed = archived * factor(law), clamped to the device limits. Commit
  /// loads every proposed value in one atomic batch; dry-run writes nothing.
  /// Throws RestoreBusy if another commit is in flight.
  RestoreReport restore_tune(std::int64_t tune_id, const BeamParameters& new_beam, RestoreMode mode);

 private:
  ChannelDb& db_;
  ArchiveStore& store_;
  const Catalog& catalog_;
  Clock clock_;

  // Shared by tune captures, exclusive while a commit swaps values and beam.
  mutable std::shared_mutex state_mutex_;
  BeamParameters beam_;
  std::function<void(const BeamParameters&)> beam_callback_;
  std::atomic<bool> commit_in_flight_{false};
};

}  // namespace tunevault
