#include "tunevault/tune_engine.hpp"

#include <cmath>

#include "tunevault/error.hpp"

namespace tunevault {

std::string_view to_string(RestoreMode m) { return m == RestoreMode::Commit ? "commit" : "dry_run"; }

std::optional<RestoreMode> parse_restore_mode(std::string_view s) {
  if (s == "commit") return RestoreMode::Commit;
  if (s == "dry_run") return RestoreMode::DryRun;
  return std::nullopt;
}

TuneEngine::TuneEngine(ChannelDb& db, ArchiveStore& store, const Catalog& catalog,
                       BeamParameters initial_beam, Clock clock)
    : db_(db), store_(store), catalog_(catalog), clock_(std::move(clock)), beam_(initial_beam) {
  validate(beam_);
}

BeamParameters TuneEngine::current_beam() const {
  std::shared_lock lock(state_mutex_);
  return beam_;
}

void TuneEngine::set_current_beam(const BeamParameters& beam) {
  validate(beam);
  std::function<void(const BeamParameters&)> cb;
  {
    std::unique_lock lock(state_mutex_);
    beam_ = beam;
    cb = beam_callback_;
  }
  if (cb) cb(beam);
}

void TuneEngine::on_beam_change(std::function<void(const BeamParameters&)> callback) {
  std::unique_lock lock(state_mutex_);
  beam_callback_ = std::move(callback);
}

std::int64_t TuneEngine::archive_tune(std::string label, Provenance provenance) {
  TuneRow header;
  std::vector<TuneValueRow> values;
  {
    std::shared_lock lock(state_mutex_);
    header.beam = beam_;
    const auto snap = db_.snapshot(SnapshotFilter::CriticalOnly);
    for (const auto& [name, entry] : snap.entries) {
      if (entry.role != Role::Setpoint) continue;
      const auto number = as_number(entry.value);
      if (!number) continue;
      TuneValueRow v;
      v.channel = name;
      v.scaling_law = catalog_.law_of(name);
      v.value_float = *number;
      values.push_back(std::move(v));
    }
  }
  header.label = std::move(label);
  header.created_at = clock_();
  header.provenance = provenance;
  return store_.persist_tune(std::move(header), std::move(values));
}

RestoreReport TuneEngine::restore_tune(std::int64_t tune_id, const BeamParameters& new_beam,
                                       RestoreMode mode) {
  validate(new_beam);
  const TuneData tune = store_.load_tune(tune_id);

  RestoreReport report;
  report.tune_id = tune_id;
  report.old_beam = tune.header.beam;
  report.new_beam = new_beam;
  report.mode = mode;
  report.factors = scale_factors(tune.header.beam, new_beam);
  report.beta_warning = kinematics(new_beam).beta > kMachineBetaLimit;

  for (const auto& v : tune.values) {
    RestoreEntry e;
    e.channel = v.channel;
    e.scaling_law = v.scaling_law;
    e.archived_value = v.value_float;
    e.factor = report.factors.factor(v.scaling_law);
    e.proposed_value = v.value_float * e.factor;
    if (auto lim = catalog_.limits_of(v.channel)) {
      const double clamped = lim->clamp(e.proposed_value);
      if (clamped != e.proposed_value) {
        e.proposed_value = clamped;
        e.clamped = true;
      }
    }
    report.entries.push_back(std::move(e));
  }
  if (mode == RestoreMode::DryRun) return report;

  bool expected = false;
  if (!commit_in_flight_.compare_exchange_strong(expected, true))
    throw Error(ErrorCode::RestoreBusy, "another restore commit is in progress");
  struct Release {
    std::atomic<bool>& flag;
    ~Release() { flag = false; }
  } release{commit_in_flight_};

  std::vector<ChannelWrite> writes;
  std::vector<std::size_t> written;
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    auto& e = report.entries[i];
    try {
      const auto rec = db_.read(e.channel);
      switch (rec.tag()) {
        case ValueTag::Float64:
          writes.push_back({e.channel, e.proposed_value, std::nullopt});
          break;
        case ValueTag::Int64:
          writes.push_back({e.channel, static_cast<std::int64_t>(std::llround(e.proposed_value)),
                            std::nullopt});
          break;
        case ValueTag::EnumString:
          e.error = "channel holds an enum value";
          continue;
      }
      written.push_back(i);
    } catch (const Error& err) {
      e.error = err.what();
    }
  }

  std::function<void(const BeamParameters&)> cb;
  {
    std::unique_lock lock(state_mutex_);
    try {
      db_.write_batch(writes);
    } catch (const Error& err) {
      throw Error(ErrorCode::WriteFailure, std::string("restore commit failed: ") + err.what());
    }
    for (auto i : written) report.entries[i].applied = true;
    beam_ = new_beam;
    cb = beam_callback_;
  }
  if (cb) cb(new_beam);
  return report;
}

}  // namespace tunevault
