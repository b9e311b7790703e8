#include "tunevault/device_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tunevault/error.hpp"

namespace tunevault {

DeviceSim::DeviceSim(ChannelDb& db, const Catalog& catalog, SimOptions options)
    : db_(db),
      catalog_(catalog),
      options_(options),
      rng_(options.seed),
      beam_(catalog.reference_beam),
      active_line_(options.active_target_line) {
  for (const auto& d : catalog.devices) {
    for (const auto& c : d.channels) {
      if (c.role != Role::Setpoint || c.tag == ValueTag::EnumString) continue;
      Actuator a;
      a.device_id = d.device_id;
      a.setpoint = c.name;
      a.tag = c.tag;
      a.limits = d.limits.at(c.name);
      a.slew = d.slew_per_s;
      a.noise = d.noise_sigma;
      a.law = d.law_of(c.name);
      for (const auto& rb : d.channels)
        if (rb.tracks && *rb.tracks == c.name) a.readback = rb.name;
      if (auto it = catalog.golden.setpoints.find(c.name); it != catalog.golden.setpoints.end()) {
        a.golden_reference = it->second;
        a.has_golden = true;
      }
      a.state = as_number(db.read(c.name).value).value_or(0.0);
      actuator_index_.emplace(a.setpoint, actuators_.size());
      actuators_.push_back(std::move(a));
    }
    if (d.device_class == DeviceClass::BeamMonitor) {
      Monitor m{d.device_id, d.target_line.value_or(0), {}, {}, d.noise_sigma};
      for (const auto& c : d.channels) {
        if (c.name.ends_with(":current")) m.current = c.name;
        if (c.name.ends_with(":transmission")) m.transmission = c.name;
      }
      monitors_.push_back(std::move(m));
    }
    if (d.device_class == DeviceClass::CryoSensor) {
      Cryo s;
      s.device_id = d.device_id;
      s.threshold = d.alarm_above.value_or(std::numeric_limits<double>::infinity());
      s.noise = d.noise_sigma;
      s.value = options_.cryo_nominal_k;
      for (const auto& c : d.channels) {
        if (c.tag == ValueTag::Float64) s.temperature = c.name;
        if (c.tag == ValueTag::EnumString) s.state = c.name;
      }
      cryos_.push_back(std::move(s));
    }
  }
}

double DeviceSim::gaussian_locked(double sigma) {
  if (sigma <= 0.0) return 0.0;
  std::normal_distribution<double> dist(0.0, sigma);
  return dist(rng_);
}

double DeviceSim::golden_target_locked(const Actuator& a) const {
  return a.golden_reference * factors_.factor(a.law);
}

double DeviceSim::transmission_locked() const {
  double sum = 0.0;
  for (const auto& a : actuators_) {
    if (a.law == ScalingLaw::None || !a.has_golden) continue;
    const double w = kTransmissionWidthFraction * a.limits.span();
    const double d = (a.state - golden_target_locked(a)) / w;
    sum += d * d;
  }
  return std::exp(-sum);
}

void DeviceSim::tick(double dt_s) {
  if (!(dt_s > 0.0)) throw Error(ErrorCode::BadRequest, "tick needs dt_s > 0");
  std::lock_guard lock(mutex_);
  const auto setpoints = db_.snapshot(SnapshotFilter::All);
  std::vector<ChannelWrite> writes;
  std::vector<std::string> silent;

  for (auto& a : actuators_) {
    auto it = setpoints.entries.find(a.setpoint);
    if (it != setpoints.entries.end()) {
      const double target = a.limits.clamp(as_number(it->second.value).value_or(a.state));
      const double step = a.slew * dt_s;
      const double diff = target - a.state;
      a.state = std::abs(diff) <= step ? target : a.state + std::copysign(step, diff);
    }
    if (a.readback.empty()) continue;
    // Noise is drawn for every actuator so the random stream does not depend
    // on which devices are offline.
    const double measured = a.limits.clamp(a.state + gaussian_locked(a.noise));
    if (offline_.contains(a.device_id)) {
      silent.push_back(a.readback);
      continue;
    }
    if (a.tag == ValueTag::Int64)
      writes.push_back({a.readback, static_cast<std::int64_t>(std::llround(measured)), {}});
    else
      writes.push_back({a.readback, measured, {}});
  }

  const double t = transmission_locked();
  for (const auto& m : monitors_) {
    const bool active = m.line == active_line_;
    const double current =
        active ? std::max(0.0, options_.source_current_ena * t + gaussian_locked(m.noise)) : 0.0;
    if (offline_.contains(m.device_id)) {
      silent.push_back(m.current);
      silent.push_back(m.transmission);
      continue;
    }
    if (!m.current.empty()) writes.push_back({m.current, current, {}});
    if (!m.transmission.empty()) writes.push_back({m.transmission, active ? t : 0.0, {}});
  }

  std::vector<std::pair<CryoAlarm, std::string>> raised;
  for (auto& c : cryos_) {
    const double sigma = options_.cryo_walk_sigma * std::sqrt(dt_s);
    c.value += -options_.cryo_reversion_per_s * (c.value - options_.cryo_nominal_k) * dt_s +
               gaussian_locked(sigma);
    const double measured = c.value + gaussian_locked(c.noise);
    const bool alarm = measured > c.threshold;
    if (alarm && !c.alarmed) raised.push_back({{0, c.device_id, measured, c.threshold}, c.temperature});
    c.alarmed = alarm;
    if (offline_.contains(c.device_id)) {
      silent.push_back(c.temperature);
      continue;
    }
    const Quality q = alarm ? Quality::Alarm : Quality::Ok;
    if (!c.temperature.empty()) writes.push_back({c.temperature, measured, q});
    if (!c.state.empty()) writes.push_back({c.state, std::string(alarm ? "warm" : "normal"), q});
  }

  db_.write_batch(writes);
  if (!silent.empty()) {
    const auto max_age = static_cast<std::int64_t>(std::llround(options_.stale_factor * dt_s * 1000.0));
    db_.mark_stale(silent, max_age);
  }
  if (alarm_sink_) {
    for (auto& [alarm, channel] : raised) {
      alarm.raised_at = channel.empty() ? wall_clock_ms() : db_.read(channel).updated_at;
      alarm_sink_(alarm);
    }
  }
}

double DeviceSim::transmission() const {
  std::lock_guard lock(mutex_);
  return transmission_locked();
}

double DeviceSim::transmission_of(const std::map<std::string, double, std::less<>>& values) const {
  std::lock_guard lock(mutex_);
  double sum = 0.0;
  for (const auto& a : actuators_) {
    if (a.law == ScalingLaw::None || !a.has_golden) continue;
    const double g = golden_target_locked(a);
    auto it = values.find(a.setpoint);
    const double s = it == values.end() ? g : it->second;
    const double d = (s - g) / (kTransmissionWidthFraction * a.limits.span());
    sum += d * d;
  }
  return std::exp(-sum);
}

std::int64_t DeviceSim::lookup_preset(std::string_view device_id, std::string_view preset) const {
  const auto* dev = catalog_.find_device(device_id);
  if (!dev) throw Error(ErrorCode::UnknownDevice, "unknown device '" + std::string(device_id) + "'");
  const auto* p = catalog_.find_preset(device_id, preset);
  if (!p)
    throw Error(ErrorCode::UnknownPreset, "device '" + std::string(device_id) +
                                              "' has no preset '" + std::string(preset) + "'");
  return p->position_steps;
}

void DeviceSim::apply_preset(std::string_view device_id, std::string_view preset) {
  const auto steps = lookup_preset(device_id, preset);
  const auto* dev = catalog_.find_device(device_id);
  for (const auto& c : dev->channels) {
    if (c.role == Role::Setpoint && c.tag == ValueTag::Int64) {
      db_.write(c.name, steps);
      return;
    }
  }
  throw Error(ErrorCode::UnknownDevice,
              "device '" + std::string(device_id) + "' has no position setpoint");
}

void DeviceSim::set_beam(const BeamParameters& beam) {
  validate(beam);
  std::lock_guard lock(mutex_);
  beam_ = beam;
  factors_ = scale_factors(catalog_.reference_beam, beam);
}

BeamParameters DeviceSim::beam() const {
  std::lock_guard lock(mutex_);
  return beam_;
}

void DeviceSim::set_offline(std::string_view device_id, bool offline) {
  if (!catalog_.find_device(device_id))
    throw Error(ErrorCode::UnknownDevice, "unknown device '" + std::string(device_id) + "'");
  std::lock_guard lock(mutex_);
  if (offline)
    offline_.emplace(device_id);
  else
    offline_.erase(std::string(device_id));
}

void DeviceSim::set_alarm_sink(CryoAlarmSink sink) {
  std::lock_guard lock(mutex_);
  alarm_sink_ = std::move(sink);
}

void DeviceSim::set_active_target_line(int line) {
  std::lock_guard lock(mutex_);
  active_line_ = line;
}

int DeviceSim::active_target_line() const {
  std::lock_guard lock(mutex_);
  return active_line_;
}

double DeviceSim::actuator_state(std::string_view setpoint) const {
  std::lock_guard lock(mutex_);
  auto it = actuator_index_.find(setpoint);
  if (it == actuator_index_.end())
    throw Error(ErrorCode::UnknownChannel, "no actuator behind '" + std::string(setpoint) + "'");
  return actuators_[it->second].state;
}

}  // namespace tunevault
