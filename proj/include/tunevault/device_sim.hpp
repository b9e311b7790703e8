#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tunevault/beam.hpp"
#include "tunevault/catalog.hpp"
#include "tunevault/channel_db.hpp"

namespace tunevault {

struct CryoAlarm {
  std::int64_t raised_at = 0;  // ms since epoch
  std::string sensor;
  double temperature_k = 0.0;
  double threshold_k = 0.0;
};

using CryoAlarmSink = std::function<void(const CryoAlarm&)>;

struct SimOptions {
  std::uint64_t seed = 1;
  double source_current_ena = 250.0;
  int active_target_line = 1;
  double cryo_nominal_k = 4.5;
  double cryo_walk_sigma = 0.02;    // K / sqrt(s)
  double cryo_reversion_per_s = 0.05;
  /// A readback not refreshed within this many tick periods turns stale.
  double stale_factor = 5.0;
};

/// Width of the transmission acceptance for one setpoint, as a fraction of
/// the device span.
inline constexpr double kTransmissionWidthFraction = 0.05;

/// Simulated beamline. Each tick moves readbacks toward their setpoints at
/// the device slew rate, publishes beam-monitor currents from the
/// transmission model and random-walks the cryogenic sensors.
///
/// Transmission is exp(-sum(((s - g) / w)^2)) over the scaling-relevant
/// setpoints, with s the device state, g the golden value scaled to the
/// current beam and w 5% of the device span.
class DeviceSim {
 public:
  DeviceSim(ChannelDb& db, const Catalog& catalog, SimOptions options = {});

  void tick(double dt_s);

  /// Model transmission at the present device state.
  double transmission() const;
  /// Model transmission for an explicit setpoint map; missing channels are
  /// taken at their golden value.
  double transmission_of(const std::map<std::string, double, std::less<>>& values) const;

  std::int64_t lookup_preset(std::string_view device_id, std::string_view preset) const;
  /// Writes the preset position to the device setpoint; the readback follows
  /// on later ticks.
  void apply_preset(std::string_view device_id, std::string_view preset);

  /// Golden targets follow the beam: they are the reference tune scaled to it.
  void set_beam(const BeamParameters& beam);
  BeamParameters beam() const;

  void set_offline(std::string_view device_id, bool offline);
  void set_alarm_sink(CryoAlarmSink sink);
  void set_active_target_line(int line);
  int active_target_line() const;

  /// Noise-free internal position of the actuator behind `setpoint`.
  double actuator_state(std::string_view setpoint) const;

 private:
  struct Actuator {
    std::string device_id;
    std::string setpoint;
    std::string readback;  // empty when the device publishes none
    ValueTag tag = ValueTag::Float64;
    Limits limits;
    double slew = 0.0;
    double noise = 0.0;
    ScalingLaw law = ScalingLaw::None;
    double golden_reference = 0.0;
    bool has_golden = false;
    double state = 0.0;
  };
  struct Monitor {
    std::string device_id;
    int line = 0;
    std::string current;
    std::string transmission;
    double noise = 0.0;
  };
  struct Cryo {
    std::string device_id;
    std::string temperature;
    std::string state;  // enum channel, may be empty
    double threshold = 0.0;
    double noise = 0.0;
    double value = 0.0;
    bool alarmed = false;
  };

  double golden_target_locked(const Actuator& a) const;
  double transmission_locked() const;
  double gaussian_locked(double sigma);

  ChannelDb& db_;
  const Catalog& catalog_;
  SimOptions options_;

  mutable std::mutex mutex_;
  std::mt19937_64 rng_;
  std::vector<Actuator> actuators_;
  std::map<std::string, std::size_t, std::less<>> actuator_index_;
  std::vector<Monitor> monitors_;
  std::vector<Cryo> cryos_;
  std::set<std::string, std::less<>> offline_;
  BeamParameters beam_;
  ScaleFactorSet factors_;
  CryoAlarmSink alarm_sink_;
  int active_line_;
};

}  // namespace tunevault
