#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tunevault/beam.hpp"
#include "tunevault/value.hpp"

namespace tunevault {

class ChannelDb;

enum class DeviceClass {
  Resonator,
  DipoleMagnet,
  QuadrupoleMagnet,
  ElectrostaticDeflector,
  StepperInsertion,
  BeamMonitor,
  CryoSensor,
};

std::string_view to_string(DeviceClass c);
std::optional<DeviceClass> parse_device_class(std::string_view s);
/// The scaling law a device class must carry.
ScalingLaw law_for_class(DeviceClass c);

inline constexpr int kCamacMaxCrate = 62;
inline constexpr int kCamacMaxSlot = 23;

struct CamacAddress {
  int crate = 0;
  int slot = 0;
  friend auto operator<=>(const CamacAddress&, const CamacAddress&) = default;
};

struct Limits {
  double min = 0.0;
  double max = 0.0;
  double span() const { return max - min; }
  double clamp(double v) const { return v < min ? min : (v > max ? max : v); }
};

struct ChannelSpec {
  std::string name;
  Role role = Role::Setpoint;
  ValueTag tag = ValueTag::Float64;
  std::string units;
  bool critical = false;
  /// Overrides the device law for this setpoint (resonator phases are "none").
  std::optional<ScalingLaw> scaling_law;
  /// For readbacks: the setpoint this channel follows.
  std::optional<std::string> tracks;
  std::vector<std::string> choices;
};

struct DeviceDescriptor {
  std::string device_id;
  DeviceClass device_class = DeviceClass::Resonator;
  ScalingLaw scaling_law = ScalingLaw::None;
  CamacAddress camac_address;
  std::vector<ChannelSpec> channels;
  std::map<std::string, Limits, std::less<>> limits;  // per setpoint channel
  double slew_per_s = 0.0;
  double noise_sigma = 0.0;
  std::optional<double> alarm_above;  // cryo sensors
  std::optional<int> target_line;     // beam monitors

  const ChannelSpec* find_channel(std::string_view name) const;
  /// Effective law of one channel; readbacks and unknown channels are None.
  ScalingLaw law_of(std::string_view channel) const;
};

struct StepperPreset {
  std::string device_id;
  std::string preset_name;
  std::int64_t position_steps = 0;
};

struct GoldenTune {
  std::map<std::string, double, std::less<>> setpoints;
};

struct CatalogSummary {
  std::size_t devices = 0;
  std::size_t resonators = 0;
  std::size_t injector_sources = 0;
  std::size_t beam_monitors = 0;
  std::size_t target_lines = 0;
  std::size_t channels = 0;
  std::size_t presets = 0;
};

/// Devices whose id sits under this system prefix are the ion-source injectors.
inline constexpr std::string_view kInjectorSystem = "INJ";

class Catalog {
 public:
  BeamParameters reference_beam;  // beam the golden tune was set up for
  std::vector<DeviceDescriptor> devices;
  std::vector<StepperPreset> presets;
  GoldenTune golden;

  const DeviceDescriptor* find_device(std::string_view device_id) const;
  /// Device owning `channel`, or nullptr.
  const DeviceDescriptor* owner_of(std::string_view channel) const;
  std::optional<Limits> limits_of(std::string_view channel) const;
  ScalingLaw law_of(std::string_view channel) const;
  const StepperPreset* find_preset(std::string_view device_id, std::string_view preset) const;
  CatalogSummary summary() const;

  /// Rebuilds the lookup tables; call after mutating `devices`.
  void reindex();

 private:
  std::map<std::string, std::size_t, std::less<>> device_index_;
  std::map<std::string, std::size_t, std::less<>> channel_owner_;
};

/// Parses the line-oriented catalog document and checks every descriptor
/// invariant. Throws Error(ParseError | DuplicateAddress | LimitOrderError |
/// CatalogInvariant).
Catalog parse_catalog(std::string_view text);
Catalog read_catalog_file(const std::filesystem::path& path);
std::string serialize_catalog(const Catalog& catalog);

/// Creates every catalog channel in `db` and initializes setpoints and their
/// readbacks to the golden tune.
CatalogSummary install_catalog(const Catalog& catalog, ChannelDb& db);

/// read_catalog_file + install_catalog.
Catalog load_catalog(const std::filesystem::path& path, ChannelDb& db);

/// The built-in facility: three ion-source injectors, 64 resonators, beam
/// transport magnets, insertion devices, one beam monitor per target line
/// and cryogenic sensors.
Catalog default_catalog();

}  // namespace tunevault
