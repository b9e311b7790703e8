#include "tunevault/catalog.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tunevault/channel_db.hpp"
#include "tunevault/error.hpp"
#include "tunevault/glob.hpp"

namespace tunevault {

using ojson = nlohmann::ordered_json;

std::string_view to_string(DeviceClass c) {
  switch (c) {
    case DeviceClass::Resonator: return "resonator";
    case DeviceClass::DipoleMagnet: return "dipole_magnet";
    case DeviceClass::QuadrupoleMagnet: return "quadrupole_magnet";
    case DeviceClass::ElectrostaticDeflector: return "electrostatic_deflector";
    case DeviceClass::StepperInsertion: return "stepper_insertion";
    case DeviceClass::BeamMonitor: return "beam_monitor";
    case DeviceClass::CryoSensor: return "cryo_sensor";
  }
  return "?";
}

std::optional<DeviceClass> parse_device_class(std::string_view s) {
  for (auto c : {DeviceClass::Resonator, DeviceClass::DipoleMagnet, DeviceClass::QuadrupoleMagnet,
                 DeviceClass::ElectrostaticDeflector, DeviceClass::StepperInsertion,
                 DeviceClass::BeamMonitor, DeviceClass::CryoSensor}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

ScalingLaw law_for_class(DeviceClass c) {
  switch (c) {
    case DeviceClass::Resonator: return ScalingLaw::RfAmplitude;
    case DeviceClass::DipoleMagnet:
    case DeviceClass::QuadrupoleMagnet: return ScalingLaw::Magnetic;
    case DeviceClass::ElectrostaticDeflector: return ScalingLaw::Electrostatic;
    default: return ScalingLaw::None;
  }
}

const ChannelSpec* DeviceDescriptor::find_channel(std::string_view name) const {
  for (const auto& c : channels)
    if (c.name == name) return &c;
  return nullptr;
}

ScalingLaw DeviceDescriptor::law_of(std::string_view channel) const {
  const auto* c = find_channel(channel);
  if (!c || c->role != Role::Setpoint) return ScalingLaw::None;
  return c->scaling_law.value_or(scaling_law);
}

const DeviceDescriptor* Catalog::find_device(std::string_view device_id) const {
  auto it = device_index_.find(device_id);
  return it == device_index_.end() ? nullptr : &devices[it->second];
}

const DeviceDescriptor* Catalog::owner_of(std::string_view channel) const {
  auto it = channel_owner_.find(channel);
  return it == channel_owner_.end() ? nullptr : &devices[it->second];
}

std::optional<Limits> Catalog::limits_of(std::string_view channel) const {
  const auto* dev = owner_of(channel);
  if (!dev) return std::nullopt;
  auto it = dev->limits.find(channel);
  if (it == dev->limits.end()) return std::nullopt;
  return it->second;
}

ScalingLaw Catalog::law_of(std::string_view channel) const {
  const auto* dev = owner_of(channel);
  return dev ? dev->law_of(channel) : ScalingLaw::None;
}

const StepperPreset* Catalog::find_preset(std::string_view device_id,
                                          std::string_view preset) const {
  for (const auto& p : presets)
    if (p.device_id == device_id && p.preset_name == preset) return &p;
  return nullptr;
}

CatalogSummary Catalog::summary() const {
  CatalogSummary s;
  std::set<int> lines;
  s.devices = devices.size();
  s.presets = presets.size();
  for (const auto& d : devices) {
    s.channels += d.channels.size();
    if (d.device_class == DeviceClass::Resonator) ++s.resonators;
    if (d.device_class == DeviceClass::BeamMonitor) {
      ++s.beam_monitors;
      if (d.target_line) lines.insert(*d.target_line);
    }
    if (d.device_id.starts_with(std::string(kInjectorSystem) + ":")) ++s.injector_sources;
  }
  s.target_lines = lines.size();
  return s;
}

void Catalog::reindex() {
  device_index_.clear();
  channel_owner_.clear();
  for (std::size_t i = 0; i < devices.size(); ++i) {
    device_index_.emplace(devices[i].device_id, i);
    for (const auto& c : devices[i].channels) channel_owner_.emplace(c.name, i);
  }
}

namespace {

[[noreturn]] void invariant(const std::string& msg) {
  throw Error(ErrorCode::CatalogInvariant, msg);
}

template <class Parse>
auto parse_enum(const ojson& j, const char* key, Parse parse) {
  auto s = j.at(key).get<std::string>();
  auto v = parse(s);
  if (!v) throw Error(ErrorCode::ParseError, std::string("bad ") + key + " '" + s + "'");
  return *v;
}

ChannelSpec channel_from_json(const ojson& j) {
  ChannelSpec c;
  c.name = j.at("name").get<std::string>();
  c.role = parse_enum(j, "role", parse_role);
  c.tag = parse_enum(j, "tag", parse_value_tag);
  c.units = j.value("units", "");
  c.critical = j.at("critical").get<bool>();
  if (j.contains("scaling_law")) c.scaling_law = parse_enum(j, "scaling_law", parse_scaling_law);
  if (j.contains("tracks")) c.tracks = j.at("tracks").get<std::string>();
  if (j.contains("choices")) c.choices = j.at("choices").get<std::vector<std::string>>();
  return c;
}

DeviceDescriptor device_from_json(const ojson& j) {
  DeviceDescriptor d;
  d.device_id = j.at("device_id").get<std::string>();
  d.device_class = parse_enum(j, "class", parse_device_class);
  d.scaling_law = parse_enum(j, "scaling_law", parse_scaling_law);
  d.camac_address.crate = j.at("camac_address").at("crate").get<int>();
  d.camac_address.slot = j.at("camac_address").at("slot").get<int>();
  for (const auto& c : j.at("channels")) d.channels.push_back(channel_from_json(c));
  const ojson limits = j.value("limits", ojson::object());
  for (const auto& [name, lim] : limits.items())
    d.limits[name] = Limits{lim.at("min").get<double>(), lim.at("max").get<double>()};
  d.slew_per_s = j.at("slew_per_s").get<double>();
  d.noise_sigma = j.at("noise_sigma").get<double>();
  if (j.contains("alarm_above")) d.alarm_above = j.at("alarm_above").get<double>();
  if (j.contains("target_line")) d.target_line = j.at("target_line").get<int>();
  return d;
}

void validate_catalog(const Catalog& cat) {
  std::set<std::string> ids;
  std::set<CamacAddress> addresses;
  std::set<std::string> channel_names;

  for (const auto& d : cat.devices) {
    if (!ids.insert(d.device_id).second) invariant("duplicate device_id '" + d.device_id + "'");
    const auto& a = d.camac_address;
    if (a.crate < 1 || a.crate > kCamacMaxCrate || a.slot < 1 || a.slot > kCamacMaxSlot)
      invariant("CAMAC address of '" + d.device_id + "' out of range (crate 1..62, slot 1..23)");
    if (!addresses.insert(a).second)
      throw Error(ErrorCode::DuplicateAddress, "crate " + std::to_string(a.crate) + " slot " +
                                                   std::to_string(a.slot) + " assigned twice");
    if (law_for_class(d.device_class) != d.scaling_law)
      invariant("device '" + d.device_id + "' of class " + std::string(to_string(d.device_class)) +
                " cannot use scaling law " + std::string(to_string(d.scaling_law)));
    if (!(d.slew_per_s >= 0.0) || !(d.noise_sigma >= 0.0))
      invariant("device '" + d.device_id + "' needs non-negative slew and noise");

    for (const auto& [name, lim] : d.limits) {
      if (!(lim.min < lim.max))
        throw Error(ErrorCode::LimitOrderError, "limits of '" + name + "' need min < max");
      const auto* c = d.find_channel(name);
      if (!c || c->role != Role::Setpoint)
        invariant("limits given for '" + name + "', which is not a setpoint of " + d.device_id);
    }
    for (const auto& c : d.channels) {
      if (!is_valid_channel_name(c.name) || !c.name.starts_with(d.device_id + ":"))
        invariant("channel '" + c.name + "' is not a valid name under " + d.device_id);
      if (!channel_names.insert(c.name).second) invariant("duplicate channel '" + c.name + "'");
      if (c.tag == ValueTag::EnumString && c.choices.empty())
        invariant("enum channel '" + c.name + "' declares no choices");
      if (c.role == Role::Setpoint && c.tag != ValueTag::EnumString && !d.limits.contains(c.name))
        invariant("setpoint '" + c.name + "' has no limits");
      if (c.role == Role::Readback && c.scaling_law && *c.scaling_law != ScalingLaw::None)
        invariant("readback '" + c.name + "' cannot carry a scaling law");
      if (c.tracks) {
        const auto* sp = d.find_channel(*c.tracks);
        if (c.role != Role::Readback || !sp || sp->role != Role::Setpoint || sp->tag != c.tag)
          invariant("'" + c.name + "' must be a readback tracking a same-typed setpoint");
      }
    }
  }

  std::set<std::pair<std::string, std::string>> preset_keys;
  for (const auto& p : cat.presets) {
    const auto* d = cat.find_device(p.device_id);
    if (!d || d->device_class != DeviceClass::StepperInsertion)
      invariant("preset '" + p.preset_name + "' names '" + p.device_id +
                "', which is not a stepper_insertion device");
    if (!preset_keys.emplace(p.device_id, p.preset_name).second)
      invariant("duplicate preset " + p.device_id + "/" + p.preset_name);
  }

  for (const auto& [name, value] : cat.golden.setpoints) {
    const auto* d = cat.owner_of(name);
    const auto* c = d ? d->find_channel(name) : nullptr;
    if (!c || c->role != Role::Setpoint || c->tag == ValueTag::EnumString)
      invariant("golden tune names '" + name + "', which is not a numeric setpoint");
    if (c->tag == ValueTag::Int64 && value != std::floor(value))
      invariant("golden value of integer channel '" + name + "' is not integral");
  }
  for (const auto& d : cat.devices) {
    for (const auto& c : d.channels) {
      if (d.law_of(c.name) != ScalingLaw::None && !cat.golden.setpoints.contains(c.name))
        invariant("golden tune does not cover scaling-relevant setpoint '" + c.name + "'");
    }
  }
}

ojson to_json(const ChannelSpec& c) {
  ojson j;
  j["name"] = c.name;
  j["role"] = to_string(c.role);
  j["tag"] = to_string(c.tag);
  j["units"] = c.units;
  j["critical"] = c.critical;
  if (c.scaling_law) j["scaling_law"] = to_string(*c.scaling_law);
  if (c.tracks) j["tracks"] = *c.tracks;
  if (!c.choices.empty()) j["choices"] = c.choices;
  return j;
}

}  // namespace

Catalog parse_catalog(std::string_view text) {
  Catalog cat;
  bool have_beam = false, have_golden = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      auto j = ojson::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "device") {
        cat.devices.push_back(device_from_json(j));
      } else if (type == "preset") {
        cat.presets.push_back({j.at("device_id").get<std::string>(),
                               j.at("preset_name").get<std::string>(),
                               j.at("position_steps").get<std::int64_t>()});
      } else if (type == "golden_tune") {
        if (have_golden) throw Error(ErrorCode::ParseError, "second golden_tune record");
        for (const auto& [name, v] : j.at("setpoints").items())
          cat.golden.setpoints[name] = v.get<double>();
        have_golden = true;
      } else if (type == "beam") {
        if (have_beam) throw Error(ErrorCode::ParseError, "second beam record");
        cat.reference_beam = {j.at("mass_amu").get<double>(), j.at("charge_state").get<int>(),
                              j.at("energy_mev_u").get<double>()};
        have_beam = true;
      } else {
        throw Error(ErrorCode::ParseError, "unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError,
                  "catalog line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ParseError) throw;
      throw Error(ErrorCode::ParseError,
                  "catalog line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (cat.devices.empty()) throw Error(ErrorCode::ParseError, "catalog declares no devices");
  if (!have_beam) throw Error(ErrorCode::ParseError, "catalog has no beam record");
  if (!is_valid(cat.reference_beam))
    throw Error(ErrorCode::ParseError, "catalog beam record is not a valid beam");
  cat.reindex();
  validate_catalog(cat);
  return cat;
}

Catalog read_catalog_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open catalog " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_catalog(ss.str());
}

std::string serialize_catalog(const Catalog& cat) {
  std::string out = "# tunevault device catalog: one record per line\n";
  ojson beam;
  beam["type"] = "beam";
  beam["mass_amu"] = cat.reference_beam.mass_amu;
  beam["charge_state"] = cat.reference_beam.charge_state;
  beam["energy_mev_u"] = cat.reference_beam.energy_mev_u;
  out += beam.dump() + "\n";
  for (const auto& d : cat.devices) {
    ojson j;
    j["type"] = "device";
    j["device_id"] = d.device_id;
    j["class"] = to_string(d.device_class);
    j["scaling_law"] = to_string(d.scaling_law);
    j["camac_address"] = {{"crate", d.camac_address.crate}, {"slot", d.camac_address.slot}};
    j["channels"] = ojson::array();
    for (const auto& c : d.channels) j["channels"].push_back(to_json(c));
    j["limits"] = ojson::object();
    for (const auto& [name, lim] : d.limits) j["limits"][name] = {{"min", lim.min}, {"max", lim.max}};
    j["slew_per_s"] = d.slew_per_s;
    j["noise_sigma"] = d.noise_sigma;
    if (d.alarm_above) j["alarm_above"] = *d.alarm_above;
    if (d.target_line) j["target_line"] = *d.target_line;
    out += j.dump() + "\n";
  }
  for (const auto& p : cat.presets) {
    ojson j;
    j["type"] = "preset";
    j["device_id"] = p.device_id;
    j["preset_name"] = p.preset_name;
    j["position_steps"] = p.position_steps;
    out += j.dump() + "\n";
  }
  ojson g;
  g["type"] = "golden_tune";
  g["setpoints"] = ojson::object();
  for (const auto& [name, v] : cat.golden.setpoints) g["setpoints"][name] = v;
  out += g.dump() + "\n";
  return out;
}

CatalogSummary install_catalog(const Catalog& catalog, ChannelDb& db) {
  for (const auto& d : catalog.devices)
    for (const auto& c : d.channels)
      db.create_channel(c.name, c.tag, c.units, c.role, c.critical, c.choices);

  std::vector<ChannelWrite> init;
  auto typed = [](ValueTag tag, double v) -> Value {
    if (tag == ValueTag::Int64) return static_cast<std::int64_t>(std::llround(v));
    return v;
  };
  for (const auto& d : catalog.devices) {
    for (const auto& c : d.channels) {
      const std::string& source = c.tracks ? *c.tracks : c.name;
      auto it = catalog.golden.setpoints.find(source);
      if (it == catalog.golden.setpoints.end()) continue;
      if (c.role == Role::Readback && !c.tracks) continue;
      init.push_back({c.name, typed(c.tag, it->second), std::nullopt});
    }
  }
  db.write_batch(init);
  return catalog.summary();
}

Catalog load_catalog(const std::filesystem::path& path, ChannelDb& db) {
  Catalog cat = read_catalog_file(path);
  install_catalog(cat, db);
  return cat;
}

namespace {

class CrateAllocator {
 public:
  CamacAddress next() {
    if (slot_ > kSlotsUsed) {
      ++crate_;
      slot_ = 1;
    }
    return {crate_, slot_++};
  }

 private:
  // Stations 1..20 hold modules; the rest of the crate is left for the controller.
  static constexpr int kSlotsUsed = 20;
  int crate_ = 1;
  int slot_ = 1;
};

ChannelSpec setpoint(std::string name, std::string units, ValueTag tag = ValueTag::Float64,
                     std::optional<ScalingLaw> law = std::nullopt) {
  ChannelSpec c;
  c.name = std::move(name);
  c.role = Role::Setpoint;
  c.tag = tag;
  c.units = std::move(units);
  c.critical = true;
  c.scaling_law = law;
  return c;
}

ChannelSpec readback(std::string name, std::string units, bool critical,
                     std::optional<std::string> tracks, ValueTag tag = ValueTag::Float64) {
  ChannelSpec c;
  c.name = std::move(name);
  c.role = Role::Readback;
  c.tag = tag;
  c.units = std::move(units);
  c.critical = critical;
  c.tracks = std::move(tracks);
  return c;
}

std::string numbered(std::string_view prefix, int n, int width) {
  std::string digits = std::to_string(n);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, width - digits.size(), '0');
  return std::string(prefix) + digits;
}

// Adds a single-actuator device: one setpoint plus a readback that follows it.
DeviceDescriptor& add_actuator(Catalog& cat, CrateAllocator& crates, std::string device_id,
                               DeviceClass cls, const std::string& signal,
                               const std::string& units, Limits limits, double golden,
                               double slew, double noise) {
  DeviceDescriptor d;
  d.device_id = std::move(device_id);
  d.device_class = cls;
  d.scaling_law = law_for_class(cls);
  d.camac_address = crates.next();
  const std::string sp = d.device_id + ":" + signal;
  d.channels.push_back(setpoint(sp, units));
  d.channels.push_back(readback(sp + "_rb", units, false, sp));
  d.limits[sp] = limits;
  d.slew_per_s = slew;
  d.noise_sigma = noise;
  cat.golden.setpoints[sp] = golden;
  cat.devices.push_back(std::move(d));
  return cat.devices.back();
}

}  // namespace

Catalog default_catalog() {
  Catalog cat;
  CrateAllocator crates;
  // 40Ar 9+ at 6 MeV/u.
  cat.reference_beam = {39.9624, 9, 6.0};

  const double golden_sources[] = {152.0, 181.5, 126.0};
  for (int i = 1; i <= 3; ++i) {
    add_actuator(cat, crates, numbered("INJ:S", i, 1), DeviceClass::ElectrostaticDeflector,
                 "extraction_voltage", "kV", {0.0, 350.0}, golden_sources[i - 1], 25.0, 0.05);
  }
  for (int i = 1; i <= 4; ++i) {
    add_actuator(cat, crates, numbered("DEFL:E", i, 2), DeviceClass::ElectrostaticDeflector,
                 "voltage", "kV", {0.0, 60.0}, 18.0 + 3.5 * i, 5.0, 0.01);
  }

  for (int i = 1; i <= 64; ++i) {
    DeviceDescriptor d;
    d.device_id = numbered("RES:R", i, 3);
    d.device_class = DeviceClass::Resonator;
    d.scaling_law = ScalingLaw::RfAmplitude;
    d.camac_address = crates.next();
    const std::string amp = d.device_id + ":amplitude";
    const std::string phase = d.device_id + ":phase";
    d.channels.push_back(setpoint(amp, "MV/m"));
    d.channels.push_back(readback(amp + "_rb", "MV/m", false, amp));
    d.channels.push_back(setpoint(phase, "deg", ValueTag::Float64, ScalingLaw::None));
    d.channels.push_back(readback(phase + "_rb", "deg", false, phase));
    d.limits[amp] = {0.0, 6.0};
    d.limits[phase] = {-180.0, 180.0};
    d.slew_per_s = 0.5;
    d.noise_sigma = 0.002;
    // Gentle taper along the linac; low-beta cavities run hotter.
    cat.golden.setpoints[amp] = std::round((3.4 - 0.015 * i) * 1000.0) / 1000.0;
    cat.golden.setpoints[phase] = -20.0 + static_cast<double>((i * 7) % 11);
    cat.devices.push_back(std::move(d));
  }

  for (int i = 1; i <= 8; ++i) {
    add_actuator(cat, crates, numbered("DIP:D", i, 2), DeviceClass::DipoleMagnet, "field", "T",
                 {0.0, 1.8}, 0.55 + 0.08 * i, 0.05, 0.0002);
  }
  for (int i = 1; i <= 16; ++i) {
    add_actuator(cat, crates, numbered("QUAD:Q", i, 2), DeviceClass::QuadrupoleMagnet,
                 "gradient", "T/m", {0.0, 20.0}, 4.0 + 0.5 * (i % 9), 1.0, 0.002);
  }

  struct Stepper {
    const char* id;
    std::int64_t golden;
  };
  for (const auto& s : {Stepper{"SLIT:L1", 12000}, Stepper{"SLIT:L2", 9000},
                        Stepper{"FOIL:F1", 0}}) {
    DeviceDescriptor d;
    d.device_id = s.id;
    d.device_class = DeviceClass::StepperInsertion;
    d.scaling_law = ScalingLaw::None;
    d.camac_address = crates.next();
    const std::string pos = d.device_id + ":position";
    d.channels.push_back(setpoint(pos, "steps", ValueTag::Int64));
    d.channels.push_back(readback(pos + "_rb", "steps", false, pos, ValueTag::Int64));
    d.limits[pos] = {0.0, 20000.0};
    d.slew_per_s = 2000.0;
    d.noise_sigma = 0.0;
    cat.golden.setpoints[pos] = static_cast<double>(s.golden);
    cat.devices.push_back(std::move(d));
  }
  cat.presets = {
      {"SLIT:L1", "out", 0},        {"SLIT:L1", "in", 12000},   {"SLIT:L1", "narrow", 15500},
      {"SLIT:L2", "out", 0},        {"SLIT:L2", "in", 9000},    {"FOIL:F1", "out", 0},
      {"FOIL:F1", "carbon", 7400},  {"FOIL:F1", "gold", 14800},
  };

  for (int line = 1; line <= 3; ++line) {
    DeviceDescriptor d;
    d.device_id = numbered("BM:T", line, 1);
    d.device_class = DeviceClass::BeamMonitor;
    d.scaling_law = ScalingLaw::None;
    d.camac_address = crates.next();
    d.channels.push_back(readback(d.device_id + ":current", "enA", false, std::nullopt));
    d.channels.push_back(readback(d.device_id + ":transmission", "", false, std::nullopt));
    d.noise_sigma = 0.5;
    d.target_line = line;
    cat.devices.push_back(std::move(d));
  }

  for (int i = 1; i <= 4; ++i) {
    DeviceDescriptor d;
    d.device_id = numbered("CRYO:C", i, 2);
    d.device_class = DeviceClass::CryoSensor;
    d.scaling_law = ScalingLaw::None;
    d.camac_address = crates.next();
    d.channels.push_back(readback(d.device_id + ":temperature", "K", true, std::nullopt));
    auto state = readback(d.device_id + ":state", "", true, std::nullopt, ValueTag::EnumString);
    state.choices = {"normal", "warm"};
    d.channels.push_back(std::move(state));
    d.noise_sigma = 0.02;
    d.alarm_above = 4.9;
    cat.devices.push_back(std::move(d));
  }

  cat.reindex();
  validate_catalog(cat);
  return cat;
}

}  // namespace tunevault
