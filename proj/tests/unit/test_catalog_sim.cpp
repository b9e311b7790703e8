#include <doctest.h>

#include <cmath>
#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "check_error.hpp"
#include "tunevault/catalog.hpp"
#include "tunevault/channel_db.hpp"
#include "tunevault/device_sim.hpp"
#include "tunevault/error.hpp"

using namespace tunevault;

namespace {

const char* kBeam = R"({"type":"beam","mass_amu":39.9624,"charge_state":9,"energy_mev_u":6.0})";

std::string quad(const std::string& id, int crate, int slot, double min = 0.0, double max = 20.0,
                 double slew = 2.0, double noise = 0.0) {
  const std::string sp = id + ":gradient";
  return R"({"type":"device","device_id":")" + id +
         R"(","class":"quadrupole_magnet","scaling_law":"magnetic","camac_address":{"crate":)" +
         std::to_string(crate) + R"(,"slot":)" + std::to_string(slot) +
         R"(},"channels":[{"name":")" + sp +
         R"(","role":"setpoint","tag":"float64","units":"T/m","critical":true},{"name":")" + sp +
         R"(_rb","role":"readback","tag":"float64","units":"T/m","critical":false,"tracks":")" +
         sp + R"("}],"limits":{")" + sp + R"(":{"min":)" + std::to_string(min) +
         R"(,"max":)" + std::to_string(max) + R"(}},"slew_per_s":)" + std::to_string(slew) +
         R"(,"noise_sigma":)" + std::to_string(noise) + "}";
}

std::string golden(const std::map<std::string, double>& values) {
  std::string out = R"({"type":"golden_tune","setpoints":{)";
  bool first = true;
  for (const auto& [k, v] : values) {
    if (!first) out += ",";
    first = false;
    out += "\"" + k + "\":" + std::to_string(v);
  }
  return out + "}}";
}

// Two quadrupoles, one beam monitor on line 1 and one cryo sensor.
std::string small_catalog(double cryo_threshold = 9.0) {
  std::string text = "# test catalog\n";
  text += std::string(kBeam) + "\n";
  text += quad("QUAD:Q01", 1, 1) + "\n";
  text += quad("QUAD:Q02", 1, 2) + "\n";
  text += R"({"type":"device","device_id":"BM:T1","class":"beam_monitor","scaling_law":"none",)"
          R"("camac_address":{"crate":1,"slot":3},"channels":[)"
          R"({"name":"BM:T1:current","role":"readback","tag":"float64","units":"enA","critical":false},)"
          R"({"name":"BM:T1:transmission","role":"readback","tag":"float64","units":"","critical":false}],)"
          R"("slew_per_s":0,"noise_sigma":0,"target_line":1})"
          "\n";
  text += R"({"type":"device","device_id":"CRYO:C01","class":"cryo_sensor","scaling_law":"none",)"
          R"("camac_address":{"crate":1,"slot":4},"channels":[)"
          R"({"name":"CRYO:C01:temperature","role":"readback","tag":"float64","units":"K","critical":true},)"
          R"({"name":"CRYO:C01:state","role":"readback","tag":"enum","units":"","critical":true,)"
          R"("choices":["normal","warm"]}],"slew_per_s":0,"noise_sigma":0,"alarm_above":)" +
          std::to_string(cryo_threshold) + "}\n";
  text += golden({{"QUAD:Q01:gradient", 5.0}, {"QUAD:Q02:gradient", 8.0}}) + "\n";
  return text;
}

double value_of(const ChannelDb& db, const std::string& name) {
  return *as_number(db.read(name).value);
}

}  // namespace

TEST_CASE("default catalog shape") {
  const auto cat = default_catalog();
  const auto s = cat.summary();
  CHECK(s.resonators == 64);
  CHECK(s.injector_sources == 3);
  CHECK(s.beam_monitors == 3);
  CHECK(s.target_lines == 3);
  CHECK(s.devices == 105);
  CHECK(s.presets == 8);
  CHECK(cat.reference_beam.mass_amu == doctest::Approx(39.9624));
  CHECK(cat.reference_beam.charge_state == 9);

  for (const auto& d : cat.devices) {
    CHECK(d.camac_address.slot >= 1);
    CHECK(d.camac_address.slot <= 20);
    for (const auto& c : d.channels) {
      if (c.role == Role::Setpoint) CHECK(c.critical);
      if (c.role == Role::Readback && c.tracks) CHECK_FALSE(c.critical);
    }
  }
  CHECK(cat.law_of("RES:R001:phase") == ScalingLaw::None);
  CHECK(cat.law_of("RES:R001:amplitude") == ScalingLaw::RfAmplitude);
  CHECK(cat.law_of("DIP:D01:field") == ScalingLaw::Magnetic);
  CHECK(cat.law_of("INJ:S1:extraction_voltage") == ScalingLaw::Electrostatic);
  CHECK(cat.law_of("SLIT:L1:position") == ScalingLaw::None);
  CHECK(cat.law_of("DIP:D01:field_rb") == ScalingLaw::None);
  CHECK(cat.limits_of("RES:R001:amplitude")->max == 6.0);
  CHECK_FALSE(cat.limits_of("RES:R001:amplitude_rb"));
  CHECK(cat.owner_of("CRYO:C02:state")->device_id == "CRYO:C02");
}

TEST_CASE("catalog serializes and parses back") {
  const auto cat = default_catalog();
  const auto text = serialize_catalog(cat);
  const auto back = parse_catalog(text);
  CHECK(serialize_catalog(back) == text);
  CHECK(back.devices.size() == cat.devices.size());
  CHECK(back.golden.setpoints == cat.golden.setpoints);
  CHECK(back.presets.size() == cat.presets.size());
  for (std::size_t i = 0; i < cat.devices.size(); ++i) {
    CHECK(back.devices[i].device_id == cat.devices[i].device_id);
    CHECK(back.devices[i].camac_address == cat.devices[i].camac_address);
    CHECK(back.devices[i].channels.size() == cat.devices[i].channels.size());
  }
}

TEST_CASE("shipped catalog file matches the built-in facility") {
  const auto path = std::filesystem::path(TUNEVAULT_SOURCE_DIR) / "data" / "catalog.src";
  const auto cat = read_catalog_file(path);
  CHECK(serialize_catalog(cat) == serialize_catalog(default_catalog()));
}

TEST_CASE("catalog validation") {
  CHECK_NOTHROW(parse_catalog(small_catalog()));

  SUBCASE("duplicate CAMAC address") {
    std::string text = std::string(kBeam) + "\n" + quad("QUAD:Q01", 4, 7) + "\n" +
                       quad("QUAD:Q02", 4, 7) + "\n" +
                       golden({{"QUAD:Q01:gradient", 5}, {"QUAD:Q02:gradient", 5}});
    CHECK_ERROR_CODE(parse_catalog(text), ErrorCode::DuplicateAddress);
  }
  SUBCASE("empty document") {
    CHECK_ERROR_CODE(parse_catalog(""), ErrorCode::ParseError);
    CHECK_ERROR_CODE(parse_catalog("# only a comment\n\n"), ErrorCode::ParseError);
  }
  SUBCASE("no beam record") {
    std::string text = quad("QUAD:Q01", 1, 1) + "\n" + golden({{"QUAD:Q01:gradient", 5}});
    CHECK_ERROR_CODE(parse_catalog(text), ErrorCode::ParseError);
  }
  SUBCASE("malformed line") {
    CHECK_ERROR_CODE(parse_catalog(small_catalog() + "{not json\n"), ErrorCode::ParseError);
    CHECK_ERROR_CODE(parse_catalog(small_catalog() + R"({"type":"mystery"})" + "\n"),
                     ErrorCode::ParseError);
  }
  SUBCASE("inverted limits") {
    std::string text = std::string(kBeam) + "\n" + quad("QUAD:Q01", 1, 1, 10.0, 2.0) + "\n" +
                       golden({{"QUAD:Q01:gradient", 5}});
    CHECK_ERROR_CODE(parse_catalog(text), ErrorCode::LimitOrderError);
    std::string equal = std::string(kBeam) + "\n" + quad("QUAD:Q01", 1, 1, 3.0, 3.0) + "\n" +
                        golden({{"QUAD:Q01:gradient", 3}});
    CHECK_ERROR_CODE(parse_catalog(equal), ErrorCode::LimitOrderError);
  }
  SUBCASE("law does not fit the class") {
    auto q = quad("QUAD:Q01", 1, 1);
    q.replace(q.find("\"magnetic\""), 10, "\"rf_amplitude\"");
    std::string text = std::string(kBeam) + "\n" + q + "\n" + golden({{"QUAD:Q01:gradient", 5}});
    CHECK_ERROR_CODE(parse_catalog(text), ErrorCode::CatalogInvariant);
  }
  SUBCASE("golden tune must cover scaling-relevant setpoints") {
    std::string text = std::string(kBeam) + "\n" + quad("QUAD:Q01", 1, 1) + "\n";
    CHECK_ERROR_CODE(parse_catalog(text), ErrorCode::CatalogInvariant);
  }
  SUBCASE("CAMAC slot out of range") {
    std::string text = std::string(kBeam) + "\n" + quad("QUAD:Q01", 1, 24) + "\n" +
                       golden({{"QUAD:Q01:gradient", 5}});
    CHECK_ERROR_CODE(parse_catalog(text), ErrorCode::CatalogInvariant);
  }
  SUBCASE("preset on a non-stepper") {
    CHECK_ERROR_CODE(
        parse_catalog(small_catalog() +
                      R"({"type":"preset","device_id":"QUAD:Q01","preset_name":"in","position_steps":1})"
                      "\n"),
        ErrorCode::CatalogInvariant);
  }
}

TEST_CASE("install_catalog seeds golden values") {
  ChannelDb db;
  const auto cat = default_catalog();
  install_catalog(cat, db);
  CHECK(value_of(db, "RES:R011:amplitude") == cat.golden.setpoints.at("RES:R011:amplitude"));
  CHECK(value_of(db, "RES:R011:amplitude_rb") == cat.golden.setpoints.at("RES:R011:amplitude"));
  CHECK(std::get<std::int64_t>(db.read("SLIT:L1:position").value) == 12000);
  CHECK(std::get<std::string>(db.read("CRYO:C01:state").value) == "normal");
  CHECK(db.read_pattern("RES:*:amplitude").size() == 64);
}

TEST_CASE("readbacks follow setpoints at the slew rate") {
  const auto cat = parse_catalog(small_catalog());
  ChannelDb db;
  install_catalog(cat, db);
  DeviceSim sim(db, cat);
  db.write("QUAD:Q01:gradient", 15.0);
  sim.tick(1.0);
  CHECK(value_of(db, "QUAD:Q01:gradient_rb") == 7.0);
  sim.tick(1.0);
  CHECK(value_of(db, "QUAD:Q01:gradient_rb") == 9.0);
  sim.tick(0.25);
  CHECK(value_of(db, "QUAD:Q01:gradient_rb") == 9.5);
  for (int i = 0; i < 10; ++i) sim.tick(1.0);
  CHECK(value_of(db, "QUAD:Q01:gradient_rb") == 15.0);
  CHECK(sim.actuator_state("QUAD:Q01:gradient") == 15.0);

  // Out-of-range setpoints are approached only up to the device limit.
  db.write("QUAD:Q01:gradient", 50.0);
  for (int i = 0; i < 10; ++i) sim.tick(1.0);
  CHECK(value_of(db, "QUAD:Q01:gradient_rb") == 20.0);

  CHECK_ERROR_CODE(sim.tick(0.0), ErrorCode::BadRequest);
  CHECK_ERROR_CODE(sim.tick(-1.0), ErrorCode::BadRequest);
  CHECK_ERROR_CODE(sim.actuator_state("QUAD:Q01:gradient_rb"), ErrorCode::UnknownChannel);
}

TEST_CASE("transmission model") {
  const auto cat = default_catalog();
  ChannelDb db;
  install_catalog(cat, db);
  DeviceSim sim(db, cat, {.seed = 3});
  CHECK(sim.transmission() == 1.0);
  CHECK(sim.transmission_of({}) == 1.0);

  // One resonator off by its full span: exp(-(6 / 0.3)^2), far below 0.5.
  const double g = cat.golden.setpoints.at("RES:R011:amplitude");
  const double off = sim.transmission_of({{"RES:R011:amplitude", g + 6.0}});
  CHECK(off < 0.5);
  CHECK(off == doctest::Approx(std::exp(-std::pow(6.0 / (0.05 * 6.0), 2))));

  // Small mistune against the closed form.
  const double small = sim.transmission_of({{"RES:R011:amplitude", g + 0.1},
                                            {"DIP:D01:field", 0.63 + 0.02}});
  const double expected = std::exp(-(std::pow(0.1 / 0.3, 2) + std::pow(0.02 / 0.09, 2)));
  CHECK(small == doctest::Approx(expected).epsilon(1e-12));

  // Phases carry no scaling law and do not enter the model.
  CHECK(sim.transmission_of({{"RES:R011:phase", 100.0}}) == 1.0);

  double last = 1.0;
  for (double delta : {0.01, 0.05, 0.1, 0.2, 0.4}) {
    const double t = sim.transmission_of({{"QUAD:Q03:gradient", 4.0 + 0.5 * 3 + delta}});
    CHECK(t < last);
    last = t;
  }

  // The beam monitor on the active line reports the source current times T.
  sim.tick(1.0);
  CHECK(value_of(db, "BM:T1:transmission") == doctest::Approx(sim.transmission()));
  CHECK(value_of(db, "BM:T2:current") == 0.0);
}

TEST_CASE("golden targets follow the beam") {
  const auto cat = parse_catalog(small_catalog());
  ChannelDb db;
  install_catalog(cat, db);
  DeviceSim sim(db, cat);
  CHECK(sim.transmission() == 1.0);
  BeamParameters other{39.9624, 9, 8.0};
  sim.set_beam(other);
  CHECK(sim.beam().energy_mev_u == 8.0);
  CHECK(sim.transmission() < 1.0);
  const auto f = scale_factors(cat.reference_beam, other);
  CHECK(sim.transmission_of({{"QUAD:Q01:gradient", 5.0 * f.magnetic},
                             {"QUAD:Q02:gradient", 8.0 * f.magnetic}}) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK_ERROR_CODE(sim.set_beam({39.9624, 0, 6.0}), ErrorCode::InvalidBeam);
}

TEST_CASE("stepper presets") {
  const auto cat = default_catalog();
  ChannelDb db;
  install_catalog(cat, db);
  DeviceSim sim(db, cat);
  CHECK(sim.lookup_preset("SLIT:L1", "narrow") == 15500);
  CHECK(sim.lookup_preset("FOIL:F1", "gold") == 14800);
  CHECK_ERROR_CODE(sim.lookup_preset("SLIT:L1", "sideways"), ErrorCode::UnknownPreset);
  CHECK_ERROR_CODE(sim.lookup_preset("SLIT:L9", "in"), ErrorCode::UnknownDevice);
  CHECK_ERROR_CODE(sim.apply_preset("SLIT:L9", "in"), ErrorCode::UnknownDevice);

  sim.apply_preset("SLIT:L1", "narrow");
  CHECK(std::get<std::int64_t>(db.read("SLIT:L1:position").value) == 15500);
  // 3500 steps at 2000 steps/s: not there after one second, there after two.
  sim.tick(1.0);
  CHECK(std::get<std::int64_t>(db.read("SLIT:L1:position_rb").value) == 14000);
  sim.tick(1.0);
  CHECK(std::get<std::int64_t>(db.read("SLIT:L1:position_rb").value) == 15500);
}

TEST_CASE("simulation is deterministic for a seed and stays inside limits") {
  const auto cat = default_catalog();
  auto run = [&](std::uint64_t seed) {
    ChannelDb db;
    install_catalog(cat, db);
    DeviceSim sim(db, cat, {.seed = seed});
    db.write("RES:R001:amplitude", 6.0);
    db.write("DIP:D01:field", 0.0);
    for (int i = 0; i < 50; ++i) sim.tick(0.5);
    std::map<std::string, Value> out;
    for (const auto& r : db.read_pattern("**")) out[r.name] = r.value;
    return out;
  };
  const auto a = run(11);
  CHECK(a == run(11));
  CHECK(a != run(12));

  ChannelDb db;
  install_catalog(cat, db);
  DeviceSim sim(db, cat, {.seed = 5});
  db.write("RES:R002:amplitude", 6.0);
  db.write("DIP:D02:field", 0.0);
  for (int i = 0; i < 100; ++i) sim.tick(1.0);
  for (const auto& d : cat.devices) {
    for (const auto& c : d.channels) {
      if (!c.tracks) continue;
      const auto lim = d.limits.at(*c.tracks);
      const double v = value_of(db, c.name);
      CHECK(v >= lim.min);
      CHECK(v <= lim.max);
    }
  }
}

TEST_CASE("cryo alarms") {
  const auto cat = parse_catalog(small_catalog(4.0));
  ChannelDb db;
  install_catalog(cat, db);
  DeviceSim sim(db, cat);
  std::vector<CryoAlarm> alarms;
  sim.set_alarm_sink([&](const CryoAlarm& a) { alarms.push_back(a); });
  sim.tick(1.0);
  REQUIRE(alarms.size() == 1);
  CHECK(alarms[0].sensor == "CRYO:C01");
  CHECK(alarms[0].threshold_k == 4.0);
  CHECK(alarms[0].temperature_k > 4.0);
  CHECK(alarms[0].raised_at == db.read("CRYO:C01:temperature").updated_at);
  CHECK(db.read("CRYO:C01:temperature").quality == Quality::Alarm);
  CHECK(std::get<std::string>(db.read("CRYO:C01:state").value) == "warm");
  // An alarm already raised is not raised again while it persists.
  sim.tick(1.0);
  CHECK(alarms.size() == 1);

  const auto quiet = parse_catalog(small_catalog(9.0));
  ChannelDb db2;
  install_catalog(quiet, db2);
  DeviceSim sim2(db2, quiet);
  int count = 0;
  sim2.set_alarm_sink([&](const CryoAlarm&) { ++count; });
  for (int i = 0; i < 20; ++i) sim2.tick(1.0);
  CHECK(count == 0);
  CHECK(db2.read("CRYO:C01:temperature").quality == Quality::Ok);
}

TEST_CASE("offline devices go stale") {
  const auto cat = parse_catalog(small_catalog());
  ChannelDb db;
  install_catalog(cat, db);
  DeviceSim sim(db, cat);
  sim.tick(0.01);
  CHECK(db.read("QUAD:Q01:gradient_rb").quality == Quality::Ok);
  sim.set_offline("QUAD:Q01", true);
  CHECK_ERROR_CODE(sim.set_offline("QUAD:Q99", true), ErrorCode::UnknownDevice);
  const auto seq = db.read("QUAD:Q01:gradient_rb").seq;
  // The stale threshold is five tick periods; wait past it in wall time.
  std::this_thread::sleep_for(std::chrono::milliseconds(80));
  sim.tick(0.01);
  CHECK(db.read("QUAD:Q01:gradient_rb").quality == Quality::Stale);
  CHECK(db.read("QUAD:Q01:gradient_rb").seq == seq + 1);
  CHECK(db.read("QUAD:Q02:gradient_rb").quality == Quality::Ok);
  sim.set_offline("QUAD:Q01", false);
  sim.tick(0.01);
  CHECK(db.read("QUAD:Q01:gradient_rb").quality == Quality::Ok);
}
