#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "check_error.hpp"
#include "harness.hpp"
#include "tunevault/catalog.hpp"
#include "tunevault/channel_db.hpp"
#include "tunevault/glob.hpp"

using namespace tunevault;
using namespace std::chrono_literals;

TEST_CASE("channel name grammar") {
  CHECK(is_valid_channel_name("RES:R011:amplitude"));
  CHECK(is_valid_channel_name("A:b"));
  CHECK(is_valid_channel_name("BM:T1:current_enA"));
  CHECK(is_valid_channel_name("X1:a:b:c"));
  CHECK_FALSE(is_valid_channel_name("res bad name"));
  CHECK_FALSE(is_valid_channel_name("RES"));
  CHECK_FALSE(is_valid_channel_name("res:R1"));
  CHECK_FALSE(is_valid_channel_name("RES:"));
  CHECK_FALSE(is_valid_channel_name("RES::x"));
  CHECK_FALSE(is_valid_channel_name("A:b:c:d:e"));
  CHECK_FALSE(is_valid_channel_name("A:b-c"));
  CHECK_FALSE(is_valid_channel_name(""));
}

TEST_CASE("glob matching") {
  auto m = [](std::string_view pat, std::string_view name) {
    return GlobPattern::parse(pat).matches(name);
  };
  CHECK(m("RES:*:amplitude", "RES:R011:amplitude"));
  CHECK_FALSE(m("RES:*:amplitude", "RES:R011:amplitude_rb"));
  CHECK_FALSE(m("RES:*:amplitude", "RES:amplitude"));
  CHECK(m("RES:*:amp*", "RES:R011:amplitude_rb"));
  CHECK(m("**", "A:b"));
  CHECK(m("**", "A:b:c:d"));
  CHECK(m("RES:**", "RES:R1:x"));
  CHECK_FALSE(m("RES:**", "DIP:D01:field"));
  CHECK(m("**:field", "DIP:D01:field"));
  CHECK(m("DIP:**:field", "DIP:field"));
  CHECK(m("DIP:**:field", "DIP:D01:field"));
  CHECK(m("*:*:field", "DIP:D01:field"));
  CHECK(m("DIP:D01:field", "DIP:D01:field"));
  CHECK_FALSE(m("DIP:D01:field", "DIP:D01:fields"));
  CHECK(m("*:*R0*", "RES:R001"));
  CHECK_FALSE(m("*R0*:*", "RES:R001"));

  CHECK_ERROR_CODE(GlobPattern::parse(""), ErrorCode::BadPattern);
  CHECK_ERROR_CODE(GlobPattern::parse("RES:**x"), ErrorCode::BadPattern);
  CHECK_ERROR_CODE(GlobPattern::parse("RES::x"), ErrorCode::BadPattern);
  CHECK_ERROR_CODE(GlobPattern::parse("RES x"), ErrorCode::BadPattern);
}

TEST_CASE("create_channel") {
  ChannelDb db;
  const auto rec = db.create_channel("RES:R011:amplitude", ValueTag::Float64, "arb",
                                     Role::Setpoint, true);
  CHECK(rec.seq == 0);
  CHECK(std::get<double>(rec.value) == 0.0);
  CHECK(rec.quality == Quality::Ok);
  CHECK(db.create_channel("A:i", ValueTag::Int64, "", Role::Setpoint, false).value ==
        Value(std::int64_t{0}));
  CHECK(db.create_channel("A:e", ValueTag::EnumString, "", Role::Readback, false, {"on", "off"})
            .value == Value(std::string("on")));

  CHECK_ERROR_CODE(db.create_channel("RES:R011:amplitude", ValueTag::Float64, "arb",
                                     Role::Setpoint, true),
                   ErrorCode::DuplicateName);
  CHECK_ERROR_CODE(db.create_channel("res bad name", ValueTag::Float64, "", Role::Setpoint, true),
                   ErrorCode::MalformedName);
  CHECK_ERROR_CODE(db.create_channel("A:e2", ValueTag::EnumString, "", Role::Setpoint, false),
                   ErrorCode::TypeMismatch);
}

TEST_CASE("write stamps seq and global_version") {
  std::int64_t now = 1000;
  ChannelDb db([&] { return now; });
  db.create_channel("A:x", ValueTag::Float64, "", Role::Setpoint, true);
  db.create_channel("A:y", ValueTag::Int64, "", Role::Setpoint, true);
  db.create_channel("A:e", ValueTag::EnumString, "", Role::Setpoint, true, {"on", "off"});

  const auto w1 = db.write("A:x", 1.5);
  now = 2000;
  const auto w2 = db.write("A:x", 2.5);
  CHECK(w2.seq == w1.seq + 1);
  CHECK(w2.global_version > w1.global_version);
  const auto r = db.read("A:x");
  CHECK(std::get<double>(r.value) == 2.5);
  CHECK(r.updated_at == 2000);
  CHECK(r.seq == 2);

  CHECK_ERROR_CODE(db.write("A:nope", 1.0), ErrorCode::UnknownChannel);
  CHECK_ERROR_CODE(db.read("A:nope"), ErrorCode::UnknownChannel);
  CHECK_ERROR_CODE(db.write("A:x", std::int64_t{1}), ErrorCode::TypeMismatch);
  CHECK_ERROR_CODE(db.write("A:y", 1.0), ErrorCode::TypeMismatch);
  CHECK_ERROR_CODE(db.write("A:e", std::string("maybe")), ErrorCode::TypeMismatch);
  CHECK(db.write("A:e", std::string("off")).seq == 1);
  // Failed writes consume nothing.
  CHECK(db.read("A:x").seq == 2);
}

TEST_CASE("interleaved writes: global_version strictly increases in write-log order") {
  ChannelDb db;
  db.create_channel("A:x", ValueTag::Float64, "", Role::Setpoint, true);
  db.create_channel("B:y", ValueTag::Float64, "", Role::Setpoint, true);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> log_a, log_b;
  std::thread ta([&] {
    for (int i = 0; i < 5000; ++i) {
      auto w = db.write("A:x", double(i));
      log_a.emplace_back(w.global_version, w.seq);
    }
  });
  std::thread tb([&] {
    for (int i = 0; i < 5000; ++i) {
      auto w = db.write("B:y", double(i));
      log_b.emplace_back(w.global_version, w.seq);
    }
  });
  ta.join();
  tb.join();
  // Replay: merged by version, every version is distinct and per-channel seq
  // follows version order.
  std::vector<std::uint64_t> versions;
  for (std::size_t i = 0; i < log_a.size(); ++i) {
    versions.push_back(log_a[i].first);
    CHECK(log_a[i].second == i + 1);
    if (i) CHECK(log_a[i].first > log_a[i - 1].first);
  }
  for (std::size_t i = 0; i < log_b.size(); ++i) {
    versions.push_back(log_b[i].first);
    CHECK(log_b[i].second == i + 1);
    if (i) CHECK(log_b[i].first > log_b[i - 1].first);
  }
  std::sort(versions.begin(), versions.end());
  CHECK(std::adjacent_find(versions.begin(), versions.end()) == versions.end());
  CHECK(versions.back() == db.global_version());
}

TEST_CASE("read_pattern") {
  ChannelDb empty;
  CHECK(empty.read_pattern("**").empty());

  ChannelDb db;
  install_catalog(default_catalog(), db);
  const auto amps = db.read_pattern("RES:*:amplitude");
  CHECK(amps.size() == 64);
  const auto all = db.read_pattern("**");
  CHECK(all.size() == db.size());
  CHECK(std::is_sorted(all.begin(), all.end(),
                       [](const auto& a, const auto& b) { return a.name < b.name; }));
  CHECK(db.read_pattern("NOPE:**").empty());
  CHECK_ERROR_CODE(db.read_pattern("RES:**x"), ErrorCode::BadPattern);
}

TEST_CASE("write_batch is all-or-nothing") {
  ChannelDb db;
  db.create_channel("A:x", ValueTag::Float64, "", Role::Setpoint, true);
  db.create_channel("A:y", ValueTag::Float64, "", Role::Setpoint, true);
  const std::vector<ChannelWrite> bad = {{"A:x", 1.0, std::nullopt},
                                         {"A:y", std::int64_t{2}, std::nullopt}};
  CHECK_ERROR_CODE(db.write_batch(bad), ErrorCode::TypeMismatch);
  CHECK(db.read("A:x").seq == 0);
  CHECK(db.global_version() == 0);

  const std::vector<ChannelWrite> good = {{"A:x", 1.0, std::nullopt},
                                          {"A:y", 2.0, Quality::Alarm}};
  const auto res = db.write_batch(good);
  REQUIRE(res.size() == 2);
  CHECK(res[1].global_version == res[0].global_version + 1);
  CHECK(db.read("A:y").quality == Quality::Alarm);
}

TEST_CASE("subscription delivers deltas in seq order") {
  ChannelDb db;
  db.create_channel("A:x", ValueTag::Float64, "", Role::Setpoint, true);
  db.create_channel("B:x", ValueTag::Float64, "", Role::Setpoint, true);
  db.write("A:x", 0.5);
  auto sub = db.subscribe("A:*");
  for (double v : {1.0, 2.0, 3.0}) db.write("A:x", v);
  db.write("B:x", 9.0);
  std::vector<std::uint64_t> seqs;
  while (auto d = sub.next(10ms)) seqs.push_back(d->seq);
  CHECK(seqs == std::vector<std::uint64_t>{2, 3, 4});
  CHECK_FALSE(sub.next(1ms));
  CHECK(sub.pattern().text() == "A:*");
}

TEST_CASE("two subscribers see identical per-channel orders under concurrent writers") {
  ChannelDb db;
  const std::vector<std::string> names = {"W:a", "W:b", "W:c", "W:d"};
  for (const auto& n : names) db.create_channel(n, ValueTag::Int64, "", Role::Setpoint, false);
  auto s1 = db.subscribe("W:*", 100000);
  auto s2 = db.subscribe("**", 100000);

  std::vector<std::thread> writers;
  for (int w = 0; w < 3; ++w) {
    writers.emplace_back([&, w] {
      std::mt19937 rng(static_cast<unsigned>(w));
      for (int i = 0; i < 3000; ++i)
        db.write(names[rng() % names.size()], std::int64_t{w * 100000 + i});
    });
  }
  for (auto& t : writers) t.join();

  auto log_of = [](Subscription& s) {
    std::map<std::string, std::vector<std::pair<std::uint64_t, Value>>> log;
    for (auto& d : s.drain()) log[d.name].emplace_back(d.seq, d.value);
    return log;
  };
  const auto l1 = log_of(s1), l2 = log_of(s2);
  CHECK(l1 == l2);
  std::size_t total = 0;
  for (const auto& [name, entries] : l1) {
    total += entries.size();
    for (std::size_t i = 0; i < entries.size(); ++i) CHECK(entries[i].first == i + 1);
  }
  CHECK(total == 9000);
}

TEST_CASE("slow consumer is cut off with SubscriberOverflow") {
  ChannelDb db;
  db.create_channel("A:x", ValueTag::Float64, "", Role::Setpoint, true);
  auto sub = db.subscribe("**", 8);
  for (int i = 0; i < 8; ++i) db.write("A:x", double(i));
  CHECK_FALSE(sub.overflowed());
  db.write("A:x", 99.0);
  CHECK(sub.overflowed());
  CHECK_ERROR_CODE(sub.next(1ms), ErrorCode::SubscriberOverflow);
  // Writers are never blocked by the dead subscription.
  CHECK(db.write("A:x", 1.0).seq == 10);
}

TEST_CASE("snapshot filters and version stamps") {
  ChannelDb db;
  const auto catalog = default_catalog();
  install_catalog(catalog, db);

  const auto all = db.snapshot(SnapshotFilter::All);
  const auto listed = db.read_pattern("**");
  REQUIRE(all.entries.size() == listed.size());
  for (const auto& r : listed) {
    const auto& e = all.entries.at(r.name);
    CHECK(e.value == r.value);
    CHECK(e.seq == r.seq);
    CHECK(e.global_version <= all.version);
  }

  // critical_only matches the catalog's critical flags exactly.
  std::set<std::string> critical;
  for (const auto& d : catalog.devices)
    for (const auto& c : d.channels)
      if (c.critical) critical.insert(c.name);
  const auto crit = db.snapshot(SnapshotFilter::CriticalOnly);
  std::set<std::string> got;
  for (const auto& [name, _] : crit.entries) got.insert(name);
  CHECK(got == critical);
  CHECK(crit.entries.count("RES:R001:amplitude_rb") == 0);
  CHECK(crit.entries.count("RES:R001:amplitude") == 1);
}

TEST_CASE("mark_stale flags only old readbacks and publishes the change") {
  std::int64_t now = 0;
  ChannelDb db([&] { return now; });
  db.create_channel("A:rb", ValueTag::Float64, "", Role::Readback, false);
  db.create_channel("B:rb", ValueTag::Float64, "", Role::Readback, false);
  auto sub = db.subscribe("**");
  now = 100;
  db.write("B:rb", 1.0);
  now = 1100;
  const std::vector<std::string> names = {"A:rb", "B:rb"};
  CHECK(db.mark_stale(names, 1000) == 1);
  CHECK(db.read("A:rb").quality == Quality::Stale);
  CHECK(db.read("B:rb").quality == Quality::Ok);
  CHECK(db.mark_stale(names, 1000) == 0);
  const auto deltas = sub.drain();
  REQUIRE(deltas.size() == 2);
  CHECK(deltas[1].name == "A:rb");
  CHECK(deltas[1].quality == Quality::Stale);
  // A fresh write clears it.
  db.write("A:rb", 2.0);
  CHECK(db.read("A:rb").quality == Quality::Ok);
}

TEST_CASE("torn-cut oracle, small run") {
  const auto batch = harness::run_torn_cut(20000, 2, true);
  CHECK(batch.violations == 0);
  CHECK(batch.snapshots > 0);
  const auto seq = harness::run_torn_cut(20000, 2, false);
  CHECK_MESSAGE(seq.violations == 0, seq.first_violation);
}
