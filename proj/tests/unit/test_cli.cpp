#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "harness.hpp"
#include "parity.hpp"
#include "tunevault/api_server.hpp"
#include "tunevault/control_system.hpp"
#include "tunevault/ctl.hpp"

using namespace tunevault;
using harness::TempDir;

namespace {

struct Served {
  ControlSystem system;
  ApiServer server;
  std::string url;

  static Config config_for(const std::filesystem::path& dir) {
    Config c;
    c.data_dir = dir;
    c.port = 0;
    return c;
  }

  explicit Served(const std::filesystem::path& dir)
      : system(config_for(dir)),
        server(system),
        url("http://127.0.0.1:" + std::to_string(server.bind("127.0.0.1", 0))) {
    server.start();
  }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run ctl(const std::string& url, std::vector<std::string> args) {
  args.insert(args.begin(), {"--url", url});
  std::ostringstream out, err;
  const int code = run_ctl(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path golden_dir() {
  return std::filesystem::path(TUNEVAULT_SOURCE_DIR) / "tests" / "golden";
}

// Compares with tests/golden/<name>; TUNEVAULT_UPDATE_GOLDEN=1 rewrites it.
void check_golden(const std::string& name, const std::string& actual) {
  const auto path = golden_dir() / name;
  const char* update = std::getenv("TUNEVAULT_UPDATE_GOLDEN");
  if (update && std::string(update) == "1") {
    std::filesystem::create_directories(golden_dir());
    std::ofstream(path, std::ios::binary) << actual;
  }
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in, "missing golden file " << path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  INFO("golden " << name);
  CHECK(actual == ss.str());
}

// First output line that starts with `prefix`, or empty.
std::string line_of(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (line.rfind(prefix, 0) == 0) return line;
  return {};
}

}  // namespace

TEST_CASE("porcelain and human output match golden files") {
  TempDir dir;
  Served s(dir.path());

  struct Case {
    std::string file;
    std::vector<std::string> args;
  };
  const std::vector<Case> cases = {
      {"tables.porcelain", {"--porcelain", "tables"}},
      {"tables_resonators.porcelain", {"--porcelain", "tables", "resonators"}},
      {"presets_slit_l1.porcelain", {"--porcelain", "presets", "SLIT:L1"}},
      {"docs_error_codes.porcelain", {"--porcelain", "docs", "error-codes"}},
      {"tables.txt", {"tables"}},
      {"tables_resonators.txt", {"tables", "resonators"}},
      {"presets_slit_l1.txt", {"presets", "SLIT:L1"}},
  };
  for (const auto& c : cases) {
    const auto r = ctl(s.url, c.args);
    INFO("case " << c.file);
    CHECK(r.code == kExitOk);
    CHECK(r.err.empty());
    check_golden(c.file, r.out);
  }
}

TEST_CASE("exit codes") {
  TempDir dir;
  Served s(dir.path());

  SUBCASE("usage errors exit 2") {
    CHECK(ctl(s.url, {}).code == kExitUsage);
    CHECK(ctl(s.url, {"frobnicate"}).code == kExitUsage);
    CHECK(ctl(s.url, {"set", "QUAD:Q01:gradient"}).code == kExitUsage);
    CHECK(ctl(s.url, {"restore", "--tune", "1", "--mass", "40"}).code == kExitUsage);
    CHECK(ctl(s.url, {"archive-tune"}).code == kExitUsage);
    CHECK(ctl(s.url, {"tunes", "abc"}).code == kExitUsage);
    const auto where = ctl(s.url, {"query", "--table", "resonators", "--where", "crate,eq"});
    CHECK(where.code == kExitUsage);
    CHECK(where.err.find("--where") != std::string::npos);
    CHECK(ctl(s.url, {"query", "--table", "resonators", "--sort", "crate:up"}).code ==
          kExitUsage);
  }

  SUBCASE("help exits 0") {
    const auto r = ctl(s.url, {"--help"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("restore") != std::string::npos);
  }

  SUBCASE("API errors exit 1 with the code") {
    auto r = ctl(s.url, {"presets", "SLIT:L9"});
    CHECK(r.code == kExitApiError);
    CHECK(r.out.empty());
    CHECK(r.err.rfind("UNKNOWN_DEVICE: ", 0) == 0);

    r = ctl(s.url, {"set", "QUAD:Q01:gradient", "25"});
    CHECK(r.code == kExitApiError);
    CHECK(r.err.rfind("LIMIT_VIOLATION: ", 0) == 0);

    r = ctl(s.url, {"--porcelain", "query", "--table", "users"});
    CHECK(r.code == kExitApiError);
    CHECK(r.out == R"({"code":"UNKNOWN_TABLE","message":"unknown table 'users'"})");

    r = ctl(s.url, {"restore", "--tune", "99", "--mass", "40", "--charge", "9", "--energy", "6",
                    "--dry-run"});
    CHECK(r.code == kExitApiError);
    CHECK(r.err.rfind("UNKNOWN_TUNE: ", 0) == 0);
  }

  SUBCASE("nothing listening exits 1 with CONNECT_FAILED") {
    const auto r = ctl("http://127.0.0.1:1", {"health"});
    CHECK(r.code == kExitApiError);
    CHECK(r.out.empty());
    CHECK(r.err.rfind("CONNECT_FAILED: ", 0) == 0);
  }
}

TEST_CASE("human output of common commands") {
  TempDir dir;
  Served s(dir.path());

  auto r = ctl(s.url, {"set", "QUAD:Q01:gradient", "7"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.rfind("QUAD:Q01:gradient seq=2 global_version=", 0) == 0);
  CHECK(std::get<double>(s.system.channels().read("QUAD:Q01:gradient").value) == 7.0);

  r = ctl(s.url, {"set", "SLIT:L1:position", "12000"});
  CHECK(r.code == kExitOk);
  CHECK(std::get<std::int64_t>(s.system.channels().read("SLIT:L1:position").value) == 12000);

  r = ctl(s.url, {"channels", "--pattern", "QUAD:Q01:*"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("name", 0) == 0);
  CHECK(line_of(r.out, "QUAD:Q01:gradient ").find(" 7.0 ") != std::string::npos);

  r = ctl(s.url, {"query", "--table", "resonators", "--where", "crate,eq,2", "--sort", "slot:desc",
                  "--limit", "3"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("RES:R033") != std::string::npos);
  CHECK(r.out.find("3 of 20 rows\n") != std::string::npos);

  r = ctl(s.url, {"archive-tune", "--label", "evening"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("label: evening\n") != std::string::npos);

  r = ctl(s.url, {"restore", "--tune", "1", "--mass", "39.9624", "--charge", "10", "--energy", "6",
                  "--dry-run"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("tune 1  mode dry_run\n", 0) == 0);
  CHECK(line_of(r.out, "QUAD:Q01:gradient ").find(" magnetic ") != std::string::npos);
  CHECK(std::get<double>(s.system.channels().read("QUAD:Q01:gradient").value) == 7.0);

  r = ctl(s.url, {"beam"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("kinematics.beta: ") != std::string::npos);
}

TEST_CASE("where splitting") {
  std::string col, op, lit;
  REQUIRE(split_where("preset_name,eq,a\\,b", col, op, lit));
  CHECK(col == "preset_name");
  CHECK(op == "eq");
  CHECK(lit == "a,b");

  REQUIRE(split_where("device_id,contains,", col, op, lit));
  CHECK(lit.empty());

  // Commas after the second separator belong to the literal.
  REQUIRE(split_where("preset_name,eq,x,y", col, op, lit));
  CHECK(lit == "x,y");

  REQUIRE(split_where("a\\,b,eq,1", col, op, lit));
  CHECK(col == "a,b");

  CHECK_FALSE(split_where("crate,eq", col, op, lit));
  CHECK_FALSE(split_where(",eq,1", col, op, lit));
  CHECK_FALSE(split_where("crate,,1", col, op, lit));
  CHECK_FALSE(split_where("", col, op, lit));
}

TEST_CASE("every route is reachable from the CLI with byte-equal bodies") {
  TempDir dir;
  const auto report = harness::run_cli_api_parity(dir.path());
  for (const auto& c : report.cases)
    if (!c.detail.empty()) MESSAGE(c.command << ": " << c.detail);
  CHECK(report.failures == 0);
  for (const auto& r : report.routes_missed) MESSAGE("missed " << r);
  CHECK(report.routes_missed.empty());
  CHECK(report.cases.size() >= 18);
}
