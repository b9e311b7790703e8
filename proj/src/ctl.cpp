#include "tunevault/ctl.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <optional>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

namespace tunevault {

namespace {

using Json = nlohmann::ordered_json;

struct Reply {
  int status = 0;
  std::string body;
};

std::string cell_text(const Json& v) {
  if (v.is_null()) return "-";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

void print_table(std::ostream& out, const std::vector<std::string>& headers,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) width[c] = headers[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c)
      width[c] = std::max(width[c], r[c].size());
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) s += "  ";
      s += cells[c];
      if (c + 1 < cells.size()) s.append(width[c] - cells[c].size(), ' ');
    }
    s.erase(s.find_last_not_of(' ') + 1);
    out << s << '\n';
  };
  line(headers);
  std::vector<std::string> rule;
  for (auto w : width) rule.emplace_back(w, '-');
  line(rule);
  for (const auto& r : rows) line(r);
}

// Table of homogeneous objects; headers come from the first object.
void print_objects(std::ostream& out, const Json& arr) {
  if (arr.empty()) {
    out << "(none)\n";
    return;
  }
  std::vector<std::string> headers;
  for (const auto& [k, _] : arr.front().items()) headers.push_back(k);
  std::vector<std::vector<std::string>> rows;
  for (const auto& o : arr) {
    std::vector<std::string> r;
    for (const auto& h : headers) r.push_back(o.contains(h) ? cell_text(o.at(h)) : "-");
    rows.push_back(std::move(r));
  }
  print_table(out, headers, rows);
}

void print_fields(std::ostream& out, const Json& obj, const std::string& prefix = "") {
  for (const auto& [k, v] : obj.items()) {
    if (v.is_object()) {
      print_fields(out, v, prefix + k + ".");
    } else if (!v.is_array()) {
      out << prefix << k << ": " << cell_text(v) << '\n';
    }
  }
}

class Client {
 public:
  explicit Client(std::string url) : url_(std::move(url)), http_(url_) {
    http_.set_connection_timeout(std::chrono::seconds(5));
    http_.set_read_timeout(std::chrono::seconds(60));
  }

  const std::string& url() const { return url_; }
  httplib::Client& http() { return http_; }

  std::optional<Reply> get(const std::string& path, const httplib::Params& params = {}) {
    return wrap(http_.Get(path, params, httplib::Headers{}));
  }
  std::optional<Reply> post(const std::string& path, const Json& body) {
    return wrap(http_.Post(path, body.dump(), "application/json"));
  }
  std::optional<Reply> put(const std::string& path, const Json& body) {
    return wrap(http_.Put(path, body.dump(), "application/json"));
  }

 private:
  static std::optional<Reply> wrap(const httplib::Result& r) {
    if (!r) return std::nullopt;
    return Reply{r->status, r->body};
  }

  std::string url_;
  httplib::Client http_;
};

// Thrown inside a command to end it with a given exit code.
struct Exit {
  int code;
};

class Ctl {
 public:
  Ctl(std::string url, bool porcelain, std::ostream& out, std::ostream& err)
      : client_(std::move(url)), porcelain_(porcelain), out_(out), err_(err) {}

  // Performs a request and handles transport and API errors. Returns the
  // parsed body of a successful reply; in porcelain mode the body is printed
  // when `final` is set.
  Json call(const std::optional<Reply>& reply, bool final = true) {
    if (!reply) {
      err_ << "CONNECT_FAILED: cannot reach " << client_.url() << '\n';
      throw Exit{kExitApiError};
    }
    if (reply->status >= 400) {
      if (porcelain_) {
        out_ << reply->body;
      } else {
        auto j = Json::parse(reply->body, nullptr, false);
        if (j.is_object() && j.contains("code")) {
          err_ << cell_text(j["code"]) << ": " << cell_text(j.value("message", Json(""))) << '\n';
        } else {
          err_ << "HTTP " << reply->status << '\n';
        }
      }
      throw Exit{kExitApiError};
    }
    if (porcelain_ && final) out_ << reply->body;
    return Json::parse(reply->body, nullptr, false);
  }

  Client& client() { return client_; }
  bool porcelain() const { return porcelain_; }
  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }

 private:
  Client client_;
  bool porcelain_;
  std::ostream& out_;
  std::ostream& err_;
};

std::optional<std::int64_t> to_int(const std::string& s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

// Literal typed for the column, or a string when it does not parse so the
// server reports the mismatch.
Json typed_literal(const std::string& type, const std::string& text) {
  if (type == "int" || type == "timestamp") {
    if (auto v = to_int(text)) return *v;
  } else if (type == "float") {
    if (auto v = to_int(text)) return *v;
    if (auto v = to_double(text)) return *v;
  } else if (type == "bool") {
    if (text == "true") return true;
    if (text == "false") return false;
  }
  return text;
}

Json typed_value(const std::string& tag, const std::string& text) {
  if (tag == "int64") {
    if (auto v = to_int(text)) return *v;
  } else if (tag == "float64") {
    if (auto v = to_int(text)) return *v;
    if (auto v = to_double(text)) return *v;
  }
  return text;
}

void render_restore(std::ostream& out, const Json& r) {
  const auto beam = [](const Json& b) {
    return cell_text(b["mass_amu"]) + " amu, q=" + cell_text(b["charge_state"]) + ", " +
           cell_text(b["energy_mev_u"]) + " MeV/u";
  };
  out << "tune " << cell_text(r["tune_id"]) << "  mode " << cell_text(r["mode"]) << '\n';
  out << "from " << beam(r["old_beam"]) << '\n';
  out << "to   " << beam(r["new_beam"]) << '\n';
  out << "factors: magnetic " << cell_text(r["factors"]["magnetic"]) << ", electrostatic "
      << cell_text(r["factors"]["electrostatic"]) << ", rf_amplitude "
      << cell_text(r["factors"]["rf_amplitude"]) << '\n';
  if (r["beta_warning"].get<bool>()) out << "warning: beta exceeds 0.2\n";
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : r["entries"]) {
    rows.push_back({cell_text(e["channel"]), cell_text(e["scaling_law"]),
                    cell_text(e["archived_value"]), cell_text(e["factor"]),
                    cell_text(e["proposed_value"]), e["clamped"].get<bool>() ? "yes" : "",
                    e["applied"].get<bool>() ? "yes" : "",
                    e.contains("error") ? cell_text(e["error"]) : ""});
  }
  print_table(out, {"channel", "law", "archived", "factor", "proposed", "clamped", "applied", "error"},
              rows);
}

}  // namespace

bool split_where(const std::string& arg, std::string& column, std::string& op,
                 std::string& literal) {
  std::vector<std::string> parts(1);
  for (std::size_t i = 0; i < arg.size(); ++i) {
    if (arg[i] == '\\' && i + 1 < arg.size() && arg[i + 1] == ',') {
      parts.back() += ',';
      ++i;
    } else if (arg[i] == ',' && parts.size() < 3) {
      parts.emplace_back();
    } else {
      parts.back() += arg[i];
    }
  }
  if (parts.size() != 3 || parts[0].empty() || parts[1].empty()) return false;
  column = parts[0];
  op = parts[1];
  literal = parts[2];
  return true;
}

int run_ctl(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Admin client for the tunevault control system", "tunevaultctl"};
  app.require_subcommand(1);

  const char* env_url = std::getenv(kUrlEnvVar);
  std::string url = env_url && *env_url ? env_url : kDefaultUrl;
  bool porcelain = false;
  app.add_option("--url", url, "Server base URL (env TUNEVAULT_URL)");
  app.add_flag("--porcelain", porcelain, "Print the raw API body");

  auto* snapshot = app.add_subcommand("snapshot", "Take a manual snapshot");

  auto* snapshots = app.add_subcommand("snapshots", "List snapshots, or show one");
  std::optional<std::int64_t> snapshot_id;
  snapshots->add_option("ID", snapshot_id);

  auto* archive = app.add_subcommand("archive-tune", "Archive the current tune");
  std::string label;
  archive->add_option("--label", label, "Tune label")->required();

  auto* tunes = app.add_subcommand("tunes", "List tunes, or show one");
  std::optional<std::int64_t> tune_id_opt;
  tunes->add_option("ID", tune_id_opt);

  auto* restore = app.add_subcommand("restore", "Restore a tune for a new beam");
  std::int64_t tune_id = 0;
  double mass = 0, energy = 0;
  std::int64_t charge = 0;
  bool dry_run = false;
  restore->add_option("--tune", tune_id)->required();
  restore->add_option("--mass", mass, "Mass in amu")->required();
  restore->add_option("--charge", charge, "Charge state")->required();
  restore->add_option("--energy", energy, "Energy in MeV/u")->required();
  restore->add_flag("--dry-run", dry_run, "Report the scaled values without loading them");

  auto* query = app.add_subcommand("query", "Query an archive table");
  std::string table;
  std::vector<std::string> wheres;
  std::string sort;
  std::optional<std::int64_t> limit, offset;
  query->add_option("--table", table)->required();
  query->add_option("--where", wheres, "Filter col,op,lit (\\, escapes a comma)");
  query->add_option("--sort", sort, "col or col:desc");
  query->add_option("--limit", limit);
  query->add_option("--offset", offset);

  auto* tables = app.add_subcommand("tables", "List tables, or describe one");
  std::string table_name;
  tables->add_option("NAME", table_name);

  auto* channels = app.add_subcommand("channels", "Show live channels");
  std::string pattern = "**";
  channels->add_option("--pattern", pattern, "Channel glob");

  auto* set = app.add_subcommand("set", "Write a setpoint");
  std::string channel, value_text;
  set->add_option("CHANNEL", channel)->required();
  set->add_option("VALUE", value_text)->required();

  auto* watch = app.add_subcommand("watch", "Stream channel updates (porcelain: raw event frames)");
  std::string watch_pattern = "**";
  std::int64_t watch_count = 0;
  watch->add_option("--pattern", watch_pattern, "Channel glob");
  watch->add_option("--count", watch_count, "Stop after N events (0 runs until killed)");

  auto* presets = app.add_subcommand("presets", "List stepper presets of a device");
  std::string device;
  presets->add_option("DEVICE", device)->required();

  auto* beam = app.add_subcommand("beam", "Show the current beam and its kinematics");

  auto* docs = app.add_subcommand("docs", "List manual pages, or show one");
  std::string page;
  docs->add_option("PAGE", page);

  auto* health = app.add_subcommand("health", "Server health");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  Ctl ctl(url, porcelain, out, err);
  auto& api = ctl.client();

  try {
    if (snapshot->parsed()) {
      auto j = ctl.call(api.post("/api/snapshots", Json::object()));
      if (!porcelain) print_fields(out, j);
    } else if (snapshots->parsed()) {
      if (snapshot_id) {
        auto j = ctl.call(api.get("/api/snapshots/" + std::to_string(*snapshot_id)));
        if (!porcelain) {
          print_fields(out, j["snapshot"]);
          print_objects(out, j["values"]);
        }
      } else {
        auto j = ctl.call(api.get("/api/snapshots"));
        if (!porcelain) print_objects(out, j["snapshots"]);
      }
    } else if (archive->parsed()) {
      auto j = ctl.call(api.post("/api/tunes", Json{{"label", label}}));
      if (!porcelain) print_fields(out, j);
    } else if (tunes->parsed()) {
      if (tune_id_opt) {
        auto j = ctl.call(api.get("/api/tunes/" + std::to_string(*tune_id_opt)));
        if (!porcelain) {
          print_fields(out, j["tune"]);
          print_objects(out, j["values"]);
        }
      } else {
        auto j = ctl.call(api.get("/api/tunes"));
        if (!porcelain) print_objects(out, j["tunes"]);
      }
    } else if (restore->parsed()) {
      Json body;
      body["beam"] = {{"mass_amu", mass}, {"charge_state", charge}, {"energy_mev_u", energy}};
      body["mode"] = dry_run ? "dry_run" : "commit";
      auto j = ctl.call(api.post("/api/tunes/" + std::to_string(tune_id) + "/restore", body));
      if (!porcelain) render_restore(out, j);
    } else if (query->parsed()) {
      auto schema = ctl.call(api.get("/api/tables/" + table), false);
      std::map<std::string, std::string> types;
      for (const auto& c : schema["columns"]) types[c["name"]] = c["type"];
      Json spec;
      spec["table"] = table;
      spec["filters"] = Json::array();
      for (const auto& w : wheres) {
        std::string col, op, lit;
        if (!split_where(w, col, op, lit)) {
          err << "--where expects col,op,lit, got '" << w << "'\n";
          return kExitUsage;
        }
        auto it = types.find(col);
        spec["filters"].push_back(
            {{"column", col},
             {"op", op},
             {"literal", typed_literal(it == types.end() ? "text" : it->second, lit)}});
      }
      if (!sort.empty()) {
        std::string col = sort, dir = "asc";
        if (auto pos = sort.rfind(':'); pos != std::string::npos) {
          col = sort.substr(0, pos);
          dir = sort.substr(pos + 1);
          if (dir != "asc" && dir != "desc") {
            err << "--sort expects col or col:desc\n";
            return kExitUsage;
          }
        }
        spec["sort"] = {{"column", col}, {"direction", dir}};
      }
      if (limit) spec["limit"] = *limit;
      if (offset) spec["offset"] = *offset;
      auto j = ctl.call(api.post("/api/query", spec));
      if (!porcelain) {
        std::vector<std::string> headers = j["columns"];
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : j["rows"]) {
          std::vector<std::string> cells;
          for (const auto& c : r) cells.push_back(cell_text(c));
          rows.push_back(std::move(cells));
        }
        print_table(out, headers, rows);
        out << j["rows"].size() << " of " << cell_text(j["total_matching"]) << " rows\n";
      }
    } else if (tables->parsed()) {
      if (!table_name.empty()) {
        auto j = ctl.call(api.get("/api/tables/" + table_name));
        if (!porcelain) print_objects(out, j["columns"]);
      } else {
        auto j = ctl.call(api.get("/api/tables"));
        if (!porcelain)
          for (const auto& t : j["tables"]) out << cell_text(t["table"]) << '\n';
      }
    } else if (channels->parsed()) {
      auto j = ctl.call(api.get("/api/channels", {{"pattern", pattern}}));
      if (!porcelain) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& c : j["channels"])
          rows.push_back({cell_text(c["name"]), cell_text(c["value"]), cell_text(c["units"]),
                          cell_text(c["role"]), cell_text(c["quality"]), cell_text(c["seq"])});
        print_table(out, {"name", "value", "units", "role", "quality", "seq"}, rows);
      }
    } else if (set->parsed()) {
      auto found = ctl.call(api.get("/api/channels", {{"pattern", channel}}), false);
      std::string tag = "enum";
      for (const auto& c : found["channels"])
        if (c["name"] == channel) tag = c["tag"];
      auto j = ctl.call(api.put("/api/channels/" + channel, Json{{"value", typed_value(tag, value_text)}}));
      if (!porcelain) {
        out << cell_text(j["name"]) << " seq=" << cell_text(j["seq"])
            << " global_version=" << cell_text(j["global_version"]) << '\n';
      }
    } else if (watch->parsed()) {
      std::int64_t seen = 0;
      std::string buffer;
      std::string status_body;
      int status = 0;
      auto res = api.http().Get(
          "/api/channels/stream?pattern=" + httplib::detail::encode_query_param(watch_pattern),
          httplib::Headers{},
          [&](const httplib::Response& r) {
            status = r.status;
            return true;
          },
          [&](const char* data, std::size_t len) {
            if (status >= 400) {
              status_body.append(data, len);
              return true;
            }
            buffer.append(data, len);
            std::size_t pos;
            while ((pos = buffer.find("\n\n")) != std::string::npos) {
              const std::string frame = buffer.substr(0, pos);
              buffer.erase(0, pos + 2);
              if (frame.rfind("event: error", 0) == 0) {
                err << frame << '\n';
                return false;
              }
              if (frame.rfind("data: ", 0) != 0) continue;
              if (porcelain) {
                out << frame << "\n\n";
              } else {
                auto c = Json::parse(frame.substr(6), nullptr, false);
                out << cell_text(c["name"]) << ' ' << cell_text(c["value"]) << ' '
                    << cell_text(c["quality"]) << " seq=" << cell_text(c["seq"]) << '\n';
              }
              out.flush();
              if (watch_count > 0 && ++seen >= watch_count) return false;
            }
            return true;
          });
      if (status >= 400) ctl.call(Reply{status, status_body});
      if (!res && status == 0) ctl.call(std::nullopt);
    } else if (presets->parsed()) {
      auto j = ctl.call(api.get("/api/presets/" + device));
      if (!porcelain) print_objects(out, j["presets"]);
    } else if (beam->parsed()) {
      auto j = ctl.call(api.get("/api/beam"));
      if (!porcelain) print_fields(out, j);
    } else if (docs->parsed()) {
      if (!page.empty()) {
        auto j = ctl.call(api.get("/api/docs/" + page));
        if (!porcelain) {
          out << cell_text(j["title"]) << "\n\n";
          if (j.contains("codes")) {
            print_objects(out, j["codes"]);
          } else {
            out << cell_text(j["body"]) << '\n';
          }
        }
      } else {
        auto j = ctl.call(api.get("/api/docs"));
        if (!porcelain) print_objects(out, j["pages"]);
      }
    } else if (health->parsed()) {
      auto j = ctl.call(api.get("/api/health"));
      if (!porcelain) print_fields(out, j);
    }
  } catch (const Exit& e) {
    return e.code;
  }
  return kExitOk;
}

}  // namespace tunevault
