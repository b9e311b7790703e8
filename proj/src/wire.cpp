#include "tunevault/wire.hpp"

#include <cmath>

namespace tunevault::wire {

Json to_json(const Value& v) {
  return std::visit([](const auto& x) { return Json(x); }, v);
}

Value value_from_json(const Json& j, ValueTag tag) {
  switch (tag) {
    case ValueTag::Float64:
      if (j.is_number()) {
        const double d = j.get<double>();
        if (std::isfinite(d)) return d;
      }
      break;
    case ValueTag::Int64:
      if (j.is_number_integer()) return j.get<std::int64_t>();
      break;
    case ValueTag::EnumString:
      if (j.is_string()) return j.get<std::string>();
      break;
  }
  throw Error(ErrorCode::TypeMismatch,
              "value " + j.dump() + " is not a " + std::string(to_string(tag)));
}

Json to_json(const ChannelRecord& r) {
  Json j;
  j["name"] = r.name;
  j["value"] = to_json(r.value);
  j["tag"] = to_string(r.tag());
  j["units"] = r.units;
  j["role"] = to_string(r.role);
  j["critical"] = r.critical;
  j["quality"] = to_string(r.quality);
  j["seq"] = r.seq;
  j["updated_at"] = r.updated_at;
  j["global_version"] = r.global_version;
  return j;
}

Json to_json(const TableSchema& s) {
  Json j;
  j["table"] = s.table;
  j["columns"] = Json::array();
  for (const auto& c : s.columns) {
    Json col;
    col["name"] = c.name;
    col["type"] = to_string(c.type);
    col["nullable"] = c.nullable;
    j["columns"].push_back(std::move(col));
  }
  return j;
}

Json to_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> Json {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::monostate>)
          return nullptr;
        else
          return v;
      },
      c);
}

Json to_json(const QueryResult& r) {
  Json j;
  j["columns"] = r.columns;
  j["rows"] = Json::array();
  for (const auto& row : r.rows) {
    Json out = Json::array();
    for (const auto& c : row) out.push_back(to_json(c));
    j["rows"].push_back(std::move(out));
  }
  j["total_matching"] = r.total_matching;
  return j;
}

Json to_json(const BeamParameters& b) {
  Json j;
  j["mass_amu"] = b.mass_amu;
  j["charge_state"] = b.charge_state;
  j["energy_mev_u"] = b.energy_mev_u;
  return j;
}

Json to_json(const Kinematics& k) {
  Json j;
  j["gamma"] = k.gamma;
  j["beta"] = k.beta;
  j["pc_total_mev"] = k.pc_total_mev;
  j["rigidity_tm"] = k.rigidity_tm;
  return j;
}

Json to_json(const ScaleFactorSet& f) {
  Json j;
  j["magnetic"] = f.magnetic;
  j["electrostatic"] = f.electrostatic;
  j["rf_amplitude"] = f.rf_amplitude;
  j["none"] = f.none;
  return j;
}

Json to_json(const RestoreReport& r) {
  Json j;
  j["tune_id"] = r.tune_id;
  j["old_beam"] = to_json(r.old_beam);
  j["new_beam"] = to_json(r.new_beam);
  j["mode"] = to_string(r.mode);
  j["factors"] = to_json(r.factors);
  j["beta_warning"] = r.beta_warning;
  j["entries"] = Json::array();
  for (const auto& e : r.entries) {
    Json x;
    x["channel"] = e.channel;
    x["scaling_law"] = to_string(e.scaling_law);
    x["archived_value"] = e.archived_value;
    x["factor"] = e.factor;
    x["proposed_value"] = e.proposed_value;
    x["clamped"] = e.clamped;
    x["applied"] = e.applied;
    if (!e.error.empty()) x["error"] = e.error;
    j["entries"].push_back(std::move(x));
  }
  return j;
}

Json to_json(const TuneRow& t) {
  Json j;
  j["id"] = t.id;
  j["label"] = t.label;
  j["created_at"] = t.created_at;
  j["provenance"] = to_string(t.provenance);
  j["mass_amu"] = t.beam.mass_amu;
  j["charge_state"] = t.beam.charge_state;
  j["energy_mev_u"] = t.beam.energy_mev_u;
  return j;
}

Json to_json(const TuneData& t) {
  Json j;
  j["tune"] = to_json(t.header);
  j["values"] = Json::array();
  for (const auto& v : t.values) {
    Json x;
    x["id"] = v.id;
    x["tune_id"] = v.tune_id;
    x["channel"] = v.channel;
    x["scaling_law"] = to_string(v.scaling_law);
    x["value_float"] = v.value_float;
    j["values"].push_back(std::move(x));
  }
  return j;
}

Json to_json(const SnapshotRow& s) {
  Json j;
  j["id"] = s.id;
  j["taken_at"] = s.taken_at;
  j["trigger"] = to_string(s.trigger);
  j["store_version"] = s.store_version;
  j["n_values"] = s.n_values;
  return j;
}

Json to_json(const SnapshotData& s) {
  Json j;
  j["snapshot"] = to_json(s.header);
  j["values"] = Json::array();
  for (const auto& v : s.values) {
    Json x;
    x["id"] = v.id;
    x["snapshot_id"] = v.snapshot_id;
    x["channel"] = v.channel;
    x["value_float"] = v.value_float ? Json(*v.value_float) : Json(nullptr);
    x["value_int"] = v.value_int ? Json(*v.value_int) : Json(nullptr);
    x["value_text"] = v.value_text ? Json(*v.value_text) : Json(nullptr);
    x["seq"] = v.seq;
    j["values"].push_back(std::move(x));
  }
  return j;
}

Json to_json(const StepperPreset& p) {
  Json j;
  j["device_id"] = p.device_id;
  j["preset_name"] = p.preset_name;
  j["position_steps"] = p.position_steps;
  return j;
}

Literal literal_from_json(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) {
    const double d = j.get<double>();
    if (std::isfinite(d)) return d;
  }
  throw Error(ErrorCode::TypeMismatch, "unsupported literal " + j.dump());
}

namespace {
[[noreturn]] void bad_request(const std::string& msg) { throw Error(ErrorCode::BadRequest, msg); }

std::int64_t int_field(const Json& j, const char* key, std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) bad_request(std::string("'") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

std::string string_field(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string())
    bad_request(std::string("'") + key + "' must be a string");
  return j.at(key).get<std::string>();
}
}  // namespace

QuerySpec query_spec_from_json(const Json& j) {
  if (!j.is_object()) bad_request("query body must be an object");
  QuerySpec q;
  q.table = string_field(j, "table");
  if (j.contains("filters")) {
    const auto& fs = j.at("filters");
    if (!fs.is_array()) bad_request("'filters' must be an array");
    for (const auto& f : fs) {
      if (!f.is_object() || !f.contains("literal"))
        bad_request("each filter needs column, op and literal");
      Filter filter;
      filter.column = string_field(f, "column");
      const auto op = string_field(f, "op");
      auto parsed = parse_filter_op(op);
      if (!parsed) throw Error(ErrorCode::BadOperator, "unknown operator '" + op + "'");
      filter.op = *parsed;
      filter.literal = literal_from_json(f.at("literal"));
      q.filters.push_back(std::move(filter));
    }
  }
  if (j.contains("sort") && !j.at("sort").is_null()) {
    const auto& s = j.at("sort");
    if (!s.is_object()) bad_request("'sort' must be an object");
    SortKey key;
    key.column = string_field(s, "column");
    const auto dir = s.contains("direction") ? string_field(s, "direction") : std::string("asc");
    if (dir == "asc")
      key.direction = SortDirection::Asc;
    else if (dir == "desc")
      key.direction = SortDirection::Desc;
    else
      bad_request("sort direction must be asc or desc");
    q.sort = std::move(key);
  }
  q.limit = int_field(j, "limit", kDefaultQueryLimit);
  q.offset = int_field(j, "offset", 0);
  return q;
}

Json to_json(const QuerySpec& q) {
  Json j;
  j["table"] = q.table;
  j["filters"] = Json::array();
  for (const auto& f : q.filters) {
    Json x;
    x["column"] = f.column;
    x["op"] = to_string(f.op);
    x["literal"] = std::visit([](const auto& v) { return Json(v); }, f.literal);
    j["filters"].push_back(std::move(x));
  }
  if (q.sort) {
    j["sort"] = {{"column", q.sort->column},
                 {"direction", q.sort->direction == SortDirection::Desc ? "desc" : "asc"}};
  }
  j["limit"] = q.limit;
  j["offset"] = q.offset;
  return j;
}

BeamParameters beam_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("mass_amu") || !j.contains("charge_state") ||
      !j.contains("energy_mev_u") || !j.at("mass_amu").is_number() ||
      !j.at("charge_state").is_number_integer() || !j.at("energy_mev_u").is_number())
    throw Error(ErrorCode::InvalidBeam, "beam needs numeric mass_amu, integer charge_state and "
                                        "numeric energy_mev_u");
  const auto q = j.at("charge_state").get<std::int64_t>();
  if (q < 1 || q > kMaxChargeState)
    throw Error(ErrorCode::InvalidBeam, "charge_state must be in 1..120");
  BeamParameters b{j.at("mass_amu").get<double>(), static_cast<int>(q),
                   j.at("energy_mev_u").get<double>()};
  validate(b);
  return b;
}

Json error_body(ErrorCode code, const std::string& message) {
  Json j;
  j["code"] = wire_code(code);
  j["message"] = message;
  return j;
}

Json parse_body(const std::string& body) {
  auto j = Json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::BadRequest, "request body is not valid JSON");
  return j;
}

}  // namespace tunevault::wire
