#include "tunevault/value.hpp"

namespace tunevault {

std::string_view to_string(ValueTag tag) {
  switch (tag) {
    case ValueTag::Float64: return "float64";
    case ValueTag::Int64: return "int64";
    case ValueTag::EnumString: return "enum";
  }
  return "?";
}

std::string_view to_string(Role role) {
  return role == Role::Setpoint ? "setpoint" : "readback";
}

std::string_view to_string(Quality quality) {
  switch (quality) {
    case Quality::Ok: return "ok";
    case Quality::Stale: return "stale";
    case Quality::Alarm: return "alarm";
  }
  return "?";
}

std::optional<ValueTag> parse_value_tag(std::string_view s) {
  if (s == "float64") return ValueTag::Float64;
  if (s == "int64") return ValueTag::Int64;
  if (s == "enum") return ValueTag::EnumString;
  return std::nullopt;
}

std::optional<Role> parse_role(std::string_view s) {
  if (s == "setpoint") return Role::Setpoint;
  if (s == "readback") return Role::Readback;
  return std::nullopt;
}

std::optional<Quality> parse_quality(std::string_view s) {
  if (s == "ok") return Quality::Ok;
  if (s == "stale") return Quality::Stale;
  if (s == "alarm") return Quality::Alarm;
  return std::nullopt;
}

std::optional<double> as_number(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return std::nullopt;
}

}  // namespace tunevault
