#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace tunevault {

enum class ValueTag { Float64, Int64, EnumString };

/// Tagged scalar carried by a channel. The alternative index matches ValueTag.
using Value = std::variant<double, std::int64_t, std::string>;

enum class Role { Setpoint, Readback };
enum class Quality { Ok, Stale, Alarm };

inline ValueTag tag_of(const Value& v) { return static_cast<ValueTag>(v.index()); }

std::string_view to_string(ValueTag tag);
std::string_view to_string(Role role);
std::string_view to_string(Quality quality);

std::optional<ValueTag> parse_value_tag(std::string_view s);
std::optional<Role> parse_role(std::string_view s);
std::optional<Quality> parse_quality(std::string_view s);

/// Numeric view of a float64 or int64 value; nullopt for enum strings.
std::optional<double> as_number(const Value& v);

}  // namespace tunevault
