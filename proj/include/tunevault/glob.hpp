#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tunevault {

/// Channel-name glob. Segments are separated by ':'; `*` matches any run of
/// characters inside one segment and a segment of exactly `**` matches zero
/// or more whole segments.
class GlobPattern {
 public:
  /// Throws Error(BadPattern) on empty input, stray characters or a `**`
  /// that is not a whole segment.
  static GlobPattern parse(std::string_view text);

  bool matches(std::string_view name) const;
  const std::string& text() const { return text_; }

 private:
  std::string text_;
  std::vector<std::string> segments_;
};

/// True when `name` satisfies the hierarchical channel grammar
/// `[A-Z0-9]+(:[A-Za-z0-9_]+){1,3}`.
bool is_valid_channel_name(std::string_view name);

}  // namespace tunevault
