#include "tunevault/glob.hpp"

#include <cctype>

#include "tunevault/error.hpp"

namespace tunevault {
namespace {

std::vector<std::string_view> split_segments(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(':', start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// Classic wildcard match of one segment; '*' never crosses ':' because the
// caller already split on it.
bool segment_matches(std::string_view pat, std::string_view text) {
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pat.size() && pat[p] != '*' && pat[p] == text[t]) {
      ++p;
      ++t;
    } else if (p < pat.size() && pat[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pat.size() && pat[p] == '*') ++p;
  return p == pat.size();
}

bool match_from(const std::vector<std::string>& pat, std::size_t pi,
                const std::vector<std::string_view>& name, std::size_t ni) {
  if (pi == pat.size()) return ni == name.size();
  if (pat[pi] == "**") {
    for (std::size_t k = ni; k <= name.size(); ++k)
      if (match_from(pat, pi + 1, name, k)) return true;
    return false;
  }
  if (ni == name.size()) return false;
  return segment_matches(pat[pi], name[ni]) && match_from(pat, pi + 1, name, ni + 1);
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

GlobPattern GlobPattern::parse(std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::BadPattern, "empty pattern");
  GlobPattern g;
  g.text_ = std::string(text);
  for (auto seg : split_segments(text)) {
    if (seg.empty())
      throw Error(ErrorCode::BadPattern, "empty segment in pattern '" + g.text_ + "'");
    for (char c : seg) {
      if (!is_name_char(c) && c != '*')
        throw Error(ErrorCode::BadPattern, "illegal character in pattern '" + g.text_ + "'");
    }
    if (seg.find("**") != std::string_view::npos && seg != "**")
      throw Error(ErrorCode::BadPattern, "'**' must be a whole segment in '" + g.text_ + "'");
    g.segments_.emplace_back(seg);
  }
  return g;
}

bool GlobPattern::matches(std::string_view name) const {
  return match_from(segments_, 0, split_segments(name), 0);
}

bool is_valid_channel_name(std::string_view name) {
  auto segs = split_segments(name);
  if (segs.size() < 2 || segs.size() > 4) return false;
  if (segs[0].empty()) return false;
  for (char c : segs[0]) {
    if (!(std::isdigit(static_cast<unsigned char>(c)) || (c >= 'A' && c <= 'Z'))) return false;
  }
  for (std::size_t i = 1; i < segs.size(); ++i) {
    if (segs[i].empty()) return false;
    for (char c : segs[i])
      if (!is_name_char(c)) return false;
  }
  return true;
}

}  // namespace tunevault
