#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tunevault {

inline constexpr const char* kDefaultUrl = "http://127.0.0.1:8080";
inline constexpr const char* kUrlEnvVar = "TUNEVAULT_URL";

/// Exit codes of tunevaultctl.
inline constexpr int kExitOk = 0;
inline constexpr int kExitApiError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one tunevaultctl invocation. `args` excludes the program name.
int run_ctl(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Splits a `col,op,lit` filter argument; `\,` is a literal comma.
/// Returns false when there are not exactly three fields.
bool split_where(const std::string& arg, std::string& column, std::string& op,
                 std::string& literal);

}  // namespace tunevault
