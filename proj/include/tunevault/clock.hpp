#pragma once

#include <chrono>
#include <cstdint>
#include <functional>

namespace tunevault {

/// Wall-clock source in UTC milliseconds since the epoch. Injected so tests
/// can drive time explicitly.
using Clock = std::function<std::int64_t()>;

inline std::int64_t wall_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace tunevault
