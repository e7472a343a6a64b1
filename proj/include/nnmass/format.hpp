#pragma once

#include <charconv>
#include <string>

namespace nnmass {

// Shortest decimal form that parses back to the same double. Used for CSV so
// reruns are byte-identical and values survive a round trip.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace nnmass
