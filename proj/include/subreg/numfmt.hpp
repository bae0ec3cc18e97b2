#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace subreg {

// Shortest decimal string that round-trips to the same double.
inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace subreg
