#pragma once

#include <charconv>
#include <string>

namespace modalreg {

// Shortest decimal rendering that round-trips exactly; used in every output file.
inline std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace modalreg
