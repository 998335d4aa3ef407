#pragma once

#include "json.hpp"  // vendored nlohmann/json

namespace coldstart {

// Insertion-ordered so emitted files keep a stable, readable key order.
// Doubles are written in shortest round-trip form.
using Json = nlohmann::ordered_json;

}  // namespace coldstart

#include <charconv>
#include <string>

namespace coldstart {

// Shortest decimal text that parses back to exactly `value`.
inline std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

}  // namespace coldstart
