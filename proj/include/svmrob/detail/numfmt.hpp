#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

namespace svmrob::detail {

/// Shortest decimal string that parses back to exactly the same double.
/// Used for canonical spec strings ("huber:1.35") and human-facing output.
inline std::string shortest_double_string(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::string best;
  for (int prec = 1; prec <= 17 && best.empty(); ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) best = buf;
  }
  if (best.empty()) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    best = buf;
  }
  // %g switches to scientific once the exponent reaches the precision, which
  // turns 10 into "1e+01"; prefer the plain rendering when it is no longer.
  if (best.find('e') != std::string::npos && std::abs(v) < 1e17) {
    for (int prec = 0; prec <= 17; ++prec) {
      std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
      double back = 0.0;
      std::sscanf(buf, "%lf", &back);
      if (back == v) {
        if (std::string(buf).size() <= best.size()) best = buf;
        break;
      }
    }
  }
  return best;
}

/// Fixed 17-significant-digit form used by all emitted JSON/CSV so that
/// serialized numbers round-trip bit-faithfully.
inline std::string double17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Strict full-token double parse; returns false on trailing garbage.
inline bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc{} && res.ptr == e;
}

}  // namespace svmrob::detail
