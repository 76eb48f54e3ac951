#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace mapsight {

/// Locale-independent fixed-point formatting for report files.
[[nodiscard]] inline std::string fixed(double v, int precision = 6) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    std::string s(buf);
    if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

}  // namespace mapsight
