#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace stokes {

// Shortest decimal form that parses back to exactly the same double.
inline std::string format_double(double v) {
    char buf[40];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

}  // namespace stokes
