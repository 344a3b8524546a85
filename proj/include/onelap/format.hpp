#pragma once

#include <cstdio>
#include <string>

namespace onelap {

/// Decimal representation with 17 significant digits; reading it back with
/// a correctly rounded parser reproduces the same double.
inline std::string fmt_exact(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace onelap
