#pragma once

#include <cmath>
#include <string>

namespace serendip {

// Global rounding rule: round to nearest, ties toward +infinity.
inline double round_half_up(double x) { return std::floor(x + 0.5); }

inline int round_half_up_int(double x) { return static_cast<int>(round_half_up(x)); }

// Compact decimal rendering for prompt text and tables: fixed 4 decimals,
// trailing zeros (and a bare trailing point) stripped.
std::string format_number(double x);

}  // namespace serendip
