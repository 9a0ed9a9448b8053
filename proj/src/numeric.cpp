#include "serendip/numeric.hpp"

#include <cstdio>

namespace serendip {

std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", x);
    std::string s(buf);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s;
}

}  // namespace serendip
