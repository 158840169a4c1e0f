#include "idsm/util.hpp"

#include <cstdio>

namespace idsm {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace idsm
