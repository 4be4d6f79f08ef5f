#pragma once

#include <cstdio>
#include <string>
#include <utility>

#include "hvz/localization.hpp"

namespace hvz::detail {

inline std::string fmt(const char* format, auto... args) {
    char buf[160];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

inline CheckRecord at_most(std::string id, std::string parameters, double value, double bound) {
    return {std::move(id), std::move(parameters), value, bound, value <= bound};
}

inline CheckRecord at_least(std::string id, std::string parameters, double value, double bound) {
    return {std::move(id), std::move(parameters), value, bound, value >= bound};
}

}  // namespace hvz::detail
