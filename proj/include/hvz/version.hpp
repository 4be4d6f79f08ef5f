#pragma once

#include <map>
#include <string>

namespace hvz {

inline constexpr const char* library_version = "0.1.0";

// Library, Eigen, FFTW and compiler versions for run manifests.
std::map<std::string, std::string> component_versions();

}  // namespace hvz
