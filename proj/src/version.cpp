#include "hvz/version.hpp"

#include <Eigen/Core>
#include <fftw3.h>

namespace hvz {

std::map<std::string, std::string> component_versions() {
    return {
        {"hvz", library_version},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"fftw", fftw_version},
        {"compiler", __VERSION__},
    };
}

}  // namespace hvz
