#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hvz {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using Mat42 = Eigen::Matrix<cplx, 4, 2>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// Base class for every error raised by the library. The code string is
// stable and ends up in machine-readable error records.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

inline void require(bool ok, const char* code, const std::string& message) {
    if (!ok) throw Error(code, message);
}

// Rest mass of a particle; always strictly positive.
class Mass {
public:
    explicit Mass(double value) : value_(value) {
        require(value > 0.0, "invalid_mass", "mass must be positive, got " + std::to_string(value));
    }
    double value() const noexcept { return value_; }

private:
    double value_;
};

}  // namespace hvz
