#pragma once

#include <random>
#include <vector>

#include "hvz/types.hpp"

namespace testsupport {

inline hvz::Vec3 random_vec3(std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(rng), u(rng), u(rng)};
}

inline std::vector<hvz::cplx> random_state(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<hvz::cplx> v(n);
    for (auto& z : v) z = {g(rng), g(rng)};
    return v;
}

// Truncated Taylor series of exp(a); scaling and squaring keeps it accurate.
inline hvz::CMat expm_series(const hvz::CMat& a) {
    int squarings = 0;
    double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    while (norm > 0.25) {
        norm *= 0.5;
        ++squarings;
    }
    const hvz::CMat scaled = a / std::pow(2.0, squarings);
    hvz::CMat term = hvz::CMat::Identity(a.rows(), a.cols());
    hvz::CMat sum = term;
    for (int k = 1; k < 30; ++k) {
        term = term * scaled / static_cast<double>(k);
        sum += term;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return sum;
}

}  // namespace testsupport
