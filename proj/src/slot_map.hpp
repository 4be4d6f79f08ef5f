#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hvz/types.hpp"

namespace hvz::detail {

// Applies a site-dependent (out_dim x in_dim) matrix to the spinor slot of
// one particle. `slot_dims` lists the current spinor dimension of every
// particle; the function returns the new array with slot `particle` resized.
template <class MatrixAtSite>
std::vector<cplx> map_slot(std::span<const cplx> in, std::size_t sites, std::span<const int> slot_dims,
                           int particle, int out_dim, MatrixAtSite&& matrix_at_site) {
    std::size_t outer = 1;
    for (int l = 0; l < particle; ++l) outer *= sites * slot_dims[l];
    std::size_t inner = 1;
    for (std::size_t l = particle + 1; l < slot_dims.size(); ++l) inner *= sites * slot_dims[l];
    const int in_dim = slot_dims[particle];
    std::vector<cplx> out(outer * sites * out_dim * inner, cplx(0.0));

    for (std::size_t s = 0; s < sites; ++s) {
        const auto m = matrix_at_site(s);
        for (std::size_t o = 0; o < outer; ++o) {
            const cplx* src = in.data() + ((o * sites + s) * in_dim) * inner;
            cplx* dst = out.data() + ((o * sites + s) * out_dim) * inner;
            for (int a = 0; a < out_dim; ++a) {
                cplx* d = dst + a * inner;
                for (int b = 0; b < in_dim; ++b) {
                    const cplx coeff = m(a, b);
                    if (coeff == cplx(0.0)) continue;
                    const cplx* sp = src + b * inner;
                    for (std::size_t i = 0; i < inner; ++i) d[i] += coeff * sp[i];
                }
            }
        }
    }
    return out;
}

}  // namespace hvz::detail
