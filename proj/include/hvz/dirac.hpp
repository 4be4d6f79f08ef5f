#pragma once

#include <array>

#include "hvz/types.hpp"

namespace hvz {

// Dirac matrices in the standard representation (beta diagonal) and the
// spin matrices S_k = 1/2 diag(sigma_k, sigma_k).
struct DiracAlgebra {
    std::array<Mat4, 3> alpha;
    Mat4 beta;
    std::array<Mat4, 3> spin;
};

const DiracAlgebra& dirac_matrices();

// Free Dirac symbol alpha.p + beta m.
Mat4 free_symbol(const Vec3& p, Mass m);

// Spectral projector of the free symbol onto its positive eigenvalue.
Mat4 projector_symbol(const Vec3& p, Mass m);

// 4x2 isometry spanning the range of projector_symbol(p, m). Columns are
// obtained by projecting the rest-frame spinors e1, e2 and orthonormalizing.
Mat42 positive_basis(const Vec3& p, Mass m);

// exp(-i angle axis.S); requires |axis| = 1.
Mat4 spin_rotation(const Vec3& axis, double angle);

}  // namespace hvz
