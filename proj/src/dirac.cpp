#include "hvz/dirac.hpp"

#include <cmath>

namespace hvz {

namespace {

DiracAlgebra build_algebra() {
    const cplx I(0.0, 1.0);
    Mat2 sigma[3];
    sigma[0] << 0, 1, 1, 0;
    sigma[1] << 0, -I, I, 0;
    sigma[2] << 1, 0, 0, -1;

    DiracAlgebra alg;
    for (int k = 0; k < 3; ++k) {
        alg.alpha[k].setZero();
        alg.alpha[k].topRightCorner<2, 2>() = sigma[k];
        alg.alpha[k].bottomLeftCorner<2, 2>() = sigma[k];
    }
    alg.beta.setZero();
    alg.beta.diagonal() << 1, 1, -1, -1;

    // S = -(i/4) alpha x alpha, i.e. S_k = -(i/2) alpha_i alpha_j for cyclic (i, j, k).
    for (int k = 0; k < 3; ++k) {
        const int i = (k + 1) % 3;
        const int j = (k + 2) % 3;
        alg.spin[k] = -0.25 * I * (alg.alpha[i] * alg.alpha[j] - alg.alpha[j] * alg.alpha[i]);
    }
    return alg;
}

}  // namespace

const DiracAlgebra& dirac_matrices() {
    static const DiracAlgebra algebra = build_algebra();
    return algebra;
}

Mat4 free_symbol(const Vec3& p, Mass m) {
    const auto& alg = dirac_matrices();
    Mat4 h = m.value() * alg.beta;
    for (int k = 0; k < 3; ++k) h += p[k] * alg.alpha[k];
    return h;
}

Mat4 projector_symbol(const Vec3& p, Mass m) {
    const double energy = std::sqrt(p.squaredNorm() + m.value() * m.value());
    return 0.5 * Mat4::Identity() + free_symbol(p, m) / (2.0 * energy);
}

Mat42 positive_basis(const Vec3& p, Mass m) {
    const Mat4 proj = projector_symbol(p, m);
    Mat42 u = proj.leftCols<2>();

    // Gram-Schmidt on the projected rest-frame columns. The upper block of
    // proj e_k is (E+m)/(2E) e_k, so the first column never vanishes; the
    // fallback below replaces a degenerate second column by the projected
    // lower rest-frame spinor.
    u.col(0).normalize();
    Eigen::Matrix<cplx, 4, 1> second = u.col(1) - u.col(0).dot(u.col(1)) * u.col(0);
    if (second.norm() < 1e-8) {
        for (int k = 2; k < 4; ++k) {
            Eigen::Matrix<cplx, 4, 1> candidate = proj.col(k);
            candidate -= u.col(0).dot(candidate) * u.col(0);
            if (candidate.norm() > second.norm()) second = candidate;
        }
    }
    u.col(1) = second.normalized();
    return u;
}

Mat4 spin_rotation(const Vec3& axis, double angle) {
    require(std::abs(axis.norm() - 1.0) < 1e-12, "invalid_axis", "rotation axis must be a unit vector");
    const auto& alg = dirac_matrices();
    Mat4 n_dot_sigma = Mat4::Zero();
    for (int k = 0; k < 3; ++k) n_dot_sigma += 2.0 * axis[k] * alg.spin[k];
    const cplx I(0.0, 1.0);
    return std::cos(0.5 * angle) * Mat4::Identity() - I * std::sin(0.5 * angle) * n_dot_sigma;
}

}  // namespace hvz
