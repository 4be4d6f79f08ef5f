#pragma once

#include <array>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hvz/types.hpp"

namespace hvz {

enum class PotentialKind { coulomb, yukawa, gaussian_well, tabulated };

// Scalar kinds (attractive for positive coupling/depth):
//   coulomb        -g/|x|
//   yukawa         -g exp(-mu |x|)/|x|
//   gaussian_well  -d exp(-|x|^2/w^2)
// Tabulated kinds carry Hermitian matrices on lattice points: 4x4 for an
// external field, 16x16 for a pair term (index 4a+b, a the first particle).
class Potential {
public:
    static Potential coulomb(double coupling);
    static Potential yukawa(double coupling, double screening);
    static Potential gaussian_well(double depth, double width);
    // `rows` maps lattice points to matrices; all matrices must be Hermitian.
    static Potential tabulated(int matrix_dim, const std::vector<std::pair<Vec3, CMat>>& rows);

    // Text table: one row per point, "x y z" followed by matrix_dim^2 complex
    // entries as (re im) pairs in row-major order. '#' starts a comment.
    static Potential load_table(const std::string& path, int matrix_dim);

    PotentialKind kind() const noexcept { return kind_; }
    bool is_scalar() const noexcept { return kind_ != PotentialKind::tabulated; }
    double coupling() const noexcept { return coupling_; }
    double screening() const noexcept { return screening_; }
    double depth() const noexcept { return depth_; }
    double width() const noexcept { return width_; }
    int matrix_dim() const noexcept { return matrix_dim_; }
    std::string describe() const;

    // Same kind and parameters; tabulated potentials compare by shared table.
    bool operator==(const Potential& other) const noexcept {
        return kind_ == other.kind_ && coupling_ == other.coupling_ && screening_ == other.screening_ &&
               depth_ == other.depth_ && width_ == other.width_ && matrix_dim_ == other.matrix_dim_ &&
               table_ == other.table_;
    }

    // Scalar value at a lattice point of spacing `cell`; the origin cell of the
    // singular kinds holds the cell average of the potential.
    double scalar_value(const Vec3& x, double cell) const;

    // Hermitian matrix at a lattice point; scalar kinds return value * I(dim).
    CMat sample_position(const Vec3& x, double cell, int dim) const;

    // Largest operator norm over tabulated points with |x| > radius.
    double table_tail_sup(double radius) const;
    // Lattice quadrature of the squared operator norm over |x| <= radius.
    double table_ball_l2_squared(double radius) const;

private:
    PotentialKind kind_ = PotentialKind::coulomb;
    double coupling_ = 0.0;
    double screening_ = 0.0;
    double depth_ = 0.0;
    double width_ = 1.0;
    int matrix_dim_ = 0;
    double table_spacing_ = 0.0;
    std::shared_ptr<const std::map<std::array<long long, 3>, CMat>> table_;
};

// Average of exp(-mu r)/r over the cube [-a/2, a/2]^3.
double screened_cell_average(double a, double mu);

// (integral over |x| <= R of ||V(x)||^2)^{1/2}.
double local_l2(const Potential& pot, double radius);

// Lattice quadrature of the same integral on the cubic lattice of the given
// spacing through the origin, using the sampled (cell-regularized) values.
double local_l2_lattice(const Potential& pot, double radius, double spacing);

// sup_{|x| > R} ||V(x)|| / sqrt(m).
double decay_epsilon(const Potential& pot, double radius, Mass m);

inline constexpr double coulomb_coupling_limit = 0.9;

// Rejects scalar Coulomb external couplings above the semiboundedness limit.
void check_coupling_guard(const Potential& external, bool allow_supercritical);

// Constants of the lower form bound C1 * sum m - C2.
struct FormConstants {
    double c1 = 1.0;
    double c2 = 0.0;
};

// Defaults: C1 = 1 - g/0.906 for the strongest attractive Coulomb or Yukawa
// coupling g (floored at 0.05), C2 = total Gaussian well depth.
FormConstants default_form_constants(std::span<const Potential> potentials);

}  // namespace hvz
