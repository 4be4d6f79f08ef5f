#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hvz/grid.hpp"
#include "hvz/potentials.hpp"

namespace hvz {

// Matrix-free Hermitian operator on plain coefficient vectors. Implementations
// must be safe to call concurrently with distinct output buffers.
class LinearOperator {
public:
    virtual ~LinearOperator() = default;
    virtual std::size_t dim() const = 0;
    virtual void apply(std::span<const cplx> in, std::span<cplx> out) const = 0;
};

struct PairTerm {
    int first = 0;
    int second = 1;
    // Scalar kinds, or 16x16 tabulated in the variable x_first - x_second
    // with spinor index 4 a + b (a of `first`); tabulated terms need first < second.
    Potential potential;
};

// Physical content of an N-particle system. Particle indices are 0-based.
struct SystemSpec {
    std::vector<double> masses;
    std::vector<std::optional<Potential>> external;  // empty, or one entry per particle
    std::vector<PairTerm> pairs;
    std::vector<std::vector<int>> identical;  // groups of mutually identical particles
    bool allow_supercritical = false;

    int particle_count() const noexcept { return static_cast<int>(masses.size()); }
    const std::optional<Potential>& external_of(int particle) const;
    // Pair term between two particles, in either order.
    const PairTerm* pair_between(int a, int b) const;
};

// Checks shapes, the coupling guard and the identical-particle declarations:
// identical particles must share masses, external potentials and pair terms.
void validate_system(const SystemSpec& spec);

struct ClusterDecomposition {
    std::vector<int> first;   // sorted
    std::vector<int> second;  // sorted
    // Splits {0..N-1} into `first` and its complement.
    static ClusterDecomposition from_first(int particle_count, std::vector<int> first);
    const std::vector<int>& cluster(int which) const;
    int particle_count() const noexcept { return static_cast<int>(first.size() + second.size()); }
};

// Gauge of the compressed basis; defaults to positive_basis.
using BasisGauge = std::function<Mat42(const Vec3&, Mass)>;

// Compressed-basis operator sum_n e_n + compressed potentials on a subset of
// particles ("active" particles, renumbered 0..K-1 on the grid).
class Hamiltonian final : public LinearOperator {
public:
    const MomentumGrid& grid() const noexcept { return grid_; }
    const std::vector<int>& particles() const noexcept { return particles_; }
    const std::vector<double>& masses() const noexcept { return masses_; }
    bool has_potentials() const noexcept { return !externals_.empty() || !pairs_.empty(); }

    std::size_t dim() const override { return grid_.state_dim(); }
    void apply(std::span<const cplx> in, std::span<cplx> out) const override;
    SpinorField apply(const SpinorField& field) const;

    // Free part only: sum of one-particle dispersions at each state index.
    double kinetic_at(std::size_t index) const;

private:
    friend Hamiltonian assemble_subset(const MomentumGrid&, const SystemSpec&, std::vector<int>, bool,
                                       const BasisGauge&);
    struct External {
        int slot;
        std::vector<double> scalar;  // per position site, or empty
        std::vector<Mat4> matrix;    // per position site when tabulated
    };
    struct Pair {
        int slot_a;
        int slot_b;
        std::vector<double> scalar;  // per difference site
        std::vector<CMat> matrix;    // 16x16 per difference site when tabulated
    };

    Hamiltonian(MomentumGrid grid) : grid_(std::move(grid)) {}
    void add_potentials(std::span<const cplx> in, std::span<cplx> out) const;
    void multiply_position(std::span<const cplx> in, std::span<cplx> acc) const;

    MomentumGrid grid_;
    std::vector<int> particles_;
    std::vector<double> masses_;
    std::vector<std::vector<double>> dispersion_;  // per slot, per site
    std::vector<std::vector<Mat42>> basis_;        // per slot, per site
    std::vector<External> externals_;
    std::vector<Pair> pairs_;
};

// Operator on a chosen particle subset of `spec`. `grid` fixes the lattice;
// its particle count and mode are replaced. Pairs with both ends in the
// subset are kept; external fields only when `with_external`.
Hamiltonian assemble_subset(const MomentumGrid& grid, const SystemSpec& spec, std::vector<int> particles,
                            bool with_external, const BasisGauge& gauge = {});

Hamiltonian assemble_full(const MomentumGrid& grid, const SystemSpec& spec, const BasisGauge& gauge = {});

// Cluster operator: `which` = 1 keeps external fields, 2 drops them.
Hamiltonian assemble_cluster(const ClusterDecomposition& z, int which, const MomentumGrid& grid,
                             const SystemSpec& spec, const BasisGauge& gauge = {});

// <H f, f> with the lattice cell weight.
double quadratic_form(const Hamiltonian& h, const SpinorField& field);

}  // namespace hvz
