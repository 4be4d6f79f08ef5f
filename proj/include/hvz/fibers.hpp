#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hvz/eigensolve.hpp"
#include "hvz/hamiltonians.hpp"
#include "hvz/symmetry.hpp"

namespace hvz {

// Translation-reduced operator of a free cluster at fixed total momentum
// P = |P| * direction. Members n_0 < ... < n_{K} (K = size - 1) carry the
// momenta
//   p_{n_0} = (m_0 / M) P - sum_k q_k,   p_{n_k} = (m_k / M) P + q_k,
// with internal momenta q_1..q_K on the periodic lattice of `lattice`.
// Each particle's lattice offset r_n (q_k, or -sum q_k for n_0) is taken
// modulo the lattice period. Kinetic energies at the Nyquist plane are
// averaged over both signs and the compressed basis uses the Nyquist-free
// symbol momentum, so every quantity depends on the classes r_n only.
//
// State layout: internal sites q_1 (slowest) .. q_K, then the compressed
// spinor index with member 0 as the most significant bit.
class FiberOperator final : public LinearOperator {
public:
    FiberOperator(const MomentumGrid& lattice, const SystemSpec& spec, std::vector<int> cluster,
                  double total_momentum, const Vec3& direction = Vec3::UnitZ(), const BasisGauge& gauge = {});

    std::size_t dim() const override { return multisites_ * spin_dim_; }
    void apply(std::span<const cplx> in, std::span<cplx> out) const override;

    const MomentumGrid& lattice() const noexcept { return lattice_; }
    const std::vector<int>& cluster() const noexcept { return cluster_; }
    const std::vector<double>& masses() const noexcept { return masses_; }
    int members() const noexcept { return static_cast<int>(cluster_.size()); }
    int internal_count() const noexcept { return members() - 1; }
    double total_mass() const noexcept { return total_mass_; }
    double total_momentum() const noexcept { return total_momentum_; }
    const Vec3& direction() const noexcept { return direction_; }
    std::size_t multisites() const noexcept { return multisites_; }
    std::size_t spin_dim() const noexcept { return spin_dim_; }

    // Lattice class (site of the one-particle lattice) of every member's offset r_n.
    std::vector<std::size_t> classes(std::size_t multisite) const;
    // Inverse of `classes` using members 1..K.
    std::size_t multisite_of(std::span<const std::size_t> classes) const;
    // Physical momentum of member k for a lattice class (Nyquist components at -p_max).
    Vec3 member_momentum(int member, std::size_t lattice_class) const;
    double kinetic_at(std::size_t index) const;
    const Mat42& basis(int member, std::size_t lattice_class) const { return basis_[member][lattice_class]; }

private:
    struct Pair {
        int slot_a;
        int slot_b;
        std::vector<double> scalar;  // per difference site
        std::vector<CMat> matrix;    // 16x16 per difference site
    };
    void add_pairs(std::span<const cplx> in, std::span<cplx> out) const;

    MomentumGrid lattice_;
    std::vector<int> cluster_;
    std::vector<double> masses_;
    double total_mass_ = 0.0;
    double total_momentum_ = 0.0;
    Vec3 direction_ = Vec3::UnitZ();
    std::size_t multisites_ = 1;
    std::size_t spin_dim_ = 1;
    std::vector<double> kinetic_;                 // per multisite
    std::vector<std::vector<double>> dispersion_;  // per member, per lattice class
    std::vector<std::vector<Mat42>> basis_;        // per member, per lattice class
    std::vector<Pair> pairs_;
};

// Action of one group element on fiber states. Permutation groups act on
// member slots (slot k moves to perm[k]) and need equal masses on every
// moved slot; point elements must fix the fiber direction.
std::vector<cplx> apply_fiber_element(const FiberOperator& fiber, const FiniteGroup& group, int element,
                                      std::span<const cplx> in);

// (d / |G|) sum_g conj(chi(g)) O(g) on fiber states.
class FiberProjector final : public LinearOperator {
public:
    FiberProjector(const FiberOperator& fiber, FiniteGroup group, std::string irrep);
    std::size_t dim() const override { return fiber_.dim(); }
    void apply(std::span<const cplx> in, std::span<cplx> out) const override;

private:
    const FiberOperator& fiber_;
    FiniteGroup group_;
    std::vector<cplx> weights_;
};

// Symmetry sector of one cluster: a permutation irrep of the cluster's
// identical-particle group and a point-group irrep. Empty labels skip the
// corresponding projection.
struct SectorLabels {
    std::string permutation;
    std::string point;
};

// Composition of the requested fiber projectors (nullptr-free, may be empty).
class FiberSector {
public:
    FiberSector(const FiberOperator& fiber, const SystemSpec& spec, const FiniteGroup* point_group,
                const SectorLabels& labels);
    // nullptr when no projection is requested.
    const LinearOperator* projector() const noexcept { return chain_ ? chain_.get() : single_; }

private:
    std::unique_ptr<FiberProjector> permutation_;
    std::unique_ptr<FiberProjector> point_;
    std::unique_ptr<ProductOperator> chain_;
    const LinearOperator* single_ = nullptr;
};

struct FiberOptions {
    double tol = 1e-10;
    int max_matvecs = 5000;
    std::uint64_t seed = 1;
    Vec3 direction = Vec3::UnitZ();
    const FiniteGroup* point_group = nullptr;
    SectorLabels sector;
};

struct FiberMinimum {
    double value = 0.0;
    double residual = 0.0;
    bool converged = false;
    CVec vector;  // unit Euclidean norm, fiber layout
    int matvecs = 0;
};

// Bottom of the (projected) fiber spectrum at one total momentum.
FiberMinimum fiber_minimum(const MomentumGrid& lattice, const SystemSpec& spec, const std::vector<int>& cluster,
                           double total_momentum, const FiberOptions& options = {});

struct DispersionSample {
    double momentum = 0.0;
    double value = 0.0;
    double residual = 0.0;
    bool converged = false;
};

struct DispersionCurve {
    std::vector<DispersionSample> samples;
    int points = 0;
    double p_max = 0.0;
    double max_jump = 0.0;   // max |mu_{i+1} - mu_i|
    double lipschitz = 0.0;  // max |mu_{i+1} - mu_i| / (P_{i+1} - P_i)
    FormConstants constants;
    bool growth_floor_ok = true;  // mu(P) >= c1 P / size - c2 at every sample
    bool all_converged() const;
};

// Samples mu along an ascending momentum list.
DispersionCurve dispersion_scan(const MomentumGrid& lattice, const SystemSpec& spec, const std::vector<int>& cluster,
                                std::span<const double> momenta, const FiberOptions& options = {});

struct Kappa2Options {
    FiberOptions fiber;
    int samples = 9;         // uniform samples on [0, P_stop]
    double p_stop = 0.0;     // 0 picks 2 size (mu(0) + c2 + 1) / c1
    int refine_steps = 12;   // golden-section steps around an interior minimum
};

struct Kappa2Result {
    double value = 0.0;
    double momentum = 0.0;  // total momentum attaining the minimum
    double p_stop = 0.0;
    DispersionCurve curve;  // uniform samples followed by refinement samples
};

// min_P mu(P). Raises "widen_scan" when the smallest uniform sample is the
// last one, i.e. the scan never saw the dispersion rise again.
Kappa2Result kappa2(const MomentumGrid& lattice, const SystemSpec& spec, const std::vector<int>& cluster,
                    const Kappa2Options& options = {});

// CSV with header "total_momentum,mu,residual,converged".
void write_dispersion_csv(const DispersionCurve& curve, const std::string& path);

}  // namespace hvz
