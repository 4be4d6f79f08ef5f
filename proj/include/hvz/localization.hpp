#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hvz/hamiltonians.hpp"

namespace hvz {

// Value and first two derivatives of a scalar function at one point.
struct ScalarJet {
    double value = 0.0;
    double first = 0.0;
    double second = 0.0;
};

// theta(t): quintic smoothstep, 0 on [0, 1], 1 on [2, inf), C^2.
ScalarJet smooth_step(double t);
// Square roots of the cutoff step eta = sin^2(pi theta / 2) and of 1 - eta.
ScalarJet step_root(double t);
ScalarJet step_coroot(double t);
// eta(t) itself.
double step(double t);

// Smooth partition {chi_Z} over all 2^N two-cluster decompositions (second
// cluster may be empty only for Z = (I, {})), evaluated at chi_Z(X / R).
class PartitionOfUnity {
public:
    static PartitionOfUnity build(int particle_count, double scale);

    int particles() const noexcept { return particles_; }
    double scale() const noexcept { return scale_; }
    // N^{-3/2}; support of chi_Z keeps clusters this far apart relative to |X|.
    double separation_constant() const noexcept;
    const std::vector<ClusterDecomposition>& decompositions() const noexcept { return z_; }

    // Coordinates are x_1..x_N flattened (3N entries).
    std::vector<double> zeta(std::span<const double> x) const;
    std::vector<double> chi(std::span<const double> x) const;

    struct Jet {
        double value = 0.0;
        Eigen::VectorXd gradient;
        Eigen::MatrixXd hessian;
    };
    std::vector<Jet> chi_jets(std::span<const double> x) const;

    // min{|x_j - x_n| (j in first, n in second); |x_n| (n in second)};
    // +inf when the second cluster is empty.
    static double separation(const ClusterDecomposition& z, std::span<const double> x);

private:
    int particles_ = 0;
    double scale_ = 1.0;
    std::vector<ClusterDecomposition> z_;
};

// Scalar cutoff on R^3 with its gradient.
struct Cutoff {
    std::function<double(const Vec3&)> value;
    std::function<Vec3(const Vec3&)> gradient;
};

// 1 - eta(|x| / R): equal to 1 on |x| <= R, 0 beyond 2R.
Cutoff radial_bump(double radius);
// eta(|x| / R): 0 on |x| <= R, 1 beyond 2R.
Cutoff radial_step(double radius);

// Pointwise multiplication by c(x_1, ..., x_N) in the position representation;
// the result keeps the representation of `field`.
SpinorField multiply_cutoff(const SpinorField& field, const std::function<double(std::span<const Vec3>)>& c);

// prod_{n in particles} Lambda^n applied to a full-mode field (any representation).
SpinorField apply_projectors(const SpinorField& field, const std::vector<int>& particles,
                             std::span<const double> masses);

// [c, prod Lambda^n] f.
SpinorField apply_commutator(const SpinorField& field, const std::function<double(std::span<const Vec3>)>& c,
                             const std::vector<int>& particles, std::span<const double> masses);

struct PowerOptions {
    int min_iterations = 30;
    int max_iterations = 300;
    double tol = 1e-6;  // relative stagnation of the Rayleigh quotient
    std::uint64_t seed = 1;
    // Inputs are limited to |p_i| <= band * p_max so the smooth cutoff never
    // couples modes across the zone edge, where the lattice symbol jumps.
    double band = 0.5;
};

struct CommutatorEstimate {
    double norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

// ||[chi, Lambda_m] B|| on L2 (B the band limit) by power iteration on
// -B T^2 B for a full-mode one-particle grid.
CommutatorEstimate commutator_norm(const MomentumGrid& one, const Cutoff& chi, Mass m, const PowerOptions& options = {});

struct PlanarOptions {
    int points = 2048;  // lattice along the normal direction
    double box = 512.0;
    std::vector<double> transverse{0.0, 0.25, 0.5, 1.0};  // |p_perp| samples
    PowerOptions power;
};

// ||[c, Lambda_m] B|| for a cutoff c(x) = profile(x_3). The commutator
// preserves the transverse momentum, so the norm is the largest over
// one-dimensional problems at the sampled |p_perp|.
CommutatorEstimate planar_commutator_norm(const std::function<double(double)>& profile, Mass m,
                                          const PlanarOptions& options = {});

// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct KernelQuadrature {
    double cutoff_radius = 0.0;  // 0 picks 30/m
    int radial_order = 16;       // Gauss-Legendre nodes per radial segment
    double segment = 0.25;       // outer segment length in units of 1/m
};

// 4x4 action of the configuration-space kernel (K0, K1 Bessel terms) on the
// plane wave e^{i p.x}. Angular integrals are done exactly (spherical Bessel
// j0, j1); the radial ones by Gauss-Legendre on (0, cutoff], where the
// integrands stay bounded once the angular average is taken.
Mat4 kernel_symbol(const Vec3& p, Mass m, const KernelQuadrature& quadrature = {});

// Lambda_m f through kernel_symbol on each lattice mode of a full-mode
// one-particle field; keeps the representation. Raises "kernel_resolution"
// when the lattice spacing exceeds 1/(4m).
SpinorField bessel_kernel_apply(const SpinorField& f, Mass m, const KernelQuadrature& quadrature = {});

struct MultiplierSample {
    double product_norm = 0.0;  // ||chi u||_{H^1/2}
    double sup = 0.0;           // ||chi||_inf on the lattice
    double gradient_sup = 0.0;  // ||grad chi||_inf on the lattice
    double field_norm = 0.0;    // ||u||_{H^1/2}
    double raw_ratio() const { return product_norm / ((sup + gradient_sup) * field_norm); }
};

// H^{1/2} norms use the weight sqrt(|p|^2 + 1) (h_half_norm); one-particle fields.
MultiplierSample multiplier_sample(const Cutoff& chi, const SpinorField& u);

// C in ||chi u|| <= C (||chi|| + ||grad chi||) ||u||, fixed as the largest raw
// ratio over a reference family; ratio() <= 1 then states the bound.
class MultiplierBound {
public:
    static MultiplierBound calibrate(std::span<const MultiplierSample> reference);
    double constant() const noexcept { return constant_; }
    double ratio(const MultiplierSample& s) const { return s.raw_ratio() / constant_; }

private:
    double constant_ = 1.0;
};

// Band-limited random field |p| <= cutoff with a Gaussian envelope of width
// `envelope` around the origin, unit L2 norm, momentum representation.
SpinorField random_smooth_field(const MomentumGrid& grid, double cutoff, double envelope, std::uint64_t seed);

struct ImsReport {
    double whole = 0.0;      // <A psi, psi>, A = sum_n alpha_n . p_n
    double localized = 0.0;  // sum_Z <A chi_Z psi, chi_Z psi>
    double defect() const { return std::abs(whole - localized); }
};

// A (chi_Z psi) is evaluated by the Leibniz rule chi_Z A psi - i (alpha . grad chi_Z) psi
// with closed-form gradients. `weights` rescales each chi_Z (empty: all 1),
// which breaks sum chi^2 = 1 for negative controls. Full-mode fields.
ImsReport ims_first_order_check(const PartitionOfUnity& partition, const SpinorField& psi,
                                std::span<const double> weights = {});

// M = 8 (kappa + C2) / C1, reported only.
double exceptional_scale(double kappa, const FormConstants& constants);

// One machine-readable check outcome.
struct CheckRecord {
    std::string id;
    std::string parameters;
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;
};

// CSV with header "check,parameters,value,bound,pass".
void write_checks_csv(std::span<const CheckRecord> records, const std::string& path);

struct CheckSettings {
    std::uint64_t seed = 1;
    int partition_samples = 10000;
    // Slab cutoffs 1 - eta(|x_3| / R); the norm depends on m R only.
    double commutator_mass = 2.0;
    int commutator_points = 2048;
    double commutator_box = 512.0;
};

// Property suites shared by the command line and the acceptance test.
std::vector<CheckRecord> partition_checks(const CheckSettings& settings);
std::vector<CheckRecord> commutator_checks(const CheckSettings& settings);
std::vector<CheckRecord> kernel_checks(const CheckSettings& settings);
std::vector<CheckRecord> multiplier_checks(const CheckSettings& settings);
std::vector<CheckRecord> ims_checks(const CheckSettings& settings);

}  // namespace hvz
