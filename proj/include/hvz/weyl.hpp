#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hvz/thresholds.hpp"

namespace hvz {

// Radial shell packet of one free particle: constant profile f on
// [p0, p0 + width], spin state `spinor` in the compressed basis.
struct WeylPacket {
    double p0 = 0.0;
    double width = 0.0;
    double lambda1 = 0.0;
    double amplitude = 0.0;  // f = (((p0 + width)^3 - p0^3) / 3)^(-1/2)
    Eigen::Vector2cd spinor = Eigen::Vector2cd(1.0, 0.0);
    Vec3 direction = Vec3::UnitZ();
};

// Solves mu(p0) = lambda1 by bisection on the increasing branch of the
// sampled curve right of its minimum. Raises "below_dispersion" when
// lambda1 lies under every sample, "above_dispersion" past the scanned range
// and "packet_too_wide" when mu(p0 + width) - lambda1 exceeds `slack`.
WeylPacket build_packet(const DispersionCurve& curve, const std::function<double(double)>& mu, double lambda1,
                        double width, double slack = std::numeric_limits<double>::infinity());

// int_{p0}^{p0+w} f^2 P^2 dP by Simpson's rule (exact for the constant profile).
double packet_normalization(const WeylPacket& packet);

// (2 pi^2)^-1 (p0 + w)^2 w.
double density_bound(const WeylPacket& packet);

struct TrialState {
    SpinorField field;         // full-system compressed momentum field, unit norm
    int shell_points = 0;      // lattice momenta inside the packet shell
    double shell_quadrature = 0.0;  // lattice value of int f^2 P^2 dP before renormalization
    double first_norm = 0.0;   // ||phi|| of the first-cluster factor
    double second_norm = 0.0;  // ||psi|| of the packet factor
    double outside_mass = 0.0; // ||phi||^2 share with some first-cluster particle beyond the separation
};

// phi (x) psi with psi(p) = f chi e^{-i p . R omega} / sqrt(4 pi) on the
// lattice shell. `first` is the compressed first-cluster state on `grid`
// restricted to z.first (ignored when z.first is empty). Only single-particle
// second clusters are supported ("unsupported_cluster"); R > L/2 raises
// "aliasing"; a shell without lattice momenta raises "empty_shell".
TrialState build_trial(const MomentumGrid& grid, const SystemSpec& spec, const ClusterDecomposition& z,
                       const CVec& first, const WeylPacket& packet, double separation);

// Packet factor alone on a one-particle grid (compressed momentum field).
SpinorField packet_field(const MomentumGrid& one, const WeylPacket& packet, double separation, int* shell_points = nullptr);

// Largest one-particle position density |u psi|^2 (4-spinor norm) on the lattice.
double packet_density_max(const MomentumGrid& one, const WeylPacket& packet, double mass, double separation);

struct WeightedDensity {
    double weighted = 0.0;  // ||W psi||^2
    double bound = 0.0;     // density_bound(packet) ||W||^2
};

// W = |x - c|^-1 inside a ball of `radius` around the packet centre c,
// zero outside; the origin cell holds the cell average.
WeightedDensity truncated_coulomb_density(const MomentumGrid& one, const WeylPacket& packet, double mass,
                                          double separation, double radius);

struct WeylResidual {
    double residual = 0.0;         // ||(H - lambda) f|| / ||f||
    double projected_ratio = 1.0;  // ||P f|| / ||f||, the measured C_E diagnostic
};

// Raises "not_admissible" when the projected norm ratio falls below 1e-10.
WeylResidual weyl_residual(const LinearOperator& h, const SpinorField& trial, double lambda,
                           const LinearOperator* projector = nullptr);

// Smallest box length L >= min_length for which the lattice with `points`
// per axis and spacing 2 pi / L has a momentum of radius p0 + width / 2, so
// the shell sum is a radial midpoint rule. Returns min_length when p0 = 0.
double box_for_shell(double min_length, int points, double p0, double width);

struct WeylStudyOptions {
    int points = 8;
    double box0 = 16.0;
    double width0 = 0.1;
    double separation0 = 4.0;
    int steps = 3;
    double offset = 0.0;  // lambda = kappa + offset
    EigenOptions solver;
    Kappa2Options dispersion;
    std::size_t memory_budget = default_memory_budget;
};

struct WeylStudyRow {
    int step = 0;
    double width = 0.0;
    double separation = 0.0;
    double box = 0.0;
    double kappa = 0.0;
    double lambda = 0.0;
    double p0 = 0.0;
    double residual = 0.0;
    double projected_ratio = 1.0;
    int shell_points = 0;
};

// Refinement sequence (width0 / 2^j, separation0 2^j) on boxes from
// box_for_shell(box0 2^j). kappa = kappa1 + kappa2 is recomputed on each lattice.
std::vector<WeylStudyRow> weyl_study(const SystemSpec& spec, const ClusterDecomposition& z,
                                     const WeylStudyOptions& options);

// CSV header "step,width,separation,box,kappa,lambda,p0,residual,projected_ratio,shell_points".
void write_weyl_csv(const std::vector<WeylStudyRow>& rows, const std::string& path);

}  // namespace hvz
