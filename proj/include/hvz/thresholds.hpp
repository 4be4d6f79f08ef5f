#pragma once

#include <limits>
#include <string>
#include <vector>

#include "hvz/fibers.hpp"

namespace hvz {

// Decompositions related by exchanging identical particles form one class.
struct DecompositionClass {
    ClusterDecomposition representative;       // lexicographically smallest first cluster
    std::vector<ClusterDecomposition> members;  // whole orbit, representative first
};

// All 2^N - 1 decompositions with a nonempty second cluster, grouped into
// identical-particle orbits (singleton orbits when `identical` is empty).
std::vector<DecompositionClass> enumerate_decompositions(int particle_count,
                                                         const std::vector<std::vector<int>>& identical = {});

// Symmetry sector (D, E) of the whole system. Empty labels mean no projection.
struct SymmetrySelection {
    const FiniteGroup* point_group = nullptr;
    std::string point_irrep;
    std::string permutation_irrep;
};

struct ClusterGround {
    double value = std::numeric_limits<double>::quiet_NaN();
    double residual = 0.0;
    bool converged = false;
    bool empty = false;  // the projected subspace is trivial on this lattice
    CVec vector;         // compressed cluster-1 state, unit Euclidean norm
};

// Bottom of the cluster-1 operator (external fields on) inside the sector
// labels.point x labels.permutation of cluster 1.
ClusterGround kappa1(const MomentumGrid& grid, const SystemSpec& spec, const ClusterDecomposition& z,
                     const SectorLabels& labels, const FiniteGroup* point_group, const EigenOptions& solver);

struct ThresholdOptions {
    SymmetrySelection symmetry;
    EigenOptions solver;        // count and projector are set per branch
    Kappa2Options dispersion;   // fiber tol, seed and sector are set per branch
    bool deduplicate = true;    // evaluate one decomposition per identical-particle orbit
    bool prune = true;          // skip branches whose kinetic floor already loses
    bool witness = true;        // numerically witness P^D P^E != 0 on the full lattice
};

struct BranchRecord {
    ClusterDecomposition z;
    std::string d1, e1, d2, e2;
    double kappa1 = std::numeric_limits<double>::quiet_NaN();  // NaN when the first cluster is empty
    double kappa2 = std::numeric_limits<double>::quiet_NaN();
    double momentum = 0.0;  // total momentum attaining kappa2
    double sum = std::numeric_limits<double>::quiet_NaN();
    bool empty = false;
    bool pruned = false;
    bool failed = false;
    bool converged = true;
    std::string note;
};

struct DecompositionRecord {
    ClusterDecomposition z;
    int multiplicity = 1;
    double kappa = std::numeric_limits<double>::infinity();
    bool has_value = false;
    int best_branch = -1;  // index into ThresholdReport::branches
};

struct ThresholdReport {
    std::vector<BranchRecord> branches;
    std::vector<DecompositionRecord> decompositions;
    double kappa = std::numeric_limits<double>::infinity();
    std::vector<int> argmin;  // decomposition indices within the tie tolerance
    bool partial = false;
    double witness = std::numeric_limits<double>::quiet_NaN();  // ||P^D P^E f|| / ||f||
    int points = 0;
    double p_max = 0.0;
    double tol = 0.0;
    std::uint64_t seed = 0;
};

// kappa(Z, D, E): minimum over admissible branches; raises
// "no_admissible_branch" when every branch is empty or none exists.
double kappa_of_z(const MomentumGrid& grid, const SystemSpec& spec, const ClusterDecomposition& z,
                  const ThresholdOptions& options = {});

// Full report; per-branch failures are recorded and flag the report partial.
ThresholdReport hvz_threshold(const MomentumGrid& grid, const SystemSpec& spec, const ThresholdOptions& options = {});

// "{0;2}" style cluster label.
std::string cluster_label(const std::vector<int>& cluster);

// CSV: one row per branch with header
// "first,second,d1,e1,d2,e2,kappa1,kappa2,sum,momentum,flags".
void write_threshold_csv(const ThresholdReport& report, const std::string& path);
// Human-readable report with the same branch lines plus the global value.
void write_threshold_text(const ThresholdReport& report, const std::string& path);

}  // namespace hvz
