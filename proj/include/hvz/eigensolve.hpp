#pragma once

#include <cstdint>
#include <vector>

#include "hvz/hamiltonians.hpp"

namespace hvz {

struct EigenOptions {
    int count = 1;
    double tol = 1e-10;        // residual bound tol * (|lambda| + 1)
    int max_matvecs = 5000;
    int subspace = 0;          // Krylov basis size; 0 picks max(2 count + 20, 40)
    std::uint64_t seed = 1;
    // Orthogonal projector commuting with the operator; the solve stays in its range.
    const LinearOperator* projector = nullptr;
};

struct EigenResult {
    std::vector<double> values;     // ascending
    std::vector<double> residuals;  // ||H v - lambda v|| recomputed for unit v
    std::vector<bool> converged;
    std::vector<CVec> vectors;      // unit Euclidean norm
    int matvecs = 0;
    int restarts = 0;
    std::uint64_t seed = 0;
    std::vector<double> lowest_history;  // lowest Ritz value after each Rayleigh-Ritz step

    bool all_converged() const;
};

// Lowest eigenpairs by Lanczos with full reorthogonalization and thick restart.
// Errors: count outside [1, dim] ("invalid_request"), projector range empty
// ("empty_subspace") or smaller than count ("subspace_too_small"), projector
// failing the commutation spot check ("projector_commutation").
EigenResult lowest_eigenpairs(const LinearOperator& op, const EigenOptions& options);

// Relative commutator defect max ||PHf - HPf|| / ||Hf|| over random f.
double commutation_defect(const LinearOperator& op, const LinearOperator& projector, std::uint64_t seed,
                          int samples = 2);

}  // namespace hvz
