#include "hvz/eigensolve.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace hvz {

namespace {

CVec apply_op(const LinearOperator& op, const CVec& v) {
    CVec out(static_cast<Eigen::Index>(op.dim()));
    op.apply({v.data(), static_cast<std::size_t>(v.size())}, {out.data(), static_cast<std::size_t>(out.size())});
    return out;
}

CVec random_vector(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g(0.0, 1.0);
    CVec v(static_cast<Eigen::Index>(n));
    for (auto& z : v) z = {g(rng), g(rng)};
    return v;
}

// Two passes of classical Gram-Schmidt against the first `count` basis vectors.
void orthogonalize(std::vector<CVec>& basis, int count, CVec& w, CVec* coeffs = nullptr) {
    for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i < count; ++i) {
            const cplx c = basis[i].dot(w);
            w -= c * basis[i];
            if (coeffs) (*coeffs)[i] += c;
        }
}

}  // namespace

bool EigenResult::all_converged() const {
    return std::all_of(converged.begin(), converged.end(), [](bool c) { return c; });
}

double commutation_defect(const LinearOperator& op, const LinearOperator& projector, std::uint64_t seed,
                          int samples) {
    require(op.dim() == projector.dim(), "dimension_mismatch", "projector size differs from operator size");
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    double worst = 0.0;
    for (int t = 0; t < samples; ++t) {
        const CVec f = random_vector(rng, op.dim());
        const CVec hf = apply_op(op, f);
        const CVec a = apply_op(projector, hf);
        const CVec b = apply_op(op, apply_op(projector, f));
        worst = std::max(worst, (a - b).norm() / hf.norm());
    }
    return worst;
}

EigenResult lowest_eigenpairs(const LinearOperator& op, const EigenOptions& options) {
    const std::size_t n = op.dim();
    const int k = options.count;
    require(k >= 1 && static_cast<std::size_t>(k) <= n, "invalid_request",
            "requested " + std::to_string(k) + " eigenpairs from a space of dimension " + std::to_string(n));
    const LinearOperator* proj = options.projector;
    if (proj) {
        const double defect = commutation_defect(op, *proj, options.seed);
        require(defect <= 1e-8, "projector_commutation",
                "projector does not commute with the operator (defect " + std::to_string(defect) + ")");
    }

    const int m = static_cast<int>(std::min<std::size_t>(
        n, static_cast<std::size_t>(options.subspace > 0 ? std::max(options.subspace, k + 2) : std::max(2 * k + 20, 40))));
    const int keep = std::min(m - 1, k + (m - k) / 2);

    EigenResult result;
    result.seed = options.seed;
    std::mt19937_64 rng(options.seed);

    auto project = [&](CVec& v) {
        if (proj) v = apply_op(*proj, v);
    };

    std::vector<CVec> basis;
    basis.reserve(m + 1);
    CVec start = random_vector(rng, n);
    const double raw = start.norm();
    project(start);
    require(start.norm() > 1e-12 * raw, "empty_subspace", "projector annihilates the start vector");
    basis.push_back(start.normalized());

    CMat t = CMat::Zero(m, m);
    int expanded = 0;  // basis vectors whose column of t is known
    bool exhausted = false;
    CVec residual;  // unnormalized continuation vector

    auto finish = [&](const Eigen::SelfAdjointEigenSolver<CMat>& es, int size) {
        const int found = std::min(k, size);
        result.values.assign(found, 0.0);
        result.residuals.assign(found, 0.0);
        result.converged.assign(found, false);
        result.vectors.assign(found, CVec());
        bool ok = true;
        for (int i = 0; i < found; ++i) {
            CVec x = CVec::Zero(static_cast<Eigen::Index>(n));
            for (int j = 0; j < size; ++j) x += es.eigenvectors()(j, i) * basis[j];
            project(x);
            x.normalize();
            const CVec hx = apply_op(op, x);
            ++result.matvecs;
            const double theta = x.dot(hx).real();
            const double r = (hx - theta * x).norm();
            result.values[i] = theta;
            result.residuals[i] = r;
            result.vectors[i] = std::move(x);
            result.converged[i] = r <= options.tol * (std::abs(theta) + 1.0);
            ok = ok && result.converged[i];
        }
        return ok;
    };

    while (true) {
        bool budget_hit = false;
        // Expand the basis up to m vectors.
        while (expanded < static_cast<int>(basis.size())) {
            const int j = expanded;
            CVec w = apply_op(op, basis[j]);
            ++result.matvecs;
            CVec coeffs = CVec::Zero(static_cast<Eigen::Index>(basis.size()));
            orthogonalize(basis, static_cast<int>(basis.size()), w, &coeffs);
            for (int i = 0; i < static_cast<int>(basis.size()); ++i) {
                t(i, j) = coeffs[i];
                t(j, i) = std::conj(coeffs[i]);
            }
            t(j, j) = t(j, j).real();
            ++expanded;
            project(w);
            double beta = w.norm();
            if (beta <= 1e-12 * (t.block(0, 0, expanded, expanded).norm() + 1.0)) {
                // Invariant subspace: continue with a fresh direction if one exists.
                w = random_vector(rng, n);
                project(w);
                const double before = w.norm();
                orthogonalize(basis, static_cast<int>(basis.size()), w);
                beta = w.norm();
                if (before == 0.0 || beta <= 1e-10 * before) {
                    exhausted = true;
                    residual = CVec();
                    break;
                }
                // Zero coupling to the previous vectors.
                if (static_cast<int>(basis.size()) < m) {
                    basis.push_back(w / beta);
                    continue;
                }
                residual = CVec();
                break;
            }
            if (static_cast<int>(basis.size()) < m) {
                basis.push_back(w / beta);
            } else {
                residual = w;
                break;
            }
            if (result.matvecs >= options.max_matvecs) {
                budget_hit = true;
                break;
            }
        }

        const int size = expanded;
        Eigen::SelfAdjointEigenSolver<CMat> es(t.block(0, 0, size, size));
        result.lowest_history.push_back(es.eigenvalues()[0]);

        if (exhausted) {
            require(size >= k, "subspace_too_small",
                    "invariant subspace of dimension " + std::to_string(size) + " is smaller than " +
                        std::to_string(k));
            finish(es, size);
            return result;
        }
        if (budget_hit) {
            finish(es, size);
            return result;
        }

        // Residual estimates |beta s_last,i| for the wanted Ritz pairs.
        const double beta = residual.size() ? residual.norm() : 0.0;
        bool estimates_ok = size >= k;
        for (int i = 0; i < std::min(k, size) && estimates_ok; ++i)
            estimates_ok = beta * std::abs(es.eigenvectors()(size - 1, i)) <=
                           options.tol * (std::abs(es.eigenvalues()[i]) + 1.0);
        if (estimates_ok && finish(es, size)) return result;
        if (result.matvecs >= options.max_matvecs) {
            finish(es, size);
            return result;
        }

        // Thick restart: keep the lowest Ritz vectors and the continuation vector.
        const int kept = std::min(keep, size);
        std::vector<CVec> next;
        next.reserve(m + 1);
        for (int i = 0; i < kept; ++i) {
            CVec y = CVec::Zero(static_cast<Eigen::Index>(n));
            for (int j = 0; j < size; ++j) y += es.eigenvectors()(j, i) * basis[j];
            next.push_back(std::move(y));
        }
        // Re-orthonormalize the kept vectors against rounding drift.
        for (int i = 0; i < kept; ++i) {
            orthogonalize(next, i, next[i]);
            next[i].normalize();
        }
        t.setZero();
        for (int i = 0; i < kept; ++i) t(i, i) = es.eigenvalues()[i];
        basis = std::move(next);
        expanded = kept;
        CVec cont = residual.size() ? residual : random_vector(rng, n);
        project(cont);
        orthogonalize(basis, kept, cont);
        basis.push_back(cont.normalized());
        ++result.restarts;
    }
}

}  // namespace hvz
