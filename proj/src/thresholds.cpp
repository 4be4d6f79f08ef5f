#include "hvz/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

namespace hvz {

namespace {

bool is_empty_sector(const Error& e) { return e.code() == "empty_subspace" || e.code() == "subspace_too_small"; }

struct LabelPair {
    std::string first;
    std::string second;
};

// Admissible (label_1, label_2) pairs for one symmetry kind; a single
// unlabeled pair when that kind is not projected.
std::vector<LabelPair> permutation_pairs(const SystemSpec& spec, const ClusterDecomposition& z,
                                         const std::string& irrep) {
    if (irrep.empty()) return {{"", ""}};
    const auto pi = FiniteGroup::permutation_group(spec.particle_count(), spec.identical);
    std::vector<LabelPair> out;
    for (const auto& b : permutation_branching(pi, irrep, spec.identical, z)) out.push_back({b.first, b.second});
    return out;
}

std::vector<LabelPair> point_pairs(const SymmetrySelection& s) {
    if (s.point_irrep.empty()) return {{"", ""}};
    require(s.point_group != nullptr, "invalid_request", "point irrep given without a point group");
    std::vector<LabelPair> out;
    for (const auto& b : point_branching(*s.point_group, s.point_irrep)) out.push_back({b.first, b.second});
    return out;
}

FormConstants cluster_one_constants(const SystemSpec& spec, const std::vector<int>& cluster) {
    std::vector<Potential> pots;
    for (int k : cluster)
        if (const auto& v = spec.external_of(k)) pots.push_back(*v);
    for (const auto& p : spec.pairs)
        if (std::count(cluster.begin(), cluster.end(), p.first) && std::count(cluster.begin(), cluster.end(), p.second))
            pots.push_back(p.potential);
    return default_form_constants(pots);
}

struct Kappa2Entry {
    double value = std::numeric_limits<double>::quiet_NaN();
    double momentum = 0.0;
    bool empty = false;
    bool converged = true;
};

// Evaluates branches with memoized cluster values.
class BranchSolver {
public:
    BranchSolver(const MomentumGrid& grid, const SystemSpec& spec, const ThresholdOptions& options)
        : grid_(grid), spec_(spec), options_(options) {}

    const Kappa2Entry& second(const std::vector<int>& cluster, const std::string& d, const std::string& e) {
        const std::string key = cluster_label(cluster) + "|" + d + "|" + e;
        if (auto it = k2_.find(key); it != k2_.end()) return it->second;
        Kappa2Options o = options_.dispersion;
        o.fiber.point_group = options_.symmetry.point_group;
        o.fiber.sector = {e, d};
        Kappa2Entry entry;
        try {
            const auto r = kappa2(grid_, spec_, cluster, o);
            entry.value = r.value;
            entry.momentum = r.momentum;
            entry.converged = r.curve.all_converged();
        } catch (const Error& err) {
            if (!is_empty_sector(err)) throw;
            entry.empty = true;
        }
        return k2_.emplace(key, entry).first->second;
    }

    const ClusterGround& first(const ClusterDecomposition& z, const std::string& d, const std::string& e) {
        const std::string key = cluster_label(z.first) + "|" + d + "|" + e;
        if (auto it = k1_.find(key); it != k1_.end()) return it->second;
        auto g = kappa1(grid_, spec_, z, {e, d}, options_.symmetry.point_group, options_.solver);
        return k1_.emplace(key, std::move(g)).first->second;
    }

private:
    const MomentumGrid& grid_;
    const SystemSpec& spec_;
    const ThresholdOptions& options_;
    std::map<std::string, Kappa2Entry> k2_;
    std::map<std::string, ClusterGround> k1_;
};

// Evaluates every branch of one decomposition. `best` is the running
// global minimum used for pruning (infinity disables it).
std::vector<BranchRecord> evaluate_branches(BranchSolver& solver, const SystemSpec& spec, const ClusterDecomposition& z,
                                            const ThresholdOptions& options, double best, bool catch_failures) {
    const auto& sym = options.symmetry;
    std::vector<BranchRecord> out;
    if (z.first.empty()) {
        BranchRecord b;
        b.z = z;
        b.d2 = sym.point_irrep;
        b.e2 = sym.permutation_irrep;
        out.push_back(b);
    } else {
        for (const auto& e : permutation_pairs(spec, z, sym.permutation_irrep))
            for (const auto& d : point_pairs(sym)) {
                BranchRecord b;
                b.z = z;
                b.d1 = d.first;
                b.d2 = d.second;
                b.e1 = e.first;
                b.e2 = e.second;
                out.push_back(b);
            }
    }

    double floor_one = 0.0;
    if (!z.first.empty()) {
        const auto c = cluster_one_constants(spec, z.first);
        double mass = 0.0;
        for (int k : z.first) mass += spec.masses[k];
        floor_one = c.c1 * mass - c.c2;
    }

    for (auto& b : out) {
        try {
            const auto& k2 = solver.second(z.second, b.d2, b.e2);
            if (k2.empty) {
                b.empty = true;
                b.note = "second cluster sector empty";
                continue;
            }
            b.kappa2 = k2.value;
            b.momentum = k2.momentum;
            b.converged = k2.converged;
            if (z.first.empty()) {
                b.sum = b.kappa2;
                continue;
            }
            if (options.prune && std::isfinite(best) && floor_one + b.kappa2 > best + 1e-9 * (1.0 + std::abs(best))) {
                b.pruned = true;
                b.note = "kinetic floor " + std::to_string(floor_one) + " cannot beat " + std::to_string(best);
                continue;
            }
            const auto& k1 = solver.first(z, b.d1, b.e1);
            if (k1.empty) {
                b.empty = true;
                b.note = "first cluster sector empty";
                continue;
            }
            b.kappa1 = k1.value;
            b.converged = b.converged && k1.converged;
            b.sum = b.kappa1 + b.kappa2;
            best = std::min(best, b.sum);
        } catch (const Error& err) {
            if (!catch_failures) throw;
            b.failed = true;
            b.note = err.code() + ": " + err.what();
        }
    }
    return out;
}

}  // namespace

std::string cluster_label(const std::vector<int>& cluster) {
    std::string s = "{";
    for (std::size_t i = 0; i < cluster.size(); ++i) s += (i ? ";" : "") + std::to_string(cluster[i]);
    return s + "}";
}

std::vector<DecompositionClass> enumerate_decompositions(int particle_count,
                                                         const std::vector<std::vector<int>>& identical) {
    require(particle_count >= 1 && particle_count < 20, "invalid_request", "particle count out of range");
    std::vector<int> group_of(particle_count, -1);
    for (std::size_t g = 0; g < identical.size(); ++g)
        for (int k : identical[g]) {
            require(k >= 0 && k < particle_count, "identical_particles", "identical particle index out of range");
            group_of[k] = static_cast<int>(g);
        }
    // Orbit key: membership of distinguishable particles and per-group counts.
    std::map<std::vector<int>, std::vector<ClusterDecomposition>> orbits;
    const unsigned all = (1u << particle_count) - 1;
    for (unsigned mask = 0; mask < all; ++mask) {
        std::vector<int> first;
        std::vector<int> key(particle_count + identical.size(), 0);
        for (int k = 0; k < particle_count; ++k)
            if (mask & (1u << k)) {
                first.push_back(k);
                if (group_of[k] < 0)
                    key[k] = 1;
                else
                    ++key[particle_count + group_of[k]];
            }
        orbits[key].push_back(ClusterDecomposition::from_first(particle_count, std::move(first)));
    }
    std::vector<DecompositionClass> out;
    for (auto& [key, members] : orbits) {
        std::sort(members.begin(), members.end(),
                  [](const ClusterDecomposition& a, const ClusterDecomposition& b) { return a.first < b.first; });
        out.push_back({members.front(), members});
    }
    std::sort(out.begin(), out.end(), [](const DecompositionClass& a, const DecompositionClass& b) {
        const auto& x = a.representative.first;
        const auto& y = b.representative.first;
        return x.size() != y.size() ? x.size() < y.size() : x < y;
    });
    return out;
}

ClusterGround kappa1(const MomentumGrid& grid, const SystemSpec& spec, const ClusterDecomposition& z,
                     const SectorLabels& labels, const FiniteGroup* point_group, const EigenOptions& solver) {
    require(!z.first.empty(), "empty_cluster", "kappa1 needs a nonempty first cluster");
    const auto h = assemble_cluster(z, 1, grid, spec);
    std::unique_ptr<SymmetryProjector> pe, pd;
    if (!labels.permutation.empty())
        pe = std::make_unique<SymmetryProjector>(cluster_permutation_group(spec.identical, z.first), labels.permutation,
                                                 h.grid(), h.masses());
    if (!labels.point.empty()) {
        require(point_group != nullptr, "invalid_request", "point irrep given without a point group");
        pd = std::make_unique<SymmetryProjector>(*point_group, labels.point, h.grid(), h.masses());
    }
    std::optional<ProductOperator> both;
    if (pe && pd) both.emplace(*pd, *pe);

    EigenOptions o = solver;
    o.count = 1;
    o.projector = both ? static_cast<const LinearOperator*>(&*both) : pe ? pe.get() : pd.get();
    ClusterGround out;
    try {
        auto r = lowest_eigenpairs(h, o);
        out.value = r.values[0];
        out.residual = r.residuals[0];
        out.converged = r.converged[0];
        out.vector = std::move(r.vectors[0]);
    } catch (const Error& err) {
        if (!is_empty_sector(err)) throw;
        out.empty = true;
    }
    return out;
}

double kappa_of_z(const MomentumGrid& grid, const SystemSpec& spec, const ClusterDecomposition& z,
                  const ThresholdOptions& options) {
    validate_system(spec);
    require(!z.second.empty(), "invalid_cluster", "the second cluster must be nonempty");
    BranchSolver solver(grid, spec, options);
    const auto branches =
        evaluate_branches(solver, spec, z, options, std::numeric_limits<double>::infinity(), false);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : branches)
        if (!b.empty) best = std::min(best, b.sum);
    require(std::isfinite(best), "no_admissible_branch",
            "no nonempty admissible branch for decomposition " + cluster_label(z.first) + cluster_label(z.second));
    return best;
}

ThresholdReport hvz_threshold(const MomentumGrid& grid, const SystemSpec& spec, const ThresholdOptions& options) {
    validate_system(spec);
    ThresholdReport report;
    report.points = grid.points();
    report.p_max = grid.p_max();
    report.tol = options.solver.tol;
    report.seed = options.solver.seed;

    const auto& sym = options.symmetry;
    if (options.witness && (!sym.point_irrep.empty() || !sym.permutation_irrep.empty())) {
        try {
            const auto full = MomentumGrid::make(grid.points(), grid.p_max(), spec.particle_count(),
                                                 SpinorMode::compressed, grid.memory_budget());
            std::unique_ptr<SymmetryProjector> pd, pe;
            if (!sym.point_irrep.empty()) {
                require(sym.point_group != nullptr, "invalid_request", "point irrep given without a point group");
                pd = std::make_unique<SymmetryProjector>(*sym.point_group, sym.point_irrep, full, spec.masses);
            }
            if (!sym.permutation_irrep.empty())
                pe = std::make_unique<SymmetryProjector>(
                    FiniteGroup::permutation_group(spec.particle_count(), spec.identical), sym.permutation_irrep, full,
                    spec.masses);
            if (pd && pe)
                report.witness = witness_nonzero(ProductOperator(*pd, *pe), options.solver.seed);
            else
                report.witness = witness_nonzero(pd ? *pd : *pe, options.solver.seed);
        } catch (const Error& err) {
            if (err.code() != "memory_budget") throw;
        }
    }

    BranchSolver solver(grid, spec, options);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& cls : enumerate_decompositions(spec.particle_count(), spec.identical)) {
        const std::vector<ClusterDecomposition> todo =
            options.deduplicate ? std::vector<ClusterDecomposition>{cls.representative} : cls.members;
        for (const auto& z : todo) {
            DecompositionRecord rec;
            rec.z = z;
            rec.multiplicity = options.deduplicate ? static_cast<int>(cls.members.size()) : 1;
            for (auto& b : evaluate_branches(solver, spec, z, options, options.prune ? best : std::numeric_limits<double>::infinity(), true)) {
                report.partial = report.partial || b.failed;
                if (!b.empty && !b.pruned && !b.failed && b.sum < rec.kappa) {
                    rec.kappa = b.sum;
                    rec.has_value = true;
                    rec.best_branch = static_cast<int>(report.branches.size());
                }
                report.branches.push_back(std::move(b));
            }
            if (rec.has_value) best = std::min(best, rec.kappa);
            report.decompositions.push_back(rec);
        }
    }

    report.kappa = best;
    const double tie = 1e-9 * (1.0 + std::abs(best));
    for (std::size_t i = 0; i < report.decompositions.size(); ++i)
        if (report.decompositions[i].has_value && report.decompositions[i].kappa <= best + tie)
            report.argmin.push_back(static_cast<int>(i));
    return report;
}

namespace {

std::string flags_of(const BranchRecord& b) {
    std::string f;
    auto add = [&](const char* s) { f += f.empty() ? s : std::string("|") + s; };
    if (b.empty) add("empty");
    if (b.pruned) add("pruned");
    if (b.failed) add("failed");
    if (!b.converged) add("unconverged");
    return f.empty() ? "ok" : f;
}

std::string number(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

}  // namespace

void write_threshold_csv(const ThresholdReport& report, const std::string& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "io_error", "cannot write " + path);
    out << "first,second,d1,e1,d2,e2,kappa1,kappa2,sum,momentum,flags\n";
    for (const auto& b : report.branches)
        out << cluster_label(b.z.first) << ',' << cluster_label(b.z.second) << ',' << b.d1 << ',' << b.e1 << ','
            << b.d2 << ',' << b.e2 << ',' << number(b.kappa1) << ',' << number(b.kappa2) << ',' << number(b.sum) << ','
            << number(b.momentum) << ',' << flags_of(b) << '\n';
}

void write_threshold_text(const ThresholdReport& report, const std::string& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "io_error", "cannot write " + path);
    out << std::setprecision(12);
    out << "lattice " << report.points << " points, p_max " << report.p_max << ", tol " << report.tol << ", seed "
        << report.seed << '\n';
    if (!std::isnan(report.witness)) out << "sector witness " << report.witness << '\n';
    for (const auto& b : report.branches) {
        out << "Z=" << cluster_label(b.z.first) << cluster_label(b.z.second) << " D1=" << b.d1 << " E1=" << b.e1
            << " D2=" << b.d2 << " E2=" << b.e2 << " kappa1=" << number(b.kappa1) << " kappa2=" << number(b.kappa2)
            << " sum=" << number(b.sum) << " flags=" << flags_of(b);
        if (!b.note.empty()) out << " note=" << b.note;
        out << '\n';
    }
    for (const auto& d : report.decompositions)
        out << "kappa(Z=" << cluster_label(d.z.first) << cluster_label(d.z.second) << ") = "
            << (d.has_value ? number(d.kappa) : "none") << " multiplicity " << d.multiplicity << '\n';
    out << "kappa = " << number(report.kappa) << (report.partial ? " (partial)" : "") << '\n';
}

}  // namespace hvz
