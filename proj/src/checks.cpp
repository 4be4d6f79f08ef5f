#include "hvz/checks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <tuple>

#include "hvz/eigensolve.hpp"
#include "hvz/fibers.hpp"
#include "hvz/symmetry.hpp"
#include "check_records.hpp"

namespace hvz {

namespace {

using detail::at_most;
using detail::fmt;

CMat materialize(const LinearOperator& op) {
    const auto n = op.dim();
    CMat out(n, n);
    std::vector<cplx> unit(n, 0.0), column(n);
    for (std::size_t j = 0; j < n; ++j) {
        unit[j] = 1.0;
        op.apply(unit, column);
        for (std::size_t i = 0; i < n; ++i) out(i, j) = column[i];
        unit[j] = 0.0;
    }
    return out;
}

SystemSpec pair_system(double m1, double m2, std::optional<Potential> pair) {
    SystemSpec s;
    s.masses = {m1, m2};
    if (pair) s.pairs.push_back({0, 1, *pair});
    return s;
}

SpinorField random_field(const MomentumGrid& grid, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    std::vector<cplx> v(grid.state_dim());
    for (auto& z : v) z = {gauss(rng), gauss(rng)};
    return SpinorField(grid, Representation::momentum, std::move(v));
}

double difference(const SpinorField& a, const SpinorField& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::norm(a.values()[i] - b.values()[i]);
    return std::sqrt(d);
}

// Worst idempotency and Hermiticity defects of every irrep projector,
// relative to the input norms.
std::pair<double, double> projector_defects(const FiniteGroup& group, const MomentumGrid& grid,
                                            std::span<const double> masses, std::mt19937_64& rng) {
    double idem = 0.0, herm = 0.0;
    const auto f = random_field(grid, rng), h = random_field(grid, rng);
    for (const auto& r : group.irreps()) {
        const auto pf = project(group, r.label, f, masses);
        idem = std::max(idem, difference(project(group, r.label, pf, masses), pf) / f.norm());
        const cplx lhs = pf.inner(h), rhs = f.inner(project(group, r.label, h, masses));
        herm = std::max(herm, std::abs(lhs - rhs) / (f.norm() * h.norm()));
    }
    return {idem, herm};
}

// || sum_l P_ll f - P f || / ||f|| over all irreps.
double row_completeness(const FiniteGroup& group, const MomentumGrid& grid, std::span<const double> masses,
                        std::mt19937_64& rng) {
    const auto f = random_field(grid, rng);
    double worst = 0.0;
    for (const auto& r : group.irreps()) {
        std::vector<cplx> sum(f.size(), 0.0);
        for (int l = 0; l < r.dim; ++l) {
            const auto p = row_project(group, r.label, l, l, f, masses);
            for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += p.values()[i];
        }
        const SpinorField total(grid, Representation::momentum, std::move(sum));
        worst = std::max(worst, difference(total, project(group, r.label, f, masses)) / f.norm());
    }
    return worst;
}

// Symmetric-group characters for up to three objects from the cycle type:
// trivial 1, sign, and the standard irrep (fixed points - 1).
double cycle_character(const std::string& label, std::span<const int> perm) {
    if (label == "triv" || label == "sym") return 1.0;
    int fixed = 0, inversions = 0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        if (perm[i] == static_cast<int>(i)) ++fixed;
        for (std::size_t j = i + 1; j < perm.size(); ++j)
            if (perm[i] > perm[j]) ++inversions;
    }
    if (label == "antisym") return inversions % 2 ? -1.0 : 1.0;
    return fixed - 1.0;  // "std"
}

std::vector<std::string> symmetric_labels(std::size_t k) {
    if (k <= 1) return {"triv"};
    if (k == 2) return {"sym", "antisym"};
    return {"sym", "std", "antisym"};
}

std::vector<std::vector<int>> all_permutations(std::size_t k) {
    std::vector<int> p(k);
    std::iota(p.begin(), p.end(), 0);
    std::vector<std::vector<int>> out;
    do out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}

using BranchKey = std::tuple<std::string, std::string, int>;

// Multiplicities of E1 x E2 in E restricted to S_|Z1| x S_|Z2| for a system
// of fully identical particles, by explicit sums over both cluster groups.
std::vector<BranchKey> brute_force_branching(int n, const std::string& irrep, const ClusterDecomposition& z) {
    const auto perms1 = all_permutations(z.first.size());
    const auto perms2 = all_permutations(z.second.size());
    const double order = static_cast<double>(perms1.size() * perms2.size());
    std::vector<BranchKey> out;
    for (const auto& e1 : symmetric_labels(z.first.size()))
        for (const auto& e2 : symmetric_labels(z.second.size())) {
            double sum = 0.0;
            for (const auto& s1 : perms1)
                for (const auto& s2 : perms2) {
                    std::vector<int> global(n);
                    for (std::size_t i = 0; i < s1.size(); ++i) global[z.first[i]] = z.first[s1[i]];
                    for (std::size_t i = 0; i < s2.size(); ++i) global[z.second[i]] = z.second[s2[i]];
                    sum += cycle_character(irrep, global) * cycle_character(e1, s1) * cycle_character(e2, s2);
                }
            const int mult = static_cast<int>(std::lround(sum / order));
            if (mult > 0) out.emplace_back(e1, e2, mult);
        }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<CheckRecord> fiber_checks(const CheckSettings& settings) {
    std::vector<CheckRecord> out;
    FiberOptions options;
    options.seed = settings.seed;

    {
        const auto lattice = MomentumGrid::make(4, 2.0, 1, SpinorMode::compressed);
        SystemSpec one;
        one.masses = {1.0};
        std::vector<double> momenta(50);
        for (int i = 0; i < 50; ++i) momenta[i] = 0.1 * i;
        const auto curve = dispersion_scan(lattice, one, {0}, momenta, options);
        double err = 0.0;
        for (const auto& s : curve.samples)
            err = std::max(err, std::abs(s.value - std::sqrt(s.momentum * s.momentum + 1.0)));
        out.push_back(at_most("fiber.free_single", "m=1;P=0..4.9;samples=50", err, 1e-10));
    }
    {
        const auto lattice = MomentumGrid::make(6, 2.5, 1, SpinorMode::compressed);
        const auto mu = fiber_minimum(lattice, pair_system(1.0, 1.7, std::nullopt), {0, 1}, 0.0, options);
        out.push_back(at_most("fiber.free_pair", "m=1,1.7;n=6;p_max=2.5", std::abs(mu.value - 2.7), 1e-8));
    }

    const auto lattice = MomentumGrid::make(4, 2.0, 1, SpinorMode::compressed);
    const auto bound = pair_system(1.0, 1.4, Potential::yukawa(0.8, 0.7));
    const std::string par = "m=1,1.4;yukawa g=0.8 mu=0.7;n=4;p_max=2";
    double dense_err = 0.0;
    for (double total : {0.0, 0.9}) {
        const FiberOperator fiber(lattice, bound, {0, 1}, total);
        Eigen::SelfAdjointEigenSolver<CMat> dense(materialize(fiber), Eigen::EigenvaluesOnly);
        const auto mu = fiber_minimum(lattice, bound, {0, 1}, total, options);
        dense_err = std::max(dense_err, std::abs(mu.value - dense.eigenvalues()[0]));
        if (total == 0.0) {
            const double gap = 2.4 - mu.value;
            out.push_back({"fiber.yukawa_bound", par, gap, 0.0, gap > 0.0});
        }
    }
    out.push_back(at_most("fiber.yukawa_dense", par + ";P=0,0.9", dense_err, 1e-8));

    std::vector<double> momenta(31);
    for (int i = 0; i < 31; ++i) momenta[i] = 0.1 * i;
    const auto curve = dispersion_scan(lattice, bound, {0, 1}, momenta, options);
    double worst = 0.0;
    for (std::size_t i = 1; i < curve.samples.size(); ++i) {
        const double jump = std::abs(curve.samples[i].value - curve.samples[i - 1].value);
        const double dp = curve.samples[i].momentum - curve.samples[i - 1].momentum;
        worst = std::max(worst, jump / (curve.lipschitz * dp * 1.1));
    }
    out.push_back(at_most("fiber.continuity", par + ";P=0..3;samples=31", worst, 1.0));
    const auto unconverged = std::count_if(curve.samples.begin(), curve.samples.end(),
                                           [](const DispersionSample& s) { return !s.converged; });
    out.push_back(at_most("fiber.converged", par + ";P=0..3;samples=31", static_cast<double>(unconverged), 0.0));
    return out;
}

std::vector<CheckRecord> symmetry_checks(const CheckSettings& settings) {
    std::vector<CheckRecord> out;
    std::mt19937_64 rng(settings.seed);
    const auto one = MomentumGrid::make(4, 2.0, 1, SpinorMode::compressed);

    for (int n : {2, 3}) {
        std::vector<int> all(n);
        std::iota(all.begin(), all.end(), 0);
        const auto group = FiniteGroup::permutation_group(n, {all});
        const std::vector<double> masses(n, 1.0);
        const auto [idem, herm] = projector_defects(group, one.with_particles(n), masses, rng);
        const std::string par = fmt("S%d;N=%d;n=4", n, n);
        out.push_back(at_most("symmetry.permutation_idempotent", par, idem, 1e-12));
        out.push_back(at_most("symmetry.permutation_hermitian", par, herm, 1e-12));
    }

    const auto full = MomentumGrid::make(4, 2.0, 1, SpinorMode::full);
    const std::vector<double> single{1.0}, pair{1.0, 1.0};
    const auto c2v = FiniteGroup::point_group("C2v");
    const auto c2 = FiniteGroup::point_group("C2");
    {
        const auto [idem, herm] = projector_defects(c2v, full, single, rng);
        out.push_back(at_most("symmetry.point_idempotent", "C2v;N=1;full;n=4", idem, 1e-12));
        out.push_back(at_most("symmetry.point_hermitian", "C2v;N=1;full;n=4", herm, 1e-12));
    }
    {
        const auto [idem, herm] = projector_defects(c2, one.with_particles(2), pair, rng);
        out.push_back(at_most("symmetry.point_idempotent", "C2;N=2;compressed;n=4", idem, 1e-12));
        out.push_back(at_most("symmetry.point_hermitian", "C2;N=2;compressed;n=4", herm, 1e-12));
    }

    {
        SystemSpec s;
        s.masses = pair;
        s.external = {Potential::coulomb(0.4), Potential::coulomb(0.4)};
        s.pairs = {{0, 1, Potential::coulomb(-0.3)}};
        s.identical = {{0, 1}};
        const auto grid = one.with_particles(2);
        const auto h = assemble_full(grid, s);
        const auto s2 = FiniteGroup::permutation_group(2, s.identical);
        double worst = 0.0;
        for (const auto& r : s2.irreps()) {
            const SymmetryProjector pe(s2, r.label, grid, s.masses);
            worst = std::max(worst, commutation_defect(h, pe, settings.seed));
        }
        out.push_back(at_most("symmetry.permutation_commutes", "S2;coulomb 0.4 each;pair -0.3;n=4", worst, 1e-8));
    }

    int mismatches = 0, cases = 0;
    for (int n : {2, 3}) {
        std::vector<int> all(n);
        std::iota(all.begin(), all.end(), 0);
        const auto group = FiniteGroup::permutation_group(n, {all});
        for (const auto& r : group.irreps())
            for (int mask = 0; mask < (1 << n); ++mask) {
                std::vector<int> first;
                for (int k = 0; k < n; ++k)
                    if (mask >> k & 1) first.push_back(k);
                const auto z = ClusterDecomposition::from_first(n, first);
                std::vector<BranchKey> got;
                for (const auto& b : permutation_branching(group, r.label, {all}, z))
                    got.emplace_back(b.first, b.second, b.multiplicity);
                std::sort(got.begin(), got.end());
                if (got != brute_force_branching(n, r.label, z)) ++mismatches;
                ++cases;
            }
    }
    out.push_back(at_most("symmetry.branching", fmt("S2,S3;cases=%d", cases), mismatches, 0.0));

    out.push_back(at_most("symmetry.row_sum", "C2v;N=1;full;n=4", row_completeness(c2v, full, single, rng), 1e-12));
    out.push_back(
        at_most("symmetry.row_sum", "C2;N=2;compressed;n=4", row_completeness(c2, one.with_particles(2), pair, rng), 1e-12));
    return out;
}

const std::vector<std::string>& check_suite_names() {
    static const std::vector<std::string> names{"partition", "commutator", "multiplier", "ims",
                                                "fiber",     "symmetry",   "all"};
    return names;
}

std::vector<CheckRecord> run_check_suite(const std::string& name, const CheckSettings& settings) {
    using Suite = std::vector<CheckRecord> (*)(const CheckSettings&);
    static const std::map<std::string, std::vector<Suite>> table{
        {"partition", {partition_checks}},
        {"commutator", {commutator_checks, kernel_checks}},
        {"multiplier", {multiplier_checks}},
        {"ims", {ims_checks}},
        {"fiber", {fiber_checks}},
        {"symmetry", {symmetry_checks}},
    };
    std::vector<CheckRecord> out;
    auto run = [&](const std::vector<Suite>& suites) {
        for (Suite suite : suites) {
            auto records = suite(settings);
            out.insert(out.end(), std::make_move_iterator(records.begin()), std::make_move_iterator(records.end()));
        }
    };
    if (name == "all") {
        for (const auto& n : check_suite_names())
            if (n != "all") run(table.at(n));
        return out;
    }
    const auto it = table.find(name);
    require(it != table.end(), "unknown_suite", "unknown check suite '" + name + "'");
    run(it->second);
    return out;
}

}  // namespace hvz
