#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "dense_oracles.hpp"
#include "hvz/thresholds.hpp"

using namespace hvz;

namespace {

// Orbits of first-cluster bitmasks under swaps of identical particles,
// counted by closing each mask under every transposition.
std::size_t orbit_count(int n, const std::vector<std::vector<int>>& identical) {
    std::set<unsigned> seen;
    std::size_t orbits = 0;
    const unsigned all = (1u << n) - 1;
    for (unsigned m = 0; m < all; ++m) {
        if (seen.count(m)) continue;
        ++orbits;
        std::vector<unsigned> stack{m};
        seen.insert(m);
        while (!stack.empty()) {
            const unsigned x = stack.back();
            stack.pop_back();
            for (const auto& g : identical)
                for (std::size_t i = 0; i < g.size(); ++i)
                    for (std::size_t j = i + 1; j < g.size(); ++j) {
                        const unsigned bi = (x >> g[i]) & 1u, bj = (x >> g[j]) & 1u;
                        unsigned y = x & ~((1u << g[i]) | (1u << g[j]));
                        y |= (bj << g[i]) | (bi << g[j]);
                        if (seen.insert(y).second) stack.push_back(y);
                    }
        }
    }
    return orbits;
}

SystemSpec atom(int n, double coupling) {
    SystemSpec s;
    s.masses.assign(n, 1.0);
    s.external.assign(n, Potential::coulomb(coupling));
    return s;
}

ThresholdOptions quick() {
    ThresholdOptions o;
    o.solver.tol = 1e-10;
    o.dispersion.samples = 5;
    o.dispersion.refine_steps = 6;
    return o;
}

}  // namespace

TEST_CASE("decomposition enumeration") {
    CHECK(enumerate_decompositions(1).size() == 1);
    CHECK(enumerate_decompositions(1)[0].representative.first.empty());
    CHECK(enumerate_decompositions(1)[0].representative.second == std::vector<int>{0});
    const auto two = enumerate_decompositions(2);
    CHECK(two.size() == 3);
    CHECK(enumerate_decompositions(2, {{0, 1}}).size() == orbit_count(2, {{0, 1}}));
    CHECK(enumerate_decompositions(2, {{0, 1}}).size() == 2);

    for (int n = 1; n <= 4; ++n) {
        std::size_t total = 0;
        for (const auto& c : enumerate_decompositions(n)) total += c.members.size();
        CHECK(total == (1u << n) - 1);
    }
    const std::vector<std::vector<int>> groups{{0, 2}, {1, 3}};
    const auto classes = enumerate_decompositions(4, groups);
    CHECK(classes.size() == orbit_count(4, groups));
    std::size_t total = 0;
    for (const auto& c : classes) {
        total += c.members.size();
        CHECK(c.members.front().first == c.representative.first);
        for (const auto& z : c.members) CHECK(!z.second.empty());
    }
    CHECK(total == 15);
    CHECK(enumerate_decompositions(3, {{0, 1, 2}}).size() == orbit_count(3, {{0, 1, 2}}));
}

TEST_CASE("kappa1 of a single particle") {
    const auto g = MomentumGrid::make(4, 2.0, 1, SpinorMode::compressed);
    SystemSpec free;
    free.masses = {1.3};
    const auto z = ClusterDecomposition::from_first(1, {0});
    // A decomposition with an empty second cluster is only used for kappa1 here.
    EigenOptions eo;
    CHECK(kappa1(g, free, z, {}, nullptr, eo).value == doctest::Approx(1.3).epsilon(1e-12));

    const auto s = atom(1, 0.5);
    const auto k = kappa1(g, s, z, {}, nullptr, eo);
    Eigen::SelfAdjointEigenSolver<CMat> es(testsupport::dense_one_particle(g, 1.0, &*s.external[0]));
    CHECK(std::abs(k.value - es.eigenvalues()[0]) < 1e-8);
    CHECK(k.converged);

    const auto fine = MomentumGrid::make(12, 2.0, 1, SpinorMode::compressed);
    const double e0 = kappa1(fine, s, z, {}, nullptr, eo).value;
    CHECK(e0 > std::sqrt(1.0 - 0.25));
    CHECK(e0 < 1.0);

    const auto c2 = FiniteGroup::point_group("C2");
    CHECK(kappa1(g, s, z, {"", "A"}, &c2, eo).empty);
    const auto half = kappa1(g, s, z, {"", "Ea_half"}, &c2, eo);
    CHECK(!half.empty);
    CHECK(half.value >= k.value - 1e-9);
}

TEST_CASE("kappa of a decomposition") {
    const auto g = MomentumGrid::make(6, 2.0, 1, SpinorMode::compressed);
    const auto o = quick();

    SystemSpec one;
    one.masses = {1.2};
    CHECK(kappa_of_z(g, one, ClusterDecomposition::from_first(1, {}), o) == doctest::Approx(1.2).epsilon(1e-12));

    SystemSpec mixed;
    mixed.masses = {1.0, 1.4};
    mixed.external = {Potential::coulomb(0.5), std::nullopt};
    const auto z = ClusterDecomposition::from_first(2, {0});
    const double e0 = kappa1(g, mixed, z, {}, nullptr, o.solver).value;
    CHECK(kappa_of_z(g, mixed, z, o) == doctest::Approx(e0 + 1.4).epsilon(1e-10));
    CHECK(kappa_of_z(g, mixed, ClusterDecomposition::from_first(2, {}), o) == doctest::Approx(2.4).epsilon(1e-10));

    const auto c2 = FiniteGroup::point_group("C2");
    auto sym = o;
    sym.symmetry.point_group = &c2;
    sym.symmetry.point_irrep = "A";
    CHECK_THROWS_WITH_AS(kappa_of_z(g, one, ClusterDecomposition::from_first(1, {}), sym),
                         doctest::Contains("no nonempty admissible branch"), Error);
}

TEST_CASE("threshold reports") {
    const auto g = MomentumGrid::make(6, 2.0, 1, SpinorMode::compressed);
    const auto o = quick();

    SUBCASE("one-particle atom") {
        const auto r = hvz_threshold(g, atom(1, 0.5), o);
        REQUIRE(r.decompositions.size() == 1);
        CHECK(r.kappa == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.branches[0].momentum == 0.0);
        CHECK(!r.partial);
    }

    SUBCASE("two electrons with repulsion") {
        auto s = atom(2, 0.5);
        s.pairs.push_back({0, 1, Potential::coulomb(-0.3)});
        const double e0 = kappa1(g, s, ClusterDecomposition::from_first(2, {0}), {}, nullptr, o.solver).value;
        auto no_prune = o;
        no_prune.prune = false;
        const auto r = hvz_threshold(g, s, no_prune);
        CHECK(r.kappa == doctest::Approx(e0 + 1.0).epsilon(1e-10));
        CHECK(r.kappa < 2.0);
        CHECK(r.decompositions.size() == 3);
        for (const auto& d : r.decompositions) CHECK(r.kappa <= d.kappa);
        REQUIRE(r.argmin.size() == 2);  // both single removals tie
        const auto pruned = hvz_threshold(g, s, o);
        CHECK(pruned.kappa == doctest::Approx(r.kappa).epsilon(1e-14));
    }

    SUBCASE("free particles: every branch equal") {
        SystemSpec s;
        s.masses = {1.0, 1.5};
        auto no_prune = o;
        no_prune.prune = false;
        const auto r = hvz_threshold(g, s, no_prune);
        CHECK(r.kappa == doctest::Approx(2.5).epsilon(1e-12));
        for (const auto& d : r.decompositions) CHECK(d.kappa == doctest::Approx(2.5).epsilon(1e-12));
        CHECK(r.argmin.size() == 3);

        // Ties are never pruned, so every argmin is reported.
        const auto p = hvz_threshold(g, s, o);
        CHECK(p.argmin.size() == 3);

        // A bound pair puts every single removal above the kinetic floor.
        s.pairs.push_back({0, 1, Potential::yukawa(0.8, 0.7)});
        const auto bound = hvz_threshold(g, s, o);
        int pruned = 0;
        for (const auto& b : bound.branches) pruned += b.pruned;
        CHECK(pruned == 2);
        CHECK(bound.kappa < 2.5);
        const auto exhaustive = hvz_threshold(g, s, no_prune);
        CHECK(exhaustive.kappa == bound.kappa);
    }

    SUBCASE("identical particles: orbit members agree and symmetry only raises kappa") {
        const auto s = [] {
            auto a = atom(2, 0.4);
            a.identical = {{0, 1}};
            return a;
        }();
        auto all = o;
        all.deduplicate = false;
        all.prune = false;
        const auto r = hvz_threshold(g, s, all);
        REQUIRE(r.decompositions.size() == 3);
        CHECK(r.decompositions[1].kappa == doctest::Approx(r.decompositions[2].kappa).epsilon(1e-10));
        const auto dedup = hvz_threshold(g, s, o);
        CHECK(dedup.decompositions.size() == 2);
        CHECK(dedup.decompositions[1].multiplicity == 2);
        CHECK(dedup.kappa == doctest::Approx(r.kappa).epsilon(1e-10));

        auto anti = o;
        anti.symmetry.permutation_irrep = "antisym";
        const auto ra = hvz_threshold(g, s, anti);
        CHECK(ra.kappa >= r.kappa - 1e-9);
        CHECK(ra.witness > 0.1);
        for (const auto& b : ra.branches)
            if (!b.z.first.empty()) CHECK((b.e1 == "triv" && b.e2 == "triv"));
    }

    SUBCASE("point-group branches with empty sectors") {
        auto s = atom(2, 0.4);
        const auto c2 = FiniteGroup::point_group("C2");
        auto sym = o;
        sym.symmetry.point_group = &c2;
        sym.symmetry.point_irrep = "A";
        sym.prune = false;
        const auto r = hvz_threshold(g, s, sym);
        int empty = 0;
        for (const auto& b : r.branches) empty += b.empty;
        CHECK(empty > 0);
        CHECK(!r.partial);
        const auto plain = hvz_threshold(g, s, o);
        CHECK(r.kappa >= plain.kappa - 1e-9);

        const auto dir = std::filesystem::temp_directory_path();
        write_threshold_csv(r, (dir / "hvz_thr.csv").string());
        write_threshold_text(r, (dir / "hvz_thr.txt").string());
        std::ifstream csv(dir / "hvz_thr.csv");
        std::string line;
        std::getline(csv, line);
        CHECK(line == "first,second,d1,e1,d2,e2,kappa1,kappa2,sum,momentum,flags");
        std::size_t rows = 0;
        while (std::getline(csv, line)) ++rows;
        CHECK(rows == r.branches.size());
        std::ifstream txt(dir / "hvz_thr.txt");
        std::string all_text((std::istreambuf_iterator<char>(txt)), std::istreambuf_iterator<char>());
        CHECK(all_text.find("kappa = ") != std::string::npos);
        std::filesystem::remove(dir / "hvz_thr.csv");
        std::filesystem::remove(dir / "hvz_thr.txt");
    }

    SUBCASE("inversion cannot reduce fibers and is reported as a failure") {
        const auto ci = FiniteGroup::point_group("Ci", InversionConvention::parity);
        auto sym = o;
        sym.symmetry.point_group = &ci;
        sym.symmetry.point_irrep = "Ag_half";
        const auto r = hvz_threshold(g, atom(1, 0.3), sym);
        CHECK(r.partial);
        CHECK(r.branches[0].failed);
    }
}
