#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "hvz/eigensolve.hpp"
#include "hvz/symmetry.hpp"
#include "test_support.hpp"

using namespace hvz;

namespace {

SpinorField random_field(const MomentumGrid& g, std::mt19937_64& rng,
                         Representation rep = Representation::momentum) {
    return SpinorField(g, rep, testsupport::random_state(rng, g.state_dim()));
}

double distance(const SpinorField& a, const SpinorField& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
    return d;
}

SpinorField combine(const SpinorField& a, cplx ca, const SpinorField& b, cplx cb) {
    std::vector<cplx> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = ca * a.values()[i] + cb * b.values()[i];
    return SpinorField(a.grid(), a.representation(), std::move(v));
}

std::string error_code(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "ok";
}

bool has_pair(const std::vector<BranchPair>& v, const std::string& a, const std::string& b, int mult) {
    return std::any_of(v.begin(), v.end(),
                       [&](const BranchPair& p) { return p.first == a && p.second == b && p.multiplicity == mult; });
}

}  // namespace

TEST_CASE("built-in character tables") {
    struct Expect {
        FiniteGroup group;
        int order;
    };
    const std::vector<Expect> groups{
        {FiniteGroup::point_group("C1"), 1},
        {FiniteGroup::point_group("C2"), 4},
        {FiniteGroup::point_group("Ci"), 4},
        {FiniteGroup::point_group("C2v"), 8},
        {FiniteGroup::point_group("C2v", InversionConvention::parity), 8},
        {FiniteGroup::permutation_group(2, {{0, 1}}), 2},
        {FiniteGroup::permutation_group(3, {{0, 1, 2}}), 6},
        {FiniteGroup::permutation_group(4, {{0, 1}, {2, 3}}), 4},
        {FiniteGroup::permutation_group(3, {}), 1},
    };
    for (const auto& [g, order] : groups) {
        CHECK(g.order() == order);
        int dims = 0;
        for (const auto& r : g.irreps()) dims += r.dim * r.dim;
        CHECK(dims == order);
        CHECK(g.table_defect() < 1e-12);
        // Characters are class functions.
        for (const auto& cls : g.conjugacy_classes())
            for (const auto& r : g.irreps())
                for (int e : cls) CHECK(std::abs(r.characters[e] - r.characters[cls[0]]) < 1e-12);
        // Number of classes equals number of irreps.
        CHECK(g.conjugacy_classes().size() == g.irreps().size());
    }
    const auto s3 = FiniteGroup::permutation_group(3, {{0, 1, 2}});
    CHECK(s3.irrep("std").dim == 2);
    CHECK(error_code([&] { s3.irrep("bogus"); }) == "unknown_irrep");
    CHECK(error_code([] { FiniteGroup::point_group("Oh"); }) == "unknown_group");
    CHECK(error_code([] { FiniteGroup::permutation_group(4, {{0, 1, 2, 3}}); }) == "unsupported_group");
    const auto s22 = FiniteGroup::permutation_group(4, {{0, 1}, {2, 3}});
    CHECK(s22.irrep("antisym*sym").dim == 1);
}

TEST_CASE("permutation projectors") {
    std::mt19937_64 rng(1);
    const auto g1 = MomentumGrid::make(4, 2.0, 1, SpinorMode::compressed);
    const auto g2 = g1.with_particles(2);
    const auto s2 = FiniteGroup::permutation_group(2, {{0, 1}});
    const std::vector<double> masses{1.0, 1.0};

    const auto a = random_field(g1, rng), b = random_field(g1, rng);
    std::vector<cplx> ab(g2.state_dim()), ba(g2.state_dim());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) {
            ab[i * b.size() + j] = a.values()[i] * b.values()[j];
            ba[i * b.size() + j] = b.values()[i] * a.values()[j];
        }
    const SpinorField fab(g2, Representation::momentum, ab), fba(g2, Representation::momentum, ba);
    CHECK(distance(project(s2, "antisym", fab, masses), combine(fab, 0.5, fba, -0.5)) < 1e-14);
    const auto sym = combine(fab, 1.0, fba, 1.0);
    CHECK(distance(project(s2, "sym", sym, masses), sym) < 1e-14);

    // Completeness for S3 on ten random fields.
    const auto g3 = g1.with_particles(3);
    const auto s3 = FiniteGroup::permutation_group(3, {{0, 1, 2}});
    const std::vector<double> m3{1.0, 1.0, 1.0};
    for (int t = 0; t < 10; ++t) {
        const auto f = random_field(g3, rng);
        std::vector<cplx> sum(f.size(), 0.0);
        for (const auto& r : s3.irreps()) {
            const auto p = project(s3, r.label, f, m3);
            for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += p.values()[i];
        }
        CHECK(distance(SpinorField(g3, Representation::momentum, sum), f) < 1e-12);
    }

    // Idempotent and Hermitian.
    const auto f = random_field(g3, rng), h = random_field(g3, rng);
    for (const auto& r : s3.irreps()) {
        const auto pf = project(s3, r.label, f, m3);
        CHECK(distance(project(s3, r.label, pf, m3), pf) < 1e-12);
        CHECK(std::abs(pf.inner(h) - f.inner(project(s3, r.label, h, m3))) < 1e-12 * f.norm() * h.norm());
    }
}

TEST_CASE("point-group projectors") {
    std::mt19937_64 rng(2);
    const auto g = MomentumGrid::make(4, 2.0, 1, SpinorMode::full);
    const std::vector<double> mass{1.0};

    // Literal inversion maps f(p) to f(-p).
    const auto ci = FiniteGroup::point_group("Ci");
    int inv = -1;
    for (int e = 0; e < ci.order(); ++e)
        if (ci.elements()[e].label == "I") inv = e;
    REQUIRE(inv >= 0);
    const auto f = random_field(g, rng);
    const auto moved = apply_element(ci, inv, f, mass);
    double err = 0.0;
    for (std::size_t s = 0; s < g.sites(); ++s) {
        const auto c = g.coords(s);
        const std::size_t m = g.site_of({-c[0], -c[1], -c[2]});
        for (int a = 0; a < 4; ++a) err = std::max(err, std::abs(moved.values()[4 * s + a] - f.values()[4 * m + a]));
    }
    CHECK(err == 0.0);

    // Odd field: annihilated by the even projector.
    const auto odd = combine(f, 0.5, moved, -0.5);
    CHECK(project(ci, "Ag_half", odd, mass).norm() < 1e-14);
    CHECK(distance(project(ci, "Au_half", odd, mass), odd) < 1e-14);
    // Single-particle spinors carry Ebar = -1: single-valued irreps vanish.
    CHECK(project(ci, "Ag", f, mass).norm() < 1e-14);

    for (const std::string name : {"C2", "C2v", "Ci"}) {
        const auto grp = FiniteGroup::point_group(name);
        const auto h = random_field(g, rng);
        std::vector<cplx> sum(f.size(), 0.0);
        for (const auto& r : grp.irreps()) {
            const auto pf = project(grp, r.label, f, mass);
            CHECK(distance(project(grp, r.label, pf, mass), pf) < 1e-12);
            CHECK(std::abs(pf.inner(h) - f.inner(project(grp, r.label, h, mass))) < 1e-12 * f.norm() * h.norm());
            for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += pf.values()[i];
        }
        CHECK(distance(SpinorField(g, Representation::momentum, sum), f) < 1e-12);
    }

    // Compressed mode: proper groups and the parity convention are fine.
    const auto gc = g.with_mode(SpinorMode::compressed);
    const auto fc = random_field(gc, rng);
    const auto c2 = FiniteGroup::point_group("C2");
    std::vector<cplx> sum(fc.size(), 0.0);
    for (const auto& r : c2.irreps()) {
        const auto pf = project(c2, r.label, fc, mass);
        CHECK(distance(project(c2, r.label, pf, mass), pf) < 1e-12);
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += pf.values()[i];
    }
    CHECK(distance(SpinorField(gc, Representation::momentum, sum), fc) < 1e-12);
    const auto c2v_parity = FiniteGroup::point_group("C2v", InversionConvention::parity);
    const auto pe = project(c2v_parity, "E_half", fc, mass);
    CHECK(distance(project(c2v_parity, "E_half", pe, mass), pe) < 1e-12);
    const auto c2v_literal = FiniteGroup::point_group("C2v");
    for (int e = 0; e < c2v_literal.order(); ++e)
        CHECK(error_code([&] { apply_element(c2v_literal, e, fc, mass); }) ==
              (c2v_literal.elements()[e].improper ? "improper_compressed" : "ok"));

    // Position representation in full mode commutes with the transform.
    const auto pos = transform(f, Representation::position);
    const auto c2v = FiniteGroup::point_group("C2v");
    const auto lhs = transform(project(c2v, "E_half", pos, mass), Representation::momentum);
    CHECK(distance(lhs, project(c2v, "E_half", f, mass)) < 1e-12);
}

TEST_CASE("row projectors") {
    std::mt19937_64 rng(3);
    const auto g = MomentumGrid::make(4, 2.0, 1, SpinorMode::full);
    const std::vector<double> mass{1.0};
    const auto c2v = FiniteGroup::point_group("C2v");
    const auto f = random_field(g, rng);
    const auto sum = combine(row_project(c2v, "E_half", 0, 0, f, mass), 1.0, row_project(c2v, "E_half", 1, 1, f, mass), 1.0);
    CHECK(distance(sum, project(c2v, "E_half", f, mass)) < 1e-12);
    for (int l = 0; l < 2; ++l)
        for (int k = 0; k < 2; ++k)
            for (int kp = 0; kp < 2; ++kp)
                for (int m = 0; m < 2; ++m) {
                    const auto twice =
                        row_project(c2v, "E_half", l, k, row_project(c2v, "E_half", kp, m, f, mass), mass);
                    if (k == kp)
                        CHECK(distance(twice, row_project(c2v, "E_half", l, m, f, mass)) < 1e-12);
                    else
                        CHECK(twice.norm() < 1e-12);
                }
    // Partial isometry: P_lk maps ran P_kk isometrically.
    const auto pkk = row_project(c2v, "E_half", 1, 1, f, mass);
    CHECK(row_project(c2v, "E_half", 0, 1, pkk, mass).norm() == doctest::Approx(pkk.norm()).epsilon(1e-12));
    CHECK(distance(row_project(c2v, "A2", 0, 0, f, mass), project(c2v, "A2", f, mass)) < 1e-14);
    CHECK(error_code([&] { row_project(c2v, "E_half", 2, 0, f, mass); }) == "invalid_request");
}

TEST_CASE("branching") {
    const auto s2 = FiniteGroup::permutation_group(2, {{0, 1}});
    for (const std::string e : {"sym", "antisym"}) {
        const auto br = permutation_branching(s2, e, {{0, 1}}, ClusterDecomposition::from_first(2, {0}));
        REQUIRE(br.size() == 1);
        CHECK(has_pair(br, "triv", "triv", 1));
    }
    const auto s3 = FiniteGroup::permutation_group(3, {{0, 1, 2}});
    const auto z = ClusterDecomposition::from_first(3, {0, 1});
    const auto std_br = permutation_branching(s3, "std", {{0, 1, 2}}, z);
    CHECK(std_br.size() == 2);
    CHECK(has_pair(std_br, "sym", "triv", 1));
    CHECK(has_pair(std_br, "antisym", "triv", 1));
    const auto anti = permutation_branching(s3, "antisym", {{0, 1, 2}}, z);
    CHECK(anti.size() == 1);
    CHECK(has_pair(anti, "antisym", "triv", 1));

    // Empty first cluster: the restriction is E itself.
    const auto all = permutation_branching(s3, "std", {{0, 1, 2}}, ClusterDecomposition::from_first(3, {}));
    CHECK(all.size() == 1);
    CHECK(has_pair(all, "triv", "std", 1));

    // Exhaustive: sum of multiplicities times dimensions equals dim E.
    for (const auto& r : s3.irreps())
        for (const auto& first : std::vector<std::vector<int>>{{}, {0}, {2}, {0, 2}, {1, 2}, {0, 1, 2}}) {
            const auto zz = ClusterDecomposition::from_first(3, first);
            const auto br = permutation_branching(s3, r.label, {{0, 1, 2}}, zz);
            const auto g1 = cluster_permutation_group({{0, 1, 2}}, zz.first);
            const auto g2 = cluster_permutation_group({{0, 1, 2}}, zz.second);
            int total = 0;
            for (const auto& p : br) total += p.multiplicity * g1.irrep(p.first).dim * g2.irrep(p.second).dim;
            CHECK(total == r.dim);
        }

    const auto c2v = FiniteGroup::point_group("C2v");
    const auto eb = point_branching(c2v, "E_half");
    CHECK(has_pair(eb, "A1", "E_half", 1));
    CHECK(has_pair(eb, "E_half", "B2", 1));
    const auto a1 = point_branching(c2v, "A1");
    CHECK(has_pair(a1, "E_half", "E_half", 1));
    CHECK(has_pair(a1, "B1", "B1", 1));
    CHECK_FALSE(has_pair(a1, "A1", "A2", 1));
}

TEST_CASE("projectors commute with invariant Hamiltonians") {
    std::mt19937_64 rng(4);
    const auto g2 = MomentumGrid::make(4, 2.0, 2, SpinorMode::compressed);
    SystemSpec s;
    s.masses = {1.0, 1.0};
    s.external = {Potential::coulomb(0.4), Potential::coulomb(0.4)};
    s.pairs = {{0, 1, Potential::coulomb(-0.3)}};
    s.identical = {{0, 1}};
    const auto h = assemble_full(g2, s);
    const SymmetryProjector pe(FiniteGroup::permutation_group(2, s.identical), "antisym", g2, s.masses);
    CHECK(commutation_defect(h, pe, 7) < 1e-8);
    const SymmetryProjector pd(FiniteGroup::point_group("C2"), "A", g2, s.masses);
    CHECK(commutation_defect(h, pd, 8) < 1e-8);
    const SymmetryProjector pp(FiniteGroup::point_group("C2v", InversionConvention::parity), "A1", g2, s.masses);
    CHECK(commutation_defect(h, pp, 9) < 1e-8);
    const ProductOperator both(pd, pe);
    CHECK(witness_nonzero(both, 1) > 0.1);

    // One-particle spinors never carry single-valued C2 irreps.
    const auto g1 = g2.with_particles(1);
    const SymmetryProjector single(FiniteGroup::point_group("C2"), "A", g1, {1.0});
    CHECK(witness_nonzero(single, 1) < 1e-14);
}

TEST_CASE("loaded tables") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto path = (dir / "hvz_c2_table.txt").string();
    {
        std::ofstream os(path);
        os << "# binary C2 about z\n"
              "group C2file point\n"
              "element E point 0 0 1 0 proper\n"
              "element C point 0 0 1 1 proper\n"
              "element Eb point 0 0 1 2 proper\n"
              "element Cb point 0 0 1 3 proper\n"
              "irrep A 1\nirrep B 1\nirrep Ea 1\nirrep Eb 1\n";
        const char* el[4] = {"E", "C", "Eb", "Cb"};
        const cplx i(0.0, 1.0);
        const cplx gen[4] = {1.0, -1.0, i, -i};
        const char* ir[4] = {"A", "B", "Ea", "Eb"};
        for (int r = 0; r < 4; ++r)
            for (int e = 0; e < 4; ++e) {
                const cplx v = std::pow(gen[r], e);
                os << "rep " << el[e] << ' ' << ir[r] << ' ' << v.real() << ' ' << v.imag() << '\n';
            }
    }
    const auto loaded = FiniteGroup::load(path);
    const auto builtin = FiniteGroup::point_group("C2");
    CHECK(loaded.order() == 4);
    CHECK(loaded.table_defect() < 1e-12);
    const std::pair<const char*, const char*> match[] = {{"A", "A"}, {"B", "B"}, {"Ea", "Ea_half"}, {"Eb", "Eb_half"}};
    for (const auto& [a, b] : match)
        for (int e = 0; e < 4; ++e) {
            const int j = builtin.find_element(loaded.elements()[e]);
            REQUIRE(j >= 0);
            CHECK(std::abs(loaded.irrep(a).characters[e] - builtin.irrep(b).characters[j]) < 1e-12);
        }

    {
        std::ofstream os(path);
        os << "group S2file permutation 2\nelement e perm 0 1\nelement s perm 1 0\nirrep a 1\nirrep b 1\n"
              "rep e a 1 0\nrep s a 1 0\nrep e b 1 0\n";
    }
    CHECK(error_code([&] { FiniteGroup::load(path); }) == "representation_missing");
    {
        std::ofstream os(path);
        os << "group bad point\nelement E point 0 0 1 0 proper\nelement C6 point 0 0 1 0.3333333333333333 proper\nirrep A 1\n"
              "rep E A 1 0\nrep C6 A 1 0\n";
    }
    CHECK(error_code([&] { FiniteGroup::load(path); }) == "lattice_incompatible");
    {
        std::ofstream os(path);
        os << "group open point\nelement E point 0 0 1 0 proper\nelement C point 0 0 1 1 proper\nirrep A 1\nirrep B 1\n"
              "rep E A 1 0\nrep C A 1 0\nrep E B 1 0\nrep C B -1 0\n";
    }
    CHECK(error_code([&] { FiniteGroup::load(path); }) == "inconsistent_table");
    std::filesystem::remove(path);
}
