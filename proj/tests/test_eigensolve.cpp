#include <doctest.h>

#include <cmath>

#include "dense_oracles.hpp"
#include "hvz/eigensolve.hpp"
#include "test_support.hpp"

using namespace hvz;
using testsupport::DenseOperator;

namespace {

SystemSpec one_particle(double mass, std::optional<Potential> v) {
    SystemSpec s;
    s.masses = {mass};
    s.external = {std::move(v)};
    return s;
}

CMat random_hermitian(std::mt19937_64& rng, int d) {
    const auto r = testsupport::random_state(rng, static_cast<std::size_t>(d) * d);
    CMat m = Eigen::Map<const CMat>(r.data(), d, d);
    return (m + m.adjoint()) / 2.0;
}

std::string error_code(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "ok";
}

}  // namespace

TEST_CASE("free particle ground state is the rest mass") {
    const auto g = MomentumGrid::make(8, 4.0, 1, SpinorMode::compressed);
    const auto h = assemble_full(g, one_particle(1.3, std::nullopt));
    EigenOptions opt;
    opt.count = 1;
    const auto r = lowest_eigenpairs(h, opt);
    REQUIRE(r.all_converged());
    CHECK(r.values[0] == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(r.residuals[0] <= 1e-10);
    CHECK(r.seed == 1);
}

TEST_CASE("random dense Hermitian matrix") {
    std::mt19937_64 rng(3);
    const DenseOperator op(random_hermitian(rng, 300));
    const Eigen::SelfAdjointEigenSolver<CMat> es(op.matrix());
    EigenOptions opt;
    opt.count = 5;
    opt.subspace = 30;
    opt.max_matvecs = 20000;
    const auto r = lowest_eigenpairs(op, opt);
    REQUIRE(r.all_converged());
    for (int i = 0; i < 5; ++i) {
        CHECK(r.values[i] == doctest::Approx(es.eigenvalues()[i]).epsilon(1e-9));
        CHECK(r.residuals[i] <= 1e-10 * (std::abs(r.values[i]) + 1.0));
        const CVec hv = op.matrix() * r.vectors[i];
        CHECK((hv - r.values[i] * r.vectors[i]).norm() == doctest::Approx(r.residuals[i]).epsilon(1e-6).scale(1e-12));
    }
    CHECK(r.restarts > 0);
    for (std::size_t i = 1; i < r.lowest_history.size(); ++i)
        CHECK(r.lowest_history[i] <= r.lowest_history[i - 1] + 1e-12);

    // Deterministic under a fixed seed.
    const auto again = lowest_eigenpairs(op, opt);
    CHECK(again.values == r.values);
    CHECK(again.matvecs == r.matvecs);
}

TEST_CASE("coulomb ground state agrees with the dense oracle") {
    const auto g = MomentumGrid::make(4, 2.0, 1, SpinorMode::compressed);
    const auto pot = Potential::coulomb(0.5);
    const CMat dense = testsupport::dense_one_particle(g, 1.0, &pot);
    const Eigen::SelfAdjointEigenSolver<CMat> es(dense);
    const auto h = assemble_full(g, one_particle(1.0, pot));
    EigenOptions opt;
    opt.count = 3;
    const auto r = lowest_eigenpairs(h, opt);
    REQUIRE(r.all_converged());
    for (int i = 0; i < 3; ++i) CHECK(std::abs(r.values[i] - es.eigenvalues()[i]) < 1e-8);
}

TEST_CASE("restarts keep the lowest Ritz value monotone") {
    const auto g = MomentumGrid::make(8, 3.0, 1, SpinorMode::compressed);
    const auto h = assemble_full(g, one_particle(1.0, Potential::coulomb(0.6)));
    EigenOptions opt;
    opt.count = 2;
    opt.subspace = 8;
    opt.max_matvecs = 20000;
    const auto r = lowest_eigenpairs(h, opt);
    REQUIRE(r.all_converged());
    CHECK(r.restarts > 1);
    for (std::size_t i = 1; i < r.lowest_history.size(); ++i)
        CHECK(r.lowest_history[i] <= r.lowest_history[i - 1] + 1e-12);
}

TEST_CASE("partial results and request errors") {
    std::mt19937_64 rng(9);
    const DenseOperator op(random_hermitian(rng, 200));
    EigenOptions opt;
    opt.count = 3;
    opt.subspace = 10;
    opt.max_matvecs = 15;
    const auto r = lowest_eigenpairs(op, opt);
    CHECK_FALSE(r.all_converged());
    CHECK(r.values.size() == 3);

    opt.count = 201;
    CHECK(error_code([&] { lowest_eigenpairs(op, opt); }) == "invalid_request");
    opt.count = 0;
    CHECK(error_code([&] { lowest_eigenpairs(op, opt); }) == "invalid_request");
}

TEST_CASE("projected solves") {
    std::mt19937_64 rng(13);
    // Block-diagonal operator commuting with the projector onto even indices.
    const int n = 120;
    CMat a = random_hermitian(rng, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if ((i + j) % 2) a(i, j) = 0.0;
    const DenseOperator op(a);
    CMat p = CMat::Zero(n, n);
    for (int i = 0; i < n; i += 2) p(i, i) = 1.0;
    const DenseOperator proj(p);

    CMat even = CMat::Zero(n / 2, n / 2);
    for (int i = 0; i < n / 2; ++i)
        for (int j = 0; j < n / 2; ++j) even(i, j) = a(2 * i, 2 * j);
    const Eigen::SelfAdjointEigenSolver<CMat> es(even);

    EigenOptions opt;
    opt.count = 4;
    opt.projector = &proj;
    const auto r = lowest_eigenpairs(op, opt);
    REQUIRE(r.all_converged());
    for (int i = 0; i < 4; ++i) {
        CHECK(r.values[i] == doctest::Approx(es.eigenvalues()[i]).epsilon(1e-9));
        CHECK((p * r.vectors[i] - r.vectors[i]).norm() <= 1e-8);
    }

    // Rank-2 projector: too small for three pairs, exact for two.
    CMat p2 = CMat::Zero(n, n);
    p2(0, 0) = p2(2, 2) = 1.0;
    CMat b = a;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if ((i == 0 || i == 2) != (j == 0 || j == 2)) b(i, j) = 0.0;
    const DenseOperator op2(b);
    const DenseOperator proj2(p2);
    opt.projector = &proj2;
    opt.count = 3;
    CHECK(error_code([&] { lowest_eigenpairs(op2, opt); }) == "subspace_too_small");
    opt.count = 2;
    const auto r2 = lowest_eigenpairs(op2, opt);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> small(
        (Eigen::Matrix2cd() << b(0, 0), b(0, 2), b(2, 0), b(2, 2)).finished());
    CHECK(r2.values[0] == doctest::Approx(small.eigenvalues()[0]).epsilon(1e-10));
    CHECK(r2.values[1] == doctest::Approx(small.eigenvalues()[1]).epsilon(1e-10));

    const DenseOperator zero(CMat::Zero(n, n));
    opt.projector = &zero;
    CHECK(error_code([&] { lowest_eigenpairs(op, opt); }) == "empty_subspace");

    const DenseOperator generic(random_hermitian(rng, n));
    opt.projector = &proj;
    CHECK(error_code([&] { lowest_eigenpairs(generic, opt); }) == "projector_commutation");
}
