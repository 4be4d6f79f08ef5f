#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "hvz/dirac.hpp"
#include "hvz/localization.hpp"

using namespace hvz;

namespace {

constexpr double pi = std::numbers::pi;

MomentumGrid full(int n, double box, int particles = 1) {
    return MomentumGrid::make(n, pi * n / box, particles, SpinorMode::full, default_memory_budget);
}

// Reference partition written straight from the product formula.
double eta_ref(double t) {
    if (t <= 1.0) return 0.0;
    if (t >= 2.0) return 1.0;
    const double s = t - 1.0;
    const double theta = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    const double r = std::sin(0.5 * pi * theta);
    return r * r;
}

std::vector<double> chi_ref(int n, std::span<const double> x) {
    auto at = [&](int k) { return Vec3(x[3 * k], x[3 * k + 1], x[3 * k + 2]); };
    double big = 0.0;
    for (double v : x) big += v * v;
    big = std::sqrt(big);
    const double c = std::pow(n, -1.5), k = n == 1 ? 2.0 : 1.0;
    std::vector<double> zeta(std::size_t{1} << n);
    zeta[0] = 1.0 - eta_ref(2.0 * big);
    for (std::size_t mask = 1; mask < zeta.size(); ++mask) {
        double z = eta_ref(2.0 * big);
        for (int b = 0; b < n; ++b) {
            if (!((mask >> b) & 1u)) continue;
            z *= eta_ref(k * at(b).norm() / (big * c));
            for (int a = 0; a < n; ++a)
                if (!((mask >> a) & 1u)) z *= eta_ref(k * (at(a) - at(b)).norm() / (big * c));
        }
        zeta[mask] = z;
    }
    double sum = 0.0;
    for (double z : zeta) sum += z;
    for (auto& z : zeta) z = std::sqrt(z / sum);
    return zeta;
}

std::vector<double> random_config(std::mt19937_64& rng, int n, double max_radius) {
    std::uniform_real_distribution<double> u(-1.0, 1.0), r(0.0, max_radius);
    std::vector<double> x(3 * n);
    double len = 0.0;
    for (auto& v : x) {
        v = u(rng);
        len += v * v;
    }
    const double target = r(rng) / std::sqrt(len);
    for (auto& v : x) v *= target;
    return x;
}

double max_abs_diff(const SpinorField& a, const SpinorField& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a.values()[i] - b.values()[i]));
    return s;
}

}  // namespace

TEST_CASE("smooth step, its roots and their derivatives") {
    CHECK(smooth_step(0.5).value == 0.0);
    CHECK(smooth_step(1.0).value == 0.0);
    CHECK(smooth_step(2.0).value == 1.0);
    CHECK(smooth_step(1.5).value == doctest::Approx(0.5).epsilon(1e-15));
    const double h = 1e-6;
    for (double t : {1.1, 1.37, 1.5, 1.82, 1.97}) {
        for (auto f : {smooth_step, step_root, step_coroot}) {
            const auto j = f(t);
            CHECK(j.first == doctest::Approx((f(t + h).value - f(t - h).value) / (2 * h)).epsilon(1e-7));
            CHECK(j.second == doctest::Approx((f(t + h).first - f(t - h).first) / (2 * h)).epsilon(1e-6));
        }
        const double r = step_root(t).value, c = step_coroot(t).value;
        CHECK(r * r + c * c == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(step(t) == doctest::Approx(eta_ref(t)).epsilon(1e-14));
    }
    // Two continuous derivatives across the junctions.
    for (double t : {1.0, 2.0}) {
        for (auto f : {step_root, step_coroot}) {
            const auto a = f(t - 1e-9), b = f(t + 1e-9);
            CHECK(std::abs(a.value - b.value) < 1e-8);
            CHECK(std::abs(a.first - b.first) < 1e-6);
            CHECK(std::abs(a.second - b.second) < 1e-6);
        }
    }
}

TEST_CASE("partition matches the product formula") {
    std::mt19937_64 rng(3);
    for (int n = 1; n <= 3; ++n) {
        const auto p = PartitionOfUnity::build(n, 1.0);
        REQUIRE(p.decompositions().size() == (std::size_t{1} << n));
        CHECK(p.decompositions()[0].second.empty());
        CHECK(p.separation_constant() == doctest::Approx(std::pow(n, -1.5)));
        for (int t = 0; t < 1000; ++t) {
            const auto x = random_config(rng, n, 3.0);
            const auto chi = p.chi(x);
            const auto ref = chi_ref(n, x);
            double sum = 0.0;
            for (std::size_t z = 0; z < chi.size(); ++z) {
                CHECK(std::abs(chi[z] * chi[z] - ref[z] * ref[z]) < 1e-12);
                sum += chi[z] * chi[z];
            }
            CHECK(std::abs(sum - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("one-particle partition near the origin and far away") {
    const auto p = PartitionOfUnity::build(1, 1.0);
    const std::vector<double> near{0.1, 0.2, -0.1}, far{30.0, -4.0, 2.0};
    const auto a = p.chi(near), b = p.chi(far);
    CHECK(a[0] == 1.0);
    CHECK(a[1] == 0.0);
    CHECK(b[0] == 0.0);
    CHECK(b[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(PartitionOfUnity::separation(p.decompositions()[0], far) == std::numeric_limits<double>::infinity());
    CHECK(PartitionOfUnity::separation(p.decompositions()[1], far) == doctest::Approx(Vec3(30, -4, 2).norm()));
}

TEST_CASE("partition support keeps clusters apart") {
    std::mt19937_64 rng(5);
    for (int n = 2; n <= 3; ++n) {
        const auto p = PartitionOfUnity::build(n, 1.0);
        int hits = 0;
        for (int t = 0; t < 2000; ++t) {
            const auto x = random_config(rng, n, 3.0);
            double size = 0.0;
            for (double v : x) size += v * v;
            size = std::sqrt(size);
            const auto chi = p.chi(x);
            for (std::size_t z = 1; z < chi.size(); ++z) {
                if (chi[z] <= 1e-12) continue;
                ++hits;
                CHECK(PartitionOfUnity::separation(p.decompositions()[z], x) > p.separation_constant() * size);
            }
            if (chi[0] > 1e-12) CHECK(size < 1.0);
        }
        CHECK(hits > 100);
    }
}

TEST_CASE("partition jets agree with finite differences") {
    const auto p = PartitionOfUnity::build(3, 1.7);
    const std::vector<double> x{1.3, -0.4, 0.7, -2.1, 0.9, 1.5, 0.2, 0.4, -0.3};
    const auto jets = p.chi_jets(x);
    const double h = 1e-5;
    for (int i = 0; i < 9; ++i) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const auto jp = p.chi_jets(xp), jm = p.chi_jets(xm);
        for (std::size_t z = 0; z < jets.size(); ++z) {
            CHECK(jets[z].gradient[i] == doctest::Approx((jp[z].value - jm[z].value) / (2 * h)).epsilon(1e-6).scale(1.0));
            for (int k = 0; k < 9; ++k)
                CHECK(jets[z].hessian(k, i) ==
                      doctest::Approx((jp[z].gradient[k] - jm[z].gradient[k]) / (2 * h)).epsilon(1e-5).scale(1.0));
        }
    }
    const auto values = p.chi(x);
    for (std::size_t z = 0; z < jets.size(); ++z) CHECK(jets[z].value == values[z]);
}

TEST_CASE("scaled partition gradients shrink like 1/R") {
    std::mt19937_64 rng(9);
    const auto y = random_config(rng, 2, 1.0);
    std::vector<double> yy(y);
    for (auto& v : yy) v *= 1.3 / std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
    double previous = 0.0;
    for (double r : {1.0, 2.0, 4.0, 8.0}) {
        const auto p = PartitionOfUnity::build(2, r);
        std::vector<double> x(yy);
        for (auto& v : x) v *= r;
        double sup = 0.0;
        for (const auto& j : p.chi_jets(x)) sup = std::max(sup, j.gradient.norm());
        if (previous > 0.0) CHECK(sup * 2.0 == doctest::Approx(previous).epsilon(1e-12));
        previous = sup;
    }
}

TEST_CASE("radial cutoffs") {
    const auto bump = radial_bump(2.0);
    const auto outer = radial_step(2.0);
    CHECK(bump.value(Vec3(1.0, 1.0, 0.0)) == 1.0);
    CHECK(bump.value(Vec3(5.0, 0.0, 0.0)) == 0.0);
    const Vec3 x(2.2, 1.1, -1.4);
    CHECK(bump.value(x) + outer.value(x) == doctest::Approx(1.0));
    const double h = 1e-6;
    for (int a = 0; a < 3; ++a) {
        Vec3 e = Vec3::Zero();
        e[a] = h;
        CHECK(bump.gradient(x)[a] == doctest::Approx((bump.value(x + e) - bump.value(x - e)) / (2 * h)).epsilon(1e-7));
        CHECK(outer.gradient(x)[a] == doctest::Approx(-bump.gradient(x)[a]));
    }
    CHECK_THROWS_AS(radial_bump(0.0), Error);
}

TEST_CASE("kernel symbol reproduces the positive projector") {
    const auto& d = dirac_matrices();
    for (double m : {0.5, 1.0, 3.0}) {
        for (const Vec3& p : {Vec3(0, 0, 0), Vec3(0.3, -0.2, 0.1), Vec3(2.0, 1.0, -3.0)}) {
            const double w = std::sqrt(p.squaredNorm() + m * m);
            const Mat4 expected = 0.5 * Mat4::Identity() +
                                  (0.5 / w) * (p[0] * d.alpha[0] + p[1] * d.alpha[1] + p[2] * d.alpha[2] + m * d.beta);
            CHECK((kernel_symbol(p, Mass(m)) - expected).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("kernel application agrees with the momentum projector") {
    const auto g = full(8, 2.0);  // spacing 1/4
    SpinorField f(g, Representation::position);
    for (std::size_t s = 0; s < g.sites(); ++s) {
        const double w = std::exp(-g.position(s).squaredNorm() / 0.18);
        f.values()[4 * s] = w;
        f.values()[4 * s + 3] = cplx(0.0, 0.5 * w);
    }
    const auto kern = bessel_kernel_apply(f, Mass(1.0));
    CHECK(kern.representation() == Representation::position);
    const auto proj = transform(apply_projector(transform(f, Representation::momentum), 0, Mass(1.0)),
                                Representation::position);
    CHECK(max_abs_diff(kern, proj) < 1e-4 * std::abs(f.values()[0]) + 1e-12);

    const auto coarse = full(8, 4.0);
    CHECK_THROWS_WITH_AS(bessel_kernel_apply(SpinorField(coarse, Representation::momentum), Mass(1.0)),
                         doctest::Contains("exceeds"), Error);
}

TEST_CASE("commutators") {
    const auto g = full(6, 12.0);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> gauss;
    std::vector<cplx> v(g.state_dim());
    for (auto& c : v) c = {gauss(rng), gauss(rng)};
    const SpinorField f(g, Representation::momentum, v);
    const double masses[] = {1.0};

    const auto flat = [](std::span<const Vec3>) { return 2.5; };
    double vanish = 0.0;
    for (cplx c : apply_commutator(f, flat, {0}, masses).values()) vanish = std::max(vanish, std::abs(c));
    CHECK(vanish < 1e-12);

    // Dense oracle: top singular value of [chi, Lambda] restricted to the band.
    const auto cut = radial_bump(2.0);
    const auto c = [&](std::span<const Vec3> x) { return cut.value(x[0]); };
    std::vector<std::size_t> band;
    for (std::size_t s = 0; s < g.sites(); ++s)
        if (g.momentum(s).cwiseAbs().maxCoeff() <= 0.5 * g.p_max() + 1e-12)
            for (int a = 0; a < 4; ++a) band.push_back(4 * s + a);
    Eigen::MatrixXcd t(g.state_dim(), band.size());
    for (std::size_t j = 0; j < band.size(); ++j) {
        SpinorField e(g, Representation::momentum);
        e.values()[band[j]] = 1.0;
        const auto col = apply_commutator(e, c, {0}, masses);
        for (std::size_t i = 0; i < g.state_dim(); ++i) t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col.values()[i];
    }
    const double exact = Eigen::JacobiSVD<Eigen::MatrixXcd>(t).singularValues()[0];
    PowerOptions opts;
    opts.tol = 1e-12;
    opts.max_iterations = 2000;
    const auto est = commutator_norm(g, cut, Mass(1.0), opts);
    CHECK(est.converged);
    CHECK(est.norm == doctest::Approx(exact).epsilon(1e-4));
    CHECK(est.norm <= exact * (1.0 + 1e-9));

    const Cutoff constant{[](const Vec3&) { return 0.4; }, [](const Vec3&) { return Vec3::Zero().eval(); }};
    CHECK(commutator_norm(g, constant, Mass(1.0)).norm < 1e-12);
    CHECK_THROWS_AS(commutator_norm(g.with_mode(SpinorMode::compressed), cut, Mass(1.0)), Error);
}

TEST_CASE("planar commutator reduces the three-dimensional one") {
    // A slab cutoff on a cubic lattice against the one-dimensional reduction on
    // the same normal lattice; the transverse lattice momenta in the band are sampled.
    const auto g = full(8, 16.0);
    const auto profile = [](double z) { return 1.0 + 0.4 * std::cos(2.0 * pi * z / 16.0); };
    const Cutoff slab{[&](const Vec3& x) { return profile(x[2]); },
                      [](const Vec3& x) { return Vec3(0.0, 0.0, -0.4 * 2.0 * pi / 16.0 * std::sin(2.0 * pi * x[2] / 16.0)); }};
    PowerOptions opts;
    opts.tol = 1e-13;
    opts.max_iterations = 3000;
    const auto cube = commutator_norm(g, slab, Mass(1.0), opts);

    PlanarOptions planar;
    planar.points = 8;
    planar.box = 16.0;
    planar.power = opts;
    planar.transverse.clear();
    const double dp = 2.0 * pi / 16.0;
    for (int a = -2; a <= 2; ++a)
        for (int b = -2; b <= 2; ++b) planar.transverse.push_back(dp * std::hypot(a, b));
    const auto flat = planar_commutator_norm(profile, Mass(1.0), planar);
    CHECK(flat.norm == doctest::Approx(cube.norm).epsilon(1e-5));

    planar.transverse = {0.0};
    planar.points = 7;
    CHECK_THROWS_AS(planar_commutator_norm(profile, Mass(1.0), planar), Error);
}

TEST_CASE("two-particle commutator telescopes") {
    const auto g = full(4, 8.0, 2);
    const auto psi = random_smooth_field(g, 1.2, 2.0, 4);
    const double masses[] = {1.0, 2.0};
    const auto c = [](std::span<const Vec3> x) { return std::exp(-0.2 * (x[0] - x[1]).squaredNorm()); };
    const auto whole = apply_commutator(psi, c, {0, 1}, masses);
    const auto a = apply_projectors(apply_commutator(psi, c, {1}, masses), {0}, masses);
    const auto b = apply_commutator(apply_projectors(psi, {1}, masses), c, {0}, masses);
    double err = 0.0, size = 0.0;
    for (std::size_t i = 0; i < whole.size(); ++i) {
        err = std::max(err, std::abs(whole.values()[i] - a.values()[i] - b.values()[i]));
        size = std::max(size, std::abs(whole.values()[i]));
    }
    CHECK(size > 1e-3);
    CHECK(err < 1e-10);
}

TEST_CASE("log-log slope") {
    const std::vector<double> x{1, 2, 4, 8}, y{3, 0.75, 0.1875, 0.046875};
    CHECK(loglog_slope(x, y) == doctest::Approx(-2.0));
    CHECK_THROWS_AS(loglog_slope(std::vector<double>{1.0}, std::vector<double>{1.0}), Error);
}

TEST_CASE("multiplier bound") {
    const auto g = full(16, 16.0);
    const auto u = random_smooth_field(g, 1.5, 2.0, 7);
    CHECK(u.norm() == doctest::Approx(1.0));
    const Cutoff one{[](const Vec3&) { return 1.0; }, [](const Vec3&) { return Vec3::Zero().eval(); }};
    const auto s1 = multiplier_sample(one, u);
    CHECK(s1.product_norm == doctest::Approx(s1.field_norm).epsilon(1e-12));
    CHECK(s1.sup == 1.0);
    CHECK(s1.gradient_sup == 0.0);

    // Direct H^{1/2} norm of chi u from the definition.
    const auto bump = radial_bump(2.0);
    const auto s2 = multiplier_sample(bump, u);
    auto prod = transform(u, Representation::position);
    for (std::size_t s = 0; s < g.sites(); ++s)
        for (int a = 0; a < 4; ++a) prod.values()[4 * s + a] *= bump.value(g.position(s));
    prod = transform(prod, Representation::momentum);
    double acc = 0.0;
    for (std::size_t s = 0; s < g.sites(); ++s)
        for (int a = 0; a < 4; ++a)
            acc += std::sqrt(1.0 + g.momentum(s).squaredNorm()) * std::norm(prod.values()[4 * s + a]);
    CHECK(s2.product_norm == doctest::Approx(std::sqrt(acc * g.momentum_cell())).epsilon(1e-12));

    const std::vector<MultiplierSample> ref{s1, s2};
    const auto b = MultiplierBound::calibrate(ref);
    CHECK(b.constant() == doctest::Approx(std::max(s1.raw_ratio(), s2.raw_ratio())));
    CHECK(b.ratio(s1) == doctest::Approx(1.0 / b.constant()));
    CHECK(b.ratio(s2) <= 1.0);
    CHECK_THROWS_AS(MultiplierBound::calibrate({}), Error);
}

TEST_CASE("random smooth fields are reproducible") {
    const auto g = full(8, 8.0);
    const auto a = random_smooth_field(g, 1.0, 2.0, 11);
    const auto b = random_smooth_field(g, 1.0, 2.0, 11);
    const auto c = random_smooth_field(g, 1.0, 2.0, 12);
    CHECK(max_abs_diff(a, b) == 0.0);
    CHECK(max_abs_diff(a, c) > 1e-3);
    CHECK(a.representation() == Representation::momentum);
}

TEST_CASE("first-order localization identity") {
    const auto g = full(16, 16.0);
    const auto psi = random_smooth_field(g, 2.0, 3.0, 1);
    const auto part = PartitionOfUnity::build(1, 2.0);
    const auto r = ims_first_order_check(part, psi);
    CHECK(std::abs(r.whole) > 1e-3);
    CHECK(r.defect() < 1e-8);

    // Spectral evaluation of each localized term as a loose independent check.
    const auto& d = dirac_matrices();
    auto apply_a = [&](const SpinorField& f) {
        SpinorField out(g, Representation::momentum);
        for (std::size_t s = 0; s < g.sites(); ++s) {
            const Vec3 p = g.symbol_momentum(s);
            const Mat4 a = p[0] * d.alpha[0] + p[1] * d.alpha[1] + p[2] * d.alpha[2];
            Eigen::Vector4cd v;
            for (int k = 0; k < 4; ++k) v[k] = f.values()[4 * s + k];
            const Eigen::Vector4cd w = a * v;
            for (int k = 0; k < 4; ++k) out.values()[4 * s + k] = w[k];
        }
        return out;
    };
    double spectral = 0.0;
    for (std::size_t z = 0; z < part.decompositions().size(); ++z) {
        const auto local = multiply_cutoff(psi, [&](std::span<const Vec3> x) {
            const double y[] = {x[0][0], x[0][1], x[0][2]};
            return part.chi(y)[z];
        });
        spectral += local.inner(apply_a(local)).real();
    }
    CHECK(spectral == doctest::Approx(r.whole).epsilon(1e-3));

    const double weights[] = {1.0, 1.2};
    CHECK(ims_first_order_check(part, psi, weights).defect() > 1e-6);

    // Field supported where only one cutoff is active.
    const auto inner = multiply_cutoff(psi, [](std::span<const Vec3> x) { return x[0].norm() < 0.9 ? 1.0 : 0.0; });
    const auto ri = ims_first_order_check(part, inner);
    CHECK(ri.defect() < 1e-10);
}

TEST_CASE("two-particle first-order identity") {
    const auto g = full(4, 8.0, 2);
    const auto psi = random_smooth_field(g, 1.5, 2.0, 3);
    const auto r = ims_first_order_check(PartitionOfUnity::build(2, 1.5), psi);
    CHECK(r.defect() < 1e-8);
}

TEST_CASE("exceptional scale and check reports") {
    CHECK(exceptional_scale(1.5, {2.0, 0.5}) == doctest::Approx(8.0));
    CHECK_THROWS_AS(exceptional_scale(1.0, {0.0, 1.0}), Error);

    const auto path = std::filesystem::temp_directory_path() / "hvz_checks.csv";
    const std::vector<CheckRecord> records{{"a.b", "N=1", 0.5, 1.0, true}, {"c", "m=1,2", 2.0, 1.0, false}};
    write_checks_csv(records, path.string());
    std::ifstream in(path);
    std::string header, first, second;
    std::getline(in, header);
    std::getline(in, first);
    std::getline(in, second);
    CHECK(header == "check,parameters,value,bound,pass");
    // Parameters are always quoted since they may hold commas.
    CHECK(first == "a.b,\"N=1\",0.5,1,1");
    CHECK(second == "c,\"m=1,2\",2,1,0");
}

TEST_CASE("partition suite") {
    CheckSettings s;
    s.partition_samples = 500;
    const auto records = partition_checks(s);
    CHECK(records.size() == 30);
    for (const auto& r : records) {
        INFO(r.id << " " << r.parameters << " " << r.value);
        CHECK(r.pass);
    }
}

TEST_CASE("kernel, multiplier and localization suites") {
    for (auto suite : {kernel_checks, multiplier_checks, ims_checks}) {
        for (const auto& r : suite(CheckSettings{})) {
            INFO(r.id << " " << r.parameters << " " << r.value << " " << r.bound);
            CHECK(r.pass);
        }
    }
}
