#include "hvz/localization.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <numbers>
#include <random>

#include "hvz/dirac.hpp"
#include "check_records.hpp"
#include "fft.hpp"
#include "slot_map.hpp"

namespace hvz {

namespace {

constexpr double pi = std::numbers::pi;

// Value, gradient and Hessian of a scalar function of the configuration.
struct Jet {
    double v = 0.0;
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
};

Jet constant(double v, int d) { return {v, Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)}; }

Jet operator+(Jet a, const Jet& b) {
    a.v += b.v;
    a.g += b.g;
    a.h += b.h;
    return a;
}

Jet operator-(Jet a, const Jet& b) {
    a.v -= b.v;
    a.g -= b.g;
    a.h -= b.h;
    return a;
}

Jet operator*(Jet a, double s) {
    a.v *= s;
    a.g *= s;
    a.h *= s;
    return a;
}

Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    r.v = a.v * b.v;
    r.g = a.g * b.v + b.g * a.v;
    r.h = a.h * b.v + b.h * a.v + a.g * b.g.transpose() + b.g * a.g.transpose();
    return r;
}

Jet compose(const Jet& u, const ScalarJet& f) {
    Jet r;
    r.v = f.value;
    r.g = f.first * u.g;
    r.h = f.first * u.h + f.second * (u.g * u.g.transpose());
    return r;
}

Jet sqrt(const Jet& u) {
    if (u.v <= 0.0) return constant(0.0, static_cast<int>(u.g.size()));
    const double s = std::sqrt(u.v);
    return compose(u, {s, 0.5 / s, -0.25 / (s * u.v)});
}

Jet reciprocal(const Jet& u) { return compose(u, {1.0 / u.v, -1.0 / (u.v * u.v), 2.0 / (u.v * u.v * u.v)}); }

// Square roots s_Z of zeta_Z at X / R; d = 0 skips derivatives.
std::vector<Jet> partition_roots(int n, double scale, std::span<const double> x, int d) {
    const std::size_t count = std::size_t{1} << n;
    std::vector<Jet> y(3 * n);
    for (int i = 0; i < 3 * n; ++i) {
        y[i] = constant(x[i] / scale, d);
        if (d > 0) y[i].g[i] = 1.0 / scale;
    }
    Jet sq = constant(0.0, d);
    for (const auto& c : y) sq = sq + c * c;
    const Jet norm = sqrt(sq);

    std::vector<Jet> s(count, constant(0.0, d));
    if (2.0 * norm.v <= 1.0) {
        s[0] = constant(1.0, d);
        return s;
    }
    // The literal factor 2 keeps N = 1 exact; N >= 2 uses 1 (see the notes).
    const double c = std::pow(static_cast<double>(n), -1.5);
    const double factor = n == 1 ? 2.0 : 1.0;
    const Jet inv = reciprocal(norm * c) * factor;
    auto length = [&](int a, int b) {
        Jet acc = constant(0.0, d);
        for (int k = 0; k < 3; ++k) {
            const Jet diff = b < 0 ? y[3 * a + k] : y[3 * a + k] - y[3 * b + k];
            acc = acc + diff * diff;
        }
        return sqrt(acc);
    };
    std::vector<Jet> radial(n);
    for (int a = 0; a < n; ++a) {
        const Jet t = length(a, -1) * inv;
        radial[a] = compose(t, step_root(t.v));
    }
    const Jet outer = norm * 2.0;
    s[0] = compose(outer, step_coroot(outer.v));
    const Jet far = compose(outer, step_root(outer.v));
    for (std::size_t mask = 1; mask < count; ++mask) {
        Jet r = far;
        for (int b = 0; b < n; ++b) {
            if (!((mask >> b) & 1u)) continue;
            r = r * radial[b];
            for (int a = 0; a < n; ++a) {
                if ((mask >> a) & 1u) continue;
                const Jet t = length(a, b) * inv;
                r = r * compose(t, step_root(t.v));
            }
        }
        s[mask] = std::move(r);
    }
    return s;
}

std::vector<Jet> partition_chi(int n, double scale, std::span<const double> x, int d) {
    auto s = partition_roots(n, scale, x, d);
    Jet total = constant(0.0, d);
    for (const auto& r : s) total = total + r * r;
    const Jet inv = reciprocal(sqrt(total));
    for (auto& r : s) r = r * inv;
    return s;
}

// Per-particle lattice sites and spinor components of a state index.
void decode(const MomentumGrid& g, std::size_t index, std::span<std::size_t> sites, std::span<int> comps) {
    const auto S = static_cast<std::size_t>(g.spinor_dim());
    const std::size_t block = g.block();
    for (int k = g.particles() - 1; k >= 0; --k) {
        const std::size_t local = index % block;
        index /= block;
        sites[k] = local / S;
        comps[k] = static_cast<int>(local % S);
    }
}

double dot_real(std::span<const cplx> a, std::span<const cplx> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] * std::conj(b[i])).real();
    return s;
}

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        nodes[i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

// Radial integrals int K1(mr) j1(pr), int r K0(mr) j1(pr), int r K1(mr) j0(pr) over [a, b].
struct RadialIntegrals {
    double k1j1 = 0.0, k0j1 = 0.0, k1j0 = 0.0;
    RadialIntegrals& operator+=(const RadialIntegrals& o) {
        k1j1 += o.k1j1;
        k0j1 += o.k0j1;
        k1j0 += o.k1j0;
        return *this;
    }
};

RadialIntegrals radial_segment(double a, double b, double p, double m, const std::vector<double>& nodes,
                               const std::vector<double>& weights) {
    RadialIntegrals out;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double r = mid + half * nodes[i];
        const double w = half * weights[i];
        const double k0 = std::cyl_bessel_k(0.0, m * r), k1 = std::cyl_bessel_k(1.0, m * r);
        const double z = p * r;
        const double j0 = std::sph_bessel(0, z), j1 = std::sph_bessel(1, z);
        out.k1j1 += w * k1 * j1;
        out.k0j1 += w * r * k0 * j1;
        out.k1j0 += w * r * k1 * j0;
    }
    return out;
}

}  // namespace

ScalarJet smooth_step(double t) {
    const double s = t - 1.0;
    if (s <= 0.0) return {0.0, 0.0, 0.0};
    if (s >= 1.0) return {1.0, 0.0, 0.0};
    return {s * s * s * (10.0 - 15.0 * s + 6.0 * s * s), 30.0 * s * s * (1.0 - s) * (1.0 - s),
            60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)};
}

ScalarJet step_root(double t) {
    const auto th = smooth_step(t);
    if (th.value >= 1.0) return {1.0, 0.0, 0.0};
    const double a = 0.5 * pi;
    const double sn = std::sin(a * th.value), cs = std::cos(a * th.value);
    return {sn, a * cs * th.first, -a * a * sn * th.first * th.first + a * cs * th.second};
}

ScalarJet step_coroot(double t) {
    const auto th = smooth_step(t);
    if (th.value >= 1.0) return {0.0, 0.0, 0.0};
    const double a = 0.5 * pi;
    const double sn = std::sin(a * th.value), cs = std::cos(a * th.value);
    return {cs, -a * sn * th.first, -a * a * cs * th.first * th.first - a * sn * th.second};
}

double step(double t) {
    const double r = step_root(t).value;
    return r * r;
}

PartitionOfUnity PartitionOfUnity::build(int particle_count, double scale) {
    require(particle_count >= 1 && particle_count <= 16, "invalid_request", "partition needs 1..16 particles");
    require(scale > 0.0, "invalid_request", "partition scale must be positive");
    PartitionOfUnity p;
    p.particles_ = particle_count;
    p.scale_ = scale;
    const std::size_t count = std::size_t{1} << particle_count;
    for (std::size_t mask = 0; mask < count; ++mask) {
        std::vector<int> first;
        for (int k = 0; k < particle_count; ++k)
            if (!((mask >> k) & 1u)) first.push_back(k);
        p.z_.push_back(ClusterDecomposition::from_first(particle_count, first));
    }
    return p;
}

double PartitionOfUnity::separation_constant() const noexcept {
    return std::pow(static_cast<double>(particles_), -1.5);
}

std::vector<double> PartitionOfUnity::zeta(std::span<const double> x) const {
    require(x.size() == static_cast<std::size_t>(3 * particles_), "invalid_request", "configuration size mismatch");
    const auto s = partition_roots(particles_, scale_, x, 0);
    std::vector<double> out;
    for (const auto& r : s) out.push_back(r.v * r.v);
    return out;
}

std::vector<double> PartitionOfUnity::chi(std::span<const double> x) const {
    require(x.size() == static_cast<std::size_t>(3 * particles_), "invalid_request", "configuration size mismatch");
    const auto s = partition_chi(particles_, scale_, x, 0);
    std::vector<double> out;
    for (const auto& r : s) out.push_back(r.v);
    return out;
}

std::vector<PartitionOfUnity::Jet> PartitionOfUnity::chi_jets(std::span<const double> x) const {
    require(x.size() == static_cast<std::size_t>(3 * particles_), "invalid_request", "configuration size mismatch");
    const auto s = partition_chi(particles_, scale_, x, 3 * particles_);
    std::vector<Jet> out;
    for (const auto& r : s) out.push_back({r.v, r.g, r.h});
    return out;
}

double PartitionOfUnity::separation(const ClusterDecomposition& z, std::span<const double> x) {
    double best = std::numeric_limits<double>::infinity();
    auto at = [&](int k) { return Vec3(x[3 * k], x[3 * k + 1], x[3 * k + 2]); };
    for (int n : z.second) {
        best = std::min(best, at(n).norm());
        for (int j : z.first) best = std::min(best, (at(j) - at(n)).norm());
    }
    return best;
}

Cutoff radial_bump(double radius) {
    require(radius > 0.0, "invalid_request", "cutoff radius must be positive");
    return {[radius](const Vec3& x) { return 1.0 - step(x.norm() / radius); },
            [radius](const Vec3& x) -> Vec3 {
                const double r = x.norm();
                if (r == 0.0) return Vec3::Zero();
                const auto j = step_root(r / radius);
                return -(2.0 * j.value * j.first / radius) * (x / r);
            }};
}

Cutoff radial_step(double radius) {
    auto b = radial_bump(radius);
    return {[b](const Vec3& x) { return 1.0 - b.value(x); }, [b](const Vec3& x) -> Vec3 { return -b.gradient(x); }};
}

SpinorField multiply_cutoff(const SpinorField& field, const std::function<double(std::span<const Vec3>)>& c) {
    const auto& g = field.grid();
    const bool momentum = field.representation() == Representation::momentum;
    SpinorField x = momentum ? transform(field, Representation::position) : field;
    const int n = g.particles();
    std::vector<std::size_t> sites(n);
    std::vector<int> comps(n);
    std::vector<Vec3> pos(n);
    auto v = x.values();
    // Spinor components of one configuration are not contiguous for N > 1,
    // so the cutoff is evaluated per index with a one-entry cache.
    std::vector<std::size_t> last(n, std::numeric_limits<std::size_t>::max());
    double value = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        decode(g, i, sites, comps);
        if (sites != last) {
            for (int k = 0; k < n; ++k) pos[k] = g.position(sites[k]);
            value = c(pos);
            last = sites;
        }
        v[i] *= value;
    }
    return momentum ? transform(x, Representation::momentum) : x;
}

SpinorField apply_projectors(const SpinorField& field, const std::vector<int>& particles,
                             std::span<const double> masses) {
    const bool position = field.representation() == Representation::position;
    SpinorField f = position ? transform(field, Representation::momentum) : field;
    for (int k : particles) f = apply_projector(f, k, Mass(masses[k]));
    return position ? transform(f, Representation::position) : f;
}

SpinorField apply_commutator(const SpinorField& field, const std::function<double(std::span<const Vec3>)>& c,
                             const std::vector<int>& particles, std::span<const double> masses) {
    auto a = multiply_cutoff(apply_projectors(field, particles, masses), c);
    const auto b = apply_projectors(multiply_cutoff(field, c), particles, masses);
    auto v = a.values();
    const auto w = b.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= w[i];
    return a;
}

namespace {

using CVector = std::vector<cplx>;

double euclid(const CVector& v) {
    double s = 0.0;
    for (cplx c : v) s += std::norm(c);
    return std::sqrt(s);
}

// ||T B|| for anti-Hermitian T by power iteration on -B T^2 B. Vectors live
// in the momentum representation, where `in_band` is a per-entry mask.
CommutatorEstimate power_norm(const std::function<CVector(const CVector&)>& t, const std::vector<char>& in_band,
                              const PowerOptions& options) {
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> gauss;
    CVector v(in_band.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const cplx c{gauss(rng), gauss(rng)};
        if (in_band[i]) v[i] = c;
    }
    auto normalize = [](CVector& x) {
        const double n = euclid(x);
        for (auto& c : x) c /= n;
    };
    normalize(v);

    CommutatorEstimate out;
    double previous = 0.0;
    for (int it = 1; it <= options.max_iterations; ++it) {
        const auto w = t(v);
        const double rq = std::pow(euclid(w), 2);  // <v, -T^2 v> with ||v|| = 1
        v = t(w);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = in_band[i] ? -v[i] : cplx{};
        out.iterations = it;
        out.norm = std::sqrt(rq);
        if (euclid(v) == 0.0) {
            out.converged = true;
            out.norm = 0.0;
            break;
        }
        normalize(v);
        if (it >= options.min_iterations && std::abs(rq - previous) <= options.tol * rq) {
            out.converged = true;
            break;
        }
        previous = rq;
    }
    return out;
}

}  // namespace

CommutatorEstimate commutator_norm(const MomentumGrid& one, const Cutoff& chi, Mass m, const PowerOptions& options) {
    require(one.particles() == 1 && one.mode() == SpinorMode::full, "invalid_grid",
            "commutator norms use a full-mode one-particle grid");
    require(options.band > 0.0 && options.band <= 1.0, "invalid_request", "band fraction must lie in (0, 1]");
    std::vector<char> in_band(one.state_dim());
    const double edge = options.band * one.p_max() * (1.0 + 1e-12);
    for (std::size_t i = 0; i < in_band.size(); ++i) in_band[i] = one.momentum(i / 4).cwiseAbs().maxCoeff() <= edge;
    std::vector<double> weight(one.sites());
    for (std::size_t s = 0; s < one.sites(); ++s) weight[s] = chi.value(one.position(s));

    auto mul = [&](const SpinorField& f) {
        auto x = transform(f, Representation::position);
        auto v = x.values();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= weight[i / 4];
        return transform(x, Representation::momentum);
    };
    auto t = [&](const CVector& in) {
        const SpinorField f(one, Representation::momentum, in);
        const auto a = mul(apply_projector(f, 0, m));
        const auto b = apply_projector(mul(f), 0, m);
        CVector out(a.values().begin(), a.values().end());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.values()[i];
        return out;
    };
    return power_norm(t, in_band, options);
}

CommutatorEstimate planar_commutator_norm(const std::function<double(double)>& profile, Mass m,
                                          const PlanarOptions& options) {
    const int n = options.points;
    require(n >= 8 && n % 2 == 0 && options.box > 0.0, "invalid_request", "planar lattice needs an even size >= 8");
    require(!options.transverse.empty(), "invalid_request", "at least one transverse momentum is needed");
    require(options.power.band > 0.0 && options.power.band <= 1.0, "invalid_request",
            "band fraction must lie in (0, 1]");
    const double dz = options.box / n, p_max = pi / dz;
    std::vector<double> k(n), weight(n);
    for (int j = 0; j < n; ++j) {
        k[j] = 2.0 * pi / options.box * (j < n / 2 ? j : j - n);
        weight[j] = profile((j - n / 2) * dz);
    }
    std::vector<char> in_band(4 * static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < in_band.size(); ++i)
        in_band[i] = std::abs(k[i / 4]) <= options.power.band * p_max * (1.0 + 1e-12);

    const detail::FftPlan forward({{n, 4}}, {{4, 1}}, FFTW_FORWARD);
    const detail::FftPlan backward({{n, 4}}, {{4, 1}}, FFTW_BACKWARD);
    auto mul = [&](CVector v) {
        backward.execute(v.data());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= weight[i / 4] / n;
        forward.execute(v.data());
        return v;
    };

    CommutatorEstimate best;
    best.converged = true;
    for (double q : options.transverse) {
        std::vector<Mat4> symbol(n);
        for (int j = 0; j < n; ++j) symbol[j] = projector_symbol(Vec3(q, 0.0, k[j]), m);
        auto lam = [&](const CVector& v) {
            CVector out(v.size());
            for (int j = 0; j < n; ++j) {
                const Eigen::Map<const Eigen::Vector4cd> x(v.data() + 4 * j);
                Eigen::Map<Eigen::Vector4cd>(out.data() + 4 * j) = symbol[j] * x;
            }
            return out;
        };
        auto t = [&](const CVector& v) {
            auto a = mul(lam(v));
            const auto b = lam(mul(v));
            for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
            return a;
        };
        const auto e = power_norm(t, in_band, options.power);
        best.converged = best.converged && e.converged;
        best.iterations = std::max(best.iterations, e.iterations);
        best.norm = std::max(best.norm, e.norm);
    }
    return best;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, "invalid_request", "slope needs at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

// Radial integrals over (0, r_max]; every integrand stays bounded at the
// origin, so doubling segments from 1e-12 / m resolve the inner region.
RadialIntegrals radial_integrals(double pn, double mass, const KernelQuadrature& q) {
    const double r_max = q.cutoff_radius > 0.0 ? q.cutoff_radius : 30.0 / mass;
    std::vector<double> nodes, weights;
    gauss_legendre(q.radial_order, nodes, weights);
    RadialIntegrals out;
    double a = 1e-12 / mass;
    while (a < 1.0 / mass) {
        const double b = std::min(2.0 * a, 1.0 / mass);
        out += radial_segment(a, b, pn, mass, nodes, weights);
        a = b;
    }
    const double seg = q.segment / mass;
    while (a < r_max) {
        const double b = std::min(a + seg, r_max);
        out += radial_segment(a, b, pn, mass, nodes, weights);
        a = b;
    }
    return out;
}

Mat4 symbol_from(const Vec3& p, double mass, const RadialIntegrals& r) {
    const auto& d = dirac_matrices();
    Mat4 out = 0.5 * Mat4::Identity() + (mass * mass / pi * r.k1j0) * d.beta;
    const double pn = p.norm();
    if (pn > 0.0) {
        const Vec3 u = p / pn;
        const Mat4 au = u[0] * d.alpha[0] + u[1] * d.alpha[1] + u[2] * d.alpha[2];
        out += (2.0 * mass / pi * r.k1j1 + mass * mass / pi * r.k0j1) * au;
    }
    return out;
}

}  // namespace

Mat4 kernel_symbol(const Vec3& p, Mass m, const KernelQuadrature& q) {
    return symbol_from(p, m.value(), radial_integrals(p.norm(), m.value(), q));
}

SpinorField bessel_kernel_apply(const SpinorField& f, Mass m, const KernelQuadrature& quadrature) {
    const auto& g = f.grid();
    require(g.particles() == 1 && g.mode() == SpinorMode::full, "invalid_grid",
            "the kernel check uses full-mode one-particle fields");
    require(g.dx() <= 0.25 / m.value() * (1.0 + 1e-12), "kernel_resolution",
            "lattice spacing " + std::to_string(g.dx()) + " exceeds 1/(4m) = " + std::to_string(0.25 / m.value()));
    const bool position = f.representation() == Representation::position;
    const SpinorField in = position ? transform(f, Representation::momentum) : f;
    const std::vector<int> dims{4};
    std::map<long long, RadialIntegrals> cache;  // keyed by the integer |p|^2 / dp^2
    const double dp = g.dp();
    auto out = detail::map_slot(in.values(), g.sites(), dims, 0, 4, [&](std::size_t s) {
        const Vec3 p = g.symbol_momentum(s);
        const auto key = std::llround(p.squaredNorm() / (dp * dp));
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, radial_integrals(p.norm(), m.value(), quadrature)).first;
        return symbol_from(p, m.value(), it->second);
    });
    SpinorField r(g, Representation::momentum, std::move(out));
    return position ? transform(r, Representation::position) : r;
}

MultiplierSample multiplier_sample(const Cutoff& chi, const SpinorField& u) {
    const auto& g = u.grid();
    require(g.particles() == 1, "invalid_grid", "multiplier samples use one-particle fields");
    MultiplierSample s;
    for (std::size_t site = 0; site < g.sites(); ++site) {
        const Vec3 x = g.position(site);
        s.sup = std::max(s.sup, std::abs(chi.value(x)));
        s.gradient_sup = std::max(s.gradient_sup, chi.gradient(x).norm());
    }
    const SpinorField um = u.representation() == Representation::momentum ? u : transform(u, Representation::momentum);
    const auto product = multiply_cutoff(um, [&](std::span<const Vec3> x) { return chi.value(x[0]); });
    s.product_norm = h_half_norm(product);
    s.field_norm = h_half_norm(um);
    return s;
}

MultiplierBound MultiplierBound::calibrate(std::span<const MultiplierSample> reference) {
    require(!reference.empty(), "invalid_request", "calibration needs at least one reference sample");
    MultiplierBound b;
    b.constant_ = 0.0;
    for (const auto& s : reference) b.constant_ = std::max(b.constant_, s.raw_ratio());
    return b;
}

SpinorField random_smooth_field(const MomentumGrid& grid, double cutoff, double envelope, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    const int n = grid.particles();
    std::vector<std::size_t> sites(n);
    std::vector<int> comps(n);
    std::vector<cplx> v(grid.state_dim());
    for (std::size_t i = 0; i < v.size(); ++i) {
        decode(grid, i, sites, comps);
        bool inside = true;
        for (int k = 0; k < n; ++k) inside = inside && grid.momentum(sites[k]).norm() <= cutoff;
        const cplx c{gauss(rng), gauss(rng)};  // drawn for every index to keep the stream layout-independent
        if (inside) v[i] = c;
    }
    SpinorField f(grid, Representation::momentum, std::move(v));
    f = multiply_cutoff(f, [&](std::span<const Vec3> x) {
        double r2 = 0.0;
        for (const auto& p : x) r2 += p.squaredNorm();
        return std::exp(-0.5 * r2 / (envelope * envelope));
    });
    const double norm = f.norm();
    require(norm > 0.0, "invalid_request", "momentum cutoff leaves no lattice modes");
    for (auto& c : f.values()) c /= norm;
    return f;
}

ImsReport ims_first_order_check(const PartitionOfUnity& partition, const SpinorField& psi,
                                std::span<const double> weights) {
    const auto& g = psi.grid();
    const int n = g.particles();
    require(g.mode() == SpinorMode::full && n == partition.particles(), "invalid_grid",
            "the IMS check needs a full-mode field with one slot per partition particle");
    const std::size_t count = partition.decompositions().size();
    require(weights.empty() || weights.size() == count, "invalid_request", "one weight per decomposition");
    const auto& d = dirac_matrices();

    const SpinorField pm = psi.representation() == Representation::momentum ? psi
                                                                           : transform(psi, Representation::momentum);
    std::vector<cplx> apsi(pm.size(), cplx(0.0));
    const std::vector<int> dims(n, 4);
    for (int k = 0; k < n; ++k) {
        const auto part = detail::map_slot(pm.values(), g.sites(), dims, k, 4, [&](std::size_t s) {
            const Vec3 p = g.symbol_momentum(s);
            return Mat4(p[0] * d.alpha[0] + p[1] * d.alpha[1] + p[2] * d.alpha[2]);
        });
        for (std::size_t i = 0; i < apsi.size(); ++i) apsi[i] += part[i];
    }
    const SpinorField a_m(g, Representation::momentum, apsi);
    ImsReport out;
    out.whole = dot_real(a_m.values(), pm.values()) * pm.cell_weight();

    const auto px = transform(pm, Representation::position);
    const auto ax = transform(a_m, Representation::position);
    const auto pv = px.values();
    const auto av = ax.values();
    const std::size_t block = g.block();
    const std::size_t configs = static_cast<std::size_t>(std::pow(static_cast<double>(g.sites()), n));
    const std::size_t spin = static_cast<std::size_t>(std::pow(4.0, n));
    std::vector<std::size_t> stride(n);
    for (int k = 0; k < n; ++k) stride[k] = static_cast<std::size_t>(std::pow(static_cast<double>(block), n - 1 - k));

    std::vector<double> x(3 * n);
    std::vector<std::size_t> site(n);
    std::vector<std::size_t> index(spin);
    Eigen::VectorXcd f(spin), af(spin);
    double total = 0.0;
    for (std::size_t c = 0; c < configs; ++c) {
        std::size_t rest = c;
        for (int k = n - 1; k >= 0; --k) {
            site[k] = rest % g.sites();
            rest /= g.sites();
            const Vec3 p = g.position(site[k]);
            for (int a = 0; a < 3; ++a) x[3 * k + a] = p[a];
        }
        for (std::size_t s = 0; s < spin; ++s) {
            std::size_t idx = 0, sr = s;
            for (int k = n - 1; k >= 0; --k) {
                idx += (site[k] * 4 + sr % 4) * stride[k];
                sr /= 4;
            }
            index[s] = idx;
            f[static_cast<Eigen::Index>(s)] = pv[idx];
            af[static_cast<Eigen::Index>(s)] = av[idx];
        }
        if (f.squaredNorm() == 0.0) continue;
        const auto jets = partition.chi_jets(x);
        double sq = 0.0;
        Eigen::VectorXd mixed = Eigen::VectorXd::Zero(3 * n);  // sum w^2 chi grad chi
        for (std::size_t z = 0; z < count; ++z) {
            const double w2 = weights.empty() ? 1.0 : weights[z] * weights[z];
            sq += w2 * jets[z].value * jets[z].value;
            mixed += w2 * jets[z].value * jets[z].gradient;
        }
        // -i sum_n alpha_n . mixed_n acting on the 4^N spinor.
        Eigen::VectorXcd corr = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(spin));
        for (int k = 0; k < n; ++k) {
            const Mat4 am = mixed[3 * k] * d.alpha[0] + mixed[3 * k + 1] * d.alpha[1] + mixed[3 * k + 2] * d.alpha[2];
            const std::size_t inner = static_cast<std::size_t>(std::pow(4.0, n - 1 - k));
            for (std::size_t s = 0; s < spin; ++s) {
                const int ck = static_cast<int>((s / inner) % 4);
                const std::size_t base = s - ck * inner;
                for (int b = 0; b < 4; ++b) corr[static_cast<Eigen::Index>(s)] += am(ck, b) * f[static_cast<Eigen::Index>(base + b * inner)];
            }
        }
        // f.dot(g) = sum conj(f) g, i.e. <g, f> in the field convention.
        const cplx term = f.dot(sq * af) + f.dot(cplx(0.0, -1.0) * corr);
        total += term.real();
    }
    out.localized = total * px.cell_weight();
    return out;
}

double exceptional_scale(double kappa, const FormConstants& constants) {
    require(constants.c1 > 0.0, "invalid_request", "C1 must be positive");
    return 8.0 * (kappa + constants.c2) / constants.c1;
}

void write_checks_csv(std::span<const CheckRecord> records, const std::string& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "io_error", "cannot write " + path);
    out << "check,parameters,value,bound,pass\n" << std::setprecision(17);
    for (const auto& r : records)
        out << r.id << ',' << std::quoted(r.parameters, '"', '"') << ',' << r.value << ',' << r.bound << ',' << (r.pass ? 1 : 0) << '\n';
}

}  // namespace hvz

namespace hvz {

namespace {

using detail::at_least;
using detail::at_most;
using detail::fmt;

Eigen::Matrix3d random_orthogonal(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Eigen::Matrix3d a;
    for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = gauss(rng);
    Eigen::HouseholderQR<Eigen::Matrix3d> qr(a);
    return qr.householderQ();
}

// Index of the decomposition whose second cluster is the image of `mask` under perm.
std::size_t permuted_mask(std::size_t mask, const std::vector<int>& perm) {
    std::size_t out = 0;
    for (std::size_t k = 0; k < perm.size(); ++k)
        if ((mask >> k) & 1u) out |= std::size_t{1} << perm[k];
    return out;
}

MomentumGrid full_grid(int points, double box, int particles) {
    return MomentumGrid::make(points, pi * points / box, particles, SpinorMode::full, default_memory_budget);
}

}  // namespace

std::vector<CheckRecord> partition_checks(const CheckSettings& settings) {
    std::vector<CheckRecord> out;
    std::mt19937_64 rng(settings.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0), radius(0.0, 3.0), scale(0.5, 8.0);
    const int samples = settings.partition_samples;

    for (int n = 1; n <= 3; ++n) {
        const std::string par = fmt("N=%d;samples=%d", n, samples);
        const auto base = PartitionOfUnity::build(n, 1.0);
        const double c = base.separation_constant();
        const std::size_t count = base.decompositions().size();
        double sum_err = 0.0, min_zeta = std::numeric_limits<double>::infinity();
        double sep_ratio = std::numeric_limits<double>::infinity(), inner = 0.0;
        double homog = 0.0, rot = 0.0, perm_err = 0.0, negative = 0.0, smooth = 0.0;
        std::vector<int> perm(n);
        for (int t = 0; t < samples; ++t) {
            // |X| spread over [0, 3] so the inner ball, the transition shell and the far field all appear.
            std::vector<double> x(3 * n);
            for (auto& v : x) v = unit(rng);
            const double len = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
            const double target = radius(rng);
            for (auto& v : x) v *= target / len;
            const double r = scale(rng);
            const auto part = PartitionOfUnity::build(n, r);
            std::vector<double> xr(x);
            for (auto& v : xr) v *= r;

            const auto chi = part.chi(xr);
            const auto zeta = base.zeta(x);
            double s = 0.0, zs = 0.0;
            for (std::size_t z = 0; z < count; ++z) {
                s += chi[z] * chi[z];
                zs += zeta[z];
                negative = std::max(negative, -chi[z]);
            }
            sum_err = std::max(sum_err, std::abs(s - 1.0));
            min_zeta = std::min(min_zeta, zs);

            // Support: chi_Z > 1e-12 implies the separation bound.
            const double size = std::sqrt(std::inner_product(xr.begin(), xr.end(), xr.begin(), 0.0));
            for (std::size_t z = 1; z < count; ++z)
                if (chi[z] > 1e-12)
                    sep_ratio = std::min(sep_ratio, PartitionOfUnity::separation(part.decompositions()[z], xr) /
                                                        (c * size));
            if (chi[0] > 1e-12) inner = std::max(inner, size / r);

            // Homogeneity on |X| >= scale for Z_2 nonempty.
            const auto chi1 = base.chi(x);
            if (target >= 1.0) {
                std::vector<double> far(x);
                const double k = 1.0 + 4.0 * (unit(rng) + 1.0);
                for (auto& v : far) v *= k;
                const auto chik = base.chi(far);
                for (std::size_t z = 1; z < count; ++z) homog = std::max(homog, std::abs(chik[z] - chi1[z]));
            }

            // Orthogonal invariance.
            Eigen::Matrix3d q = random_orthogonal(rng);
            std::vector<double> xq(3 * n);
            for (int k = 0; k < n; ++k) {
                const Vec3 v = q * Vec3(x[3 * k], x[3 * k + 1], x[3 * k + 2]);
                for (int a = 0; a < 3; ++a) xq[3 * k + a] = v[a];
            }
            const auto chiq = base.chi(xq);
            for (std::size_t z = 0; z < count; ++z) rot = std::max(rot, std::abs(chiq[z] - chi1[z]));

            // Permutations: chi_{pi Z}(pi X) = chi_Z(X).
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            std::vector<double> xp(3 * n);
            for (int k = 0; k < n; ++k)
                for (int a = 0; a < 3; ++a) xp[3 * perm[k] + a] = x[3 * k + a];
            const auto chip = base.chi(xp);
            for (std::size_t z = 0; z < count; ++z)
                perm_err = std::max(perm_err, std::abs(chip[permuted_mask(z, perm)] - chi1[z]));

            // Second derivatives against central differences of the gradient (every 50th point).
            if (t % 50 == 0) {
                const auto jets = base.chi_jets(x);
                const double h = 1e-5;
                for (int i = 0; i < 3 * n; ++i) {
                    auto xp2 = x, xm2 = x;
                    xp2[i] += h;
                    xm2[i] -= h;
                    const auto jp = base.chi_jets(xp2), jm = base.chi_jets(xm2);
                    for (std::size_t z = 0; z < count; ++z) {
                        const Eigen::VectorXd fd = (jp[z].gradient - jm[z].gradient) / (2.0 * h);
                        const double scale_h = 1.0 + jets[z].hessian.cwiseAbs().maxCoeff();
                        smooth = std::max(smooth, (fd - jets[z].hessian.col(i)).cwiseAbs().maxCoeff() / scale_h);
                        smooth = std::max(smooth, std::abs((jp[z].value - jm[z].value) / (2.0 * h) -
                                                           jets[z].gradient[i]));
                    }
                }
            }
        }
        out.push_back(at_most("partition.nonnegative", par, negative, 0.0));
        out.push_back(at_most("partition.smoothness", par, smooth, 1e-4));
        out.push_back(at_most("partition.homogeneity", par, homog, 1e-12));
        out.push_back(at_most("partition.sum_of_squares", par, sum_err, 1e-12));
        out.push_back({"partition.zeta_sum_positive", par, min_zeta, 0.0, min_zeta > 0.0});
        // N = 1 meets the bound with equality (the only distance is |x_1| = |X|).
        out.push_back(n == 1 ? at_least("partition.separation", par, sep_ratio, 1.0 - 1e-12)
                             : CheckRecord{"partition.separation", par, sep_ratio, 1.0, sep_ratio > 1.0});
        out.push_back(at_most("partition.inner_support", par, inner, 1.0));
        out.push_back(at_most("partition.rotation", par, rot, 1e-12));
        out.push_back(at_most("partition.permutation", par, perm_err, 1e-12));

        // sup |grad chi^R| at X = R Y over R in {1, 2, 4, 8}.
        std::vector<std::vector<double>> ys;
        for (int t = 0; t < 200; ++t) {
            std::vector<double> y(3 * n);
            for (auto& v : y) v = unit(rng);
            const double len = std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
            const double target = 0.4 + 1.4 * (unit(rng) + 1.0) / 2.0;
            for (auto& v : y) v *= target / len;
            ys.push_back(std::move(y));
        }
        const std::vector<double> scales{1.0, 2.0, 4.0, 8.0};
        std::vector<double> sups;
        for (double r : scales) {
            const auto part = PartitionOfUnity::build(n, r);
            double sup = 0.0;
            for (const auto& y : ys) {
                std::vector<double> x(y);
                for (auto& v : x) v *= r;
                for (const auto& j : part.chi_jets(x)) sup = std::max(sup, j.gradient.norm());
            }
            sups.push_back(sup);
        }
        const double slope = loglog_slope(scales, sups);
        out.push_back({"partition.gradient_slope", par + ";R=1,2,4,8", slope, -1.0, slope >= -1.3 && slope <= -0.7});
    }
    return out;
}

std::vector<CheckRecord> commutator_checks(const CheckSettings& settings) {
    std::vector<CheckRecord> out;
    PowerOptions power;
    power.seed = settings.seed;

    const auto small = full_grid(12, 24.0, 1);
    const Cutoff flat{[](const Vec3&) { return 0.7; }, [](const Vec3&) { return Vec3::Zero().eval(); }};
    out.push_back(at_most("commutator.constant", "points=12;box=24;m=1",
                          commutator_norm(small, flat, Mass(1.0), power).norm, 1e-12));

    PlanarOptions planar;
    planar.points = settings.commutator_points;
    planar.box = settings.commutator_box;
    planar.power = power;
    const Mass m(settings.commutator_mass);
    const std::string base =
        fmt("slab;points=%d;box=%g;m=%g", settings.commutator_points, settings.commutator_box, m.value());
    const std::vector<double> radii{4.0, 8.0, 16.0, 32.0};
    std::vector<double> norms;
    for (double r : radii) {
        const auto e = planar_commutator_norm([r](double z) { return 1.0 - step(std::abs(z) / r); }, m, planar);
        norms.push_back(e.norm);
        out.push_back({"commutator.norm", base + fmt(";R=%g;iterations=%d", r, e.iterations), e.norm, 0.0, e.converged});
    }
    for (std::size_t i = 0; i + 1 < radii.size(); ++i)
        out.push_back(at_most("commutator.halving", base + fmt(";R=%g", radii[i]), norms[i + 1] / norms[i], 0.75));
    const double slope = loglog_slope(radii, norms);
    out.push_back({"commutator.slope", base + ";R=4,8,16,32", slope, -1.0, slope >= -1.3 && slope <= -0.7});
    return out;
}

std::vector<CheckRecord> kernel_checks(const CheckSettings& settings) {
    std::vector<CheckRecord> out;
    const Mass m(1.0);
    // 8^3 with spacing exactly 1 / (4m).
    const auto grid = full_grid(8, 2.0, 1);
    const std::string par = "points=8;box=2;m=1";
    auto max_diff = [](const SpinorField& a, const SpinorField& b) {
        double s = 0.0, n = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            s = std::max(s, std::abs(a.values()[i] - b.values()[i]));
            n = std::max(n, std::abs(b.values()[i]));
        }
        return n > 0.0 ? s / n : s;
    };

    // Gaussian spinor in the position representation.
    std::mt19937_64 rng(settings.seed);
    std::normal_distribution<double> gauss;
    Eigen::Vector4cd spin;
    for (int a = 0; a < 4; ++a) spin[a] = {gauss(rng), gauss(rng)};
    SpinorField f(grid, Representation::position);
    for (std::size_t s = 0; s < grid.sites(); ++s) {
        const double w = std::exp(-grid.position(s).squaredNorm() / (2.0 * 0.3 * 0.3));
        for (int a = 0; a < 4; ++a) f.values()[4 * s + a] = w * spin[a];
    }
    const double masses[] = {1.0};
    const auto kern = bessel_kernel_apply(f, m);
    const auto proj = apply_projectors(f, {0}, masses);
    out.push_back(at_most("kernel.projector_agreement", par, max_diff(kern, proj), 1e-4));

    // Positive-energy plane wave is a fixed point.
    const std::size_t site = 3 + 8 * (5 + 8 * 2);
    const Vec3 p = grid.symbol_momentum(site);
    const Mat4 lam = projector_symbol(p, m);
    SpinorField wave(grid, Representation::momentum);
    const Eigen::Vector4cd ws = lam * spin;
    for (int a = 0; a < 4; ++a) wave.values()[4 * site + a] = ws[a];
    out.push_back(at_most("kernel.positive_fixed_point", par, max_diff(bessel_kernel_apply(wave, m), wave), 1e-10));

    // Lower spinor at zero momentum is annihilated.
    std::size_t zero = 0;
    for (std::size_t s = 0; s < grid.sites(); ++s)
        if (grid.momentum(s).squaredNorm() == 0.0) zero = s;
    SpinorField lower(grid, Representation::momentum);
    lower.values()[4 * zero + 2] = 1.0;
    lower.values()[4 * zero + 3] = cplx(0.0, 1.0);
    double lower_norm = 0.0;
    for (cplx c : bessel_kernel_apply(lower, m).values()) lower_norm = std::max(lower_norm, std::abs(c));
    out.push_back(at_most("kernel.negative_annihilated", par, lower_norm, 1e-10));

    // Commutator with a smooth periodic multiplier both ways.
    const double box = grid.box_length();
    const auto c = [box](std::span<const Vec3> x) { return 1.0 + 0.3 * std::cos(2.0 * pi * x[0][0] / box); };
    const auto direct = apply_commutator(f, c, {0}, masses);
    auto via_kernel = multiply_cutoff(bessel_kernel_apply(f, m), c);
    const auto second = bessel_kernel_apply(multiply_cutoff(f, c), m);
    for (std::size_t i = 0; i < via_kernel.size(); ++i) via_kernel.values()[i] -= second.values()[i];
    out.push_back(at_most("kernel.commutator_crosscheck", par, max_diff(via_kernel, direct), 1e-6));
    return out;
}

std::vector<CheckRecord> multiplier_checks(const CheckSettings& settings) {
    std::vector<CheckRecord> out;
    const auto grid = full_grid(32, 32.0, 1);
    const std::string par = "points=32;box=32";
    const Cutoff one{[](const Vec3&) { return 1.0; }, [](const Vec3&) { return Vec3::Zero().eval(); }};

    const auto u = random_smooth_field(grid, 1.5, 3.0, settings.seed);
    std::vector<MultiplierSample> reference{multiplier_sample(one, u)};
    for (double r : {1.0, 2.0, 4.0}) reference.push_back(multiplier_sample(radial_bump(r), u));
    const auto bound = MultiplierBound::calibrate(reference);
    out.push_back({"multiplier.constant", par + ";reference=1,bump(1,2,4)", bound.constant(), 0.0, true});

    const double identity = bound.ratio(multiplier_sample(one, u));
    out.push_back(at_most("multiplier.identity", par, std::abs(identity * bound.constant() - 1.0), 1e-12));

    const auto fresh = random_smooth_field(grid, 2.0, 4.0, settings.seed + 1);
    out.push_back(at_most("multiplier.bump", par + ";R=3", bound.ratio(multiplier_sample(radial_bump(3.0), fresh)), 1.0));

    // Outer cutoffs eta(|x| / R) against a field concentrated near the origin.
    const auto local = random_smooth_field(grid, 2.0, 1.5, settings.seed + 2);
    double previous = std::numeric_limits<double>::infinity();
    bool monotone = true;
    std::string ratios;
    for (double r : {1.0, 2.0, 4.0, 8.0}) {
        const double q = bound.ratio(multiplier_sample(radial_step(r), local));
        monotone = monotone && q <= previous;
        previous = q;
        ratios += fmt("%s%.6g", ratios.empty() ? "" : "/", q);
    }
    out.push_back({"multiplier.step_monotone", par + ";R=1,2,4,8;ratios=" + ratios, previous, 1.0, monotone});
    return out;
}

std::vector<CheckRecord> ims_checks(const CheckSettings& settings) {
    std::vector<CheckRecord> out;
    {
        const auto grid = full_grid(16, 16.0, 1);
        const auto psi = random_smooth_field(grid, 2.0, 3.0, settings.seed);
        const auto partition = PartitionOfUnity::build(1, 2.0);
        const auto r = ims_first_order_check(partition, psi);
        out.push_back(at_most("ims.identity", "N=1;points=16;box=16;R=2", r.defect(), 1e-8));
        const double weights[] = {1.0, 1.2};
        const auto broken = ims_first_order_check(partition, psi, weights);
        out.push_back(at_least("ims.negative_control", "N=1;weights=1,1.2", broken.defect(), 1e-6));
    }
    {
        const auto grid = full_grid(6, 12.0, 2);
        const auto psi = random_smooth_field(grid, 1.5, 2.5, settings.seed + 1);
        const auto partition = PartitionOfUnity::build(2, 2.0);
        out.push_back(at_most("ims.identity", "N=2;points=6;box=12;R=2", ims_first_order_check(partition, psi).defect(),
                              1e-8));

        // [chi, L1 L2] = L1 [chi, L2] + [chi, L1] L2.
        const double masses[] = {1.0, 1.5};
        const auto chi = [](std::span<const Vec3> x) {
            return std::exp(-0.1 * (x[0] - x[1]).squaredNorm()) * (1.0 + 0.2 * x[0][2]);
        };
        const auto whole = apply_commutator(psi, chi, {0, 1}, masses);
        const auto a = apply_projectors(apply_commutator(psi, chi, {1}, masses), {0}, masses);
        const auto b = apply_commutator(apply_projectors(psi, {1}, masses), chi, {0}, masses);
        double err = 0.0;
        for (std::size_t i = 0; i < whole.size(); ++i)
            err = std::max(err, std::abs(whole.values()[i] - a.values()[i] - b.values()[i]));
        out.push_back(at_most("ims.commutator_factorization", "N=2;points=6;box=12", err, 1e-10));
    }
    return out;
}

}  // namespace hvz
