#include "hvz/fibers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

#include "fft.hpp"
#include "hvz/dirac.hpp"

namespace hvz {

namespace {

std::size_t ipow(std::size_t base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

// Applies an (out x in) matrix to slot k of a small tensor with slot sizes `dims`.
template <class M>
void map_tensor_slot(std::vector<cplx>& v, std::vector<int>& dims, int k, int out_dim, const M& m) {
    std::size_t outer = 1, inner = 1;
    for (int l = 0; l < k; ++l) outer *= dims[l];
    for (std::size_t l = k + 1; l < dims.size(); ++l) inner *= dims[l];
    const int in_dim = dims[k];
    std::vector<cplx> w(outer * out_dim * inner, cplx(0.0));
    for (std::size_t o = 0; o < outer; ++o)
        for (int a = 0; a < out_dim; ++a)
            for (int b = 0; b < in_dim; ++b) {
                const cplx c = m(a, b);
                if (c == cplx(0.0)) continue;
                const cplx* src = v.data() + (o * in_dim + b) * inner;
                cplx* dst = w.data() + (o * out_dim + a) * inner;
                for (std::size_t i = 0; i < inner; ++i) dst[i] += c * src[i];
            }
    v = std::move(w);
    dims[k] = out_dim;
}

Mat3 signed_permutation(const std::array<int, 3>& axes, const std::array<int, 3>& signs) {
    Mat3 r = Mat3::Zero();
    for (int i = 0; i < 3; ++i) r(i, axes[i]) = signs[i];
    return r;
}

// The 24 rotations of the cube.
std::vector<Mat3> cube_rotations() {
    std::vector<Mat3> out;
    std::array<int, 3> axes{0, 1, 2};
    do {
        for (int s = 0; s < 8; ++s) {
            const Mat3 r = signed_permutation(axes, {s & 1 ? -1 : 1, s & 2 ? -1 : 1, s & 4 ? -1 : 1});
            if (r.determinant() > 0.5) out.push_back(r);
        }
    } while (std::next_permutation(axes.begin(), axes.end()));
    return out;
}

Mat4 spin_of(const Mat3& r) {
    const Eigen::AngleAxisd aa(r);
    if (std::abs(aa.angle()) < 1e-14) return Mat4::Identity();
    return spin_rotation(aa.axis(), aa.angle());
}

// A 16x16 pair table must transform covariantly under the cube rotations.
void require_cubic_invariance(const MomentumGrid& g, const std::vector<CMat>& table) {
    const int h = g.points() / 2;
    for (const Mat3& r : cube_rotations()) {
        const Mat4 u = spin_of(r);
        CMat uu(16, 16);
        for (int a = 0; a < 16; ++a)
            for (int b = 0; b < 16; ++b) uu(a, b) = u(a / 4, b / 4) * u(a % 4, b % 4);
        for (std::size_t s = 0; s < g.sites(); ++s) {
            const auto c = g.coords(s);
            if (c[0] == -h || c[1] == -h || c[2] == -h) continue;
            const Vec3 rc = r * Vec3(c[0], c[1], c[2]);
            const std::size_t t = g.site_of({static_cast<int>(std::lround(rc[0])), static_cast<int>(std::lround(rc[1])),
                                             static_cast<int>(std::lround(rc[2]))});
            const CMat expect = uu * table[s] * uu.adjoint();
            require((table[t] - expect).norm() <= 1e-10 * (1.0 + table[s].norm()), "fiber_noninvariant",
                    "tabulated pair potential is not rotation invariant; fibers fix the total-momentum direction");
        }
    }
}

}  // namespace

FiberOperator::FiberOperator(const MomentumGrid& lattice, const SystemSpec& spec, std::vector<int> cluster,
                             double total_momentum, const Vec3& direction, const BasisGauge& gauge)
    : lattice_(MomentumGrid::make(lattice.points(), lattice.p_max(), 1, SpinorMode::compressed,
                                  lattice.memory_budget())),
      cluster_(std::move(cluster)),
      total_momentum_(total_momentum) {
    validate_system(spec);
    require(!cluster_.empty(), "empty_cluster", "fiber operator needs a nonempty cluster");
    std::sort(cluster_.begin(), cluster_.end());
    require(std::adjacent_find(cluster_.begin(), cluster_.end()) == cluster_.end(), "invalid_cluster",
            "cluster lists a particle twice");
    for (int k : cluster_)
        require(k >= 0 && k < spec.particle_count(), "invalid_cluster", "cluster index out of range");
    require(total_momentum >= 0.0 && std::isfinite(total_momentum), "invalid_request",
            "total momentum must be finite and nonnegative");
    require(direction.norm() > 0.0, "invalid_request", "fiber direction must be nonzero");
    direction_ = direction.normalized();

    const int size = members();
    const std::size_t sites = lattice_.sites();
    multisites_ = ipow(sites, size - 1);
    spin_dim_ = ipow(2, size);
    for (int k : cluster_) {
        masses_.push_back(spec.masses[k]);
        total_mass_ += spec.masses[k];
    }

    for (const auto& p : spec.pairs) {
        const auto a = std::find(cluster_.begin(), cluster_.end(), p.first);
        const auto b = std::find(cluster_.begin(), cluster_.end(), p.second);
        if (a == cluster_.end() || b == cluster_.end()) continue;
        Pair term{static_cast<int>(a - cluster_.begin()), static_cast<int>(b - cluster_.begin()), {}, {}};
        const double cell = lattice_.dx();
        if (p.potential.is_scalar()) {
            if (term.slot_a > term.slot_b) std::swap(term.slot_a, term.slot_b);
            for (std::size_t s = 0; s < sites; ++s)
                term.scalar.push_back(p.potential.scalar_value(lattice_.position(s), cell));
        } else {
            for (std::size_t s = 0; s < sites; ++s)
                term.matrix.push_back(p.potential.sample_position(lattice_.position(s), cell, 16));
            require_cubic_invariance(lattice_, term.matrix);
        }
        pairs_.push_back(std::move(term));
    }

    const double state_bytes = static_cast<double>(dim()) * sizeof(cplx);
    const double work_bytes = pairs_.empty() ? 0.0 : static_cast<double>(multisites_) * std::pow(4.0, size) * sizeof(cplx);
    require(std::max(state_bytes, work_bytes) <= static_cast<double>(lattice_.memory_budget()), "memory_budget",
            "fiber operator needs " + std::to_string(std::max(state_bytes, work_bytes)) + " bytes per work array");

    const BasisGauge basis = gauge ? gauge : BasisGauge(positive_basis);
    const int h = lattice_.points() / 2;
    const double dp = lattice_.dp();
    for (int k = 0; k < size; ++k) {
        const Vec3 offset = masses_[k] / total_mass_ * total_momentum_ * direction_;
        const double m = masses_[k];
        std::vector<double> disp(sites);
        std::vector<Mat42> u(sites);
        for (std::size_t s = 0; s < sites; ++s) {
            const auto c = lattice_.coords(s);
            int nyquist = 0;
            for (int a = 0; a < 3; ++a)
                if (c[a] == -h) nyquist |= 1 << a;
            double sum = 0.0;
            int count = 0;
            for (int flip = 0; flip < 8; ++flip) {
                if ((flip & ~nyquist) != 0) continue;
                Vec3 p = offset;
                for (int a = 0; a < 3; ++a) p[a] += dp * ((flip >> a) & 1 ? -c[a] : c[a]);
                sum += std::sqrt(p.squaredNorm() + m * m);
                ++count;
            }
            disp[s] = sum / count;
            u[s] = basis(offset + lattice_.symbol_momentum(s), Mass(m));
        }
        dispersion_.push_back(std::move(disp));
        basis_.push_back(std::move(u));
    }

    kinetic_.resize(multisites_);
    for (std::size_t q = 0; q < multisites_; ++q) {
        const auto cls = classes(q);
        double e = 0.0;
        for (int k = 0; k < size; ++k) e += dispersion_[k][cls[k]];
        kinetic_[q] = e;
    }
}

std::vector<std::size_t> FiberOperator::classes(std::size_t multisite) const {
    const int size = members();
    const std::size_t sites = lattice_.sites();
    std::vector<std::size_t> cls(size);
    std::array<int, 3> total{0, 0, 0};
    for (int k = size - 1; k >= 1; --k) {
        cls[k] = multisite % sites;
        multisite /= sites;
        const auto c = lattice_.coords(cls[k]);
        for (int a = 0; a < 3; ++a) total[a] -= c[a];
    }
    cls[0] = lattice_.site_of(total);
    return cls;
}

std::size_t FiberOperator::multisite_of(std::span<const std::size_t> cls) const {
    std::size_t q = 0;
    for (int k = 1; k < members(); ++k) q = q * lattice_.sites() + cls[k];
    return q;
}

Vec3 FiberOperator::member_momentum(int member, std::size_t lattice_class) const {
    return masses_.at(member) / total_mass_ * total_momentum_ * direction_ + lattice_.momentum(lattice_class);
}

double FiberOperator::kinetic_at(std::size_t index) const { return kinetic_[index / spin_dim_]; }

void FiberOperator::apply(std::span<const cplx> in, std::span<cplx> out) const {
    require(in.size() == dim() && out.size() == dim(), "dimension_mismatch", "fiber operator size mismatch");
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = kinetic_[i / spin_dim_] * in[i];
    if (!pairs_.empty()) add_pairs(in, out);
}

void FiberOperator::add_pairs(std::span<const cplx> in, std::span<cplx> out) const {
    const int size = members();
    const int K = size - 1;
    const std::size_t wide = ipow(4, size);
    const std::size_t n = static_cast<std::size_t>(lattice_.points());
    const std::size_t sites = lattice_.sites();

    // Parity of the summed raw coordinates gives the centered-lattice phase.
    auto parity = [&](std::size_t q) {
        std::size_t p = 0;
        for (int k = 0; k < K; ++k) {
            const std::size_t s = q % sites;
            q /= sites;
            p += s / (n * n) + (s / n) % n + s % n;
        }
        return (p & 1) != 0;
    };

    std::vector<cplx> data(multisites_ * wide);
    for (std::size_t q = 0; q < multisites_; ++q) {
        const auto cls = classes(q);
        std::vector<cplx> v(in.begin() + q * spin_dim_, in.begin() + (q + 1) * spin_dim_);
        std::vector<int> dims(size, 2);
        for (int k = 0; k < size; ++k) map_tensor_slot(v, dims, k, 4, basis_[k][cls[k]]);
        const double sign = parity(q) ? -1.0 : 1.0;
        for (std::size_t i = 0; i < wide; ++i) data[q * wide + i] = sign * v[i];
    }

    std::vector<detail::FftDim> axes;
    for (int k = 0; k < K; ++k) {
        const auto stride = static_cast<std::ptrdiff_t>(wide * ipow(sites, K - 1 - k));
        const auto ns = static_cast<std::ptrdiff_t>(n);
        axes.push_back({ns, stride * ns * ns});
        axes.push_back({ns, stride * ns});
        axes.push_back({ns, stride});
    }
    const std::vector<detail::FftDim> batch{{static_cast<std::ptrdiff_t>(wide), 1}};
    if (K > 0) detail::FftPlan(axes, batch, FFTW_BACKWARD).execute(data.data());

    // Difference site of x_a - x_b; member 0 sits at the origin.
    const std::size_t half = n / 2;
    const std::size_t origin = (half * n + half) * n + half;
    auto diff_site = [&](std::size_t sa, std::size_t sb) {
        std::size_t d = 0, scale = n * n;
        for (int axis = 0; axis < 3; ++axis) {
            const std::size_t ra = (sa / scale) % n, rb = (sb / scale) % n;
            d += ((ra + n - rb + half) % n) * scale;
            scale /= n;
        }
        return d;
    };

    std::vector<cplx> acc(data.size(), cplx(0.0));
    std::vector<std::size_t> where(size);
    for (std::size_t y = 0; y < multisites_; ++y) {
        where[0] = origin;
        std::size_t rest = y;
        for (int k = K; k >= 1; --k) {
            where[k] = rest % sites;
            rest /= sites;
        }
        const cplx* src = data.data() + y * wide;
        cplx* dst = acc.data() + y * wide;
        for (const auto& p : pairs_) {
            const std::size_t d = diff_site(where[p.slot_a], where[p.slot_b]);
            if (!p.scalar.empty()) {
                const double v = p.scalar[d];
                for (std::size_t i = 0; i < wide; ++i) dst[i] += v * src[i];
                continue;
            }
            // index = ((outer*4 + a)*middle + mid)*4 + b)*inner + i over slot digits.
            const std::size_t inner = ipow(4, size - 1 - p.slot_b);
            const std::size_t middle = ipow(4, p.slot_b - p.slot_a - 1);
            const std::size_t outer = ipow(4, p.slot_a);
            const std::size_t stride_b = inner, stride_a = 4 * middle * inner;
            const CMat& m = p.matrix[d];
            for (std::size_t o = 0; o < outer; ++o)
                for (std::size_t mid = 0; mid < middle; ++mid) {
                    const std::size_t base = o * 4 * stride_a + mid * 4 * inner;
                    for (int row = 0; row < 16; ++row)
                        for (int col = 0; col < 16; ++col) {
                            const cplx c = m(row, col);
                            if (c == cplx(0.0)) continue;
                            const std::size_t to = base + (row / 4) * stride_a + (row % 4) * stride_b;
                            const std::size_t from = base + (col / 4) * stride_a + (col % 4) * stride_b;
                            for (std::size_t i = 0; i < inner; ++i) dst[to + i] += c * src[from + i];
                        }
                }
        }
    }

    if (K > 0) detail::FftPlan(axes, batch, FFTW_FORWARD).execute(acc.data());
    const double scale = 1.0 / static_cast<double>(multisites_);
    for (std::size_t q = 0; q < multisites_; ++q) {
        const auto cls = classes(q);
        const double sign = parity(q) ? -scale : scale;
        std::vector<cplx> v(acc.begin() + q * wide, acc.begin() + (q + 1) * wide);
        std::vector<int> dims(size, 4);
        for (int k = 0; k < size; ++k)
            map_tensor_slot(v, dims, k, 2, Eigen::Matrix<cplx, 2, 4>(basis_[k][cls[k]].adjoint()));
        for (std::size_t i = 0; i < spin_dim_; ++i) out[q * spin_dim_ + i] += sign * v[i];
    }
}

std::vector<cplx> apply_fiber_element(const FiberOperator& fiber, const FiniteGroup& group, int element,
                                      std::span<const cplx> in) {
    require(in.size() == fiber.dim(), "dimension_mismatch", "fiber state size mismatch");
    const int size = fiber.members();
    const std::size_t spin = fiber.spin_dim();
    const auto& el = group.elements().at(element);
    std::vector<cplx> out(in.size(), cplx(0.0));

    if (group.kind() == GroupKind::permutation) {
        require(group.particle_count() == size, "dimension_mismatch",
                "permutation group acts on a different number of cluster members");
        for (int k = 0; k < size; ++k)
            require(fiber.masses()[el.perm[k]] == fiber.masses()[k], "identical_particles",
                    "fiber permutations may only exchange members of equal mass");
        std::vector<std::size_t> spin_map(spin);
        for (std::size_t s = 0; s < spin; ++s) {
            std::size_t t = 0;
            for (int k = 0; k < size; ++k)
                if ((s >> (size - 1 - k)) & 1) t |= std::size_t{1} << (size - 1 - el.perm[k]);
            spin_map[s] = t;
        }
        std::vector<std::size_t> moved(size);
        for (std::size_t q = 0; q < fiber.multisites(); ++q) {
            const auto cls = fiber.classes(q);
            for (int k = 0; k < size; ++k) moved[el.perm[k]] = cls[k];
            const std::size_t target = fiber.multisite_of(moved);
            for (std::size_t s = 0; s < spin; ++s) out[target * spin + spin_map[s]] = in[q * spin + s];
        }
        return out;
    }

    require((el.rotation * fiber.direction() - fiber.direction()).norm() < 1e-12, "fiber_symmetry",
            "point element " + el.label + " does not fix the fiber direction");
    const auto& g = fiber.lattice();
    std::vector<std::size_t> image(g.sites());
    for (std::size_t s = 0; s < g.sites(); ++s) {
        const auto c = g.coords(s);
        const Vec3 r = el.rotation * Vec3(c[0], c[1], c[2]);
        image[s] = g.site_of({static_cast<int>(std::lround(r[0])), static_cast<int>(std::lround(r[1])),
                              static_cast<int>(std::lround(r[2]))});
    }
    std::vector<std::size_t> moved(size);
    for (std::size_t q = 0; q < fiber.multisites(); ++q) {
        const auto cls = fiber.classes(q);
        std::vector<cplx> v(in.begin() + q * spin, in.begin() + (q + 1) * spin);
        std::vector<int> dims(size, 2);
        for (int k = 0; k < size; ++k) {
            moved[k] = image[cls[k]];
            const Mat2 w = fiber.basis(k, moved[k]).adjoint() * el.spinor * fiber.basis(k, cls[k]);
            require((w.adjoint() * w - Mat2::Identity()).norm() < 1e-10, "improper_compressed",
                    "element " + el.label +
                        " does not preserve the positive-energy subspace; use the parity convention");
            map_tensor_slot(v, dims, k, 2, w);
        }
        const std::size_t target = fiber.multisite_of(moved);
        std::copy(v.begin(), v.end(), out.begin() + target * spin);
    }
    return out;
}

FiberProjector::FiberProjector(const FiberOperator& fiber, FiniteGroup group, std::string irrep)
    : fiber_(fiber), group_(std::move(group)) {
    const auto& ir = group_.irrep(irrep);
    for (int e = 0; e < group_.order(); ++e)
        weights_.push_back(std::conj(ir.characters[e]) * static_cast<double>(ir.dim) /
                           static_cast<double>(group_.order()));
}

void FiberProjector::apply(std::span<const cplx> in, std::span<cplx> out) const {
    std::fill(out.begin(), out.end(), cplx(0.0));
    for (int e = 0; e < group_.order(); ++e) {
        if (weights_[e] == cplx(0.0)) continue;
        const auto moved = apply_fiber_element(fiber_, group_, e, in);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += weights_[e] * moved[i];
    }
}

FiberSector::FiberSector(const FiberOperator& fiber, const SystemSpec& spec, const FiniteGroup* point_group,
                         const SectorLabels& labels) {
    if (!labels.permutation.empty())
        permutation_ = std::make_unique<FiberProjector>(
            fiber, cluster_permutation_group(spec.identical, fiber.cluster()), labels.permutation);
    if (!labels.point.empty()) {
        require(point_group != nullptr, "invalid_request", "point irrep given without a point group");
        point_ = std::make_unique<FiberProjector>(fiber, *point_group, labels.point);
    }
    if (permutation_ && point_)
        chain_ = std::make_unique<ProductOperator>(*permutation_, *point_);
    else if (permutation_)
        single_ = permutation_.get();
    else if (point_)
        single_ = point_.get();
}

FiberMinimum fiber_minimum(const MomentumGrid& lattice, const SystemSpec& spec, const std::vector<int>& cluster,
                           double total_momentum, const FiberOptions& options) {
    const FiberOperator fiber(lattice, spec, cluster, total_momentum, options.direction);
    const FiberSector sector(fiber, spec, options.point_group, options.sector);
    EigenOptions eo;
    eo.tol = options.tol;
    eo.max_matvecs = options.max_matvecs;
    eo.seed = options.seed;
    eo.projector = sector.projector();
    auto r = lowest_eigenpairs(fiber, eo);
    FiberMinimum out;
    out.value = r.values[0];
    out.residual = r.residuals[0];
    out.converged = r.converged[0];
    out.vector = std::move(r.vectors[0]);
    out.matvecs = r.matvecs;
    return out;
}

bool DispersionCurve::all_converged() const {
    return std::all_of(samples.begin(), samples.end(), [](const DispersionSample& s) { return s.converged; });
}

namespace {

FormConstants cluster_constants(const SystemSpec& spec, const std::vector<int>& cluster) {
    std::vector<Potential> pots;
    for (const auto& p : spec.pairs)
        if (std::count(cluster.begin(), cluster.end(), p.first) && std::count(cluster.begin(), cluster.end(), p.second))
            pots.push_back(p.potential);
    return default_form_constants(pots);
}

DispersionSample sample_at(const MomentumGrid& lattice, const SystemSpec& spec, const std::vector<int>& cluster,
                           double momentum, const FiberOptions& options) {
    const auto m = fiber_minimum(lattice, spec, cluster, momentum, options);
    return {momentum, m.value, m.residual, m.converged};
}

}  // namespace

DispersionCurve dispersion_scan(const MomentumGrid& lattice, const SystemSpec& spec, const std::vector<int>& cluster,
                                std::span<const double> momenta, const FiberOptions& options) {
    require(std::adjacent_find(momenta.begin(), momenta.end(), std::greater_equal<>()) == momenta.end(),
            "invalid_request", "momentum list must be strictly ascending");
    DispersionCurve curve;
    curve.points = lattice.points();
    curve.p_max = lattice.p_max();
    curve.constants = cluster_constants(spec, cluster);
    const double size = static_cast<double>(cluster.size());
    for (double p : momenta) {
        curve.samples.push_back(sample_at(lattice, spec, cluster, p, options));
        const auto& s = curve.samples.back();
        if (s.value < curve.constants.c1 * p / size - curve.constants.c2) curve.growth_floor_ok = false;
    }
    for (std::size_t i = 1; i < curve.samples.size(); ++i) {
        const auto& a = curve.samples[i - 1];
        const auto& b = curve.samples[i];
        const double jump = std::abs(b.value - a.value);
        curve.max_jump = std::max(curve.max_jump, jump);
        curve.lipschitz = std::max(curve.lipschitz, jump / (b.momentum - a.momentum));
    }
    return curve;
}

Kappa2Result kappa2(const MomentumGrid& lattice, const SystemSpec& spec, const std::vector<int>& cluster,
                    const Kappa2Options& options) {
    require(options.samples >= 3, "invalid_request", "kappa2 needs at least three momentum samples");
    Kappa2Result result;
    const auto constants = cluster_constants(spec, cluster);
    double stop = options.p_stop;
    if (stop <= 0.0) {
        const double mu0 = fiber_minimum(lattice, spec, cluster, 0.0, options.fiber).value;
        stop = 2.0 * static_cast<double>(cluster.size()) * (mu0 + constants.c2 + 1.0) / constants.c1;
    }
    result.p_stop = stop;
    std::vector<double> momenta(options.samples);
    for (int i = 0; i < options.samples; ++i) momenta[i] = stop * i / (options.samples - 1);
    result.curve = dispersion_scan(lattice, spec, cluster, momenta, options.fiber);

    const auto& s = result.curve.samples;
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i].value < s[best].value) best = i;
    require(best + 1 < s.size(), "widen_scan",
            "dispersion minimum sits at the end of the scan (P = " + std::to_string(stop) + "); widen the scan");
    result.value = s[best].value;
    result.momentum = s[best].momentum;

    // Golden-section search inside the bracket around the best sample.
    double lo = best == 0 ? 0.0 : s[best - 1].momentum;
    double hi = s[best + 1].momentum;
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    auto eval = [&](double p) {
        result.curve.samples.push_back(sample_at(lattice, spec, cluster, p, options.fiber));
        const double v = result.curve.samples.back().value;
        if (v < result.value) {
            result.value = v;
            result.momentum = p;
        }
        return v;
    };
    if (options.refine_steps > 0) {
        double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
        double f1 = eval(x1), f2 = eval(x2);
        for (int step = 2; step < options.refine_steps; ++step) {
            if (f1 <= f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = eval(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = eval(x2);
            }
        }
    }
    return result;
}

void write_dispersion_csv(const DispersionCurve& curve, const std::string& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "io_error", "cannot write " + path);
    out << "total_momentum,mu,residual,converged\n" << std::setprecision(17);
    for (const auto& s : curve.samples)
        out << s.momentum << ',' << s.value << ',' << s.residual << ',' << (s.converged ? 1 : 0) << '\n';
}

}  // namespace hvz
