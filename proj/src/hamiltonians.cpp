#include "hvz/hamiltonians.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "hvz/dirac.hpp"
#include "slot_map.hpp"

namespace hvz {

namespace {

std::size_t ipow(std::size_t base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

std::string pname(int k) { return std::to_string(k); }

}  // namespace

const std::optional<Potential>& SystemSpec::external_of(int particle) const {
    static const std::optional<Potential> none;
    return external.empty() ? none : external.at(particle);
}

const PairTerm* SystemSpec::pair_between(int a, int b) const {
    for (const auto& p : pairs)
        if ((p.first == a && p.second == b) || (p.first == b && p.second == a)) return &p;
    return nullptr;
}

void validate_system(const SystemSpec& spec) {
    const int n = spec.particle_count();
    require(n >= 1, "invalid_system", "at least one particle required");
    for (double m : spec.masses) require(m > 0.0, "invalid_mass", "masses must be positive");
    require(spec.external.empty() || static_cast<int>(spec.external.size()) == n, "invalid_system",
            "external potentials must be given for every particle or none");
    for (const auto& v : spec.external)
        if (v) {
            require(v->is_scalar() || v->matrix_dim() == 4, "invalid_system", "external matrices must be 4x4");
            check_coupling_guard(*v, spec.allow_supercritical);
        }

    std::set<std::pair<int, int>> seen;
    for (const auto& p : spec.pairs) {
        require(p.first >= 0 && p.first < n && p.second >= 0 && p.second < n && p.first != p.second,
                "invalid_system", "pair term indices out of range");
        require(seen.insert(std::minmax(p.first, p.second)).second, "invalid_system",
                "duplicate pair term " + pname(p.first) + "," + pname(p.second));
        if (!p.potential.is_scalar())
            require(p.potential.matrix_dim() == 16 && p.first < p.second, "invalid_system",
                    "tabulated pair terms must be 16x16 with first < second");
    }

    std::vector<int> group_of(n, -1);
    for (std::size_t g = 0; g < spec.identical.size(); ++g)
        for (int k : spec.identical[g]) {
            require(k >= 0 && k < n, "identical_particles", "identical particle index out of range");
            require(group_of[k] < 0, "identical_particles", "particle " + pname(k) + " declared twice");
            group_of[k] = static_cast<int>(g);
        }
    for (const auto& group : spec.identical)
        for (std::size_t i = 1; i < group.size(); ++i) {
            const int k = group[0], l = group[i];
            const std::string which = "particles " + pname(k) + " and " + pname(l);
            require(spec.masses[k] == spec.masses[l], "identical_particles", which + " have different masses");
            require(spec.external_of(k) == spec.external_of(l), "identical_particles",
                    which + " have different external potentials");
            for (int j = 0; j < n; ++j) {
                if (j == k || j == l) continue;
                const PairTerm* a = spec.pair_between(k, j);
                const PairTerm* b = spec.pair_between(l, j);
                const bool same = (!a && !b) || (a && b && a->potential == b->potential);
                require(same, "identical_particles", which + " interact differently with particle " + pname(j));
            }
        }
}

ClusterDecomposition ClusterDecomposition::from_first(int particle_count, std::vector<int> first) {
    std::sort(first.begin(), first.end());
    require(std::adjacent_find(first.begin(), first.end()) == first.end(), "invalid_cluster",
            "cluster lists a particle twice");
    ClusterDecomposition z;
    for (int k : first) require(k >= 0 && k < particle_count, "invalid_cluster", "cluster index out of range");
    for (int k = 0; k < particle_count; ++k)
        if (!std::binary_search(first.begin(), first.end(), k)) z.second.push_back(k);
    z.first = std::move(first);
    return z;
}

const std::vector<int>& ClusterDecomposition::cluster(int which) const {
    require(which == 1 || which == 2, "invalid_cluster", "cluster selector must be 1 or 2");
    return which == 1 ? first : second;
}

Hamiltonian assemble_subset(const MomentumGrid& grid, const SystemSpec& spec, std::vector<int> particles,
                            bool with_external, const BasisGauge& gauge) {
    validate_system(spec);
    require(!particles.empty(), "empty_cluster", "cluster must contain at least one particle");
    for (int k : particles)
        require(k >= 0 && k < spec.particle_count(), "invalid_cluster", "particle index out of range");
    const int count = static_cast<int>(particles.size());
    const auto g = MomentumGrid::make(grid.points(), grid.p_max(), count, SpinorMode::compressed,
                                      grid.memory_budget());

    Hamiltonian h(g);
    h.particles_ = particles;
    const std::size_t sites = g.sites();
    const BasisGauge basis = gauge ? gauge : BasisGauge(positive_basis);
    for (int k : particles) {
        const double m = spec.masses[k];
        h.masses_.push_back(m);
        std::vector<double> disp(sites);
        std::vector<Mat42> u(sites);
        for (std::size_t s = 0; s < sites; ++s) {
            disp[s] = std::sqrt(g.momentum(s).squaredNorm() + m * m);
            u[s] = basis(g.symbol_momentum(s), Mass(m));
        }
        h.dispersion_.push_back(std::move(disp));
        h.basis_.push_back(std::move(u));
    }

    const double cell = g.dx();
    if (with_external)
        for (int slot = 0; slot < count; ++slot) {
            const auto& v = spec.external_of(particles[slot]);
            if (!v) continue;
            Hamiltonian::External e{slot, {}, {}};
            for (std::size_t s = 0; s < sites; ++s) {
                if (v->is_scalar())
                    e.scalar.push_back(v->scalar_value(g.position(s), cell));
                else
                    e.matrix.push_back(v->sample_position(g.position(s), cell, 4));
            }
            h.externals_.push_back(std::move(e));
        }

    for (const auto& p : spec.pairs) {
        const auto a = std::find(particles.begin(), particles.end(), p.first);
        const auto b = std::find(particles.begin(), particles.end(), p.second);
        if (a == particles.end() || b == particles.end()) continue;
        Hamiltonian::Pair term{static_cast<int>(a - particles.begin()), static_cast<int>(b - particles.begin()), {}, {}};
        if (p.potential.is_scalar()) {
            if (term.slot_a > term.slot_b) std::swap(term.slot_a, term.slot_b);
            for (std::size_t s = 0; s < sites; ++s) term.scalar.push_back(p.potential.scalar_value(g.position(s), cell));
        } else {
            require(term.slot_a < term.slot_b, "invalid_cluster", "cluster must keep tabulated pair order");
            for (std::size_t s = 0; s < sites; ++s) term.matrix.push_back(p.potential.sample_position(g.position(s), cell, 16));
        }
        h.pairs_.push_back(std::move(term));
    }

    if (h.has_potentials()) {
        const double bytes = std::pow(static_cast<double>(sites) * 4.0, count) * sizeof(cplx);
        require(bytes <= static_cast<double>(g.memory_budget()), "memory_budget",
                "potential application needs " + std::to_string(bytes) + " bytes per work array");
    }
    return h;
}

Hamiltonian assemble_full(const MomentumGrid& grid, const SystemSpec& spec, const BasisGauge& gauge) {
    std::vector<int> all(spec.masses.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<int>(k);
    return assemble_subset(grid, spec, std::move(all), true, gauge);
}

Hamiltonian assemble_cluster(const ClusterDecomposition& z, int which, const MomentumGrid& grid,
                             const SystemSpec& spec, const BasisGauge& gauge) {
    require(z.particle_count() == spec.particle_count(), "invalid_cluster", "decomposition does not match system");
    return assemble_subset(grid, spec, z.cluster(which), which == 1, gauge);
}

double Hamiltonian::kinetic_at(std::size_t index) const {
    const std::size_t block = grid_.block();
    double e = 0.0;
    for (int k = grid_.particles() - 1; k >= 0; --k) {
        e += dispersion_[k][(index % block) / 2];
        index /= block;
    }
    return e;
}

void Hamiltonian::apply(std::span<const cplx> in, std::span<cplx> out) const {
    require(in.size() == dim() && out.size() == dim(), "dimension_mismatch", "operator size mismatch");
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = kinetic_at(i) * in[i];
    if (has_potentials()) add_potentials(in, out);
}

SpinorField Hamiltonian::apply(const SpinorField& field) const {
    require(field.grid() == grid_ && field.representation() == Representation::momentum, "representation_mismatch",
            "field must be a compressed momentum field on the operator grid");
    std::vector<cplx> out(dim());
    apply(field.values(), out);
    return SpinorField(grid_, Representation::momentum, std::move(out));
}

void Hamiltonian::add_potentials(std::span<const cplx> in, std::span<cplx> out) const {
    const int count = grid_.particles();
    const std::size_t sites = grid_.sites();
    std::vector<int> dims(count, 2);
    std::vector<cplx> data(in.begin(), in.end());
    for (int k = 0; k < count; ++k) {
        data = detail::map_slot(data, sites, dims, k, 4, [&](std::size_t s) -> const Mat42& { return basis_[k][s]; });
        dims[k] = 4;
    }
    const auto full = grid_.with_mode(SpinorMode::full);
    const auto pos = transform(SpinorField(full, Representation::momentum, std::move(data)), Representation::position);

    std::vector<cplx> acc(pos.size(), cplx(0.0));
    multiply_position(pos.values(), acc);
    auto back = transform(SpinorField(full, Representation::position, std::move(acc)), Representation::momentum);

    data.assign(back.values().begin(), back.values().end());
    for (int k = 0; k < count; ++k) {
        data = detail::map_slot(data, sites, dims, k, 2, [&](std::size_t s) {
            return Eigen::Matrix<cplx, 2, 4>(basis_[k][s].adjoint());
        });
        dims[k] = 2;
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += data[i];
}

void Hamiltonian::multiply_position(std::span<const cplx> in, std::span<cplx> acc) const {
    const int count = grid_.particles();
    const std::size_t sites = grid_.sites();
    const std::size_t block = sites * 4;

    for (const auto& e : externals_) {
        const std::size_t outer = ipow(block, e.slot);
        const std::size_t inner = ipow(block, count - 1 - e.slot);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t s = 0; s < sites; ++s) {
                const std::size_t base = (o * sites + s) * 4 * inner;
                if (!e.scalar.empty()) {
                    const double v = e.scalar[s];
                    for (std::size_t i = 0; i < 4 * inner; ++i) acc[base + i] += v * in[base + i];
                    continue;
                }
                const Mat4& m = e.matrix[s];
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b) {
                        const cplx c = m(a, b);
                        if (c == cplx(0.0)) continue;
                        for (std::size_t i = 0; i < inner; ++i) acc[base + a * inner + i] += c * in[base + b * inner + i];
                    }
            }
    }

    if (pairs_.empty()) return;
    // Site of the wrapped difference x_a - x_b from raw (0..n-1) indices.
    const std::size_t n = static_cast<std::size_t>(grid_.points());
    const std::size_t half = n / 2;
    auto diff_site = [&](std::size_t sa, std::size_t sb) {
        std::size_t d = 0;
        std::size_t scale = n * n;
        for (int axis = 0; axis < 3; ++axis) {
            const std::size_t ra = (sa / scale) % n;
            const std::size_t rb = (sb / scale) % n;
            d += ((ra + n - rb + half) % n) * scale;
            scale /= n;
        }
        return d;
    };

    for (const auto& p : pairs_) {
        const std::size_t outer = ipow(block, p.slot_a);
        const std::size_t middle = ipow(block, p.slot_b - p.slot_a - 1);
        const std::size_t inner = ipow(block, count - 1 - p.slot_b);
        // index = (((((o*sites + sa)*4 + a)*middle + mid)*sites + sb)*4 + b)*inner + i
        const std::size_t stride_b = 4 * inner;
        const std::size_t stride_sb = 4 * inner;
        const std::size_t stride_mid = sites * stride_sb;
        const std::size_t stride_a = middle * stride_mid;
        const std::size_t stride_sa = 4 * stride_a;
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t sa = 0; sa < sites; ++sa)
                for (std::size_t sb = 0; sb < sites; ++sb) {
                    const std::size_t d = diff_site(sa, sb);
                    const std::size_t base = o * sites * stride_sa + sa * stride_sa + sb * stride_sb;
                    for (std::size_t mid = 0; mid < middle; ++mid) {
                        const std::size_t b0 = base + mid * stride_mid;
                        if (!p.scalar.empty()) {
                            const double v = p.scalar[d];
                            for (int a = 0; a < 4; ++a)
                                for (std::size_t i = 0; i < stride_b; ++i)
                                    acc[b0 + a * stride_a + i] += v * in[b0 + a * stride_a + i];
                            continue;
                        }
                        const CMat& m = p.matrix[d];
                        for (int row = 0; row < 16; ++row)
                            for (int col = 0; col < 16; ++col) {
                                const cplx c = m(row, col);
                                if (c == cplx(0.0)) continue;
                                const std::size_t to = b0 + (row / 4) * stride_a + (row % 4) * inner;
                                const std::size_t from = b0 + (col / 4) * stride_a + (col % 4) * inner;
                                for (std::size_t i = 0; i < inner; ++i) acc[to + i] += c * in[from + i];
                            }
                    }
                }
    }
}

double quadratic_form(const Hamiltonian& h, const SpinorField& field) {
    const auto hf = h.apply(field);
    const cplx v = field.inner(hf);
    const double norm2 = field.norm() * field.norm();
    require(std::abs(v.imag()) <= 1e-10 * (std::abs(v.real()) + norm2), "not_hermitian",
            "quadratic form has a non-negligible imaginary part");
    return v.real();
}

}  // namespace hvz
