#include "hvz/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "hvz/dirac.hpp"

namespace hvz {

namespace {

constexpr double kSame = 1e-9;

bool same_element(GroupKind kind, const GroupElement& a, const GroupElement& b) {
    if (kind == GroupKind::permutation) return a.perm == b.perm;
    return (a.rotation - b.rotation).cwiseAbs().maxCoeff() < kSame &&
           (a.spinor - b.spinor).cwiseAbs().maxCoeff() < kSame;
}

GroupElement compose(GroupKind kind, const GroupElement& a, const GroupElement& b) {
    GroupElement c;
    if (kind == GroupKind::permutation) {
        c.perm.resize(b.perm.size());
        for (std::size_t k = 0; k < b.perm.size(); ++k) c.perm[k] = a.perm[b.perm[k]];
    } else {
        c.rotation = a.rotation * b.rotation;
        c.spinor = a.spinor * b.spinor;
        c.improper = a.improper != b.improper;
    }
    return c;
}

GroupElement identity_element(GroupKind kind, int particles) {
    GroupElement e;
    e.label = "E";
    if (kind == GroupKind::permutation) {
        e.perm.resize(particles);
        std::iota(e.perm.begin(), e.perm.end(), 0);
    }
    return e;
}

CMat scalar(cplx v) { return CMat::Constant(1, 1, v); }

Mat3 snap_signed_permutation(const Mat3& r) {
    Mat3 out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double v = std::round(r(i, j));
            require(std::abs(v - r(i, j)) < 1e-9, "lattice_incompatible",
                    "point group element does not map the cubic lattice to itself");
            out(i, j) = v;
        }
    require((out.transpose() * out - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12, "lattice_incompatible",
            "point group element is not orthogonal");
    return out;
}

GroupElement point_element(std::string label, const Vec3& axis, double angle, bool improper,
                           InversionConvention convention) {
    GroupElement e;
    e.label = std::move(label);
    const Vec3 n = axis.normalized();
    const Mat3 rot = Eigen::AngleAxisd(angle, n).toRotationMatrix();
    e.rotation = snap_signed_permutation(improper ? Mat3(-rot) : rot);
    e.spinor = spin_rotation(n, angle);
    e.improper = improper;
    if (improper && convention == InversionConvention::parity) e.spinor = dirac_matrices().beta * e.spinor;
    return e;
}

// Applies a site-remapped spinor matrix to one particle slot.
template <class MatrixAt>
std::vector<cplx> remap_slot(std::span<const cplx> in, std::size_t sites, int spinor, int particles, int slot,
                             const std::vector<std::size_t>& src, MatrixAt&& matrix_at) {
    const std::size_t block = sites * spinor;
    std::size_t outer = 1, inner = 1;
    for (int k = 0; k < slot; ++k) outer *= block;
    for (int k = slot + 1; k < particles; ++k) inner *= block;
    std::vector<cplx> out(in.size(), cplx(0.0));
    for (std::size_t s = 0; s < sites; ++s) {
        const auto w = matrix_at(s);
        for (std::size_t o = 0; o < outer; ++o) {
            const cplx* from = in.data() + ((o * sites + src[s]) * spinor) * inner;
            cplx* to = out.data() + ((o * sites + s) * spinor) * inner;
            for (int a = 0; a < spinor; ++a)
                for (int b = 0; b < spinor; ++b) {
                    const cplx c = w(a, b);
                    if (c == cplx(0.0)) continue;
                    for (std::size_t i = 0; i < inner; ++i) to[a * inner + i] += c * from[b * inner + i];
                }
        }
    }
    return out;
}

}  // namespace

FiniteGroup FiniteGroup::from_generators(GroupKind kind, std::string name, int particle_count,
                                         const std::vector<GroupElement>& generators,
                                         const std::vector<std::string>& irrep_labels,
                                         const std::vector<std::vector<CMat>>& generator_images) {
    require(irrep_labels.size() == generator_images.size(), "inconsistent_table", "one image list per irrep");
    FiniteGroup g;
    g.kind_ = kind;
    g.name_ = std::move(name);
    g.particles_ = particle_count;
    g.elements_.push_back(identity_element(kind, particle_count));
    for (std::size_t r = 0; r < irrep_labels.size(); ++r) {
        require(generator_images[r].size() == generators.size(), "inconsistent_table",
                "irrep " + irrep_labels[r] + " needs one matrix per generator");
        Irrep irrep;
        irrep.label = irrep_labels[r];
        irrep.dim = generators.empty() ? 1 : static_cast<int>(generator_images[r][0].rows());
        irrep.matrices.push_back(CMat::Identity(irrep.dim, irrep.dim));
        g.irreps_.push_back(std::move(irrep));
    }

    for (std::size_t idx = 0; idx < g.elements_.size(); ++idx) {
        for (std::size_t s = 0; s < generators.size(); ++s) {
            GroupElement next = compose(kind, generators[s], g.elements_[idx]);
            const int found = g.find_element(next);
            std::vector<CMat> images;
            for (std::size_t r = 0; r < g.irreps_.size(); ++r)
                images.push_back(generator_images[r][s] * g.irreps_[r].matrices[idx]);
            if (found >= 0) {
                for (std::size_t r = 0; r < g.irreps_.size(); ++r)
                    require((images[r] - g.irreps_[r].matrices[found]).cwiseAbs().maxCoeff() < 1e-10,
                            "inconsistent_table", "generator images of " + g.irreps_[r].label +
                                                      " violate a group relation");
                continue;
            }
            require(g.elements_.size() < 2000, "inconsistent_table", "group closure exceeds 2000 elements");
            next.label = idx == 0 ? generators[s].label : generators[s].label + "*" + g.elements_[idx].label;
            g.elements_.push_back(std::move(next));
            for (std::size_t r = 0; r < g.irreps_.size(); ++r) g.irreps_[r].matrices.push_back(images[r]);
        }
    }
    if (kind == GroupKind::point)
        for (auto& e : g.elements_)
            if ((e.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < kSame &&
                (e.spinor + Mat4::Identity()).cwiseAbs().maxCoeff() < kSame)
                e.label = "Ebar";
    g.finalize();
    return g;
}

FiniteGroup FiniteGroup::point_group(const std::string& name, InversionConvention convention) {
    const cplx i(0.0, 1.0);
    const double pi = std::numbers::pi;
    const GroupElement c2z = point_element("C2z", Vec3::UnitZ(), pi, false, convention);
    if (name == "C1") return from_generators(GroupKind::point, name, 0, {}, {"A"}, {{}});
    if (name == "C2")
        return from_generators(GroupKind::point, name, 0, {c2z}, {"A", "B", "Ea_half", "Eb_half"},
                               {{scalar(1.0)}, {scalar(-1.0)}, {scalar(i)}, {scalar(-i)}});
    if (name == "Ci") {
        GroupElement inv;
        inv.label = "I";
        inv.rotation = -Mat3::Identity();
        inv.improper = true;
        if (convention == InversionConvention::parity) inv.spinor = dirac_matrices().beta;
        GroupElement ebar;
        ebar.label = "Ebar";
        ebar.spinor = -Mat4::Identity();
        return from_generators(GroupKind::point, name, 0, {inv, ebar}, {"Ag", "Au", "Ag_half", "Au_half"},
                               {{scalar(1.0), scalar(1.0)},
                                {scalar(-1.0), scalar(1.0)},
                                {scalar(1.0), scalar(-1.0)},
                                {scalar(-1.0), scalar(-1.0)}});
    }
    if (name == "C2v") {
        // Mirrors: x -> -x is inversion times C2 about x, likewise for y.
        const GroupElement sx = point_element("Sx", Vec3::UnitX(), pi, true, convention);
        const GroupElement sy = point_element("Sy", Vec3::UnitY(), pi, true, convention);
        Mat2 sz2, sx2, sy2;
        sz2 << -i, 0.0, 0.0, i;
        sx2 << 0.0, -i, -i, 0.0;
        sy2 << 0.0, -1.0, 1.0, 0.0;
        return from_generators(GroupKind::point, name, 0, {c2z, sx, sy}, {"A1", "A2", "B1", "B2", "E_half"},
                               {{scalar(1.0), scalar(1.0), scalar(1.0)},
                                {scalar(1.0), scalar(-1.0), scalar(-1.0)},
                                {scalar(-1.0), scalar(1.0), scalar(-1.0)},
                                {scalar(-1.0), scalar(-1.0), scalar(1.0)},
                                {CMat(sz2), CMat(sx2), CMat(sy2)}});
    }
    throw Error("unknown_group", "no built-in point group named " + name);
}

FiniteGroup FiniteGroup::permutation_group(int particle_count, const std::vector<std::vector<int>>& identical) {
    struct Factor {
        std::vector<int> members;
        std::vector<std::string> labels;
        std::vector<std::vector<CMat>> images;  // per irrep, per local generator
    };
    std::vector<Factor> factors;
    for (const auto& group : identical) {
        if (group.size() < 2) continue;
        Factor f;
        f.members = group;
        std::sort(f.members.begin(), f.members.end());
        if (group.size() == 2) {
            f.labels = {"sym", "antisym"};
            f.images = {{scalar(1.0)}, {scalar(-1.0)}};
        } else if (group.size() == 3) {
            const double h = std::sqrt(3.0) / 2.0;
            CMat a(2, 2), b(2, 2);
            a << 1.0, 0.0, 0.0, -1.0;
            b << -0.5, h, h, 0.5;
            f.labels = {"sym", "antisym", "std"};
            f.images = {{scalar(1.0), scalar(1.0)}, {scalar(-1.0), scalar(-1.0)}, {a, b}};
        } else {
            throw Error("unsupported_group", "built-in permutation tables cover at most 3 identical particles; "
                                             "load a table for larger groups");
        }
        factors.push_back(std::move(f));
    }

    std::vector<GroupElement> generators;
    std::vector<std::pair<std::size_t, std::size_t>> owner;  // (factor, local generator)
    for (std::size_t fi = 0; fi < factors.size(); ++fi) {
        const auto& m = factors[fi].members;
        for (std::size_t t = 0; t + 1 < m.size(); ++t) {
            GroupElement e = identity_element(GroupKind::permutation, particle_count);
            std::swap(e.perm[m[t]], e.perm[m[t + 1]]);
            e.label = "(" + std::to_string(m[t]) + " " + std::to_string(m[t + 1]) + ")";
            generators.push_back(std::move(e));
            owner.emplace_back(fi, t);
        }
    }

    std::vector<std::string> labels{""};
    std::vector<std::vector<std::size_t>> choice{{}};
    for (const auto& f : factors) {
        std::vector<std::string> nl;
        std::vector<std::vector<std::size_t>> nc;
        for (std::size_t a = 0; a < labels.size(); ++a)
            for (std::size_t r = 0; r < f.labels.size(); ++r) {
                nl.push_back(labels[a].empty() ? f.labels[r] : labels[a] + "*" + f.labels[r]);
                auto c = choice[a];
                c.push_back(r);
                nc.push_back(std::move(c));
            }
        labels = std::move(nl);
        choice = std::move(nc);
    }
    if (factors.empty()) labels = {"triv"};

    std::vector<std::vector<CMat>> images(labels.size());
    for (std::size_t r = 0; r < labels.size(); ++r)
        for (const auto& [fi, t] : owner) {
            CMat m = CMat::Identity(1, 1);
            for (std::size_t fj = 0; fj < factors.size(); ++fj) {
                const CMat& own = factors[fj].images[choice[r][fj]][fj == fi ? t : 0];
                const CMat factor = fj == fi ? own : CMat::Identity(own.rows(), own.cols());
                CMat k(m.rows() * factor.rows(), m.cols() * factor.cols());
                for (Eigen::Index i = 0; i < m.rows(); ++i)
                    for (Eigen::Index j = 0; j < m.cols(); ++j)
                        k.block(i * factor.rows(), j * factor.cols(), factor.rows(), factor.cols()) = m(i, j) * factor;
                m = std::move(k);
            }
            images[r].push_back(std::move(m));
        }
    return from_generators(GroupKind::permutation, "Pi", particle_count, generators, labels, images);
}

FiniteGroup FiniteGroup::load(const std::string& path, InversionConvention convention) {
    std::ifstream is(path);
    require(static_cast<bool>(is), "io_error", "cannot open group table " + path);
    FiniteGroup g;
    bool header = false;
    std::map<std::string, int> element_index;
    std::map<std::string, int> irrep_index;
    std::map<std::pair<int, int>, CMat> reps;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& what) {
        throw Error("table_format", path + ":" + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(is, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "group") {
            std::string kind;
            if (!(ls >> g.name_ >> kind)) fail("expected: group <name> permutation <N> | point");
            if (kind == "permutation") {
                g.kind_ = GroupKind::permutation;
                if (!(ls >> g.particles_) || g.particles_ < 1) fail("permutation group needs a particle count");
            } else if (kind == "point") {
                g.kind_ = GroupKind::point;
            } else {
                fail("unknown group kind " + kind);
            }
            header = true;
        } else if (key == "element") {
            if (!header) fail("element before group header");
            std::string label, type;
            if (!(ls >> label >> type)) fail("expected: element <label> perm|point ...");
            GroupElement e;
            if (type == "perm") {
                if (g.kind_ != GroupKind::permutation) fail("perm element in a point group");
                e.perm.resize(g.particles_);
                for (auto& v : e.perm)
                    if (!(ls >> v)) fail("permutation needs " + std::to_string(g.particles_) + " images");
                auto sorted = e.perm;
                std::sort(sorted.begin(), sorted.end());
                for (int k = 0; k < g.particles_; ++k)
                    if (sorted[k] != k) fail("not a permutation of 0.." + std::to_string(g.particles_ - 1));
                e.label = label;
            } else if (type == "point") {
                if (g.kind_ != GroupKind::point) fail("point element in a permutation group");
                Vec3 axis;
                double turns = 0.0;
                std::string proper;
                if (!(ls >> axis[0] >> axis[1] >> axis[2] >> turns >> proper)) fail("point element needs axis, angle, flag");
                if (proper != "proper" && proper != "improper") fail("flag must be proper or improper");
                if (axis.norm() < 1e-12) fail("axis must be nonzero");
                e = point_element(label, axis, turns * std::numbers::pi, proper == "improper", convention);
            } else {
                fail("unknown element type " + type);
            }
            if (element_index.count(label)) fail("duplicate element " + label);
            element_index[label] = static_cast<int>(g.elements_.size());
            g.elements_.push_back(std::move(e));
        } else if (key == "irrep") {
            Irrep r;
            if (!(ls >> r.label >> r.dim) || r.dim < 1) fail("expected: irrep <label> <dim>");
            if (irrep_index.count(r.label)) fail("duplicate irrep " + r.label);
            irrep_index[r.label] = static_cast<int>(g.irreps_.size());
            g.irreps_.push_back(std::move(r));
        } else if (key == "rep") {
            std::string el, ir;
            if (!(ls >> el >> ir)) fail("expected: rep <element> <irrep> entries");
            if (!element_index.count(el)) fail("unknown element " + el);
            if (!irrep_index.count(ir)) fail("unknown irrep " + ir);
            const int d = g.irreps_[irrep_index[ir]].dim;
            CMat m(d, d);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) {
                    double re = 0.0, im = 0.0;
                    if (!(ls >> re >> im)) fail("rep needs " + std::to_string(2 * d * d) + " numbers");
                    m(a, b) = {re, im};
                }
            reps[{element_index[el], irrep_index[ir]}] = m;
        } else {
            fail("unknown keyword " + key);
        }
    }
    require(header && !g.elements_.empty() && !g.irreps_.empty(), "table_format", path + ": incomplete table");
    for (std::size_t e = 0; e < g.elements_.size(); ++e)
        for (std::size_t r = 0; r < g.irreps_.size(); ++r) {
            const auto it = reps.find({static_cast<int>(e), static_cast<int>(r)});
            require(it != reps.end(), "representation_missing",
                    "no matrix for element " + g.elements_[e].label + " in irrep " + g.irreps_[r].label);
            g.irreps_[r].matrices.push_back(it->second);
        }
    // Identity first.
    const GroupElement id = identity_element(g.kind_, g.particles_);
    const int at = g.find_element(id);
    require(at >= 0, "inconsistent_table", "group table lacks the identity");
    std::swap(g.elements_[0], g.elements_[at]);
    for (auto& r : g.irreps_) std::swap(r.matrices[0], r.matrices[at]);
    g.finalize();
    return g;
}

void FiniteGroup::finalize() {
    const int n = order();
    table_.assign(static_cast<std::size_t>(n) * n, -1);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const int c = find_element(compose(kind_, elements_[a], elements_[b]));
            require(c >= 0, "inconsistent_table", "group is not closed under multiplication");
            table_[a * n + b] = c;
        }
    int dims = 0;
    for (auto& r : irreps_) {
        r.characters.clear();
        for (const auto& m : r.matrices) r.characters.push_back(m.trace());
        dims += r.dim * r.dim;
    }
    require(dims == n, "incomplete_table",
            "irrep dimensions squared sum to " + std::to_string(dims) + ", group order is " + std::to_string(n));
    const double defect = table_defect();
    require(defect < 1e-10, "inconsistent_table", "representation table defect " + std::to_string(defect));
}

const Irrep& FiniteGroup::irrep(const std::string& label) const { return irreps_[irrep_index(label)]; }

int FiniteGroup::irrep_index(const std::string& label) const {
    for (std::size_t r = 0; r < irreps_.size(); ++r)
        if (irreps_[r].label == label) return static_cast<int>(r);
    std::string known;
    for (const auto& r : irreps_) known += (known.empty() ? "" : ", ") + r.label;
    throw Error("unknown_irrep", "'" + label + "' is not an irrep of " + name_ + " (known: " + known + ")");
}

int FiniteGroup::find_element(const GroupElement& e) const {
    for (std::size_t i = 0; i < elements_.size(); ++i)
        if (same_element(kind_, elements_[i], e)) return static_cast<int>(i);
    return -1;
}

std::vector<std::vector<int>> FiniteGroup::conjugacy_classes() const {
    const int n = order();
    std::vector<int> inverse(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (multiply(a, b) == identity()) inverse[a] = b;
    std::vector<int> cls(n, -1);
    std::vector<std::vector<int>> out;
    for (int a = 0; a < n; ++a) {
        if (cls[a] >= 0) continue;
        out.emplace_back();
        for (int g = 0; g < n; ++g) {
            const int c = multiply(multiply(g, a), inverse[g]);
            if (cls[c] < 0) {
                cls[c] = static_cast<int>(out.size()) - 1;
                out.back().push_back(c);
            }
        }
        std::sort(out.back().begin(), out.back().end());
    }
    return out;
}

double FiniteGroup::table_defect() const {
    const int n = order();
    double defect = 0.0;
    for (std::size_t r = 0; r < irreps_.size(); ++r) {
        const auto& ir = irreps_[r];
        for (int a = 0; a < n; ++a) {
            const CMat& m = ir.matrices[a];
            defect = std::max(defect, (m * m.adjoint() - CMat::Identity(ir.dim, ir.dim)).cwiseAbs().maxCoeff());
            for (int b = 0; b < n; ++b)
                defect = std::max(defect, (m * ir.matrices[b] - ir.matrices[multiply(a, b)]).cwiseAbs().maxCoeff());
        }
        for (std::size_t s = 0; s < irreps_.size(); ++s) {
            cplx sum = 0.0;
            for (int a = 0; a < n; ++a) sum += std::conj(ir.characters[a]) * irreps_[s].characters[a];
            defect = std::max(defect, std::abs(sum / static_cast<double>(n) - (r == s ? 1.0 : 0.0)));
        }
    }
    return defect;
}

SpinorField apply_element(const FiniteGroup& group, int element, const SpinorField& field,
                          std::span<const double> masses) {
    const auto& g = field.grid();
    const int particles = g.particles();
    const int spinor = g.spinor_dim();
    const std::size_t sites = g.sites();
    const auto& el = group.elements().at(element);

    if (group.kind() == GroupKind::permutation) {
        require(group.particle_count() == particles, "dimension_mismatch",
                "permutation group acts on a different particle count");
        const std::size_t block = g.block();
        std::vector<std::size_t> stride(particles);
        std::size_t s = 1;
        for (int k = particles - 1; k >= 0; --k) {
            stride[k] = s;
            s *= block;
        }
        std::vector<int> inv(particles);
        for (int k = 0; k < particles; ++k) inv[el.perm[k]] = k;
        // Odometer over output digits; `from` tracks sum_j digit[j] stride[inv[j]].
        std::vector<cplx> out(field.size());
        const auto in = field.values();
        std::vector<std::size_t> digit(particles, 0);
        std::size_t from = 0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = in[from];
            int j = particles - 1;
            ++digit[j];
            from += stride[inv[j]];
            while (j > 0 && digit[j] == block) {
                digit[j] = 0;
                from -= block * stride[inv[j]];
                --j;
                ++digit[j];
                from += stride[inv[j]];
            }
        }
        return SpinorField(g, field.representation(), std::move(out));
    }

    const bool compressed = g.mode() == SpinorMode::compressed;
    if (compressed) {
        require(field.representation() == Representation::momentum, "representation_mismatch",
                "compressed fields transform in the momentum representation");
        require(static_cast<int>(masses.size()) == particles, "dimension_mismatch", "one mass per particle required");
        const Vec3 probe(0.31, -0.52, 0.73);
        const Mat4 lhs = el.spinor * projector_symbol(probe, Mass(1.0)) * el.spinor.adjoint();
        require((lhs - projector_symbol(el.rotation * probe, Mass(1.0))).norm() < 1e-12, "improper_compressed",
                "element " + el.label +
                    " does not preserve the positive-energy subspace (literal inversion); "
                    "use full mode or the parity convention");
    }
    // Source site R^-1 c for every target site c.
    const Mat3 inv = el.rotation.transpose();
    std::vector<std::size_t> src(sites);
    for (std::size_t s = 0; s < sites; ++s) {
        const auto c = g.coords(s);
        const Vec3 r = inv * Vec3(c[0], c[1], c[2]);
        src[s] = g.site_of({static_cast<int>(std::lround(r[0])), static_cast<int>(std::lround(r[1])),
                            static_cast<int>(std::lround(r[2]))});
    }
    std::vector<cplx> data(field.values().begin(), field.values().end());
    for (int k = 0; k < particles; ++k) {
        if (compressed) {
            const Mass m(masses[k]);
            data = remap_slot(data, sites, spinor, particles, k, src, [&](std::size_t s) {
                return Mat2(positive_basis(g.symbol_momentum(s), m).adjoint() * el.spinor *
                            positive_basis(g.symbol_momentum(src[s]), m));
            });
        } else {
            data = remap_slot(data, sites, spinor, particles, k, src, [&](std::size_t) -> const Mat4& { return el.spinor; });
        }
    }
    return SpinorField(g, field.representation(), std::move(data));
}

namespace {
SpinorField weighted_sum(const FiniteGroup& group, const std::vector<cplx>& weights, const SpinorField& field,
                         std::span<const double> masses) {
    std::vector<cplx> acc(field.size(), cplx(0.0));
    for (int e = 0; e < group.order(); ++e) {
        if (weights[e] == cplx(0.0)) continue;
        const auto moved = apply_element(group, e, field, masses);
        const auto v = moved.values();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weights[e] * v[i];
    }
    return SpinorField(field.grid(), field.representation(), std::move(acc));
}
}  // namespace

SpinorField project(const FiniteGroup& group, const std::string& irrep, const SpinorField& field,
                    std::span<const double> masses) {
    const auto& ir = group.irrep(irrep);
    std::vector<cplx> w(group.order());
    for (int e = 0; e < group.order(); ++e)
        w[e] = std::conj(ir.characters[e]) * static_cast<double>(ir.dim) / static_cast<double>(group.order());
    return weighted_sum(group, w, field, masses);
}

SpinorField row_project(const FiniteGroup& group, const std::string& irrep, int row, int col,
                        const SpinorField& field, std::span<const double> masses) {
    const auto& ir = group.irrep(irrep);
    require(row >= 0 && row < ir.dim && col >= 0 && col < ir.dim, "invalid_request", "row/column outside the irrep");
    require(static_cast<int>(ir.matrices.size()) == group.order(), "representation_missing",
            "irrep " + irrep + " has no explicit matrices");
    std::vector<cplx> w(group.order());
    for (int e = 0; e < group.order(); ++e)
        w[e] = std::conj(ir.matrices[e](row, col)) * static_cast<double>(ir.dim) / static_cast<double>(group.order());
    return weighted_sum(group, w, field, masses);
}

SymmetryProjector::SymmetryProjector(FiniteGroup group, std::string irrep, MomentumGrid grid,
                                     std::vector<double> masses)
    : group_(std::move(group)), irrep_(std::move(irrep)), grid_(std::move(grid)), masses_(std::move(masses)) {
    group_.irrep_index(irrep_);
}

void SymmetryProjector::apply(std::span<const cplx> in, std::span<cplx> out) const {
    const SpinorField f(grid_, Representation::momentum, std::vector<cplx>(in.begin(), in.end()));
    const auto p = project(group_, irrep_, f, masses_);
    std::copy(p.values().begin(), p.values().end(), out.begin());
}

ProductOperator::ProductOperator(const LinearOperator& a, const LinearOperator& b) : a_(a), b_(b) {
    require(a.dim() == b.dim(), "dimension_mismatch", "operator sizes differ");
}

void ProductOperator::apply(std::span<const cplx> in, std::span<cplx> out) const {
    std::vector<cplx> tmp(b_.dim());
    b_.apply(in, tmp);
    a_.apply(tmp, out);
}

FiniteGroup cluster_permutation_group(const std::vector<std::vector<int>>& identical, const std::vector<int>& cluster) {
    std::vector<std::vector<int>> local;
    for (const auto& group : identical) {
        std::vector<int> members;
        for (int k : group) {
            const auto it = std::find(cluster.begin(), cluster.end(), k);
            if (it != cluster.end()) members.push_back(static_cast<int>(it - cluster.begin()));
        }
        if (members.size() >= 2) local.push_back(std::move(members));
    }
    return FiniteGroup::permutation_group(static_cast<int>(cluster.size()), local);
}

std::vector<BranchPair> permutation_branching(const FiniteGroup& pi, const std::string& irrep,
                                              const std::vector<std::vector<int>>& identical,
                                              const ClusterDecomposition& z) {
    require(pi.kind() == GroupKind::permutation, "invalid_request", "permutation branching needs a permutation group");
    const auto& chi = pi.irrep(irrep).characters;
    const FiniteGroup g1 = cluster_permutation_group(identical, z.first);
    const FiniteGroup g2 = cluster_permutation_group(identical, z.second);

    // Global index of each (g1, g2) pair.
    std::vector<int> global(static_cast<std::size_t>(g1.order()) * g2.order());
    for (int a = 0; a < g1.order(); ++a)
        for (int b = 0; b < g2.order(); ++b) {
            GroupElement e;
            e.perm.resize(pi.particle_count());
            std::iota(e.perm.begin(), e.perm.end(), 0);
            const auto& p1 = g1.elements()[a].perm;
            const auto& p2 = g2.elements()[b].perm;
            for (std::size_t i = 0; i < p1.size(); ++i) e.perm[z.first[i]] = z.first[p1[i]];
            for (std::size_t i = 0; i < p2.size(); ++i) e.perm[z.second[i]] = z.second[p2[i]];
            const int idx = pi.find_element(e);
            require(idx >= 0, "inconsistent_table", "cluster permutation outside the group");
            global[a * g2.order() + b] = idx;
        }

    std::vector<BranchPair> out;
    const double order = static_cast<double>(g1.order()) * g2.order();
    for (const auto& r1 : g1.irreps())
        for (const auto& r2 : g2.irreps()) {
            cplx sum = 0.0;
            for (int a = 0; a < g1.order(); ++a)
                for (int b = 0; b < g2.order(); ++b)
                    sum += std::conj(r1.characters[a] * r2.characters[b]) * chi[global[a * g2.order() + b]];
            const double mult = (sum / order).real();
            const int rounded = static_cast<int>(std::lround(mult));
            require(std::abs(mult - rounded) < 1e-9, "inconsistent_table", "non-integer branching multiplicity");
            if (rounded > 0) out.push_back({r1.label, r2.label, rounded});
        }
    return out;
}

std::vector<BranchPair> point_branching(const FiniteGroup& gamma, const std::string& irrep) {
    const auto& chi = gamma.irrep(irrep).characters;
    std::vector<BranchPair> out;
    for (const auto& r1 : gamma.irreps())
        for (const auto& r2 : gamma.irreps()) {
            cplx sum = 0.0;
            for (int e = 0; e < gamma.order(); ++e) sum += std::conj(chi[e]) * r1.characters[e] * r2.characters[e];
            const double mult = (sum / static_cast<double>(gamma.order())).real();
            const int rounded = static_cast<int>(std::lround(mult));
            require(std::abs(mult - rounded) < 1e-9, "inconsistent_table", "non-integer tensor multiplicity");
            if (rounded > 0) out.push_back({r1.label, r2.label, rounded});
        }
    return out;
}

double witness_nonzero(const LinearOperator& projector, std::uint64_t seed, int samples) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    double best = 0.0;
    for (int t = 0; t < samples; ++t) {
        std::vector<cplx> f(projector.dim()), pf(projector.dim());
        double nf = 0.0;
        for (auto& z : f) {
            z = {nd(rng), nd(rng)};
            nf += std::norm(z);
        }
        projector.apply(f, pf);
        double np = 0.0;
        for (const auto& z : pf) np += std::norm(z);
        best = std::max(best, std::sqrt(np / nf));
    }
    return best;
}

}  // namespace hvz
