#include "hvz/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace hvz {

namespace {

constexpr double kKeyScale = 1e8;

std::array<long long, 3> table_key(const Vec3& x) {
    return {std::llround(x[0] * kKeyScale), std::llround(x[1] * kKeyScale), std::llround(x[2] * kKeyScale)};
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

}  // namespace

Potential Potential::coulomb(double coupling) {
    Potential p;
    p.kind_ = PotentialKind::coulomb;
    p.coupling_ = coupling;
    return p;
}

Potential Potential::yukawa(double coupling, double screening) {
    require(screening >= 0.0, "invalid_potential", "yukawa screening must be nonnegative");
    Potential p;
    p.kind_ = PotentialKind::yukawa;
    p.coupling_ = coupling;
    p.screening_ = screening;
    return p;
}

Potential Potential::gaussian_well(double depth, double width) {
    require(width > 0.0, "invalid_potential", "gaussian width must be positive");
    Potential p;
    p.kind_ = PotentialKind::gaussian_well;
    p.depth_ = depth;
    p.width_ = width;
    return p;
}

Potential Potential::tabulated(int matrix_dim, const std::vector<std::pair<Vec3, CMat>>& rows) {
    require(matrix_dim == 4 || matrix_dim == 16, "invalid_potential", "tabulated matrices must be 4x4 or 16x16");
    auto table = std::make_shared<std::map<std::array<long long, 3>, CMat>>();
    double spacing = 0.0;
    for (const auto& [x, m] : rows) {
        require(m.rows() == matrix_dim && m.cols() == matrix_dim, "invalid_potential", "matrix size mismatch");
        require((m - m.adjoint()).norm() <= 1e-12 * (1.0 + m.norm()), "invalid_potential",
                "tabulated potential is not Hermitian");
        (*table)[table_key(x)] = m;
        for (int k = 0; k < 3; ++k)
            if (std::abs(x[k]) > 1e-12 && (spacing == 0.0 || std::abs(x[k]) < spacing)) spacing = std::abs(x[k]);
    }
    Potential p;
    p.kind_ = PotentialKind::tabulated;
    p.matrix_dim_ = matrix_dim;
    p.table_spacing_ = spacing;
    p.table_ = std::move(table);
    return p;
}

Potential Potential::load_table(const std::string& path, int matrix_dim) {
    std::ifstream is(path);
    require(static_cast<bool>(is), "io_error", "cannot open potential table " + path);
    std::vector<std::pair<Vec3, CMat>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        Vec3 x;
        if (!(ls >> x[0])) continue;
        require(static_cast<bool>(ls >> x[1] >> x[2]), "table_format", path + ":" + std::to_string(line_no) + ": missing coordinates");
        CMat m(matrix_dim, matrix_dim);
        for (int i = 0; i < matrix_dim; ++i)
            for (int j = 0; j < matrix_dim; ++j) {
                double re = 0.0, im = 0.0;
                require(static_cast<bool>(ls >> re >> im), "table_format",
                        path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(2 * matrix_dim * matrix_dim) + " matrix values");
                m(i, j) = {re, im};
            }
        rows.emplace_back(x, m);
    }
    return tabulated(matrix_dim, rows);
}

std::string Potential::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case PotentialKind::coulomb: os << "coulomb(g=" << coupling_ << ")"; break;
        case PotentialKind::yukawa: os << "yukawa(g=" << coupling_ << ",mu=" << screening_ << ")"; break;
        case PotentialKind::gaussian_well: os << "gaussian(d=" << depth_ << ",w=" << width_ << ")"; break;
        case PotentialKind::tabulated: os << "tabulated(" << matrix_dim_ << "x" << matrix_dim_ << ")"; break;
    }
    return os.str();
}

double screened_cell_average(double a, double mu) {
    // Split the cube into six pyramids with apex at the origin; in each,
    // x = t (a/2) (1, u, v) with Jacobian t^2 (a/2)^3, which cancels the
    // 1/r singularity.
    static std::vector<double> nodes, weights;
    if (nodes.empty()) gauss_legendre(24, nodes, weights);
    const double h = 0.5 * a;
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double t = 0.5 * (nodes[i] + 1.0);
        const double wt = 0.5 * weights[i];
        for (std::size_t j = 0; j < nodes.size(); ++j)
            for (std::size_t k = 0; k < nodes.size(); ++k) {
                const double s = std::sqrt(1.0 + nodes[j] * nodes[j] + nodes[k] * nodes[k]);
                const double r = t * h * s;
                sum += wt * weights[j] * weights[k] * t * t * h * h * h * std::exp(-mu * r) / r;
            }
    }
    return 6.0 * sum / (a * a * a);
}

double Potential::scalar_value(const Vec3& x, double cell) const {
    const double r = x.norm();
    const bool origin = r < 1e-12 * std::max(cell, 1.0);
    switch (kind_) {
        case PotentialKind::coulomb:
            return origin ? -coupling_ * screened_cell_average(cell, 0.0) : -coupling_ / r;
        case PotentialKind::yukawa:
            return origin ? -coupling_ * screened_cell_average(cell, screening_)
                          : -coupling_ * std::exp(-screening_ * r) / r;
        case PotentialKind::gaussian_well:
            return -depth_ * std::exp(-r * r / (width_ * width_));
        case PotentialKind::tabulated:
            break;
    }
    throw Error("invalid_potential", "tabulated potentials have no scalar value");
}

CMat Potential::sample_position(const Vec3& x, double cell, int dim) const {
    if (is_scalar()) return scalar_value(x, cell) * CMat::Identity(dim, dim);
    require(dim == matrix_dim_, "dimension_mismatch", "tabulated potential has a different matrix size");
    const auto it = table_->find(table_key(x));
    return it == table_->end() ? CMat::Zero(dim, dim) : it->second;
}

namespace {
double operator_norm(const CMat& m) {
    Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}
}  // namespace

double Potential::table_tail_sup(double radius) const {
    double sup = 0.0;
    if (table_)
        for (const auto& [key, m] : *table_) {
            const Vec3 x(key[0] / kKeyScale, key[1] / kKeyScale, key[2] / kKeyScale);
            if (x.norm() > radius) sup = std::max(sup, operator_norm(m));
        }
    return sup;
}

double Potential::table_ball_l2_squared(double radius) const {
    double sum = 0.0;
    if (table_)
        for (const auto& [key, m] : *table_) {
            const Vec3 x(key[0] / kKeyScale, key[1] / kKeyScale, key[2] / kKeyScale);
            if (x.norm() <= radius) sum += std::pow(operator_norm(m), 2);
        }
    const double h = table_spacing_ > 0.0 ? table_spacing_ : 1.0;
    return sum * h * h * h;
}

double local_l2(const Potential& pot, double radius) {
    require(radius > 0.0, "invalid_radius", "radius must be positive");
    double value = 0.0;
    const double pi = std::numbers::pi;
    switch (pot.kind()) {
        case PotentialKind::coulomb:
            value = std::abs(pot.coupling()) * std::sqrt(4.0 * pi * radius);
            break;
        case PotentialKind::yukawa: {
            const double mu = pot.screening();
            const double radial = mu > 0.0 ? (1.0 - std::exp(-2.0 * mu * radius)) / (2.0 * mu) : radius;
            value = std::abs(pot.coupling()) * std::sqrt(4.0 * pi * radial);
            break;
        }
        case PotentialKind::gaussian_well: {
            // int_0^R r^2 exp(-a r^2) dr with a = 2/w^2.
            const double a = 2.0 / (pot.width() * pot.width());
            const double radial = std::sqrt(pi) / (4.0 * std::pow(a, 1.5)) * std::erf(std::sqrt(a) * radius) -
                                  radius * std::exp(-a * radius * radius) / (2.0 * a);
            value = std::abs(pot.depth()) * std::sqrt(4.0 * pi * radial);
            break;
        }
        case PotentialKind::tabulated:
            value = std::sqrt(pot.table_ball_l2_squared(radius));
            break;
    }
    require(std::isfinite(value), "assumption_violation", "potential is not locally square integrable");
    return value;
}

double local_l2_lattice(const Potential& pot, double radius, double spacing) {
    require(radius > 0.0 && spacing > 0.0, "invalid_radius", "radius and spacing must be positive");
    if (!pot.is_scalar()) return local_l2(pot, radius);
    const int reach = static_cast<int>(std::floor(radius / spacing));
    double sum = 0.0;
    for (int i = -reach; i <= reach; ++i)
        for (int j = -reach; j <= reach; ++j)
            for (int k = -reach; k <= reach; ++k) {
                const Vec3 x = spacing * Vec3(i, j, k);
                if (x.norm() > radius) continue;
                sum += std::pow(pot.scalar_value(x, spacing), 2);
            }
    const double value = std::sqrt(sum * spacing * spacing * spacing);
    require(std::isfinite(value), "assumption_violation", "potential is not locally square integrable");
    return value;
}

double decay_epsilon(const Potential& pot, double radius, Mass m) {
    require(radius > 0.0, "invalid_radius", "radius must be positive");
    double sup = 0.0;
    switch (pot.kind()) {
        case PotentialKind::coulomb: sup = std::abs(pot.coupling()) / radius; break;
        case PotentialKind::yukawa:
            sup = std::abs(pot.coupling()) * std::exp(-pot.screening() * radius) / radius;
            break;
        case PotentialKind::gaussian_well:
            sup = std::abs(pot.depth()) * std::exp(-radius * radius / (pot.width() * pot.width()));
            break;
        case PotentialKind::tabulated: sup = pot.table_tail_sup(radius); break;
    }
    return sup / std::sqrt(m.value());
}

void check_coupling_guard(const Potential& external, bool allow_supercritical) {
    if (allow_supercritical || external.kind() != PotentialKind::coulomb) return;
    require(external.coupling() <= coulomb_coupling_limit, "coupling_limit",
            "external coulomb coupling " + std::to_string(external.coupling()) + " exceeds " +
                std::to_string(coulomb_coupling_limit));
}

FormConstants default_form_constants(std::span<const Potential> potentials) {
    double strongest = 0.0;
    double wells = 0.0;
    for (const auto& p : potentials) {
        if (p.kind() == PotentialKind::coulomb || p.kind() == PotentialKind::yukawa)
            strongest = std::max(strongest, p.coupling());
        if (p.kind() == PotentialKind::gaussian_well) wells += std::max(0.0, p.depth());
    }
    return {std::max(0.05, 1.0 - strongest / 0.906), wells};
}

}  // namespace hvz
