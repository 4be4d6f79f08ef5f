#include "hvz/weyl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <numbers>

namespace hvz {

namespace {

constexpr double pi = std::numbers::pi;

double shell_tolerance(const WeylPacket& p) { return 1e-12 * (1.0 + p.p0 + p.width); }

bool in_shell(double r, const WeylPacket& p) {
    const double tol = shell_tolerance(p);
    return r >= p.p0 - tol && r <= p.p0 + p.width + tol;
}

double shell_volume(double p0, double width) { return (std::pow(p0 + width, 3) - std::pow(p0, 3)) / 3.0; }

// Wrapped difference of positions on the periodic box.
Vec3 wrapped(Vec3 d, double box) {
    for (int a = 0; a < 3; ++a) d[a] -= box * std::round(d[a] / box);
    return d;
}

}  // namespace

WeylPacket build_packet(const DispersionCurve& curve, const std::function<double(double)>& mu, double lambda1,
                        double width, double slack) {
    require(width > 0.0, "invalid_packet", "packet width must be positive");
    require(!curve.samples.empty(), "invalid_packet", "empty dispersion curve");
    auto s = curve.samples;
    std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.momentum < b.momentum; });
    const auto low = std::min_element(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
    const double tol = 1e-12 * (1.0 + std::abs(lambda1));
    require(lambda1 >= low->value - tol, "below_dispersion",
            "lambda1 = " + std::to_string(lambda1) + " lies below the dispersion minimum " + std::to_string(low->value));

    WeylPacket packet;
    packet.lambda1 = lambda1;
    packet.width = width;
    if (lambda1 <= low->value + tol) {
        packet.p0 = low->momentum;
    } else {
        auto hi = std::find_if(low, s.end(), [&](const auto& x) { return x.value >= lambda1; });
        require(hi != s.end(), "above_dispersion",
                "lambda1 = " + std::to_string(lambda1) + " exceeds the scanned dispersion branch");
        double a = std::prev(hi)->momentum, b = hi->momentum;
        while (b - a > 1e-13 * (1.0 + b)) {
            const double m = 0.5 * (a + b);
            (mu(m) < lambda1 ? a : b) = m;
        }
        packet.p0 = 0.5 * (a + b);
    }
    if (std::isfinite(slack)) {
        const double spread = mu(packet.p0 + width) - lambda1;
        require(spread <= slack, "packet_too_wide",
                "dispersion varies by " + std::to_string(spread) + " over the packet support");
    }
    packet.amplitude = 1.0 / std::sqrt(shell_volume(packet.p0, width));
    return packet;
}

double packet_normalization(const WeylPacket& packet) {
    const auto g = [&](double r) { return packet.amplitude * packet.amplitude * r * r; };
    const double a = packet.p0, b = packet.p0 + packet.width;
    return (b - a) / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b));
}

double density_bound(const WeylPacket& packet) {
    const double outer = packet.p0 + packet.width;
    return outer * outer * packet.width / (2.0 * pi * pi);
}

SpinorField packet_field(const MomentumGrid& one, const WeylPacket& packet, double separation, int* shell_points) {
    require(one.particles() == 1 && one.mode() == SpinorMode::compressed, "invalid_grid",
            "packet fields live on a compressed one-particle grid");
    require(separation <= 0.5 * one.box_length() + 1e-12, "aliasing",
            "separation " + std::to_string(separation) + " exceeds half the box length " +
                std::to_string(0.5 * one.box_length()));
    SpinorField field(one, Representation::momentum);
    auto v = field.values();
    const Vec3 shift = separation * packet.direction.normalized();
    const double scale = packet.amplitude / std::sqrt(4.0 * pi);
    int count = 0;
    for (std::size_t s = 0; s < one.sites(); ++s) {
        const Vec3 p = one.momentum(s);
        if (!in_shell(p.norm(), packet)) continue;
        ++count;
        const cplx phase = std::polar(scale, -p.dot(shift));
        v[2 * s] = phase * packet.spinor[0];
        v[2 * s + 1] = phase * packet.spinor[1];
    }
    require(count > 0, "empty_shell", "no lattice momentum lies in the packet shell; enlarge the box");
    if (shell_points) *shell_points = count;
    return field;
}

TrialState build_trial(const MomentumGrid& grid, const SystemSpec& spec, const ClusterDecomposition& z,
                       const CVec& first, const WeylPacket& packet, double separation) {
    require(z.second.size() == 1, "unsupported_cluster",
            "trial states are built for single-particle second clusters only");
    require(grid.mode() == SpinorMode::compressed && grid.particles() == spec.particle_count(), "invalid_grid",
            "trial states need the compressed full-system grid");
    const int n = grid.particles();
    const std::size_t block = grid.block();
    const auto one = grid.with_particles(1);

    TrialState out{.field = SpinorField(grid, Representation::momentum)};
    const auto psi = packet_field(one, packet, separation, &out.shell_points);
    const double raw = psi.norm();
    out.shell_quadrature = raw * raw * packet.spinor.squaredNorm();
    out.second_norm = 1.0;

    const int k1 = static_cast<int>(z.first.size());
    CVec phi = k1 == 0 ? CVec::Ones(1) : first;
    if (k1 > 0) {
        const auto sub = grid.with_particles(k1);
        require(static_cast<std::size_t>(phi.size()) == sub.state_dim(), "invalid_trial",
                "first-cluster vector does not match the grid");
        phi /= phi.norm() * std::sqrt(std::pow(sub.momentum_cell(), k1));  // unit lattice norm

        std::vector<double> masses;
        for (int k : z.first) masses.push_back(spec.masses[k]);
        const auto x = transform(embed(SpinorField(sub, Representation::momentum,
                                                   std::vector<cplx>(phi.data(), phi.data() + phi.size())),
                                       masses),
                                 Representation::position);
        const auto vals = x.values();
        const std::size_t sb = sub.sites() * 4;
        double outside = 0.0, total = 0.0;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double d = std::norm(vals[i]);
            total += d;
            std::size_t rest = i;
            bool far = false;
            for (int k = k1 - 1; k >= 0; --k) {
                far = far || sub.position((rest % sb) / 4).norm() > separation;
                rest /= sb;
            }
            if (far) outside += d;
        }
        out.outside_mass = total > 0.0 ? outside / total : 0.0;
    }
    out.first_norm = 1.0;

    // psi with unit lattice norm.
    auto pv = psi.values();
    std::vector<cplx> packet_values(pv.begin(), pv.end());
    for (auto& c : packet_values) c /= raw;

    // Digit of each particle in the full index, particle 0 slowest.
    auto v = out.field.values();
    std::vector<std::size_t> digit(n);
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t rest = i;
        for (int k = n - 1; k >= 0; --k) {
            digit[k] = rest % block;
            rest /= block;
        }
        const cplx b = packet_values[digit[z.second[0]]];
        if (b == cplx{}) continue;
        std::size_t a = 0;
        for (int k : z.first) a = a * block + digit[k];
        v[i] = phi[static_cast<Eigen::Index>(a)] * b;
    }
    return out;
}

double packet_density_max(const MomentumGrid& one, const WeylPacket& packet, double mass, double separation) {
    auto psi = packet_field(one, packet, separation);
    const double norm = psi.norm();
    for (auto& c : psi.values()) c /= norm;
    const double m[] = {mass};
    const auto x = transform(embed(psi, m), Representation::position);
    const auto v = x.values();
    double best = 0.0;
    for (std::size_t s = 0; s < one.sites(); ++s) {
        double rho = 0.0;
        for (int c = 0; c < 4; ++c) rho += std::norm(v[4 * s + c]);
        best = std::max(best, rho);
    }
    return best;
}

WeightedDensity truncated_coulomb_density(const MomentumGrid& one, const WeylPacket& packet, double mass,
                                          double separation, double radius) {
    auto psi = packet_field(one, packet, separation);
    const double norm = psi.norm();
    for (auto& c : psi.values()) c /= norm;
    const double m[] = {mass};
    const auto x = transform(embed(psi, m), Representation::position);
    const auto v = x.values();
    const auto coulomb = Potential::coulomb(1.0);
    const Vec3 centre = separation * packet.direction.normalized();
    const double cell = one.position_cell();
    WeightedDensity out;
    double w_norm = 0.0;
    for (std::size_t s = 0; s < one.sites(); ++s) {
        const Vec3 d = wrapped(one.position(s) - centre, one.box_length());
        if (d.norm() >= radius) continue;
        const double w = coulomb.scalar_value(d, one.dx());
        double rho = 0.0;
        for (int c = 0; c < 4; ++c) rho += std::norm(v[4 * s + c]);
        out.weighted += w * w * rho * cell;
        w_norm += w * w * cell;
    }
    out.bound = density_bound(packet) * w_norm;
    return out;
}

WeylResidual weyl_residual(const LinearOperator& h, const SpinorField& trial, double lambda,
                           const LinearOperator* projector) {
    require(h.dim() == trial.size(), "invalid_trial", "trial state does not match the operator");
    const auto in = trial.values();
    const double base = std::sqrt(std::transform_reduce(in.begin(), in.end(), 0.0, std::plus<>{},
                                                        [](cplx c) { return std::norm(c); }));
    require(base > 0.0, "invalid_trial", "trial state vanishes");
    std::vector<cplx> f(in.begin(), in.end());
    WeylResidual out;
    if (projector) {
        std::vector<cplx> pf(f.size());
        projector->apply(f, pf);
        f = std::move(pf);
    }
    const auto sq = [](std::span<const cplx> x) {
        double s = 0.0;
        for (cplx c : x) s += std::norm(c);
        return std::sqrt(s);
    };
    const double fn = sq(f);
    out.projected_ratio = projector ? fn / base : 1.0;
    require(out.projected_ratio >= 1e-10, "not_admissible",
            "projected trial norm ratio " + std::to_string(out.projected_ratio) + " is below 1e-10");
    std::vector<cplx> hf(f.size());
    h.apply(f, hf);
    for (std::size_t i = 0; i < f.size(); ++i) hf[i] -= lambda * f[i];
    out.residual = sq(hf) / fn;
    return out;
}

double box_for_shell(double min_length, int points, double p0, double width) {
    require(min_length > 0.0 && points >= 4 && width > 0.0 && p0 >= 0.0, "invalid_request",
            "box search needs positive lengths and at least four points");
    if (p0 == 0.0) return min_length;  // the zero momentum is always in the shell
    const double mid = p0 + 0.5 * width;
    double best = std::numeric_limits<double>::infinity();
    const int h = points / 2;
    for (int a = -h; a < h; ++a)
        for (int b = -h; b < h; ++b)
            for (int c = -h; c < h; ++c) {
                const double l = 2.0 * pi * std::sqrt(double(a * a + b * b + c * c)) / mid;
                if (l >= min_length) best = std::min(best, l);
            }
    require(std::isfinite(best), "empty_shell", "no box of this resolution places a momentum in the shell");
    return best;
}

std::vector<WeylStudyRow> weyl_study(const SystemSpec& spec, const ClusterDecomposition& z,
                                     const WeylStudyOptions& options) {
    validate_system(spec);
    require(z.second.size() == 1, "unsupported_cluster",
            "Weyl studies are implemented for single-particle second clusters");
    require(options.steps >= 1, "invalid_request", "at least one refinement step is needed");

    // The free single-particle dispersion does not depend on the box, so the
    // packet centre is solved once on the coarsest lattice.
    const double p_max0 = pi * options.points / options.box0;
    const auto coarse = MomentumGrid::make(options.points, p_max0, 1, SpinorMode::compressed, options.memory_budget);
    const auto k2 = kappa2(coarse, spec, z.second, options.dispersion);
    const auto mu = [&](double p) { return fiber_minimum(coarse, spec, z.second, p, options.dispersion.fiber).value; };
    const double lambda1 = k2.value + options.offset;

    std::vector<WeylStudyRow> rows;
    for (int j = 0; j < options.steps; ++j) {
        WeylStudyRow row;
        row.step = j;
        row.width = options.width0 / std::ldexp(1.0, j);
        row.separation = options.separation0 * std::ldexp(1.0, j);
        const auto packet = build_packet(k2.curve, mu, lambda1, row.width);
        row.p0 = packet.p0;
        row.box = box_for_shell(options.box0 * std::ldexp(1.0, j), options.points, packet.p0, row.width);
        const auto grid = MomentumGrid::make(options.points, pi * options.points / row.box, spec.particle_count(),
                                             SpinorMode::compressed, options.memory_budget);
        double k1 = 0.0;
        CVec phi;
        if (!z.first.empty()) {
            const auto g1 = kappa1(grid, spec, z, {}, nullptr, options.solver);
            k1 = g1.value;
            phi = g1.vector;
        }
        row.kappa = k1 + k2.value;
        row.lambda = row.kappa + options.offset;
        const auto trial = build_trial(grid, spec, z, phi, packet, row.separation);
        row.shell_points = trial.shell_points;
        const auto h = assemble_full(grid, spec);
        const auto r = weyl_residual(h, trial.field, row.lambda);
        row.residual = r.residual;
        row.projected_ratio = r.projected_ratio;
        rows.push_back(row);
    }
    return rows;
}

void write_weyl_csv(const std::vector<WeylStudyRow>& rows, const std::string& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "io_error", "cannot write " + path);
    out << "step,width,separation,box,kappa,lambda,p0,residual,projected_ratio,shell_points\n"
        << std::setprecision(17);
    for (const auto& r : rows)
        out << r.step << ',' << r.width << ',' << r.separation << ',' << r.box << ',' << r.kappa << ',' << r.lambda
            << ',' << r.p0 << ',' << r.residual << ',' << r.projected_ratio << ',' << r.shell_points << '\n';
}

}  // namespace hvz
