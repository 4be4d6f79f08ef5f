#include "hvz/grid.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "fft.hpp"
#include "hvz/dirac.hpp"
#include "slot_map.hpp"

namespace hvz {

MomentumGrid MomentumGrid::make(int points_per_axis, double p_max, int particle_count, SpinorMode mode,
                                std::size_t memory_budget_bytes) {
    require(points_per_axis >= 4 && points_per_axis % 2 == 0, "invalid_grid",
            "points_per_axis must be even and at least 4, got " + std::to_string(points_per_axis));
    require(p_max > 0.0, "invalid_grid", "p_max must be positive");
    require(particle_count >= 1, "invalid_grid", "particle_count must be at least 1");

    const double block = std::pow(static_cast<double>(points_per_axis), 3) * hvz::spinor_dim(mode);
    const double dim = std::pow(block, particle_count);
    const double bytes = dim * sizeof(cplx);
    require(bytes <= static_cast<double>(memory_budget_bytes), "memory_budget",
            "state of dimension " + std::to_string(dim) + " needs " + std::to_string(bytes) +
                " bytes, above the budget of " + std::to_string(memory_budget_bytes));

    MomentumGrid g;
    g.points_ = points_per_axis;
    g.p_max_ = p_max;
    g.particles_ = particle_count;
    g.mode_ = mode;
    g.budget_ = memory_budget_bytes;
    g.state_dim_ = static_cast<std::size_t>(dim);
    return g;
}

double MomentumGrid::dx() const noexcept { return std::numbers::pi / p_max_; }

std::array<int, 3> MomentumGrid::coords(std::size_t site) const noexcept {
    const auto n = static_cast<std::size_t>(points_);
    const int h = points_ / 2;
    return {static_cast<int>(site / (n * n)) - h, static_cast<int>((site / n) % n) - h, static_cast<int>(site % n) - h};
}

std::size_t MomentumGrid::site_of(const std::array<int, 3>& c) const noexcept {
    const int n = points_;
    const int h = n / 2;
    auto wrap = [&](int v) { return static_cast<std::size_t>(((v + h) % n + n) % n); };
    return (wrap(c[0]) * n + wrap(c[1])) * n + wrap(c[2]);
}

Vec3 MomentumGrid::momentum(std::size_t site) const noexcept {
    const auto c = coords(site);
    return dp() * Vec3(c[0], c[1], c[2]);
}

Vec3 MomentumGrid::position(std::size_t site) const noexcept {
    const auto c = coords(site);
    return dx() * Vec3(c[0], c[1], c[2]);
}

Vec3 MomentumGrid::symbol_momentum(std::size_t site) const noexcept {
    const auto c = coords(site);
    const int h = points_ / 2;
    Vec3 p;
    for (int k = 0; k < 3; ++k) p[k] = c[k] == -h ? 0.0 : dp() * c[k];
    return p;
}

MomentumGrid MomentumGrid::with_particles(int particle_count) const {
    return make(points_, p_max_, particle_count, mode_, budget_);
}

MomentumGrid MomentumGrid::with_mode(SpinorMode mode) const {
    return make(points_, p_max_, particles_, mode, budget_);
}

SpinorField::SpinorField(MomentumGrid grid, Representation rep)
    : grid_(std::move(grid)), rep_(rep), values_(grid_.state_dim(), cplx(0.0)) {}

SpinorField::SpinorField(MomentumGrid grid, Representation rep, std::vector<cplx> values)
    : grid_(std::move(grid)), rep_(rep), values_(std::move(values)) {
    require(values_.size() == grid_.state_dim(), "dimension_mismatch",
            "field has " + std::to_string(values_.size()) + " values, grid expects " +
                std::to_string(grid_.state_dim()));
}

double SpinorField::cell_weight() const noexcept {
    const double cell = rep_ == Representation::momentum ? grid_.momentum_cell() : grid_.position_cell();
    return std::pow(cell, grid_.particles());
}

double SpinorField::norm() const {
    double s = 0.0;
    for (const auto& z : values_) s += std::norm(z);
    return std::sqrt(s * cell_weight());
}

cplx SpinorField::inner(const SpinorField& other) const {
    require(grid_ == other.grid_ && rep_ == other.rep_, "representation_mismatch",
            "inner product of fields on different grids or representations");
    cplx s(0.0);
    for (std::size_t i = 0; i < values_.size(); ++i) s += std::conj(values_[i]) * other.values_[i];
    return s * cell_weight();
}

SpinorField transform(const SpinorField& field, Representation target) {
    if (field.representation() == target) return field;
    const auto& g = field.grid();
    const int n = g.points();
    const int N = g.particles();
    const std::ptrdiff_t S = g.spinor_dim();
    const std::ptrdiff_t B = static_cast<std::ptrdiff_t>(g.block());

    std::vector<detail::FftDim> dims;
    std::vector<detail::FftDim> batch;
    std::ptrdiff_t stride = 1;
    for (int k = N - 1; k >= 0; --k) {
        batch.push_back({S, stride});
        dims.push_back({n, S * n * n * stride});
        dims.push_back({n, S * n * stride});
        dims.push_back({n, S * stride});
        stride *= B;
    }
    const bool to_position = target == Representation::position;
    const detail::FftPlan plan(dims, batch, to_position ? FFTW_BACKWARD : FFTW_FORWARD);

    // Parity of the raw site index (ix+iy+iz) for the centered-lattice phase.
    const std::size_t sites = g.sites();
    std::vector<unsigned char> parity(sites);
    for (std::size_t s = 0; s < sites; ++s) {
        const auto c = g.coords(s);
        parity[s] = static_cast<unsigned char>((c[0] + c[1] + c[2] + 3 * (n / 2)) & 1);
    }
    const int h_parity = (3 * (n / 2)) & 1;

    auto sign_of = [&](std::size_t index) {
        int p = 0;
        for (int k = 0; k < N; ++k) {
            const std::size_t b = index % static_cast<std::size_t>(B);
            index /= static_cast<std::size_t>(B);
            p ^= parity[b / static_cast<std::size_t>(S)];
        }
        return p;
    };

    const double dp3 = g.momentum_cell();
    const double dx3 = g.position_cell();
    const double n3 = static_cast<double>(sites);
    const double per_particle = to_position ? std::sqrt(dp3 / (dx3 * n3)) : std::sqrt(dx3 / (dp3 * n3));
    const double scale = std::pow(per_particle, N);
    const int global_sign = (h_parity * N) & 1;

    std::vector<cplx> data(field.values().begin(), field.values().end());
    for (std::size_t i = 0; i < data.size(); ++i)
        if (sign_of(i)) data[i] = -data[i];
    plan.execute(data.data());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const bool flip = (sign_of(i) ^ global_sign) != 0;
        data[i] *= flip ? -scale : scale;
    }
    return SpinorField(g, target, std::move(data));
}

SpinorField apply_projector(const SpinorField& field, int particle, Mass mass) {
    const auto& g = field.grid();
    require(g.mode() == SpinorMode::full, "compressed_input",
            "apply_projector needs full 4-spinor fields; compressed fields already lie in the positive range");
    require(field.representation() == Representation::momentum, "representation_mismatch",
            "apply_projector needs the momentum representation");
    require(particle >= 0 && particle < g.particles(), "invalid_particle", "particle index out of range");
    const std::vector<int> dims(g.particles(), 4);
    auto out = detail::map_slot(field.values(), g.sites(), dims, particle, 4,
                                [&](std::size_t s) { return projector_symbol(g.symbol_momentum(s), mass); });
    return SpinorField(g, Representation::momentum, std::move(out));
}

double h_half_norm(const SpinorField& field) {
    const auto& g = field.grid();
    require(field.representation() == Representation::momentum, "representation_mismatch",
            "h_half_norm needs the momentum representation");
    require(g.particles() == 1, "invalid_particle", "h_half_norm is defined for one-particle fields");
    const auto S = static_cast<std::size_t>(g.spinor_dim());
    double s = 0.0;
    const auto vals = field.values();
    for (std::size_t site = 0; site < g.sites(); ++site) {
        const double w = std::sqrt(g.momentum(site).squaredNorm() + 1.0);
        for (std::size_t a = 0; a < S; ++a) s += w * std::norm(vals[site * S + a]);
    }
    return std::sqrt(s * g.momentum_cell());
}

namespace {
SpinorField change_mode(const SpinorField& field, std::span<const double> masses, bool to_full) {
    const auto& g = field.grid();
    require(field.representation() == Representation::momentum, "representation_mismatch",
            "spinor compression acts in the momentum representation");
    require(static_cast<int>(masses.size()) == g.particles(), "dimension_mismatch", "one mass per particle required");
    require(g.mode() == (to_full ? SpinorMode::compressed : SpinorMode::full), "representation_mismatch",
            to_full ? "embed expects a compressed field" : "compress expects a full field");

    std::vector<int> dims(g.particles(), to_full ? 2 : 4);
    std::vector<cplx> data(field.values().begin(), field.values().end());
    for (int k = 0; k < g.particles(); ++k) {
        const Mass m(masses[k]);
        if (to_full) {
            data = detail::map_slot(data, g.sites(), dims, k, 4,
                                    [&](std::size_t s) { return positive_basis(g.symbol_momentum(s), m); });
            dims[k] = 4;
        } else {
            data = detail::map_slot(data, g.sites(), dims, k, 2, [&](std::size_t s) {
                return Eigen::Matrix<cplx, 2, 4>(positive_basis(g.symbol_momentum(s), m).adjoint());
            });
            dims[k] = 2;
        }
    }
    return SpinorField(g.with_mode(to_full ? SpinorMode::full : SpinorMode::compressed), Representation::momentum,
                       std::move(data));
}

constexpr char kMagic[8] = {'H', 'V', 'Z', 'F', 'I', 'E', 'L', 'D'};

template <class T>
void put(std::ostream& os, T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        os.write(bytes.data(), sizeof(T));
    } else {
        os.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
}

template <class T>
T get(std::istream& is) {
    std::array<char, sizeof(T)> bytes{};
    is.read(bytes.data(), sizeof(T));
    require(static_cast<bool>(is), "field_format", "truncated field file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}
}  // namespace

SpinorField embed(const SpinorField& compressed, std::span<const double> masses) {
    return change_mode(compressed, masses, true);
}

SpinorField compress(const SpinorField& full, std::span<const double> masses) {
    return change_mode(full, masses, false);
}

void write_field(const SpinorField& field, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), "io_error", "cannot open " + path + " for writing");
    const auto& g = field.grid();
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(g.points()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(g.particles()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(g.spinor_dim()));
    put<std::uint32_t>(os, field.representation() == Representation::momentum ? 0u : 1u);
    put<std::uint32_t>(os, 0);
    put<double>(os, g.p_max());
    put<std::uint64_t>(os, field.size());
    for (const auto& z : field.values()) {
        put<double>(os, z.real());
        put<double>(os, z.imag());
    }
    require(static_cast<bool>(os), "io_error", "failed writing " + path);
}

SpinorField read_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), "io_error", "cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    require(static_cast<bool>(is) && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0, "field_format",
            path + " is not a field snapshot");
    const auto version = get<std::uint32_t>(is);
    require(version == 1, "field_format", "unsupported field snapshot version " + std::to_string(version));
    const auto points = get<std::uint32_t>(is);
    const auto particles = get<std::uint32_t>(is);
    const auto sdim = get<std::uint32_t>(is);
    const auto rep = get<std::uint32_t>(is);
    get<std::uint32_t>(is);
    const auto p_max = get<double>(is);
    const auto count = get<std::uint64_t>(is);
    require(sdim == 2 || sdim == 4, "field_format", "spinor dimension must be 2 or 4");
    require(rep <= 1, "field_format", "unknown representation tag");
    const auto grid = MomentumGrid::make(static_cast<int>(points), p_max, static_cast<int>(particles),
                                         sdim == 2 ? SpinorMode::compressed : SpinorMode::full);
    require(count == grid.state_dim(), "field_format", "value count does not match the header");
    std::vector<cplx> values(count);
    for (auto& z : values) {
        const double re = get<double>(is);
        const double im = get<double>(is);
        z = {re, im};
    }
    return SpinorField(grid, rep == 0 ? Representation::momentum : Representation::position, std::move(values));
}

}  // namespace hvz
