#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hvz/types.hpp"

namespace hvz {

enum class SpinorMode { compressed, full };
enum class Representation { momentum, position };

inline int spinor_dim(SpinorMode mode) { return mode == SpinorMode::compressed ? 2 : 4; }

inline constexpr std::size_t default_memory_budget = std::size_t{1} << 31;

// Periodic momentum lattice [-p_max, p_max)^3 per particle with its dual
// position lattice [-L/2, L/2)^3, L = pi n / p_max. Both include the origin.
//
// State layout: particle 0 is the slowest index. Within one particle the
// lattice site (ix, iy, iz; iz fastest) comes before the spinor component.
class MomentumGrid {
public:
    static MomentumGrid make(int points_per_axis, double p_max, int particle_count, SpinorMode mode,
                             std::size_t memory_budget_bytes = default_memory_budget);

    int points() const noexcept { return points_; }
    double p_max() const noexcept { return p_max_; }
    int particles() const noexcept { return particles_; }
    SpinorMode mode() const noexcept { return mode_; }
    int spinor_dim() const noexcept { return hvz::spinor_dim(mode_); }
    std::size_t memory_budget() const noexcept { return budget_; }

    double dp() const noexcept { return 2.0 * p_max_ / points_; }
    double dx() const noexcept;
    double box_length() const noexcept { return dx() * points_; }
    double momentum_cell() const noexcept { return dp() * dp() * dp(); }
    double position_cell() const noexcept { return dx() * dx() * dx(); }

    std::size_t sites() const noexcept { return static_cast<std::size_t>(points_) * points_ * points_; }
    std::size_t block() const noexcept { return sites() * spinor_dim(); }
    std::size_t state_dim() const noexcept { return state_dim_; }

    // Integer lattice coordinates in [-n/2, n/2) for a site index.
    std::array<int, 3> coords(std::size_t site) const noexcept;
    std::size_t site_of(const std::array<int, 3>& c) const noexcept;
    Vec3 momentum(std::size_t site) const noexcept;
    Vec3 position(std::size_t site) const noexcept;
    // Momentum used for spinor symbols: the Nyquist component -p_max, which
    // is its own mirror image on the periodic lattice, is replaced by 0 so
    // that the symbols are covariant under lattice reflections.
    Vec3 symbol_momentum(std::size_t site) const noexcept;

    // Same lattice with a different particle count or spinor mode.
    MomentumGrid with_particles(int particle_count) const;
    MomentumGrid with_mode(SpinorMode mode) const;

    bool same_lattice(const MomentumGrid& other) const noexcept {
        return points_ == other.points_ && p_max_ == other.p_max_;
    }
    bool operator==(const MomentumGrid& other) const noexcept {
        return same_lattice(other) && particles_ == other.particles_ && mode_ == other.mode_;
    }

private:
    MomentumGrid() = default;
    int points_ = 0;
    double p_max_ = 0.0;
    int particles_ = 0;
    SpinorMode mode_ = SpinorMode::compressed;
    std::size_t budget_ = default_memory_budget;
    std::size_t state_dim_ = 0;
};

// Complex field over (lattice sites x spinor components)^N.
class SpinorField {
public:
    SpinorField(MomentumGrid grid, Representation rep);
    SpinorField(MomentumGrid grid, Representation rep, std::vector<cplx> values);

    const MomentumGrid& grid() const noexcept { return grid_; }
    Representation representation() const noexcept { return rep_; }
    std::span<const cplx> values() const noexcept { return values_; }
    std::span<cplx> values() noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

    // Cell volume of one lattice point of the full N-particle configuration.
    double cell_weight() const noexcept;
    double norm() const;
    cplx inner(const SpinorField& other) const;  // <this, other>, antilinear in this

private:
    MomentumGrid grid_;
    Representation rep_;
    std::vector<cplx> values_;
};

// Unitary transform between the momentum and position representations.
SpinorField transform(const SpinorField& field, Representation target);

// Pointwise multiplication of one particle's spinor slot by the positive
// projector symbol. Full 4-spinor fields in momentum representation only.
SpinorField apply_projector(const SpinorField& field, int particle, Mass mass);

// (sum sqrt(|p|^2+1) |f(p)|^2 * cell)^{1/2}, one-particle fields.
double h_half_norm(const SpinorField& field);

// Embed compressed coefficients into 4-spinors via u(p) and the reverse
// compression via u(p)^dagger; one mass per particle.
SpinorField embed(const SpinorField& compressed, std::span<const double> masses);
SpinorField compress(const SpinorField& full, std::span<const double> masses);

// Binary snapshot. Layout (little endian): 8-byte magic "HVZFIELD",
// uint32 version, uint32 points_per_axis, uint32 particle_count,
// uint32 spinor_dim, uint32 representation (0 momentum, 1 position),
// uint32 reserved, float64 p_max, uint64 value count, then value count
// pairs of float64 (re, im) in state layout order.
void write_field(const SpinorField& field, const std::string& path);
SpinorField read_field(const std::string& path);

}  // namespace hvz
