#pragma once

#include <cstddef>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "hvz/types.hpp"

namespace hvz::detail {

// One transform axis or batch axis in FFTW guru layout (element strides).
struct FftDim {
    std::ptrdiff_t n;
    std::ptrdiff_t stride;
};

// Owning wrapper around an in-place complex FFTW plan. Plans are created
// with FFTW_ESTIMATE | FFTW_UNALIGNED so they may be executed on any array
// with the planned layout.
class FftPlan {
public:
    FftPlan(const std::vector<FftDim>& dims, const std::vector<FftDim>& batch, int sign);
    ~FftPlan();
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;
    FftPlan(FftPlan&& other) noexcept : plan_(other.plan_) { other.plan_ = nullptr; }
    FftPlan& operator=(FftPlan&& other) noexcept;

    void execute(cplx* data) const;

private:
    fftw_plan plan_ = nullptr;
};

// Forward/backward pair for a cubic n^3 lattice with `components`
// interleaved values per site, stored contiguously.
struct CubicFft {
    CubicFft(int n, int components);
    FftPlan to_position;  // exp(+i p x)
    FftPlan to_momentum;  // exp(-i p x)
};

}  // namespace hvz::detail
