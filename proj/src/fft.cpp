#include "fft.hpp"

namespace hvz::detail {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::vector<fftw_iodim64> to_iodims(const std::vector<FftDim>& dims) {
    std::vector<fftw_iodim64> out;
    out.reserve(dims.size());
    for (const auto& d : dims) out.push_back({d.n, d.stride, d.stride});
    return out;
}
}  // namespace

FftPlan::FftPlan(const std::vector<FftDim>& dims, const std::vector<FftDim>& batch, int sign) {
    const auto d = to_iodims(dims);
    const auto b = to_iodims(batch);
    // The planner only inspects alignment and layout under FFTW_ESTIMATE;
    // a small dummy buffer is enough.
    std::lock_guard lock(planner_mutex());
    fftw_complex dummy[1];
    plan_ = fftw_plan_guru64_dft(static_cast<int>(d.size()), d.data(), static_cast<int>(b.size()),
                                 b.empty() ? nullptr : b.data(), dummy, dummy, sign,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    require(plan_ != nullptr, "fft_plan", "FFTW failed to create a plan");
}

FftPlan::~FftPlan() {
    if (plan_) {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
    }
}

FftPlan& FftPlan::operator=(FftPlan&& other) noexcept {
    if (this != &other) {
        if (plan_) {
            std::lock_guard lock(planner_mutex());
            fftw_destroy_plan(plan_);
        }
        plan_ = other.plan_;
        other.plan_ = nullptr;
    }
    return *this;
}

void FftPlan::execute(cplx* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan_, p, p);
}

namespace {
std::vector<FftDim> cubic_dims(int n, int components) {
    const std::ptrdiff_t c = components;
    return {{n, c * n * n}, {n, c * n}, {n, c}};
}
}  // namespace

CubicFft::CubicFft(int n, int components)
    : to_position(cubic_dims(n, components), {{components, 1}}, FFTW_BACKWARD),
      to_momentum(cubic_dims(n, components), {{components, 1}}, FFTW_FORWARD) {}

}  // namespace hvz::detail
