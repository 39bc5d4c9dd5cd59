#include "nlh/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

namespace nlh {

namespace {
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}
}  // namespace

struct RealFft::Impl {
    long double* grid = nullptr;
    fftwl_complex* spec = nullptr;
    fftwl_plan fwd = nullptr;
    fftwl_plan inv = nullptr;
};

RealFft::RealFft(int M) : M_(M), impl_(std::make_unique<Impl>())
{
    if (M < 2 || M % 2) fail(ErrorKind::domain, "RealFft: size must be even and >= 2");
    std::lock_guard<std::mutex> lock(planner_mutex());
    impl_->grid = fftwl_alloc_real(M);
    impl_->spec = fftwl_alloc_complex(M / 2 + 1);
    impl_->fwd = fftwl_plan_dft_r2c_1d(M, impl_->grid, impl_->spec, FFTW_ESTIMATE);
    impl_->inv = fftwl_plan_dft_c2r_1d(M, impl_->spec, impl_->grid, FFTW_ESTIMATE);
}

RealFft::~RealFft()
{
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftwl_destroy_plan(impl_->fwd);
    fftwl_destroy_plan(impl_->inv);
    fftwl_free(impl_->grid);
    fftwl_free(impl_->spec);
}

void RealFft::to_grid(const std::vector<cplx>& half, std::vector<real>& grid)
{
    const int n = static_cast<int>(half.size()) - 1;
    if (2 * n >= M_) fail(ErrorKind::domain, "RealFft::to_grid: spectrum too wide for grid");
    std::memset(impl_->spec, 0, sizeof(fftwl_complex) * (M_ / 2 + 1));
    for (int k = 0; k <= n; ++k) {
        impl_->spec[k][0] = half[k].real();
        impl_->spec[k][1] = half[k].imag();
    }
    impl_->spec[0][1] = 0;
    fftwl_execute(impl_->inv);
    grid.assign(impl_->grid, impl_->grid + M_);
}

void RealFft::from_grid(const std::vector<real>& grid, std::vector<cplx>& half)
{
    if (static_cast<int>(grid.size()) != M_) fail(ErrorKind::domain, "RealFft::from_grid: size mismatch");
    const int n = static_cast<int>(half.size()) - 1;
    if (n > M_ / 2) fail(ErrorKind::domain, "RealFft::from_grid: spectrum wider than grid");
    std::memcpy(impl_->grid, grid.data(), sizeof(long double) * M_);
    fftwl_execute(impl_->fwd);
    const real inv = 1.0L / M_;
    for (int k = 0; k <= n; ++k) half[k] = cplx(impl_->spec[k][0] * inv, impl_->spec[k][1] * inv);
    half[0] = cplx(half[0].real(), 0);
}

int fft_friendly_size(int n)
{
    for (int m = std::max(n, 2);; ++m) {
        if (m % 2) continue;
        int r = m;
        for (int p : {2, 3, 5})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

}  // namespace nlh
