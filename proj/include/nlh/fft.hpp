#pragma once

#include "nlh/common.hpp"

#include <memory>

namespace nlh {

/// Real-data transform between a half spectrum c_0..c_n and M grid values
/// u_j = sum_{|k|<=n} c_k e^{i k x_j}, x_j = 2 pi j / M. Extended precision
/// (FFTW long-double build). Each object owns its buffers; not shareable
/// across threads, but independent objects are.
class RealFft {
public:
    explicit RealFft(int M);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    int size() const { return M_; }

    /// Synthesis; requires half.size() - 1 < M/2.
    void to_grid(const std::vector<cplx>& half, std::vector<real>& grid);
    /// Analysis; fills half[0..n] where n = half.size() - 1.
    void from_grid(const std::vector<real>& grid, std::vector<cplx>& half);

private:
    struct Impl;
    int M_;
    std::unique_ptr<Impl> impl_;
};

/// Smallest even size >= n whose only prime factors are 2, 3, 5.
int fft_friendly_size(int n);

}  // namespace nlh
