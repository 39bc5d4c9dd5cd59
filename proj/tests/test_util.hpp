#pragma once

#include "nlh/common.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace testutil {

using nlh::cplx;
using nlh::real;

// Random half spectrum with c_0 real and geometric decay.
inline std::vector<cplx> random_half(int N, unsigned seed, real decay = 0.5L)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1, 1);
    std::vector<cplx> c(N + 1);
    for (int k = 0; k <= N; ++k) c[k] = cplx(d(rng), k == 0 ? 0 : d(rng)) * std::exp(-decay * k);
    return c;
}

inline real max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    real m = 0;
    for (size_t i = 0; i < a.size() && i < b.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace testutil
