#include "nlh/weierstrass.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace nlh::weierstrass {

namespace {

// Series region: |z| below a quarter of |2 omega1| keeps the Laurent tail tiny.
constexpr int n_terms = 40;

const std::vector<real>& coeffs()
{
    static const std::vector<real> c = laurent_coeffs(n_terms);
    return c;
}

WpValue series(cplx z)
{
    const auto& c = coeffs();
    const cplx z2 = z * z;
    // p = z^{-2} + sum_{n>=2} c_n z^{2n-2}; p' = -2 z^{-3} + sum (2n-2) c_n z^{2n-3}
    cplx p = 0, dp = 0;
    for (int n = n_terms; n >= 2; --n) {
        p = p * z2 + c[n];
        dp = dp * z2 + real(2 * n - 2) * c[n];
    }
    WpValue v;
    v.p = real(1) / z2 + p * z2;
    v.dp = -real(2) / (z2 * z) + dp * z;
    return v;
}

}  // namespace

real omega1()
{
    static const real w = std::pow(std::tgamma(real(1) / 3), real(3)) / (4 * pi_l);
    return w;
}

cplx omega3() { return std::polar(omega1(), pi_l / 3); }

std::vector<real> laurent_coeffs(int n_max)
{
    std::vector<real> c(std::max(n_max, 3) + 1, 0);
    c[2] = 0;                 // g2 / 20
    c[3] = real(1) / 28;      // g3 / 28
    for (int n = 4; n <= n_max; ++n) {
        real s = 0;
        for (int m = 2; m <= n - 2; ++m) s += c[m] * c[n - m];
        c[n] = real(3) / ((2 * n + 1) * real(n - 3)) * s;
    }
    c.resize(n_max + 1);
    return c;
}

WpValue wp(cplx z)
{
    // period coordinates: z = u (2 omega1) + v (2 omega3)
    const real w1 = 2 * omega1();
    const cplx w3 = real(2) * omega3();
    const real v = z.imag() / w3.imag();
    const real u = (z.real() - v * w3.real()) / w1;
    cplx zr = z - std::round(u) * w1 - std::round(v) * w3;
    // the rounded cell is not always the closest; try the neighbours
    cplx best = zr;
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b) {
            const cplx t = zr - real(a) * w1 - real(b) * w3;
            if (std::abs(t) < std::abs(best)) best = t;
        }
    zr = best;
    WpValue out;
    if (std::abs(zr) < 1e-300L || std::abs(zr) <= 64 * std::numeric_limits<real>::epsilon() * std::abs(z)) {
        out.infinite = true;
        out.p = out.dp = cplx(std::numeric_limits<real>::infinity(), 0);
        return out;
    }
    const real r0 = 0.125L * w1;
    int k = 0;
    cplx zs = zr;
    while (std::abs(zs) > r0) {
        zs /= 2;
        ++k;
    }
    WpValue s = series(zs);
    for (int i = 0; i < k; ++i) {
        // p(2z) = 9 p^4 / (4 p^3 - 1) - 2 p, p'(2z) = p' (18 p^3 (p^3 - 1) / (4 p^3 - 1)^2 - 1)
        const cplx p = s.p, p3 = p * p * p;
        const cplx den = real(4) * p3 - real(1);
        s.p = real(9) * p3 * p / den - real(2) * p;
        s.dp = s.dp * (real(18) * p3 * (p3 - real(1)) / (den * den) - real(1));
    }
    return s;
}

cplx WeierstrassLattice::point(long N, long M) const
{
    return -xi0 + std::cbrt(real(6)) * alpha * (real(2 * N) * omega1() + real(2 * M) * omega3());
}

real WeierstrassLattice::spacing() const { return std::abs(std::cbrt(real(6)) * alpha * real(2) * omega1()); }

WeierstrassLattice WeierstrassLattice::from_polar(real r, real theta, cplx xi0)
{
    WeierstrassLattice l;
    l.alpha = std::polar(r, theta);
    l.xi0 = xi0;
    return l;
}

WeierstrassLattice WeierstrassLattice::from_argument_shift(real r, real theta, cplx shift)
{
    WeierstrassLattice l;
    l.alpha = std::polar(r, theta);
    l.xi0 = -std::cbrt(real(6)) * l.alpha * shift;
    return l;
}

cplx WeierstrassLattice::argument_shift() const { return -xi0 / (std::cbrt(real(6)) * alpha); }

LatticeMatch nearest_lattice_point(cplx xi, const WeierstrassLattice& lat)
{
    const cplx s = (xi + lat.xi0) / (std::cbrt(real(6)) * lat.alpha * real(2) * omega1());
    // s = N + M e^{i pi/3}
    const real M = s.imag() / std::sin(pi_l / 3);
    const real N = s.real() - M * std::cos(pi_l / 3);
    LatticeMatch m;
    m.xi = xi;
    m.distance = std::numeric_limits<real>::infinity();
    for (long a = -1; a <= 1; ++a)
        for (long b = -1; b <= 1; ++b) {
            const long n = std::lround(N) + a, mm = std::lround(M) + b;
            const cplx p = lat.point(n, mm);
            const real d = std::abs(p - xi);
            if (d < m.distance) {
                m.distance = d;
                m.nearest = p;
                m.N = n;
                m.M = mm;
            }
        }
    m.relative = m.distance / lat.spacing();
    return m;
}

LatticeReport lattice_compare(const std::vector<cplx>& zeta, const WeierstrassLattice& lat)
{
    LatticeReport r;
    std::vector<real> rel;
    for (cplx z : zeta) {
        LatticeMatch m = nearest_lattice_point(std::exp(z / real(5)), lat);
        m.zeta = z;
        r.matches.push_back(m);
        rel.push_back(m.relative);
    }
    if (rel.empty()) return r;
    std::sort(rel.begin(), rel.end());
    const size_t n = rel.size();
    r.median_relative = n % 2 ? rel[n / 2] : (rel[n / 2 - 1] + rel[n / 2]) / 2;
    real s = 0;
    for (real v : rel) s += v;
    r.mean_relative = s / n;
    r.max_relative = rel.back();
    return r;
}

LatticeFit fit_lattice(const std::vector<cplx>& zeta, const WeierstrassLattice& initial, int max_iterations)
{
    using MatC = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
    using VecC = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;
    if (zeta.size() < 2) fail(ErrorKind::domain, "fit_lattice: need at least two singularities");
    LatticeFit out;
    out.lattice = initial;
    std::vector<std::pair<long, long>> prev;
    const cplx e3 = std::polar(real(1), pi_l / 3);
    for (int it = 0; it < max_iterations; ++it) {
        const LatticeReport rep = lattice_compare(zeta, out.lattice);
        std::vector<std::pair<long, long>> nm;
        for (const auto& m : rep.matches) nm.emplace_back(m.N, m.M);
        if (nm == prev) break;
        prev = nm;
        const int n = static_cast<int>(zeta.size());
        MatC A(n, 2);
        VecC b(n);
        for (int i = 0; i < n; ++i) {
            A(i, 0) = 1;
            A(i, 1) = real(nm[i].first) + real(nm[i].second) * e3;
            b(i) = rep.matches[i].xi;
        }
        const VecC c = A.colPivHouseholderQr().solve(b);
        // c(1) = 6^{1/3} alpha 2 omega1, c(0) = -xi0
        out.lattice.alpha = c(1) / (std::cbrt(real(6)) * real(2) * omega1());
        out.lattice.xi0 = -c(0);
        out.iterations = it + 1;
    }
    out.report = lattice_compare(zeta, out.lattice);
    return out;
}

void write_lattice_csv(std::ostream& os, const LatticeReport& r)
{
    os << "re_zeta,im_zeta,re_xi,im_xi,re_lattice,im_lattice,relative_distance\n";
    auto d = [](real v) { return fmt17(static_cast<double>(v)); };
    for (const auto& m : r.matches)
        os << d(m.zeta.real()) << ',' << d(m.zeta.imag()) << ',' << d(m.xi.real()) << ',' << d(m.xi.imag()) << ','
           << d(m.nearest.real()) << ',' << d(m.nearest.imag()) << ',' << d(m.relative) << '\n';
}

}  // namespace nlh::weierstrass
