#include "nlh/pade.hpp"

#include "nlh/spectral_io.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>

namespace nlh::continuation {

namespace {

using MatC = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using VecC = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;

constexpr real ld_eps = std::numeric_limits<real>::epsilon();
const cplx I(0, 1);

real max_abs(const std::vector<cplx>& v)
{
    real m = 0;
    for (auto& c : v) m = std::max(m, std::abs(c));
    return m;
}

void trim_high(std::vector<cplx>& p, real tol)
{
    while (p.size() > 1 && std::abs(p.back()) <= tol) p.pop_back();
}

std::vector<cplx> poly_mul(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    std::vector<cplx> out(a.size() + b.size() - 1, cplx(0));
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

std::vector<cplx> poly_deriv(const std::vector<cplx>& p)
{
    if (p.size() <= 1) return {cplx(0)};
    std::vector<cplx> d(p.size() - 1);
    for (size_t i = 1; i < p.size(); ++i) d[i - 1] = static_cast<real>(i) * p[i];
    return d;
}

// q(w) / (w - r), remainder discarded (r is a root).
std::vector<cplx> deflate(const std::vector<cplx>& q, cplx r)
{
    const int n = static_cast<int>(q.size()) - 1;
    std::vector<cplx> out(n);
    cplx b = q[n];
    for (int k = n - 1; k >= 0; --k) {
        out[k] = b;
        b = q[k] + r * b;
    }
    return out;
}

// Null vector of a (rows x cols) system with rows < cols: the right singular
// vector of the smallest singular value.
VecC null_vector(const MatC& A, Eigen::Matrix<real, Eigen::Dynamic, 1>* sv = nullptr)
{
    Eigen::JacobiSVD<MatC> svd(A, Eigen::ComputeFullV);
    if (sv) *sv = svd.singularValues();
    return svd.matrixV().col(A.cols() - 1);
}

bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

void fill_poles(RationalApproximant& r)
{
    r.poles.clear();
    if (r.den.size() <= 1) return;
    auto dq = poly_deriv(r.den);
    for (cplx p : poly_roots(r.den)) {
        Pole P;
        P.w = p;
        P.z = w_to_upper_z(p);
        P.residue_w = polyval(r.num, p) / polyval(dq, p);
        P.residue_z = I * std::conj(P.residue_w) / std::conj(p);
        r.poles.push_back(P);
    }
}

}  // namespace

HalfSeries split_series(const FourierState& s)
{
    if (s.rep != spectral::Representation::U) fail(ErrorKind::domain, "split_series: state is not in U form");
    HalfSeries g;
    g.a = s.c;
    g.a[0] = s.c[0] / real(2);
    return g;
}

cplx polyval(const std::vector<cplx>& p, cplx w)
{
    cplx v = 0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * w + *it;
    return v;
}

cplx reconstruct(const HalfSeries& g, cplx z)
{
    cplx w = std::exp(I * z);
    return polyval(g.a, w) + std::conj(polyval(g.a, real(1) / std::conj(w)));
}

std::vector<cplx> poly_roots(const std::vector<cplx>& p_in)
{
    std::vector<cplx> p = p_in;
    trim_high(p, 1e-18L * max_abs(p));
    const int n = static_cast<int>(p.size()) - 1;
    if (n < 1) return {};
    MatC C = MatC::Zero(n, n);
    for (int i = 1; i < n; ++i) C(i, i - 1) = 1;
    for (int i = 0; i < n; ++i) C(i, n - 1) = -p[i] / p[n];
    Eigen::ComplexEigenSolver<MatC> es(C, false);
    std::vector<cplx> roots(n);
    auto dp = poly_deriv(p);
    for (int i = 0; i < n; ++i) {
        cplx r = es.eigenvalues()(i);
        for (int it = 0; it < 4; ++it) {
            cplx d = polyval(dp, r);
            if (std::abs(d) == 0) break;
            cplx step = polyval(p, r) / d;
            if (!finite(step) || std::abs(step) > 1e-3L * (1 + std::abs(r))) break;
            r -= step;
        }
        roots[i] = r;
    }
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
    return roots;
}

cplx w_to_upper_z(cplx w)
{
    return {std::arg(w), std::abs(std::log(std::abs(w)))};
}

RationalApproximant pade(const HalfSeries& g, int m, int n, const PadeOptions& opt)
{
    if (m < 0 || n < 0) fail(ErrorKind::domain, "pade: degrees must be non-negative");
    if (m + n + 1 > g.M()) fail(ErrorKind::domain, "pade: need m + n + 1 <= M");
    std::vector<cplx> a(g.a.begin(), g.a.begin() + m + n + 1);
    real scale = 0;
    for (auto& c : a) scale += std::norm(c);
    scale = std::sqrt(scale);

    RationalApproximant r;
    if (scale == 0) {
        r.num = {0};
        r.den = {1};
        r.reduced = m + n > 0;
        r.note = "zero series";
        return r;
    }
    const real tol = opt.svd_tol * scale;
    auto at = [&](int i) { return i < 0 ? cplx(0) : a[i]; };

    std::vector<cplx> b{1};
    while (n > 0) {
        MatC Z(n, n + 1);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= n; ++j) Z(i, j) = at(m + 1 + i - j);
        Eigen::Matrix<real, Eigen::Dynamic, 1> sv;
        VecC v = null_vector(Z, &sv);
        int rho = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) > tol) ++rho;
        if (rho == n) {
            b.assign(v.data(), v.data() + n + 1);
            break;
        }
        r.reduced = true;
        m = std::max(0, m - (n - rho));
        n = rho;
    }

    std::vector<cplx> p(m + 1, cplx(0));
    for (int i = 0; i <= m; ++i)
        for (int j = 0; j <= std::min(i, n); ++j) p[i] += at(i - j) * b[j];

    // common w factors
    size_t lam = 0;
    const real btol = opt.svd_tol * max_abs(b);
    while (lam + 1 < b.size() && std::abs(b[lam]) <= btol) ++lam;
    if (lam > 0) {
        b.erase(b.begin(), b.begin() + lam);
        p.erase(p.begin(), p.begin() + std::min(lam, p.size() - 1));
        r.reduced = true;
    }
    trim_high(b, btol);
    trim_high(p, tol);
    const cplx b0 = b[0];
    for (auto& c : b) c /= b0;
    for (auto& c : p) c /= b0;
    r.num = std::move(p);
    r.den = std::move(b);

    // Froissart filtering by deflation: R - res/(w - p) = ((P - res Q~)/(w - p)) / Q~.
    const real res_scale = std::max(std::abs(a[0]), max_abs(a));
    for (;;) {
        fill_poles(r);
        if (r.poles.empty()) break;
        real max_res = 0;
        for (auto& P : r.poles)
            if (finite(P.residue_w)) max_res = std::max(max_res, std::abs(P.residue_w));
        auto zeros = poly_roots(r.num);
        int worst = -1;
        real worst_res = 0;
        for (size_t i = 0; i < r.poles.size(); ++i) {
            const auto& P = r.poles[i];
            const real res = std::abs(P.residue_w);
            // non-finite residues come from multiple poles, which are kept
            if (!finite(P.residue_w) || res >= opt.keep_fraction * max_res) continue;
            real dz = std::numeric_limits<real>::infinity();
            for (cplx z0 : zeros) dz = std::min(dz, std::abs(z0 - P.w));
            bool doublet = dz < opt.doublet_distance * std::max(real(1), std::abs(P.w));
            bool negligible = res < opt.residue_floor * res_scale;
            if ((doublet || negligible) && (worst < 0 || res < worst_res)) {
                worst = static_cast<int>(i);
                worst_res = res;
            }
        }
        if (worst < 0) break;
        const Pole P = r.poles[worst];
        auto qt = deflate(r.den, P.w);
        cplx res = polyval(r.num, P.w) / polyval(qt, P.w);
        std::vector<cplx> pn = r.num;
        pn.resize(std::max(pn.size(), qt.size()), cplx(0));
        for (size_t i = 0; i < qt.size(); ++i) pn[i] -= res * qt[i];
        pn = pn.size() > 1 ? deflate(pn, P.w) : std::vector<cplx>{0};
        const cplx q0 = qt[0];
        if (std::abs(q0) == 0) break;
        for (auto& c : qt) c /= q0;
        for (auto& c : pn) c /= q0;
        trim_high(pn, ld_eps * max_abs(pn));
        r.num = std::move(pn);
        r.den = std::move(qt);
        ++r.filtered;
    }
    r.m = static_cast<int>(r.num.size()) - 1;
    r.n = static_cast<int>(r.den.size()) - 1;
    if (r.reduced) r.note = "degree reduced to [" + std::to_string(r.m) + "/" + std::to_string(r.n) + "]";
    return r;
}

cplx eval_rational(const RationalApproximant& r, cplx w)
{
    return polyval(r.num, w) / polyval(r.den, w);
}

cplx evaluate(const RationalApproximant& r, cplx z, bool* infinite)
{
    auto one = [&](cplx w, bool& inf) {
        cplx q = polyval(r.den, w);
        real mag = 0, wp = 1;
        for (auto& c : r.den) {
            mag += std::abs(c) * wp;
            wp *= std::abs(w);
        }
        cplx v = polyval(r.num, w) / q;
        inf = inf || !finite(v) || std::abs(q) <= 64 * ld_eps * mag;
        return v;
    };
    bool inf = false;
    cplx w = std::exp(I * z);
    cplx v = one(w, inf) + std::conj(one(real(1) / std::conj(w), inf));
    if (infinite) *infinite = inf;
    if (inf) return {std::numeric_limits<real>::infinity(), 0};
    return v;
}

QuadraticApproximant quadratic_pade(const HalfSeries& g, int l, int m, int n, real cluster_tol)
{
    if (l < 0 || m < 0 || n < 0) fail(ErrorKind::domain, "quadratic_pade: degrees must be non-negative");
    const int K = l + m + n + 2;
    if (K > g.M()) fail(ErrorKind::domain, "quadratic_pade: need l + m + n + 2 <= M");
    std::vector<cplx> a(g.a.begin(), g.a.begin() + K);
    std::vector<cplx> a2(K, cplx(0));
    for (int i = 0; i < K; ++i)
        for (int j = 0; j <= i; ++j) a2[i] += a[j] * a[i - j];

    MatC A = MatC::Zero(K, K + 1);
    for (int k = 0; k < K; ++k) {
        if (k <= l) A(k, k) = 1;
        for (int j = 0; j <= std::min(m, k); ++j) A(k, l + 1 + j) = a[k - j];
        for (int j = 0; j <= std::min(n, k); ++j) A(k, l + m + 2 + j) = a2[k - j];
    }
    VecC x = null_vector(A);
    Eigen::Index imax;
    x.cwiseAbs().maxCoeff(&imax);
    x /= x(imax);

    QuadraticApproximant qa;
    qa.p.assign(x.data(), x.data() + l + 1);
    qa.q.assign(x.data() + l + 1, x.data() + l + m + 2);
    qa.r.assign(x.data() + l + m + 2, x.data() + K + 1);
    const real ztol = 1e-12L;
    for (auto* v : {&qa.p, &qa.q, &qa.r})
        for (auto& c : *v)
            if (std::abs(c) < 1e-15L) c = 0;
    qa.degenerate = max_abs(qa.r) < ztol;
    if (qa.degenerate) {
        qa.r.assign(1, cplx(0));
        qa.note = "r vanishes: linear relation";
    }
    auto q2 = poly_mul(qa.q, qa.q);
    auto pr = poly_mul(qa.p, qa.r);
    qa.discriminant.assign(std::max(q2.size(), pr.size()), cplx(0));
    for (size_t i = 0; i < q2.size(); ++i) qa.discriminant[i] += q2[i];
    for (size_t i = 0; i < pr.size(); ++i) qa.discriminant[i] -= real(4) * pr[i];
    trim_high(qa.discriminant, ld_eps * 16 * std::max(real(1), max_abs(qa.discriminant)));
    if (max_abs(qa.discriminant) > ztol) {
        qa.discriminant_roots = poly_roots(qa.discriminant);
        const auto& dr = qa.discriminant_roots;
        for (size_t i = 0; i < dr.size(); ++i) {
            bool simple = true;
            for (size_t j = 0; j < dr.size() && simple; ++j)
                if (j != i && std::abs(dr[i] - dr[j]) < cluster_tol * std::max(real(1), std::abs(dr[i]))) simple = false;
            if (simple) {
                qa.branch_w.push_back(dr[i]);
                qa.branch_z.push_back(w_to_upper_z(dr[i]));
            }
        }
    }
    return qa;
}

std::pair<cplx, cplx> quadratic_roots(const QuadraticApproximant& qa, cplx w)
{
    const cplx P = polyval(qa.p, w), Q = polyval(qa.q, w), R = polyval(qa.r, w);
    cplx s = std::sqrt(Q * Q - real(4) * P * R);
    if ((std::conj(Q) * s).real() < 0) s = -s;
    const cplx d = -Q - s;  // no cancellation
    const cplx inf(std::numeric_limits<real>::infinity(), 0);
    cplx g1 = std::abs(R) == 0 ? inf : d / (real(2) * R);
    cplx g2 = std::abs(d) == 0 ? (std::abs(R) == 0 ? inf : -Q / (real(2) * R)) : real(2) * P / d;
    return {g1, g2};
}

cplx continue_branch(const QuadraticApproximant& qa, cplx w_start, cplx g_start, cplx w_end, int steps)
{
    steps = std::max(steps, 1);
    cplx prev = g_start, prev2 = g_start;
    bool have2 = false;
    for (int s = 0; s <= steps; ++s) {
        cplx w = w_start + (w_end - w_start) * (static_cast<real>(s) / steps);
        auto [g1, g2] = quadratic_roots(qa, w);
        cplx guess = have2 ? real(2) * prev - prev2 : prev;
        cplx pick = (!finite(g2) || (finite(g1) && std::abs(g1 - guess) <= std::abs(g2 - guess))) ? g1 : g2;
        prev2 = prev;
        prev = pick;
        have2 = s > 0;
    }
    return prev;
}

cplx StripGrid::at(int i, int j) const
{
    real x = nx > 1 ? x0 + (x1 - x0) * i / (nx - 1) : x0;
    real y = ny > 1 ? y0 + (y1 - y0) * j / (ny - 1) : y0;
    return {x, y};
}

FieldGrid evaluate_field(const RationalApproximant& r, const StripGrid& grid)
{
    FieldGrid f;
    f.grid = grid;
    f.values.resize(static_cast<size_t>(grid.nx) * grid.ny);
    f.infinite.assign(f.values.size(), 0);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            bool inf = false;
            size_t idx = static_cast<size_t>(j) * grid.nx + i;
            f.values[idx] = evaluate(r, grid.at(i, j), &inf);
            f.infinite[idx] = inf;
        }
    return f;
}

cplx evaluate(const QuadraticApproximant& qa, const HalfSeries& g, cplx z)
{
    const cplx w0 = std::polar(real(1), z.real());
    const cplx g0 = polyval(g.a, w0);
    const cplx w = std::exp(I * z);
    const cplx W = real(1) / std::conj(w);
    int steps = 16 + static_cast<int>(64 * std::abs(z.imag()));
    return continue_branch(qa, w0, g0, w, steps) + std::conj(continue_branch(qa, w0, g0, W, steps));
}

FieldGrid evaluate_field(const QuadraticApproximant& qa, const HalfSeries& g, const StripGrid& grid)
{
    if (grid.y0 < 0) fail(ErrorKind::domain, "evaluate_field: quadratic fields are marched upward from Im z = 0");
    FieldGrid f;
    f.grid = grid;
    f.values.resize(static_cast<size_t>(grid.nx) * grid.ny);
    f.infinite.assign(f.values.size(), 0);
    for (int i = 0; i < grid.nx; ++i) {
        const real x = grid.at(i, 0).real();
        cplx w_prev = std::polar(real(1), x), W_prev = w_prev;
        cplx g_in = polyval(g.a, w_prev), g_out = g_in;
        for (int j = 0; j < grid.ny; ++j) {
            const cplx z = grid.at(i, j);
            const cplx w = std::exp(I * z), W = real(1) / std::conj(w);
            const int steps = 8 + static_cast<int>(64 * std::abs(W - W_prev));
            g_in = continue_branch(qa, w_prev, g_in, w, steps);
            g_out = continue_branch(qa, W_prev, g_out, W, steps);
            w_prev = w;
            W_prev = W;
            size_t idx = static_cast<size_t>(j) * grid.nx + i;
            cplx v = g_in + std::conj(g_out);
            f.infinite[idx] = !finite(v);
            f.values[idx] = v;
        }
    }
    return f;
}

real phase(cplx v)
{
    real a = std::arg(v);
    return a >= pi_l ? a - 2 * pi_l : a;
}

real phase_winding(const std::vector<cplx>& v)
{
    real total = 0;
    for (size_t i = 0; i < v.size(); ++i) total += std::arg(v[(i + 1) % v.size()] / v[i]);
    return total;
}

void write_field_csv(std::ostream& os, const FieldGrid& f)
{
    using spectral::fmt17l;
    os << "re_z,im_z,abs_u,arg_u\n";
    for (int j = 0; j < f.grid.ny; ++j)
        for (int i = 0; i < f.grid.nx; ++i) {
            size_t idx = static_cast<size_t>(j) * f.grid.nx + i;
            cplx z = f.grid.at(i, j);
            os << fmt17l(z.real()) << ',' << fmt17l(z.imag()) << ',';
            if (f.infinite[idx])
                os << "inf,nan\n";
            else
                os << fmt17l(std::abs(f.values[idx])) << ',' << fmt17l(phase(f.values[idx])) << '\n';
        }
}

namespace {
static_assert(std::endian::native == std::endian::little, "field I/O assumes a little-endian host");
template <class T>
void put(std::ostream& os, T v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get(std::istream& is, const std::string& path)
{
    T v;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) fail(ErrorKind::config, "field file truncated: " + path);
    return v;
}
}  // namespace

void write_field_binary(const std::string& path, const FieldGrid& f)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::config, "cannot open field file for writing: " + path);
    put<int64_t>(os, f.grid.nx);
    put<int64_t>(os, f.grid.ny);
    for (real b : {f.grid.x0, f.grid.x1, f.grid.y0, f.grid.y1}) put<double>(os, static_cast<double>(b));
    for (size_t idx = 0; idx < f.values.size(); ++idx) {
        if (f.infinite[idx]) {
            put<double>(os, std::numeric_limits<double>::infinity());
            put<double>(os, std::numeric_limits<double>::quiet_NaN());
        } else {
            put<double>(os, static_cast<double>(std::abs(f.values[idx])));
            put<double>(os, static_cast<double>(phase(f.values[idx])));
        }
    }
    if (!os) fail(ErrorKind::config, "field write failed: " + path);
}

FieldGrid read_field_binary(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::config, "cannot open field file: " + path);
    FieldGrid f;
    auto nx = get<int64_t>(is, path), ny = get<int64_t>(is, path);
    if (nx < 1 || ny < 1 || nx * ny > (int64_t(1) << 28)) fail(ErrorKind::config, "corrupt field header: " + path);
    f.grid.nx = static_cast<int>(nx);
    f.grid.ny = static_cast<int>(ny);
    f.grid.x0 = get<double>(is, path);
    f.grid.x1 = get<double>(is, path);
    f.grid.y0 = get<double>(is, path);
    f.grid.y1 = get<double>(is, path);
    f.values.resize(nx * ny);
    f.infinite.assign(nx * ny, 0);
    for (int64_t idx = 0; idx < nx * ny; ++idx) {
        double mod = get<double>(is, path), ph = get<double>(is, path);
        if (!std::isfinite(mod)) {
            f.infinite[idx] = 1;
            f.values[idx] = {std::numeric_limits<real>::infinity(), 0};
        } else {
            f.values[idx] = std::polar(static_cast<real>(mod), static_cast<real>(ph));
        }
    }
    return f;
}

void write_pole_csv(std::ostream& os, const RationalApproximant* r, const QuadraticApproximant* qa)
{
    using spectral::fmt17l;
    os << "re_z,im_z,re_residue,im_residue,kind\n";
    if (r)
        for (auto& P : r->poles)
            os << fmt17l(P.z.real()) << ',' << fmt17l(P.z.imag()) << ',' << fmt17l(P.residue_z.real()) << ','
               << fmt17l(P.residue_z.imag()) << ",pole\n";
    if (qa)
        for (cplx z : qa->branch_z) os << fmt17l(z.real()) << ',' << fmt17l(z.imag()) << ",0,0,branch\n";
}

}  // namespace nlh::continuation
