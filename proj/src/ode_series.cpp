#include "nlh/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nlh::ode {

std::vector<real> exponential_coeffs(real a, int K)
{
    std::vector<real> c(K + 1, 0);
    if (K >= 1) c[1] = a;
    for (int k = 1; k < K; ++k) {
        real s = 0;
        for (int j = 1; j <= k; ++j) s += c[j] * c[k + 1 - j];
        c[k + 1] = s / (real(k) * (k + 1));
    }
    return c;
}

SeriesIC series_ic_exponential(real a, real x_a, real rel_tol, int max_terms)
{
    if (a == 0) fail(ErrorKind::domain, "series_ic_exponential: a must be nonzero");
    SeriesIC ic;
    ic.variant = SeriesVariant::exponential;
    ic.parameter = a;
    ic.x_a = x_a;

    // The recurrence is run incrementally; c_k e^{k x} is kept as a product so
    // that large k does not overflow the separate factors.
    const real e = std::exp(x_a);
    std::vector<real> c{0, a};
    real phi = 0, dphi = 0;
    for (int k = 1; k <= max_terms; ++k) {
        if (k >= 2) {
            real s = 0;
            for (int j = 1; j <= k - 1; ++j) s += c[j] * c[k - j];
            c.push_back(s / (real(k - 1) * k));
        }
        const real term = c[k] * std::pow(e, real(k));
        phi += term;
        dphi += k * term;
        // next term
        real s = 0;
        for (int j = 1; j <= k; ++j) s += c[j] * c[k + 1 - j];
        const real next = s / (real(k) * (k + 1)) * std::pow(e, real(k + 1));
        if (std::abs(next) < rel_tol * std::abs(phi)) {
            ic.phi = phi;
            ic.dphi = dphi;
            ic.terms_used = k;
            ic.first_omitted = std::abs(next);
            return ic;
        }
    }
    fail(ErrorKind::numerical, "series_ic_exponential: truncation target not reached within " +
                                   std::to_string(max_terms) + " terms (x_a too large?)");
}

std::vector<std::vector<real>> log_series_coeffs(real x0, int J)
{
    // phi = sum_j sum_m d[j][m] L^m x^{-j}, L = log x. Matching powers of
    // x^{-(n+1)} L^m in phi'' - phi' = phi^2 gives, for n >= 3,
    // (n - 2) d[n][m] = (m + 1) d[n][m+1] + S[n+1][m] - D2[n+1][m]
    // with S the part of phi^2 not involving d[1] and D2 the phi'' coefficient.
    std::vector<std::vector<real>> d(J + 1);
    for (int j = 1; j <= J; ++j) d[j].assign(j, 0);
    auto at = [&](int j, int m) -> real {
        if (j < 1 || j > J || m < 0 || m >= j) return 0;
        return d[j][m];
    };
    if (J >= 1) d[1][0] = 1;
    if (J >= 2) {
        d[2][1] = 2;
        d[2][0] = x0;
    }
    for (int n = 3; n <= J; ++n) {
        const int Jn = n + 1;
        for (int m = n - 1; m >= 0; --m) {
            real S = 0;
            for (int j1 = 2; j1 <= Jn - 2; ++j1) {
                const int j2 = Jn - j1;
                for (int m1 = std::max(0, m - (j2 - 1)); m1 <= std::min(m, j1 - 1); ++m1)
                    S += d[j1][m1] * d[j2][m - m1];
            }
            const real D2 = real(m + 2) * (m + 1) * at(Jn - 2, m + 2) - real(m + 1) * (2 * Jn - 3) * at(Jn - 2, m + 1) +
                            real(Jn - 2) * (Jn - 1) * at(Jn - 2, m);
            d[n][m] = ((m + 1) * at(n, m + 1) + S - D2) / (n - 2);
        }
    }
    return d;
}

SeriesIC series_ic_logarithmic(real x_a, real x0, real rel_tol, int max_groups)
{
    if (!(x_a > 1)) fail(ErrorKind::domain, "series_ic_logarithmic: x_a must be large and positive");
    SeriesIC ic;
    ic.variant = SeriesVariant::logarithmic;
    ic.parameter = x0;
    ic.x_a = x_a;

    const auto d = log_series_coeffs(x0, max_groups + 1);
    const real L = std::log(x_a);
    struct Group {
        real phi = 0, dphi = 0, max_term = 0;
        int terms = 0;
    };
    auto group = [&](int j) {
        Group g;
        const real xj = std::pow(x_a, real(-j));
        for (int m = j - 1; m >= 0; --m) {
            const real Lm = std::pow(L, real(m));
            const real t = d[j][m] * Lm * xj;
            g.phi += t;
            g.max_term = std::max(g.max_term, std::abs(t));
            const real dLm = m > 0 ? m * std::pow(L, real(m - 1)) : 0;
            g.dphi += d[j][m] * (dLm - j * Lm) * xj / x_a;
            ++g.terms;
        }
        return g;
    };

    std::vector<Group> groups;
    real phi = 0, dphi = 0;
    int terms = 0;
    for (int j = 1; j <= max_groups; ++j) {
        Group g = group(j);
        groups.push_back(g);
        if (j > 2 && std::abs(g.phi) < rel_tol * std::abs(phi) && std::abs(g.dphi) < rel_tol * std::abs(dphi)) {
            ic.phi = phi;
            ic.dphi = dphi;
            ic.terms_used = terms;
            ic.first_omitted = std::abs(g.phi);
            return ic;
        }
        phi += g.phi;
        dphi += g.dphi;
        terms += g.terms;
    }

    // Divergent tail before the target: truncate before the smallest group.
    size_t best = 2;
    for (size_t i = 2; i < groups.size(); ++i)
        if (std::abs(groups[i].phi) < std::abs(groups[best].phi)) best = i;
    phi = dphi = 0;
    terms = 0;
    for (size_t i = 0; i < best; ++i) {
        phi += groups[i].phi;
        dphi += groups[i].dphi;
        terms += groups[i].terms;
    }
    ic.phi = phi;
    ic.dphi = dphi;
    ic.terms_used = terms;
    ic.first_omitted = std::abs(groups[best].phi);
    ic.converged = false;
    std::ostringstream os;
    os << "divergent tail reached first; best achievable relative term "
       << static_cast<double>(ic.first_omitted / std::abs(phi));
    ic.note = os.str();
    return ic;
}

std::vector<cplx> taylor_coeffs(cplx phi0, cplx phi1, int K)
{
    if (K < 2) fail(ErrorKind::domain, "taylor_coeffs: K must be at least 2");
    std::vector<cplx> a(K + 1, cplx(0));
    a[0] = phi0;
    a[1] = phi1;
    for (int n = 0; n + 2 <= K; ++n) {
        cplx s = 0;
        for (int j = 0; j <= n; ++j) s += a[j] * a[n - j];
        a[n + 2] = (real(n + 1) * a[n + 1] + s) / (real(n + 1) * (n + 2));
    }
    return a;
}

}  // namespace nlh::ode
