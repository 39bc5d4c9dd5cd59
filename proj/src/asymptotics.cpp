#include "nlh/asymptotics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <ostream>
#include <sstream>

namespace nlh::asymptotics {

namespace {

struct Named {
    Regime r;
    const char* name;
};
constexpr Named names[] = {
    {Regime::small_time, "small_time"},
    {Regime::large_amp_leading, "large_amp_leading"},
    {Regime::large_amp_higher, "large_amp_higher"},
    {Regime::small_amp_t1, "small_amp_t1"},
    {Regime::small_amp_t2, "small_amp_t2"},
    {Regime::small_amp_t3, "small_amp_t3"},
    {Regime::small_amp_t4, "small_amp_t4"},
    {Regime::blowup_inner, "blowup_inner"},
    {Regime::blowup_profile, "blowup_profile"},
    {Regime::flat_data_blowup, "flat_data_blowup"},
    {Regime::heat_death, "heat_death"},
};

real need(const std::optional<real>& v, const char* what, Regime r)
{
    if (!v) fail(ErrorKind::config, "regime " + regime_name(r) + " needs " + what);
    return *v;
}

std::string at_point(real x)
{
    std::ostringstream os;
    os << static_cast<double>(x);
    return os.str();
}

// s for the fourth small-amplitude scale, given directly or through t_c - t.
real fourth_scale_s(const AsymptoticQuery& q)
{
    if (q.s) return *q.s;
    const real eps = need(q.eps, "eps (or s)", q.regime);
    const real t = need(q.t, "t (or s)", q.regime), tc = need(q.t_c, "t_c (or s)", q.regime);
    return (tc - t) * eps * eps * eps * std::exp(4 / (eps * eps));
}

real check_finite(real v, const std::string& what)
{
    if (!std::isfinite(v)) fail(ErrorKind::numerical, what + " is not finite");
    return v;
}

}  // namespace

std::string regime_name(Regime r)
{
    for (const auto& n : names)
        if (n.r == r) return n.name;
    return "?";
}

Regime regime_from_name(const std::string& s)
{
    for (const auto& n : names)
        if (s == n.name) return n.r;
    fail(ErrorKind::config, "unknown regime '" + s + "'");
}

std::vector<Regime> all_regimes()
{
    std::vector<Regime> v;
    for (const auto& n : names) v.push_back(n.r);
    return v;
}

AsymptoticQuery preset(const std::string& name)
{
    if (name != "fig16") fail(ErrorKind::config, "unknown preset '" + name + "'");
    AsymptoticQuery q;
    q.regime = Regime::blowup_profile;
    q.alpha = 0.5L;
    q.eps = 0.5L;
    q.C = 92000;
    q.beta1 = real(-3) / 32;
    q.t_c = 15.530458826185942L;
    return q;
}

std::string sigma_formula(Regime r)
{
    switch (r) {
    case Regime::small_time: return "log(2/(alpha t)) + 2 t log(1/t) - (zeta* + 1) t";
    case Regime::large_amp_leading: return "acosh(1/(alpha t))";
    case Regime::large_amp_higher:
        return "acosh(1/(alpha t)) + t sqrt(1 - a^2 t^2) (2 log alpha - (1 - 2 a^2 t^2)/(1 - a^2 t^2) - 2 log(alpha t) "
               "- 2 log(1 - a^2 t^2) - zeta*)";
    case Regime::small_amp_t1: return "2 t - log(sinh t) - log(eps/2) + zeta*";
    case Regime::small_amp_t2: return "t + 2 log(t_c - t) + 3 log(eps/2) + zeta*";
    case Regime::small_amp_t3: return "t + log(t_c - t) + 3 log(eps/2)";
    case Regime::small_amp_t4: return "acosh(s/16)";
    case Regime::heat_death: return "t + 2 log t + offset";
    default: return "";
    }
}

std::string profile_formula(Regime r)
{
    switch (r) {
    case Regime::small_time: return "alpha cos x + t (-alpha cos x + alpha^2 (1 + cos 2x)/2)";
    case Regime::large_amp_leading: return "alpha cos x / (1 - alpha t cos x)";
    case Regime::large_amp_higher: return "alpha U0 + U1, T = alpha t";
    case Regime::small_amp_t1: return "first small-amplitude scale, through eps^3";
    case Regime::small_amp_t2:
    case Regime::small_amp_t3:
        return "1/(t_c - t) + 16 e^{-t} cos x/(eps^3 (t_c - t)^2) + 128 e^{-4t}/(eps^6 (t_c - t)^2) I(t) cos 2x";
    case Regime::small_amp_t4: return "eps^3 e^{4/eps^2} / (s - 16 cos x)";
    case Regime::blowup_inner: return "1/(t_c - t + x^2/(C - 8 log(t_c - t)))";
    case Regime::blowup_profile: return "8/x^2 (2 log(1/x) + log log(1/x) + 4 log 2 + C/8 + 8 beta1)";
    case Regime::flat_data_blowup: return "flat data 1/(alpha - eps cos x) near blow up";
    case Regime::heat_death: return "-1/t + A e^{-t} cos x / t^2";
    }
    return "";
}

real small_amp_t1_zeta_limit(real zeta_tilde_star) { return zeta_tilde_star - std::log(real(2)); }

real sigma_estimate(const AsymptoticQuery& q)
{
    const Regime r = q.regime;
    switch (r) {
    case Regime::small_time: {
        const real a = need(q.alpha, "alpha", r), t = need(q.t, "t", r);
        if (!(t > 0) || !(a > 0)) fail(ErrorKind::domain, "small_time needs alpha > 0 and t > 0");
        const real z = q.zeta_star.value_or(zeta_star_log);
        return std::log(2 / (a * t)) + 2 * t * std::log(1 / t) - (z + 1) * t;
    }
    case Regime::large_amp_leading:
    case Regime::large_amp_higher: {
        const real a = need(q.alpha, "alpha", r), t = need(q.t, "t", r);
        const real at = a * t;
        if (!(at > 0) || at > 1) fail(ErrorKind::domain, "large-amplitude estimate needs 0 < alpha t <= 1");
        const real lead = std::acosh(1 / at);
        if (r == Regime::large_amp_leading) return lead;
        if (at == 1) fail(ErrorKind::domain, "large_amp_higher is singular at alpha t = 1");
        const real z = q.zeta_star.value_or(zeta_star_log);
        const real w = 1 - at * at;
        return lead + t * std::sqrt(w) *
                          (2 * std::log(a) - (1 - 2 * at * at) / w - 2 * std::log(at) - 2 * std::log(w) - z);
    }
    case Regime::small_amp_t1: {
        const real e = need(q.eps, "eps", r), t = need(q.t, "t", r);
        if (!(t > 0) || !(e > 0)) fail(ErrorKind::domain, "small_amp_t1 needs eps > 0 and t > 0");
        const real z = q.zeta_star ? *q.zeta_star : small_amp_t1_zeta_limit(q.zeta_tilde_star.value_or(zeta_star_exp));
        return 2 * t - std::log(std::sinh(t)) - std::log(e / 2) + z;
    }
    case Regime::small_amp_t2:
    case Regime::small_amp_t3: {
        const real e = need(q.eps, "eps", r), t = need(q.t, "t", r), tc = need(q.t_c, "t_c", r);
        if (!(tc > t) || !(e > 0)) fail(ErrorKind::domain, "small-amplitude estimate needs t < t_c and eps > 0");
        if (r == Regime::small_amp_t3 && !q.zeta_star)
            return t + std::log(tc - t) + 3 * std::log(e / 2);
        const real z = q.zeta_star.value_or(zeta_star_exp);
        return t + 2 * std::log(tc - t) + 3 * std::log(e / 2) + z;
    }
    case Regime::small_amp_t4: {
        const real s = fourth_scale_s(q);
        if (s < 16) fail(ErrorKind::domain, "small_amp_t4: s = " + at_point(s) + " < 16, past blow up");
        return std::acosh(s / 16);
    }
    case Regime::heat_death: {
        const real t = need(q.t, "t", r);
        if (!(t > 0)) fail(ErrorKind::domain, "heat_death needs t > 0");
        return t + 2 * std::log(t) + q.heat_offset.value_or(0);
    }
    default: fail(ErrorKind::config, "no singularity-height formula for regime " + regime_name(r));
    }
}

real cos2x_integral_scaled(real t, real t_c)
{
    if (!(t_c > t)) fail(ErrorKind::domain, "cos2x integral needs t < t_c");
    const real D = t_c - t;
    // e^{-2t} int_{-inf}^t e^{2s}/(t_c - s)^2 ds = int_0^inf e^{-2w}/(D + w)^2 dw
    auto f = [D](real w) { return std::exp(-2 * w) / ((D + w) * (D + w)); };
    real err = 0;
    const real v = boost::math::quadrature::gauss_kronrod<real, 61>::integrate(
        f, real(0), std::numeric_limits<real>::infinity(), 15, real(1e-14L), &err);
    if (err > 1e-10L * std::max(real(1), std::abs(v)))
        fail(ErrorKind::numerical, "cos2x integral: quadrature error estimate " + at_point(err));
    return v;
}

real flat_C1(real alpha) { return std::exp(-2 * alpha) * std::log(alpha); }

real flat_C2(real alpha)
{
    if (!(alpha > 0)) fail(ErrorKind::domain, "C2 needs alpha > 0");
    // with w = alpha - s: e^{-2 alpha} int_0^alpha expm1(-2w)/w dw
    auto f = [](real w) { return w == 0 ? real(-2) : std::expm1(-2 * w) / w; };
    real err = 0;
    const real v =
        boost::math::quadrature::gauss_kronrod<real, 61>::integrate(f, real(0), alpha, 15, real(1e-14L), &err);
    if (err > 1e-10L * std::max(real(1), std::abs(v)))
        fail(ErrorKind::numerical, "C2: quadrature error estimate " + at_point(err));
    return std::exp(-2 * alpha) * v;
}

real profile_estimate(const AsymptoticQuery& q, real x)
{
    const Regime r = q.regime;
    const real cx = std::cos(x);
    switch (r) {
    case Regime::small_time: {
        const real a = need(q.alpha, "alpha", r), t = need(q.t, "t", r);
        return a * cx + t * (-a * cx + a * a * (1 + std::cos(2 * x)) / 2);
    }
    case Regime::large_amp_leading:
    case Regime::large_amp_higher: {
        const real a = need(q.alpha, "alpha", r), t = need(q.t, "t", r);
        const real T = a * t;
        const real den = 1 - T * cx;
        if (!(den > 0)) fail(ErrorKind::domain, "large-amplitude profile: 1 - alpha t cos x <= 0 at x = " + at_point(x));
        const real U0 = cx / den;
        if (r == Regime::large_amp_leading) return a * U0;
        // U1 = -[cos x (1 + 2 tan^2 x) T + 2 tan^2 x log(1 - T cos x)] / (1 - T cos x)^2;
        // near cos x = 0 the two tan^2 parts cancel, so the bracket is summed as
        // T cos x - 2 sin^2 x sum_{n>=2} T^n cos^{n-2} x / n there.
        const real s2 = std::sin(x) * std::sin(x);
        real bracket;
        if (std::abs(T * cx) < 0.25L) {
            real sum = 0, p = T * T;
            for (int n = 2; n < 200; ++n, p *= T * cx) {
                const real term = p / n;
                sum += term;
                if (std::abs(term) < 1e-21L * std::abs(sum)) break;
            }
            bracket = T * cx - 2 * s2 * sum;
        } else {
            const real tan2 = s2 / (cx * cx);
            bracket = cx * (1 + 2 * tan2) * T + 2 * tan2 * std::log(den);
        }
        return a * U0 - bracket / (den * den);
    }
    case Regime::small_amp_t1: {
        const real e = need(q.eps, "eps", r), t = need(q.t, "t", r);
        const real e1 = std::exp(-t), e2 = std::exp(-2 * t), e4 = std::exp(-4 * t), e3 = std::exp(-3 * t),
                   e6 = std::exp(-6 * t);
        return e * e1 * cx + e * e / 4 * (1 - e2 + (e2 - e4) * std::cos(2 * x)) +
               e * e * e / 48 *
                   ((24 * t + 6 * e2 + 3 * e4 - 9) * e1 * cx + (2 - 3 * e2 + e6) * e3 * std::cos(3 * x));
    }
    case Regime::small_amp_t2:
    case Regime::small_amp_t3: {
        const real e = need(q.eps, "eps", r), t = need(q.t, "t", r), tc = need(q.t_c, "t_c", r);
        if (!(tc > t)) fail(ErrorKind::domain, "small-amplitude profile needs t < t_c");
        const real D = tc - t, e3 = e * e * e;
        const real I = cos2x_integral_scaled(t, tc);
        return 1 / D + 16 * std::exp(-t) * cx / (e3 * D * D) +
               128 * std::exp(-2 * t) * I / (e3 * e3 * D * D) * std::cos(2 * x);
    }
    case Regime::small_amp_t4: {
        const real e = need(q.eps, "eps", r);
        const real s = fourth_scale_s(q);
        const real den = s - 16 * cx;
        if (!(den > 0)) fail(ErrorKind::domain, "small_amp_t4: s - 16 cos x <= 0 at x = " + at_point(x));
        return check_finite(e * e * e * std::exp(4 / (e * e)) / den, "small_amp_t4 profile");
    }
    case Regime::blowup_inner: {
        const real C = need(q.C, "C", r), t = need(q.t, "t", r), tc = need(q.t_c, "t_c", r);
        if (!(tc > t)) fail(ErrorKind::domain, "blowup_inner needs t < t_c");
        const real D = tc - t;
        const real w = C - 8 * std::log(D);
        if (!(w > 0)) fail(ErrorKind::domain, "blowup_inner: C - 8 log(t_c - t) <= 0");
        return 1 / (D + x * x / w);
    }
    case Regime::blowup_profile: {
        const real C = need(q.C, "C", r), b1 = need(q.beta1, "beta1", r);
        const real ax = std::abs(x);
        if (!(ax > 0) || !(ax < 1)) fail(ErrorKind::domain, "blowup_profile needs 0 < |x| < 1, got " + at_point(x));
        const real L = std::log(1 / ax);
        return 8 / (ax * ax) * (2 * L + std::log(L) + 4 * std::log(real(2)) + C / 8 + 8 * b1);
    }
    case Regime::flat_data_blowup: {
        const real a = need(q.alpha, "alpha", r), e = need(q.eps, "eps", r);
        const real tc = need(q.t_c, "t_c", r);
        const real t = q.t.value_or(tc);
        if (t > tc) fail(ErrorKind::domain, "flat_data_blowup needs t <= t_c");
        const real ea = std::exp(-a), e2a = std::exp(-2 * a);
        const real sh = std::sin(x / 2), sh2 = sh * sh, sx2 = std::sin(x) * std::sin(x);
        const real arg = (tc - t) / e + 2 * ea * sh2;
        if (!(arg > 0)) fail(ErrorKind::domain, "flat_data_blowup: log argument vanishes at x = " + at_point(x));
        const real den = tc - t + 2 * e * ea * sh2 + 2 * e * e * std::log(e) * e2a * sx2 + e * (t - tc) * ea * cx +
                         2 * e * e * sx2 * (e2a * std::log(arg) + flat_C1(a) + flat_C2(a));
        if (den == 0) fail(ErrorKind::domain, "flat_data_blowup: denominator vanishes at x = " + at_point(x));
        return 1 / den;
    }
    case Regime::heat_death: {
        const real t = need(q.t, "t", r);
        if (!(t > 0)) fail(ErrorKind::domain, "heat_death needs t > 0");
        return -1 / t + q.heat_A.value_or(0) * std::exp(-t) * cx / (t * t);
    }
    }
    fail(ErrorKind::config, "unhandled regime");
}

LocalExpansion local_expansion(real s1, real s2, cplx zeta, cplx B, std::optional<real> stdot)
{
    if (zeta == cplx(0)) fail(ErrorKind::domain, "local_expansion needs zeta != 0");
    const cplx I(0, 1);
    const real s3 = stdot.value_or(s2);
    LocalExpansion e;
    e.p1 = I * (6 * s1 / 5);
    e.p0 = -s1 * s1 / 50;
    e.a = -I * (std::pow(s1, 3) / 250 + s2 / 10);
    e.b = s1 * (7 * std::pow(s1, 3) + 190 * s2) / 5000;
    e.c = I * (79 * std::pow(s1, 5) / 75000 + 229 * s1 * s1 * s2 / 7500 + s3 / 60);
    e.d = 18 * std::pow(s1, 6) / 21875 + 108 * std::pow(s1, 3) * s2 / 4375 + 16 * s1 * s3 / 875 + 6 * s2 * s2 / 875;
    const cplx z2 = zeta * zeta, z4 = z2 * z2;
    e.u = real(-6) / z2 + e.p1 / zeta + e.p0 + e.a * zeta + e.b * z2 + e.c * z2 * zeta + e.d * z4 * std::log(zeta) +
          B * z4;
    return e;
}

Height height_estimate(real eps, real t, real t_c)
{
    if (!(eps > 0)) fail(ErrorKind::domain, "height_estimate needs eps > 0");
    if (!(t < t_c - 1)) fail(ErrorKind::domain, "height_estimate needs t < t_c - 1");
    Height h;
    const real e3 = eps * eps * eps;
    h.h = 32 * std::exp(-t) / (e3 * (t_c - t) * (t_c - t));
    h.t_min = t_c - 2;
    h.h_min = 8 * std::exp(real(2)) * std::exp(-t_c) / e3;
    return h;
}

TwoModeResult two_mode_flow(real alpha0, real beta0, real t_end, real rtol)
{
    namespace ode = boost::numeric::odeint;
    using State = std::array<real, 2>;  // beta, alpha
    auto rhs = [](const State& y, State& dy, real) {
        dy[0] = y[0] * y[0] + y[1] * y[1] / 2;
        dy[1] = (2 * y[0] - 1) * y[1];
    };
    auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<State, real>>(rtol * 1e-3L, rtol);
    TwoModeResult out;
    State y{beta0, alpha0};
    real t = 0, dt = 1e-3L;
    out.trajectory.push_back({t, y[0], y[1]});
    const real big = 1e12L;
    int rejects = 0;
    while (t < t_end) {
        if (t + dt > t_end) dt = t_end - t;
        if (stepper.try_step(rhs, y, t, dt) == ode::fail) {
            if (++rejects > 10000) fail(ErrorKind::numerical, "two_mode_flow: step size collapse");
            continue;
        }
        rejects = 0;
        out.trajectory.push_back({t, y[0], y[1]});
        if (y[0] > big) {
            // beta ~ 1/(t_b - t) from here on
            out.outcome = TwoModeOutcome::blow_up;
            out.blowup_time = t + 1 / y[0];
            return out;
        }
        if (y[0] < 0 && y[1] * y[1] / 4 < 1e-8L * std::abs(y[0])) {
            out.outcome = TwoModeOutcome::decay;
            return out;
        }
    }
    if (y[0] > 0) {
        out.outcome = TwoModeOutcome::blow_up;  // beta' >= beta^2 from here: finite-time blow up
        out.blowup_time = std::numeric_limits<real>::quiet_NaN();
    }
    return out;
}

std::string outcome_name(TwoModeOutcome o)
{
    switch (o) {
    case TwoModeOutcome::blow_up: return "blow_up";
    case TwoModeOutcome::decay: return "decay";
    default: return "undecided";
    }
}

real nongeneric_profile(real A, real x)
{
    if (!(A > 0) || x == 0) fail(ErrorKind::domain, "nongeneric_profile needs A > 0 and x != 0");
    return 12 / (A * std::pow(x, 4));
}

real nongeneric_self_similar(real A, real zeta) { return 1 / (1 + A * std::pow(zeta, 4) / 12); }

real beta1_from_alpha1(real alpha1) { return real(-3) / 32 - alpha1 / 2; }

void write_csv(std::ostream& os, const AsymptoticQuery& q, const std::string& formula, const std::string& abscissa,
               const std::vector<Sample>& rows)
{
    os << "# regime=" << regime_name(q.regime) << " formula=\"" << formula << "\"";
    auto put = [&](const char* k, const std::optional<real>& v) {
        if (v) os << ' ' << k << '=' << fmt17(static_cast<double>(*v));
    };
    put("alpha", q.alpha);
    put("beta", q.beta);
    put("eps", q.eps);
    put("t", q.t);
    put("t_c", q.t_c);
    put("s", q.s);
    put("C", q.C);
    put("beta1", q.beta1);
    put("zeta_star", q.zeta_star);
    put("zeta_tilde_star", q.zeta_tilde_star);
    put("heat_A", q.heat_A);
    put("heat_offset", q.heat_offset);
    os << '\n' << abscissa << ",estimate\n";
    for (const auto& r : rows)
        os << fmt17(static_cast<double>(r.at)) << ',' << fmt17(static_cast<double>(r.value)) << '\n';
}

}  // namespace nlh::asymptotics
