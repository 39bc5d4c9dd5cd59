// Acceptance run: one PASS/FAIL line per criterion with the measured values.
// Exit status is 0 when every criterion ran; with --strict it is 1 if any
// criterion failed. An optional path argument receives a copy of the report.

#include "nlh/asymptotics.hpp"
#include "nlh/ode.hpp"
#include "nlh/pade.hpp"
#include "nlh/spectral.hpp"
#include "nlh/tracker.hpp"
#include "nlh/weierstrass.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace nlh;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << "[miss: " << what << "] ";
        }
    }
};

std::string num(real v, int digits = 6)
{
    std::ostringstream os;
    os.precision(digits);
    os << static_cast<double>(v);
    return os.str();
}

using spectral::Cosine;
using spectral::FourierState;
using spectral::SolverOptions;
using spectral::SolveTrajectory;

real u_at(const FourierState& s, real x)
{
    const real v = spectral::evaluate(s, x);
    return s.rep == spectral::Representation::V ? 1 / v : v;
}

const FourierState* snapshot_at(const SolveTrajectory& tr, real t)
{
    for (const auto& s : tr.snapshots)
        if (std::abs(s.t - t) < 1e-12L) return &s;
    return nullptr;
}

// ---------------------------------------------------------------------------

void small_time_table(Outcome& o)
{
    struct Column {
        real alpha;
        real ls[5], asym[5];
    };
    const Column cols[] = {{2.0L, {4.04L, 3.45L, 3.13L, 2.93L, 2.79L}, {4.05L, 3.43L, 3.09L, 2.85L, 2.66L}},
                           {0.5L, {5.43L, 4.84L, 4.53L, 4.33L, 4.18L}, {5.43L, 4.82L, 4.47L, 4.23L, 4.04L}}};
    const real ts[5] = {0.02L, 0.04L, 0.06L, 0.08L, 0.10L};
    real worst_fit = 0, worst_formula = 0;
    for (const auto& c : cols) {
        SolverOptions opt;
        opt.atol = 0;
        opt.snapshot_times.assign(ts, ts + 5);
        const auto tr = spectral::advance(spectral::init_state(Cosine{c.alpha, 0}, 24), 0.1L, opt);
        asymptotics::AsymptoticQuery q;
        q.regime = asymptotics::Regime::small_time;
        q.alpha = c.alpha;
        for (int i = 0; i < 5; ++i) {
            const FourierState* s = snapshot_at(tr, ts[i]);
            o.require(s != nullptr, "snapshot");
            if (!s) continue;
            const real y = tracker::fit_decay(*s).y_star;
            q.t = ts[i];
            const real sig = asymptotics::sigma_estimate(q);
            worst_fit = std::max(worst_fit, std::abs(y - c.ls[i]));
            worst_formula = std::max(worst_formula, std::abs(sig - c.asym[i]));
            o.require(std::abs(y - c.ls[i]) <= 0.02L, "fit alpha " + num(c.alpha) + " t " + num(ts[i]) + " y* " + num(y));
            o.require(std::abs(sig - c.asym[i]) <= 0.005L,
                      "formula alpha " + num(c.alpha) + " t " + num(ts[i]) + " sigma " + num(sig));
        }
    }
    o.detail << "max |y* - table| " << num(worst_fit, 3) << " (tol 0.02), max |sigma - table| "
             << num(worst_formula, 3) << " (tol 0.005)";
}

void ode_singularities(Outcome& o)
{
    using namespace ode;
    struct Case {
        const char* name;
        SeriesIC ic;
        std::vector<cplx> path;
        real expected;
    };
    const Case cases[] = {
        {"exp a=1", series_ic_exponential(1, -5), {cplx(-5), cplx(3)}, 1.53767L},
        {"exp a=-1", series_ic_exponential(-1, -5), {cplx(-5), cplx(6)}, 4.53879L},
        {"log", series_ic_logarithmic(50), {cplx(50), cplx(-1)}, 0.05695L},
    };
    for (const auto& c : cases) {
        const auto sol = integrate_path(c.ic, c.path);
        const int i = first_real_singularity(sol);
        o.require(i >= 0, std::string(c.name) + ": no real singularity");
        if (i < 0) continue;
        const auto loc = locate_singularity(sol, static_cast<size_t>(i));
        const real x = loc.x.real();
        const real A = loc.leading.real(), B = loc.simple.real();
        o.require(std::abs(x - c.expected) <= 1e-4L, std::string(c.name) + " x* " + num(x, 8));
        o.require(std::abs(A - 6) <= 0.06L, std::string(c.name) + " leading " + num(A));
        o.require(std::abs(B - 1.2L) <= 0.06L, std::string(c.name) + " next " + num(B));
        o.detail << c.name << ": x* " << num(x, 7) << " A " << num(A, 7) << " B " << num(B, 5) << "; ";
    }
}

void machine_precision_ics(Outcome& o)
{
    auto rel = [](real a, real b) { return std::abs(a - b) / std::abs(b); };
    const auto e = ode::series_ic_exponential(1, -5);
    const real e0 = rel(e.phi.real(), 6.760698048065327e-3L), e1 = rel(e.dphi.real(), 6.783500281706220e-3L);
    o.require(e0 <= 1e-15L && e1 <= 1e-15L, "x = -5 pair");
    const auto l = ode::series_ic_logarithmic(50);
    const real l0 = rel(l.phi.real(), 2.359876891765835e-2L), l1 = rel(l.dphi.real(), -5.332816483593814e-4L);
    o.require(l0 <= 1e-15L && l1 <= 1e-15L, "x = 50 pair");
    o.detail << "x=-5 rel " << num(e0, 2) << ", " << num(e1, 2) << "; x=50 rel " << num(l0, 2) << ", " << num(l1, 2)
             << " (tol 1e-15)";
}

void blowup_time(Outcome& o)
{
    const real printed = 15.530458826185942L;
    real tc[2] = {0, 0};
    const int Ns[2] = {64, 128};
    for (int i = 0; i < 2; ++i) {
        const auto tr = spectral::advance(spectral::init_state(Cosine{0.5L, 0}, Ns[i]), 20, {});
        o.require(tr.blowup.has_value(), "no blow up at N = " + std::to_string(Ns[i]));
        if (tr.blowup) tc[i] = tr.blowup->t_c;
    }
    const real over = (16 - tc[1]) / tc[1];
    o.require(std::abs(tc[1] - tc[0]) < 1e-6L, "N = 64 and 128 disagree");
    o.require(std::abs(tc[1] - printed) <= 1e-3L, "t_c " + num(tc[1], 12));
    o.require(over > 0 && over < 0.05L, "4/eps^2 overestimate " + num(over));
    o.detail << "t_c " << num(tc[1], 14) << " (N 64: " << num(tc[0], 14) << "), |t_c - printed| "
             << num(std::abs(tc[1] - printed), 2) << ", 16 overestimates by " << num(100 * over, 3) << "%";
}

struct TrackedRun {
    SolveTrajectory traj;
    tracker::Track track;
};

TrackedRun tracked(real alpha, real dt)
{
    SolverOptions opt;
    opt.atol = 0;
    opt.snapshot_dt = dt;
    TrackedRun r{spectral::advance(spectral::init_state(Cosine{alpha, 0}, 32), 30, opt), {}};
    r.track = tracker::track(r.traj.snapshots);
    return r;
}

// shared by criteria 5 and 6
const TrackedRun& run_alpha2()
{
    static const TrackedRun r = tracked(2, 0.02L);
    return r;
}

void reversals(Outcome& o)
{
    const TrackedRun small = tracked(0.5L, 0.05L);
    const TrackedRun& large = run_alpha2();
    const auto& rs = small.track.reversal_times;
    const auto& rl = large.track.reversal_times;
    o.require(rs.size() == 2, "eps = 0.5 reversals " + std::to_string(rs.size()));
    o.require(rl.empty(), "alpha = 2 reversals " + std::to_string(rl.size()));
    o.detail << "eps = 0.5: " << rs.size() << " reversals at";
    for (real t : rs) o.detail << ' ' << num(t, 4);
    o.detail << " (t_c " << (small.traj.blowup ? num(small.traj.blowup->t_c, 8) : "none") << "); alpha = 2: "
             << rl.size() << " reversals";
}

void mu_estimates(Outcome& o)
{
    // intermediate times for alpha = 2 (t_c ~ 0.81): away from the small-time
    // simple-pole phase and from the final approach
    real lo = 1e9, hi = -1e9;
    int n = 0;
    for (const auto& e : run_alpha2().track.estimates) {
        if (!e.ok || e.t < 0.2L || e.t > 0.6L) continue;
        ++n;
        lo = std::min(lo, e.mu);
        hi = std::max(hi, e.mu);
        o.require(std::abs(e.mu - 2) <= 0.15L, "mu " + num(e.mu) + " at t " + num(e.t));
    }
    o.require(n >= 10, "too few fits in [0.2, 0.6]");
    o.detail << n << " fits on t in [0.2, 0.6], mu in [" << num(lo, 4) << ", " << num(hi, 4) << "]; ";

    real worst = 0;
    for (real mu : {-0.5L, 1.0L, 2.0L, 3.25L})
        for (real y : {0.05L, 0.7L, 4.1L}) {
            FourierState s;
            s.c.assign(65, cplx(0));
            for (int k = 1; k <= 64; ++k) s.c[k] = 2.5L * std::pow(real(k), mu - 1) * std::exp(-k * y);
            s.c[0] = s.c[1];
            const auto e = tracker::fit_decay(s);
            worst = std::max({worst, std::abs(e.mu - mu), std::abs(e.y_star - y)});
        }
    o.require(worst < 1e-8L, "synthetic recovery " + num(worst));
    o.detail << "synthetic max error " << num(worst, 2);
}

void weierstrass_checks(Outcome& o)
{
    using namespace weierstrass;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0, 1);
    const cplx w1 = real(2) * omega1(), w3 = real(2) * omega3();
    real worst = 0;
    int used = 0;
    for (int i = 0; used < 100; ++i) {
        const cplx z = real(u(rng) + (i % 2)) * w1 + real(u(rng)) * w3;
        const WpValue v = wp(z);
        if (v.infinite) continue;
        ++used;
        const cplx r = v.dp * v.dp - real(4) * v.p * v.p * v.p + real(1);
        worst = std::max(worst, std::abs(r) / (1 + std::pow(std::abs(v.p), real(3))));
    }
    const WpValue half = wp(cplx(omega1()));
    const real root_err = std::abs(half.p - std::cbrt(real(0.25L)));
    using mp50 = boost::multiprecision::cpp_bin_float_50;
    const mp50 g = boost::math::tgamma(mp50(1) / 3);
    const real ref = static_cast<real>(g * g * g / (4 * boost::math::constants::pi<mp50>()));
    const real w_err = std::abs(omega1() - ref);
    o.require(worst < 1e-10L, "residual");
    o.require(root_err < 1e-10L, "p(omega1)");
    o.require(w_err < 1e-12L, "omega1");
    o.detail << "residual " << num(worst, 2) << " over 100 points, |p(w1) - 4^{-1/3}| " << num(root_err, 2)
             << ", |w1 - ref| " << num(w_err, 2);
}

void lattice_proximity(Outcome& o)
{
    using namespace ode;
    using namespace weierstrass;
    struct Case {
        const char* name;
        bool log;
        real xl, xr, y0, y1, far;
        int columns;
        WeierstrassLattice printed;
    };
    const Case cases[] = {
        {"log", true, -8, 15, 0.1L, 10, 6, 47,
         WeierstrassLattice::from_argument_shift(0.2087L, 0.2524L, cplx(-0.5113L, 0.03149L))},
        {"exp", false, -5, 12, 0, 6.3L, 3, 69,
         WeierstrassLattice::from_argument_shift(0.28910L, 0.1066L, cplx(-0.603L, -0.2574L))},
    };
    for (const auto& c : cases) {
        const OdePathSolution lead =
            c.log ? integrate_path(series_ic_logarithmic(50),
                                   {cplx(50), cplx(0.15L), cplx(0.15L, -1), cplx(c.xl, -1), cplx(c.xl, c.y0)})
                  : integrate_path(series_ic_exponential(1, c.xl), {cplx(c.xl), cplx(c.xl, c.y0)});
        SweepGrid g;
        g.x_right = c.xr;
        g.y0 = c.y0;
        g.y1 = c.y1;
        const auto sw = sweep_columns(lead, g, c.columns);
        std::vector<cplx> far;
        for (const auto& s : sw.singularities)
            if (s.x.real() >= c.far) far.push_back(s.x);
        o.require(far.size() >= 20, std::string(c.name) + ": too few far-field singularities");
        if (far.empty()) continue;
        const auto given = lattice_compare(far, c.printed);
        const auto fit = fit_lattice(far, c.printed);
        o.require(fit.report.median_relative < 0.2L, std::string(c.name) + " fitted median");
        o.detail << c.name << ": " << far.size() << " singularities, fitted median " << num(fit.report.median_relative, 3)
                 << " (r " << num(std::abs(fit.lattice.alpha), 4) << ", theta " << num(std::arg(fit.lattice.alpha), 4)
                 << "), printed-constant median " << num(given.median_relative, 3) << "; ";
    }
    o.detail << "tol 0.2 of spacing";
}

void property_suites(Outcome& o)
{
    using namespace spectral;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(-1, 1);
    auto random_state = [&](int N, real decay) {
        FourierState s;
        s.c.resize(N + 1);
        for (int k = 0; k <= N; ++k) s.c[k] = cplx(d(rng), k ? d(rng) : 0) * std::exp(-decay * k);
        return s;
    };

    real mb = 0;
    for (int i = 0; i < 20; ++i) {
        const auto s = random_state(8 + 4 * i, 0.5L);
        for (auto conv : {Convolution::direct, Convolution::fft}) {
            const auto rhs = nlh_rhs(s, conv);
            cplx sum = 0;
            for (int k = -s.N(); k <= s.N(); ++k) sum += s.coeff(k) * s.coeff(-k);
            mb = std::max(mb, std::abs(rhs[0] - sum));
        }
    }
    o.require(mb < 1e-13L, "mean balance");

    real heat = 0;
    {
        const auto s = random_state(16, 0.1L);
        SolverOptions opt;
        opt.nonlinear = false;
        opt.auto_refine = false;
        opt.snapshot_dt = 0.05L;
        for (const auto& st : advance(s, 0.2L, opt).snapshots)
            for (int k = 0; k <= 16; ++k)
                heat = std::max(heat, std::abs(st.c[k] - s.c[k] * std::exp(-real(k) * k * st.t)));
    }
    o.require(heat < 1e-8L, "heat limit");

    real pe = 0;
    {
        using namespace continuation;
        // (1 + 0.3 w) / ((1 - w/1.5)(1 + w/2)) expanded to w^30
        const std::vector<cplx> num_c{1, 0.3L}, den{1, -(real(1) / 1.5L - real(1) / 2), -real(1) / 3};
        HalfSeries g;
        g.a.assign(31, 0);
        for (int k = 0; k <= 30; ++k) {
            cplx v = k < 2 ? num_c[k] : cplx(0);
            for (int j = 1; j <= 2 && j <= k; ++j) v -= den[j] * g.a[k - j];
            g.a[k] = v;
        }
        for (auto [m, n] : std::vector<std::pair<int, int>>{{1, 2}, {5, 5}, {10, 12}}) {
            const auto r = pade(g, m, n);
            if (r.den.size() != 3 || r.num.size() < 2) {
                pe = 1;
                continue;
            }
            for (int i = 0; i < 3; ++i) pe = std::max(pe, std::abs(r.den[i] - den[i]));
            for (size_t i = 0; i < r.num.size(); ++i)
                pe = std::max(pe, std::abs(r.num[i] - (i < 2 ? num_c[i] : cplx(0))));
        }
    }
    o.require(pe < 1e-12L, "Pade exactness");

    real qe = 0;
    {
        using namespace continuation;
        HalfSeries g;  // sqrt(1 - 4w)
        g.a.assign(13, 0);
        g.a[0] = 1;
        for (int k = 1; k <= 12; ++k) g.a[k] = g.a[k - 1] * (real(k) - real(1.5L)) / real(k) * real(4);
        const auto qa = quadratic_pade(g, 1, 0, 0);
        if (qa.degenerate || qa.branch_w.size() != 1) qe = 1;
        else {
            qe = std::max({std::abs(qa.p[0] / qa.r[0] + real(1)), std::abs(qa.p[1] / qa.r[0] - real(4)),
                           std::abs(qa.q[0] / qa.r[0]), std::abs(qa.branch_w[0] - cplx(0.25L))});
        }
    }
    o.require(qe < 1e-12L, "quadratic Pade exactness");

    real uv = 0;
    {
        const auto u = init_state(Cosine{1, 2}, 32);
        const auto back = switch_representation(switch_representation(u));
        for (int k = 0; k <= 32; ++k) uv = std::max(uv, std::abs(back.c[k] - u.c[k]));
    }
    o.require(uv < 1e-12L, "U-V round trip");

    real inv = 0;
    {
        FourierState s;
        s.c.assign(49, 0);
        for (int k = 1; k <= 48; ++k)
            s.c[k] = std::pow(real(k), real(0.7L)) * std::exp(-0.9L * k) * (1 + 0.05L * std::sin(real(k)));
        s.c[0] = s.c[1];
        const auto base = tracker::fit_decay(s, 6, 48);
        for (real shift : {0.1L, 1.0L, 3.0L}) {
            auto t = s;
            for (int k = 0; k <= 48; ++k) t.c[k] *= std::exp(-k * shift);
            const auto e = tracker::fit_decay(t, 6, 48);
            inv = std::max({inv, std::abs(e.y_star - base.y_star - shift), std::abs(e.mu - base.mu)});
        }
        for (real scale : {1e-6L, 0.3L, 1e8L}) {
            auto t = s;
            for (auto& c : t.c) c *= scale;
            const auto e = tracker::fit_decay(t, 6, 48);
            inv = std::max({inv, std::abs(e.y_star - base.y_star), std::abs(e.mu - base.mu),
                            std::abs(e.logC - base.logC - std::log(scale))});
        }
    }
    o.require(inv < 1e-10L, "tracker invariances");

    o.detail << "mean balance " << num(mb, 2) << ", heat " << num(heat, 2) << ", Pade " << num(pe, 2)
             << ", quadratic " << num(qe, 2) << ", U-V " << num(uv, 2) << ", tracker " << num(inv, 2);
}

void heat_death(Outcome& o)
{
    SolverOptions opt;
    opt.atol = 0;
    // plain DP5: in this slowly decaying run the Lawson steps are held at
    // ~1e-4 by the slaved high modes, DP5 only by its stability limit
    opt.scheme = spectral::Scheme::dp5;
    opt.heat_death_floor = 0;  // run the whole window
    for (int t = 20; t <= 200; t += 10) opt.snapshot_times.push_back(t);
    const auto tr = spectral::advance(spectral::init_state(Cosine{7.856L, -5}, 32), 200, opt);
    o.require(tr.termination == spectral::Termination::reached_t_end,
              "run ended early: " + spectral::to_string(tr.termination));

    real worst = 0, tu20 = 0, tu200 = 0, ylo = 1e300L, yhi = -1e300L;
    int n = 0;
    for (const auto& s : tr.snapshots) {
        if (s.t < 20 - 1e-9L) continue;
        const real tu = s.t * u_at(s, 0);
        if (n == 0) tu20 = tu;
        tu200 = tu;
        worst = std::max(worst, std::abs(tu + 1));
        const auto e = tracker::fit_decay(s);
        if (e.ok) {
            const real g = e.y_star - s.t - 2 * std::log(s.t);
            ylo = std::min(ylo, g);
            yhi = std::max(yhi, g);
        }
        ++n;
    }
    o.require(n >= 19, "snapshots in [20, 200]");
    o.require(worst <= 0.05L, "t u(0,t) + 1 up to " + num(worst, 3));
    o.require(yhi - ylo < 0.5L, "y* - t - 2 log t varies by " + num(yhi - ylo, 3));

    const auto bu = spectral::advance(spectral::init_state(Cosine{7.892L, -5}, 32), 30, [] {
        SolverOptions p;
        p.atol = 0;
        return p;
    }());
    o.require(bu.termination == spectral::Termination::blowup, "alpha = 7.892 did not blow up");
    o.detail << "t u(0,t): " << num(tu20, 4) << " at t = 20, " << num(tu200, 4) << " at t = 200 (target -1 +- 5%); "
             << "y* - t - 2 log t in [" << num(ylo, 4) << ", " << num(yhi, 4) << "]; mean c_0(200) "
             << num(tr.final_state().c[0].real(), 4) << "; alpha = 7.892: " << spectral::to_string(bu.termination);
    if (bu.blowup) o.detail << " at t_c " << num(bu.blowup->t_c, 8);
}

// x of the largest u on [0, 0.2]
real peak_location(const FourierState& s)
{
    real best = -1e300L, xb = 0;
    for (int j = 0; j <= 4000; ++j) {
        const real x = 0.2L * j / 4000;
        const real u = u_at(s, x);
        if (u > best) {
            best = u;
            xb = x;
        }
    }
    return xb;
}

void nongeneric_and_generic(Outcome& o)
{
    using spectral::TwoPeak;
    // Borderline two-peak data: for delta above the borderline the two peaks
    // blow up apart (maximum off x = 0), below it they merge first. The
    // printed delta = 0.4363 pi is a four-digit value, so bisect from it.
    auto run = [](real delta, real thr) {
        SolverOptions opt;
        opt.blowup_threshold = thr;
        return spectral::advance(spectral::init_state(TwoPeak{6, 50, delta}, 256), 5, opt);
    };
    real lo = 0.40L * pi_l, hi = 0.4363L * pi_l;
    const real hi_peak = peak_location(run(hi, 1e-10L).final_state());
    o.require(hi_peak > 0 && peak_location(run(lo, 1e-10L).final_state()) == 0, "bisection bracket");
    for (int i = 0; i < 28; ++i) {
        const real mid = (lo + hi) / 2;
        (peak_location(run(mid, 1e-10L).final_state()) > 0 ? hi : lo) = mid;
    }
    const real delta = (lo + hi) / 2;
    const auto tr = run(delta, 1e-13L);
    const FourierState& s = tr.final_state();
    const real a = std::pow(10.0L, -2.125L), b = std::pow(10.0L, -1.875L);
    const real slope = std::log(u_at(s, b) / u_at(s, a)) / std::log(b / a);
    o.require(std::abs(slope + 4) <= 0.2L, "two-peak slope " + num(slope, 4));
    o.detail << "two-peak borderline delta/pi " << num(delta / pi_l, 9) << " (printed 0.4363), t_c - t "
             << (tr.blowup ? num(tr.blowup->t_c - s.t, 2) : "?") << ", slope near 1e-2 " << num(slope, 4) << "; ";

    // generic: cosine alpha = 0.5 at the closest approach the run resolves
    const auto g = spectral::advance(spectral::init_state(Cosine{0.5L, 0}, 128), 20, {});
    o.require(g.blowup.has_value(), "generic run did not blow up");
    if (!g.blowup) return;
    const FourierState& f = g.final_state();
    const real tau = g.blowup->t_c - f.t;
    const auto q = asymptotics::preset("fig16");
    // non-flat window: well outside the flat core of width
    // sqrt(tau (C - 8 log tau)), and x small (the formula is an x -> 0 limit)
    const real width = std::sqrt(tau * (*q.C - 8 * std::log(tau)));
    const real x0 = 10 * width, x1 = 0.1L;
    o.require(x0 < x1, "flat core too wide: tau " + num(tau, 2));
    real worst = 0, rmin = 1e300L, rmax = 0;
    for (int j = 0; j <= 40 && x0 < x1; ++j) {
        const real x = x0 * std::pow(x1 / x0, real(j) / 40);
        const real r = u_at(f, x) / asymptotics::profile_estimate(q, x);
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        worst = std::max(worst, std::abs(r - 1));
    }
    o.require(worst <= 0.1L, "generic profile ratio off by " + num(worst, 3));
    o.detail << "generic: t_c - t " << num(tau, 2) << ", x in [" << num(x0, 2) << ", 0.1], u / profile in ["
             << num(rmin, 4) << ", " << num(rmax, 4) << "] (tol 10%)";
}

struct Criterion {
    int id;
    const char* title;
    double limit_s;  // runtime limit stated by the criterion, 0 = none
    std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv)
{
    bool strict = false;
    std::string report_path;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--strict") == 0) strict = true;
        else report_path = argv[i];
    }

    const std::vector<Criterion> criteria = {
        {1, "small-time table", 60, small_time_table},
        {2, "ODE singularities", 30, ode_singularities},
        {3, "machine-precision initial data", 0, machine_precision_ics},
        {4, "blow-up time", 0, blowup_time},
        {5, "reversal structure", 0, reversals},
        {6, "mu estimates", 0, mu_estimates},
        {7, "Weierstrass function", 0, weierstrass_checks},
        {8, "lattice proximity", 0, lattice_proximity},
        {9, "property suites", 0, property_suites},
        {10, "heat death", 0, heat_death},
        {11, "blow-up profiles", 0, nongeneric_and_generic},
    };

    std::ostringstream report;
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "[exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0) o.require(secs < c.limit_s, "runtime over " + num(c.limit_s) + " s");
        if (!o.pass) ++failed;
        std::ostringstream line;
        line << "criterion " << c.id << " " << (o.pass ? "PASS" : "FAIL") << " " << c.title << " ("
             << num(secs, 3) << " s): " << o.detail.str();
        std::cout << line.str() << std::endl;
        report << line.str() << '\n';
    }
    const std::string summary =
        std::to_string(criteria.size() - failed) + " of " + std::to_string(criteria.size()) + " criteria passed";
    std::cout << summary << std::endl;
    report << summary << '\n';
    if (!report_path.empty()) std::ofstream(report_path) << report.str();
    return strict && failed ? 1 : 0;
}
