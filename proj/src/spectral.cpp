#include "nlh/spectral.hpp"

#include "nlh/fft.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace nlh::spectral {

namespace {

constexpr real ld_eps = std::numeric_limits<real>::epsilon();

int eval_grid_size(int N) { return fft_friendly_size(4 * (N + 1)); }

bool use_direct(Convolution conv, int N, int direct_max_N)
{
    if (conv == Convolution::direct) return true;
    if (conv == Convolution::fft) return false;
    return N <= direct_max_N;
}

// Exact truncated square: (c*c)_k = sum_{j=k-N}^{N} c_j c_{k-j}, k = 0..N.
void direct_square(const std::vector<cplx>& c, std::vector<cplx>& out)
{
    const int N = static_cast<int>(c.size()) - 1;
    std::vector<cplx> f(2 * N + 1);
    for (int k = 0; k <= N; ++k) {
        f[N + k] = c[k];
        f[N - k] = std::conj(c[k]);
    }
    out.assign(N + 1, cplx(0));
    for (int k = 0; k <= N; ++k) {
        real re = 0, im = 0;
        for (int j = k - N; j <= N; ++j) {
            const cplx& a = f[N + j];
            const cplx& b = f[N + k - j];
            re += a.real() * b.real() - a.imag() * b.imag();
            im += a.real() * b.imag() + a.imag() * b.real();
        }
        out[k] = {re, im};
    }
    out[0] = {out[0].real(), 0};
}

// Nonlinear part of the right-hand side in either representation.
class Nonlinear {
public:
    Nonlinear(Representation rep, int N, Convolution conv, int direct_max_N)
        : rep_(rep), N_(N), direct_(rep == Representation::U && use_direct(conv, N, direct_max_N))
    {
        if (!direct_) {
            int M = rep == Representation::U ? fft_friendly_size(4 * N + 2) : eval_grid_size(N);
            fft_ = std::make_unique<RealFft>(M);
        }
    }

    bool direct() const { return direct_; }

    // Returns false when v is not strictly positive on the grid (V form).
    bool operator()(const std::vector<cplx>& y, std::vector<cplx>& out)
    {
        out.resize(N_ + 1);
        if (rep_ == Representation::U) {
            if (direct_) {
                direct_square(y, out);
                return true;
            }
            fft_->to_grid(y, g_);
            for (auto& v : g_) v *= v;
            fft_->from_grid(g_, out);
            return true;
        }
        fft_->to_grid(y, g_);
        dy_.resize(N_ + 1);
        for (int k = 0; k <= N_; ++k) dy_[k] = cplx(-k * y[k].imag(), k * y[k].real());
        fft_->to_grid(dy_, gx_);
        for (size_t j = 0; j < g_.size(); ++j) {
            if (!(g_[j] > 0)) return false;
            g_[j] = -2 * gx_[j] * gx_[j] / g_[j] - 1;
        }
        fft_->from_grid(g_, out);
        return true;
    }

private:
    Representation rep_;
    int N_;
    bool direct_;
    std::unique_ptr<RealFft> fft_;
    std::vector<real> g_, gx_;
    std::vector<cplx> dy_;
};

std::pair<real, real> grid_extrema(const std::vector<cplx>& c, RealFft& fft)
{
    std::vector<real> g;
    fft.to_grid(c, g);
    auto [lo, hi] = std::minmax_element(g.begin(), g.end());
    return {*lo, *hi};
}

// Dormand-Prince 5(4) tableau.
constexpr int S = 7;
const real dp_c[S] = {0, 0.2L, 0.3L, 0.8L, 8.0L / 9, 1, 1};
const real dp_a[S][S] = {
    {0},
    {0.2L},
    {3.0L / 40, 9.0L / 40},
    {44.0L / 45, -56.0L / 15, 32.0L / 9},
    {19372.0L / 6561, -25360.0L / 2187, 64448.0L / 6561, -212.0L / 729},
    {9017.0L / 3168, -355.0L / 33, 46732.0L / 5247, 49.0L / 176, -5103.0L / 18656},
    {35.0L / 384, 0, 500.0L / 1113, 125.0L / 192, -2187.0L / 6784, 11.0L / 84},
};
const real dp_e[S] = {71.0L / 57600, 0, -71.0L / 16695, 71.0L / 1920, -17253.0L / 339200, 22.0L / 525, -1.0L / 40};

class Integrator {
public:
    Integrator(const FourierState& s, const SolverOptions& opt) : opt_(opt), y_(s.c), rep_(s.rep), t_(s.t), floor_(s.noise_floor)
    {
        rebuild();
    }

    int N() const { return static_cast<int>(y_.size()) - 1; }
    real t() const { return t_; }
    Representation rep() const { return rep_; }
    long rhs_evals() const { return evals_; }
    bool direct() const { return nl_->direct(); }

    FourierState state() const
    {
        FourierState s;
        s.t = t_;
        s.rep = rep_;
        s.c = y_;
        s.noise_floor = floor_;
        return s;
    }

    void rebuild()
    {
        nl_ = std::make_unique<Nonlinear>(rep_, N(), opt_.convolution, opt_.direct_max_N);
        eval_fft_ = std::make_unique<RealFft>(eval_grid_size(N()));
        if (!nl_->direct()) floor_ = std::max(floor_, ld_eps);
        k_valid_ = eval(y_, k_);
    }

    bool fsal_valid() const { return k_valid_; }

    void set(const FourierState& s)
    {
        y_ = s.c;
        rep_ = s.rep;
        floor_ = s.noise_floor;
        rebuild();
    }

    std::pair<real, real> extrema() { return grid_extrema(y_, *eval_fft_); }

    // One attempted step of size h. Returns error norm (inf when the stage
    // evaluation failed); on success the candidate is kept for accept().
    real attempt(real h)
    {
        const int n = N() + 1;
        const bool lawson = opt_.scheme == Scheme::lawson_dp5;
        decay_cache_.clear();
        decay_cache_.reserve(64);  // references into the cache must stay valid
        K_[0] = k_;
        std::vector<cplx> stage(n);
        std::vector<const std::vector<real>*> dec(S);
        for (int i = 1; i < S; ++i) {
            if (lawson)
                for (int j = 0; j < i; ++j) dec[j] = &decay((dp_c[i] - dp_c[j]) * h);
            const std::vector<real>* d0 = lawson ? &decay(dp_c[i] * h) : nullptr;
            for (int k = 0; k < n; ++k) {
                cplx acc = y_[k];
                if (lawson) acc *= (*d0)[k];
                cplx sum = 0;
                for (int j = 0; j < i; ++j) {
                    if (dp_a[i][j] == 0) continue;
                    real f = dp_a[i][j];
                    if (lawson) f *= (*dec[j])[k];
                    sum += f * K_[j][k];
                }
                stage[k] = acc + h * sum;
            }
            stage[0] = {stage[0].real(), 0};
            if (!eval(stage, K_[i])) return std::numeric_limits<real>::infinity();
        }
        ynew_ = stage;  // last stage is the solution (FSAL)
        if (lawson)
            for (int j = 0; j < S; ++j) dec[j] = &decay((1 - dp_c[j]) * h);
        real sq = 0;
        int cnt = 0;
        real ymax = 0;
        for (int k = 0; k < n; ++k) ymax = std::max(ymax, std::abs(ynew_[k]));
        const real guard = nl_->direct() ? 0 : 100 * floor_ * ymax;
        for (int k = 0; k < n; ++k) {
            cplx e = 0;
            for (int j = 0; j < S; ++j) {
                if (dp_e[j] == 0) continue;
                real f = dp_e[j];
                if (lawson) f *= (*dec[j])[k];
                e += f * K_[j][k];
            }
            e *= h;
            // a mode born during this step has no scale yet; it is controlled from the next step on
            if (y_[k] == cplx(0) && opt_.atol == 0) continue;
            real sc = opt_.atol + opt_.rtol * std::max(std::abs(y_[k]), std::abs(ynew_[k])) + guard;
            real ae = std::abs(e);
            if (sc > 0) {  // components still exactly zero are not controlled
                real r = ae / sc;
                sq += r * r;
                ++cnt;
            }
        }
        real err = cnt ? std::sqrt(sq / cnt) : 0;
        if (!std::isfinite(err)) return std::numeric_limits<real>::infinity();
        return err;
    }

    void accept(real h)
    {
        y_ = ynew_;
        k_ = K_[S - 1];
        t_ += h;
    }

    void set_time(real t) { t_ = t; }

private:
    // Table of e^{-k^2 tau}, tau >= 0 for every pair used by the tableau.
    const std::vector<real>& decay(real tau)
    {
        for (const auto& [key, v] : decay_cache_)
            if (key == tau) return v;
        std::vector<real> v(y_.size());
        for (size_t k = 0; k < v.size(); ++k) v[k] = std::exp(-static_cast<real>(k) * k * tau);
        decay_cache_.emplace_back(tau, std::move(v));
        return decay_cache_.back().second;
    }

    bool eval(const std::vector<cplx>& y, std::vector<cplx>& out)
    {
        ++evals_;
        if (!opt_.nonlinear) {
            out.assign(y.size(), cplx(0));
            if (opt_.scheme == Scheme::dp5)
                for (size_t k = 0; k < y.size(); ++k) out[k] = -static_cast<real>(k * k) * y[k];
            return true;
        }
        if (!(*nl_)(y, out)) return false;
        if (opt_.scheme == Scheme::dp5)
            for (size_t k = 0; k < y.size(); ++k) out[k] -= static_cast<real>(k * k) * y[k];
        return true;
    }

    const SolverOptions& opt_;
    std::vector<cplx> y_, ynew_, k_;
    std::vector<cplx> K_[S];
    Representation rep_;
    real t_;
    real floor_;
    bool k_valid_ = false;
    long evals_ = 0;
    std::unique_ptr<Nonlinear> nl_;
    std::unique_ptr<RealFft> eval_fft_;
    std::vector<std::pair<real, std::vector<real>>> decay_cache_;
};

std::vector<real> snapshot_schedule(real t0, real t_end, const SolverOptions& opt)
{
    std::vector<real> ts;
    for (real t : opt.snapshot_times)
        if (t > t0 && t < t_end) ts.push_back(t);
    if (opt.snapshot_dt > 0) {
        for (long i = 1;; ++i) {
            real t = t0 + i * opt.snapshot_dt;
            // a grid time within rounding of t_end is t_end itself
            if (t >= t_end - 1e-9L * opt.snapshot_dt) break;
            ts.push_back(t);
        }
    }
    ts.push_back(t_end);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

std::optional<BlowupBracket> try_blowup(const SolveTrajectory& traj)
{
    try {
        return detect_blowup(traj);
    } catch (const Error&) {
        return std::nullopt;
    }
}

}  // namespace

cplx FourierState::coeff(int k) const
{
    if (k < -N() || k > N()) return 0;
    return k >= 0 ? c[k] : std::conj(c[-k]);
}

real FourierState::max_abs() const
{
    real m = 0;
    for (const auto& v : c) m = std::max(m, std::abs(v));
    return m;
}

real FourierState::tail_ratio() const
{
    const real m = max_abs();
    if (m == 0) return 0;
    const int n = N();
    real tail = 0;
    for (int k = n - std::max(1, n / 8) + 1; k <= n; ++k) tail = std::max(tail, std::abs(c[k]));
    return tail / m;
}

std::string to_string(Termination t)
{
    switch (t) {
    case Termination::reached_t_end: return "reached_t_end";
    case Termination::blowup: return "blowup";
    case Termination::heat_death: return "heat_death";
    case Termination::under_resolved: return "under_resolved";
    }
    return "?";
}

std::string to_string(Representation r) { return r == Representation::U ? "U" : "V"; }

FourierState init_state(const InitialDataSpec& spec, int N)
{
    if (N < 4) fail(ErrorKind::domain, "init_state: N must be at least 4");
    FourierState s;
    s.c.assign(N + 1, cplx(0));

    if (auto* cs = std::get_if<Cosine>(&spec)) {
        s.c[0] = cs->beta;
        s.c[1] = cs->alpha / 2;
        s.noise_floor = std::numeric_limits<real>::min();
        return s;
    }
    if (auto* sm = std::get_if<Samples>(&spec)) {
        const int M = static_cast<int>(sm->values.size());
        if (M % 2 || M < 2 * N + 2)
            fail(ErrorKind::domain, "init_state: samples must have even length >= 2N+2");
        RealFft fft(M);
        fft.from_grid(sm->values, s.c);
        // samples sit at -pi + 2 pi j/M: shift phase by (-1)^k
        for (int k = 1; k <= N; k += 2) s.c[k] = -s.c[k];
        return s;
    }

    const int M = fft_friendly_size(std::max(8 * (N + 1), 256));
    std::vector<real> g(M);
    if (auto* fl = std::get_if<Flat>(&spec)) {
        if (!(fl->eps > 0 && fl->eps < fl->alpha))
            fail(ErrorKind::domain, "init_state: flat data requires 0 < eps < alpha");
        for (int j = 0; j < M; ++j) g[j] = 1 / (fl->alpha - fl->eps * std::cos(2 * pi_l * j / M));
    } else {
        const auto& tp = std::get<TwoPeak>(spec);
        for (int j = 0; j < M; ++j) {
            real x = 2 * pi_l * j / M;
            g[j] = tp.alpha * (std::exp(tp.mu * std::cos(x + tp.delta) - tp.mu) +
                               std::exp(tp.mu * std::cos(x - tp.delta) - tp.mu));
        }
    }
    RealFft fft(M);
    fft.from_grid(g, s.c);
    for (auto& v : s.c) v = {v.real(), 0};  // even data
    return s;
}

std::vector<cplx> nlh_rhs(const FourierState& s, Convolution conv)
{
    if (s.rep != Representation::U) fail(ErrorKind::domain, "nlh_rhs: state is not in U form");
    Nonlinear nl(Representation::U, s.N(), conv, 128);
    std::vector<cplx> out;
    nl(s.c, out);
    for (int k = 0; k <= s.N(); ++k) out[k] -= static_cast<real>(k) * k * s.c[k];
    return out;
}

std::vector<cplx> reciprocal_rhs(const FourierState& s)
{
    if (s.rep != Representation::V) fail(ErrorKind::domain, "reciprocal_rhs: state is not in V form");
    Nonlinear nl(Representation::V, s.N(), Convolution::fft, 0);
    std::vector<cplx> out;
    if (!nl(s.c, out)) fail(ErrorKind::numerical, "reciprocal_rhs: v vanishes on the grid");
    for (int k = 0; k <= s.N(); ++k) out[k] -= static_cast<real>(k) * k * s.c[k];
    return out;
}

std::vector<real> reciprocal_rhs_grid(const FourierState& s, int M)
{
    auto d = reciprocal_rhs(s);
    RealFft fft(M);
    std::vector<real> g;
    fft.to_grid(d, g);
    return g;
}

FourierState switch_representation(const FourierState& s, int oversample)
{
    const int M = fft_friendly_size(std::max(oversample, 2) * 2 * (s.N() + 1));
    RealFft fft(M);
    std::vector<real> g;
    fft.to_grid(s.c, g);
    for (real v : g)
        if (!(v > 0))
            fail(ErrorKind::domain, "switch_representation: function is not strictly positive on the grid");
    for (auto& v : g) v = 1 / v;
    FourierState out = s;
    out.rep = s.rep == Representation::U ? Representation::V : Representation::U;
    fft.from_grid(g, out.c);
    out.noise_floor = std::max(s.noise_floor, ld_eps);
    return out;
}

FourierState refine(const FourierState& s, int N_new)
{
    if (N_new < s.N()) fail(ErrorKind::domain, "refine: cannot reduce N");
    FourierState out = s;
    out.c.resize(N_new + 1, cplx(0));
    return out;
}

FourierState as_u(const FourierState& s)
{
    return s.rep == Representation::U ? s : switch_representation(s);
}

std::vector<real> grid_values(const FourierState& s, int M)
{
    RealFft fft(M);
    std::vector<real> g;
    fft.to_grid(s.c, g);
    std::rotate(g.begin(), g.begin() + M / 2, g.end());
    return g;
}

real evaluate(const FourierState& s, real x)
{
    real v = s.c[0].real();
    for (int k = 1; k <= s.N(); ++k) v += 2 * (s.c[k] * std::polar(real(1), k * x)).real();
    return v;
}

real mean_balance_residual(const FourierState& s, const std::vector<cplx>& rhs)
{
    if (s.rep != Representation::U) fail(ErrorKind::domain, "mean_balance_residual: state is not in U form");
    real sum = std::norm(s.c[0]);
    for (int k = 1; k <= s.N(); ++k) sum += 2 * std::norm(s.c[k]);
    return std::abs(rhs[0] - sum);
}

SolveTrajectory advance(const FourierState& s0, real t_end, const SolverOptions& opt)
{
    if (!(opt.rtol > 0) || opt.atol < 0) fail(ErrorKind::config, "advance: tolerances must be positive");
    if (!(t_end > s0.t)) fail(ErrorKind::config, "advance: t_end must exceed the initial time");

    SolveTrajectory traj;
    traj.snapshots.push_back(s0);
    Integrator in(s0, opt);
    if (!in.fsal_valid()) fail(ErrorKind::domain, "advance: initial V state is not positive");

    const auto outputs = snapshot_schedule(s0.t, t_end, opt);
    size_t next_out = 0;
    bool flagged = false;

    auto [gmin, gmax] = in.extrema();
    real h = opt.h_initial > 0 ? opt.h_initial
                               : std::min<real>(1e-3L, 0.01L / (1 + std::max(std::abs(gmin), std::abs(gmax))));
    real err_prev = 1e-4L;
    bool last_rejected = false;

    auto finish = [&](Termination term) {
        traj.termination = term;
        FourierState fs = in.state();
        if (traj.snapshots.back().t != fs.t) traj.snapshots.push_back(fs);
        traj.stats.rhs_evals = in.rhs_evals();
        return traj;
    };
    auto growth_end = [&]() {
        if (auto b = try_blowup(traj)) {
            traj.blowup = b;
            return finish(Termination::blowup);
        }
        return finish(Termination::under_resolved);
    };

    while (true) {
        if (traj.stats.accepted + traj.stats.rejected >= opt.max_steps) {
            traj.warnings.push_back("step budget exhausted");
            return finish(Termination::under_resolved);
        }
        const real target = outputs[next_out];
        bool hit = false;
        if (in.t() + h >= target) {
            h = target - in.t();
            hit = true;
        }
        const real h_floor = 64 * ld_eps * std::max<real>(1, std::abs(in.t()));
        if (h < h_floor && !hit) {
            traj.warnings.push_back("step size underflow at t = " + fmt17(static_cast<double>(in.t())));
            return growth_end();
        }

        real err = in.attempt(h);
        if (!(err <= 1)) {
            ++traj.stats.rejected;
            real fac = std::isfinite(err) ? std::max<real>(0.2L, 0.9L * std::pow(err, -0.2L)) : 0.25L;
            h *= fac;
            last_rejected = true;
            continue;
        }

        in.accept(h);
        if (hit) in.set_time(target);
        ++traj.stats.accepted;
        traj.stats.h_last = h;

        std::tie(gmin, gmax) = in.extrema();
        traj.history.push_back({in.t(), h, gmin, gmax, in.rep(), in.N()});

        // PI step control (beta = 0.04)
        constexpr real beta = 0.04L, alpha = 0.2L - 0.75L * beta;
        real e = std::max<real>(err, 1e-10L);
        real fac = 0.9L * std::pow(e, -alpha) * std::pow(err_prev, beta);
        fac = std::clamp<real>(fac, 0.2L, last_rejected ? 1.0L : 10.0L);
        err_prev = std::max<real>(err, 1e-4L);
        last_rejected = false;
        h *= fac;

        if (hit) {
            traj.snapshots.push_back(in.state());
            ++next_out;
        }

        if (in.rep() == Representation::U) {
            if (opt.nonlinear && opt.allow_switch && gmin > 0 && gmax > opt.switch_threshold) {
                in.set(switch_representation(in.state()));
                ++traj.stats.switches;
                err_prev = 1e-4L;
                std::tie(gmin, gmax) = in.extrema();
                traj.history.push_back({in.t(), 0, gmin, gmax, in.rep(), in.N()});
            } else if (gmax < 0 && -gmin < opt.heat_death_floor && in.state().c[0].real() < 0) {
                return finish(Termination::heat_death);
            } else if (gmax > opt.u_blowup_cap) {
                return growth_end();
            }
        }
        if (in.rep() == Representation::V && gmin < opt.blowup_threshold * gmax) return growth_end();

        FourierState cur = in.state();
        const real tail = cur.tail_ratio();
        if (opt.auto_refine && tail > opt.refine_ratio && in.N() < opt.N_max) {
            int N_new = std::min(opt.N_max, 2 * in.N());
            in.set(refine(cur, N_new));
            ++traj.stats.refinements;
            err_prev = 1e-4L;
        } else if (tail > opt.resolution_ratio) {
            if (opt.auto_refine) return growth_end();
            if (!flagged) {
                traj.warnings.push_back("under-resolved tail at t = " + fmt17(static_cast<double>(in.t())));
                flagged = true;
            }
        }

        if (hit && next_out == outputs.size()) return finish(Termination::reached_t_end);
    }
}

BlowupBracket detect_blowup(const SolveTrajectory& traj)
{
    // Collect (t, g) with g -> 0 linearly: g = min v in V form, 1/max u in U form.
    std::vector<std::pair<real, real>> pts;
    for (auto it = traj.history.rbegin(); it != traj.history.rend() && pts.size() < 3; ++it) {
        if (it->h == 0) continue;  // switch marker
        if (it->rep != traj.history.back().rep) break;
        real g;
        if (it->rep == Representation::V)
            g = it->grid_min;
        else if (it->grid_max > 0)
            g = 1 / it->grid_max;
        else
            break;
        if (!pts.empty() && pts.back().first == it->t) continue;
        pts.emplace_back(it->t, g);
    }
    if (pts.size() < 3) fail(ErrorKind::under_resolved, "detect_blowup: not enough growth history");
    auto secant = [](std::pair<real, real> a, std::pair<real, real> b) {
        real slope = (a.second - b.second) / (a.first - b.first);
        return std::make_pair(a.first - a.second / slope, slope);
    };
    auto [tc, slope] = secant(pts[0], pts[1]);
    auto [tc_prev, slope_prev] = secant(pts[1], pts[2]);
    if (!(slope < -0.25L && slope > -4) || !(slope_prev < -0.25L && slope_prev > -4))
        fail(ErrorKind::under_resolved, "detect_blowup: growth not consistent with 1/(t_c - t)");
    const real last_t = pts[0].first;
    if (!(tc >= last_t)) fail(ErrorKind::under_resolved, "detect_blowup: extrapolated t_c precedes last step");
    real spread = std::abs(tc - tc_prev);
    BlowupBracket b;
    b.t_c = tc;
    b.lo = last_t;
    b.hi = std::max(tc, tc_prev) + spread + 8 * ld_eps * std::abs(tc);
    return b;
}

}  // namespace nlh::spectral
