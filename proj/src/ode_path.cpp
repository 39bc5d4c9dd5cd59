#include "nlh/ode.hpp"

#include "nlh/pade.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace nlh::ode {

namespace {

using continuation::HalfSeries;
using continuation::polyval;

struct Local {
    real scale = 1;
    std::vector<cplx> num, den;
    std::vector<cplx> poles;  // relative to the expansion point
};

std::vector<cplx> deriv(const std::vector<cplx>& p)
{
    if (p.size() <= 1) return {cplx(0)};
    std::vector<cplx> d(p.size() - 1);
    for (size_t i = 1; i < p.size(); ++i) d[i - 1] = static_cast<real>(i) * p[i];
    return d;
}

// Radius estimate from the tail of the Taylor coefficients (root test).
real radius_estimate(const std::vector<cplx>& a)
{
    const int K = static_cast<int>(a.size()) - 1;
    real r = std::numeric_limits<real>::infinity();
    for (int n = K / 2; n <= K; ++n)
        if (std::abs(a[n]) > 0) r = std::min(r, std::pow(std::abs(a[n]), real(-1) / n));
    return r;
}

Local build_local(cplx phi, cplx dphi, const PathOptions& opt)
{
    const auto a = taylor_coeffs(phi, dphi, opt.order + 1);  // pade() wants one coefficient beyond m + n
    Local L;
    L.scale = std::clamp(radius_estimate(a), real(1e-12L), opt.h_max);
    HalfSeries g;
    g.a.resize(a.size());
    real p = 1;
    for (size_t n = 0; n < a.size(); ++n, p *= L.scale) g.a[n] = a[n] * p;
    const int half = opt.order / 2;
    auto r = continuation::pade(g, half, half);
    L.num = std::move(r.num);
    L.den = std::move(r.den);
    for (auto& P : r.poles) L.poles.push_back(P.w * L.scale);
    return L;
}

struct Eval {
    cplx phi, dphi, d2phi;
};

Eval eval_local(const Local& L, cplx s)
{
    const cplx t = s / L.scale;
    const auto dP = deriv(L.num), dQ = deriv(L.den);
    const auto d2P = deriv(dP), d2Q = deriv(dQ);
    const cplx P = polyval(L.num, t), Q = polyval(L.den, t);
    const cplx P1 = polyval(dP, t), Q1 = polyval(dQ, t);
    const cplx P2 = polyval(d2P, t), Q2 = polyval(d2Q, t);
    const cplx f = P / Q;
    const cplx f1 = (P1 - f * Q1) / Q;
    const cplx f2 = (P2 - real(2) * f1 * Q1 - f * Q2) / Q;
    return {f, f1 / L.scale, f2 / (L.scale * L.scale)};
}

real residual(const Eval& e)
{
    return std::abs(e.d2phi - e.dphi - e.phi * e.phi) / (1 + std::norm(e.phi));
}

struct Candidate {
    Singularity s;
    int crossings = 0;  // signed crossings of the cut ray to the left of s
    size_t last_hit_step = static_cast<size_t>(-1);
};

class Integrator {
public:
    Integrator(const PathOptions& opt, OdePathSolution& sol) : opt_(opt), sol_(sol) {}

    void start(cplx x, cplx phi, cplx dphi, int sheet)
    {
        Step st;
        st.x = x;
        st.phi = phi;
        st.dphi = dphi;
        st.sheet = sheet;
        sol_.steps.push_back(st);
    }

    void segment(cplx target, bool allow_detour)
    {
        for (int guard = 0; guard < 1000000; ++guard) {
            Step& cur = sol_.steps.back();
            const cplx rem = target - cur.x;
            const real dist = std::abs(rem);
            if (dist <= 1e-15L * std::max(real(1), std::abs(target))) return;
            const Local L = build_local(cur.phi, cur.dphi, opt_);
            cur.scale = L.scale;
            cur.num = L.num;
            cur.den = L.den;
            record(L, cur);

            const cplx dir = rem / dist;
            real d = std::numeric_limits<real>::infinity();
            for (cplx p : L.poles) d = std::min(d, std::abs(p));

            if (allow_detour && opt_.detour_radius > 0 && try_detour(L, dir, dist, target)) continue;

            real h = std::min({dist, opt_.h_max, opt_.safety * d});
            if (h < opt_.h_min) {
                std::ostringstream os;
                os << "ode: step stagnation at x = (" << static_cast<double>(cur.x.real()) << ", "
                   << static_cast<double>(cur.x.imag()) << ")";
                fail(ErrorKind::numerical, os.str());
            }
            Eval e = eval_local(L, h * dir);
            int halvings = 0;
            while (residual(e) > opt_.residual_tol && halvings < 12 && h / 2 >= opt_.h_min) {
                h /= 2;
                e = eval_local(L, h * dir);
                ++halvings;
            }
            if (residual(e) > opt_.residual_tol && !residual_warned_) {
                residual_warned_ = true;
                std::ostringstream os;
                os << "residual " << static_cast<double>(residual(e)) << " above tolerance near x = ("
                   << static_cast<double>(cur.x.real()) << ", " << static_cast<double>(cur.x.imag()) << ")";
                sol_.warnings.push_back(os.str());
            }
            const cplx xn = (h == dist) ? target : cur.x + h * dir;
            advance_to(xn, e.phi, e.dphi);
        }
        fail(ErrorKind::numerical, "ode: step limit exceeded");
    }

    void finish()
    {
        Step& cur = sol_.steps.back();
        if (cur.num.empty()) {
            const Local L = build_local(cur.phi, cur.dphi, opt_);
            cur.scale = L.scale;
            cur.num = L.num;
            cur.den = L.den;
            record(L, cur);
        }
        for (auto& c : cands_)
            if (confirmed(c)) sol_.singularities.push_back(c.s);
    }

    void inherit(const OdePathSolution& from)
    {
        for (auto& s : from.singularities) {
            Candidate c;
            c.s = s;
            cands_.push_back(c);
        }
        base_sheet_ = from.sheet();
    }

private:
    int sheet_now() const
    {
        int s = base_sheet_;
        for (auto& c : cands_)
            if (confirmed(c)) s += c.crossings;
        return s;
    }

    bool confirmed(const Candidate& c) const
    {
        return c.s.hits >= opt_.confirm_hits && c.s.best_distance <= opt_.confirm_distance;
    }

    void advance_to(cplx xn, cplx phi, cplx dphi)
    {
        const cplx xo = sol_.steps.back().x;
        for (auto& c : cands_) {
            const cplx a = xo - c.s.x, b = xn - c.s.x;
            c.s.winding += std::arg(b / a);
            // crossing of the ray {s - t, t > 0}; the ray itself counts as the upper side
            const bool ua = a.imag() >= 0, ub = b.imag() >= 0;
            if (ua != ub) {
                const real lam = a.imag() / (a.imag() - b.imag());
                const real re = a.real() + lam * (b.real() - a.real());
                if (re < 0) c.crossings += ub ? 1 : -1;  // lower to upper on the left is clockwise
            }
        }
        Step st;
        st.x = xn;
        st.phi = phi;
        st.dphi = dphi;
        st.sheet = sheet_now();
        sol_.steps.push_back(st);
    }

    void record(const Local& L, const Step& cur)
    {
        const size_t idx = sol_.steps.size() - 1;
        for (cplx p : L.poles) {
            const real r = std::abs(p);
            if (r > opt_.record_radius) continue;
            const cplx x = cur.x + p;
            Candidate* hit = nullptr;
            for (auto& c : cands_)
                if (c.s.sheet == cur.sheet && std::abs(c.s.x - x) < opt_.merge_distance) {
                    hit = &c;
                    break;
                }
            if (!hit) {
                Candidate c;
                c.s.x = x;
                c.s.sheet = cur.sheet;
                c.s.best_distance = r;
                cands_.push_back(c);
                hit = &cands_.back();
            }
            if (hit->last_hit_step != idx) {
                ++hit->s.hits;
                hit->last_hit_step = idx;
            }
            if (r < hit->s.best_distance) {
                hit->s.best_distance = r;
                hit->s.x = x;
            }
        }
    }

    // A pole close ahead on the line of travel is passed on a circular arc.
    bool try_detour(const Local& L, cplx dir, real dist, cplx target)
    {
        const real R = opt_.detour_radius;
        const cplx x = sol_.steps.back().x;
        for (cplx p : L.poles) {
            const cplx rel = p / dir;
            const real along = rel.real(), off = std::abs(rel.imag());
            const real r = std::abs(p);
            if (along <= 0 || off >= 0.5L * R || r > R) continue;
            const real exit = along + std::sqrt(r * r - off * off);
            if (exit >= dist) continue;
            const cplx c = x + p;
            const cplx q = x + exit * dir;
            const real th0 = std::arg(x - c);
            real dth = std::arg((q - c) / (x - c));
            // Passing on the side away from the pole never crosses the cut
            // that runs from it against the direction of travel.
            const int side = opt_.detour_side != 0 ? opt_.detour_side : (rel.imag() > 0 ? -1 : 1);
            // side +1 passes to the left of travel: clockwise around the pole
            if (side > 0) {
                if (dth > 0) dth -= 2 * pi_l;
            } else {
                if (dth < 0) dth += 2 * pi_l;
            }
            Detour det;
            det.center = c;
            det.radius = r;
            det.first_step = sol_.steps.size() - 1;
            sol_.detours.push_back(det);
            const int n = std::max(2, static_cast<int>(std::ceil(opt_.arc_points * std::abs(dth) / pi_l)));
            for (int k = 1; k <= n; ++k) {
                const cplx pt = (k == n) ? q : c + std::polar(r, th0 + dth * k / n);
                segment(pt, false);
            }
            (void)target;
            return true;
        }
        return false;
    }

    const PathOptions& opt_;
    OdePathSolution& sol_;
    std::vector<Candidate> cands_;
    int base_sheet_ = 0;
    bool residual_warned_ = false;
};

}  // namespace

OdePathSolution integrate_path(cplx x0, cplx phi0, cplx dphi0, const std::vector<cplx>& waypoints,
                               const PathOptions& opt, const OdePathSolution* from, long from_step)
{
    if (waypoints.empty()) fail(ErrorKind::domain, "integrate_path: no waypoints");
    if (std::abs(waypoints.front() - x0) > 1e-12L * std::max(real(1), std::abs(x0)))
        fail(ErrorKind::domain, "integrate_path: the first waypoint must be the starting point");
    if (opt.order < 2 || opt.order % 2) fail(ErrorKind::domain, "integrate_path: order must be even and >= 2");
    OdePathSolution sol;
    sol.waypoints = waypoints;
    Integrator in(opt, sol);
    int sheet0 = 0;
    if (from && from_step >= 0) {
        if (static_cast<size_t>(from_step) >= from->steps.size()) fail(ErrorKind::domain, "integrate_path: bad from_step");
        sheet0 = from->steps[from_step].sheet;
    } else if (from) {
        in.inherit(*from);
        sheet0 = from->sheet();
    }
    in.start(x0, phi0, dphi0, sheet0);
    sol.waypoint_steps.push_back(0);
    for (size_t i = 1; i < waypoints.size(); ++i) {
        in.segment(waypoints[i], true);
        sol.waypoint_steps.push_back(sol.steps.size() - 1);
    }
    in.finish();
    return sol;
}

OdePathSolution integrate_path(const SeriesIC& ic, const std::vector<cplx>& waypoints, const PathOptions& opt)
{
    return integrate_path(cplx(ic.x_a), ic.phi, ic.dphi, waypoints, opt);
}

const Step& at_waypoint(const OdePathSolution& s, size_t i)
{
    if (i >= s.waypoint_steps.size()) fail(ErrorKind::domain, "at_waypoint: index out of range");
    return s.steps[s.waypoint_steps[i]];
}

namespace {

// Integrates `base` from the lead-in's end through `base_pts`, then one branch
// from every base point to `tip(point)`; singularities are merged over branches.
template <class Tip>
SweepResult sweep_branches(const OdePathSolution& lead_in, const std::vector<cplx>& base_pts, Tip tip,
                           const PathOptions& opt)
{
    const Step& start = lead_in.steps.back();
    SweepResult out;
    const auto base = integrate_path(start.x, start.phi, start.dphi, base_pts, opt, &lead_in);
    out.steps += base.steps.size();

    std::vector<Singularity> all;
    auto merge = [&](const std::vector<Singularity>& v) {
        for (const auto& s : v) {
            bool found = false;
            for (auto& a : all)
                if (a.sheet == s.sheet && std::abs(a.x - s.x) < opt.merge_distance) {
                    a.hits += s.hits;
                    if (s.best_distance < a.best_distance) {
                        a.best_distance = s.best_distance;
                        a.x = s.x;
                    }
                    found = true;
                    break;
                }
            if (!found) all.push_back(s);
        }
    };
    // only singularities first seen on the base, not the lead-in's
    std::vector<Singularity> base_new(base.singularities.begin() + lead_in.singularities.size(),
                                      base.singularities.end());
    merge(base_new);
    for (size_t k = 0; k < base_pts.size(); ++k) {
        const Step& st = at_waypoint(base, k);
        const cplx end = tip(st.x);
        if (end == st.x) continue;
        try {
            const auto br = integrate_path(st.x, st.phi, st.dphi, {st.x, end}, opt, &base,
                                           static_cast<long>(base.waypoint_steps[k]));
            out.steps += br.steps.size();
            merge(br.singularities);
            for (auto& w : br.warnings) out.warnings.push_back(w);
        } catch (const Error& e) {
            ++out.failed_rows;
            out.warnings.push_back(e.what());
        }
    }
    out.singularities = std::move(all);
    return out;
}

}  // namespace

SweepResult sweep_rows(const OdePathSolution& lead_in, const SweepGrid& grid, const PathOptions& opt)
{
    if (lead_in.steps.empty()) fail(ErrorKind::domain, "sweep_rows: empty lead-in");
    if (grid.rows < 1 || !(grid.y1 >= grid.y0)) fail(ErrorKind::domain, "sweep_rows: bad grid");
    const cplx x0 = lead_in.steps.back().x;
    const real x_left = x0.real();
    if (std::abs(x0.imag() - grid.y0) > 1e-12L) fail(ErrorKind::domain, "sweep_rows: lead-in must end at x_left + i y0");

    std::vector<cplx> spine{x0};
    for (int k = 1; k < grid.rows; ++k) spine.emplace_back(x_left, grid.y0 + (grid.y1 - grid.y0) * k / (grid.rows - 1));
    return sweep_branches(lead_in, spine, [&](cplx p) { return cplx(grid.x_right, p.imag()); }, opt);
}

SweepResult sweep_columns(const OdePathSolution& lead_in, const SweepGrid& grid, int columns, const PathOptions& opt)
{
    if (lead_in.steps.empty()) fail(ErrorKind::domain, "sweep_columns: empty lead-in");
    const cplx x0 = lead_in.steps.back().x;
    const real x_left = x0.real();
    if (columns < 2 || !(grid.y1 >= grid.y0) || !(grid.x_right > x_left))
        fail(ErrorKind::domain, "sweep_columns: bad grid");
    if (std::abs(x0.imag() - grid.y0) > 1e-12L)
        fail(ErrorKind::domain, "sweep_columns: lead-in must end at x_left + i y0");

    std::vector<cplx> row{x0};
    for (int k = 1; k < columns; ++k) row.emplace_back(x_left + (grid.x_right - x_left) * k / (columns - 1), grid.y0);
    return sweep_branches(lead_in, row, [&](cplx p) { return cplx(p.real(), grid.y1); }, opt);
}

int first_real_singularity(const OdePathSolution& s, real tol)
{
    for (size_t i = 0; i < s.singularities.size(); ++i)
        if (std::abs(s.singularities[i].x.imag()) < tol) return static_cast<int>(i);
    return -1;
}

LocatedSingularity fit_local_model(const std::vector<cplx>& x, const std::vector<cplx>& phi, cplx guess,
                                   real fit_tol)
{
    using MatC = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
    using VecC = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;
    const int n = static_cast<int>(x.size());
    if (n < 6 || phi.size() != x.size()) fail(ErrorKind::domain, "fit_local_model: need at least 6 samples");

    LocatedSingularity out;
    out.x = guess;

    // Leading-order start: phi^{-1/2} is linear in x with its root at x*.
    {
        MatC A(n, 2);
        VecC b(n);
        cplx prev = 0;
        for (int i = 0; i < n; ++i) {
            cplx w = real(1) / std::sqrt(phi[i]);
            if (i > 0 && std::abs(w + prev) < std::abs(w - prev)) w = -w;
            prev = w;
            A(i, 0) = x[i];
            A(i, 1) = 1;
            b(i) = w;
        }
        VecC c = A.colPivHouseholderQr().solve(b);
        if (std::abs(c(0)) > 0) {
            const cplx xs = -c(1) / c(0);
            if (std::isfinite(xs.real()) && std::isfinite(xs.imag())) out.x = xs;
        }
    }

    // Gauss-Newton on phi z^2 - (A + B z + C z^2 + D z^3), z = x - x*; every
    // residual is holomorphic in the parameters.
    cplx xs = out.x;
    VecC theta(4);
    auto linear = [&](cplx xstar) {
        MatC V(n, 4);
        VecC y(n);
        for (int i = 0; i < n; ++i) {
            const cplx z = x[i] - xstar;
            V(i, 0) = 1;
            V(i, 1) = z;
            V(i, 2) = z * z;
            V(i, 3) = z * z * z;
            y(i) = phi[i] * z * z;
        }
        return VecC(V.colPivHouseholderQr().solve(y));
    };
    theta = linear(xs);
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
        MatC J(n, 5);
        VecC r(n);
        for (int i = 0; i < n; ++i) {
            const cplx z = x[i] - xs;
            r(i) = phi[i] * z * z - (theta(0) + theta(1) * z + theta(2) * z * z + theta(3) * z * z * z);
            J(i, 0) = -real(2) * phi[i] * z + theta(1) + real(2) * theta(2) * z + real(3) * theta(3) * z * z;
            J(i, 1) = -1;
            J(i, 2) = -z;
            J(i, 3) = -z * z;
            J(i, 4) = -z * z * z;
        }
        VecC delta = J.colPivHouseholderQr().solve(-r);
        xs += delta(0);
        for (int k = 0; k < 4; ++k) theta(k) += delta(k + 1);
        if (std::abs(delta(0)) <= 1e-17L * std::max(real(1), std::abs(xs))) {
            converged = true;
            break;
        }
    }
    real rms = 0;
    for (int i = 0; i < n; ++i) {
        const cplx z = x[i] - xs;
        rms += std::norm(phi[i] * z * z - (theta(0) + theta(1) * z + theta(2) * z * z + theta(3) * z * z * z));
    }
    rms = std::sqrt(rms / n) / std::max(std::abs(theta(0)), std::numeric_limits<real>::min());

    out.rms_residual = rms;
    if (!std::isfinite(rms) || rms > fit_tol || !converged) {
        out.x = guess;
        std::ostringstream os;
        os << "local fit not accepted (relative rms " << static_cast<double>(rms)
           << (converged ? "" : ", no convergence") << "); candidate returned unrefined";
        out.warning = os.str();
        out.refined = false;
    } else {
        out.x = xs;
        out.refined = true;
    }
    out.leading = theta(0);
    out.simple = theta(1);
    out.constant = theta(2);
    return out;
}

LocatedSingularity locate_singularity(const OdePathSolution& s, size_t which, const PathOptions& opt, real fit_tol)
{
    if (which >= s.singularities.size()) fail(ErrorKind::domain, "locate_singularity: no such singularity");
    const Singularity& S = s.singularities[which];

    // Start from the closest recorded step on the same sheet that is at
    // least 0.02 away from the candidate.
    const Step* start = nullptr;
    real best = std::numeric_limits<real>::infinity();
    for (const auto& st : s.steps) {
        const real d = std::abs(st.x - S.x);
        if (st.sheet == S.sheet && d >= 0.02L && d < best) {
            best = d;
            start = &st;
        }
    }
    if (!start) fail(ErrorKind::domain, "locate_singularity: no step on the candidate's sheet");

    const cplx dir = (S.x - start->x) / best;
    std::vector<cplx> pts{start->x};
    std::vector<real> dists;
    for (int k = 0; k < 8; ++k) dists.push_back(std::pow(real(10), -2 - real(k) / 7));
    for (real d : dists) pts.push_back(S.x - d * dir);
    PathOptions o = opt;
    o.detour_radius = 0;
    const auto path = integrate_path(start->x, start->phi, start->dphi, pts, o);
    std::vector<cplx> xs, ph;
    for (size_t i = 1; i < pts.size(); ++i) {
        xs.push_back(pts[i]);
        ph.push_back(at_waypoint(path, i).phi);
    }
    auto out = fit_local_model(xs, ph, S.x, fit_tol);
    return out;
}

std::vector<cplx> read_path_csv(std::istream& is)
{
    std::vector<cplx> out;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto f = split_csv(line);
        if (first) {
            first = false;
            if (f.size() >= 1 && f[0] == "re_x") continue;
        }
        if (f.size() != 2) fail(ErrorKind::config, "path CSV: expected two columns: " + line);
        out.emplace_back(parse_double(f[0], "path re_x"), parse_double(f[1], "path im_x"));
    }
    if (out.empty()) fail(ErrorKind::config, "path CSV: no waypoints");
    return out;
}

void write_solution_csv(std::ostream& os, const OdePathSolution& s)
{
    os << "re_x,im_x,re_phi,im_phi,sheet\n";
    for (const auto& st : s.steps)
        os << fmt17(static_cast<double>(st.x.real())) << ',' << fmt17(static_cast<double>(st.x.imag())) << ','
           << fmt17(static_cast<double>(st.phi.real())) << ',' << fmt17(static_cast<double>(st.phi.imag())) << ','
           << st.sheet << '\n';
}

void write_singularity_csv(std::ostream& os, const std::vector<Singularity>& v)
{
    os << "re_x,im_x,sheet,hits\n";
    for (const auto& s : v)
        os << fmt17(static_cast<double>(s.x.real())) << ',' << fmt17(static_cast<double>(s.x.imag())) << ','
           << s.sheet << ',' << s.hits << '\n';
}

}  // namespace nlh::ode
