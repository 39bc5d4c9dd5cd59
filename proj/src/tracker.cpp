#include "nlh/tracker.hpp"

#include "nlh/spectral_io.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace nlh::tracker {

namespace {
using MatL = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic>;
using VecL = Eigen::Matrix<real, Eigen::Dynamic, 1>;
}  // namespace

std::pair<int, int> choose_window(const FourierState& s, const WindowPolicy& p)
{
    const int N = s.N();
    int k_min = p.k_min > 0 ? p.k_min
                            : std::max(p.kmin_floor, static_cast<int>(std::lround(p.kmin_fraction * N)));
    int k_max = p.k_max;
    if (k_max <= 0) {
        const real cut = p.floor_factor * s.noise_floor * s.max_abs();
        k_max = 0;
        for (int k = 1; k <= N; ++k) {
            if (std::abs(s.c[k]) > cut)
                k_max = k;
            else if (k > k_min)
                break;
        }
    }
    k_max = std::min(k_max, N);
    if (p.k_min <= 0 && k_max - k_min < 4) k_min = std::max(1, k_max - 4);
    if (k_min < 1 || k_max - k_min < 4)
        fail(ErrorKind::domain, "fit window has fewer than 5 usable modes");
    return {k_min, k_max};
}

SingularityEstimate fit_decay(const FourierState& s, int k_min, int k_max, bool weighted)
{
    if (k_min < 1 || k_max > s.N() || k_max - k_min < 4)
        fail(ErrorKind::domain, "fit_decay: window must satisfy 1 <= k_min, k_max <= N, k_max - k_min >= 4");
    const int n = k_max - k_min + 1;
    MatL A(n, 3);
    VecL b(n);
    for (int i = 0; i < n; ++i) {
        const int k = k_min + i;
        const real a = std::abs(s.c[k]);
        if (!(a > 0) || !std::isfinite(a)) fail(ErrorKind::domain, "fit_decay: zero coefficient in window");
        const real w = weighted ? static_cast<real>(k) : 1;
        A(i, 0) = w;
        A(i, 1) = w * std::log(static_cast<real>(k));
        A(i, 2) = -w * k;
        b(i) = w * std::log(a);
    }
    Eigen::ColPivHouseholderQR<MatL> qr(A);
    if (qr.rank() < 3) fail(ErrorKind::domain, "fit_decay: rank-deficient least squares system");
    VecL x = qr.solve(b);
    VecL r = A * x - b;

    SingularityEstimate e;
    e.t = s.t;
    e.logC = x(0);
    e.mu = x(1) + 1;
    e.y_star = x(2);
    e.rms_residual = std::sqrt(r.squaredNorm() / n);
    e.k_min = k_min;
    e.k_max = k_max;
    e.ok = true;
    e.under_resolved = s.under_resolved();
    if (e.under_resolved) e.note = "under_resolved";
    return e;
}

SingularityEstimate fit_decay(const FourierState& s, const WindowPolicy& policy)
{
    auto [lo, hi] = choose_window(s, policy);
    return fit_decay(s, lo, hi, policy.weighted);
}

Track track(const std::vector<FourierState>& snapshots, const WindowPolicy& policy)
{
    Track tr;
    std::vector<real> ts, ys;
    for (const auto& snap : snapshots) {
        SingularityEstimate e;
        e.t = snap.t;
        try {
            e = fit_decay(spectral::as_u(snap), policy);
        } catch (const Error& err) {
            e.ok = false;
            e.note = err.what();
        }
        if (e.ok && !e.under_resolved) {
            ts.push_back(e.t);
            ys.push_back(e.y_star);
        }
        tr.estimates.push_back(e);
    }
    tr.reversal_times = reversal_times(ts, ys);
    return tr;
}

std::vector<std::pair<real, real>> mu_series(const std::vector<FourierState>& snapshots, const WindowPolicy& policy)
{
    std::vector<std::pair<real, real>> out;
    for (const auto& e : track(snapshots, policy).estimates)
        if (e.ok) out.emplace_back(e.t, e.mu);
    return out;
}

std::vector<real> reversal_times(const std::vector<real>& t, const std::vector<real>& y, real tol)
{
    const size_t n = y.size();
    std::vector<real> m(y);
    for (size_t i = 1; i + 1 < n; ++i) {
        real a = y[i - 1], b = y[i], c = y[i + 1];
        m[i] = std::max(std::min(a, b), std::min(std::max(a, b), c));
    }
    std::vector<real> out;
    int prev = 0;
    for (size_t i = 1; i < n; ++i) {
        real d = m[i] - m[i - 1];
        int sgn = std::abs(d) <= tol ? 0 : (d > 0 ? 1 : -1);
        if (sgn == 0) continue;
        if (prev != 0 && sgn != prev) out.push_back(t[i - 1]);
        prev = sgn;
    }
    return out;
}

void write_track_csv(std::ostream& os, const Track& tr)
{
    using spectral::fmt17l;
    os << "t,y_star,mu,logC,rms_residual,k_min,k_max,flags\n";
    for (const auto& e : tr.estimates) {
        std::string flags = e.ok ? (e.under_resolved ? "under_resolved" : "ok") : "failed";
        os << fmt17l(e.t) << ',' << fmt17l(e.y_star) << ',' << fmt17l(e.mu) << ',' << fmt17l(e.logC) << ','
           << fmt17l(e.rms_residual) << ',' << e.k_min << ',' << e.k_max << ',' << flags << '\n';
    }
}

Track read_track_csv(std::istream& is)
{
    Track tr;
    std::string line;
    if (!std::getline(is, line)) fail(ErrorKind::config, "track CSV: empty input");
    std::vector<real> ts, ys;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 8) fail(ErrorKind::config, "track CSV: expected 8 columns");
        SingularityEstimate e;
        e.t = std::strtold(f[0].c_str(), nullptr);
        e.y_star = std::strtold(f[1].c_str(), nullptr);
        e.mu = std::strtold(f[2].c_str(), nullptr);
        e.logC = std::strtold(f[3].c_str(), nullptr);
        e.rms_residual = std::strtold(f[4].c_str(), nullptr);
        e.k_min = std::atoi(f[5].c_str());
        e.k_max = std::atoi(f[6].c_str());
        e.ok = f[7] != "failed";
        e.under_resolved = f[7] == "under_resolved";
        if (e.ok && !e.under_resolved) {
            ts.push_back(e.t);
            ys.push_back(e.y_star);
        }
        tr.estimates.push_back(e);
    }
    tr.reversal_times = reversal_times(ts, ys);
    return tr;
}

}  // namespace nlh::tracker
