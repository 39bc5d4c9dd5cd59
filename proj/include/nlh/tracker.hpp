#pragma once

#include "nlh/spectral.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace nlh::tracker {

using spectral::FourierState;

/// Fit window selection. Zero bounds mean automatic:
/// k_min = max(kmin_floor, round(kmin_fraction N)), k_max = largest k with
/// |c_k| > floor_factor * noise_floor * max |c_k|.
struct WindowPolicy {
    int k_min = 0;
    int k_max = 0;
    int kmin_floor = 4;
    real kmin_fraction = 0.2L;
    real floor_factor = 1e3L;
    /// Weight each log|c_k| residual by 1 (false) or by k (true).
    bool weighted = false;
};

struct SingularityEstimate {
    real t = 0;
    real y_star = 0;
    real mu = 0;
    real logC = 0;
    real rms_residual = 0;
    int k_min = 0;
    int k_max = 0;
    bool ok = false;
    bool under_resolved = false;
    std::string note;
};

/// Least squares log|c_k| = log|C| + (mu - 1) log k - k y* over [k_min, k_max].
SingularityEstimate fit_decay(const FourierState& s, int k_min, int k_max, bool weighted = false);
SingularityEstimate fit_decay(const FourierState& s, const WindowPolicy& policy = {});

/// Window chosen by the policy; throws a domain error if fewer than 5 usable modes.
std::pair<int, int> choose_window(const FourierState& s, const WindowPolicy& policy);

struct Track {
    std::vector<SingularityEstimate> estimates;
    std::vector<real> reversal_times;
};

/// Per-snapshot fits (V snapshots are converted to U first); failed fits
/// are kept with ok = false and a note.
Track track(const std::vector<FourierState>& snapshots, const WindowPolicy& policy = {});
std::vector<std::pair<real, real>> mu_series(const std::vector<FourierState>& snapshots,
                                              const WindowPolicy& policy = {});

/// Sign changes of the discrete derivative of y after a centered 3-point
/// median; differences with |dy| <= tol keep the previous sign. Reported
/// time is the sample where the extremum sits.
std::vector<real> reversal_times(const std::vector<real>& t, const std::vector<real>& y, real tol = 0);

void write_track_csv(std::ostream& os, const Track& tr);
Track read_track_csv(std::istream& is);

}  // namespace nlh::tracker
