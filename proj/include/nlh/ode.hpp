#pragma once

#include "nlh/common.hpp"

#include <iosfwd>
#include <string>
#include <vector>

// phi'' - phi' = phi^2 in the complex plane: asymptotic initial data, a Padé
// one-step ("pole field") integrator with Riemann-sheet bookkeeping, and
// singularity location.
namespace nlh::ode {

enum class SeriesVariant { exponential, logarithmic };

struct SeriesIC {
    SeriesVariant variant = SeriesVariant::exponential;
    real parameter = 1;  // a for the exponential series, x0 for the logarithmic one
    real x_a = 0;
    cplx phi, dphi;
    int terms_used = 0;
    real first_omitted = 0;  // magnitude of the first term left out
    bool converged = true;   // false when the divergent tail set in first
    std::string note;
};

/// phi ~ sum_k c_k e^{k x} (x -> -inf), c_1 = a,
/// c_{k+1} = sum_{j=1}^{k} c_j c_{k+1-j} / (k (k+1)).
/// Summation stops once the next term is below rel_tol |phi|.
SeriesIC series_ic_exponential(real a, real x_a, real rel_tol = 1e-18L, int max_terms = 100000);
std::vector<real> exponential_coeffs(real a, int K);  // c_1..c_K (index 0 unused)

/// phi ~ sum_j P_j(log x) x^{-j} (x -> +inf) with phi ~ 1/x + 2 log x / x^2 + x0 / x^2.
/// d[j][m] multiplies (log x)^m x^{-j}; d[j] has j entries (m = 0..j-1).
std::vector<std::vector<real>> log_series_coeffs(real x0, int J);
/// Sums group by group (increasing j, decreasing log power inside a group).
/// A group is one term P_j(log x) x^{-j} of the outer series; its entries
/// cancel strongly (single entries stay near 1e-14 |phi| at x = 50 while the
/// group sums fall below 1e-19), so truncation tests the group sums: stop
/// when one is below rel_tol |phi|, else truncate before the smallest group
/// (divergent tail) and report converged = false.
SeriesIC series_ic_logarithmic(real x_a, real x0 = 0, real rel_tol = 1e-17L, int max_groups = 120);

/// Taylor coefficients a_0..a_K of phi about a point from (phi, phi').
std::vector<cplx> taylor_coeffs(cplx phi0, cplx phi1, int K);

struct PathOptions {
    int order = 16;        // Taylor degree; the local approximant is [order/2 / order/2]
    real safety = 0.5L;    // step = safety * distance to the nearest local pole
    real h_max = 0.5L;
    real h_min = 1e-10L;
    real residual_tol = 1e-10L;   // |phi'' - phi' - phi^2| / (1 + |phi|^2) at accepted points
    real detour_radius = 0.05L;   // semicircle radius around a pole lying on the path
    int detour_side = 0;          // +1 left of travel, -1 right, 0 the side away from the pole
    int arc_points = 8;           // segments per semicircle (16 per full loop)
    real record_radius = 1.0L;    // local poles closer than this are recorded
    real merge_distance = 0.02L;  // candidates closer than this are one singularity
    int confirm_hits = 3;         // detections needed before a pole counts as a singularity
    real confirm_distance = 0.1L; // ... and the path must have come at least this close
};

struct Step {
    cplx x, phi, dphi;
    int sheet = 0;
    real scale = 1;                 // local variable tau = (x' - x) / scale
    std::vector<cplx> num, den;     // Padé data in tau
};

struct Singularity {
    cplx x;              // best position estimate
    int sheet = 0;       // sheet index when first seen
    int hits = 0;
    real best_distance;  // distance from the step that gave the estimate
    real winding = 0;    // accumulated angle of the path around it
};

struct Detour {
    cplx center;
    real radius;
    size_t first_step;  // index of the first step on the arc
};

struct OdePathSolution {
    std::vector<cplx> waypoints;
    std::vector<size_t> waypoint_steps;  // step index that lands on each waypoint
    std::vector<Step> steps;
    std::vector<Singularity> singularities;  // confirmed only
    std::vector<Detour> detours;
    std::vector<std::string> warnings;
    int sheet() const { return steps.empty() ? 0 : steps.back().sheet; }
};

/// Integrates from the anchor of ic through the waypoints (the first waypoint
/// must be the anchor). Throws on step stagnation that a detour cannot cure.
OdePathSolution integrate_path(const SeriesIC& ic, const std::vector<cplx>& waypoints, const PathOptions& opt = {});
/// Same from explicit data. With `from`, sheet bookkeeping continues from its
/// last step and its singularities; with from_step >= 0 only the sheet index
/// of that step is carried over.
OdePathSolution integrate_path(cplx x0, cplx phi0, cplx dphi0, const std::vector<cplx>& waypoints,
                               const PathOptions& opt = {}, const OdePathSolution* from = nullptr,
                               long from_step = -1);

/// Value at a waypoint.
const Step& at_waypoint(const OdePathSolution& s, size_t i);

/// Horizontal sweep of a region: a vertical spine from the end of `lead_in`
/// (at x_left + i y0) up to x_left + i y1, then one row per spine point
/// running right to x_right. Rows never cross the leftward cuts of the
/// singularities they find, so each row stays on the spine's sheet.
struct SweepGrid {
    real x_right = 10;
    real y0 = 0, y1 = 1;
    int rows = 11;
};

struct SweepResult {
    std::vector<Singularity> singularities;  // merged over rows, confirmed
    size_t steps = 0;
    int failed_rows = 0;
    std::vector<std::string> warnings;
};

SweepResult sweep_rows(const OdePathSolution& lead_in, const SweepGrid& grid, const PathOptions& opt = {});
/// Vertical sweep: a base row from the end of `lead_in` (x_left + i y0) to
/// x_right + i y0 through `columns` points, then one column per point up to
/// Im x = y1. Equivalent to upward cuts; in the far field of the second sheet
/// this is the convention under which the singularities form one lattice
/// (rows from a left spine pass different singularities below and above and
/// mix branches). `grid.rows` is unused.
SweepResult sweep_columns(const OdePathSolution& lead_in, const SweepGrid& grid, int columns,
                          const PathOptions& opt = {});

struct LocatedSingularity {
    cplx x;
    cplx leading;   // coefficient of (x - x*)^{-2}
    cplx simple;    // coefficient of (x - x*)^{-1}
    cplx constant;
    real rms_residual = 0;  // relative, of phi (x - x*)^2
    bool refined = false;
    std::string warning;
};

/// Fits phi ~ A/z^2 + B/z + C + D z (z = x - x*) to samples taken on a
/// straight approach at distances 1e-2 .. 1e-3 from the candidate.
LocatedSingularity locate_singularity(const OdePathSolution& s, size_t which, const PathOptions& opt = {},
                                      real fit_tol = 1e-6L);
/// The fit alone: samples (x_i, phi_i) and an initial guess.
LocatedSingularity fit_local_model(const std::vector<cplx>& x, const std::vector<cplx>& phi, cplx guess,
                                   real fit_tol = 1e-6L);

/// First confirmed singularity (in path order of detection) within `tol` of
/// the real axis, or -1.
int first_real_singularity(const OdePathSolution& s, real tol = 1e-3L);

/// Waypoint CSV: one `re,im` pair per line (header `re_x,im_x`).
std::vector<cplx> read_path_csv(std::istream& is);
/// Rows Re x, Im x, Re phi, Im phi, sheet.
void write_solution_csv(std::ostream& os, const OdePathSolution& s);
/// Rows Re x, Im x, sheet, hits.
void write_singularity_csv(std::ostream& os, const std::vector<Singularity>& v);

}  // namespace nlh::ode
