#pragma once

#include "nlh/common.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace nlh::spectral {

enum class Representation { U, V };
enum class Convolution { automatic, direct, fft };
enum class Scheme { lawson_dp5, dp5 };

struct Cosine {
    real alpha = 1;
    real beta = 0;
};
/// u(x,0) = 1/(alpha - eps cos x), 0 < eps < alpha.
struct Flat {
    real alpha = 1;
    real eps = 0.001L;
};
/// alpha (exp(mu cos(x+delta) - mu) + exp(mu cos(x-delta) - mu)).
struct TwoPeak {
    real alpha = 6;
    real mu = 50;
    real delta = 0.4363L * pi_l;
};
/// Real samples at x_j = -pi + 2 pi j / M; M even and >= 2N+2.
struct Samples {
    std::vector<real> values;
};
using InitialDataSpec = std::variant<Cosine, Flat, TwoPeak, Samples>;

/// Half spectrum c_0..c_N; c_{-k} = conj(c_k) holds by construction.
struct FourierState {
    real t = 0;
    Representation rep = Representation::U;
    std::vector<cplx> c;
    /// Relative accuracy floor of the coefficients. Tails produced only by
    /// exact convolutions keep relative accuracy down to underflow; anything
    /// that went through a grid carries rounding at machine epsilon.
    real noise_floor = std::numeric_limits<real>::epsilon();

    int N() const { return static_cast<int>(c.size()) - 1; }
    cplx coeff(int k) const;
    real max_abs() const;
    /// max over the top eighth of the spectrum of |c_k| / max |c_k|.
    real tail_ratio() const;
    bool under_resolved(real ratio = 1e-8L) const { return tail_ratio() > ratio; }
};

FourierState init_state(const InitialDataSpec& spec, int N);

/// Spectral derivative of the U system: -k^2 c_k + (c*c)_k.
std::vector<cplx> nlh_rhs(const FourierState& s, Convolution conv = Convolution::automatic);
/// Spectral derivative of v_t = v_xx - 2 v_x^2 / v - 1.
std::vector<cplx> reciprocal_rhs(const FourierState& s);
/// Grid values of reciprocal_rhs at x_j = 2 pi j / M.
std::vector<real> reciprocal_rhs_grid(const FourierState& s, int M);

/// U <-> V by pointwise reciprocal on an oversampled grid.
FourierState switch_representation(const FourierState& s, int oversample = 4);
/// Zero-padded copy with truncation order N_new >= N.
FourierState refine(const FourierState& s, int N_new);
/// Returns the state in U form (switching if needed).
FourierState as_u(const FourierState& s);

/// Values at x_j = -pi + 2 pi j / M, j = 0..M-1.
std::vector<real> grid_values(const FourierState& s, int M);
/// Direct summation at one real point.
real evaluate(const FourierState& s, real x);

/// |dc_0/dt - sum_k c_k c_{-k}| for a U state and its derivative.
real mean_balance_residual(const FourierState& s, const std::vector<cplx>& rhs);

struct SolverOptions {
    real rtol = 1e-10L;
    real atol = 1e-12L;
    Scheme scheme = Scheme::lawson_dp5;
    Convolution convolution = Convolution::automatic;
    int direct_max_N = 128;
    bool nonlinear = true;  // false: heat equation only (test hook)

    bool allow_switch = true;
    real switch_threshold = 1e3L;
    real blowup_threshold = 1e-10L;  // V form: min v < thr * max v
    real u_blowup_cap = 1e6L;       // U form: max u above this ends the run
    real heat_death_floor = 1e-3L;  // with u < 0 everywhere

    real resolution_ratio = 1e-8L;  // under-resolution flag
    bool auto_refine = true;
    real refine_ratio = 1e-15L;
    int N_max = 16384;

    std::vector<real> snapshot_times;
    real snapshot_dt = 0;  // 0: only start, explicit times and end
    long max_steps = 5'000'000;
    real h_initial = 0;  // 0: automatic
};

enum class Termination { reached_t_end, blowup, heat_death, under_resolved };
std::string to_string(Termination t);
std::string to_string(Representation r);

struct BlowupBracket {
    real t_c = 0;
    real lo = 0;
    real hi = 0;
};

/// Grid extrema after each accepted step, in the representation in use.
struct StepRecord {
    real t = 0;
    real h = 0;
    real grid_min = 0;
    real grid_max = 0;
    Representation rep = Representation::U;
    int N = 0;
};

struct SolveStats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
    int refinements = 0;
    int switches = 0;
    real h_last = 0;
};

struct SolveTrajectory {
    std::vector<FourierState> snapshots;
    Termination termination = Termination::reached_t_end;
    std::optional<BlowupBracket> blowup;
    std::vector<StepRecord> history;
    SolveStats stats;
    std::vector<std::string> warnings;
    const FourierState& final_state() const { return snapshots.back(); }
};

SolveTrajectory advance(const FourierState& s, real t_end, const SolverOptions& opt = {});

/// Extrapolates the recorded growth (min v, or 1/max u) to zero.
/// Throws under_resolved when the history is not consistent with 1/(t_c - t).
BlowupBracket detect_blowup(const SolveTrajectory& traj);

}  // namespace nlh::spectral
