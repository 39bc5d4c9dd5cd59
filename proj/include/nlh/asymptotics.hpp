#pragma once

#include "nlh/common.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

// Closed-form asymptotic estimates for u_t = u_xx + u^2: singularity heights
// on the imaginary axis, real-axis profiles, blow-up profiles, the local
// expansion about a singularity, peak heights and the two-mode flow.
// Fitted constants are always inputs; nothing here is integrated except
// the two-mode system and two one-dimensional integrals.
namespace nlh::asymptotics {

enum class Regime {
    small_time,
    large_amp_leading,
    large_amp_higher,
    small_amp_t1,
    small_amp_t2,
    small_amp_t3,
    small_amp_t4,
    blowup_inner,
    blowup_profile,
    flat_data_blowup,
    heat_death,
};

std::string regime_name(Regime r);
Regime regime_from_name(const std::string& s);  // throws config error
std::vector<Regime> all_regimes();

/// First real singularity of phi'' - phi' = phi^2 with the logarithmic and
/// the exponential far-field conditions.
constexpr real zeta_star_log = 0.05695L;
constexpr real zeta_star_exp = 1.53767L;

struct AsymptoticQuery {
    Regime regime = Regime::small_time;
    // initial-data parameters: alpha (amplitude, or the mean level for the
    // flat data 1/(alpha - eps cos x)), beta (mean), eps (small amplitude)
    std::optional<real> alpha, beta, eps;
    std::optional<real> t, t_c;
    std::optional<real> s;  // fourth small-amplitude time variable
    // fitted constants
    std::optional<real> C, beta1;
    std::optional<real> zeta_star;        // regime default when absent
    std::optional<real> zeta_tilde_star;  // exponential-IC singularity, 1.53767
    std::optional<real> heat_A;           // amplitude of the e^{-t} cos x / t^2 tail
    std::optional<real> heat_offset;      // the O(1) term of t + 2 log t
};

/// Named preset holding the fitted blow-up constants for cosine data with
/// alpha = 0.5: C = 92000, beta1 = -3/32, t_c = 15.530458826185942.
AsymptoticQuery preset(const std::string& name);

/// The formula a regime evaluates, as text, for output headers.
std::string sigma_formula(Regime r);
std::string profile_formula(Regime r);

/// Height y of the singularity closest to the real axis on the positive
/// imaginary axis.
real sigma_estimate(const AsymptoticQuery& q);

/// Real-axis value u(x). Throws a domain error naming the point when a
/// formula's own denominator vanishes or changes sign there.
real profile_estimate(const AsymptoticQuery& q, real x);

/// zeta* used by small_amp_t1 when none is given: zeta~* - log 2.
real small_amp_t1_zeta_limit(real zeta_tilde_star = zeta_star_exp);

/// Integral over (-inf, t] of e^{2s} / (t_c - s)^2, scaled by e^{-2t}.
real cos2x_integral_scaled(real t, real t_c);
/// C1 = e^{-2 alpha} log alpha and
/// C2 = e^{-4 alpha} int_0^alpha (e^{2s} - e^{2 alpha}) / (alpha - s) ds.
real flat_C1(real alpha);
real flat_C2(real alpha);

/// u ~ -6/z^2 + p1/z + p0 + a z + b z^2 + c z^3 + d z^4 log z + B z^4 about
/// x = i sigma(t) in the moving variable z. The printed coefficient formulas
/// use sigma'' in the sigma''' slots of c and d; pass sigma''' to use the
/// re-derived form, leave it empty to reproduce the printed one.
struct LocalExpansion {
    cplx u;
    cplx p1, p0, a, b, c, d;
};
LocalExpansion local_expansion(real sdot, real sddot, cplx zeta, cplx B = 0,
                               std::optional<real> stdot = std::nullopt);

/// Peak-to-trough height h = 32 e^{-t} / (eps^3 (t_c - t)^2), its minimiser
/// t_c - 2 and the minimum 8 e^2 e^{-t_c} / eps^3.
struct Height {
    real h = 0;
    real t_min = 0;
    real h_min = 0;
};
Height height_estimate(real eps, real t, real t_c);

/// beta' = beta^2 + alpha^2 / 2, alpha' = (2 beta - 1) alpha.
struct TwoModePoint {
    real t, beta, alpha;
};
enum class TwoModeOutcome { blow_up, decay, undecided };
struct TwoModeResult {
    std::vector<TwoModePoint> trajectory;
    TwoModeOutcome outcome = TwoModeOutcome::undecided;
    real blowup_time = 0;  // when outcome == blow_up
};
/// Adaptive Dormand-Prince. beta' >= 0 always, so beta > 0 means blow up;
/// decay is declared once beta < 0 and alpha^2/4 (the most alpha can still
/// add to beta) is below 1e-8 |beta|.
TwoModeResult two_mode_flow(real alpha0, real beta0, real t_end, real rtol = 1e-12L);
std::string outcome_name(TwoModeOutcome o);

/// Non-generic quartic blow up: u = 12 / (A x^4) and f0 = 1 / (1 + A z^4 / 12).
real nongeneric_profile(real A, real x);
real nongeneric_self_similar(real A, real zeta);

/// beta1 = -3/32 - alpha1 / 2.
real beta1_from_alpha1(real alpha1);

/// CSV rows (abscissa, estimate) with a leading '#' line naming the regime,
/// formula and constants.
struct Sample {
    real at;
    real value;
};
void write_csv(std::ostream& os, const AsymptoticQuery& q, const std::string& formula, const std::string& abscissa,
               const std::vector<Sample>& rows);

}  // namespace nlh::asymptotics
