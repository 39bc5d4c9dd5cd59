#pragma once

#include "nlh/spectral.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace nlh::continuation {

using spectral::FourierState;

/// Coefficients a_j of g(w) = c_0/2 + sum_{k>=1} c_k w^k, w = e^{iz}, so that
/// u(z) = g(w) + conj(g(1/conj(w))).
struct HalfSeries {
    std::vector<cplx> a;
    int M() const { return static_cast<int>(a.size()) - 1; }
};

HalfSeries split_series(const FourierState& s);
/// Direct summation of g(w) + conj(g(1/conj w)); only meaningful where both converge.
cplx reconstruct(const HalfSeries& g, cplx z);

cplx polyval(const std::vector<cplx>& p, cplx w);
/// Roots by companion-matrix eigenvalues followed by Newton polishing.
/// Highest-order coefficients below 1e-18 of the largest are dropped first.
std::vector<cplx> poly_roots(const std::vector<cplx>& p);

/// Upper-half-plane image of a w-plane point: z = arg w + i |log |w||.
cplx w_to_upper_z(cplx w);

struct Pole {
    cplx w;          // root of the denominator
    cplx z;          // upper-half-plane location
    cplx residue_w;  // residue of R at w
    cplx residue_z;  // residue of u at z
};

struct RationalApproximant {
    std::vector<cplx> num;  // p_0..p_m
    std::vector<cplx> den;  // q_0 = 1, q_1..q_n
    int m = 0;
    int n = 0;
    std::vector<Pole> poles;
    int filtered = 0;  // pole-zero pairs / negligible poles removed
    bool reduced = false;
    std::string note;
};

struct PadeOptions {
    /// Relative singular-value cutoff for the degree reduction.
    real svd_tol = 1e-14L;
    /// Froissart filter: pole-zero distance and negligible-residue cutoffs.
    real doublet_distance = 1e-8L;
    real residue_floor = 1e-10L;
    /// Poles with |residue| above this fraction of the largest are always kept.
    real keep_fraction = 1e-6L;
};

/// Linearised [m/n] Padé by SVD with automatic degree reduction, then
/// Froissart filtering. Requires m + n + 1 <= M.
RationalApproximant pade(const HalfSeries& g, int m, int n, const PadeOptions& opt = {});

cplx eval_rational(const RationalApproximant& r, cplx w);
/// u(z) from the rational approximant of g; infinite values are flagged.
cplx evaluate(const RationalApproximant& r, cplx z, bool* infinite = nullptr);

struct QuadraticApproximant {
    std::vector<cplx> p, q, r;  // p + q g + r g^2 = O(w^{l+m+n+2})
    std::vector<cplx> discriminant;
    std::vector<cplx> discriminant_roots;
    /// Simple roots of the discriminant (clusters of coincident roots are
    /// common factors or multiple points, not square-root branch points).
    std::vector<cplx> branch_w;
    std::vector<cplx> branch_z;  // upper-half-plane images
    bool degenerate = false;     // r == 0: reduces to a linear relation
    std::string note;
};

/// Null vector of the stacked system via SVD, scaled so max |coefficient| = 1.
/// Requires l + m + n + 2 <= M. Discriminant roots closer than
/// cluster_tol * max(1, |w|) to another root are not reported as branch points.
QuadraticApproximant quadratic_pade(const HalfSeries& g, int l, int m, int n, real cluster_tol = 1e-5L);

/// Both roots (-q +- sqrt(q^2 - 4 p r)) / (2 r); the linear root when r(w) = 0.
std::pair<cplx, cplx> quadratic_roots(const QuadraticApproximant& qa, cplx w);
/// Branch of g continued from w_start (where the series picks the branch)
/// along the straight segment to w_end, taking the root nearest the previous
/// value at every step.
cplx continue_branch(const QuadraticApproximant& qa, cplx w_start, cplx g_start, cplx w_end, int steps = 64);

struct StripGrid {
    real x0 = -pi_l, x1 = pi_l, y0 = 0, y1 = 1;
    int nx = 64, ny = 64;
    cplx at(int i, int j) const;  // i along x, j along y
};

struct FieldGrid {
    StripGrid grid;
    std::vector<cplx> values;  // row-major: values[j * nx + i]
    std::vector<unsigned char> infinite;
};

FieldGrid evaluate_field(const RationalApproximant& r, const StripGrid& grid);
/// Branches fixed on the real axis by the series and continued upward in each column.
FieldGrid evaluate_field(const QuadraticApproximant& qa, const HalfSeries& g, const StripGrid& grid);
/// Evaluation of the quadratic approximant at scattered points (each continued from Re z).
cplx evaluate(const QuadraticApproximant& qa, const HalfSeries& g, cplx z);

/// Accumulated phase change of a closed sequence of values (last wraps to first).
real phase_winding(const std::vector<cplx>& loop_values);
/// Phase in [-pi, pi).
real phase(cplx v);

/// Rows Re z, Im z, |u|, arg u (arg in [-pi, pi)); infinite points print inf and nan.
void write_field_csv(std::ostream& os, const FieldGrid& f);
/// Little-endian: i64 nx, i64 ny, f64 x0, x1, y0, y1, then (|u|, arg u) f64
/// pairs row-major (ny rows of nx points).
void write_field_binary(const std::string& path, const FieldGrid& f);
FieldGrid read_field_binary(const std::string& path);
/// Rows Re z, Im z, Re residue, Im residue, kind (pole or branch).
void write_pole_csv(std::ostream& os, const RationalApproximant* r, const QuadraticApproximant* qa);

}  // namespace nlh::continuation
