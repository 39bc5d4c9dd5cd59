#pragma once

#include "nlh/common.hpp"

#include <iosfwd>
#include <vector>

// Equianharmonic Weierstrass function p(z; g2 = 0, g3 = 1) and the lattice
// comparison for far-field singularities of phi'' - phi' = phi^2.
namespace nlh::weierstrass {

/// Real half-period Gamma(1/3)^3 / (4 pi).
real omega1();
/// e^{i pi/3} omega1.
cplx omega3();

struct WpValue {
    cplx p, dp;
    bool infinite = false;  // z is a lattice point
};

/// Laurent series near 0, then duplication; lattice reduction by rounding in
/// period coordinates.
WpValue wp(cplx z);
inline cplx weierstrass_p(cplx z) { return wp(z).p; }

/// Laurent coefficients c_n of p = z^{-2} + sum_{n>=2} c_n z^{2n-2}.
std::vector<real> laurent_coeffs(int n_max);

struct WeierstrassLattice {
    cplx alpha = 1;  // r e^{i theta}
    cplx xi0 = 0;
    /// xi = -xi0 + 6^{1/3} alpha (2 N omega1 + 2 M omega3)
    cplx point(long N, long M) const;
    /// Shortest distance between lattice points, |6^{1/3} alpha 2 omega1|.
    real spacing() const;
    static WeierstrassLattice from_polar(real r, real theta, cplx xi0);
    /// Offset given as a shift of the scaled argument: poles where
    /// xi / (6^{1/3} alpha) - shift is a period of p, so xi0 = -6^{1/3} alpha shift.
    static WeierstrassLattice from_argument_shift(real r, real theta, cplx shift);
    cplx argument_shift() const;
};

struct LatticeMatch {
    cplx zeta;     // singularity
    cplx xi;       // e^{zeta / 5}
    cplx nearest;  // lattice point
    long N = 0, M = 0;
    real distance = 0;
    real relative = 0;  // distance / spacing
};

struct LatticeReport {
    std::vector<LatticeMatch> matches;
    real median_relative = 0;
    real mean_relative = 0;
    real max_relative = 0;
};

/// Maps each singularity by xi = e^{zeta/5} and finds the nearest lattice point.
LatticeReport lattice_compare(const std::vector<cplx>& zeta, const WeierstrassLattice& lat);
/// Nearest lattice point to a point already in the xi plane.
LatticeMatch nearest_lattice_point(cplx xi, const WeierstrassLattice& lat);

/// Least squares over matched pairs: starting from `initial`, alternately
/// match every mapped singularity to its nearest lattice point and solve the
/// linear problem xi = -xi0 + 6^{1/3} alpha (2 N omega1 + 2 M omega3) for
/// (xi0, alpha), until the matching stops changing.
struct LatticeFit {
    WeierstrassLattice lattice;
    LatticeReport report;  // against the fitted lattice
    int iterations = 0;
};
LatticeFit fit_lattice(const std::vector<cplx>& zeta, const WeierstrassLattice& initial, int max_iterations = 50);

/// Rows re_zeta,im_zeta,re_xi,im_xi,re_lattice,im_lattice,relative_distance.
void write_lattice_csv(std::ostream& os, const LatticeReport& r);

}  // namespace nlh::weierstrass
