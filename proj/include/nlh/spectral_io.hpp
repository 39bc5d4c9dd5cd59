#pragma once

#include "nlh/spectral.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace nlh::spectral {

/// Binary checkpoint: 8-byte magic "NLHCKPT1", u32 format version, u32
/// representation (0 = U, 1 = V), i64 N, f64 t, then c_k for k = -N..N as
/// (re, im) f64 pairs; little-endian throughout. Values below the double
/// range are flushed to zero.
void write_checkpoint(const std::string& path, const FourierState& s);
FourierState read_checkpoint(const std::string& path);

constexpr unsigned checkpoint_version = 1;

/// Rows t,k,re,im,rep,floor for k = 0..N of each state (c_{-k} = conj(c_k)).
/// 17 significant digits; extended exponents are kept as printed.
void write_coeff_csv(std::ostream& os, const std::vector<FourierState>& states);
std::vector<FourierState> read_coeff_csv(std::istream& is);

/// 17-significant-digit text for extended values (exponent range kept).
std::string fmt17l(real v);

}  // namespace nlh::spectral
