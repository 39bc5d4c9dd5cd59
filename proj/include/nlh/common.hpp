#pragma once

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlh {

// Solver arithmetic is 80-bit extended: coefficient tails must survive
// decay far below the double range (e^{-k y} with y of order t in heat death).
using real = long double;
using cplx = std::complex<real>;
using cd = std::complex<double>;

constexpr real pi_l = 3.141592653589793238462643383279502884L;

enum class ErrorKind { config, numerical, under_resolved, domain };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

/// Formats a double with 17 significant digits (round-trip exact).
std::string fmt17(double v);

/// Splits a CSV line on commas; no quoting support.
std::vector<std::string> split_csv(const std::string& line);

/// Parses a double, throwing a config error with context on failure.
double parse_double(const std::string& s, const std::string& what);

}  // namespace nlh
