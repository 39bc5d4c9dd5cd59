#include "nlh/spectral_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace nlh::spectral {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char magic[8] = {'N', 'L', 'H', 'C', 'K', 'P', 'T', '1'};

template <class T>
void put(std::ostream& os, T v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is, const std::string& path)
{
    T v;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) fail(ErrorKind::config, "checkpoint truncated: " + path);
    return v;
}

real parse_real(const std::string& s)
{
    char* end = nullptr;
    real v = std::strtold(s.c_str(), &end);
    if (end == s.c_str()) fail(ErrorKind::config, "coefficient CSV: bad number '" + s + "'");
    return v;
}

}  // namespace

std::string fmt17l(real v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17Lg", v);
    return buf;
}

void write_checkpoint(const std::string& path, const FourierState& s)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::config, "cannot open checkpoint for writing: " + path);
    os.write(magic, 8);
    put<uint32_t>(os, checkpoint_version);
    put<uint32_t>(os, s.rep == Representation::U ? 0u : 1u);
    put<int64_t>(os, s.N());
    put<double>(os, static_cast<double>(s.t));
    for (int k = -s.N(); k <= s.N(); ++k) {
        cplx c = s.coeff(k);
        put<double>(os, static_cast<double>(c.real()));
        put<double>(os, static_cast<double>(c.imag()));
    }
    if (!os) fail(ErrorKind::config, "checkpoint write failed: " + path);
}

FourierState read_checkpoint(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::config, "cannot open checkpoint: " + path);
    char m[8];
    if (!is.read(m, 8) || std::memcmp(m, magic, 8) != 0) fail(ErrorKind::config, "not a checkpoint file: " + path);
    auto version = get<uint32_t>(is, path);
    if (version != checkpoint_version) fail(ErrorKind::config, "unsupported checkpoint version in " + path);
    auto rep = get<uint32_t>(is, path);
    auto N = get<int64_t>(is, path);
    if (rep > 1 || N < 0 || N > (1 << 26)) fail(ErrorKind::config, "corrupt checkpoint header: " + path);
    FourierState s;
    s.rep = rep == 0 ? Representation::U : Representation::V;
    s.t = get<double>(is, path);
    s.c.assign(N + 1, cplx(0));
    for (int64_t k = -N; k <= N; ++k) {
        double re = get<double>(is, path);
        double im = get<double>(is, path);
        if (k >= 0) s.c[k] = cplx(re, im);
    }
    s.c[0] = {s.c[0].real(), 0};
    s.noise_floor = std::numeric_limits<double>::epsilon();
    return s;
}

void write_coeff_csv(std::ostream& os, const std::vector<FourierState>& states)
{
    os << "t,k,re,im,rep,floor\n";
    for (const auto& s : states)
        for (int k = 0; k <= s.N(); ++k)
            os << fmt17l(s.t) << ',' << k << ',' << fmt17l(s.c[k].real()) << ',' << fmt17l(s.c[k].imag()) << ','
               << to_string(s.rep) << ',' << fmt17l(s.noise_floor) << '\n';
}

std::vector<FourierState> read_coeff_csv(std::istream& is)
{
    std::vector<FourierState> out;
    std::string line;
    if (!std::getline(is, line)) fail(ErrorKind::config, "coefficient CSV: empty input");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 6) fail(ErrorKind::config, "coefficient CSV: expected 6 columns");
        real t = parse_real(f[0]);
        int k = std::atoi(f[1].c_str());
        Representation rep = f[4] == "V" ? Representation::V : Representation::U;
        if (k == 0) {
            FourierState s;
            s.t = t;
            s.rep = rep;
            s.noise_floor = parse_real(f[5]);
            out.push_back(s);
        }
        if (out.empty() || static_cast<int>(out.back().c.size()) != k)
            fail(ErrorKind::config, "coefficient CSV: rows out of order");
        out.back().c.emplace_back(parse_real(f[2]), parse_real(f[3]));
    }
    return out;
}

}  // namespace nlh::spectral
