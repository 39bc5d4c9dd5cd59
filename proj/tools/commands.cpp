#include "commands.hpp"

#include "nlh/asymptotics.hpp"
#include "nlh/ode.hpp"
#include "nlh/pade.hpp"
#include "nlh/spectral.hpp"
#include "nlh/spectral_io.hpp"
#include "nlh/tracker.hpp"
#include "nlh/weierstrass.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

namespace nlh::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const char* const program_version = "1.0.0";

const std::vector<KeyDef> shared_keys = {
    {"command", "", "command name; must match the subcommand when given"},
    {"out", "", "output directory (relative paths live under $NLH_OUTPUT_ROOT)"},
};

std::vector<KeyDef> with_shared(std::vector<KeyDef> v)
{
    v.insert(v.begin(), shared_keys.begin(), shared_keys.end());
    return v;
}

const std::vector<KeyDef> asym_params = {
    {"preset", "none", "named constant set (fig16 or none)"},
    {"alpha", "", "amplitude, or mean level for flat data"},
    {"beta", "", "mean of cosine data"},
    {"eps", "", "small amplitude"},
    {"t_c", "", "blow-up time"},
    {"s", "", "fourth small-amplitude time variable"},
    {"C", "", "fitted blow-up constant"},
    {"beta1", "", "fitted blow-up constant"},
    {"zeta_star", "", "regime singularity constant"},
    {"zeta_tilde_star", "", "exponential-IC singularity"},
    {"heat_A", "", "amplitude of the heat-death tail"},
    {"heat_offset", "", "O(1) term of t + 2 log t"},
};

const std::map<std::string, std::vector<KeyDef>>& key_tables()
{
    static const std::map<std::string, std::vector<KeyDef>> tables = [] {
        std::map<std::string, std::vector<KeyDef>> m;
        m["solve"] = with_shared({
            {"ic", "cosine", "cosine, flat or twopeak"},
            {"alpha", "", "cosine: amplitude (1); flat: mean level (1); twopeak: height (6)"},
            {"beta", "", "cosine: mean (0)"},
            {"eps", "", "flat: amplitude (0.001)"},
            {"mu", "", "twopeak: peak sharpness (50)"},
            {"delta", "", "twopeak: half separation (0.4363 pi)"},
            {"N", "128", "initial truncation order"},
            {"t_end", "100", "final time"},
            {"rtol", "1e-10", "relative step tolerance"},
            {"atol", "1e-12", "absolute step tolerance"},
            {"scheme", "lawson_dp5", "lawson_dp5 or dp5"},
            {"allow_switch", "true", "switch to v = 1/u when u grows"},
            {"switch_threshold", "1000", "max u that triggers the switch"},
            {"blowup_threshold", "1e-10", "min v / max v that ends the run"},
            {"heat_death_floor", "0.001", "max |u| that ends a negative run"},
            {"resolution_ratio", "1e-8", "tail ratio flagged as under-resolved"},
            {"auto_refine", "true", "double N when the tail grows"},
            {"refine_ratio", "1e-15", "tail ratio that triggers refinement"},
            {"N_max", "16384", "refinement limit"},
            {"snapshot_dt", "0.05", "snapshot spacing (0: start and end only)"},
            {"max_steps", "5000000", "step budget"},
        });
        m["track"] = with_shared({
            {"input", "", "coefficient CSV, or a solve output directory"},
            {"k_min", "0", "fit window start (0: automatic)"},
            {"k_max", "0", "fit window end (0: automatic)"},
            {"kmin_floor", "4", "smallest automatic k_min"},
            {"kmin_fraction", "0.2", "automatic k_min as a fraction of N"},
            {"floor_factor", "1000", "modes above this multiple of the noise floor are used"},
            {"weighted", "false", "weight residuals by k"},
            {"reversal_tol", "0", "dy below this keeps the previous direction"},
        });
        m["continue"] = with_shared({
            {"input", "", "checkpoint file, or a solve output directory"},
            {"method", "pade", "pade or quadratic"},
            {"l", "", "quadratic: degree of p (min((N-2)/3, 20))"},
            {"m", "", "numerator degree (pade: min((N-1)/2, 40)) or degree of q (quadratic)"},
            {"n", "", "denominator degree (pade) or degree of r (quadratic)"},
            {"svd_tol", "1e-14", "pade: degree reduction cutoff"},
            {"x0", "-3.1415926535897932", "field grid"},
            {"x1", "3.1415926535897932", "field grid"},
            {"y0", "0", "field grid"},
            {"y1", "1", "field grid"},
            {"nx", "129", "field grid"},
            {"ny", "65", "field grid"},
        });
        m["ode"] = with_shared({
            {"ic", "log", "log or exp"},
            {"anchor", "", "where the asymptotic data are summed (log: 50, exp: -5)"},
            {"a", "1", "exp: coefficient of e^x"},
            {"x0", "0", "log: free constant"},
            {"path", "", "real-left, real-right, file or columns (log: real-left, exp: real-right)"},
            {"x_end", "", "real paths: end point (real-left: -1, real-right: 6)"},
            {"path_file", "", "file path: waypoint CSV re_x,im_x starting at the anchor"},
            {"order", "16", "Taylor degree per step"},
            {"safety", "0.5", "step fraction of the nearest local pole distance"},
            {"h_max", "0.5", "largest step"},
            {"residual_tol", "1e-10", "accepted residual"},
            {"detour_radius", "0.05", "semicircle radius around poles on the path"},
            {"confirm_hits", "3", "detections before a pole counts"},
            {"confirm_distance", "0.1", "closest approach before a pole counts"},
            {"x_left", "", "columns: region (log: -8, exp: -5)"},
            {"x_right", "", "columns: region (log: 15, exp: 12)"},
            {"y_low", "", "columns: base row height (log: 0.1, exp: 0)"},
            {"y_high", "", "columns: region top (log: 10, exp: 6.3)"},
            {"columns", "", "columns: count (log: 47, exp: 69)"},
            {"far_field", "", "columns: lattice comparison uses Re x >= this (log: 6, exp: 3)"},
            {"lattice_r", "", "columns: |alpha| (log: 0.2087, exp: 0.28910)"},
            {"lattice_theta", "", "columns: arg alpha (log: 0.2524, exp: 0.1066)"},
            {"lattice_shift_re", "", "columns: argument shift (log: -0.5113, exp: -0.603)"},
            {"lattice_shift_im", "", "columns: argument shift (log: 0.03149, exp: -0.2574)"},
            {"lattice_fit", "true", "columns: also fit the lattice by least squares"},
        });
        {
            std::vector<KeyDef> v = {
                {"regime", "small_time", "regime name"},
                {"quantity", "sigma", "sigma (height against t) or profile (u against x)"},
                {"from", "", "abscissa start (sigma: 0.02, profile: 0)"},
                {"to", "", "abscissa end (sigma: 0.1, profile: 3.1415926535897932)"},
                {"samples", "101", "number of abscissae"},
                {"t", "", "profile: time"},
            };
            v.insert(v.end(), asym_params.begin(), asym_params.end());
            m["asym"] = with_shared(v);
        }
        {
            std::vector<KeyDef> v = {
                {"track", "", "tracker CSV, or a track output directory"},
                {"regimes", "small_time", "comma separated regime names"},
                {"reference", "", "optional second tracker CSV compared like a regime"},
                {"t_min", "", "window start (default: first ok fit)"},
                {"t_max", "", "window end (default: last ok fit)"},
            };
            v.insert(v.end(), asym_params.begin(), asym_params.end());
            m["compare"] = with_shared(v);
        }
        m["sweep"] = with_shared({
            {"configs", "", "comma separated config files, each naming its command"},
            {"jobs", "", "worker threads (default: hardware concurrency)"},
        });
        return m;
    }();
    return tables;
}

// ---------------------------------------------------------------------------

struct Run {
    std::string command;
    KeyValueConfig user;  // as given
    KeyValueConfig cfg;   // resolved
    fs::path dir;
    json results = json::object();
    std::vector<std::string> warnings;
    std::vector<std::string> outputs;

    std::string str(const std::string& k) const { return cfg.get(k); }
    bool given(const std::string& k) const { return !cfg.get(k).empty(); }

    void derive(const std::string& k, const std::string& v)
    {
        if (!given(k)) cfg.set(k, v);
    }

    real num(const std::string& k) const
    {
        const std::string s = cfg.get(k);
        if (s.empty()) fail(ErrorKind::config, "missing value for '" + k + "'");
        char* end = nullptr;
        errno = 0;
        const real v = std::strtold(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0' || errno == ERANGE)
            fail(ErrorKind::config, "'" + k + "': not a number: " + s);
        return v;
    }
    std::optional<real> opt_num(const std::string& k) const
    {
        if (!given(k)) return std::nullopt;
        return num(k);
    }
    long integer(const std::string& k) const
    {
        const real v = num(k);
        if (v != std::floor(v)) fail(ErrorKind::config, "'" + k + "': not an integer: " + cfg.get(k));
        return static_cast<long>(v);
    }
    bool flag(const std::string& k) const
    {
        const std::string s = cfg.get(k);
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        fail(ErrorKind::config, "'" + k + "': not a boolean: " + s);
    }
    void require(const std::string& k) const
    {
        if (!given(k)) fail(ErrorKind::config, "'" + k + "' is required");
    }

    std::ofstream open(const std::string& name)
    {
        const fs::path p = dir / name;
        std::ofstream os(p, std::ios::binary);
        if (!os) fail(ErrorKind::config, "cannot write " + p.string());
        outputs.push_back(name);
        return os;
    }
    fs::path file(const std::string& name)
    {
        outputs.push_back(name);
        return dir / name;
    }
};

double d(real v) { return static_cast<double>(v); }

// Values outside double range would turn into inf/0 in JSON; keep them as text.
json jnum(real v)
{
    const double x = d(v);
    if (!std::isfinite(x) || (x == 0 && v != 0)) return spectral::fmt17l(v);
    return x;
}

std::string fmt(real v) { return spectral::fmt17l(v); }

fs::path resolve_out(const std::string& out, const std::string& command)
{
    fs::path p = out.empty() ? fs::path(command) : fs::path(out);
    if (p.is_relative()) {
        if (const char* root = std::getenv(output_root_env); root && *root) p = fs::path(root) / p;
    }
    return p;
}

fs::path input_file(const std::string& in, const std::string& default_name)
{
    fs::path p(in);
    if (fs::is_directory(p)) p /= default_name;
    if (!fs::exists(p)) fail(ErrorKind::config, "input not found: " + p.string());
    return p;
}

// ---------------------------------------------------------------------------

void run_solve(Run& r)
{
    using namespace spectral;
    const std::string ic = r.str("ic");
    const std::set<std::string> used_by = [&]() -> std::set<std::string> {
        if (ic == "cosine") return {"alpha", "beta"};
        if (ic == "flat") return {"alpha", "eps"};
        if (ic == "twopeak") return {"alpha", "mu", "delta"};
        fail(ErrorKind::config, "ic must be cosine, flat or twopeak, not '" + ic + "'");
    }();
    for (const char* k : {"alpha", "beta", "eps", "mu", "delta"})
        if (!used_by.count(k)) {
            if (r.user.has(k)) r.warnings.push_back(std::string("'") + k + "' is not used by ic " + ic);
            r.cfg.set(k, "unused");
        }

    InitialDataSpec spec;
    if (ic == "cosine") {
        r.derive("alpha", "1");
        r.derive("beta", "0");
        spec = Cosine{r.num("alpha"), r.num("beta")};
    } else if (ic == "flat") {
        r.derive("alpha", "1");
        r.derive("eps", "0.001");
        spec = Flat{r.num("alpha"), r.num("eps")};
    } else {
        r.derive("alpha", "6");
        r.derive("mu", "50");
        r.derive("delta", fmt(0.4363L * pi_l));
        spec = TwoPeak{r.num("alpha"), r.num("mu"), r.num("delta")};
    }

    const long N = r.integer("N");
    if (N < 8) fail(ErrorKind::config, "N must be at least 8");
    SolverOptions o;
    o.rtol = r.num("rtol");
    o.atol = r.num("atol");
    const std::string scheme = r.str("scheme");
    if (scheme == "lawson_dp5") o.scheme = Scheme::lawson_dp5;
    else if (scheme == "dp5") o.scheme = Scheme::dp5;
    else fail(ErrorKind::config, "scheme must be lawson_dp5 or dp5");
    o.allow_switch = r.flag("allow_switch");
    o.switch_threshold = r.num("switch_threshold");
    o.blowup_threshold = r.num("blowup_threshold");
    o.heat_death_floor = r.num("heat_death_floor");
    o.resolution_ratio = r.num("resolution_ratio");
    o.auto_refine = r.flag("auto_refine");
    o.refine_ratio = r.num("refine_ratio");
    o.N_max = static_cast<int>(r.integer("N_max"));
    o.snapshot_dt = r.num("snapshot_dt");
    o.max_steps = r.integer("max_steps");
    const real t_end = r.num("t_end");
    if (!(t_end > 0)) fail(ErrorKind::config, "t_end must be positive");

    const FourierState s0 = init_state(spec, static_cast<int>(N));
    const SolveTrajectory tr = advance(s0, t_end, o);
    for (const auto& w : tr.warnings) r.warnings.push_back(w);

    const FourierState& last = tr.final_state();
    write_checkpoint(r.file("checkpoint.bin").string(), last);
    {
        auto os = r.open("coeffs.csv");
        write_coeff_csv(os, tr.snapshots);
    }
    {
        auto os = r.open("history.csv");
        os << "t,h,grid_min,grid_max,rep,N\n";
        for (const auto& h : tr.history)
            os << fmt(h.t) << ',' << fmt(h.h) << ',' << fmt(h.grid_min) << ',' << fmt(h.grid_max) << ','
               << to_string(h.rep) << ',' << h.N << '\n';
    }

    r.results["termination"] = to_string(tr.termination);
    r.results["t_final"] = jnum(last.t);
    r.results["N_final"] = last.N();
    r.results["representation_final"] = to_string(last.rep);
    r.results["snapshots"] = tr.snapshots.size();
    r.results["steps_accepted"] = tr.stats.accepted;
    r.results["steps_rejected"] = tr.stats.rejected;
    r.results["refinements"] = tr.stats.refinements;
    r.results["switches"] = tr.stats.switches;
    r.results["tail_ratio_final"] = jnum(last.tail_ratio());
    if (tr.blowup) {
        r.results["t_c"] = jnum(tr.blowup->t_c);
        r.results["t_c_lo"] = jnum(tr.blowup->lo);
        r.results["t_c_hi"] = jnum(tr.blowup->hi);
        r.results["t_c_text"] = fmt(tr.blowup->t_c);
    }
    if (tr.termination == Termination::under_resolved)
        fail(ErrorKind::under_resolved, "run stopped under-resolved at t = " + fmt(last.t));
    // the solver keeps going after flagging a tail it cannot refine away
    for (const auto& w : tr.warnings)
        if (w.rfind("under-resolved", 0) == 0) fail(ErrorKind::under_resolved, w);
}

// ---------------------------------------------------------------------------

void run_track(Run& r)
{
    r.require("input");
    const fs::path in = input_file(r.str("input"), "coeffs.csv");
    std::ifstream is(in);
    const auto states = spectral::read_coeff_csv(is);
    if (states.empty()) fail(ErrorKind::config, "no states in " + in.string());

    tracker::WindowPolicy p;
    p.k_min = static_cast<int>(r.integer("k_min"));
    p.k_max = static_cast<int>(r.integer("k_max"));
    p.kmin_floor = static_cast<int>(r.integer("kmin_floor"));
    p.kmin_fraction = r.num("kmin_fraction");
    p.floor_factor = r.num("floor_factor");
    p.weighted = r.flag("weighted");

    tracker::Track tr = tracker::track(states, p);
    std::vector<real> t, y;
    int failed = 0, under = 0;
    for (const auto& e : tr.estimates) {
        if (!e.ok) {
            ++failed;
            r.warnings.push_back("fit failed at t = " + fmt(e.t) + ": " + e.note);
            continue;
        }
        if (e.under_resolved) ++under;
        t.push_back(e.t);
        y.push_back(e.y_star);
    }
    tr.reversal_times = tracker::reversal_times(t, y, r.num("reversal_tol"));
    {
        auto os = r.open("track.csv");
        tracker::write_track_csv(os, tr);
    }
    r.results["fits"] = tr.estimates.size();
    r.results["fits_failed"] = failed;
    r.results["fits_under_resolved"] = under;
    json rev = json::array();
    for (real v : tr.reversal_times) rev.push_back(jnum(v));
    r.results["reversal_times"] = rev;
    r.results["reversals"] = tr.reversal_times.size();
    if (under) r.warnings.push_back(std::to_string(under) + " fits flagged under-resolved");
    if (t.empty()) fail(ErrorKind::numerical, "no successful fit");
}

// ---------------------------------------------------------------------------

void run_continue(Run& r)
{
    using namespace continuation;
    r.require("input");
    const fs::path in = input_file(r.str("input"), "checkpoint.bin");
    const auto s = spectral::as_u(spectral::read_checkpoint(in.string()));
    const HalfSeries g = split_series(s);
    const int M = g.M();

    StripGrid grid;
    grid.x0 = r.num("x0");
    grid.x1 = r.num("x1");
    grid.y0 = r.num("y0");
    grid.y1 = r.num("y1");
    grid.nx = static_cast<int>(r.integer("nx"));
    grid.ny = static_cast<int>(r.integer("ny"));
    if (grid.nx < 2 || grid.ny < 2 || !(grid.x1 > grid.x0) || !(grid.y1 > grid.y0))
        fail(ErrorKind::config, "field grid needs x1 > x0, y1 > y0 and at least 2 points each way");

    r.results["t"] = jnum(s.t);
    r.results["series_order"] = M;
    const std::string method = r.str("method");
    FieldGrid f;
    if (method == "pade") {
        r.cfg.set("l", "unused");
        const std::string half = std::to_string(std::min((M - 1) / 2, 40));
        r.derive("m", half);
        r.derive("n", half);
        PadeOptions po;
        po.svd_tol = r.num("svd_tol");
        const auto ra = pade(g, static_cast<int>(r.integer("m")), static_cast<int>(r.integer("n")), po);
        if (!ra.note.empty()) r.warnings.push_back(ra.note);
        {
            auto os = r.open("poles.csv");
            write_pole_csv(os, &ra, nullptr);
        }
        f = evaluate_field(ra, grid);
        r.results["degrees"] = {ra.m, ra.n};
        r.results["poles"] = ra.poles.size();
        r.results["filtered"] = ra.filtered;
        json near = nullptr;
        for (const auto& p : ra.poles)
            if (near.is_null() || std::abs(p.z.imag()) < near["im"].get<double>())
                near = {{"re", d(p.z.real())}, {"im", d(p.z.imag())}};
        r.results["nearest_pole"] = near;
    } else if (method == "quadratic") {
        r.cfg.set("svd_tol", "unused");
        const std::string third = std::to_string(std::min((M - 2) / 3, 20));
        r.derive("l", third);
        r.derive("m", third);
        r.derive("n", third);
        const auto qa = quadratic_pade(g, static_cast<int>(r.integer("l")), static_cast<int>(r.integer("m")),
                                       static_cast<int>(r.integer("n")));
        if (!qa.note.empty()) r.warnings.push_back(qa.note);
        {
            auto os = r.open("poles.csv");
            write_pole_csv(os, nullptr, &qa);
        }
        f = evaluate_field(qa, g, grid);
        r.results["branch_points"] = qa.branch_z.size();
        r.results["degenerate"] = qa.degenerate;
        json near = nullptr;
        for (const auto& z : qa.branch_z)
            if (near.is_null() || std::abs(z.imag()) < near["im"].get<double>())
                near = {{"re", d(z.real())}, {"im", d(z.imag())}};
        r.results["nearest_branch_point"] = near;
    } else {
        fail(ErrorKind::config, "method must be pade or quadratic");
    }
    {
        auto os = r.open("field.csv");
        write_field_csv(os, f);
    }
    write_field_binary(r.file("field.bin").string(), f);
}

// ---------------------------------------------------------------------------

json singularity_json(const ode::Singularity& s)
{
    return {{"re", d(s.x.real())}, {"im", d(s.x.imag())}, {"sheet", s.sheet}, {"hits", s.hits}};
}

void run_ode(Run& r)
{
    using namespace ode;
    const std::string ic = r.str("ic");
    const bool is_log = ic == "log";
    if (!is_log && ic != "exp") fail(ErrorKind::config, "ic must be log or exp");
    r.derive("path", is_log ? "real-left" : "real-right");
    const std::string path = r.str("path");

    PathOptions o;
    o.order = static_cast<int>(r.integer("order"));
    o.safety = r.num("safety");
    o.h_max = r.num("h_max");
    o.residual_tol = r.num("residual_tol");
    o.detour_radius = r.num("detour_radius");
    o.confirm_hits = static_cast<int>(r.integer("confirm_hits"));
    o.confirm_distance = r.num("confirm_distance");
    if (o.order < 4 || o.order % 2) fail(ErrorKind::config, "order must be even and at least 4");

    const std::vector<std::string> column_keys = {"x_left",   "x_right",       "y_low",
                                                  "y_high",   "columns",       "far_field",
                                                  "lattice_r", "lattice_theta", "lattice_shift_re",
                                                  "lattice_shift_im", "lattice_fit"};
    auto unused = [&](const std::vector<std::string>& keys) {
        for (const auto& k : keys) {
            if (r.user.has(k)) r.warnings.push_back("'" + k + "' is not used by this path");
            r.cfg.set(k, "unused");
        }
    };

    if (is_log) r.cfg.set("a", "unused");
    else r.cfg.set("x0", "unused");

    auto make_ic = [&](real anchor) {
        return is_log ? series_ic_logarithmic(anchor, r.num("x0")) : series_ic_exponential(r.num("a"), anchor);
    };

    if (path == "real-left" || path == "real-right" || path == "file") {
        unused(column_keys);
        std::vector<cplx> wp;
        SeriesIC sic;
        if (path == "file") {
            r.cfg.set("x_end", "unused");
            r.require("path_file");
            std::ifstream is(r.str("path_file"));
            if (!is) fail(ErrorKind::config, "cannot read " + r.str("path_file"));
            wp = read_path_csv(is);
            if (wp.size() < 2) fail(ErrorKind::config, "path file needs at least two waypoints");
            if (wp.front().imag() != 0) fail(ErrorKind::config, "the first waypoint must be the real anchor");
            if (r.given("anchor") && r.num("anchor") != wp.front().real())
                fail(ErrorKind::config, "anchor differs from the first waypoint");
            r.cfg.set("anchor", fmt(wp.front().real()));
            sic = make_ic(wp.front().real());
        } else {
            r.cfg.set("path_file", "unused");
            r.derive("anchor", is_log ? "50" : "-5");
            r.derive("x_end", path == "real-left" ? "-1" : "6");
            const real a = r.num("anchor"), e = r.num("x_end");
            if ((path == "real-left") != (e < a))
                fail(ErrorKind::config, path + " needs x_end " + (path == "real-left" ? "<" : ">") + " anchor");
            sic = make_ic(a);
            wp = {cplx(a), cplx(e)};
        }
        if (!sic.converged) r.warnings.push_back("asymptotic series truncated: " + sic.note);
        r.results["ic_terms"] = sic.terms_used;
        r.results["ic_first_omitted"] = jnum(sic.first_omitted);
        r.results["ic_phi"] = {d(sic.phi.real()), d(sic.phi.imag())};
        r.results["ic_dphi"] = {d(sic.dphi.real()), d(sic.dphi.imag())};

        const OdePathSolution sol = integrate_path(sic, wp, o);
        for (const auto& w : sol.warnings) r.warnings.push_back(w);
        {
            auto os = r.open("singularities.csv");
            write_singularity_csv(os, sol.singularities);
        }
        {
            auto os = r.open("solution.csv");
            write_solution_csv(os, sol);
        }
        json sing = json::array();
        for (const auto& s : sol.singularities) sing.push_back(singularity_json(s));
        r.results["singularities"] = sing;
        r.results["steps"] = sol.steps.size();
        r.results["final_sheet"] = sol.sheet();
        r.results["final_phi"] = {d(sol.steps.back().phi.real()), d(sol.steps.back().phi.imag())};
        const int first = first_real_singularity(sol);
        if (first >= 0) {
            json fr = singularity_json(sol.singularities[first]);
            fr["text"] = fmt(sol.singularities[first].x.real());
            try {
                const auto loc = locate_singularity(sol, static_cast<size_t>(first), o);
                fr["refined_re"] = d(loc.x.real());
                fr["refined_im"] = d(loc.x.imag());
                fr["leading"] = d(loc.leading.real());
                fr["simple"] = d(loc.simple.real());
                fr["constant"] = d(loc.constant.real());
                if (!loc.warning.empty()) r.warnings.push_back(loc.warning);
            } catch (const Error& e) {
                r.warnings.push_back(std::string("local fit failed: ") + e.what());
            }
            r.results["first_real_singularity"] = fr;
        }
        return;
    }
    if (path != "columns") fail(ErrorKind::config, "path must be real-left, real-right, file or columns");

    for (const char* k : {"x_end", "path_file"}) {
        if (r.user.has(k)) r.warnings.push_back(std::string("'") + k + "' is not used by the columns path");
        r.cfg.set(k, "unused");
    }
    r.derive("anchor", is_log ? "50" : r.given("x_left") ? r.str("x_left") : "-5");
    r.derive("x_left", is_log ? "-8" : r.str("anchor"));
    r.derive("x_right", is_log ? "15" : "12");
    r.derive("y_low", is_log ? "0.1" : "0");
    r.derive("y_high", is_log ? "10" : "6.3");
    r.derive("columns", is_log ? "47" : "69");
    r.derive("far_field", is_log ? "6" : "3");
    r.derive("lattice_r", is_log ? "0.2087" : "0.28910");
    r.derive("lattice_theta", is_log ? "0.2524" : "0.1066");
    r.derive("lattice_shift_re", is_log ? "-0.5113" : "-0.603");
    r.derive("lattice_shift_im", is_log ? "0.03149" : "-0.2574");

    const real xl = r.num("x_left"), y0 = r.num("y_low");
    SweepGrid g;
    g.x_right = r.num("x_right");
    g.y0 = y0;
    g.y1 = r.num("y_high");
    const int columns = static_cast<int>(r.integer("columns"));
    if (!(g.x_right > xl) || !(g.y1 > y0) || columns < 2) fail(ErrorKind::config, "empty column region");

    // Lead-in to the base row: the log solution goes round 0.05695 once from
    // below (onto the second sheet), the exponential one starts at x_left.
    OdePathSolution lead;
    if (is_log) {
        const real a = r.num("anchor");
        if (!(y0 > -1)) fail(ErrorKind::config, "y_low must exceed -1 for the log lead-in");
        lead = integrate_path(make_ic(a), {cplx(a), cplx(0.15L), cplx(0.15L, -1), cplx(xl, -1), cplx(xl, y0)}, o);
    } else {
        if (r.num("anchor") != xl) fail(ErrorKind::config, "exp columns start at the anchor: anchor must equal x_left");
        lead = integrate_path(make_ic(xl), {cplx(xl), cplx(xl, y0)}, o);
    }
    for (const auto& w : lead.warnings) r.warnings.push_back("lead-in: " + w);
    const SweepResult sw = sweep_columns(lead, g, columns, o);
    for (const auto& w : sw.warnings) r.warnings.push_back(w);
    {
        auto os = r.open("singularities.csv");
        write_singularity_csv(os, sw.singularities);
    }
    r.results["lead_in_sheet"] = lead.sheet();
    r.results["singularities_found"] = sw.singularities.size();
    r.results["failed_columns"] = sw.failed_rows;
    r.results["steps"] = sw.steps;
    if (sw.failed_rows) r.warnings.push_back(std::to_string(sw.failed_rows) + " columns failed");

    std::vector<cplx> far;
    const real cut = r.num("far_field");
    for (const auto& s : sw.singularities)
        if (s.x.real() >= cut) far.push_back(s.x);
    r.results["far_field_count"] = far.size();
    if (far.empty()) {
        r.warnings.push_back("no far-field singularities for the lattice comparison");
        return;
    }
    using namespace weierstrass;
    const auto lat = WeierstrassLattice::from_argument_shift(
        r.num("lattice_r"), r.num("lattice_theta"), cplx(r.num("lattice_shift_re"), r.num("lattice_shift_im")));
    const auto rep = lattice_compare(far, lat);
    {
        auto os = r.open("lattice.csv");
        write_lattice_csv(os, rep);
    }
    r.results["lattice_given"] = {{"median_relative", d(rep.median_relative)},
                                  {"mean_relative", d(rep.mean_relative)},
                                  {"max_relative", d(rep.max_relative)}};
    if (r.flag("lattice_fit")) {
        const auto f = fit_lattice(far, lat);
        {
            auto os = r.open("lattice_fit.csv");
            write_lattice_csv(os, f.report);
        }
        const cplx sh = f.lattice.argument_shift();
        r.results["lattice_fitted"] = {{"r", d(std::abs(f.lattice.alpha))},
                                       {"theta", d(std::arg(f.lattice.alpha))},
                                       {"shift_re", d(sh.real())},
                                       {"shift_im", d(sh.imag())},
                                       {"iterations", f.iterations},
                                       {"median_relative", d(f.report.median_relative)},
                                       {"mean_relative", d(f.report.mean_relative)},
                                       {"max_relative", d(f.report.max_relative)}};
    }
}

// ---------------------------------------------------------------------------

asymptotics::AsymptoticQuery make_query(Run& r, asymptotics::Regime regime)
{
    using namespace asymptotics;
    AsymptoticQuery q;
    const std::string pre = r.str("preset");
    if (pre != "none") {
        q = preset(pre);
        // echo the preset's constants as resolved values unless overridden
        auto echo = [&](const char* k, const std::optional<real>& v) {
            if (v) r.derive(k, fmt(*v));
        };
        echo("alpha", q.alpha);
        echo("beta", q.beta);
        echo("eps", q.eps);
        echo("t_c", q.t_c);
        echo("C", q.C);
        echo("beta1", q.beta1);
        echo("zeta_star", q.zeta_star);
        echo("zeta_tilde_star", q.zeta_tilde_star);
        echo("heat_A", q.heat_A);
        echo("heat_offset", q.heat_offset);
        echo("s", q.s);
    }
    q.regime = regime;
    q.alpha = r.opt_num("alpha");
    q.beta = r.opt_num("beta");
    q.eps = r.opt_num("eps");
    q.t_c = r.opt_num("t_c");
    q.s = r.opt_num("s");
    q.C = r.opt_num("C");
    q.beta1 = r.opt_num("beta1");
    q.zeta_star = r.opt_num("zeta_star");
    q.zeta_tilde_star = r.opt_num("zeta_tilde_star");
    q.heat_A = r.opt_num("heat_A");
    q.heat_offset = r.opt_num("heat_offset");
    return q;
}

void mark_absent(Run& r)
{
    for (const auto& k : asym_params)
        if (!r.given(k.name)) r.cfg.set(k.name, "absent");
}

void run_asym(Run& r)
{
    using namespace asymptotics;
    const Regime regime = regime_from_name(r.str("regime"));
    const std::string quantity = r.str("quantity");
    const bool sigma = quantity == "sigma";
    if (!sigma && quantity != "profile") fail(ErrorKind::config, "quantity must be sigma or profile");
    AsymptoticQuery q = make_query(r, regime);
    r.derive("from", sigma ? "0.02" : "0");
    r.derive("to", sigma ? "0.1" : "3.1415926535897932");
    if (sigma) {
        if (r.user.has("t")) r.warnings.push_back("'t' is not used by quantity sigma (t is the abscissa)");
        r.cfg.set("t", "unused");
    } else {
        q.t = r.opt_num("t");
        if (!q.t) r.cfg.set("t", "absent");
    }
    const real from = r.num("from"), to = r.num("to");
    const long n = r.integer("samples");
    if (n < 1) fail(ErrorKind::config, "samples must be positive");
    if (n > 1 && !(to > from)) fail(ErrorKind::config, "need to > from");

    std::vector<Sample> rows;
    long skipped = 0;
    for (long i = 0; i < n; ++i) {
        const real x = n == 1 ? from : from + (to - from) * static_cast<real>(i) / static_cast<real>(n - 1);
        try {
            if (sigma) {
                q.t = x;
                rows.push_back({x, sigma_estimate(q)});
            } else {
                rows.push_back({x, profile_estimate(q, x)});
            }
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::config) throw;
            if (skipped++ == 0) r.warnings.push_back(std::string("skipped points, first: ") + e.what());
        }
    }
    mark_absent(r);
    {
        auto os = r.open("asym.csv");
        write_csv(os, q, sigma ? sigma_formula(regime) : profile_formula(regime), sigma ? "t" : "x", rows);
    }
    r.results["rows"] = rows.size();
    r.results["skipped"] = skipped;
    r.results["formula"] = sigma ? sigma_formula(regime) : profile_formula(regime);
    if (rows.empty()) fail(ErrorKind::numerical, "formula undefined at every abscissa");
}

// ---------------------------------------------------------------------------

struct TrackPoint {
    real t, y;
};

std::vector<TrackPoint> ok_points(const fs::path& p)
{
    std::ifstream is(p);
    const auto tr = tracker::read_track_csv(is);
    std::vector<TrackPoint> v;
    for (const auto& e : tr.estimates)
        if (e.ok) v.push_back({e.t, e.y_star});
    return v;
}

std::optional<real> interpolate(const std::vector<TrackPoint>& v, real t)
{
    if (v.empty() || t < v.front().t || t > v.back().t) return std::nullopt;
    auto it = std::lower_bound(v.begin(), v.end(), t, [](const TrackPoint& a, real x) { return a.t < x; });
    if (it->t == t) return it->y;
    const auto& b = *it;
    const auto& a = *(it - 1);
    return a.y + (b.y - a.y) * (t - a.t) / (b.t - a.t);
}

void run_compare(Run& r)
{
    using namespace asymptotics;
    r.require("track");
    const auto pts = ok_points(input_file(r.str("track"), "track.csv"));
    if (pts.empty()) fail(ErrorKind::config, "tracker CSV has no successful fits");

    std::vector<std::string> names;
    std::vector<Regime> regimes;
    for (const auto& s : split_csv(r.str("regimes"))) {
        if (s.empty()) continue;
        regimes.push_back(regime_from_name(s));
        names.push_back(s);
    }
    std::vector<TrackPoint> ref;
    if (r.given("reference")) {
        ref = ok_points(input_file(r.str("reference"), "track.csv"));
        names.push_back("reference");
    }
    if (names.empty()) fail(ErrorKind::config, "nothing to compare: give regimes or a reference");

    std::vector<AsymptoticQuery> queries;
    for (Regime g : regimes) queries.push_back(make_query(r, g));
    mark_absent(r);
    r.derive("t_min", fmt(pts.front().t));
    r.derive("t_max", fmt(pts.back().t));
    const real t_min = r.num("t_min"), t_max = r.num("t_max");

    struct Row {
        real t, y;
        std::vector<std::optional<real>> est;
    };
    std::vector<Row> rows;
    for (const auto& p : pts) {
        if (p.t < t_min || p.t > t_max) continue;
        Row row{p.t, p.y, {}};
        for (auto& q : queries) {
            q.t = p.t;
            try {
                row.est.push_back(sigma_estimate(q));
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::config) throw;
                row.est.push_back(std::nullopt);
            }
        }
        if (!ref.empty()) row.est.push_back(interpolate(ref, p.t));
        rows.push_back(std::move(row));
    }

    struct Summary {
        long count = 0, best = 0;
        real max_abs = 0, sum_abs = 0, t_first = 0, t_last = 0;
    };
    std::vector<Summary> sum(names.size());
    for (const auto& row : rows) {
        long best = -1;
        real best_gap = 0;
        for (size_t j = 0; j < names.size(); ++j) {
            if (!row.est[j]) continue;
            const real gap = std::abs(*row.est[j] - row.y);
            auto& s = sum[j];
            if (s.count++ == 0) s.t_first = row.t;
            s.t_last = row.t;
            s.max_abs = std::max(s.max_abs, gap);
            s.sum_abs += gap;
            if (best < 0 || gap < best_gap) {
                best = static_cast<long>(j);
                best_gap = gap;
            }
        }
        if (best >= 0) ++sum[best].best;
    }
    long overlap = 0;
    for (const auto& s : sum) overlap += s.count;
    if (overlap == 0) fail(ErrorKind::config, "empty overlap between the track and every regime window");

    {
        auto os = r.open("compare.csv");
        os << "t,y_numeric";
        for (const auto& nm : names) os << ",y_" << nm << ",diff_" << nm;
        os << '\n';
        for (const auto& row : rows) {
            os << fmt(row.t) << ',' << fmt(row.y);
            for (const auto& e : row.est) {
                if (e) os << ',' << fmt(*e) << ',' << fmt(*e - row.y);
                else os << ",,";
            }
            os << '\n';
        }
    }
    {
        auto os = r.open("summary.csv");
        os << "regime,count,t_first,t_last,max_abs_diff,mean_abs_diff,best_count\n";
        json js = json::array();
        for (size_t j = 0; j < names.size(); ++j) {
            const auto& s = sum[j];
            const real mean = s.count ? s.sum_abs / static_cast<real>(s.count) : 0;
            os << names[j] << ',' << s.count << ',';
            if (s.count)
                os << fmt(s.t_first) << ',' << fmt(s.t_last) << ',' << fmt(s.max_abs) << ',' << fmt(mean);
            else os << ",,,";
            os << ',' << s.best << '\n';
            js.push_back({{"regime", names[j]},
                          {"count", s.count},
                          {"max_abs_diff", d(s.max_abs)},
                          {"mean_abs_diff", d(mean)},
                          {"best_count", s.best}});
            if (!s.count) r.warnings.push_back("regime " + names[j] + " is undefined over the whole window");
        }
        r.results["summary"] = js;
    }
    r.results["rows"] = rows.size();

    // aligned table on stdout
    std::ostringstream tab;
    tab << std::setw(12) << "t" << std::setw(14) << "y_numeric";
    for (const auto& nm : names) tab << std::setw(20) << nm;
    tab << '\n';
    for (const auto& row : rows) {
        tab << std::setw(12) << std::setprecision(6) << d(row.t) << std::setw(14) << std::setprecision(8) << d(row.y);
        for (const auto& e : row.est) {
            if (e) tab << std::setw(20) << std::setprecision(8) << d(*e);
            else tab << std::setw(20) << "-";
        }
        tab << '\n';
    }
    tab << "\nregime               count      max|diff|     mean|diff|  best\n";
    for (size_t j = 0; j < names.size(); ++j) {
        const auto& s = sum[j];
        tab << std::left << std::setw(20) << names[j] << std::right << std::setw(7) << s.count << std::setw(15)
            << std::setprecision(6) << d(s.max_abs) << std::setw(15)
            << d(s.count ? s.sum_abs / static_cast<real>(s.count) : 0) << std::setw(6) << s.best << '\n';
    }
    std::cout << tab.str();
}

// ---------------------------------------------------------------------------

void run_sweep(Run& r)
{
    r.require("configs");
    std::vector<std::string> files;
    for (const auto& f : split_csv(r.str("configs")))
        if (!f.empty()) files.push_back(f);
    if (files.empty()) fail(ErrorKind::config, "no configs given");
    r.derive("jobs", std::to_string(std::max(1u, std::thread::hardware_concurrency())));
    const long jobs = r.integer("jobs");
    if (jobs < 1) fail(ErrorKind::config, "jobs must be positive");

    struct Job {
        std::string name, command;
        KeyValueConfig cfg;
        int code = 0;
    };
    std::vector<Job> list;
    std::set<std::string> names;
    for (const auto& f : files) {
        Job j;
        j.cfg = KeyValueConfig::load(f);
        if (!j.cfg.has("command")) fail(ErrorKind::config, f + ": missing 'command'");
        j.command = j.cfg.get("command");
        if (j.command == "sweep") fail(ErrorKind::config, f + ": nested sweeps are not supported");
        if (!key_tables().count(j.command)) fail(ErrorKind::config, f + ": unknown command " + j.command);
        j.name = fs::path(f).stem().string();
        if (!names.insert(j.name).second) fail(ErrorKind::config, "duplicate config name " + j.name);
        const fs::path sub = j.cfg.has("out") ? fs::path(j.cfg.get("out")) : fs::path(j.name);
        if (sub.is_absolute()) fail(ErrorKind::config, f + ": 'out' must be relative inside a sweep");
        j.cfg.set("out", (r.dir / sub).string());
        list.push_back(std::move(j));
    }

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next++; i < list.size(); i = next++) list[i].code = dispatch(list[i].command, list[i].cfg);
    };
    std::vector<std::thread> pool;
    const size_t n = std::min<size_t>(static_cast<size_t>(jobs), list.size());
    for (size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    int worst = 0;
    json js = json::array();
    {
        auto os = r.open("sweep.csv");
        os << "name,command,exit_code\n";
        for (const auto& j : list) {
            os << j.name << ',' << j.command << ',' << j.code << '\n';
            js.push_back({{"name", j.name}, {"command", j.command}, {"exit_code", j.code}});
            worst = std::max(worst, j.code);
            if (j.code) r.warnings.push_back(j.name + " exited with " + std::to_string(j.code));
        }
    }
    r.results["runs"] = js;
    if (worst == exit_config) fail(ErrorKind::config, "a sweep member had a configuration error");
    if (worst == exit_numerical) fail(ErrorKind::numerical, "a sweep member failed numerically");
    if (worst == exit_under_resolved) fail(ErrorKind::under_resolved, "a sweep member was under-resolved");
}

// ---------------------------------------------------------------------------

int code_for(ErrorKind k)
{
    switch (k) {
    case ErrorKind::config: return exit_config;
    case ErrorKind::under_resolved: return exit_under_resolved;
    case ErrorKind::numerical:
    case ErrorKind::domain: return exit_numerical;
    }
    return exit_numerical;
}

std::string status_name(int code)
{
    switch (code) {
    case exit_ok: return "ok";
    case exit_config: return "config_error";
    case exit_under_resolved: return "under_resolved";
    default: return "numerical_failure";
    }
}

std::mutex log_mutex;

}  // namespace

const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> v = {"solve", "track", "continue", "ode", "asym", "compare", "sweep"};
    return v;
}

const std::vector<KeyDef>& command_keys(const std::string& command)
{
    const auto it = key_tables().find(command);
    if (it == key_tables().end()) fail(ErrorKind::config, "unknown command: " + command);
    return it->second;
}

int dispatch(const std::string& command, const KeyValueConfig& given)
{
    Run r;
    r.command = command;
    r.user = given;
    int code = exit_ok;
    std::string error;
    bool have_dir = false;
    try {
        const auto& keys = command_keys(command);
        // the output directory comes first so that configuration errors
        // still leave a manifest behind
        r.dir = resolve_out(given.get_or("out", ""), command);
        std::error_code ec;
        fs::create_directories(r.dir, ec);
        if (ec) fail(ErrorKind::config, "cannot create " + r.dir.string() + ": " + ec.message());
        have_dir = true;

        for (const auto& k : keys) r.cfg.set(k.name, given.get_or(k.name, k.default_value));
        r.cfg.set("command", command);
        r.cfg.set("out", r.dir.string());
        std::set<std::string> allowed;
        for (const auto& k : keys) allowed.insert(k.name);
        given.require_known(allowed);
        if (given.has("command") && given.get("command") != command)
            fail(ErrorKind::config, "config is for '" + given.get("command") + "', not '" + command + "'");

        if (command == "solve") run_solve(r);
        else if (command == "track") run_track(r);
        else if (command == "continue") run_continue(r);
        else if (command == "ode") run_ode(r);
        else if (command == "asym") run_asym(r);
        else if (command == "compare") run_compare(r);
        else run_sweep(r);
    } catch (const Error& e) {
        code = code_for(e.kind());
        error = e.what();
    } catch (const std::exception& e) {
        code = exit_numerical;
        error = e.what();
    }

    {
        std::lock_guard<std::mutex> lock(log_mutex);
        for (const auto& w : r.warnings) std::cerr << "nlh " << command << ": warning: " << w << '\n';
        if (code) std::cerr << "nlh " << command << ": error: " << error << '\n';
    }
    if (!have_dir) return code;

    json m;
    m["program"] = "nlh";
    m["version"] = program_version;
    m["command"] = command;
    json cfg = json::object();
    for (const auto& [k, v] : r.cfg.entries()) cfg[k] = v;
    m["config"] = cfg;
    m["status"] = status_name(code);
    m["exit_code"] = code;
    if (code) m["error"] = error;
    m["warnings"] = r.warnings;
    m["results"] = r.results;
    m["outputs"] = r.outputs;
    std::ofstream os(r.dir / "manifest.json");
    os << m.dump(2) << '\n';
    if (!os) {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "nlh " << command << ": error: cannot write manifest\n";
        return code ? code : exit_config;
    }
    return code;
}

}  // namespace nlh::cli
