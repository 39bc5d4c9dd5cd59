#include "doctest.h"

#include "commands.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nlh::cli;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / "nlh_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

json manifest(const fs::path& dir) { return json::parse(slurp(dir / "manifest.json")); }

nlh::KeyValueConfig kv(std::initializer_list<std::pair<const char*, std::string>> items)
{
    nlh::KeyValueConfig c;
    for (const auto& [k, v] : items) c.set(k, v);
    return c;
}

// runs the real binary; returns its exit status
int run_binary(const std::string& args, const fs::path& root)
{
    const std::string cmd = "NLH_OUTPUT_ROOT='" + root.string() + "' '" NLH_CLI_PATH "' " + args + " 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("manifest echoes every key the command accepts")
{
    const fs::path d = scratch("asym_manifest");
    REQUIRE(dispatch("asym", kv({{"out", d.string()}, {"alpha", "2"}})) == exit_ok);
    const json m = manifest(d);
    CHECK(m["status"] == "ok");
    for (const auto& k : command_keys("asym")) {
        INFO(k.name);
        REQUIRE(m["config"].contains(k.name));
        CHECK(!m["config"][k.name].get<std::string>().empty());
    }
    CHECK(m["config"]["regime"] == "small_time");
    CHECK(m["config"]["from"] == "0.02");
    CHECK(m["config"]["eps"] == "absent");
    CHECK(slurp(d / "asym.csv").rfind("# regime=small_time", 0) == 0);
}

TEST_CASE("unknown keys and bad values are configuration errors")
{
    const fs::path d = scratch("config_errors");
    CHECK(dispatch("asym", kv({{"out", d.string()}, {"regimen", "small_time"}})) == exit_config);
    CHECK(manifest(d)["status"] == "config_error");
    CHECK(dispatch("asym", kv({{"out", d.string()}, {"samples", "ten"}})) == exit_config);
    CHECK(dispatch("ode", kv({{"out", d.string()}, {"ic", "cubic"}})) == exit_config);
    CHECK(dispatch("ode", kv({{"out", d.string()}, {"command", "solve"}})) == exit_config);
    CHECK(dispatch("track", kv({{"out", d.string()}})) == exit_config);
    CHECK_THROWS(command_keys("plot"));
}

TEST_CASE("ode run finds the logarithmic singularity and is deterministic")
{
    const fs::path a = scratch("ode_a"), b = scratch("ode_b");
    const auto cfg = [](const fs::path& d) {
        return kv({{"out", d.string()}, {"ic", "log"}, {"anchor", "50"}, {"path", "real-left"}});
    };
    REQUIRE(dispatch("ode", cfg(a)) == exit_ok);
    REQUIRE(dispatch("ode", cfg(b)) == exit_ok);
    const std::string s = slurp(a / "singularities.csv");
    CHECK(s.find("0.05695") != std::string::npos);
    CHECK(s == slurp(b / "singularities.csv"));
    CHECK(slurp(a / "solution.csv") == slurp(b / "solution.csv"));
    const json m = manifest(a);
    CHECK(std::abs(m["results"]["first_real_singularity"]["re"].get<double>() - 0.05695) < 1e-4);
    CHECK(m["config"]["x_end"] == "-1");
    CHECK(m["config"]["columns"] == "unused");
}

TEST_CASE("solve, track and compare pipeline")
{
    const fs::path s = scratch("solve"), t = scratch("track"), c = scratch("compare"), z = scratch("zero");
    REQUIRE(dispatch("solve", kv({{"out", s.string()}, {"ic", "cosine"}, {"alpha", "0.5"}, {"beta", "0"},
                                  {"N", "128"}})) == exit_ok);
    const json ms = manifest(s);
    CHECK(ms["results"]["termination"] == "blowup");
    CHECK(std::abs(ms["results"]["t_c"].get<double>() - 15.5305) < 1e-3);
    CHECK(fs::exists(s / "checkpoint.bin"));

    REQUIRE(dispatch("track", kv({{"out", t.string()}, {"input", s.string()}})) == exit_ok);
    CHECK(manifest(t)["results"]["reversals"] == 2);

    REQUIRE(dispatch("compare", kv({{"out", c.string()}, {"track", t.string()},
                                    {"regimes", "small_amp_t1,small_amp_t2"}, {"eps", "0.5"},
                                    {"t_c", "15.530458826185942"}, {"t_min", "1"}})) == exit_ok);
    const std::string head = slurp(c / "compare.csv").substr(0, 80);
    CHECK(head.rfind("t,y_numeric,y_small_amp_t1,diff_small_amp_t1,y_small_amp_t2", 0) == 0);

    // identical inputs give zero differences
    REQUIRE(dispatch("compare", kv({{"out", z.string()}, {"track", t.string()}, {"regimes", ""},
                                    {"reference", (t / "track.csv").string()}})) == exit_ok);
    const json mz = manifest(z);
    CHECK(mz["results"]["summary"][0]["max_abs_diff"] == 0.0);
    CHECK(mz["results"]["summary"][0]["count"].get<long>() > 100);
}

TEST_CASE("compare reports an empty overlap")
{
    const fs::path t = scratch("short_track"), c = scratch("no_overlap");
    {
        std::ofstream os(t / "track.csv");
        os << "t,y_star,mu,logC,rms_residual,k_min,k_max,flags\n0.5,1,1,0,0,4,20,ok\n";
    }
    CHECK(dispatch("compare", kv({{"out", c.string()}, {"track", t.string()}, {"t_min", "1"}})) == exit_config);
}

TEST_CASE("under-resolved solve exits with its own code")
{
    const fs::path d = scratch("under");
    CHECK(dispatch("solve", kv({{"out", d.string()}, {"alpha", "0.5"}, {"N", "16"}, {"N_max", "16"},
                                {"auto_refine", "false"}, {"t_end", "16"}})) == exit_under_resolved);
    CHECK(manifest(d)["status"] == "under_resolved");
}

TEST_CASE("continuation writes poles and grids")
{
    const fs::path s = scratch("short_solve"), p = scratch("pade");
    REQUIRE(dispatch("solve", kv({{"out", s.string()}, {"alpha", "1"}, {"N", "64"}, {"t_end", "3.165"}})) == exit_ok);
    REQUIRE(dispatch("continue", kv({{"out", p.string()}, {"input", s.string()}, {"nx", "9"}, {"ny", "5"}})) ==
            exit_ok);
    const json m = manifest(p);
    CHECK(std::abs(m["results"]["nearest_pole"]["im"].get<double>() - 0.647) < 0.01);
    CHECK(fs::file_size(p / "field.bin") == 8 * 6 + 16 * 45);
    CHECK(m["config"]["l"] == "unused");
}

TEST_CASE("binary: flags override the config file, output root from the environment")
{
    const fs::path root = scratch("binary");
    {
        std::ofstream os(root / "a.cfg");
        os << "# small-time heights\ncommand = asym\nalpha = 1\nsamples = 3\n";
    }
    REQUIRE(run_binary("asym --config '" + (root / "a.cfg").string() + "' --alpha 2 --out run", root) == 0);
    const json m = manifest(root / "run");
    CHECK(m["config"]["alpha"] == "2");
    CHECK(m["config"]["samples"] == "3");
    CHECK(run_binary("asym --no-such-flag 1", root) == 1);
    CHECK(run_binary("frobnicate", root) == 1);
    {
        std::ofstream os(root / "bad.cfg");
        os << "alpha = 1\nwidth = 3\n";
    }
    CHECK(run_binary("asym --config '" + (root / "bad.cfg").string() + "' --out bad", root) == 1);
}

TEST_CASE("sweep runs configs in a pool and reports the worst exit code")
{
    const fs::path root = scratch("sweep");
    {
        std::ofstream(root / "one.cfg") << "command = asym\nalpha = 2\n";
        std::ofstream(root / "two.cfg") << "command = ode\nic = exp\n";
        std::ofstream(root / "three.cfg") << "command = asym\nregime = large_amp_leading\nalpha = 3\n";
    }
    const std::string list =
        (root / "one.cfg").string() + "," + (root / "two.cfg").string() + "," + (root / "three.cfg").string();
    REQUIRE(dispatch("sweep", kv({{"out", (root / "out").string()}, {"configs", list}, {"jobs", "3"}})) == exit_ok);
    CHECK(slurp(root / "out" / "sweep.csv") == "name,command,exit_code\none,asym,0\ntwo,ode,0\nthree,asym,0\n");
    CHECK(fs::exists(root / "out" / "two" / "singularities.csv"));
    CHECK(manifest(root / "out" / "three")["config"]["regime"] == "large_amp_leading");

    {
        std::ofstream(root / "broken.cfg") << "command = asym\nalpha = two\n";
    }
    CHECK(dispatch("sweep", kv({{"out", (root / "out2").string()},
                                {"configs", (root / "one.cfg").string() + "," + (root / "broken.cfg").string()}})) ==
          exit_config);
}
