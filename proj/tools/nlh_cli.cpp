#include "commands.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <map>

namespace {

const std::map<std::string, std::string> descriptions = {
    {"solve", "integrate u_t = u_xx + u^2 from periodic data; writes a checkpoint and coefficient CSV"},
    {"track", "fit the nearest complex singularity to each stored spectrum"},
    {"continue", "Fourier-Pade continuation of a checkpoint off the real axis"},
    {"ode", "pole-field integration of phi'' - phi' = phi^2 and singularity location"},
    {"asym", "evaluate an asymptotic formula over a range"},
    {"compare", "align tracked heights with asymptotic regimes"},
    {"sweep", "run several config files in a worker pool"},
};

}  // namespace

int main(int argc, char** argv)
{
    using namespace nlh::cli;
    CLI::App app{"Numerical and asymptotic tools for u_t = u_xx + u^2"};
    app.require_subcommand(1);

    struct Sub {
        CLI::App* app;
        std::string config;
        std::map<std::string, std::string> values;
        std::map<std::string, CLI::Option*> options;
    };
    std::map<std::string, Sub> subs;
    for (const auto& name : command_names()) {
        Sub& s = subs[name];
        s.app = app.add_subcommand(name, descriptions.at(name));
        s.app->add_option("--config", s.config, "key = value config file; flags override it");
        for (const auto& k : command_keys(name)) {
            if (k.name == "command") continue;
            std::string help = k.help;
            if (!k.default_value.empty()) help += " [" + k.default_value + "]";
            s.options[k.name] = s.app->add_option("--" + k.name, s.values[k.name], help);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_config;
    }

    for (auto& [name, s] : subs) {
        if (!s.app->parsed()) continue;
        nlh::KeyValueConfig cfg;
        try {
            if (!s.config.empty()) cfg = nlh::KeyValueConfig::load(s.config);
        } catch (const std::exception& e) {
            std::cerr << "nlh " << name << ": error: " << e.what() << '\n';
            return exit_config;
        }
        for (const auto& [key, opt] : s.options)
            if (opt->count()) cfg.set(key, s.values[key]);
        return dispatch(name, cfg);
    }
    return exit_config;
}
