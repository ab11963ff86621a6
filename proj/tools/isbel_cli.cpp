#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isbel/isbel.h"

namespace {

struct Args {
    std::string config;
    std::string out = "out";
    bool trace = false;
    int jobs = 1;
    bool normalize = false;
    bool export_rates = false;
    std::vector<std::string> sets;
    double V = 0.0;
    bool has_V = false;
};

int exit_code(isbel_status s) {
    switch (s) {
        case ISBEL_OK: return 0;
        case ISBEL_ERR_CONFIG:
        case ISBEL_ERR_ARGUMENT: return 2;
        case ISBEL_ERR_SOLVER: return 3;
        case ISBEL_ERR_PARTIAL: return 4;
        default: return 1;
    }
}

int report(isbel_status s) {
    if (s != ISBEL_OK) std::fprintf(stderr, "isbel: %s\n", isbel_last_error());
    return exit_code(s);
}

int run(const std::string& command, const Args& a) {
    isbel_config* cfg = nullptr;
    isbel_status s = a.config.empty() ? isbel_config_new(&cfg) : isbel_config_load(a.config.c_str(), &cfg);
    if (s != ISBEL_OK) return report(s);

    for (const auto& kv : a.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "isbel: --set expects key=value, got '%s'\n", kv.c_str());
            isbel_config_free(cfg);
            return 2;
        }
        s = isbel_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
        if (s != ISBEL_OK) {
            isbel_config_free(cfg);
            return report(s);
        }
    }
    if (a.has_V) {
        if (command == "sweep") {
            std::fprintf(stderr, "isbel: --V does not apply to sweep; set sweep.V_start and sweep.V_stop\n");
            isbel_config_free(cfg);
            return 2;
        }
        const std::string key = command + ".V";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", a.V);
        s = isbel_config_set(cfg, key.c_str(), buf);
        if (s != ISBEL_OK) {
            isbel_config_free(cfg);
            return report(s);
        }
    }

    isbel_run_options opts{a.trace ? 1 : 0, a.jobs, a.normalize ? 1 : 0, a.export_rates ? 1 : 0};
    s = isbel_run(cfg, command.c_str(), a.out.c_str(), &opts);
    isbel_config_free(cfg);
    return report(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intersubband microcavity electroluminescence simulator"};
    app.set_version_flag("--version", std::string(isbel_version()));
    app.require_subcommand(1);

    Args a;
    std::string chosen;
    for (const char* name : {"solve", "sweep", "spectrum", "efficiency"}) {
        const char* help = std::string(name) == "solve"      ? "Steady state at one bias"
                           : std::string(name) == "sweep"    ? "Continuation sweep in bias"
                           : std::string(name) == "spectrum" ? "Emission spectrum and anticrossing map"
                                                             : "Efficiency versus coupling and lifetime";
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", a.config, "INI configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", a.out, "Output directory")->capture_default_str();
        sub->add_flag("--trace", a.trace, "Write solver iterations to trace.jsonl");
        sub->add_option("--jobs", a.jobs, "Worker threads for independent study points")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--normalize-spectrum", a.normalize, "Scale the map to unit peak intensity");
        sub->add_flag("--export-rates", a.export_rates, "Write the reservoir rate tables");
        sub->add_option("--set", a.sets, "Override a config key, section.key=value")
            ->allow_extra_args(false);
        sub->add_option_function<double>(
            "--V", [&a](double v) { a.V = v, a.has_V = true; }, "Bias in meV");
        sub->callback([&chosen, name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    return run(chosen, a);
}
