#pragma once

#include <string>
#include <vector>

#include "isbel/config.hpp"

namespace isbel {

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
    bool trace = false;
    int jobs = 1;
    bool normalize_spectrum = false;
    bool export_rates = false;
};

// Values double as process exit codes.
enum class RunStatus { Ok = 0, ConfigError = 2, SolverFailure = 3, PartialFailure = 4 };

struct RunReport {
    RunStatus status = RunStatus::Ok;
    std::vector<std::string> files;  // written, relative to out_dir
    std::string message;
};

RunReport cmd_solve(const RunConfig& cfg, const std::string& out_dir, const RunOptions& opt);
RunReport cmd_sweep_voltage(const RunConfig& cfg, const std::string& out_dir, const RunOptions& opt);
RunReport cmd_spectrum(const RunConfig& cfg, const std::string& out_dir, const RunOptions& opt);
RunReport cmd_efficiency_study(const RunConfig& cfg, const std::string& out_dir,
                               const RunOptions& opt);

// Dispatches by name: solve, sweep, spectrum, efficiency.
RunReport run_command(const std::string& command, const RunConfig& cfg, const std::string& out_dir,
                      const RunOptions& opt);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Bias points of a sweep, in meV, in the order they are solved.
std::vector<double> sweep_voltages(const RunConfig& cfg);

}  // namespace isbel
