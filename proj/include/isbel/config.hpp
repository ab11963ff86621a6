#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isbel/contacts.hpp"
#include "isbel/core_model.hpp"
#include "isbel/dynamics.hpp"
#include "isbel/steady_solver.hpp"

namespace isbel {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ContactSpec {
    std::optional<double> left_E0, left_mu, left_Gamma, left_sigma;
    std::optional<double> right_E0, right_mu, right_Gamma, right_sigma;
    Lineup lineup = Lineup::SubbandEdge;
    bool export_rates = false;
};

struct GridSpec {
    std::size_t nk = 40, nq = 16;
    double eps_max = 0.0;  // meV; 0 selects the automatic rule
    double omega_lo = 0.6, omega_hi = 1.4;
};

struct SolveSpec {
    std::optional<double> V;  // meV
    std::string method = "newton";  // newton | relax
};

struct SweepSpec {
    std::optional<double> V_start, V_stop;  // meV; defaults 0.2 and 1.2 E12
    int steps = 50;
    bool descending = false;
    bool state_dumps = false;
};

struct SpectrumSpec {
    std::optional<double> V;
    double omega_lo = 0.5, omega_hi = 1.5;  // units of omega12
    std::size_t points = 2001;
    std::vector<std::size_t> modes;  // empty: all photon modes
    bool normalize = false;
};

struct EfficiencySpec {
    std::optional<double> V;  // defaults to E12
    std::vector<double> chi_scales;
    std::vector<double> tau_factors{1.0, 2.0};
    int weak_points = 5;
    int top_points = 2;
};

struct RunConfig {
    PhysicalParams physics;
    ContactSpec contacts;
    GridSpec grids;
    SolverConfig solver;
    SolveSpec solve;
    SweepSpec sweep;
    SpectrumSpec spectrum;
    EfficiencySpec efficiency;
    IntegratorConfig dynamics;
    std::string source = "<defaults>";

    RunConfig();

    ReservoirParams left() const;
    ReservoirParams right() const;
    // Validates everything and assembles grids and reservoirs.
    DeviceModel device() const;
    void validate() const;

    // One "section.key = value" line per key, in a fixed order.
    std::string canonical() const;
    std::uint64_t hash() const;
    std::string hash_hex() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& name = "<string>");
// Applies a single "section.key" override.
void set_config_value(RunConfig& c, const std::string& dotted_key, const std::string& value);

}  // namespace isbel
