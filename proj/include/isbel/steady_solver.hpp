#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "isbel/contacts.hpp"
#include "isbel/core_model.hpp"

namespace isbel {

// Packed unknowns [n1(k) | n2(k) | na(q)].
struct StateVector {
    std::vector<double> x;
    std::size_t nk = 0, nq = 0;

    static StateVector pack(const Occupations& o);
    Occupations unpack() const;
    double n1(std::size_t k) const { return x[k]; }
    double n2(std::size_t k) const { return x[nk + k]; }
    double na(std::size_t q) const { return x[2 * nk + q]; }
};

struct AuxQuantities {
    double N = 0;      // per-spin total density, cm^-2
    double eps_F = 0;  // meV
    std::vector<double> n1_eq, n2_eq;
    std::vector<double> dev1, dev2;  // n - n_eq, density-consistent
    std::vector<double> Dk, Fk;
    double D = 0, F = 0;  // per-spin densities, cm^-2
    std::vector<double> Bq, delta_q, Gq;  // ps^-1, ps^-1, ps^-2
    std::vector<double> R1, R2;  // net loss rate of each subband state, ps^-1
    std::vector<double> T1, T2;  // sum of magnitudes of the terms in R1, R2
    bool near_degenerate = false;  // |D| below 1e-8 N
};

// Rates converted from units of omega12 to ps^-1.
struct RateSet {
    double gamma, GX, GY, GS, GZ, tau_inv, w12;
    static RateSet from(const PhysicalParams& p);
};

AuxQuantities aux_quantities(const StateVector& s, const RateTables& rates, const Grids& g,
                             const PhysicalParams& p, double eps_F_guess = 0.0);

struct ResidualEval {
    std::vector<double> r;      // rows ordered like the unknowns
    std::vector<double> scale;  // sum of term magnitudes per row
    AuxQuantities aux;

    double relative_norm() const;
};

// Row k: subband-1 balance. Row nk + k: particle conservation, written as
// R1 + R2. Row 2 nk + q: photon balance multiplied through by chi^2 D and
// divided by omega12^3, which keeps it finite for D -> 0 and chi -> 0.
ResidualEval residuals(const StateVector& s, const RateTables& rates, const Grids& g,
                       const PhysicalParams& p, double eps_F_guess = 0.0);

// Photon occupations solving the photon rows for given electron arrays.
std::vector<double> photon_balance(const StateVector& s, const RateTables& rates, const Grids& g,
                                   const PhysicalParams& p);

struct SolverConfig {
    int max_iter = 200;
    double residual_tol = 1e-10;
    double initial_step = 1.0;
    double backtrack = 0.5;
    double min_step = 1.0 / 1048576.0;
    double fd_step = 1e-7;
    double dV = 15.0;  // largest continuation increment, meV
    bool pseudo_transient = true;
    int pt_max_steps = 2000;
    int polish_steps = 3;  // extra Newton steps once residual_tol is met

    void validate() const;
};

struct TraceEvent {
    double V;
    int iter;
    std::string phase;  // "newton" or "ptc"
    double residual;
    double step;
};
using TraceSink = std::function<void(const TraceEvent&)>;

struct SteadyState {
    Occupations occ;
    double eps_F = 0;
    double V = 0;
    bool converged = false;
    int iterations = 0;
    double residual = 0;
    std::vector<double> history;
    std::string diagnostic;
};

// Dense forward or central difference Jacobian of the residual rows.
std::vector<std::vector<double>> residual_jacobian(const StateVector& s, const RateTables& rates,
                                                   const Grids& g, const PhysicalParams& p,
                                                   double rel_step, bool central);

SteadyState newton_solve(const StateVector& initial, const SolverConfig& cfg,
                         const RateTables& rates, const Grids& g, const PhysicalParams& p,
                         double V = 0.0, const TraceSink& trace = {});

struct DeviceModel {
    PhysicalParams phys;
    ReservoirParams left, right;
    Lineup lineup = Lineup::SubbandEdge;
    Grids grids;

    RateTables rates(double V) const;
};

// Occupations in equilibrium with the unbiased reservoirs, photons from the
// photon balance.
StateVector thermal_start(const DeviceModel& m);

// Fermi distribution whose level balances the net reservoir flux at bias V.
// Puts the slow total-density mode close to its steady value.
StateVector flux_balanced_start(const DeviceModel& m, double V);

std::vector<SteadyState> voltage_sweep(const std::vector<double>& V_list, const SolverConfig& cfg,
                                       const DeviceModel& m, const TraceSink& trace = {});

// Continuation from thermal_start to a single bias.
SteadyState solve_at(double V, const SolverConfig& cfg, const DeviceModel& m,
                     const TraceSink& trace = {});

void write_state_csv(std::ostream& os, const Grids& g, const SteadyState& st);

}  // namespace isbel
