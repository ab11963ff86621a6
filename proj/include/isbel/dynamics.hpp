#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "isbel/steady_solver.hpp"

namespace isbel {

using cplx = std::complex<double>;

enum class DynMode { Full, AdiabaticX, Reduced };

// Source of the diagonal polarization correlation from the photon-polarization
// correlation. Symmetrized keeps the diagonal real (2 (1 - D_k) Im W_k);
// AsPrinted uses i (1 - D_k) conj(W_k) alone.
enum class XSource { Symmetrized, AsPrinted };

// y is stored q-major: y[q * nk + k]. xo[(q * nk + kp) * nk + k] holds the
// correlated part of the polarization correlation (full mode only).
struct DynamicState {
    std::vector<double> na, n1, n2;
    std::vector<cplx> y;
    std::vector<cplx> Xd;
    std::vector<cplx> xo;

    std::size_t nk() const { return n1.size(); }
    std::size_t nq() const { return na.size(); }
    // a += s * b
    void axpy(double s, const DynamicState& b);
};

struct IntegratorConfig {
    double dt = 0.0;       // ps; 0 selects 0.02 / omega12
    double t_max = 400.0;  // ps
    DynMode mode = DynMode::AdiabaticX;
    XSource x_source = XSource::Symmetrized;
    double tol = 1e-10;    // stop when rhs_norm falls below
    int record_stride = 0; // 0 disables trajectory records
    double blowup = 1e8;

    double dt_for(const PhysicalParams& p) const;
};

class DynamicsSystem {
public:
    DynamicsSystem(const PhysicalParams& p, const Grids& g, const RateTables& rates, DynMode mode,
                   XSource src = XSource::Symmetrized);

    DynamicState rhs(const DynamicState& s) const;
    // Initial condition: given populations, no photon-polarization correlation,
    // polarization correlation at its uncorrelated value.
    DynamicState initial(const Occupations& o) const;
    // Largest population rate: |dn1|, |dn2| in ps^-1 and |dna| / max(na).
    double rhs_norm(const DynamicState& d, const DynamicState& s) const;
    DynMode mode() const { return mode_; }

private:
    const PhysicalParams& p_;
    const Grids& g_;
    const RateTables& rates_;
    DynMode mode_;
    XSource src_;
    RateSet rs_;
    mutable double ef_guess_ = 0.0;
};

struct TrajectoryRecord {
    double t, total_na, density1, density2, y_max;
};

struct IntegrationResult {
    DynamicState state;
    double t = 0;
    long steps = 0;
    double rhs_norm = 0;
    bool converged = false;
    bool unstable = false;
    std::string diagnostic;
    std::vector<TrajectoryRecord> trajectory;
};

IntegrationResult integrate(const DynamicsSystem& sys, const DynamicState& s0,
                            const IntegratorConfig& cfg, const Grids& g);

struct RelaxOutcome {
    SteadyState steady;
    IntegrationResult run;
};

RelaxOutcome relax_to_steady(const DeviceModel& m, double V, const IntegratorConfig& cfg);

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRecord>& tr);

}  // namespace isbel
