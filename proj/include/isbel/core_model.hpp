#pragma once

#include <cstddef>
#include <vector>

namespace isbel {

// Device constants. Rates are given in units of the transition angular
// frequency omega12 = E12 / hbar; see omega12() and rate().
struct PhysicalParams {
    double E12 = 150.0;              // meV
    double m_star = 0.1;             // units of m_e
    double eps_r = 10.0;
    double theta_res = 70.0;         // degrees
    double gamma = 0.05;
    double Gamma_X = 0.1;
    double Gamma_Y = 0.1;
    double Gamma_S = 0.1;
    double Gamma_Z = 0.1;
    double tau_inv = 0.005;
    double T = 77.0;                 // K
    double rabi_cal_freq = 0.1;
    double rabi_cal_density = 5e11;  // cm^-2, total over both spins
    double chi_scale = 1.0;          // multiplies the calibrated coupling

    double omega12() const;              // ps^-1
    double rate(double in_omega12) const { return in_omega12 * omega12(); }
    double kT() const;                   // meV
    double beta() const;                 // meV^-1
    // Two-dimensional density of states per spin, cm^-2 meV^-1.
    double dos() const;
    // Throws std::invalid_argument on a violated invariant.
    void validate() const;
};

// Cavity geometry and the area-normalized coupling. chi2(q) multiplied by a
// per-spin sheet density in cm^-2 gives ps^-2.
struct Cavity {
    double omega12 = 0;   // ps^-1
    double eps_r = 0;
    double q_z = 0;       // nm^-1
    double q_res = 0;     // nm^-1
    double chi2_prefactor = 0;

    static Cavity from(const PhysicalParams& p);
    double omega(double q) const;         // cavity angular frequency, ps^-1
    double q_of_omega(double omega) const;
    double chi(double q) const;           // ps^-1 cm
    double chi2(double q) const;
};

struct Grids {
    std::vector<double> eps;      // kinetic energy nodes, meV
    std::vector<double> w_k;      // per-spin sheet density per node, cm^-2
    std::vector<double> q;        // photon in-plane wavevectors, nm^-1
    std::vector<double> omega_c;  // ps^-1
    std::vector<double> w_q;      // cm^-2
    std::vector<double> chi2;     // ps^-2 cm^2
    Cavity cavity;
    double eps_max = 0;
    double d_eps = 0;
    double d_omega = 0;
    double omega_lo = 0.6;        // photon window in units of omega12
    double omega_hi = 1.4;

    std::size_t nk() const { return eps.size(); }
    std::size_t nq() const { return q.size(); }
};

struct Occupations {
    std::vector<double> n1;
    std::vector<double> n2;
    std::vector<double> na;
};

double subband_energy(const PhysicalParams& p, double eps_kin, int j);
double cavity_dispersion(const Cavity& c, double q);
double coupling_chi(const Cavity& c, double q);

double fermi_dirac(double eps, double mu, double T);
double fermi_dirac_beta(double eps, double mu, double beta);

// Closed-form per-spin density of both subbands at Fermi level eps_F.
double fermi_density(const PhysicalParams& p, double eps_F);
// Inverse of fermi_density. Returns -inf for zero density.
double solve_fermi_level(const PhysicalParams& p, double density);

// Grid-sum counterparts used by the solver, so that relaxation conserves the
// discretized particle number exactly.
double grid_fermi_density(const PhysicalParams& p, const Grids& g, double eps_F);
double solve_grid_fermi_level(const PhysicalParams& p, const Grids& g, double density,
                              double guess = 0.0);

Occupations equilibrium_occupations(const PhysicalParams& p, const Grids& g, double eps_F);

// Quadrature weights for n uniformly spaced nodes with spacing h, endpoints
// included. Gregory end corrections from n >= 8, trapezoid below.
std::vector<double> uniform_weights(std::size_t n, double h);

double default_eps_max(const PhysicalParams& p, double mu_max);

Grids build_grids(const PhysicalParams& p, std::size_t nk, std::size_t nq, double eps_max = 0.0,
                  double omega_lo = 0.6, double omega_hi = 1.4);

double grid_sum(const std::vector<double>& w, const std::vector<double>& f);

}  // namespace isbel
