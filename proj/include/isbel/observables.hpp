#pragma once

#include <utility>

#include "isbel/contacts.hpp"
#include "isbel/core_model.hpp"

namespace isbel {

// Densities here are per cm^2. Currents and the photon output are rates per
// cm^2 (ps^-1 cm^-2); electron currents include both spin orientations.
struct ObservableSet {
    double I = 0;             // from the subband-1 form
    double I2 = 0;            // from the subband-2 form
    double P = 0;
    double eta = 0;
    double D = 0;             // population difference per spin
    double Omega_R = 0;       // meV
    double splitting = 0;     // meV
    double D0 = 0;            // per spin
    double P_fs = 0;
    double eta_freespace = 0;
    double density1 = 0;      // both spins
    double density2 = 0;
};

std::pair<double, double> electronic_current(const Occupations& o, const RateTables& r,
                                             const Grids& g);
double photon_rate(const Occupations& o, const Grids& g, const PhysicalParams& p);
// NaN when the current is not positive.
double quantum_efficiency(const Occupations& o, const RateTables& r, const Grids& g,
                          const PhysicalParams& p);
double population_difference(const Occupations& o, const Grids& g);
// (Omega_R, splitting) in ps^-1. Both are zero for a non-positive difference.
std::pair<double, double> rabi_splitting(const Occupations& o, const Grids& g);
double threshold_D0(const PhysicalParams& p, const Cavity& c, double q);
// Spontaneous emission coefficient for a free-space transition, ps^-1.
double free_space_coefficient(const PhysicalParams& p);
std::pair<double, double> free_space_rate(const Occupations& o, const RateTables& r,
                                          const Grids& g, const PhysicalParams& p);

ObservableSet compute_observables(const Occupations& o, const RateTables& r, const Grids& g,
                                  const PhysicalParams& p);

}  // namespace isbel
