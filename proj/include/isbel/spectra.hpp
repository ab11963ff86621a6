#pragma once

#include <complex>
#include <iosfwd>
#include <utility>
#include <vector>

#include "isbel/core_model.hpp"

namespace isbel {

using cplx = std::complex<double>;

// One photon mode as seen by the spectrum: wavevector, cavity frequency,
// squared coupling and steady photon occupation.
struct ModePoint {
    double q = 0, omega_c = 0, chi2 = 0, na = 0;
};

ModePoint grid_mode(const Grids& g, const Occupations& o, std::size_t iq);
// Mode at exact resonance; the occupation is interpolated from the grid.
ModePoint resonant_mode(const Grids& g, const Occupations& o);

// One-sided transform of the photon correlation, int_0^inf e^{i w t} S(t) dt.
cplx spectrum_S(double omega, const ModePoint& m, double D, const PhysicalParams& p);
// Companion transform of the photon-polarization correlation summed over k.
// Throws for a mode with zero coupling.
cplx spectrum_Z(double omega, const ModePoint& m, double D, const PhysicalParams& p);
// Equal-time photon-polarization correlation that seeds the transforms.
cplx initial_correlation(const ModePoint& m, const PhysicalParams& p);

// Roots ordered by real part: {omega_minus, omega_plus}.
std::pair<cplx, cplx> polariton_roots(const ModePoint& m, double D, const PhysicalParams& p);

std::vector<double> omega_grid(const PhysicalParams& p, double lo = 0.5, double hi = 1.5,
                               std::size_t n = 2001);

// Grid indices of local maxima.
std::vector<std::size_t> find_peaks(const std::vector<double>& y);

struct SpectrumResult {
    ModePoint mode;
    std::vector<double> omega;
    std::vector<cplx> S;
    std::vector<double> intensity;
    cplx omega_minus, omega_plus;
    std::vector<double> peaks;  // omega values of local maxima of the intensity
};

SpectrumResult compute_spectrum(const ModePoint& m, double D, const PhysicalParams& p,
                                const std::vector<double>& omega);

struct AnticrossingMap {
    std::vector<double> omega;
    std::vector<SpectrumResult> modes;
};

AnticrossingMap anticrossing_map(const Grids& g, const Occupations& o, const PhysicalParams& p,
                                 const std::vector<double>& omega,
                                 const std::vector<std::size_t>& modes = {});

// omega in units of omega12 in the files.
void write_spectrum_csv(std::ostream& os, const AnticrossingMap& map, const PhysicalParams& p);
void write_map_csv(std::ostream& os, const AnticrossingMap& map, const PhysicalParams& p,
                   bool normalize);
void write_peaks_csv(std::ostream& os, const AnticrossingMap& map, const PhysicalParams& p);

}  // namespace isbel
