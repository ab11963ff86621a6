#pragma once

// Internal unit system: energies in meV, times in ps, lengths in nm,
// sheet densities in cm^-2. Angular frequencies and rates are in ps^-1.
namespace isbel::constants {

inline constexpr double pi = 3.14159265358979323846;

inline constexpr double hbar = 0.6582119569;            // meV ps
inline constexpr double k_B = 0.08617333262;            // meV / K
inline constexpr double c_light = 2.99792458e5;         // nm / ps
inline constexpr double hbar2_over_me = 76.19964231;    // hbar^2 / m_e, meV nm^2
inline constexpr double e2_over_4pi_eps0 = 1439.964548; // e^2 / (4 pi eps0), meV nm
inline constexpr double me_c2 = 510998.95e3;            // m_e c^2, meV

inline constexpr double per_nm2_in_per_cm2 = 1e14;

}  // namespace isbel::constants
