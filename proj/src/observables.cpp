#include "isbel/observables.hpp"

#include <cmath>
#include <limits>
#include <tuple>

#include "isbel/constants.hpp"

namespace isbel {

std::pair<double, double> electronic_current(const Occupations& o, const RateTables& r,
                                             const Grids& g) {
    double i1 = 0.0, i2 = 0.0;
    for (std::size_t k = 0; k < g.nk(); ++k) {
        i1 += g.w_k[k] * (r.out1[k] * o.n1[k] - r.in1[k] * (1.0 - o.n1[k]));
        i2 += g.w_k[k] * (r.in2[k] * (1.0 - o.n2[k]) - r.out2[k] * o.n2[k]);
    }
    return {2.0 * i1, 2.0 * i2};
}

double photon_rate(const Occupations& o, const Grids& g, const PhysicalParams& p) {
    return 2.0 * p.rate(p.gamma) * grid_sum(g.w_q, o.na);
}

double quantum_efficiency(const Occupations& o, const RateTables& r, const Grids& g,
                          const PhysicalParams& p) {
    const double I = electronic_current(o, r, g).first;
    if (!(I > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return photon_rate(o, g, p) / I;
}

double population_difference(const Occupations& o, const Grids& g) {
    double D = 0.0;
    for (std::size_t k = 0; k < g.nk(); ++k) D += g.w_k[k] * (o.n1[k] - o.n2[k]);
    return D;
}

std::pair<double, double> rabi_splitting(const Occupations& o, const Grids& g) {
    const double D = population_difference(o, g);
    if (!(D > 0.0)) return {0.0, 0.0};
    const double om = g.cavity.chi(g.cavity.q_res) * std::sqrt(2.0 * D);
    return {om, 2.0 * om};
}

double threshold_D0(const PhysicalParams& p, const Cavity& c, double q) {
    const double d = p.rate(p.Gamma_S) - p.rate(p.Gamma_Z);
    return d * d / (8.0 * c.chi2(q));
}

double free_space_coefficient(const PhysicalParams& p) {
    namespace cst = constants;
    const double w = p.omega12();
    return 4.0 * cst::e2_over_4pi_eps0 * w * w * std::sqrt(p.eps_r) /
           (3.0 * p.m_star * cst::me_c2 * cst::c_light);
}

std::pair<double, double> free_space_rate(const Occupations& o, const RateTables& r,
                                          const Grids& g, const PhysicalParams& p) {
    double s = 0.0;
    for (std::size_t k = 0; k < g.nk(); ++k) s += g.w_k[k] * 2.0 * o.n2[k] * (1.0 - o.n1[k]);
    const double P = free_space_coefficient(p) * s;
    const double I = electronic_current(o, r, g).first;
    return {P, I > 0.0 ? P / I : std::numeric_limits<double>::quiet_NaN()};
}

ObservableSet compute_observables(const Occupations& o, const RateTables& r, const Grids& g,
                                  const PhysicalParams& p) {
    ObservableSet s;
    std::tie(s.I, s.I2) = electronic_current(o, r, g);
    s.P = photon_rate(o, g, p);
    s.eta = s.I > 0.0 ? s.P / s.I : std::numeric_limits<double>::quiet_NaN();
    s.D = population_difference(o, g);
    const auto [om, sp] = rabi_splitting(o, g);
    s.Omega_R = om * constants::hbar;
    s.splitting = sp * constants::hbar;
    s.D0 = threshold_D0(p, g.cavity, g.cavity.q_res);
    std::tie(s.P_fs, s.eta_freespace) = free_space_rate(o, r, g, p);
    for (std::size_t k = 0; k < g.nk(); ++k) {
        s.density1 += 2.0 * g.w_k[k] * o.n1[k];
        s.density2 += 2.0 * g.w_k[k] * o.n2[k];
    }
    return s;
}

}  // namespace isbel
