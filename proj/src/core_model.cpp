#include "isbel/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "isbel/constants.hpp"

namespace isbel {

namespace cst = constants;

double PhysicalParams::omega12() const { return E12 / cst::hbar; }
double PhysicalParams::kT() const { return cst::k_B * T; }
double PhysicalParams::beta() const { return 1.0 / kT(); }

double PhysicalParams::dos() const {
    return m_star / (2.0 * cst::pi * cst::hbar2_over_me) * cst::per_nm2_in_per_cm2;
}

void PhysicalParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string("physics.") + name + " must be positive");
    };
    positive(E12, "E12");
    positive(m_star, "m_star");
    positive(eps_r, "eps_r");
    positive(gamma, "gamma");
    positive(Gamma_X, "Gamma_X");
    positive(Gamma_Y, "Gamma_Y");
    positive(Gamma_S, "Gamma_S");
    positive(Gamma_Z, "Gamma_Z");
    positive(tau_inv, "tau_inv");
    positive(T, "T");
    positive(rabi_cal_freq, "rabi_cal_freq");
    positive(rabi_cal_density, "rabi_cal_density");
    if (!(chi_scale >= 0.0) || !std::isfinite(chi_scale))
        throw std::invalid_argument("physics.chi_scale must be nonnegative");
    if (!(theta_res > 0.0 && theta_res < 90.0))
        throw std::invalid_argument("physics.theta_res must lie in (0, 90)");
}

Cavity Cavity::from(const PhysicalParams& p) {
    if (!(p.rabi_cal_density > 0.0))
        throw std::invalid_argument("rabi_cal_density must be positive");
    Cavity c;
    c.omega12 = p.omega12();
    c.eps_r = p.eps_r;
    const double theta = p.theta_res * cst::pi / 180.0;
    const double k0 = c.omega12 * std::sqrt(p.eps_r) / cst::c_light;
    c.q_z = k0 * std::cos(theta);
    c.q_res = k0 * std::sin(theta);
    const double s2 = std::sin(theta) * std::sin(theta);
    const double rabi = p.rabi_cal_freq * c.omega12 * p.chi_scale;
    // chi2(q_res) * 2 * (rabi_cal_density / 2) == rabi^2
    c.chi2_prefactor = rabi * rabi / (c.omega12 * s2 * p.rabi_cal_density);
    return c;
}

double Cavity::omega(double q) const {
    return cst::c_light / std::sqrt(eps_r) * std::sqrt(q_z * q_z + q * q);
}

double Cavity::q_of_omega(double w) const {
    const double k = w * std::sqrt(eps_r) / cst::c_light;
    const double q2 = k * k - q_z * q_z;
    return q2 > 0.0 ? std::sqrt(q2) : 0.0;
}

double Cavity::chi2(double q) const {
    const double wc = omega(q);
    return chi2_prefactor * omega12 * omega12 / wc * q * q / (q_z * q_z + q * q);
}

double Cavity::chi(double q) const { return std::sqrt(chi2(q)); }

double subband_energy(const PhysicalParams& p, double eps_kin, int j) {
    if (j == 1) return eps_kin;
    if (j == 2) return p.E12 + eps_kin;
    throw std::invalid_argument("subband index must be 1 or 2, got " + std::to_string(j));
}

double cavity_dispersion(const Cavity& c, double q) { return c.omega(q); }

double coupling_chi(const Cavity& c, double q) { return c.chi(q); }

double fermi_dirac_beta(double eps, double mu, double beta) {
    const double x = beta * (eps - mu);
    if (x > 0.0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}

double fermi_dirac(double eps, double mu, double T) {
    return fermi_dirac_beta(eps, mu, 1.0 / (cst::k_B * T));
}

namespace {

// log(1 + e^x) without overflow
double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double logistic(double x) { return fermi_dirac_beta(0.0, x, 1.0); }

// Monotone root of h(x) = target by bracketing and safeguarded Newton.
template <class F>
double monotone_root(F&& h_and_dh, double target, double lo, double hi, double x0, double xtol,
                     double rtol) {
    double x = std::clamp(x0, lo, hi);
    for (int it = 0; it < 200; ++it) {
        auto [h, dh] = h_and_dh(x);
        const double r = h - target;
        if (std::abs(r) <= rtol * std::abs(target)) return x;
        if (r > 0.0)
            hi = x;
        else
            lo = x;
        double xn = (dh > 0.0) ? x - r / dh : 0.5 * (lo + hi);
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (std::abs(xn - x) < xtol) return xn;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
            return xn;
        x = xn;
    }
    throw std::runtime_error("Fermi level iteration did not converge");
}

}  // namespace

double fermi_density(const PhysicalParams& p, double eps_F) {
    const double b = p.beta();
    return p.dos() / b * (softplus(b * eps_F) + softplus(b * (eps_F - p.E12)));
}

double solve_fermi_level(const PhysicalParams& p, double density) {
    if (density < 0.0 || !std::isfinite(density))
        throw std::invalid_argument("density must be finite and nonnegative");
    if (density == 0.0) return -std::numeric_limits<double>::infinity();
    const double b = p.beta();
    const double g = p.dos();
    // Work with log density, which is close to linear in eps_F on both sides.
    auto h = [&](double ef) {
        const double s1 = softplus(b * ef), s2 = softplus(b * (ef - p.E12));
        const double n = g / b * (s1 + s2);
        const double dn = g * (logistic(b * ef) + logistic(b * (ef - p.E12)));
        return std::pair{std::log(n), dn / n};
    };
    double guess;
    const double nd = density / (g / b);
    if (nd < 1.0)
        guess = std::log(nd) / b;
    else
        guess = density / g;
    double lo = guess - 50.0 * p.kT() - p.E12, hi = guess + 50.0 * p.kT() + p.E12;
    while (h(lo).first > std::log(density)) lo -= 2.0 * (hi - lo);
    while (h(hi).first < std::log(density)) hi += 2.0 * (hi - lo);
    // |d log n| <= 1e-11 implies |dn|/n <= 1e-11
    return monotone_root(h, std::log(density), lo, hi, guess, 0.0, 1e-11 / std::abs(std::log(density)));
}

double grid_fermi_density(const PhysicalParams& p, const Grids& g, double eps_F) {
    const double b = p.beta();
    double s = 0.0;
    for (std::size_t i = 0; i < g.nk(); ++i)
        s += g.w_k[i] * (fermi_dirac_beta(g.eps[i], eps_F, b) +
                         fermi_dirac_beta(g.eps[i] + p.E12, eps_F, b));
    return s;
}

double solve_grid_fermi_level(const PhysicalParams& p, const Grids& g, double density,
                              double guess) {
    if (density < 0.0 || !std::isfinite(density))
        throw std::invalid_argument("density must be finite and nonnegative");
    double wsum = 0.0;
    for (double w : g.w_k) wsum += w;
    if (density == 0.0) return -std::numeric_limits<double>::infinity();
    if (density >= 2.0 * wsum) return std::numeric_limits<double>::infinity();
    const double b = p.beta();
    auto h = [&](double ef) {
        double n = 0.0, dn = 0.0;
        for (std::size_t i = 0; i < g.nk(); ++i) {
            const double f1 = fermi_dirac_beta(g.eps[i], ef, b);
            const double f2 = fermi_dirac_beta(g.eps[i] + p.E12, ef, b);
            n += g.w_k[i] * (f1 + f2);
            dn += g.w_k[i] * b * (f1 * (1.0 - f1) + f2 * (1.0 - f2));
        }
        return std::pair{std::log(n), dn / n};
    };
    const double target = std::log(density);
    if (!std::isfinite(guess)) guess = 0.0;
    double lo = guess - 10.0 * p.kT(), hi = guess + 10.0 * p.kT();
    while (h(lo).first > target) lo -= 2.0 * (hi - lo);
    while (h(hi).first < target) hi += 2.0 * (hi - lo);
    return monotone_root(h, target, lo, hi, guess, 0.0, 1e-13 / std::max(1.0, std::abs(target)));
}

Occupations equilibrium_occupations(const PhysicalParams& p, const Grids& g, double eps_F) {
    Occupations o;
    const double b = p.beta();
    o.n1.resize(g.nk());
    o.n2.resize(g.nk());
    o.na.assign(g.nq(), 0.0);
    for (std::size_t i = 0; i < g.nk(); ++i) {
        o.n1[i] = fermi_dirac_beta(g.eps[i], eps_F, b);
        o.n2[i] = fermi_dirac_beta(g.eps[i] + p.E12, eps_F, b);
    }
    return o;
}

std::vector<double> uniform_weights(std::size_t n, double h) {
    if (n < 2) throw std::invalid_argument("quadrature needs at least two nodes");
    std::vector<double> w(n, h);
    if (n >= 8) {
        static constexpr double c[4] = {17.0 / 48, 59.0 / 48, 43.0 / 48, 49.0 / 48};
        for (int i = 0; i < 4; ++i) {
            w[i] = c[i] * h;
            w[n - 1 - i] = c[i] * h;
        }
    } else {
        w.front() = 0.5 * h;
        w.back() = 0.5 * h;
    }
    return w;
}

double default_eps_max(const PhysicalParams& p, double mu_max) {
    return std::max(p.E12, mu_max + 10.0 * p.kT());
}

Grids build_grids(const PhysicalParams& p, std::size_t nk, std::size_t nq, double eps_max,
                  double omega_lo, double omega_hi) {
    if (nk < 8) throw std::invalid_argument("nk must be at least 8");
    if (nq < 4) throw std::invalid_argument("nq must be at least 4");
    if (!(omega_hi > omega_lo) || !(omega_lo > 0.0))
        throw std::invalid_argument("photon window must satisfy 0 < lo < hi");
    Grids g;
    g.cavity = Cavity::from(p);
    g.eps_max = eps_max > 0.0 ? eps_max : p.E12;
    g.omega_lo = omega_lo;
    g.omega_hi = omega_hi;

    g.d_eps = g.eps_max / static_cast<double>(nk - 1);
    g.eps.resize(nk);
    for (std::size_t i = 0; i < nk; ++i) g.eps[i] = g.d_eps * static_cast<double>(i);
    g.w_k = uniform_weights(nk, g.d_eps);
    for (double& w : g.w_k) w *= p.dos();

    const double w12 = p.omega12();
    const double cutoff = g.cavity.omega(0.0);
    if (omega_lo * w12 <= cutoff)
        throw std::invalid_argument("photon window starts below the cavity cutoff");
    g.d_omega = (omega_hi - omega_lo) * w12 / static_cast<double>(nq - 1);
    const auto wo = uniform_weights(nq, g.d_omega);
    g.q.resize(nq);
    g.omega_c.resize(nq);
    g.w_q.resize(nq);
    g.chi2.resize(nq);
    const double c2 = cst::c_light * cst::c_light;
    for (std::size_t i = 0; i < nq; ++i) {
        const double w = omega_lo * w12 + g.d_omega * static_cast<double>(i);
        g.omega_c[i] = w;
        g.q[i] = g.cavity.q_of_omega(w);
        // q dq = (eps_r / c^2) omega d omega
        g.w_q[i] = p.eps_r / c2 * w * wo[i] / (2.0 * cst::pi) * cst::per_nm2_in_per_cm2;
        g.chi2[i] = g.cavity.chi2(g.q[i]);
    }
    return g;
}

double grid_sum(const std::vector<double>& w, const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * f[i];
    return s;
}

}  // namespace isbel
