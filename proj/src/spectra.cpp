#include "isbel/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace isbel {

namespace {
const cplx I(0.0, 1.0);
}

ModePoint grid_mode(const Grids& g, const Occupations& o, std::size_t iq) {
    return ModePoint{g.q[iq], g.omega_c[iq], g.chi2[iq], o.na[iq]};
}

ModePoint resonant_mode(const Grids& g, const Occupations& o) {
    ModePoint m;
    m.q = g.cavity.q_res;
    m.omega_c = g.cavity.omega(m.q);
    m.chi2 = g.cavity.chi2(m.q);
    const double x = (m.omega_c - g.omega_c.front()) / g.d_omega;
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(std::max(0.0, x)), g.nq() - 2);
    const double t = x - static_cast<double>(i);
    m.na = (1.0 - t) * o.na[i] + t * o.na[i + 1];
    return m;
}

namespace {

struct Coeffs {
    cplx a, b, den;
    cplx c;  // gamma (delta / Gamma_Y - i)
};

Coeffs coeffs(double omega, const ModePoint& m, double D, const PhysicalParams& p) {
    const double w12 = p.omega12();
    const double gam = p.rate(p.gamma), GY = p.rate(p.Gamma_Y);
    Coeffs c;
    c.a = omega - w12 + I * p.rate(p.Gamma_Z);
    c.b = omega - m.omega_c + I * p.rate(p.Gamma_S);
    c.den = c.a * c.b - 2.0 * m.chi2 * D;
    c.c = gam * ((m.omega_c - w12) / GY - I);
    return c;
}

}  // namespace

cplx initial_correlation(const ModePoint& m, const PhysicalParams& p) {
    if (!(m.chi2 > 0.0)) throw std::domain_error("mode has zero coupling");
    const double gam = p.rate(p.gamma), GY = p.rate(p.Gamma_Y);
    return gam * m.na / (2.0 * std::sqrt(m.chi2)) * ((m.omega_c - p.omega12()) / GY - I);
}

cplx spectrum_S(double omega, const ModePoint& m, double D, const PhysicalParams& p) {
    const auto c = coeffs(omega, m, D, p);
    return I * m.na * (c.a - c.c) / c.den;
}

cplx spectrum_Z(double omega, const ModePoint& m, double D, const PhysicalParams& p) {
    if (!(m.chi2 > 0.0)) throw std::domain_error("mode has zero coupling");
    const auto c = coeffs(omega, m, D, p);
    const cplx S = I * m.na * (c.a - c.c) / c.den;
    return (I * initial_correlation(m, p) - std::sqrt(m.chi2) * S * D) / c.a;
}

std::pair<cplx, cplx> polariton_roots(const ModePoint& m, double D, const PhysicalParams& p) {
    const cplx u = p.omega12() - I * p.rate(p.Gamma_Z);
    const cplx v = m.omega_c - I * p.rate(p.Gamma_S);
    const cplx h = 0.5 * (u - v);
    const cplx s = std::sqrt(h * h + 2.0 * m.chi2 * D);
    cplx r1 = 0.5 * (u + v) - s, r2 = 0.5 * (u + v) + s;
    if (r1.real() > r2.real()) std::swap(r1, r2);
    return {r1, r2};
}

std::vector<double> omega_grid(const PhysicalParams& p, double lo, double hi, std::size_t n) {
    if (n < 2 || !(hi > lo)) throw std::invalid_argument("invalid frequency grid");
    std::vector<double> w(n);
    const double w12 = p.omega12();
    for (std::size_t i = 0; i < n; ++i)
        w[i] = w12 * (lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    return w;
}

std::vector<std::size_t> find_peaks(const std::vector<double>& y) {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i + 1 < y.size(); ++i)
        if (y[i] > y[i - 1] && y[i] >= y[i + 1]) out.push_back(i);
    return out;
}

SpectrumResult compute_spectrum(const ModePoint& m, double D, const PhysicalParams& p,
                                const std::vector<double>& omega) {
    SpectrumResult r;
    r.mode = m;
    r.omega = omega;
    r.S.resize(omega.size());
    r.intensity.resize(omega.size());
    for (std::size_t i = 0; i < omega.size(); ++i) {
        r.S[i] = spectrum_S(omega[i], m, D, p);
        r.intensity[i] = r.S[i].real();
    }
    std::tie(r.omega_minus, r.omega_plus) = polariton_roots(m, D, p);
    for (std::size_t i : find_peaks(r.intensity)) r.peaks.push_back(omega[i]);
    return r;
}

AnticrossingMap anticrossing_map(const Grids& g, const Occupations& o, const PhysicalParams& p,
                                 const std::vector<double>& omega,
                                 const std::vector<std::size_t>& modes) {
    AnticrossingMap map;
    map.omega = omega;
    double D = 0.0;
    for (std::size_t k = 0; k < g.nk(); ++k) D += g.w_k[k] * (o.n1[k] - o.n2[k]);
    std::vector<std::size_t> idx = modes;
    if (idx.empty())
        for (std::size_t q = 0; q < g.nq(); ++q) idx.push_back(q);
    for (std::size_t q : idx) {
        if (q >= g.nq()) throw std::out_of_range("mode index outside the photon grid");
        map.modes.push_back(compute_spectrum(grid_mode(g, o, q), D, p, omega));
    }
    return map;
}

void write_spectrum_csv(std::ostream& os, const AnticrossingMap& map, const PhysicalParams& p) {
    const double w12 = p.omega12();
    os.precision(17);
    os << "omega_c,omega,Re_S,Im_S\n";
    for (const auto& s : map.modes)
        for (std::size_t i = 0; i < s.omega.size(); ++i)
            os << s.mode.omega_c / w12 << ',' << s.omega[i] / w12 << ',' << s.S[i].real() << ','
               << s.S[i].imag() << '\n';
}

void write_map_csv(std::ostream& os, const AnticrossingMap& map, const PhysicalParams& p,
                   bool normalize) {
    const double w12 = p.omega12();
    double peak = 0.0;
    if (normalize)
        for (const auto& s : map.modes)
            for (double v : s.intensity) peak = std::max(peak, v);
    const double scale = normalize && peak > 0.0 ? 1.0 / peak : 1.0;
    os.precision(17);
    os << "omega,omega_c,intensity\n";
    for (const auto& s : map.modes)
        for (std::size_t i = 0; i < s.omega.size(); ++i)
            os << s.omega[i] / w12 << ',' << s.mode.omega_c / w12 << ',' << s.intensity[i] * scale
               << '\n';
}

void write_peaks_csv(std::ostream& os, const AnticrossingMap& map, const PhysicalParams& p) {
    const double w12 = p.omega12();
    os.precision(17);
    os << "omega_c,root_minus_re,root_minus_im,root_plus_re,root_plus_im,peaks\n";
    for (const auto& s : map.modes) {
        os << s.mode.omega_c / w12 << ',' << s.omega_minus.real() / w12 << ','
           << s.omega_minus.imag() / w12 << ',' << s.omega_plus.real() / w12 << ','
           << s.omega_plus.imag() / w12 << ',';
        for (std::size_t i = 0; i < s.peaks.size(); ++i) os << (i ? ";" : "") << s.peaks[i] / w12;
        os << '\n';
    }
}

}  // namespace isbel
