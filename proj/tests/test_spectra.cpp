#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "isbel/spectra.hpp"
#include "isbel/steady_solver.hpp"

using namespace isbel;
using doctest::Approx;

namespace {

const cplx I(0.0, 1.0);

PhysicalParams params() { return PhysicalParams{}; }

ModePoint mode_at(const PhysicalParams& p, double omega_c, double na) {
    const Cavity c = Cavity::from(p);
    const double q = c.q_of_omega(omega_c);
    return ModePoint{q, omega_c, c.chi2(q), na};
}

// per-spin D giving a vacuum Rabi frequency of omega_R (ps^-1) on mode m
double D_for(const ModePoint& m, double omega_R) { return omega_R * omega_R / (2.0 * m.chi2); }

}  // namespace

TEST_CASE("empty mode emits nothing") {
    const auto p = params();
    const auto m = mode_at(p, 0.9 * p.omega12(), 0.0);
    for (double w : omega_grid(p, 0.5, 1.5, 11)) {
        CHECK(spectrum_S(w, m, 1e10, p) == cplx(0.0));
        CHECK(std::abs(spectrum_Z(w, m, 0.0, p)) == 0.0);
    }
}

TEST_CASE("polariton roots") {
    const auto p = params();
    const double w12 = p.omega12(), G = p.rate(p.Gamma_S);
    auto m = mode_at(p, w12, 1e-3);
    const double D = D_for(m, 0.1 * w12);
    const auto [lo, hi] = polariton_roots(m, D, p);
    const double Om = std::sqrt(2.0 * m.chi2 * D);
    CHECK(hi.real() == Approx(w12 + Om).epsilon(1e-12));
    CHECK(lo.real() == Approx(w12 - Om).epsilon(1e-12));
    CHECK(hi.imag() == Approx(-G).epsilon(1e-12));
    CHECK(lo.imag() == Approx(-G).epsilon(1e-12));

    // denominator vanishes at both roots
    for (cplx r : {lo, hi}) {
        const cplx den = (r - w12 + I * p.rate(p.Gamma_Z)) * (r - m.omega_c + I * G) - 2.0 * m.chi2 * D;
        CHECK(std::abs(den) < 1e-12 * w12 * w12);
    }

    m.omega_c = 0.8 * w12;
    const auto [a, b] = polariton_roots(m, 0.0, p);
    CHECK(std::abs(a - cplx(0.8 * w12, -G)) < 1e-12 * w12);
    CHECK(std::abs(b - cplx(w12, -p.rate(p.Gamma_Z))) < 1e-12 * w12);

    auto p2 = p;
    p2.Gamma_S = 0.14;
    auto r = mode_at(p2, w12, 1e-3);
    const auto [c, d] = polariton_roots(r, D, p2);
    const double dG = p2.rate(p2.Gamma_S) - p2.rate(p2.Gamma_Z);
    CHECK((d - c).real() == Approx(std::sqrt(8.0 * r.chi2 * D - dG * dG)).epsilon(1e-12));
}

TEST_CASE("partial fractions of the photon transform") {
    const auto p = params();
    const double w12 = p.omega12();
    const auto m = mode_at(p, 1.05 * w12, 2e-3);
    const double D = D_for(m, 0.08 * w12);
    const auto [wm, wp] = polariton_roots(m, D, p);
    const double gam = p.rate(p.gamma), GY = p.rate(p.Gamma_Y);
    const cplx c = gam * ((m.omega_c - w12) / GY - I);
    auto a = [&](cplx w) { return w - w12 + I * p.rate(p.Gamma_Z); };
    const cplx Rp = I * m.na * (a(wp) - c) / (wp - wm);
    const cplx Rm = I * m.na * (a(wm) - c) / (wm - wp);
    for (double w : omega_grid(p, 0.6, 1.4, 41)) {
        const cplx S = spectrum_S(w, m, D, p);
        const cplx pf = Rp / (w - wp) + Rm / (w - wm);
        CHECK(std::abs(S - pf) < 1e-12 * std::abs(S));
    }
}

TEST_CASE("transforms satisfy the linear pair") {
    const auto p = params();
    const double w12 = p.omega12();
    for (double wc : {0.85, 1.0, 1.2}) {
        const auto m = mode_at(p, wc * w12, 3e-3);
        const double D = D_for(m, 0.1 * w12);
        const double chi = std::sqrt(m.chi2);
        const cplx Z0 = initial_correlation(m, p);
        for (double w : omega_grid(p, 0.5, 1.5, 21)) {
            const cplx S = spectrum_S(w, m, D, p);
            const cplx Z = spectrum_Z(w, m, D, p);
            const cplx a = w - w12 + I * p.rate(p.Gamma_Z);
            const cplx b = w - m.omega_c + I * p.rate(p.Gamma_S);
            CHECK(std::abs(-I * b * S - 2.0 * I * chi * Z - m.na) < 1e-10 * m.na);
            CHECK(std::abs(-I * a * Z - I * chi * D * S - Z0) < 1e-10 * std::abs(Z0));
        }
    }
}

TEST_CASE("companion transform decays as 1/omega") {
    const auto p = params();
    const double w12 = p.omega12();
    const auto m = mode_at(p, w12, 1e-3);
    const double D = D_for(m, 0.1 * w12);
    const cplx z1 = 1e4 * w12 * spectrum_Z(1e4 * w12, m, D, p);
    const cplx z2 = 1e5 * w12 * spectrum_Z(1e5 * w12, m, D, p);
    CHECK(std::abs(z1 - z2) < 1e-3 * std::abs(z2));
    CHECK_THROWS_AS(spectrum_Z(w12, ModePoint{0.0, w12, 0.0, 1.0}, D, p), std::domain_error);
}

TEST_CASE("resolved doublet matches the roots") {
    auto p = params();
    p.gamma = 1e-12;
    const double w12 = p.omega12();
    const auto m = mode_at(p, w12, 1e-3);
    const double D = D_for(m, 0.4 * w12);
    const auto w = omega_grid(p, 0.3, 1.7, 14001);
    const auto s = compute_spectrum(m, D, p, w);
    REQUIRE(s.peaks.size() == 2);
    const double sep = (s.peaks[1] - s.peaks[0]) / w12;
    CHECK(std::abs(sep - (s.omega_plus - s.omega_minus).real() / w12) < 1e-3);
    CHECK((s.omega_plus - s.omega_minus).real() == Approx(0.8 * w12).epsilon(1e-12));
}

TEST_CASE("far-detuned mode in the weak-damping limit") {
    auto p = params();
    p.gamma = 1e-4;
    const double w12 = p.omega12();
    const auto m = mode_at(p, 0.65 * w12, 1e-3);
    const double D = D_for(m, 0.01 * w12);
    const auto w = omega_grid(p, 0.5, 1.5, 2001);
    const auto s = compute_spectrum(m, D, p, w);
    const auto top = std::max_element(s.intensity.begin(), s.intensity.end());
    CHECK(std::abs(w[top - s.intensity.begin()] - m.omega_c) < 0.01 * w12);
    CHECK(s.peaks.size() == 1);
    // at w12 only the tail of the bare cavity line remains
    const double G = p.rate(p.Gamma_S), dw = w12 - m.omega_c;
    CHECK(s.intensity[1000] == Approx(m.na * G / (dw * dw + G * G)).epsilon(0.02));
}

TEST_CASE("anticrossing map and files") {
    DeviceModel dm;
    dm.left = default_reservoir(dm.phys, Side::Left);
    dm.right = default_reservoir(dm.phys, Side::Right);
    dm.grids = build_grids(dm.phys, 24, 8, default_eps_max(dm.phys, dm.left.mu));
    const auto st = solve_at(0.5 * dm.phys.E12, SolverConfig{}, dm);
    REQUIRE(st.converged);
    const auto w = omega_grid(dm.phys, 0.5, 1.5, 201);
    const auto map = anticrossing_map(dm.grids, st.occ, dm.phys, w);
    CHECK(map.modes.size() == 8);
    const auto sub = anticrossing_map(dm.grids, st.occ, dm.phys, w, {0, 7});
    REQUIRE(sub.modes.size() == 2);
    CHECK(sub.modes[1].S == map.modes[7].S);
    CHECK_THROWS_AS(anticrossing_map(dm.grids, st.occ, dm.phys, w, {8}), std::out_of_range);

    std::ostringstream a, b, c;
    write_spectrum_csv(a, sub, dm.phys);
    write_map_csv(b, sub, dm.phys, true);
    write_peaks_csv(c, sub, dm.phys);
    CHECK(a.str().rfind("omega_c,omega,Re_S,Im_S\n", 0) == 0);
    CHECK(b.str().rfind("omega,omega_c,intensity\n", 0) == 0);
    CHECK(c.str().rfind("omega_c,root_minus_re", 0) == 0);
    const std::string spec = a.str();
    CHECK(std::count(spec.begin(), spec.end(), '\n') == 1 + 2 * 201);

    // normalized map peaks at one
    double peak = 0.0;
    std::istringstream in(b.str());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) peak = std::max(peak, std::stod(line.substr(line.rfind(',') + 1)));
    CHECK(peak == Approx(1.0).epsilon(1e-15));

    const auto rm = resonant_mode(dm.grids, st.occ);
    CHECK(rm.omega_c == Approx(dm.phys.omega12()).epsilon(1e-12));
    CHECK(rm.na > 0.0);
}

TEST_CASE("peak finder") {
    CHECK(find_peaks({0, 1, 0, 2, 2, 1}) == std::vector<std::size_t>{1, 3});
    CHECK(find_peaks({3, 2, 1}).empty());
}
