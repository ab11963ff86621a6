#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "isbel/constants.hpp"
#include "isbel/core_model.hpp"

using namespace isbel;
using doctest::Approx;

TEST_CASE("subband energies") {
    PhysicalParams p;
    CHECK(subband_energy(p, 0.0, 1) == 0.0);
    CHECK(subband_energy(p, 0.0, 2) == 150.0);
    CHECK(subband_energy(p, 30.0, 2) == 180.0);
    CHECK_THROWS_AS(subband_energy(p, 0.0, 3), std::invalid_argument);
}

TEST_CASE("parameter validation") {
    PhysicalParams p;
    CHECK_NOTHROW(p.validate());
    p.theta_res = 95.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = PhysicalParams{};
    p.gamma = -0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = PhysicalParams{};
    p.E12 = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("cavity dispersion") {
    PhysicalParams p;
    const Cavity c = Cavity::from(p);
    const double w0 = constants::c_light * c.q_z / std::sqrt(p.eps_r);
    CHECK(cavity_dispersion(c, 0.0) == Approx(w0).epsilon(1e-14));
    CHECK(cavity_dispersion(c, c.q_z) == Approx(std::sqrt(2.0) * w0).epsilon(1e-14));
    CHECK(cavity_dispersion(c, c.q_res) == Approx(p.omega12()).epsilon(1e-13));
    CHECK(c.q_of_omega(c.omega(0.02)) == Approx(0.02).epsilon(1e-12));
}

TEST_CASE("coupling and its calibration") {
    PhysicalParams p;
    const Cavity c = Cavity::from(p);
    CHECK(coupling_chi(c, 0.0) == 0.0);
    // calibrated vacuum Rabi frequency, per-spin density
    const double om = coupling_chi(c, c.q_res) * std::sqrt(2.0 * 0.5 * p.rabi_cal_density);
    CHECK(om / p.omega12() == Approx(0.1).epsilon(1e-13));
    // TM factor: chi^2 omega_c / (q^2 / (qz^2 + q^2)) is constant
    const double far = 1e6 * c.q_z;
    const double r = (c.chi2(c.q_z) * c.omega(c.q_z)) / (c.chi2(far) * c.omega(far));
    CHECK(r == Approx(0.5).epsilon(1e-10));
    p.chi_scale = 3.0;
    CHECK(Cavity::from(p).chi(c.q_res) == Approx(3.0 * c.chi(c.q_res)).epsilon(1e-13));
}

TEST_CASE("Fermi-Dirac function") {
    const double T = 77.0, kT = constants::k_B * T;
    CHECK(fermi_dirac(20.0, 20.0, T) == 0.5);
    CHECK(fermi_dirac(20.0 + 10.0 * kT, 20.0, T) == Approx(4.5397868702e-5).epsilon(1e-9));
    for (double x : {0.1, 1.0, 7.0, 300.0})
        CHECK(fermi_dirac(5.0 + x, 5.0, T) + fermi_dirac(5.0 - x, 5.0, T) == Approx(1.0).epsilon(1e-15));
    CHECK(fermi_dirac(1e6, 0.0, T) == 0.0);
    CHECK(fermi_dirac(-1e6, 0.0, T) == 1.0);
}

TEST_CASE("Fermi level inversion") {
    PhysicalParams p;
    CHECK(std::isinf(solve_fermi_level(p, 0.0)));
    CHECK(solve_fermi_level(p, 1e3) < -15.0 * p.kT());
    for (double n : {1e8, 1e10, 3e11, 2e12, 3e13}) {
        const double ef = solve_fermi_level(p, n);
        CHECK(fermi_density(p, ef) == Approx(n).epsilon(1e-10));
    }
    p.T = 0.5;
    const double n = 5e11;
    CHECK(solve_fermi_level(p, n) == Approx(n / p.dos()).epsilon(1e-6));
}

TEST_CASE("equilibrium occupations") {
    PhysicalParams p;
    const Grids g = build_grids(p, 40, 16);
    const auto zero = equilibrium_occupations(p, g, -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < g.nk(); ++k) {
        CHECK(zero.n1[k] == 0.0);
        CHECK(zero.n2[k] == 0.0);
    }
    const auto at = equilibrium_occupations(p, g, p.E12);
    CHECK(at.n2[0] == 0.5);
    const auto o = equilibrium_occupations(p, g, 40.0);
    for (std::size_t k = 0; k < g.nk(); ++k)
        CHECK(o.n2[k] == fermi_dirac(g.eps[k] + p.E12, 40.0, p.T));
}

TEST_CASE("grid Fermi level") {
    PhysicalParams p;
    const Grids g = build_grids(p, 40, 16);
    for (double ef : {-30.0, 10.0, 60.0}) {
        const double n = grid_fermi_density(p, g, ef);
        CHECK(solve_grid_fermi_level(p, g, n) == Approx(ef).epsilon(1e-10));
    }
}

TEST_CASE("grids") {
    PhysicalParams p;
    const Grids g = build_grids(p, 40, 16, 200.0);
    REQUIRE(g.nk() == 40);
    REQUIRE(g.nq() == 16);
    for (std::size_t k = 1; k < g.nk(); ++k) CHECK(g.eps[k] - g.eps[k - 1] == Approx(g.d_eps));
    CHECK(g.eps.back() == Approx(200.0));
    const double w12 = p.omega12();
    CHECK(g.cavity.omega(g.q.front()) / w12 == Approx(0.6).epsilon(1e-12));
    CHECK(g.cavity.omega(g.q.back()) / w12 == Approx(1.4).epsilon(1e-12));
    double sum = 0.0;
    for (double w : g.w_k) {
        CHECK(w > 0.0);
        sum += w;
    }
    CHECK(sum == Approx(p.dos() * 200.0).epsilon(1e-12));
    for (double w : g.w_q) CHECK(w > 0.0);
    CHECK(default_eps_max(p, 50.0) == p.E12);
    CHECK(default_eps_max(p, 200.0) == Approx(200.0 + 10.0 * p.kT()));
    CHECK_THROWS_AS(build_grids(p, 4, 16), std::invalid_argument);
    CHECK_THROWS_AS(build_grids(p, 40, 16, 0.0, 0.2, 1.4), std::invalid_argument);
}

TEST_CASE("Gregory weights integrate cubics exactly") {
    const auto w = uniform_weights(21, 0.1);
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double x = 0.1 * static_cast<double>(i);
        s += w[i] * (x * x * x - 2.0 * x + 1.0);
    }
    CHECK(s == Approx(4.0 - 4.0 + 2.0).epsilon(1e-13));
}
