#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "isbel/dynamics.hpp"

using namespace isbel;
using doctest::Approx;

namespace {

DeviceModel device(std::size_t nk, std::size_t nq, double chi_scale = 1.0) {
    DeviceModel m;
    m.phys.chi_scale = chi_scale;
    m.left = default_reservoir(m.phys, Side::Left);
    m.right = default_reservoir(m.phys, Side::Right);
    m.grids = build_grids(m.phys, nk, nq, default_eps_max(m.phys, m.left.mu));
    return m;
}

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0, s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a[i] - b[i]));
        s = std::max(s, std::abs(b[i]));
    }
    return d / s;
}

}  // namespace

TEST_CASE("decoupled linear block") {
    auto m = device(16, 4, 0.0);
    const auto zero = m.rates(0.0).scaled(0.0);
    DynamicsSystem sys(m.phys, m.grids, zero, DynMode::AdiabaticX);
    auto o = equilibrium_occupations(m.phys, m.grids, 30.0);
    // density-neutral perturbation keeps the relaxation target fixed
    const double a = 0.01;
    o.n1[3] += a;
    o.n1[5] -= a * m.grids.w_k[3] / m.grids.w_k[5];
    o.na.assign(m.grids.nq(), 0.7);
    auto s = sys.initial(o);
    for (std::size_t i = 0; i < s.y.size(); ++i) s.y[i] = cplx(0.3, -0.1 * static_cast<double>(i % 5));
    const auto d = sys.rhs(s);
    const RateSet rs = RateSet::from(m.phys);
    CHECK(d.n1[3] == Approx(-a * rs.tau_inv).epsilon(1e-8));
    CHECK(std::abs(d.n1[7]) < 1e-12 * rs.tau_inv);
    for (std::size_t q = 0; q < m.grids.nq(); ++q) {
        CHECK(d.na[q] == Approx(-2.0 * rs.gamma * 0.7).epsilon(1e-14));
        const double dl = m.grids.omega_c[q] - rs.w12;
        for (std::size_t k = 0; k < m.grids.nk(); ++k) {
            const cplx y = s.y[q * m.grids.nk() + k];
            const cplx expect = cplx(-rs.GY, dl) * y;
            CHECK(std::abs(d.y[q * m.grids.nk() + k] - expect) < 1e-12 * std::abs(expect));
        }
    }
}

TEST_CASE("photon-polarization source in isolation") {
    auto m = device(12, 4);
    const auto zero = m.rates(0.0).scaled(0.0);
    for (DynMode mode : {DynMode::AdiabaticX, DynMode::Full}) {
        DynamicsSystem sys(m.phys, m.grids, zero, mode);
        auto o = equilibrium_occupations(m.phys, m.grids, 30.0);
        for (double& v : o.n2) v = 0.0;
        o.na.assign(m.grids.nq(), 2.0);
        const auto s = sys.initial(o);
        const auto d = sys.rhs(s);
        const std::size_t nk = m.grids.nk();
        for (std::size_t q = 0; q < m.grids.nq(); ++q) {
            const double chi = std::sqrt(m.grids.chi2[q]);
            for (std::size_t k = 0; k < nk; ++k) {
                const cplx expect(0.0, chi * 2.0 * o.n1[k]);
                CHECK(std::abs(d.y[q * nk + k] - expect) <= 1e-14 * std::abs(expect) + 1e-300);
            }
        }
    }
}

TEST_CASE("radiative exchange conserves excitations") {
    auto m = device(12, 4);
    const auto zero = m.rates(0.0).scaled(0.0);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    for (XSource src : {XSource::Symmetrized, XSource::AsPrinted}) {
        DynamicsSystem sys(m.phys, m.grids, zero, DynMode::AdiabaticX, src);
        auto o = equilibrium_occupations(m.phys, m.grids, 30.0);
        o.na.assign(m.grids.nq(), 0.0);
        auto s = sys.initial(o);
        for (auto& y : s.y) y = cplx(n01(rng), n01(rng)) * 1e-3;
        const auto d = sys.rhs(s);
        double photons = 0.0, electrons = 0.0, scale = 0.0;
        for (std::size_t q = 0; q < m.grids.nq(); ++q) {
            photons += m.grids.w_q[q] * d.na[q];
            scale += m.grids.w_q[q] * std::abs(d.na[q]);
        }
        for (std::size_t k = 0; k < m.grids.nk(); ++k) {
            electrons += 2.0 * m.grids.w_k[k] * d.n2[k];
            CHECK(std::abs(d.n1[k] + d.n2[k]) <= 1e-13 * (std::abs(d.n1[k]) + 1e-300));
            CHECK(std::isfinite(d.n1[k]));
        }
        CHECK(std::abs(photons + electrons) < 1e-12 * scale);
    }
}

TEST_CASE("integrator: fixed point stays fixed") {
    auto m = device(12, 4, 0.0);
    const auto zero = m.rates(0.0).scaled(0.0);
    DynamicsSystem sys(m.phys, m.grids, zero, DynMode::AdiabaticX);
    auto o = equilibrium_occupations(m.phys, m.grids, 30.0);
    o.na.assign(m.grids.nq(), 0.0);
    const auto s0 = sys.initial(o);
    IntegratorConfig cfg;
    cfg.dt = 0.01;
    cfg.t_max = 0.2;
    cfg.tol = 0.0;
    const auto r = integrate(sys, s0, cfg, m.grids);
    CHECK(r.steps >= 20);
    CHECK(rel_diff(r.state.n1, s0.n1) < 1e-15);
    CHECK(rel_diff(r.state.n2, s0.n2) < 1e-15);
}

TEST_CASE("RK4 convergence order on photon decay") {
    auto m = device(12, 4, 0.0);
    const auto zero = m.rates(0.0).scaled(0.0);
    DynamicsSystem sys(m.phys, m.grids, zero, DynMode::AdiabaticX);
    auto o = equilibrium_occupations(m.phys, m.grids, 30.0);
    o.na.assign(m.grids.nq(), 1.0);
    const auto s0 = sys.initial(o);
    const double T = 0.125, g2 = 2.0 * m.phys.rate(m.phys.gamma);
    auto err = [&](double dt) {
        IntegratorConfig cfg;
        cfg.dt = dt;
        cfg.t_max = T;
        cfg.tol = 0.0;
        const auto r = integrate(sys, s0, cfg, m.grids);
        REQUIRE(r.t == T);
        return std::abs(r.state.na[0] - std::exp(-g2 * T));
    };
    const double e1 = err(1.0 / 128.0), e2 = err(1.0 / 256.0), e3 = err(1.0 / 512.0);
    CHECK(e1 / e2 == Approx(16.0).epsilon(0.15));
    CHECK(e2 / e3 == Approx(16.0).epsilon(0.15));
}

TEST_CASE("relaxation reaches the Newton steady state") {
    auto m = device(16, 6);
    const double V = m.phys.E12;
    const auto st = solve_at(V, SolverConfig{}, m);
    REQUIRE(st.converged);
    IntegratorConfig cfg;
    cfg.dt = 0.1 / m.phys.omega12();
    cfg.record_stride = 100;
    const auto r = relax_to_steady(m, V, cfg);
    REQUIRE(r.steady.converged);
    CHECK(rel_diff(r.steady.occ.n1, st.occ.n1) < 1e-6);
    CHECK(rel_diff(r.steady.occ.n2, st.occ.n2) < 1e-6);
    CHECK(rel_diff(r.steady.occ.na, st.occ.na) < 1e-6);
    CHECK(r.steady.eps_F == Approx(st.eps_F).epsilon(1e-6));

    std::ostringstream os;
    write_trajectory_csv(os, r.run.trajectory);
    CHECK(os.str().rfind("t,total_na,density1,density2,y_max\n", 0) == 0);
    CHECK(r.run.trajectory.size() > 2);

    cfg.mode = DynMode::Reduced;
    cfg.dt = 0.0;
    const auto red = relax_to_steady(m, V, cfg);
    REQUIRE(red.steady.converged);
    CHECK(rel_diff(red.steady.occ.na, st.occ.na) < 1e-6);
}

TEST_CASE("full X against adiabatic elimination") {
    auto m = device(12, 4);
    const double V = m.phys.E12;
    const auto st = solve_at(V, SolverConfig{}, m);
    REQUIRE(st.converged);
    IntegratorConfig cfg;
    cfg.dt = 0.1 / m.phys.omega12();
    cfg.mode = DynMode::Full;
    const auto r = relax_to_steady(m, V, cfg);
    REQUIRE(r.steady.converged);
    double a = 0.0, b = 0.0;
    for (std::size_t q = 0; q < m.grids.nq(); ++q) {
        a += m.grids.w_q[q] * r.steady.occ.na[q];
        b += m.grids.w_q[q] * st.occ.na[q];
    }
    CHECK(std::abs(a - b) < 0.02 * b);
}

TEST_CASE("dark device") {
    auto m = device(16, 6, 0.0);
    const double V = 120.0;
    IntegratorConfig cfg;
    cfg.dt = 0.1 / m.phys.omega12();
    const auto r = relax_to_steady(m, V, cfg);
    REQUIRE(r.steady.converged);
    for (double na : r.steady.occ.na) CHECK(std::abs(na) < 1e-9);
    const auto st = solve_at(V, SolverConfig{}, m);
    REQUIRE(st.converged);
    CHECK(rel_diff(r.steady.occ.n1, st.occ.n1) < 1e-6);
    CHECK(rel_diff(r.steady.occ.n2, st.occ.n2) < 1e-6);
}

TEST_CASE("full mode is limited to small grids") {
    auto m = device(40, 16);
    const auto R = m.rates(0.0);
    CHECK_THROWS_AS(DynamicsSystem(m.phys, m.grids, R, DynMode::Full), std::invalid_argument);
}
