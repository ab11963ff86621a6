#include <doctest.h>

#include <cmath>
#include <sstream>

#include "isbel/constants.hpp"
#include "isbel/contacts.hpp"

using namespace isbel;
using doctest::Approx;

TEST_CASE("reservoir defaults") {
    PhysicalParams p;
    const auto r = default_reservoir(p, Side::Right);
    CHECK(r.E0 == 75.0);
    CHECK(r.mu == 50.0);
    CHECK(r.Gamma_amp == 2.5);
    CHECK(r.sigma == Approx(15.0));
    auto bad = r;
    bad.sigma = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("out rate examples") {
    PhysicalParams p;
    const auto L = default_reservoir(p, Side::Left);
    for (Lineup lu : {Lineup::SubbandEdge, Lineup::Flat}) {
        const double g0 = L.Gamma_amp * std::exp(-L.E0 * L.E0 / (2.0 * L.sigma * L.sigma));
        CHECK(out_rate(L, p, 1, L.mu, BiasPoint{0.0}, lu) == Approx(0.5 * g0).epsilon(1e-14));
        CHECK(transmission_window(L, p, 1, BiasPoint{2.0 * L.E0}, lu) == L.Gamma_amp);
    }
    const double V = 40.0;
    const double e = L.mu - V / 2.0 + 10.0 * p.kT();
    const double x = L.E0 - V / 2.0;
    const double expect = L.Gamma_amp * std::exp(-x * x / (2.0 * L.sigma * L.sigma)) *
                          (1.0 - 1.0 / (std::exp(10.0) + 1.0));
    CHECK(out_rate(L, p, 1, e, BiasPoint{V}) == Approx(expect).epsilon(1e-14));
    CHECK(effective_mu(L, BiasPoint{V}) == L.mu - 20.0);
    const auto R = default_reservoir(p, Side::Right);
    CHECK(effective_mu(R, BiasPoint{V}) == R.mu + 20.0);
}

TEST_CASE("subband-edge window") {
    PhysicalParams p;
    const auto L = default_reservoir(p, Side::Left);
    // subband 2 is reached when the injector offset meets E12
    const double V = 2.0 * (L.E0 - p.E12);
    CHECK(transmission_window(L, p, 2, BiasPoint{V}) == L.Gamma_amp);
    CHECK(transmission_window(L, p, 2, BiasPoint{0.0}) < 1e-5 * L.Gamma_amp);
}

TEST_CASE("detailed balance of in and out rates") {
    PhysicalParams p;
    const auto L = default_reservoir(p, Side::Left);
    const double V = 60.0;
    const double mu = effective_mu(L, BiasPoint{V});
    CHECK(in_rate(L, p, 1, mu, BiasPoint{V}) == Approx(out_rate(L, p, 1, mu, BiasPoint{V})));
    const double e = mu + p.kT() * std::log(2.0);
    CHECK(in_rate(L, p, 1, e, BiasPoint{V}) / out_rate(L, p, 1, e, BiasPoint{V}) ==
          Approx(0.5).epsilon(1e-13));
    for (int j : {1, 2})
        for (double eps : {0.0, 13.0, 47.0, 120.0}) {
            const double in = in_rate(L, p, j, eps, BiasPoint{V});
            const double out = out_rate(L, p, j, eps, BiasPoint{V});
            CHECK(in / (in + out) ==
                  Approx(fermi_dirac(subband_energy(p, eps, j), mu, p.T)).epsilon(1e-13));
        }
}

TEST_CASE("rate tables") {
    PhysicalParams p;
    const Grids g = build_grids(p, 40, 8);
    const auto L = default_reservoir(p, Side::Left);
    const auto R = default_reservoir(p, Side::Right);
    const auto tl = contact_rates(L, p, g, BiasPoint{0.0});
    const auto tr = contact_rates(R, p, g, BiasPoint{0.0});
    for (std::size_t k = 0; k < g.nk(); ++k) {
        CHECK(tl.in1[k] == tr.in1[k]);
        CHECK(tl.out2[k] == tr.out2[k]);
    }
    auto zl = L, zr = R;
    zl.Gamma_amp = zr.Gamma_amp = 0.0;
    const auto z = total_rates(zl, zr, p, g, BiasPoint{30.0});
    for (std::size_t k = 0; k < g.nk(); ++k) CHECK(z.in1[k] + z.out1[k] + z.in2[k] + z.out2[k] == 0.0);
    const auto t = total_rates(L, R, p, g, BiasPoint{30.0});
    const auto t2 = t.scaled(2.0);
    CHECK(t2.out1[5] == 2.0 * t.out1[5]);

    std::ostringstream os;
    write_rates_csv(os, g, t);
    CHECK(os.str().rfind("eps_kin,Gin1,Gout1,Gin2,Gout2\n", 0) == 0);
}

TEST_CASE("rate tables are smooth in energy") {
    PhysicalParams p;
    const auto L = default_reservoir(p, Side::Left);
    const BiasPoint b{80.0};
    const double mu = effective_mu(L, b), beta = p.beta();
    const double G = transmission_window(L, p, 1, b);
    const double h = 0.01;
    for (double e = 2.0; e < 60.0; e += 3.7) {
        const double fd = (out_rate(L, p, 1, e + h, b) - out_rate(L, p, 1, e - h, b)) / (2.0 * h);
        const double f = fermi_dirac_beta(e, mu, beta);
        const double exact = G * beta * f * (1.0 - f);
        CHECK(fd == Approx(exact).epsilon(0.01));
    }
}

TEST_CASE("elastic backend") {
    PhysicalParams p;
    MinibandSpec empty;
    CHECK(elastic_rate(empty, p, 1, 10.0, Direction::In) == 0.0);

    MinibandSpec m;
    m.mu = 1e6;
    m.levels.push_back({p.E12, 4.0, 7.5});
    const double resonant = 2.0 * constants::pi / constants::hbar * 4.0 / (constants::pi * 7.5);
    CHECK(elastic_rate(m, p, 2, 20.0, Direction::In) == Approx(resonant).epsilon(1e-14));
    CHECK(elastic_rate(m, p, 2, 20.0, Direction::Out) == 0.0);

    MinibandSpec s;
    s.mu = 40.0;
    s.levels = {{-10.0, 1.0, 5.0}, {30.0, 2.5, 7.5}, {160.0, 0.3, 2.0}};
    for (int j : {1, 2})
        for (double eps : {0.0, 25.0, 70.0}) {
            const double in = elastic_rate(s, p, j, eps, Direction::In);
            const double out = elastic_rate(s, p, j, eps, Direction::Out);
            const double e = subband_energy(p, eps, j);
            CHECK(in / out == Approx(std::exp(p.beta() * (s.mu - e))).epsilon(1e-12));
        }
    s.levels[0].eta = 0.0;
    CHECK_THROWS_AS(elastic_rate(s, p, 1, 0.0, Direction::In), std::invalid_argument);
}
