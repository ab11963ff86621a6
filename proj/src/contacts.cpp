#include "isbel/contacts.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "isbel/constants.hpp"

namespace isbel {

void ReservoirParams::validate() const {
    const char* s = side == Side::Left ? "left" : "right";
    if (!(Gamma_amp > 0.0)) throw std::invalid_argument(std::string("contacts.") + s + "_Gamma must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument(std::string("contacts.") + s + "_sigma must be positive");
}

ReservoirParams default_reservoir(const PhysicalParams& p, Side side) {
    ReservoirParams r;
    r.side = side;
    r.E0 = 0.5 * p.E12;
    r.mu = p.E12 / 3.0;
    r.Gamma_amp = 1.0 / 0.4;
    r.sigma = 0.1 * p.E12;
    return r;
}

namespace {
double sign_of(Side s) { return s == Side::Left ? 1.0 : -1.0; }
}  // namespace

double effective_mu(const ReservoirParams& r, BiasPoint bias) {
    return r.mu - sign_of(r.side) * 0.5 * bias.V;
}

double transmission_window(const ReservoirParams& r, const PhysicalParams& p, int j,
                           BiasPoint bias, Lineup lineup) {
    double x = r.E0 - sign_of(r.side) * 0.5 * bias.V;
    if (lineup == Lineup::SubbandEdge) x -= subband_energy(p, 0.0, j);
    return r.Gamma_amp * std::exp(-x * x / (2.0 * r.sigma * r.sigma));
}

double out_rate(const ReservoirParams& r, const PhysicalParams& p, int j, double eps_kin,
                BiasPoint bias, Lineup lineup) {
    const double e = subband_energy(p, eps_kin, j);
    // 1 / (1 + e^{beta(mu_eff - e)}) is the empty-state probability in the reservoir
    const double empty = fermi_dirac_beta(effective_mu(r, bias), e, p.beta());
    return transmission_window(r, p, j, bias, lineup) * empty;
}

double in_rate(const ReservoirParams& r, const PhysicalParams& p, int j, double eps_kin,
               BiasPoint bias, Lineup lineup) {
    const double e = subband_energy(p, eps_kin, j);
    const double filled = fermi_dirac_beta(e, effective_mu(r, bias), p.beta());
    return transmission_window(r, p, j, bias, lineup) * filled;
}

RateTables& RateTables::operator+=(const RateTables& o) {
    for (std::size_t i = 0; i < in1.size(); ++i) {
        in1[i] += o.in1[i];
        out1[i] += o.out1[i];
        in2[i] += o.in2[i];
        out2[i] += o.out2[i];
    }
    return *this;
}

RateTables RateTables::scaled(double s) const {
    RateTables t = *this;
    for (auto* v : {&t.in1, &t.out1, &t.in2, &t.out2})
        for (double& x : *v) x *= s;
    return t;
}

RateTables contact_rates(const ReservoirParams& r, const PhysicalParams& p, const Grids& g,
                         BiasPoint bias, Lineup lineup) {
    RateTables t;
    const std::size_t n = g.nk();
    t.in1.resize(n);
    t.out1.resize(n);
    t.in2.resize(n);
    t.out2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.in1[i] = in_rate(r, p, 1, g.eps[i], bias, lineup);
        t.out1[i] = out_rate(r, p, 1, g.eps[i], bias, lineup);
        t.in2[i] = in_rate(r, p, 2, g.eps[i], bias, lineup);
        t.out2[i] = out_rate(r, p, 2, g.eps[i], bias, lineup);
    }
    return t;
}

RateTables total_rates(const ReservoirParams& left, const ReservoirParams& right,
                       const PhysicalParams& p, const Grids& g, BiasPoint bias, Lineup lineup) {
    RateTables t = contact_rates(left, p, g, bias, lineup);
    t += contact_rates(right, p, g, bias, lineup);
    return t;
}

void write_rates_csv(std::ostream& os, const Grids& g, const RateTables& t) {
    os << "eps_kin,Gin1,Gout1,Gin2,Gout2\n";
    os.precision(17);
    for (std::size_t i = 0; i < g.nk(); ++i)
        os << g.eps[i] << ',' << t.in1[i] << ',' << t.out1[i] << ',' << t.in2[i] << ','
           << t.out2[i] << '\n';
}

double elastic_rate(const MinibandSpec& m, const PhysicalParams& p, int j, double eps_kin,
                    Direction dir) {
    const double e = subband_energy(p, eps_kin, j);
    const double edge = subband_energy(p, 0.0, j);
    double s = 0.0;
    for (const auto& lv : m.levels) {
        if (!(lv.eta > 0.0)) throw std::invalid_argument("miniband broadening must be positive");
        const double x = lv.edge - edge;
        s += lv.coupling2 * lv.eta / constants::pi / (x * x + lv.eta * lv.eta);
    }
    const double occ = dir == Direction::In ? fermi_dirac_beta(e, m.mu, p.beta())
                                            : fermi_dirac_beta(m.mu, e, p.beta());
    return 2.0 * constants::pi / constants::hbar * s * occ;
}

}  // namespace isbel
