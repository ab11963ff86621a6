#include "isbel/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace isbel {

void DynamicState::axpy(double s, const DynamicState& b) {
    for (std::size_t i = 0; i < na.size(); ++i) na[i] += s * b.na[i];
    for (std::size_t i = 0; i < n1.size(); ++i) n1[i] += s * b.n1[i];
    for (std::size_t i = 0; i < n2.size(); ++i) n2[i] += s * b.n2[i];
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * b.y[i];
    for (std::size_t i = 0; i < Xd.size(); ++i) Xd[i] += s * b.Xd[i];
    for (std::size_t i = 0; i < xo.size(); ++i) xo[i] += s * b.xo[i];
}

double IntegratorConfig::dt_for(const PhysicalParams& p) const {
    return dt > 0.0 ? dt : 0.02 / p.omega12();
}

DynamicsSystem::DynamicsSystem(const PhysicalParams& p, const Grids& g, const RateTables& rates,
                               DynMode mode, XSource src)
    : p_(p), g_(g), rates_(rates), mode_(mode), src_(src), rs_(RateSet::from(p)) {
    if (mode == DynMode::Full && (g.nk() > 16 || g.nq() > 6))
        throw std::invalid_argument("full mode is limited to nk <= 16 and nq <= 6");
}

DynamicState DynamicsSystem::initial(const Occupations& o) const {
    DynamicState s;
    s.na = o.na;
    s.n1 = o.n1;
    s.n2 = o.n2;
    const std::size_t nk = g_.nk(), nq = g_.nq();
    if (mode_ == DynMode::Reduced) return s;
    s.y.assign(nq * nk, cplx(0.0));
    s.Xd.resize(nk);
    for (std::size_t k = 0; k < nk; ++k) s.Xd[k] = 2.0 * o.n2[k] * (1.0 - o.n1[k]);
    if (mode_ == DynMode::Full) s.xo.assign(nq * nk * nk, cplx(0.0));
    return s;
}

DynamicState DynamicsSystem::rhs(const DynamicState& s) const {
    const std::size_t nk = g_.nk(), nq = g_.nq();
    DynamicState d;

    if (mode_ == DynMode::Reduced) {
        StateVector sv = StateVector::pack(Occupations{s.n1, s.n2, s.na});
        const auto ev = residuals(sv, rates_, g_, p_, ef_guess_);
        ef_guess_ = ev.aux.eps_F;
        d.n1.resize(nk);
        d.n2.resize(nk);
        d.na.resize(nq);
        // n1 row divided by its diagonal factor; n2 from the conservation row.
        for (std::size_t k = 0; k < nk; ++k) {
            double A = 0.0;
            for (std::size_t q = 0; q < nq; ++q)
                A += g_.w_q[q] * ev.aux.Bq[q] * g_.chi2[q] / (ev.aux.Gq[q] * rs_.GX);
            const double c = A * (1.0 - ev.aux.Dk[k]) + 0.5;
            d.n1[k] = -ev.r[k] / c;
            d.n2[k] = -ev.r[nk + k] - d.n1[k];
        }
        for (std::size_t q = 0; q < nq; ++q) {
            const double c2 = g_.chi2[q], B = ev.aux.Bq[q], G = ev.aux.Gq[q],
                         dl = ev.aux.delta_q[q];
            const double coef = c2 * ev.aux.D * B * (rs_.gamma + rs_.GX) +
                                c2 * ev.aux.D * dl * dl * rs_.gamma / rs_.GY +
                                G * rs_.GX * rs_.gamma / 2.0;
            const double w3 = rs_.w12 * rs_.w12 * rs_.w12;
            d.na[q] = -ev.r[2 * nk + q] * 2.0 * rs_.gamma * w3 / coef;
        }
        return d;
    }

    d.na.assign(nq, 0.0);
    d.n1.assign(nk, 0.0);
    d.n2.assign(nk, 0.0);
    d.y.assign(nq * nk, cplx(0.0));
    d.Xd.assign(nk, cplx(0.0));
    if (mode_ == DynMode::Full) d.xo.assign(nq * nk * nk, cplx(0.0));

    double N = 0.0, D = 0.0;
    std::vector<double> Dk(nk), Fk(nk);
    for (std::size_t k = 0; k < nk; ++k) {
        N += g_.w_k[k] * (s.n1[k] + s.n2[k]);
        Dk[k] = s.n1[k] - s.n2[k];
        Fk[k] = s.n2[k] * (1.0 - s.n1[k]);
        D += g_.w_k[k] * Dk[k];
    }
    const double ef = solve_grid_fermi_level(p_, g_, N, ef_guess_);
    ef_guess_ = ef;
    const double b = p_.beta();

    std::vector<double> chi(nq);
    for (std::size_t q = 0; q < nq; ++q) chi[q] = std::sqrt(g_.chi2[q]);

    // Z_q = sum_k w y(q,k); W_k = sum_q w chi y(q,k)
    std::vector<cplx> Z(nq, cplx(0.0)), W(nk, cplx(0.0));
    for (std::size_t q = 0; q < nq; ++q)
        for (std::size_t k = 0; k < nk; ++k) {
            const cplx y = s.y[q * nk + k];
            Z[q] += g_.w_k[k] * y;
            W[k] += g_.w_q[q] * chi[q] * y;
        }

    for (std::size_t q = 0; q < nq; ++q)
        d.na[q] = -2.0 * rs_.gamma * s.na[q] - 4.0 * chi[q] * Z[q].imag();

    for (std::size_t k = 0; k < nk; ++k) {
        const double e1 = g_.eps[k];
        const double n10 = fermi_dirac_beta(e1, ef, b);
        const double n20 = fermi_dirac_beta(e1 + p_.E12, ef, b);
        const double n1 = s.n1[k], n2 = s.n2[k];
        d.n1[k] = -(n1 - n10) * rs_.tau_inv - rates_.out1[k] * n1 + rates_.in1[k] * (1.0 - n1) -
                  2.0 * W[k].imag();
        d.n2[k] = -(n2 - n20) * rs_.tau_inv - rates_.out2[k] * n2 + rates_.in2[k] * (1.0 - n2) +
                  2.0 * W[k].imag();
    }

    // Source of the diagonal correlation
    std::vector<cplx> M(nk);
    for (std::size_t k = 0; k < nk; ++k) {
        if (src_ == XSource::Symmetrized)
            M[k] = 2.0 * (1.0 - Dk[k]) * W[k].imag();
        else
            M[k] = cplx(0.0, 1.0) * (1.0 - Dk[k]) * std::conj(W[k]);
    }

    const cplx I(0.0, 1.0);
    if (mode_ == DynMode::AdiabaticX) {
        std::vector<cplx> Xd(nk);
        for (std::size_t k = 0; k < nk; ++k) Xd[k] = 2.0 * Fk[k] + M[k] / rs_.GX;
        for (std::size_t q = 0; q < nq; ++q) {
            const double dl = g_.omega_c[q] - rs_.w12;
            const cplx Zc = std::conj(Z[q]);
            for (std::size_t k = 0; k < nk; ++k) {
                const cplx y = s.y[q * nk + k];
                const cplx xsum = 2.0 * I * chi[q] / rs_.GX * (Dk[k] * Zc - y * D);
                d.y[q * nk + k] = I * (dl + I * rs_.GY) * y - I * chi[q] * (Xd[k] + xsum) +
                                  I * chi[q] * s.na[q] * Dk[k];
            }
        }
        return d;
    }

    // Full mode
    for (std::size_t k = 0; k < nk; ++k) d.Xd[k] = -rs_.GX * (s.Xd[k] - 2.0 * Fk[k]) + M[k];
    for (std::size_t q = 0; q < nq; ++q) {
        const double dl = g_.omega_c[q] - rs_.w12;
        for (std::size_t k = 0; k < nk; ++k) {
            cplx xsum(0.0);
            for (std::size_t kp = 0; kp < nk; ++kp) xsum += g_.w_k[kp] * s.xo[(q * nk + kp) * nk + k];
            const cplx y = s.y[q * nk + k];
            d.y[q * nk + k] = I * (dl + I * rs_.GY) * y - I * chi[q] * (s.Xd[k] + xsum) +
                              I * chi[q] * s.na[q] * Dk[k];
        }
        for (std::size_t kp = 0; kp < nk; ++kp)
            for (std::size_t k = 0; k < nk; ++k) {
                const std::size_t idx = (q * nk + kp) * nk + k;
                d.xo[idx] = -rs_.GX * s.xo[idx] +
                            2.0 * I * chi[q] *
                                (std::conj(s.y[q * nk + kp]) * Dk[k] - s.y[q * nk + k] * Dk[kp]);
            }
    }
    return d;
}

double DynamicsSystem::rhs_norm(const DynamicState& d, const DynamicState& s) const {
    double m = 0.0;
    for (double v : d.n1) m = std::max(m, std::abs(v));
    for (double v : d.n2) m = std::max(m, std::abs(v));
    double na_max = 0.0, dna = 0.0;
    for (std::size_t q = 0; q < s.na.size(); ++q) {
        na_max = std::max(na_max, std::abs(s.na[q]));
        dna = std::max(dna, std::abs(d.na[q]));
    }
    if (na_max > 0.0) m = std::max(m, dna / na_max);
    else m = std::max(m, dna);
    return m;
}

namespace {

TrajectoryRecord record(double t, const DynamicState& s, const Grids& g) {
    TrajectoryRecord r{t, 0.0, 0.0, 0.0, 0.0};
    for (std::size_t q = 0; q < s.na.size(); ++q) r.total_na += g.w_q[q] * s.na[q];
    for (std::size_t k = 0; k < s.n1.size(); ++k) {
        r.density1 += 2.0 * g.w_k[k] * s.n1[k];
        r.density2 += 2.0 * g.w_k[k] * s.n2[k];
    }
    for (const auto& y : s.y) r.y_max = std::max(r.y_max, std::abs(y));
    return r;
}

bool sane(const DynamicState& s, double blowup) {
    for (double v : s.na)
        if (!std::isfinite(v) || std::abs(v) > blowup) return false;
    for (double v : s.n1)
        if (!std::isfinite(v) || v < -1.0 || v > 2.0) return false;
    for (double v : s.n2)
        if (!std::isfinite(v) || v < -1.0 || v > 2.0) return false;
    for (const auto& v : s.y)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || std::abs(v) > blowup) return false;
    return true;
}

}  // namespace

IntegrationResult integrate(const DynamicsSystem& sys, const DynamicState& s0,
                            const IntegratorConfig& cfg, const Grids& g) {
    IntegrationResult res;
    res.state = s0;
    const double dt = cfg.dt > 0.0 ? cfg.dt : throw std::invalid_argument("dt must be positive");
    auto& s = res.state;
    if (cfg.record_stride > 0) res.trajectory.push_back(record(0.0, s, g));
    while (true) {
        DynamicState k1;
        try {
            k1 = sys.rhs(s);
        } catch (const std::exception& e) {
            res.unstable = true;
            res.diagnostic = std::string("right-hand side failed: ") + e.what() + "; reduce dt";
            return res;
        }
        res.rhs_norm = sys.rhs_norm(k1, s);
        if (res.rhs_norm < cfg.tol) {
            res.converged = true;
            return res;
        }
        if (res.t >= cfg.t_max) {
            std::ostringstream msg;
            msg << "t_max reached with rhs norm " << res.rhs_norm;
            res.diagnostic = msg.str();
            return res;
        }
        try {
            DynamicState t = s;
            t.axpy(0.5 * dt, k1);
            DynamicState k2 = sys.rhs(t);
            t = s;
            t.axpy(0.5 * dt, k2);
            DynamicState k3 = sys.rhs(t);
            t = s;
            t.axpy(dt, k3);
            DynamicState k4 = sys.rhs(t);
            s.axpy(dt / 6.0, k1);
            s.axpy(dt / 3.0, k2);
            s.axpy(dt / 3.0, k3);
            s.axpy(dt / 6.0, k4);
        } catch (const std::exception& e) {
            res.unstable = true;
            res.diagnostic = std::string("right-hand side failed: ") + e.what() + "; reduce dt";
            return res;
        }
        res.t += dt;
        ++res.steps;
        if (!sane(s, cfg.blowup)) {
            std::ostringstream msg;
            msg << "state blew up at t = " << res.t << " ps; reduce dt below " << dt;
            res.unstable = true;
            res.diagnostic = msg.str();
            return res;
        }
        if (cfg.record_stride > 0 && res.steps % cfg.record_stride == 0)
            res.trajectory.push_back(record(res.t, s, g));
    }
}

RelaxOutcome relax_to_steady(const DeviceModel& m, double V, const IntegratorConfig& cfg) {
    const auto rates = m.rates(V);
    DynamicsSystem sys(m.phys, m.grids, rates, cfg.mode, cfg.x_source);
    const auto x0 = thermal_start(m).unpack();
    IntegratorConfig c = cfg;
    c.dt = cfg.dt_for(m.phys);
    RelaxOutcome out;
    out.run = integrate(sys, sys.initial(x0), c, m.grids);
    auto& st = out.steady;
    st.V = V;
    st.occ = Occupations{out.run.state.n1, out.run.state.n2, out.run.state.na};
    double N = 0.0;
    for (std::size_t k = 0; k < m.grids.nk(); ++k) N += m.grids.w_k[k] * (st.occ.n1[k] + st.occ.n2[k]);
    st.eps_F = N > 0.0 ? solve_grid_fermi_level(m.phys, m.grids, N) : 0.0;
    st.converged = out.run.converged;
    st.iterations = static_cast<int>(std::min<long>(out.run.steps, 2147483647L));
    st.residual = out.run.rhs_norm;
    st.diagnostic = out.run.diagnostic;
    return out;
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRecord>& tr) {
    os.precision(17);
    os << "t,total_na,density1,density2,y_max\n";
    for (const auto& r : tr)
        os << r.t << ',' << r.total_na << ',' << r.density1 << ',' << r.density2 << ',' << r.y_max
           << '\n';
}

}  // namespace isbel
