#include "isbel/steady_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace isbel {

StateVector StateVector::pack(const Occupations& o) {
    StateVector s;
    s.nk = o.n1.size();
    s.nq = o.na.size();
    s.x.reserve(2 * s.nk + s.nq);
    s.x.insert(s.x.end(), o.n1.begin(), o.n1.end());
    s.x.insert(s.x.end(), o.n2.begin(), o.n2.end());
    s.x.insert(s.x.end(), o.na.begin(), o.na.end());
    return s;
}

Occupations StateVector::unpack() const {
    Occupations o;
    o.n1.assign(x.begin(), x.begin() + nk);
    o.n2.assign(x.begin() + nk, x.begin() + 2 * nk);
    o.na.assign(x.begin() + 2 * nk, x.end());
    return o;
}

RateSet RateSet::from(const PhysicalParams& p) {
    RateSet r;
    r.w12 = p.omega12();
    r.gamma = p.gamma * r.w12;
    r.GX = p.Gamma_X * r.w12;
    r.GY = p.Gamma_Y * r.w12;
    r.GS = p.Gamma_S * r.w12;
    r.GZ = p.Gamma_Z * r.w12;
    r.tau_inv = p.tau_inv * r.w12;
    return r;
}

AuxQuantities aux_quantities(const StateVector& s, const RateTables& rates, const Grids& g,
                             const PhysicalParams& p, double eps_F_guess) {
    const auto rs = RateSet::from(p);
    const std::size_t nk = s.nk, nq = s.nq;
    AuxQuantities a;
    for (std::size_t k = 0; k < nk; ++k) a.N += g.w_k[k] * (s.n1(k) + s.n2(k));
    if (!(a.N > 0.0)) throw std::domain_error("total density must be positive");
    a.eps_F = solve_grid_fermi_level(p, g, a.N, eps_F_guess);
    const auto eq = equilibrium_occupations(p, g, a.eps_F);
    a.n1_eq = eq.n1;
    a.n2_eq = eq.n2;
    // The level is only resolved to one ulp, which leaves a density mismatch
    // far above the net current at low bias. Shift the equilibrium arrays by
    // the first-order correction so they carry the state's density exactly.
    {
        double dN = 0.0, S = 0.0;
        std::vector<double> d1(nk), d2(nk);
        for (std::size_t k = 0; k < nk; ++k) {
            d1[k] = a.n1_eq[k] * (1.0 - a.n1_eq[k]);
            d2[k] = a.n2_eq[k] * (1.0 - a.n2_eq[k]);
            dN += g.w_k[k] * ((s.n1(k) - a.n1_eq[k]) + (s.n2(k) - a.n2_eq[k]));
            S += g.w_k[k] * (d1[k] + d2[k]);
        }
        const double shift = S > 0.0 ? dN / S : 0.0;
        a.dev1.resize(nk);
        a.dev2.resize(nk);
        for (std::size_t k = 0; k < nk; ++k) {
            // kept as two small pieces; folding the shift into n_eq first
            // would round at the scale of n_eq
            a.dev1[k] = (s.n1(k) - a.n1_eq[k]) - d1[k] * shift;
            a.dev2[k] = (s.n2(k) - a.n2_eq[k]) - d2[k] * shift;
            a.n1_eq[k] += d1[k] * shift;
            a.n2_eq[k] += d2[k] * shift;
        }
        a.eps_F += shift / p.beta();
    }
    a.Dk.resize(nk);
    a.Fk.resize(nk);
    a.R1.resize(nk);
    a.R2.resize(nk);
    a.T1.resize(nk);
    a.T2.resize(nk);
    for (std::size_t k = 0; k < nk; ++k) {
        const double n1 = s.n1(k), n2 = s.n2(k);
        a.Dk[k] = n1 - n2;
        a.Fk[k] = n2 * (1.0 - n1);
        a.D += g.w_k[k] * a.Dk[k];
        a.F += g.w_k[k] * a.Fk[k];
        a.R1[k] = a.dev1[k] * rs.tau_inv + rates.out1[k] * n1 - rates.in1[k] * (1.0 - n1);
        a.R2[k] = a.dev2[k] * rs.tau_inv + rates.out2[k] * n2 - rates.in2[k] * (1.0 - n2);
        a.T1[k] = (std::abs(n1) + std::abs(a.n1_eq[k])) * rs.tau_inv + rates.out1[k] * std::abs(n1) +
                  rates.in1[k] * std::abs(1.0 - n1);
        a.T2[k] = (std::abs(n2) + std::abs(a.n2_eq[k])) * rs.tau_inv + rates.out2[k] * std::abs(n2) +
                  rates.in2[k] * std::abs(1.0 - n2);
    }
    a.near_degenerate = std::abs(a.D) < 1e-8 * a.N;
    a.Bq.resize(nq);
    a.delta_q.resize(nq);
    a.Gq.resize(nq);
    for (std::size_t q = 0; q < nq; ++q) {
        a.Bq[q] = rs.GY + 2.0 * g.chi2[q] * a.D / rs.GX;
        a.delta_q[q] = g.omega_c[q] - rs.w12;
        a.Gq[q] = a.delta_q[q] * a.delta_q[q] + a.Bq[q] * a.Bq[q];
    }
    return a;
}

double ResidualEval::relative_norm() const {
    double m = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double s = scale[i] > 0.0 ? scale[i] : std::numeric_limits<double>::min();
        m = std::max(m, std::abs(r[i]) / s);
    }
    return m;
}

namespace {

// Sums over photon modes entering the subband-1 rows.
struct ModeSums {
    double A = 0, C = 0, Cabs = 0, E = 0;
};

ModeSums mode_sums(const StateVector& s, const AuxQuantities& a, const Grids& g, const RateSet& rs) {
    ModeSums m;
    for (std::size_t q = 0; q < s.nq; ++q) {
        const double w = g.w_q[q], c2 = g.chi2[q], B = a.Bq[q], G = a.Gq[q], d = a.delta_q[q];
        m.A += w * B * c2 / (G * rs.GX);
        const double t1 = rs.GY * B * (rs.gamma + rs.GX), t2 = d * d * rs.gamma;
        m.C += w * c2 * s.na(q) * (t1 + t2) / G;
        m.Cabs += w * c2 * std::abs(s.na(q)) * (std::abs(t1) + t2) / G;
        m.E += w * B * c2 / G;
    }
    return m;
}

// Coefficients of the photon row: row = a * na + b.
void photon_row(const AuxQuantities& a, const Grids& g, const RateSet& rs, std::size_t q,
                double S1, double S1abs, double& coef, double& rhs, double& scale_coef,
                double& scale_rhs) {
    const double c2 = g.chi2[q], B = a.Bq[q], G = a.Gq[q], d = a.delta_q[q];
    const double w3 = rs.w12 * rs.w12 * rs.w12;
    const double t1 = c2 * a.D * B * (rs.gamma + rs.GX);
    const double t2 = c2 * a.D * d * d * rs.gamma / rs.GY;
    const double t3 = G * rs.GX * rs.gamma / 2.0;
    coef = (t1 + t2 + t3) / w3;
    scale_coef = (std::abs(t1) + std::abs(t2) + t3) / w3;
    rhs = (c2 * B * S1 - 2.0 * c2 * B * a.F * rs.GX) / w3;
    scale_rhs = (c2 * std::abs(B) * S1abs + 2.0 * c2 * std::abs(B) * std::abs(a.F) * rs.GX) / w3;
}

}  // namespace

ResidualEval residuals(const StateVector& s, const RateTables& rates, const Grids& g,
                       const PhysicalParams& p, double eps_F_guess) {
    const auto rs = RateSet::from(p);
    ResidualEval ev;
    ev.aux = aux_quantities(s, rates, g, p, eps_F_guess);
    const auto& a = ev.aux;
    const std::size_t nk = s.nk, nq = s.nq;
    ev.r.assign(2 * nk + nq, 0.0);
    ev.scale.assign(2 * nk + nq, 0.0);

    const ModeSums m = mode_sums(s, a, g, rs);
    for (std::size_t k = 0; k < nk; ++k) {
        const double c = m.A * (1.0 - a.Dk[k]) + 0.5;
        const double t2 = a.Dk[k] / (rs.GX * rs.GY) * m.C;
        const double t3 = 2.0 * a.Fk[k] * m.E;
        ev.r[k] = c * a.R1[k] + t2 - t3;
        ev.scale[k] = std::abs(c) * a.T1[k] + std::abs(a.Dk[k]) / (rs.GX * rs.GY) * m.Cabs +
                      std::abs(t3);
        ev.r[nk + k] = a.R1[k] + a.R2[k];
        ev.scale[nk + k] = a.T1[k] + a.T2[k];
    }
    double S1 = 0.0, S1abs = 0.0;
    for (std::size_t k = 0; k < nk; ++k) {
        S1 += g.w_k[k] * (1.0 - a.Dk[k]) * a.R1[k];
        S1abs += g.w_k[k] * std::abs(1.0 - a.Dk[k]) * a.T1[k];
    }
    for (std::size_t q = 0; q < nq; ++q) {
        double coef, rhs, sc, sr;
        photon_row(a, g, rs, q, S1, S1abs, coef, rhs, sc, sr);
        ev.r[2 * nk + q] = coef * s.na(q) + rhs;
        ev.scale[2 * nk + q] = sc * std::abs(s.na(q)) + sr;
    }
    return ev;
}

std::vector<double> photon_balance(const StateVector& s, const RateTables& rates, const Grids& g,
                                   const PhysicalParams& p) {
    const auto rs = RateSet::from(p);
    const auto a = aux_quantities(s, rates, g, p);
    double S1 = 0.0;
    for (std::size_t k = 0; k < s.nk; ++k) S1 += g.w_k[k] * (1.0 - a.Dk[k]) * a.R1[k];
    std::vector<double> na(s.nq);
    for (std::size_t q = 0; q < s.nq; ++q) {
        double coef, rhs, sc, sr;
        photon_row(a, g, rs, q, S1, 0.0, coef, rhs, sc, sr);
        na[q] = -rhs / coef;
    }
    return na;
}

void SolverConfig::validate() const {
    if (!(residual_tol > 0.0)) throw std::invalid_argument("solver.residual_tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("solver.max_iter must be at least 1");
    if (!(backtrack > 0.0 && backtrack < 1.0))
        throw std::invalid_argument("solver.backtrack must lie in (0, 1)");
    if (!(min_step > 0.0 && min_step <= initial_step))
        throw std::invalid_argument("solver.min_step must lie in (0, initial_step]");
    if (!(fd_step > 0.0)) throw std::invalid_argument("solver.fd_step must be positive");
    if (!(dV > 0.0)) throw std::invalid_argument("solver.dV must be positive");
}

namespace {

// Occupations are O(1) quantities and every row is at most bilinear in them,
// so a unit floor keeps difference steps well above roundoff.
std::vector<double> typical_magnitudes(const StateVector& s) {
    std::vector<double> t(s.x.size());
    for (std::size_t i = 0; i < s.x.size(); ++i) t[i] = std::max(std::abs(s.x[i]), 1.0);
    return t;
}

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

Mat jacobian(const StateVector& s, const ResidualEval& base, const RateTables& rates,
             const Grids& g, const PhysicalParams& p, double rel_step, bool central) {
    const std::size_t n = s.x.size();
    Mat J(n, n);
    const auto typ = typical_magnitudes(s);
    StateVector t = s;
    for (std::size_t j = 0; j < n; ++j) {
        const double h = rel_step * typ[j];
        t.x[j] = s.x[j] + h;
        const auto fp = residuals(t, rates, g, p, base.aux.eps_F);
        if (central) {
            t.x[j] = s.x[j] - h;
            const auto fm = residuals(t, rates, g, p, base.aux.eps_F);
            for (std::size_t i = 0; i < n; ++i) J(i, j) = (fp.r[i] - fm.r[i]) / (2.0 * h);
        } else {
            for (std::size_t i = 0; i < n; ++i) J(i, j) = (fp.r[i] - base.r[i]) / h;
        }
        t.x[j] = s.x[j];
    }
    return J;
}

double merit(const std::vector<double>& r, const std::vector<double>& scale) {
    double m = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double s = scale[i] > 0.0 ? scale[i] : std::numeric_limits<double>::min();
        m += (r[i] / s) * (r[i] / s);
    }
    return m;
}

bool try_eval(const StateVector& s, const RateTables& rates, const Grids& g,
              const PhysicalParams& p, double guess, ResidualEval& out) {
    for (double v : s.x)
        if (!std::isfinite(v)) return false;
    try {
        out = residuals(s, rates, g, p, guess);
    } catch (const std::exception&) {
        return false;
    }
    for (double v : out.r)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

std::vector<std::vector<double>> residual_jacobian(const StateVector& s, const RateTables& rates,
                                                   const Grids& g, const PhysicalParams& p,
                                                   double rel_step, bool central) {
    const auto base = residuals(s, rates, g, p);
    const Mat J = jacobian(s, base, rates, g, p, rel_step, central);
    std::vector<std::vector<double>> out(J.rows(), std::vector<double>(J.cols()));
    for (Eigen::Index i = 0; i < J.rows(); ++i)
        for (Eigen::Index j = 0; j < J.cols(); ++j) out[i][j] = J(i, j);
    return out;
}

SteadyState newton_solve(const StateVector& initial, const SolverConfig& cfg,
                         const RateTables& rates, const Grids& g, const PhysicalParams& p,
                         double V, const TraceSink& trace) {
    SteadyState out;
    out.V = V;
    StateVector x = initial;
    const std::size_t n = x.x.size();
    ResidualEval ev;
    if (!try_eval(x, rates, g, p, 0.0, ev)) {
        out.occ = x.unpack();
        out.diagnostic = "initial state is not admissible";
        return out;
    }
    auto finish = [&](bool ok, std::string why) {
        out.occ = x.unpack();
        out.eps_F = ev.aux.eps_F;
        out.converged = ok;
        out.residual = ev.relative_norm();
        out.diagnostic = std::move(why);
        return out;
    };
    auto emit = [&](int it, const char* phase, double step) {
        out.history.push_back(ev.relative_norm());
        if (trace) trace(TraceEvent{V, it, phase, ev.relative_norm(), step});
    };
    emit(0, "newton", 0.0);

    auto solve_step = [&](const Mat& J, double shift) -> Vec {
        Mat A(n, n);
        Vec b(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double s = ev.scale[i] > 0.0 ? ev.scale[i] : std::numeric_limits<double>::min();
            A.row(i) = J.row(i) / s;
            if (shift > 0.0) A(i, i) += std::abs(J(i, i)) / s * shift;
            b(i) = -ev.r[i] / s;
        }
        return A.partialPivLu().solve(b);
    };

    // Full steps past the tolerance while they still reduce the residual;
    // the net current is a small difference of large fluxes at low bias.
    auto polish = [&](StateVector& xs, ResidualEval& e, int& iters) {
        for (int k = 0; k < cfg.polish_steps; ++k) {
            const Mat J = jacobian(xs, e, rates, g, p, cfg.fd_step, false);
            const Vec dx = solve_step(J, 0.0);
            if (!dx.allFinite()) return;
            StateVector xt = xs;
            for (std::size_t i = 0; i < n; ++i) xt.x[i] += dx(i);
            ResidualEval trial;
            if (!try_eval(xt, rates, g, p, e.aux.eps_F, trial)) return;
            if (!(merit(trial.r, e.scale) < 0.25 * merit(e.r, e.scale))) return;
            xs = std::move(xt);
            e = std::move(trial);
            ++iters;
            emit(iters, "polish", 1.0);
        }
    };

    if (ev.relative_norm() < cfg.residual_tol) {
        polish(x, ev, out.iterations);
        return finish(true, "");
    }

    bool stalled = false;
    int it = 0;
    for (; it < cfg.max_iter; ++it) {
        const Mat J = jacobian(x, ev, rates, g, p, cfg.fd_step, false);
        const Vec dx = solve_step(J, 0.0);
        if (!dx.allFinite()) {
            stalled = true;
            break;
        }
        const double phi0 = merit(ev.r, ev.scale);
        double lam = cfg.initial_step;
        bool accepted = false;
        ResidualEval trial;
        StateVector xt = x;
        while (lam >= cfg.min_step) {
            for (std::size_t i = 0; i < n; ++i) xt.x[i] = x.x[i] + lam * dx(i);
            if (try_eval(xt, rates, g, p, ev.aux.eps_F, trial) &&
                merit(trial.r, ev.scale) <= (1.0 - 2e-4 * lam) * phi0) {
                accepted = true;
                break;
            }
            lam *= cfg.backtrack;
        }
        if (!accepted) {
            stalled = true;
            break;
        }
        x = xt;
        ev = std::move(trial);
        ++out.iterations;
        emit(out.iterations, "newton", lam);
        if (ev.relative_norm() < cfg.residual_tol) {
            polish(x, ev, out.iterations);
            return finish(true, "");
        }
    }
    if (!stalled || !cfg.pseudo_transient) {
        return finish(false, stalled ? "line search stalled" : "iteration cap reached");
    }

    // Pseudo-transient continuation: (diag|J|/ds + J) dx = -r with a growing
    // pseudo time step; approaches Newton as ds grows.
    double shift = 1.0;
    double phi_prev = merit(ev.r, ev.scale);
    for (int k = 0; k < cfg.pt_max_steps; ++k) {
        const Mat J = jacobian(x, ev, rates, g, p, cfg.fd_step, false);
        const Vec dx = solve_step(J, shift);
        StateVector xt = x;
        for (std::size_t i = 0; i < n; ++i) xt.x[i] += dx(i);
        ResidualEval trial;
        if (!dx.allFinite() || !try_eval(xt, rates, g, p, ev.aux.eps_F, trial)) {
            shift *= 10.0;
            if (shift > 1e12) break;
            continue;
        }
        const double phi = merit(trial.r, trial.scale);
        x = xt;
        ev = std::move(trial);
        ++out.iterations;
        emit(out.iterations, "ptc", 1.0 / shift);
        if (ev.relative_norm() < cfg.residual_tol) {
            polish(x, ev, out.iterations);
            return finish(true, "");
        }
        shift = std::clamp(shift * std::sqrt(phi / phi_prev), 1e-14, 1e12);
        phi_prev = phi;
    }
    std::ostringstream msg;
    msg << "no convergence after " << out.iterations << " iterations, relative residual "
        << ev.relative_norm();
    return finish(false, msg.str());
}

RateTables DeviceModel::rates(double V) const {
    return total_rates(left, right, phys, grids, BiasPoint{V}, lineup);
}

StateVector thermal_start(const DeviceModel& m) {
    const double mu = 0.5 * (m.left.mu + m.right.mu);
    Occupations o;
    o.n1.resize(m.grids.nk());
    o.n2.resize(m.grids.nk());
    o.na.assign(m.grids.nq(), 0.0);
    const double b = m.phys.beta();
    for (std::size_t k = 0; k < m.grids.nk(); ++k) {
        o.n1[k] = fermi_dirac_beta(subband_energy(m.phys, m.grids.eps[k], 1), mu, b);
        o.n2[k] = fermi_dirac_beta(subband_energy(m.phys, m.grids.eps[k], 2), mu, b);
    }
    auto s = StateVector::pack(o);
    const auto na = photon_balance(s, m.rates(0.0), m.grids, m.phys);
    std::copy(na.begin(), na.end(), s.x.begin() + 2 * s.nk);
    return s;
}

StateVector flux_balanced_start(const DeviceModel& m, double V) {
    const auto R = m.rates(V);
    const auto& g = m.grids;
    const double b = m.phys.beta();
    auto net = [&](double ef) {
        double s = 0.0;
        for (std::size_t k = 0; k < g.nk(); ++k) {
            const double f1 = fermi_dirac_beta(subband_energy(m.phys, g.eps[k], 1), ef, b);
            const double f2 = fermi_dirac_beta(subband_energy(m.phys, g.eps[k], 2), ef, b);
            s += g.w_k[k] * (R.out1[k] * f1 - R.in1[k] * (1.0 - f1) + R.out2[k] * f2 -
                             R.in2[k] * (1.0 - f2));
        }
        return s;
    };
    double lo = -m.phys.E12, hi = 2.0 * m.phys.E12;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * m.phys.E12; ++it) {
        const double mid = 0.5 * (lo + hi);
        (net(mid) > 0.0 ? hi : lo) = mid;
    }
    const auto o = equilibrium_occupations(m.phys, g, 0.5 * (lo + hi));
    auto s = StateVector::pack(o);
    const auto na = photon_balance(s, R, g, m.phys);
    std::copy(na.begin(), na.end(), s.x.begin() + 2 * s.nk);
    return s;
}

namespace {

// Walks from a converged state at V0 to V1 with steps no larger than dV,
// halving on failure.
SteadyState continue_to(const StateVector& from, double V0, double V1, const SolverConfig& cfg,
                        const DeviceModel& m, const TraceSink& trace) {
    StateVector x = from;
    double Vc = V0;
    double step = std::min(cfg.dV, std::abs(V1 - V0));
    const double dir = V1 >= V0 ? 1.0 : -1.0;
    int total = 0;
    while (true) {
        const double Vn = std::abs(V1 - Vc) <= step ? V1 : Vc + dir * step;
        auto st = newton_solve(x, cfg, m.rates(Vn), m.grids, m.phys, Vn, trace);
        total += st.iterations;
        if (st.converged) {
            x = StateVector::pack(st.occ);
            Vc = Vn;
            if (Vn == V1) {
                st.iterations = total;
                return st;
            }
            step = std::min(cfg.dV, 2.0 * step);
        } else {
            step *= 0.5;
            if (step < cfg.dV / 64.0) {
                st.iterations = total;
                return st;
            }
        }
    }
}

}  // namespace

SteadyState solve_at(double V, const SolverConfig& cfg, const DeviceModel& m,
                     const TraceSink& trace) {
    auto st = newton_solve(flux_balanced_start(m, V), cfg, m.rates(V), m.grids, m.phys, V, trace);
    if (st.converged) return st;
    const auto x0 = thermal_start(m);
    st = newton_solve(x0, cfg, m.rates(V), m.grids, m.phys, V, trace);
    if (st.converged) return st;
    st = continue_to(x0, 0.0, V, cfg, m, trace);
    st.V = V;
    return st;
}

std::vector<SteadyState> voltage_sweep(const std::vector<double>& V_list, const SolverConfig& cfg,
                                       const DeviceModel& m, const TraceSink& trace) {
    if (V_list.empty()) throw std::invalid_argument("voltage list is empty");
    std::vector<SteadyState> out;
    out.reserve(V_list.size());
    bool have = false;
    StateVector warm;
    double V_warm = 0.0;
    for (double V : V_list) {
        SteadyState st;
        if (!have) {
            st = solve_at(V, cfg, m, trace);
        } else {
            st = newton_solve(warm, cfg, m.rates(V), m.grids, m.phys, V, trace);
            if (!st.converged) {
                st = continue_to(warm, V_warm, V, cfg, m, trace);
                st.V = V;
            }
        }
        if (st.converged) {
            warm = StateVector::pack(st.occ);
            V_warm = V;
            have = true;
        }
        out.push_back(std::move(st));
    }
    return out;
}

void write_state_csv(std::ostream& os, const Grids& g, const SteadyState& st) {
    os.precision(17);
    os << "# format: isbel-state 1\n";
    os << "# V_meV: " << st.V << "\n";
    os << "# eps_F_meV: " << st.eps_F << "\n";
    os << "# converged: " << (st.converged ? "true" : "false") << "\n";
    os << "grid,coord,n1,n2,na\n";
    for (std::size_t k = 0; k < g.nk(); ++k)
        os << "k," << g.eps[k] << ',' << st.occ.n1[k] << ',' << st.occ.n2[k] << ",\n";
    for (std::size_t q = 0; q < g.nq(); ++q) os << "q," << g.q[q] << ",,," << st.occ.na[q] << '\n';
}

}  // namespace isbel
