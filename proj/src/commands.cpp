#include "isbel/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "isbel/observables.hpp"
#include "isbel/spectra.hpp"

namespace isbel {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

class Output {
public:
    Output(const std::string& dir, const RunConfig& cfg, std::string command)
        : dir_(dir), hash_(cfg.hash_hex()), command_(std::move(command)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
    }

    std::ofstream open(const std::string& name) {
        const fs::path path = dir_ / name;
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
        files_.push_back(name);
        return f;
    }

    // CSV with the metadata block.
    std::ofstream csv(const std::string& name) {
        auto f = open(name);
        f << "# isbel " << kVersion << "\n# command: " << command_ << "\n# config_hash: " << hash_
          << "\n";
        return f;
    }

    void json(const std::string& name, ojson body) {
        ojson doc;
        doc["meta"] = {{"version", kVersion}, {"command", command_}, {"config_hash", hash_}};
        for (auto& [k, v] : body.items()) doc[k] = v;
        auto f = open(name);
        f << doc.dump(2) << "\n";
    }

    const std::vector<std::string>& files() const { return files_; }

private:
    fs::path dir_;
    std::string hash_, command_;
    std::vector<std::string> files_;
};

ojson to_json(const ObservableSet& o) {
    return {{"I", o.I},
            {"I_subband2", o.I2},
            {"P", o.P},
            {"eta", o.eta},
            {"D", o.D},
            {"Omega_R_meV", o.Omega_R},
            {"splitting_meV", o.splitting},
            {"D0", o.D0},
            {"P_freespace", o.P_fs},
            {"eta_freespace", o.eta_freespace},
            {"density1", o.density1},
            {"density2", o.density2}};
}

ojson to_json(const SteadyState& st) {
    return {{"V_meV", st.V},
            {"converged", st.converged},
            {"iterations", st.iterations},
            {"residual", st.residual},
            {"eps_F_meV", st.eps_F},
            {"diagnostic", st.diagnostic}};
}

struct TraceLog {
    std::vector<TraceEvent> events;
    TraceSink sink() {
        return [this](const TraceEvent& e) { events.push_back(e); };
    }
    void write(Output& out) const {
        auto f = out.open("trace.jsonl");
        for (const auto& e : events) {
            ojson j = {{"V", e.V}, {"iter", e.iter}, {"phase", e.phase}, {"residual", e.residual},
                       {"step", e.step}};
            f << j.dump() << "\n";
        }
    }
};

double required(const std::optional<double>& v, const char* key) {
    if (!v) throw ConfigError(std::string("missing required key '") + key + "'");
    return *v;
}

RunReport finish(Output& out, RunStatus status, std::string message) {
    return {status, out.files(), std::move(message)};
}

}  // namespace

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / den;
}

std::vector<double> sweep_voltages(const RunConfig& cfg) {
    const double E12 = cfg.physics.E12;
    const double a = cfg.sweep.V_start.value_or(0.2 * E12);
    const double b = cfg.sweep.V_stop.value_or(1.2 * E12);
    const int n = cfg.sweep.steps;
    std::vector<double> V;
    if (n == 0) {
        V.push_back(a);
    } else {
        for (int i = 0; i <= n; ++i) V.push_back(a + (b - a) * i / n);
    }
    if (cfg.sweep.descending) std::reverse(V.begin(), V.end());
    return V;
}

RunReport cmd_solve(const RunConfig& cfg, const std::string& out_dir, const RunOptions& opt) {
    const double V = required(cfg.solve.V, "solve.V");
    const DeviceModel m = cfg.device();
    Output out(out_dir, cfg, "solve");
    TraceLog trace;

    SteadyState st;
    if (cfg.solve.method == "relax") {
        IntegratorConfig ic = cfg.dynamics;
        if (ic.record_stride == 0) ic.record_stride = 50;
        RelaxOutcome r = relax_to_steady(m, V, ic);
        st = r.steady;
        auto f = out.csv("trajectory.csv");
        write_trajectory_csv(f, r.run.trajectory);
    } else {
        st = solve_at(V, cfg.solver, m, opt.trace ? trace.sink() : TraceSink{});
    }

    const RateTables rates = m.rates(V);
    {
        auto f = out.csv("state.csv");
        write_state_csv(f, m.grids, st);
    }
    ojson body = {{"solve", to_json(st)}, {"observables", to_json(compute_observables(st.occ, rates, m.grids, m.phys))}};
    out.json("observables.json", body);
    if (opt.export_rates || cfg.contacts.export_rates) {
        auto f = out.csv("rates.csv");
        write_rates_csv(f, m.grids, rates);
    }
    if (opt.trace) trace.write(out);

    if (!st.converged)
        return finish(out, RunStatus::SolverFailure,
                      "no convergence at V = " + num(V) + " meV: " + st.diagnostic);
    return finish(out, RunStatus::Ok, "");
}

RunReport cmd_sweep_voltage(const RunConfig& cfg, const std::string& out_dir, const RunOptions& opt) {
    const DeviceModel m = cfg.device();
    const std::vector<double> Vs = sweep_voltages(cfg);
    Output out(out_dir, cfg, "sweep");
    TraceLog trace;
    const std::vector<SteadyState> states =
        voltage_sweep(Vs, cfg.solver, m, opt.trace ? trace.sink() : TraceSink{});
    const Grids& g = m.grids;
    const double w12 = g.cavity.omega12;

    std::vector<ObservableSet> obs(states.size());
    for (std::size_t i = 0; i < states.size(); ++i)
        if (states[i].converged) obs[i] = compute_observables(states[i].occ, m.rates(states[i].V), g, m.phys);

    auto sweep = out.csv("sweep.csv");
    auto iv = out.csv("iv.csv");
    auto pi = out.csv("p_vs_i.csv");
    auto dens = out.csv("density_vs_v.csv");
    auto split = out.csv("splitting_vs_v.csv");
    auto pmap = out.csv("photon_map.csv");
    auto omap = out.csv("occupation_map.csv");
    auto fail = out.csv("failures.csv");
    sweep << "V,converged,I,I_subband2,P,eta,D,Omega_R,splitting,eta_freespace,P_freespace,density1,"
             "density2,eps_F,iterations,residual\n";
    iv << "V,I\n";
    pi << "I,P\n";
    dens << "V,density1,density2,D\n";
    split << "V,Omega_R,splitting\n";
    pmap << "V,omega_c,na\n";
    omap << "V,eps_kin,n1,n2\n";
    fail << "V,iterations,residual,diagnostic\n";

    std::size_t failures = 0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const SteadyState& st = states[i];
        const std::string V = num(st.V);
        if (!st.converged) {
            ++failures;
            std::string diag = st.diagnostic;
            std::replace(diag.begin(), diag.end(), ',', ';');
            std::replace(diag.begin(), diag.end(), '\n', ' ');
            fail << V << ',' << st.iterations << ',' << num(st.residual) << ',' << diag << '\n';
            sweep << V << ",false,,,,,,,,,,,,," << st.iterations << ',' << num(st.residual) << '\n';
            continue;
        }
        const ObservableSet& o = obs[i];
        sweep << V << ",true," << num(o.I) << ',' << num(o.I2) << ',' << num(o.P) << ','
              << num(o.eta) << ',' << num(o.D) << ',' << num(o.Omega_R) << ',' << num(o.splitting)
              << ',' << num(o.eta_freespace) << ',' << num(o.P_fs) << ',' << num(o.density1) << ','
              << num(o.density2) << ',' << num(st.eps_F) << ',' << st.iterations << ','
              << num(st.residual) << '\n';
        iv << V << ',' << num(o.I) << '\n';
        pi << num(o.I) << ',' << num(o.P) << '\n';
        dens << V << ',' << num(o.density1) << ',' << num(o.density2) << ',' << num(o.D) << '\n';
        split << V << ',' << num(o.Omega_R) << ',' << num(o.splitting) << '\n';
        for (std::size_t q = 0; q < g.nq(); ++q)
            pmap << V << ',' << num(g.omega_c[q] / w12) << ',' << num(st.occ.na[q]) << '\n';
        for (std::size_t k = 0; k < g.nk(); ++k)
            omap << V << ',' << num(g.eps[k]) << ',' << num(st.occ.n1[k]) << ',' << num(st.occ.n2[k])
                 << '\n';
        if (cfg.sweep.state_dumps) {
            char name[64];
            std::snprintf(name, sizeof name, "states/state_%03zu.csv", i);
            auto f = out.csv(name);
            write_state_csv(f, g, st);
        }
    }
    if (opt.export_rates || cfg.contacts.export_rates) {
        for (std::size_t i = 0; i < states.size(); ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "rates/rates_%03zu.csv", i);
            auto f = out.csv(name);
            f << "# V_meV: " << num(states[i].V) << "\n";
            write_rates_csv(f, g, m.rates(states[i].V));
        }
    }
    if (opt.trace) trace.write(out);

    if (failures == 0) return finish(out, RunStatus::Ok, "");
    if (failures == states.size())
        return finish(out, RunStatus::SolverFailure, "no sweep point converged");
    return finish(out, RunStatus::PartialFailure,
                  std::to_string(failures) + " of " + std::to_string(states.size()) +
                      " sweep points failed; see failures.csv");
}

RunReport cmd_spectrum(const RunConfig& cfg, const std::string& out_dir, const RunOptions& opt) {
    const double V = required(cfg.spectrum.V, "spectrum.V");
    const DeviceModel m = cfg.device();
    Output out(out_dir, cfg, "spectrum");
    TraceLog trace;
    const SteadyState st = solve_at(V, cfg.solver, m, opt.trace ? trace.sink() : TraceSink{});
    {
        auto f = out.csv("state.csv");
        write_state_csv(f, m.grids, st);
    }
    if (opt.trace) trace.write(out);
    if (!st.converged)
        return finish(out, RunStatus::SolverFailure,
                      "no convergence at V = " + num(V) + " meV: " + st.diagnostic);

    const auto omega = omega_grid(m.phys, cfg.spectrum.omega_lo, cfg.spectrum.omega_hi,
                                  cfg.spectrum.points);
    const AnticrossingMap map = anticrossing_map(m.grids, st.occ, m.phys, omega, cfg.spectrum.modes);
    {
        auto f = out.csv("spectrum.csv");
        write_spectrum_csv(f, map, m.phys);
    }
    {
        auto f = out.csv("map.csv");
        write_map_csv(f, map, m.phys, opt.normalize_spectrum || cfg.spectrum.normalize);
    }
    {
        auto f = out.csv("peaks.csv");
        write_peaks_csv(f, map, m.phys);
    }
    const ObservableSet o = compute_observables(st.occ, m.rates(V), m.grids, m.phys);
    out.json("observables.json", {{"solve", to_json(st)}, {"observables", to_json(o)}});
    return finish(out, RunStatus::Ok, "");
}

namespace {

struct EfficiencyPoint {
    double chi_scale = 0, tau_factor = 0;
    bool converged = false;
    ObservableSet obs;
    std::string diagnostic;
};

EfficiencyPoint efficiency_point(const RunConfig& base, double V, double chi, double tau) {
    RunConfig c = base;
    c.physics.chi_scale = chi;
    c.physics.tau_inv = base.physics.tau_inv / tau;
    EfficiencyPoint pt;
    pt.chi_scale = chi;
    pt.tau_factor = tau;
    const DeviceModel m = c.device();
    const SteadyState st = solve_at(V, c.solver, m);
    pt.converged = st.converged;
    pt.diagnostic = st.diagnostic;
    if (st.converged) pt.obs = compute_observables(st.occ, m.rates(V), m.grids, m.phys);
    return pt;
}

}  // namespace

RunReport cmd_efficiency_study(const RunConfig& cfg, const std::string& out_dir,
                               const RunOptions& opt) {
    cfg.validate();
    const double V = cfg.efficiency.V.value_or(cfg.physics.E12);
    const auto& chis = cfg.efficiency.chi_scales;
    const auto& taus = cfg.efficiency.tau_factors;
    Output out(out_dir, cfg, "efficiency");

    const std::size_t ntask = chis.size() * taus.size();
    std::vector<EfficiencyPoint> pts(ntask);
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::string first_error;
    auto worker = [&] {
        for (std::size_t i = next++; i < ntask; i = next++) {
            try {
                pts[i] = efficiency_point(cfg, V, chis[i % chis.size()], taus[i / chis.size()]);
            } catch (const std::exception& e) {
                pts[i].chi_scale = chis[i % chis.size()];
                pts[i].tau_factor = taus[i / chis.size()];
                pts[i].diagnostic = e.what();
                std::lock_guard<std::mutex> lock(err_mu);
                if (first_error.empty()) first_error = e.what();
            }
        }
    };
    const std::size_t nthreads =
        std::clamp<std::size_t>(opt.jobs > 0 ? static_cast<std::size_t>(opt.jobs) : 1, 1, ntask);
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    auto f = out.csv("efficiency.csv");
    f << "chi_scale,tau_factor,converged,Omega_R,eta,eta_freespace,I,P,D\n";
    std::size_t failures = 0;
    for (const auto& p : pts) {
        f << num(p.chi_scale) << ',' << num(p.tau_factor) << ',' << (p.converged ? "true" : "false");
        if (p.converged)
            f << ',' << num(p.obs.Omega_R) << ',' << num(p.obs.eta) << ',' << num(p.obs.eta_freespace)
              << ',' << num(p.obs.I) << ',' << num(p.obs.P) << ',' << num(p.obs.D);
        else
            f << ",,,,,,";
        f << '\n';
        if (!p.converged) ++failures;
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    ojson curves = ojson::array();
    for (std::size_t t = 0; t < taus.size(); ++t) {
        std::vector<std::pair<double, double>> curve;
        for (std::size_t c = 0; c < chis.size(); ++c) {
            const auto& p = pts[t * chis.size() + c];
            if (p.converged && p.obs.Omega_R > 0 && p.obs.eta > 0)
                curve.emplace_back(p.obs.Omega_R, p.obs.eta);
        }
        std::sort(curve.begin(), curve.end());
        std::vector<double> om, eta;
        for (const auto& [x, y] : curve) {
            om.push_back(x);
            eta.push_back(y);
        }
        const std::size_t nw = static_cast<std::size_t>(cfg.efficiency.weak_points);
        const std::size_t nt = static_cast<std::size_t>(cfg.efficiency.top_points);
        double weak = nan, top = nan;
        if (om.size() >= nw)
            weak = loglog_slope({om.begin(), om.begin() + nw}, {eta.begin(), eta.begin() + nw});
        if (om.size() >= nt)
            top = loglog_slope({om.end() - nt, om.end()}, {eta.end() - nt, eta.end()});
        curves.push_back({{"tau_factor", taus[t]},
                          {"points", om.size()},
                          {"weak_slope", weak},
                          {"top_slope", top},
                          {"eta_max", eta.empty() ? nan : *std::max_element(eta.begin(), eta.end())}});
    }

    // eta ratio against the first tau factor, averaged over the weak-coupling points
    ojson ratios = ojson::array();
    for (std::size_t t = 1; t < taus.size(); ++t) {
        double sum = 0;
        int n = 0;
        for (std::size_t c = 0; c < chis.size() && n < cfg.efficiency.weak_points; ++c) {
            const auto& a = pts[c];
            const auto& b = pts[t * chis.size() + c];
            if (a.converged && b.converged && a.obs.eta > 0) {
                sum += b.obs.eta / a.obs.eta;
                ++n;
            }
        }
        ratios.push_back({{"tau_factor", taus[t]},
                          {"relative_to", taus[0]},
                          {"eta_ratio", n ? sum / n : nan},
                          {"tau_ratio", taus[t] / taus[0]}});
    }
    out.json("summary.json", {{"V_meV", V},
                              {"tasks", ntask},
                              {"failures", failures},
                              {"curves", curves},
                              {"tau_ratios", ratios}});

    if (failures == 0) return finish(out, RunStatus::Ok, "");
    const std::string msg = std::to_string(failures) + " of " + std::to_string(ntask) +
                            " efficiency points failed" +
                            (first_error.empty() ? "" : ": " + first_error);
    return finish(out, failures == ntask ? RunStatus::SolverFailure : RunStatus::PartialFailure, msg);
}

RunReport run_command(const std::string& command, const RunConfig& cfg, const std::string& out_dir,
                      const RunOptions& opt) {
    try {
        if (command == "solve") return cmd_solve(cfg, out_dir, opt);
        if (command == "sweep") return cmd_sweep_voltage(cfg, out_dir, opt);
        if (command == "spectrum") return cmd_spectrum(cfg, out_dir, opt);
        if (command == "efficiency") return cmd_efficiency_study(cfg, out_dir, opt);
    } catch (const ConfigError& e) {
        return {RunStatus::ConfigError, {}, e.what()};
    }
    throw std::invalid_argument("unknown command '" + command + "'");
}

}  // namespace isbel
