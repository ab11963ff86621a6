#include "isbel/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace isbel {

RunConfig::RunConfig() {
    for (int i = -8; i <= 8; ++i) efficiency.chi_scales.push_back(std::pow(10.0, i / 4.0));
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const char* b = v.data();
    const char* e = v.data() + v.size();
    auto r = std::from_chars(b, e, x);
    if (r.ec != std::errc() || r.ptr != e || !std::isfinite(x))
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    return x;
}

long to_int(const std::string& key, const std::string& v) {
    long x = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s;
}

struct KeySpec {
    const char* name;  // section.key
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define NUM(path, field)                                                                     \
    KeySpec {                                                                                \
        path, [](RunConfig& c, const std::string& k, const std::string& v) {                \
            c.field = to_double(k, v);                                                       \
        },                                                                                   \
            [](const RunConfig& c) { return fmt(c.field); }                                  \
    }
#define OPTNUM(path, field)                                                                  \
    KeySpec {                                                                                \
        path, [](RunConfig& c, const std::string& k, const std::string& v) {                \
            if (v.empty())                                                                   \
                c.field.reset();                                                             \
            else                                                                             \
                c.field = to_double(k, v);                                                   \
        },                                                                                   \
            [](const RunConfig& c) { return opt(c.field); }                                  \
    }
#define INT(path, field, type)                                                               \
    KeySpec {                                                                                \
        path, [](RunConfig& c, const std::string& k, const std::string& v) {                \
            const long x = to_int(k, v);                                                     \
            if (x < 0) throw ConfigError(k + ": must not be negative");                      \
            c.field = static_cast<type>(x);                                                  \
        },                                                                                   \
            [](const RunConfig& c) { return std::to_string(c.field); }                       \
    }
#define BOOL(path, field)                                                                    \
    KeySpec {                                                                                \
        path, [](RunConfig& c, const std::string& k, const std::string& v) {                \
            c.field = to_bool(k, v);                                                         \
        },                                                                                   \
            [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }       \
    }

const std::vector<KeySpec>& keys() {
    static const std::vector<KeySpec> table = {
        NUM("physics.E12", physics.E12),
        NUM("physics.m_star", physics.m_star),
        NUM("physics.eps_r", physics.eps_r),
        NUM("physics.theta_res", physics.theta_res),
        NUM("physics.gamma", physics.gamma),
        NUM("physics.Gamma_X", physics.Gamma_X),
        NUM("physics.Gamma_Y", physics.Gamma_Y),
        NUM("physics.Gamma_S", physics.Gamma_S),
        NUM("physics.Gamma_Z", physics.Gamma_Z),
        NUM("physics.tau_inv", physics.tau_inv),
        NUM("physics.T", physics.T),
        NUM("physics.rabi_cal_freq", physics.rabi_cal_freq),
        NUM("physics.rabi_cal_density", physics.rabi_cal_density),
        NUM("physics.chi_scale", physics.chi_scale),
        OPTNUM("contacts.left_E0", contacts.left_E0),
        OPTNUM("contacts.left_mu", contacts.left_mu),
        OPTNUM("contacts.left_Gamma", contacts.left_Gamma),
        OPTNUM("contacts.left_sigma", contacts.left_sigma),
        OPTNUM("contacts.right_E0", contacts.right_E0),
        OPTNUM("contacts.right_mu", contacts.right_mu),
        OPTNUM("contacts.right_Gamma", contacts.right_Gamma),
        OPTNUM("contacts.right_sigma", contacts.right_sigma),
        KeySpec{"contacts.lineup",
                [](RunConfig& c, const std::string& k, const std::string& v) {
                    if (v == "subband_edge")
                        c.contacts.lineup = Lineup::SubbandEdge;
                    else if (v == "flat")
                        c.contacts.lineup = Lineup::Flat;
                    else
                        throw ConfigError(k + ": expected subband_edge or flat, got '" + v + "'");
                },
                [](const RunConfig& c) {
                    return std::string(c.contacts.lineup == Lineup::Flat ? "flat" : "subband_edge");
                }},
        BOOL("contacts.export_rates", contacts.export_rates),
        INT("grids.nk", grids.nk, std::size_t),
        INT("grids.nq", grids.nq, std::size_t),
        NUM("grids.eps_max", grids.eps_max),
        NUM("grids.omega_lo", grids.omega_lo),
        NUM("grids.omega_hi", grids.omega_hi),
        INT("solver.max_iter", solver.max_iter, int),
        NUM("solver.residual_tol", solver.residual_tol),
        NUM("solver.initial_step", solver.initial_step),
        NUM("solver.backtrack", solver.backtrack),
        NUM("solver.min_step", solver.min_step),
        NUM("solver.fd_step", solver.fd_step),
        NUM("solver.dV", solver.dV),
        BOOL("solver.pseudo_transient", solver.pseudo_transient),
        INT("solver.pt_max_steps", solver.pt_max_steps, int),
        INT("solver.polish_steps", solver.polish_steps, int),
        OPTNUM("solve.V", solve.V),
        KeySpec{"solve.method",
                [](RunConfig& c, const std::string& k, const std::string& v) {
                    if (v != "newton" && v != "relax")
                        throw ConfigError(k + ": expected newton or relax, got '" + v + "'");
                    c.solve.method = v;
                },
                [](const RunConfig& c) { return c.solve.method; }},
        OPTNUM("sweep.V_start", sweep.V_start),
        OPTNUM("sweep.V_stop", sweep.V_stop),
        INT("sweep.steps", sweep.steps, int),
        BOOL("sweep.descending", sweep.descending),
        BOOL("sweep.state_dumps", sweep.state_dumps),
        OPTNUM("spectrum.V", spectrum.V),
        NUM("spectrum.omega_lo", spectrum.omega_lo),
        NUM("spectrum.omega_hi", spectrum.omega_hi),
        INT("spectrum.points", spectrum.points, std::size_t),
        KeySpec{"spectrum.modes",
                [](RunConfig& c, const std::string& k, const std::string& v) {
                    c.spectrum.modes.clear();
                    for (const auto& s : split_list(v)) {
                        const long x = to_int(k, s);
                        if (x < 0) throw ConfigError(k + ": mode indices must not be negative");
                        c.spectrum.modes.push_back(static_cast<std::size_t>(x));
                    }
                },
                [](const RunConfig& c) {
                    std::string s;
                    for (std::size_t i = 0; i < c.spectrum.modes.size(); ++i)
                        s += (i ? "," : "") + std::to_string(c.spectrum.modes[i]);
                    return s;
                }},
        BOOL("spectrum.normalize", spectrum.normalize),
        OPTNUM("efficiency.V", efficiency.V),
        KeySpec{"efficiency.chi_scales",
                [](RunConfig& c, const std::string& k, const std::string& v) {
                    c.efficiency.chi_scales.clear();
                    for (const auto& s : split_list(v)) c.efficiency.chi_scales.push_back(to_double(k, s));
                },
                [](const RunConfig& c) { return join(c.efficiency.chi_scales); }},
        KeySpec{"efficiency.tau_factors",
                [](RunConfig& c, const std::string& k, const std::string& v) {
                    c.efficiency.tau_factors.clear();
                    for (const auto& s : split_list(v)) c.efficiency.tau_factors.push_back(to_double(k, s));
                },
                [](const RunConfig& c) { return join(c.efficiency.tau_factors); }},
        INT("efficiency.weak_points", efficiency.weak_points, int),
        INT("efficiency.top_points", efficiency.top_points, int),
        KeySpec{"dynamics.mode",
                [](RunConfig& c, const std::string& k, const std::string& v) {
                    if (v == "full")
                        c.dynamics.mode = DynMode::Full;
                    else if (v == "adiabaticX")
                        c.dynamics.mode = DynMode::AdiabaticX;
                    else if (v == "reduced")
                        c.dynamics.mode = DynMode::Reduced;
                    else
                        throw ConfigError(k + ": expected full, adiabaticX or reduced, got '" + v + "'");
                },
                [](const RunConfig& c) {
                    switch (c.dynamics.mode) {
                        case DynMode::Full: return std::string("full");
                        case DynMode::Reduced: return std::string("reduced");
                        default: return std::string("adiabaticX");
                    }
                }},
        KeySpec{"dynamics.x_source",
                [](RunConfig& c, const std::string& k, const std::string& v) {
                    if (v == "symmetrized")
                        c.dynamics.x_source = XSource::Symmetrized;
                    else if (v == "as_printed")
                        c.dynamics.x_source = XSource::AsPrinted;
                    else
                        throw ConfigError(k + ": expected symmetrized or as_printed, got '" + v + "'");
                },
                [](const RunConfig& c) {
                    return std::string(c.dynamics.x_source == XSource::AsPrinted ? "as_printed"
                                                                                 : "symmetrized");
                }},
        NUM("dynamics.dt", dynamics.dt),
        NUM("dynamics.t_max", dynamics.t_max),
        NUM("dynamics.tol", dynamics.tol),
        INT("dynamics.record_stride", dynamics.record_stride, int),
    };
    return table;
}

#undef NUM
#undef OPTNUM
#undef INT
#undef BOOL

const KeySpec* find_key(const std::string& dotted) {
    for (const auto& k : keys())
        if (dotted == k.name) return &k;
    return nullptr;
}

bool known_section(const std::string& s) {
    for (const auto& k : keys()) {
        const std::string n = k.name;
        if (n.compare(0, n.find('.'), s) == 0 && n.find('.') == s.size()) return true;
    }
    return false;
}

}  // namespace

void set_config_value(RunConfig& c, const std::string& dotted_key, const std::string& value) {
    const KeySpec* k = find_key(dotted_key);
    if (!k) throw ConfigError("unknown key '" + dotted_key + "'");
    k->set(c, dotted_key, trim(value));
}

RunConfig parse_config(const std::string& text, const std::string& name) {
    RunConfig c;
    c.source = name;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = name + ":" + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_section(section)) throw ConfigError(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        if (section.empty()) throw ConfigError(where + "key outside of any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string dotted = section + "." + key;
        const KeySpec* k = find_key(dotted);
        if (!k) throw ConfigError(where + "unknown key '" + key + "' in section [" + section + "]");
        try {
            k->set(c, dotted, trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path);
}

ReservoirParams RunConfig::left() const {
    auto r = default_reservoir(physics, Side::Left);
    if (contacts.left_E0) r.E0 = *contacts.left_E0;
    if (contacts.left_mu) r.mu = *contacts.left_mu;
    if (contacts.left_Gamma) r.Gamma_amp = *contacts.left_Gamma;
    if (contacts.left_sigma) r.sigma = *contacts.left_sigma;
    return r;
}

ReservoirParams RunConfig::right() const {
    auto r = default_reservoir(physics, Side::Right);
    if (contacts.right_E0) r.E0 = *contacts.right_E0;
    if (contacts.right_mu) r.mu = *contacts.right_mu;
    if (contacts.right_Gamma) r.Gamma_amp = *contacts.right_Gamma;
    if (contacts.right_sigma) r.sigma = *contacts.right_sigma;
    return r;
}

void RunConfig::validate() const {
    try {
        physics.validate();
        left().validate();
        right().validate();
        solver.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (grids.nk < 8) throw ConfigError("grids.nk must be at least 8");
    if (grids.nq < 4) throw ConfigError("grids.nq must be at least 4");
    if (grids.eps_max < 0.0) throw ConfigError("grids.eps_max must not be negative");
    if (!(grids.omega_lo > 0.0 && grids.omega_hi > grids.omega_lo))
        throw ConfigError("grids.omega_lo and grids.omega_hi must satisfy 0 < lo < hi");
    if (sweep.steps < 0) throw ConfigError("sweep.steps must not be negative");
    if (!(spectrum.omega_hi > spectrum.omega_lo))
        throw ConfigError("spectrum.omega_hi must exceed spectrum.omega_lo");
    if (spectrum.points < 3) throw ConfigError("spectrum.points must be at least 3");
    for (auto q : spectrum.modes)
        if (q >= grids.nq) throw ConfigError("spectrum.modes: index " + std::to_string(q) + " is outside the photon grid");
    if (efficiency.chi_scales.empty()) throw ConfigError("efficiency.chi_scales must not be empty");
    if (efficiency.tau_factors.empty()) throw ConfigError("efficiency.tau_factors must not be empty");
    for (double s : efficiency.chi_scales)
        if (!(s > 0.0)) throw ConfigError("efficiency.chi_scales entries must be positive");
    for (double s : efficiency.tau_factors)
        if (!(s > 0.0)) throw ConfigError("efficiency.tau_factors entries must be positive");
    if (efficiency.weak_points < 2) throw ConfigError("efficiency.weak_points must be at least 2");
    if (efficiency.top_points < 2) throw ConfigError("efficiency.top_points must be at least 2");
    if (dynamics.dt < 0.0) throw ConfigError("dynamics.dt must not be negative");
    if (!(dynamics.t_max > 0.0)) throw ConfigError("dynamics.t_max must be positive");
    if (!(dynamics.tol > 0.0)) throw ConfigError("dynamics.tol must be positive");
    if (dynamics.mode == DynMode::Full && (grids.nk > 16 || grids.nq > 6))
        throw ConfigError("dynamics.mode = full needs grids.nk <= 16 and grids.nq <= 6");
}

DeviceModel RunConfig::device() const {
    validate();
    DeviceModel m;
    m.phys = physics;
    m.left = left();
    m.right = right();
    m.lineup = contacts.lineup;
    const double eps_max = grids.eps_max > 0.0 ? grids.eps_max
                                               : default_eps_max(physics, std::max(m.left.mu, m.right.mu));
    try {
        m.grids = build_grids(physics, grids.nk, grids.nq, eps_max, grids.omega_lo, grids.omega_hi);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return m;
}

std::string RunConfig::canonical() const {
    std::string s;
    for (const auto& k : keys()) s += std::string(k.name) + " = " + k.get(*this) + "\n";
    return s;
}

std::uint64_t RunConfig::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : canonical()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string RunConfig::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

}  // namespace isbel
