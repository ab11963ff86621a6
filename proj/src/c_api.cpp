#include "isbel/isbel.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "isbel/commands.hpp"
#include "isbel/observables.hpp"

struct isbel_config {
    isbel::RunConfig cfg;
    std::string scratch;
};

struct isbel_state {
    isbel::Grids grids;
    isbel::SteadyState st;
    isbel::ObservableSet obs;
};

namespace {

thread_local std::string last_error;

isbel_status fail(isbel_status s, const std::string& msg) {
    last_error = msg;
    return s;
}

template <class F>
isbel_status guarded(F&& f) {
    last_error.clear();
    try {
        return f();
    } catch (const isbel::ConfigError& e) {
        return fail(ISBEL_ERR_CONFIG, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(ISBEL_ERR_ARGUMENT, e.what());
    } catch (const std::bad_alloc&) {
        return fail(ISBEL_ERR_GENERIC, "out of memory");
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(ISBEL_ERR_IO, e.what());
    } catch (const std::runtime_error& e) {
        const std::string m = e.what();
        return fail(m.rfind("cannot ", 0) == 0 ? ISBEL_ERR_IO : ISBEL_ERR_GENERIC, m);
    } catch (const std::exception& e) {
        return fail(ISBEL_ERR_GENERIC, e.what());
    }
}

}  // namespace

extern "C" {

const char* isbel_version(void) { return isbel::kVersion; }

const char* isbel_last_error(void) { return last_error.c_str(); }

isbel_status isbel_config_new(isbel_config** out) {
    if (!out) return fail(ISBEL_ERR_ARGUMENT, "null output pointer");
    return guarded([&] {
        *out = new isbel_config{};
        return ISBEL_OK;
    });
}

isbel_status isbel_config_load(const char* path, isbel_config** out) {
    if (!path || !out) return fail(ISBEL_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        *out = new isbel_config{isbel::load_config(path), {}};
        return ISBEL_OK;
    });
}

isbel_status isbel_config_parse(const char* text, isbel_config** out) {
    if (!text || !out) return fail(ISBEL_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        *out = new isbel_config{isbel::parse_config(text), {}};
        return ISBEL_OK;
    });
}

isbel_status isbel_config_set(isbel_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) return fail(ISBEL_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        isbel::set_config_value(cfg->cfg, key, value);
        return ISBEL_OK;
    });
}

const char* isbel_config_canonical(isbel_config* cfg) {
    if (!cfg) return "";
    cfg->scratch = cfg->cfg.canonical();
    return cfg->scratch.c_str();
}

const char* isbel_config_hash(isbel_config* cfg) {
    if (!cfg) return "";
    cfg->scratch = cfg->cfg.hash_hex();
    return cfg->scratch.c_str();
}

void isbel_config_free(isbel_config* cfg) { delete cfg; }

isbel_status isbel_run(const isbel_config* cfg, const char* command, const char* out_dir,
                       const isbel_run_options* opts) {
    if (!cfg || !command || !out_dir) return fail(ISBEL_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        isbel::RunOptions o;
        if (opts) {
            o.trace = opts->trace != 0;
            o.jobs = opts->jobs;
            o.normalize_spectrum = opts->normalize_spectrum != 0;
            o.export_rates = opts->export_rates != 0;
        }
        const auto r = isbel::run_command(command, cfg->cfg, out_dir, o);
        if (r.status == isbel::RunStatus::Ok) return ISBEL_OK;
        return fail(static_cast<isbel_status>(r.status), r.message);
    });
}

isbel_status isbel_solve(const isbel_config* cfg, double V, isbel_state** out) {
    if (!cfg || !out) return fail(ISBEL_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        const isbel::DeviceModel m = cfg->cfg.device();
        auto* s = new isbel_state{m.grids, isbel::solve_at(V, cfg->cfg.solver, m), {}};
        s->obs = isbel::compute_observables(s->st.occ, m.rates(V), m.grids, m.phys);
        *out = s;
        if (!s->st.converged) return fail(ISBEL_ERR_SOLVER, "no convergence: " + s->st.diagnostic);
        return ISBEL_OK;
    });
}

int isbel_state_converged(const isbel_state* st) { return st && st->st.converged ? 1 : 0; }

size_t isbel_state_nk(const isbel_state* st) { return st ? st->grids.nk() : 0; }

size_t isbel_state_nq(const isbel_state* st) { return st ? st->grids.nq() : 0; }

isbel_status isbel_state_array(const isbel_state* st, const char* name, double* buf, size_t len,
                               size_t* out_len) {
    if (!st || !name) return fail(ISBEL_ERR_ARGUMENT, "null argument");
    const std::vector<double>* v = nullptr;
    const std::string n = name;
    if (n == "eps") v = &st->grids.eps;
    else if (n == "n1") v = &st->st.occ.n1;
    else if (n == "n2") v = &st->st.occ.n2;
    else if (n == "q") v = &st->grids.q;
    else if (n == "omega_c") v = &st->grids.omega_c;
    else if (n == "na") v = &st->st.occ.na;
    else return fail(ISBEL_ERR_ARGUMENT, "unknown array '" + n + "'");
    if (out_len) *out_len = v->size();
    if (buf) std::memcpy(buf, v->data(), std::min(len, v->size()) * sizeof(double));
    last_error.clear();
    return ISBEL_OK;
}

isbel_status isbel_state_observable(const isbel_state* st, const char* name, double* out) {
    if (!st || !name || !out) return fail(ISBEL_ERR_ARGUMENT, "null argument");
    const std::string n = name;
    const auto& o = st->obs;
    if (n == "V") *out = st->st.V;
    else if (n == "eps_F") *out = st->st.eps_F;
    else if (n == "I") *out = o.I;
    else if (n == "I_subband2") *out = o.I2;
    else if (n == "P") *out = o.P;
    else if (n == "eta") *out = o.eta;
    else if (n == "D") *out = o.D;
    else if (n == "Omega_R") *out = o.Omega_R;
    else if (n == "splitting") *out = o.splitting;
    else if (n == "D0") *out = o.D0;
    else if (n == "P_freespace") *out = o.P_fs;
    else if (n == "eta_freespace") *out = o.eta_freespace;
    else if (n == "density1") *out = o.density1;
    else if (n == "density2") *out = o.density2;
    else return fail(ISBEL_ERR_ARGUMENT, "unknown observable '" + n + "'");
    last_error.clear();
    return ISBEL_OK;
}

void isbel_state_free(isbel_state* st) { delete st; }

}  // extern "C"
