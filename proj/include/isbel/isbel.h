#ifndef ISBEL_H
#define ISBEL_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define ISBEL_API __declspec(dllexport)
#else
#define ISBEL_API __attribute__((visibility("default")))
#endif

typedef enum {
    ISBEL_OK = 0,
    ISBEL_ERR_GENERIC = 1,
    ISBEL_ERR_CONFIG = 2,
    ISBEL_ERR_SOLVER = 3,
    ISBEL_ERR_PARTIAL = 4,
    ISBEL_ERR_ARGUMENT = 5,
    ISBEL_ERR_IO = 6
} isbel_status;

typedef struct isbel_config isbel_config;
typedef struct isbel_state isbel_state;

typedef struct {
    int trace;
    int jobs;
    int normalize_spectrum;
    int export_rates;
} isbel_run_options;

ISBEL_API const char* isbel_version(void);
/* Message of the last failed call on this thread; empty when none. */
ISBEL_API const char* isbel_last_error(void);

ISBEL_API isbel_status isbel_config_new(isbel_config** out);
ISBEL_API isbel_status isbel_config_load(const char* path, isbel_config** out);
ISBEL_API isbel_status isbel_config_parse(const char* text, isbel_config** out);
/* key is "section.key"; value as it would appear in the file. */
ISBEL_API isbel_status isbel_config_set(isbel_config* cfg, const char* key, const char* value);
/* Canonical dump; the returned pointer lives until the next call on cfg. */
ISBEL_API const char* isbel_config_canonical(isbel_config* cfg);
ISBEL_API const char* isbel_config_hash(isbel_config* cfg);
ISBEL_API void isbel_config_free(isbel_config* cfg);

/* command: "solve", "sweep", "spectrum" or "efficiency". opts may be NULL. */
ISBEL_API isbel_status isbel_run(const isbel_config* cfg, const char* command, const char* out_dir,
                                 const isbel_run_options* opts);

/* Steady state at bias V (meV). The handle is returned even without convergence
   together with ISBEL_ERR_SOLVER. */
ISBEL_API isbel_status isbel_solve(const isbel_config* cfg, double V, isbel_state** out);
ISBEL_API int isbel_state_converged(const isbel_state* st);
ISBEL_API size_t isbel_state_nk(const isbel_state* st);
ISBEL_API size_t isbel_state_nq(const isbel_state* st);
/* Arrays: "eps", "n1", "n2", "q", "omega_c", "na". Copies up to len values,
   returns the full length through out_len. */
ISBEL_API isbel_status isbel_state_array(const isbel_state* st, const char* name, double* buf,
                                         size_t len, size_t* out_len);
/* Scalars: "V", "eps_F", "I", "I_subband2", "P", "eta", "D", "Omega_R",
   "splitting", "D0", "P_freespace", "eta_freespace", "density1", "density2". */
ISBEL_API isbel_status isbel_state_observable(const isbel_state* st, const char* name, double* out);
ISBEL_API void isbel_state_free(isbel_state* st);

#ifdef __cplusplus
}
#endif

#endif
