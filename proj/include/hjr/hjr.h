#ifndef HJR_H
#define HJR_H

/* C interface to libhjr. Handles are opaque; every fallible call returns a
 * status and leaves a message in hjr_last_error() (per thread). */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define HJR_API __attribute__((visibility("default")))
#else
#define HJR_API
#endif

typedef enum hjr_status {
    HJR_OK = 0,
    HJR_ERR_ARGUMENT = 1,
    HJR_ERR_PARSE = 2,
    HJR_ERR_UNBOUND = 3,
    HJR_ERR_DOMAIN = 4,
    HJR_ERR_DIMENSION = 5,
    HJR_ERR_PRECONDITION = 6,
    HJR_ERR_NUMERIC = 7,
    HJR_ERR_SCHEMA = 8,
    HJR_ERR_IO = 9,
    HJR_ERR_INTERNAL = 10
} hjr_status;

typedef struct hjr_expr hjr_expr;
typedef struct hjr_system hjr_system;
typedef struct hjr_trajectory hjr_trajectory;

HJR_API const char *hjr_version(void);
/* Message of the last failed call on this thread, "" if none. */
HJR_API const char *hjr_last_error(void);
HJR_API const char *hjr_status_name(hjr_status s);
/* Frees strings returned through char** out-parameters. */
HJR_API void hjr_string_free(char *s);

/* Expressions */
HJR_API hjr_status hjr_expr_parse(const char *text, hjr_expr **out);
HJR_API void hjr_expr_free(hjr_expr *e);
HJR_API hjr_status hjr_expr_to_string(const hjr_expr *e, char **out);
HJR_API hjr_status hjr_expr_eval(const hjr_expr *e, const char *const *names, const double *values, size_t count,
                                 double *out);
HJR_API hjr_status hjr_expr_diff(const hjr_expr *e, const char *var, hjr_expr **out);
HJR_API hjr_status hjr_expr_simplify(const hjr_expr *e, hjr_expr **out);

/* Hamiltonian systems on T*R^n */
HJR_API hjr_status hjr_system_create(const char *const *coords, const char *const *momenta, size_t n,
                                     const char *hamiltonian, hjr_system **out);
HJR_API void hjr_system_free(hjr_system *s);
HJR_API size_t hjr_system_dim(const hjr_system *s);
HJR_API hjr_status hjr_system_energy(const hjr_system *s, const double *q, const double *p, double *out);
/* Writes 2n values (q̇, ṗ). */
HJR_API hjr_status hjr_system_vector_field(const hjr_system *s, const double *q, const double *p, double *out);
/* Reference RK4 flow. */
HJR_API hjr_status hjr_system_flow(const hjr_system *s, const double *q0, const double *p0, double t_end, double dt,
                                   hjr_trajectory **out);

/* Trajectories */
HJR_API void hjr_trajectory_free(hjr_trajectory *t);
HJR_API size_t hjr_trajectory_size(const hjr_trajectory *t);
HJR_API size_t hjr_trajectory_dim(const hjr_trajectory *t);
/* q and p receive dim values each; any output may be NULL. */
HJR_API hjr_status hjr_trajectory_sample(const hjr_trajectory *t, size_t i, double *time, double *q, double *p);
HJR_API hjr_status hjr_trajectory_write_csv(const hjr_trajectory *t, const char *path);
HJR_API hjr_status hjr_trajectory_read_csv(const char *path, hjr_trajectory **out);

/* Scenario commands */
typedef struct hjr_run_options {
    double tol;        /* default 1e-8 */
    long grid;         /* <= 0: scenario value */
    long long seed;    /* < 0: scenario value */
    const char *out_dir; /* NULL: current directory */
    double dt;         /* <= 0: scenario value */
    double t_end;      /* <= 0: scenario value */
} hjr_run_options;

HJR_API void hjr_run_options_init(hjr_run_options *o);
/* Runs one command. Returns HJR_OK whenever the command ran; its process exit
 * code (0 ok, 1 residual failure, 2 schema, 3 numeric) goes to *exit_code and
 * the JSON report to *report (free with hjr_string_free). */
HJR_API hjr_status hjr_run(const char *command, const char *scenario_path, const hjr_run_options *options,
                           int *exit_code, char **report);

#ifdef __cplusplus
}
#endif

#endif
