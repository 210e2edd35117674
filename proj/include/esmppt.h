/*
 * C API of the extremum-seeking MPPT simulation library.
 *
 * All entry points return an esmppt_status; non-zero means failure and
 * esmppt_last_error() carries a message for the calling thread. Objects are
 * opaque handles created by *_create_* functions and released by the
 * matching *_destroy. Strings returned through char** are heap-allocated
 * and must be released with esmppt_string_free.
 *
 * Handles are immutable after creation except through the documented
 * *_set functions, so distinct handles may be used from distinct threads
 * concurrently.
 */

#ifndef ESMPPT_H
#define ESMPPT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ESMPPT_API __declspec(dllexport)
#else
#define ESMPPT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum esmppt_status {
  ESMPPT_OK = 0,
  ESMPPT_ERR_INVALID_ARGUMENT = 1,
  ESMPPT_ERR_PARSE = 2,
  ESMPPT_ERR_NO_CONVERGENCE = 3,
  ESMPPT_ERR_DOMAIN = 4,
  ESMPPT_ERR_NONFINITE = 5,
  ESMPPT_ERR_CONDUCTION_MODE = 6,
  ESMPPT_ERR_DEGENERATE = 7,
  ESMPPT_ERR_WINDOW = 8,
  ESMPPT_ERR_IO = 9,
  ESMPPT_ERR_UNKNOWN = 99
} esmppt_status;

typedef struct esmppt_plant esmppt_plant;
typedef struct esmppt_controller esmppt_controller;
typedef struct esmppt_scenario esmppt_scenario;
typedef struct esmppt_trace esmppt_trace;

ESMPPT_API const char* esmppt_version(void);

/* Message for the most recent failure on the calling thread. */
ESMPPT_API const char* esmppt_last_error(void);

ESMPPT_API void esmppt_string_free(char* s);

/* ---- configuration handles (flat key = value files) ---- */

ESMPPT_API esmppt_status esmppt_plant_create_from_file(const char* path,
                                                       esmppt_plant** out);
ESMPPT_API esmppt_status esmppt_plant_create_from_text(const char* text,
                                                       esmppt_plant** out);
ESMPPT_API void esmppt_plant_destroy(esmppt_plant* plant);
ESMPPT_API esmppt_status esmppt_plant_snapshot_json(const esmppt_plant* plant,
                                                    char** json_out);
ESMPPT_API esmppt_status esmppt_plant_reference_env(const esmppt_plant* plant,
                                                    double* g_ref, double* t_ref);

ESMPPT_API esmppt_status esmppt_controller_create_from_file(const char* path,
                                                            esmppt_controller** out);
ESMPPT_API esmppt_status esmppt_controller_create_from_text(const char* text,
                                                            esmppt_controller** out);
ESMPPT_API esmppt_status esmppt_controller_clone(const esmppt_controller* controller,
                                                 esmppt_controller** out);
/* key/value follow the controller config schema, e.g. ("lambda", "0.05") */
ESMPPT_API esmppt_status esmppt_controller_set(esmppt_controller* controller,
                                               const char* key, const char* value);
ESMPPT_API void esmppt_controller_destroy(esmppt_controller* controller);
ESMPPT_API esmppt_status esmppt_controller_snapshot_json(const esmppt_controller* controller,
                                                         char** json_out);

ESMPPT_API esmppt_status esmppt_scenario_create_from_file(const char* path,
                                                          esmppt_scenario** out);
ESMPPT_API esmppt_status esmppt_scenario_create_from_text(const char* text,
                                                          esmppt_scenario** out);
ESMPPT_API esmppt_status esmppt_scenario_clone(const esmppt_scenario* scenario,
                                               esmppt_scenario** out);
ESMPPT_API esmppt_status esmppt_scenario_set(esmppt_scenario* scenario, const char* key,
                                             const char* value);
ESMPPT_API esmppt_status esmppt_scenario_set_seed(esmppt_scenario* scenario,
                                                  uint64_t seed);
ESMPPT_API void esmppt_scenario_destroy(esmppt_scenario* scenario);
ESMPPT_API esmppt_status esmppt_scenario_snapshot_json(const esmppt_scenario* scenario,
                                                       char** json_out);

/* ---- PV module and power stage queries ---- */

/* Fills n_points samples of the I-V/P-V curve from 0 to the open-circuit
 * voltage. Any of the output arrays may be NULL to skip that column. */
ESMPPT_API esmppt_status esmppt_pv_curve(const esmppt_plant* plant, double irradiance,
                                         double temperature_k, int32_t n_points,
                                         double* voltage, double* current,
                                         double* power);

ESMPPT_API esmppt_status esmppt_pv_mpp(const esmppt_plant* plant, double irradiance,
                                       double temperature_k, double* voltage,
                                       double* current, double* power);

ESMPPT_API esmppt_status esmppt_duty_power_curve(const esmppt_plant* plant,
                                                 double irradiance, double temperature_k,
                                                 int32_t n_points, double* duty,
                                                 double* power);

/* Optimal duty, power there, and the second derivative of power w.r.t. duty. */
ESMPPT_API esmppt_status esmppt_optimal_duty(const esmppt_plant* plant, double irradiance,
                                             double temperature_k, double* duty,
                                             double* power, double* curvature);

/* ---- tuning validation ---- */

/* Evaluates the stability conditions against the plant's optimal-point
 * curvature at (irradiance, temperature_k). hard_ok is 1 when both hard
 * conditions hold. report_json receives the full report. */
ESMPPT_API esmppt_status esmppt_validate_tuning(const esmppt_controller* controller,
                                                const esmppt_plant* plant,
                                                double irradiance, double temperature_k,
                                                char** report_json, int32_t* hard_ok);

/* ---- simulation ---- */

ESMPPT_API esmppt_status esmppt_simulate(const esmppt_plant* plant,
                                         const esmppt_controller* controller,
                                         const esmppt_scenario* scenario,
                                         esmppt_trace** out);

/* Built-in shading profile (irradiance dip to 40% and back over 180 s). */
ESMPPT_API esmppt_status esmppt_simulate_shading(const esmppt_plant* plant,
                                                 const esmppt_controller* controller,
                                                 esmppt_trace** out);

ESMPPT_API void esmppt_trace_destroy(esmppt_trace* trace);
ESMPPT_API int32_t esmppt_trace_column_count(void);
ESMPPT_API const char* esmppt_trace_column_name(int32_t index);
ESMPPT_API int64_t esmppt_trace_row_count(const esmppt_trace* trace);
/* 1 when the run stopped early on a non-finite state. */
ESMPPT_API int32_t esmppt_trace_aborted(const esmppt_trace* trace);
ESMPPT_API esmppt_status esmppt_trace_get_column(const esmppt_trace* trace, int32_t index,
                                                 double* out, int64_t capacity);
ESMPPT_API esmppt_status esmppt_trace_write_csv(const esmppt_trace* trace,
                                                const char* path);
ESMPPT_API esmppt_status esmppt_trace_metrics_json(const esmppt_trace* trace,
                                                   double epsilon, char** json_out);

/* Largest prescribed-time horizon fraction resolvable at a given dt. */
ESMPPT_API esmppt_status esmppt_max_safe_stop_fraction(const esmppt_controller* controller,
                                                       double dt, double* fraction);

#ifdef __cplusplus
}
#endif

#endif /* ESMPPT_H */
