#ifndef PERFHOM_PERFHOM_H
#define PERFHOM_PERFHOM_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define PH_API __declspec(dllexport)
#else
#define PH_API __attribute__((visibility("default")))
#endif

typedef enum ph_status {
  PH_OK = 0,
  PH_ERR_ARGUMENT = 1,
  PH_ERR_CONFIG = 2,
  PH_ERR_GEOMETRY = 3,
  PH_ERR_UNDER_RESOLVED = 4,
  PH_ERR_SINGULAR = 5,
  PH_ERR_NO_CONVERGENCE = 6,
  PH_ERR_BREAKDOWN = 7,
  PH_ERR_IO = 8,
  PH_ERR_INTERNAL = 9
} ph_status;

typedef enum ph_command {
  PH_CMD_GEOMETRY_CHECK = 0,
  PH_CMD_CORRECTOR = 1,
  PH_CMD_STUDY = 2,
  PH_CMD_POINCARE = 3,
  PH_CMD_ALL = 4
} ph_command;

typedef struct ph_config ph_config;
typedef struct ph_report ph_report;
typedef struct ph_corrector ph_corrector;

/* Message of the last failed call on this thread; "" if none. */
PH_API const char* ph_last_error(void);
PH_API const char* ph_status_string(ph_status status);
/* Process exit code for a status: 0 ok, 3 solver failures, 2 otherwise. */
PH_API int ph_status_exit_code(ph_status status);
/* Parses a command name ("geometry-check", "corrector", "study", "poincare", "all"). */
PH_API ph_status ph_command_parse(const char* name, ph_command* out);

/* ---- configuration ---- */
PH_API ph_status ph_config_default(ph_config** out);
PH_API ph_status ph_config_load(const char* path, ph_config** out);
PH_API ph_status ph_config_parse(const char* text, ph_config** out);
/* Writes the canonical text into buf (NUL terminated) when it fits; *needed
   always receives the required size including the terminator. */
PH_API ph_status ph_config_serialize(const ph_config* config, char* buf, size_t capacity, size_t* needed);
PH_API ph_status ph_config_set(ph_config* config, const char* section, const char* key, const char* value);
/* 1 when equal, 0 otherwise (also for NULL arguments). */
PH_API int ph_config_equal(const ph_config* a, const ph_config* b);
PH_API void ph_config_free(ph_config* config);

/* ---- runs ---- */
/* out_dir may be NULL (config value), jobs 0 keeps the config value. A verdict
   failure still returns PH_OK; check ph_report_exit_code. */
PH_API ph_status ph_run(ph_command command, const ph_config* config, const char* out_dir, int jobs,
                        int self_test, ph_report** out);
PH_API int ph_report_exit_code(const ph_report* report);
PH_API size_t ph_report_verdict_count(const ph_report* report);
PH_API ph_status ph_report_verdict(const ph_report* report, size_t index, const char** name, int* pass,
                                   const char** measured, const char** expected);
/* "PASS|FAIL name measured expected" lines; owned by the report. */
PH_API const char* ph_report_summary(const ph_report* report);
PH_API const char* ph_report_log(const ph_report* report);
PH_API void ph_report_free(ph_report* report);

/* ---- cell corrector ---- */
/* Disk hole of radius r centred at (cx, cy) in the unit cell, n >= 64 nodes per side. */
PH_API ph_status ph_periodic_corrector_solve(double cx, double cy, double r, int n, ph_corrector** out);
PH_API ph_status ph_corrector_sample(const ph_corrector* w, double y1, double y2, double* value);
PH_API ph_status ph_corrector_max(const ph_corrector* w, double* value);
PH_API void ph_corrector_free(ph_corrector* w);

/* ---- utilities ---- */
PH_API ph_status ph_fit_rate(const double* eps, const double* err, size_t count, double* slope,
                             double* intercept, double* max_residual);

#ifdef __cplusplus
}
#endif

#endif
