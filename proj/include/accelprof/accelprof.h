/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACCELPROF_H
#define ACCELPROF_H

#include <stddef.h>
#include <stdint.h>

#if defined(ACCELPROF_BUILDING_LIBRARY)
#define ACCELPROF_API __attribute__((visibility("default")))
#else
#define ACCELPROF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum accelprof_status {
  ACCELPROF_OK = 0,
  ACCELPROF_E_INVALID_ARGUMENT,
  ACCELPROF_E_IO,
  ACCELPROF_E_BAD_MAGIC,
  ACCELPROF_E_UNSUPPORTED_VERSION,
  ACCELPROF_E_TRUNCATED_RECORD,
  ACCELPROF_E_CORRUPT_RECORD,
  ACCELPROF_E_INVARIANT_VIOLATION,
  ACCELPROF_E_DIALECT_LOSS,
  ACCELPROF_E_PARSE,
  ACCELPROF_E_SPEC,
  ACCELPROF_E_UNKNOWN_TENSOR,
  ACCELPROF_E_SCOPE_MISMATCH,
  ACCELPROF_E_DUPLICATE_NAME,
  ACCELPROF_E_UNKNOWN_TOOL,
  ACCELPROF_E_NO_TOOL_SPECIFIED,
  ACCELPROF_E_UNKNOWN_KNOB,
  ACCELPROF_E_NO_KNOB_ENABLED,
  ACCELPROF_E_UNKNOWN_DEVICE,
  ACCELPROF_E_TOOL,
  ACCELPROF_E_TOOL_NOT_MERGEABLE,
  ACCELPROF_E_EMPTY_PROFILE,
  ACCELPROF_E_PLAN_MISMATCH,
  ACCELPROF_E_CAPACITY_TOO_SMALL,
  ACCELPROF_E_INTERNAL
} accelprof_status;

typedef struct accelprof_trace accelprof_trace;
typedef struct accelprof_report accelprof_report;

ACCELPROF_API const char* accelprof_version(void);
ACCELPROF_API const char* accelprof_status_name(accelprof_status status);

/* Details of the last failure on the calling thread. The message stays
 * valid until the next failing call on that thread. Location getters return
 * 0 when the failure carries no such location. */
ACCELPROF_API const char* accelprof_last_error(void);
ACCELPROF_API int accelprof_last_error_seq(uint64_t* seq);
ACCELPROF_API int accelprof_last_error_offset(uint64_t* byte_offset);
ACCELPROF_API int accelprof_last_error_line(uint64_t* line);

/* ---- traces ---- */

/* Binary traces (any dialect) or, for a ".jsonl" path, the JSON mirror.
 * validate != 0 checks stream invariants while loading. */
ACCELPROF_API accelprof_status accelprof_trace_load(const char* path, int validate,
                                                    accelprof_trace** out);
/* key=value workload spec text; "preset=<name>" loads a named spec first. */
ACCELPROF_API accelprof_status accelprof_trace_generate(const char* spec_text,
                                                        accelprof_trace** out);
/* format: "unified", "nvx", "rmx" or "jsonl". strict != 0 refuses lossy
 * dialect encodings. */
ACCELPROF_API accelprof_status accelprof_trace_write(const accelprof_trace* trace,
                                                     const char* path, const char* format,
                                                     int strict);
ACCELPROF_API accelprof_status accelprof_trace_validate(const accelprof_trace* trace);
ACCELPROF_API uint64_t accelprof_trace_event_count(const accelprof_trace* trace);
ACCELPROF_API void accelprof_trace_free(accelprof_trace* trace);

/* Comma-separated preset names; static storage. */
ACCELPROF_API const char* accelprof_preset_names(void);

/* ---- tools ---- */

ACCELPROF_API size_t accelprof_tool_count(void);
/* NULL when out of range; static storage. */
ACCELPROF_API const char* accelprof_tool_name(size_t index);
/* 1 or 0; -1 for an unknown tool. */
ACCELPROF_API int accelprof_tool_mergeable(const char* name);
/* flag may be NULL; otherwise it wins over PASTA_TOOL. */
ACCELPROF_API accelprof_status accelprof_select_tool(const char* flag, const char** name);

typedef struct accelprof_run_config {
  const char* tool;      /* NULL selects via PASTA_TOOL */
  int parallel;          /* 0 serial, 1 parallel */
  uint32_t workers;
  uint64_t buffer_capacity;
  uint64_t batch_size;
  uint64_t slowdown_ns;  /* per analyzed event */
  int slowdown_spin;     /* 0 paced sleep, 1 busy wait */
  int has_start_grid;    /* unset bounds fall back to START_GRID_ID / END_GRID_ID */
  uint64_t start_grid;
  int has_end_grid;
  uint64_t end_grid;
  const char* labels;    /* comma-separated marker labels or NULL */
  const char* knobs;     /* comma-separated knob names or NULL */
  uint32_t top_k;
  uint64_t window_ns;
  int has_device_pair;
  uint32_t device_a;
  uint32_t device_b;
  int timings;           /* 0 zeroes wall-clock fields in engine_stats */
} accelprof_run_config;

ACCELPROF_API void accelprof_run_config_init(accelprof_run_config* config);

/* Runs the tool over an in-memory trace. The report gains "engine_stats". */
ACCELPROF_API accelprof_status accelprof_run(const accelprof_trace* trace,
                                             const accelprof_run_config* config,
                                             accelprof_report** out);
/* Same, streaming the trace file record by record (JSONL is loaded whole). */
ACCELPROF_API accelprof_status accelprof_run_file(const char* path,
                                                  const accelprof_run_config* config,
                                                  accelprof_report** out);

/* ---- UVM simulation ---- */

typedef struct accelprof_sim_config {
  const char* policy;    /* "none", "object", "tensor" or "all" */
  double oversub;        /* capacity = device footprint / oversub, page aligned */
  uint64_t page_size;
  uint64_t fault_latency_ns;
  double migration_bw;   /* bytes per ns */
  double prefetch_bw;    /* bytes per ns */
  uint64_t prefetch_op_latency_ns;
  int overlap;
  uint32_t device;
  int per_kernel;        /* include per-kernel breakdowns */
} accelprof_sim_config;

ACCELPROF_API void accelprof_sim_config_init(accelprof_sim_config* config);
ACCELPROF_API accelprof_status accelprof_simulate(const accelprof_trace* trace,
                                                  const accelprof_sim_config* config,
                                                  accelprof_report** out);

/* ---- reports ---- */

/* JSON text owned by the report. */
ACCELPROF_API const char* accelprof_report_json(const accelprof_report* report);
/* format "json" or "csv"; *text is released with accelprof_string_free. */
ACCELPROF_API accelprof_status accelprof_report_render(const accelprof_report* report,
                                                       const char* format, char** text);
/* path NULL or "" writes to stdout. */
ACCELPROF_API accelprof_status accelprof_report_write(const accelprof_report* report,
                                                      const char* format, const char* path);
ACCELPROF_API void accelprof_report_free(accelprof_report* report);
ACCELPROF_API void accelprof_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* ACCELPROF_H */
