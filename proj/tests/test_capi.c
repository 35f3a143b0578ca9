/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

/* Exercises the shared library through its C header only. */

#define _XOPEN_SOURCE 700

#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <unistd.h>

#include "accelprof/accelprof.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

#define EXPECT_STATUS(expr, want)                                              \
  do {                                                                         \
    accelprof_status got_ = (expr);                                            \
    if (got_ != (want)) {                                                      \
      fprintf(stderr, "%s:%d: %s returned %s (%s), expected %s\n", __FILE__, \
              __LINE__, #expr, accelprof_status_name(got_),                    \
              accelprof_last_error(), accelprof_status_name(want));            \
      ++failures;                                                              \
    }                                                                          \
  } while (0)

static const char* kSpec =
    "preset=cnn-toy\n"
    "layers=2\n"
    "seed=5\n";

static void test_status_names(void) {
  EXPECT(strcmp(accelprof_status_name(ACCELPROF_OK), "ok") == 0);
  EXPECT(strcmp(accelprof_status_name(ACCELPROF_E_UNKNOWN_TOOL), "UnknownTool") == 0);
  EXPECT(strcmp(accelprof_status_name(ACCELPROF_E_CAPACITY_TOO_SMALL), "CapacityTooSmall") == 0);
  EXPECT(strcmp(accelprof_status_name(ACCELPROF_E_TRUNCATED_RECORD), "TruncatedRecord") == 0);
  EXPECT(accelprof_version() != NULL && accelprof_version()[0] != '\0');
  EXPECT(strstr(accelprof_preset_names(), "bert-toy") != NULL);
}

static void test_tools(void) {
  const char* name = NULL;
  size_t i;
  int found = 0;
  EXPECT(accelprof_tool_count() == 6);
  for (i = 0; i < accelprof_tool_count(); ++i) {
    if (strcmp(accelprof_tool_name(i), "kernel-freq") == 0) found = 1;
  }
  EXPECT(found);
  EXPECT(accelprof_tool_name(99) == NULL);
  EXPECT(accelprof_tool_mergeable("memchar") == 1);
  EXPECT(accelprof_tool_mergeable("mem-timeline") == 0);
  EXPECT(accelprof_tool_mergeable("nope") < 0);
  EXPECT_STATUS(accelprof_select_tool("hotness", &name), ACCELPROF_OK);
  EXPECT(name && strcmp(name, "hotness") == 0);
  EXPECT_STATUS(accelprof_select_tool("nope", &name), ACCELPROF_E_UNKNOWN_TOOL);
  EXPECT(strstr(accelprof_last_error(), "kernel-freq") != NULL);
}

static void test_run_and_files(const char* dir) {
  accelprof_trace* trace = NULL;
  accelprof_trace* back = NULL;
  accelprof_report* serial = NULL;
  accelprof_report* parallel = NULL;
  accelprof_report* sim = NULL;
  accelprof_run_config rc;
  accelprof_sim_config sc;
  char path[1024];
  char* csv = NULL;
  FILE* f;
  long size;

  EXPECT_STATUS(accelprof_trace_generate(kSpec, &trace), ACCELPROF_OK);
  if (!trace) return;
  EXPECT(accelprof_trace_event_count(trace) > 100);
  EXPECT_STATUS(accelprof_trace_validate(trace), ACCELPROF_OK);

  snprintf(path, sizeof path, "%s/capi_trace.pasta", dir);
  EXPECT_STATUS(accelprof_trace_write(trace, path, "rmx", 1), ACCELPROF_OK);
  EXPECT_STATUS(accelprof_trace_load(path, 1, &back), ACCELPROF_OK);
  EXPECT(back && accelprof_trace_event_count(back) == accelprof_trace_event_count(trace));
  EXPECT_STATUS(accelprof_trace_write(trace, path, "xml", 1), ACCELPROF_E_INVALID_ARGUMENT);

  accelprof_run_config_init(&rc);
  rc.tool = "memchar";
  rc.timings = 0;
  EXPECT_STATUS(accelprof_run(trace, &rc, &serial), ACCELPROF_OK);
  rc.parallel = 1;
  rc.workers = 4;
  rc.batch_size = 256;
  EXPECT_STATUS(accelprof_run(back, &rc, &parallel), ACCELPROF_OK);
  if (serial && parallel) {
    const char* s = accelprof_report_json(serial);
    const char* p = accelprof_report_json(parallel);
    /* Reports agree up to the engine_stats block, which names the engine. */
    const char* s_stats = strstr(s, "\"engine_stats\"");
    const char* p_stats = strstr(p, "\"engine_stats\"");
    EXPECT(s_stats && p_stats);
    if (s_stats && p_stats) {
      EXPECT(s_stats - s == p_stats - p);
      EXPECT(strncmp(s, p, (size_t)(s_stats - s)) == 0);
    }
    EXPECT(strstr(s, "\"ws_bytes\"") != NULL);
  }

  rc.tool = "mem-timeline";
  EXPECT_STATUS(accelprof_run(trace, &rc, &sim),
                ACCELPROF_E_TOOL_NOT_MERGEABLE);
  rc.parallel = 0;
  rc.workers = 1;
  rc.tool = "attribution";
  EXPECT_STATUS(accelprof_run(trace, &rc, &sim), ACCELPROF_E_NO_KNOB_ENABLED);
  rc.knobs = "MAX_CALLED_KERNEL,NOT_A_KNOB";
  EXPECT_STATUS(accelprof_run(trace, &rc, &sim), ACCELPROF_E_UNKNOWN_KNOB);
  rc.knobs = NULL;
  rc.tool = "bogus";
  EXPECT_STATUS(accelprof_run(trace, &rc, &sim), ACCELPROF_E_UNKNOWN_TOOL);

  rc.tool = "kernel-freq";
  EXPECT_STATUS(accelprof_run_file(path, &rc, &sim), ACCELPROF_OK);
  if (sim) {
    EXPECT_STATUS(accelprof_report_render(sim, "csv", &csv), ACCELPROF_OK);
    EXPECT(csv && strncmp(csv, "kernel,count\n", 13) == 0);
    accelprof_string_free(csv);
    accelprof_report_free(sim);
    sim = NULL;
  }

  accelprof_sim_config_init(&sc);
  sc.oversub = 2.0;
  EXPECT_STATUS(accelprof_simulate(trace, &sc, &sim), ACCELPROF_OK);
  if (sim) {
    EXPECT(strstr(accelprof_report_json(sim), "\"tensor\"") != NULL);
    snprintf(path, sizeof path, "%s/capi_sim.csv", dir);
    EXPECT_STATUS(accelprof_report_write(sim, "csv", path), ACCELPROF_OK);
    accelprof_report_free(sim);
    sim = NULL;
  }
  sc.oversub = 0.5;
  EXPECT_STATUS(accelprof_simulate(trace, &sc, &sim), ACCELPROF_E_INVALID_ARGUMENT);

  /* Truncated file reports the byte offset. */
  snprintf(path, sizeof path, "%s/capi_trace.pasta", dir);
  f = fopen(path, "rb+");
  EXPECT(f != NULL);
  if (f) {
    fseek(f, 0, SEEK_END);
    size = ftell(f);
    fclose(f);
    EXPECT(truncate(path, size / 2) == 0);
    accelprof_trace_free(back);
    back = NULL;
    EXPECT_STATUS(accelprof_trace_load(path, 1, &back), ACCELPROF_E_TRUNCATED_RECORD);
    {
      uint64_t offset = 0;
      EXPECT(accelprof_last_error_offset(&offset) == 1);
      EXPECT(offset > 0 && offset < (uint64_t)size);
    }
  }
  EXPECT_STATUS(accelprof_trace_load("/nonexistent/dir/t.pasta", 1, &back), ACCELPROF_E_IO);
  EXPECT_STATUS(accelprof_trace_generate("layers=0\n", &back), ACCELPROF_E_SPEC);
  EXPECT_STATUS(accelprof_run(NULL, &rc, &sim), ACCELPROF_E_INVALID_ARGUMENT);

  accelprof_report_free(serial);
  accelprof_report_free(parallel);
  accelprof_trace_free(back);
  accelprof_trace_free(trace);
}

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : ".";
  test_status_names();
  test_tools();
  test_run_and_files(dir);
  if (failures) {
    fprintf(stderr, "%d C API checks failed\n", failures);
    return 1;
  }
  printf("C API checks passed\n");
  return 0;
}
