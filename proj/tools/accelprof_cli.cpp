/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

// accelprof: generate, analyze, validate and UVM-simulate accelerator traces.
//
// Exit codes: 0 success, 1 usage error, 2 data error (bad trace or spec
// input), 3 tool error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "accelprof/accelprof.h"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kTool = 3 };

int exit_for(accelprof_status s) {
  switch (s) {
    case ACCELPROF_OK: return kOk;
    case ACCELPROF_E_INVALID_ARGUMENT:
    case ACCELPROF_E_UNKNOWN_TOOL:
    case ACCELPROF_E_NO_TOOL_SPECIFIED:
    case ACCELPROF_E_UNKNOWN_KNOB:
    case ACCELPROF_E_NO_KNOB_ENABLED:
    case ACCELPROF_E_TOOL_NOT_MERGEABLE:
    case ACCELPROF_E_CAPACITY_TOO_SMALL:
    case ACCELPROF_E_DUPLICATE_NAME: return kUsage;
    case ACCELPROF_E_TOOL:
    case ACCELPROF_E_SCOPE_MISMATCH:
    case ACCELPROF_E_UNKNOWN_DEVICE:
    case ACCELPROF_E_EMPTY_PROFILE:
    case ACCELPROF_E_PLAN_MISMATCH:
    case ACCELPROF_E_INTERNAL: return kTool;
    default: return kData;
  }
}

int report_failure(accelprof_status s) {
  std::cerr << "accelprof: " << accelprof_status_name(s) << ": " << accelprof_last_error() << '\n';
  uint64_t v = 0;
  if (accelprof_last_error_offset(&v)) std::cerr << "  at byte offset " << v << '\n';
  if (accelprof_last_error_seq(&v)) std::cerr << "  at event seq " << v << '\n';
  if (accelprof_last_error_line(&v)) std::cerr << "  at line " << v << '\n';
  return exit_for(s);
}

struct TraceHandle {
  accelprof_trace* p = nullptr;
  ~TraceHandle() { accelprof_trace_free(p); }
};

struct ReportHandle {
  accelprof_report* p = nullptr;
  ~ReportHandle() { accelprof_report_free(p); }
};

std::string usage_error(CLI::App& app, const std::string& what) {
  return "accelprof: " + what + "\n\n" + app.help();
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& i : items) out += (out.empty() ? "" : ",") + i;
  return out;
}

struct GenArgs {
  std::string spec_file;
  std::string preset;
  std::vector<std::string> settings;
  std::string out;
  std::string format;
  bool lenient = false;
};

int cmd_gen(const GenArgs& a) {
  std::string text;
  if (!a.spec_file.empty()) {
    std::ifstream in(a.spec_file);
    if (!in) {
      std::cerr << "accelprof: cannot read spec file " << a.spec_file << '\n';
      return kData;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str() + "\n";
  }
  if (!a.preset.empty()) text = "preset=" + a.preset + "\n" + text;
  for (const auto& s : a.settings) text += s + "\n";
  std::string format = a.format;
  if (format.empty()) format = ends_with(a.out, ".jsonl") ? "jsonl" : "unified";

  TraceHandle trace;
  if (auto s = accelprof_trace_generate(text.c_str(), &trace.p); s != ACCELPROF_OK) {
    return report_failure(s);
  }
  if (auto s = accelprof_trace_write(trace.p, a.out.c_str(), format.c_str(), a.lenient ? 0 : 1);
      s != ACCELPROF_OK) {
    return report_failure(s);
  }
  std::cerr << "wrote " << accelprof_trace_event_count(trace.p) << " events to " << a.out << '\n';
  return kOk;
}

struct RunArgs {
  std::string trace;
  std::optional<std::string> tool;
  std::string engine = "serial";
  uint32_t workers = 1;
  uint64_t buffer_capacity = 0;
  uint64_t batch_size = 0;
  uint64_t slowdown_ns = 0;
  std::string slowdown_mode = "latency";
  std::optional<uint64_t> start_grid;
  std::optional<uint64_t> end_grid;
  std::vector<std::string> labels;
  std::vector<std::string> knobs;
  uint32_t top_k = 20;
  uint64_t window_ns = 1'000'000;
  std::vector<uint32_t> device_pair;
  std::string format = "json";
  std::string out;
  bool no_timings = false;
};

int cmd_run(const RunArgs& a) {
  accelprof_run_config c;
  accelprof_run_config_init(&c);
  const std::string labels = join(a.labels);
  const std::string knobs = join(a.knobs);
  c.tool = a.tool ? a.tool->c_str() : nullptr;
  c.parallel = a.engine == "parallel";
  c.workers = a.workers;
  if (a.buffer_capacity) c.buffer_capacity = a.buffer_capacity;
  if (a.batch_size) c.batch_size = a.batch_size;
  c.slowdown_ns = a.slowdown_ns;
  c.slowdown_spin = a.slowdown_mode == "spin";
  c.has_start_grid = a.start_grid.has_value();
  c.start_grid = a.start_grid.value_or(0);
  c.has_end_grid = a.end_grid.has_value();
  c.end_grid = a.end_grid.value_or(0);
  c.labels = labels.empty() ? nullptr : labels.c_str();
  c.knobs = knobs.empty() ? nullptr : knobs.c_str();
  c.top_k = a.top_k;
  c.window_ns = a.window_ns;
  if (!a.device_pair.empty()) {
    c.has_device_pair = 1;
    c.device_a = a.device_pair[0];
    c.device_b = a.device_pair[1];
  }
  c.timings = a.no_timings ? 0 : 1;

  ReportHandle report;
  if (auto s = accelprof_run_file(a.trace.c_str(), &c, &report.p); s != ACCELPROF_OK) {
    return report_failure(s);
  }
  if (auto s = accelprof_report_write(report.p, a.format.c_str(), a.out.c_str()); s != ACCELPROF_OK) {
    return report_failure(s);
  }
  return kOk;
}

struct SimArgs {
  std::string trace;
  std::string policy = "all";
  double oversub = 1.0;
  std::optional<uint64_t> page_size;
  std::optional<uint64_t> fault_latency_ns;
  std::optional<double> migration_bw;
  std::optional<double> prefetch_bw;
  std::optional<uint64_t> prefetch_op_latency_ns;
  bool no_overlap = false;
  uint32_t device = 0;
  bool per_kernel = false;
  std::string format = "json";
  std::string out;
};

int cmd_sim(const SimArgs& a) {
  TraceHandle trace;
  if (auto s = accelprof_trace_load(a.trace.c_str(), 1, &trace.p); s != ACCELPROF_OK) {
    return report_failure(s);
  }
  accelprof_sim_config c;
  accelprof_sim_config_init(&c);
  c.policy = a.policy.c_str();
  c.oversub = a.oversub;
  if (a.page_size) c.page_size = *a.page_size;
  if (a.fault_latency_ns) c.fault_latency_ns = *a.fault_latency_ns;
  if (a.migration_bw) c.migration_bw = *a.migration_bw;
  if (a.prefetch_bw) c.prefetch_bw = *a.prefetch_bw;
  if (a.prefetch_op_latency_ns) c.prefetch_op_latency_ns = *a.prefetch_op_latency_ns;
  c.overlap = a.no_overlap ? 0 : 1;
  c.device = a.device;
  c.per_kernel = a.per_kernel ? 1 : 0;

  ReportHandle report;
  if (auto s = accelprof_simulate(trace.p, &c, &report.p); s != ACCELPROF_OK) {
    return report_failure(s);
  }
  if (auto s = accelprof_report_write(report.p, a.format.c_str(), a.out.c_str()); s != ACCELPROF_OK) {
    return report_failure(s);
  }
  return kOk;
}

int cmd_validate(const std::string& path) {
  TraceHandle trace;
  if (auto s = accelprof_trace_load(path.c_str(), 0, &trace.p); s != ACCELPROF_OK) {
    return report_failure(s);
  }
  if (auto s = accelprof_trace_validate(trace.p); s != ACCELPROF_OK) return report_failure(s);
  std::cout << "ok: " << accelprof_trace_event_count(trace.p) << " events\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::string tool_list;
  for (size_t i = 0; i < accelprof_tool_count(); ++i) {
    tool_list += (i ? ", " : "") + std::string(accelprof_tool_name(i));
  }

  CLI::App app{"accelprof: accelerator trace analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(accelprof_version()));

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic DL workload trace");
  gen_cmd->add_option("--spec", gen.spec_file, "key=value workload spec file")->check(CLI::ExistingFile);
  gen_cmd->add_option("--preset", gen.preset,
                      std::string("named spec: ") + accelprof_preset_names());
  gen_cmd->add_option("--set", gen.settings, "extra key=value setting (repeatable)");
  gen_cmd->add_option("--out,-o", gen.out, "output trace path")->required();
  gen_cmd->add_option("--format", gen.format, "unified|nvx|rmx|jsonl (default by extension)")
      ->check(CLI::IsMember({"unified", "nvx", "rmx", "jsonl"}));
  gen_cmd->add_flag("--lenient", gen.lenient, "allow lossy dialect encodings");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run an analysis tool over a trace");
  run_cmd->add_option("--trace,-i", run.trace, "trace file (.jsonl or binary)")->required();
  run_cmd->add_option("--tool,-t", run.tool, "tool name; overrides PASTA_TOOL (" + tool_list + ")");
  run_cmd->add_option("--engine", run.engine, "serial|parallel")
      ->check(CLI::IsMember({"serial", "parallel"}));
  run_cmd->add_option("--workers", run.workers, "parallel analyzers")->check(CLI::PositiveNumber);
  run_cmd->add_option("--buffer-capacity", run.buffer_capacity, "events buffered before a flush");
  run_cmd->add_option("--batch-size", run.batch_size, "device ops per parallel batch");
  run_cmd->add_option("--slowdown-ns", run.slowdown_ns, "artificial per-event analyzer cost");
  run_cmd->add_option("--slowdown-mode", run.slowdown_mode, "latency|spin")
      ->check(CLI::IsMember({"latency", "spin"}));
  run_cmd->add_option("--start-grid", run.start_grid, "first grid id (overrides START_GRID_ID)");
  run_cmd->add_option("--end-grid", run.end_grid, "last grid id, inclusive (overrides END_GRID_ID)");
  run_cmd->add_option("--label", run.labels, "keep events inside RangeStart/RangeEnd with this label");
  run_cmd->add_option("--knob", run.knobs, "MAX_CALLED_KERNEL, MAX_MEM_REFERENCED_KERNEL");
  run_cmd->add_option("--top-k", run.top_k, "kernel-freq top-K")->check(CLI::PositiveNumber);
  run_cmd->add_option("--window-ns", run.window_ns, "hotness window length")->check(CLI::PositiveNumber);
  run_cmd->add_option("--device-pair", run.device_pair, "mem-timeline difference pair, e.g. 0 1")
      ->expected(2)
      ->delimiter(',');
  run_cmd->add_option("--format", run.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  run_cmd->add_option("--out,-o", run.out, "report path (default stdout)");
  run_cmd->add_flag("--no-timings", run.no_timings, "zero wall-clock fields for golden files");

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("sim-uvm", "simulate UVM demand paging with prefetch plans");
  sim_cmd->add_option("--trace,-i", sim.trace, "trace file")->required();
  sim_cmd->add_option("--policy", sim.policy, "none|object|tensor|all")
      ->check(CLI::IsMember({"none", "object", "tensor", "all"}));
  sim_cmd->add_option("--oversub", sim.oversub, "footprint / device capacity (>= 1)");
  sim_cmd->add_option("--page-size", sim.page_size, "bytes per page");
  sim_cmd->add_option("--fault-latency-ns", sim.fault_latency_ns, "per-fault latency");
  sim_cmd->add_option("--migration-bw", sim.migration_bw, "demand migration bytes/ns");
  sim_cmd->add_option("--prefetch-bw", sim.prefetch_bw, "prefetch bytes/ns");
  sim_cmd->add_option("--prefetch-op-latency-ns", sim.prefetch_op_latency_ns,
                      "fixed cost per issued prefetch");
  sim_cmd->add_flag("--no-overlap", sim.no_overlap, "do not hide staging behind the prior kernel");
  sim_cmd->add_option("--device", sim.device, "device to replay");
  sim_cmd->add_flag("--per-kernel", sim.per_kernel, "include per-kernel breakdowns");
  sim_cmd->add_option("--format", sim.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  sim_cmd->add_option("--out,-o", sim.out, "report path (default stdout)");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "decode a trace and check stream invariants");
  validate_cmd->add_option("--trace,-i", validate_path, "trace file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    std::cout << accelprof_version() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    CLI::App* failed = &app;
    for (auto* sub : app.get_subcommands()) failed = sub;
    std::cerr << usage_error(*failed, e.what());
    return kUsage;
  }

  if (gen_cmd->parsed()) {
    if (gen.spec_file.empty() && gen.preset.empty() && gen.settings.empty()) {
      std::cerr << usage_error(*gen_cmd, "gen needs --spec, --preset or --set");
      return kUsage;
    }
    return cmd_gen(gen);
  }
  if (run_cmd->parsed()) return cmd_run(run);
  if (sim_cmd->parsed()) return cmd_sim(sim);
  return cmd_validate(validate_path);
}
