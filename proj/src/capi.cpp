/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "accelprof/accelprof.h"

#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "accelprof/engine.hpp"
#include "accelprof/error.hpp"
#include "accelprof/report.hpp"
#include "accelprof/trace_io.hpp"
#include "accelprof/uvm.hpp"
#include "accelprof/validate.hpp"
#include "accelprof/workload.hpp"

struct accelprof_trace {
  std::vector<accelprof::Event> events;
};

struct accelprof_report {
  accelprof::Report report;
  std::string json;
};

namespace {

using namespace accelprof;

struct LastError {
  std::string message;
  std::optional<uint64_t> seq;
  std::optional<uint64_t> offset;
  std::optional<uint64_t> line;
};

thread_local LastError last_error;

accelprof_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return ACCELPROF_E_INVALID_ARGUMENT;
    case ErrorCode::IoError: return ACCELPROF_E_IO;
    case ErrorCode::BadMagic: return ACCELPROF_E_BAD_MAGIC;
    case ErrorCode::UnsupportedVersion: return ACCELPROF_E_UNSUPPORTED_VERSION;
    case ErrorCode::TruncatedRecord: return ACCELPROF_E_TRUNCATED_RECORD;
    case ErrorCode::CorruptRecord: return ACCELPROF_E_CORRUPT_RECORD;
    case ErrorCode::InvariantViolation: return ACCELPROF_E_INVARIANT_VIOLATION;
    case ErrorCode::DialectLoss: return ACCELPROF_E_DIALECT_LOSS;
    case ErrorCode::ParseError: return ACCELPROF_E_PARSE;
    case ErrorCode::SpecError: return ACCELPROF_E_SPEC;
    case ErrorCode::UnknownTensor: return ACCELPROF_E_UNKNOWN_TENSOR;
    case ErrorCode::ScopeMismatch: return ACCELPROF_E_SCOPE_MISMATCH;
    case ErrorCode::DuplicateName: return ACCELPROF_E_DUPLICATE_NAME;
    case ErrorCode::UnknownTool: return ACCELPROF_E_UNKNOWN_TOOL;
    case ErrorCode::NoToolSpecified: return ACCELPROF_E_NO_TOOL_SPECIFIED;
    case ErrorCode::UnknownKnob: return ACCELPROF_E_UNKNOWN_KNOB;
    case ErrorCode::NoKnobEnabled: return ACCELPROF_E_NO_KNOB_ENABLED;
    case ErrorCode::UnknownDevice: return ACCELPROF_E_UNKNOWN_DEVICE;
    case ErrorCode::ToolError: return ACCELPROF_E_TOOL;
    case ErrorCode::ToolNotMergeable: return ACCELPROF_E_TOOL_NOT_MERGEABLE;
    case ErrorCode::EmptyProfile: return ACCELPROF_E_EMPTY_PROFILE;
    case ErrorCode::PlanMismatch: return ACCELPROF_E_PLAN_MISMATCH;
    case ErrorCode::CapacityTooSmall: return ACCELPROF_E_CAPACITY_TOO_SMALL;
  }
  return ACCELPROF_E_INTERNAL;
}

accelprof_status fail(accelprof_status status, std::string message) {
  last_error = LastError{std::move(message), std::nullopt, std::nullopt, std::nullopt};
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename Body>
accelprof_status guarded(Body&& body) {
  try {
    body();
    return ACCELPROF_OK;
  } catch (const Error& e) {
    last_error = LastError{e.what(), e.seq(), e.byte_offset(), e.line()};
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    return fail(ACCELPROF_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ACCELPROF_E_INTERNAL, e.what());
  }
}

int location(const std::optional<uint64_t>& v, uint64_t* out) {
  if (!v) return 0;
  if (out) *out = *v;
  return 1;
}

accelprof_report* make_report(Report report) {
  auto* r = new accelprof_report{std::move(report), {}};
  r->json = report_to_json(r->report);
  return r;
}

std::optional<std::string> opt_string(const char* s) {
  if (!s) return std::nullopt;
  return std::string(s);
}

std::set<std::string> split_labels(const char* csv) {
  std::set<std::string> out;
  if (!csv) return out;
  std::string_view rest(csv);
  while (!rest.empty()) {
    auto comma = rest.find(',');
    auto item = rest.substr(0, comma);
    if (!item.empty()) out.emplace(item);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

struct PreparedRun {
  std::unique_ptr<Tool> tool;
  EngineConfig engine;
  bool timings = true;
};

PreparedRun prepare(const accelprof_run_config* c) {
  if (!c) throw Error(ErrorCode::InvalidArgument, "run config is null");
  const auto env = process_env();
  const auto& registry = builtin_registry();
  const auto& desc = select_tool(registry, opt_string(c->tool), env);

  ToolOptions options;
  options.top_k = c->top_k;
  options.window_ns = c->window_ns;
  if (c->has_device_pair) options.device_pair = std::pair{c->device_a, c->device_b};
  if (c->knobs) options.knobs.enable_list(c->knobs);

  PreparedRun run;
  run.engine.mode = c->parallel ? EngineMode::Parallel : EngineMode::Serial;
  run.engine.workers = c->parallel ? c->workers : 1;
  run.engine.buffer_capacity = c->buffer_capacity;
  run.engine.batch_size = c->batch_size;
  run.engine.slowdown_ns = c->slowdown_ns;
  run.engine.slowdown_mode = c->slowdown_spin ? SlowdownMode::Spin : SlowdownMode::Latency;
  run.engine.filter = filter_from_env(env);
  if (c->has_start_grid || c->has_end_grid) {
    GridWindow w = run.engine.filter.grid_window.value_or(
        GridWindow{0, std::numeric_limits<uint64_t>::max()});
    if (c->has_start_grid) w.start = c->start_grid;
    if (c->has_end_grid) w.end = c->end_grid;
    run.engine.filter.grid_window = w;
  }
  run.engine.filter.marker_labels = split_labels(c->labels);
  check_engine_config(run.engine);
  if (run.engine.mode == EngineMode::Parallel && !desc.mergeable) {
    throw Error(ErrorCode::ToolNotMergeable,
                "tool '" + desc.name + "' is not mergeable and cannot run on the parallel engine");
  }
  run.timings = c->timings != 0;
  run.tool = registry.create(desc.name, options);
  return run;
}

accelprof_report* finish(PreparedRun& run, const RunResult& result) {
  Report report = result.report;
  report["engine_stats"] = stats_json(result.stats, run.engine.mode, run.engine.workers, run.timings);
  return make_report(std::move(report));
}

bool has_suffix(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

extern "C" {

const char* accelprof_version(void) { return "0.1.0"; }

const char* accelprof_status_name(accelprof_status status) {
  switch (status) {
    case ACCELPROF_OK: return "ok";
    case ACCELPROF_E_INTERNAL: return "internal";
    default: break;
  }
  if (status < ACCELPROF_OK || status > ACCELPROF_E_INTERNAL) return "unknown";
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (int i = 0; i <= static_cast<int>(ErrorCode::CapacityTooSmall); ++i) {
      out.emplace_back(error_code_name(static_cast<ErrorCode>(i)));
    }
    return out;
  }();
  return names[static_cast<std::size_t>(status) - 1].c_str();
}

const char* accelprof_last_error(void) { return last_error.message.c_str(); }
int accelprof_last_error_seq(uint64_t* seq) { return location(last_error.seq, seq); }
int accelprof_last_error_offset(uint64_t* offset) { return location(last_error.offset, offset); }
int accelprof_last_error_line(uint64_t* line) { return location(last_error.line, line); }

accelprof_status accelprof_trace_load(const char* path, int validate, accelprof_trace** out) {
  if (!path || !out) return fail(ACCELPROF_E_INVALID_ARGUMENT, "path and out must be non-null");
  *out = nullptr;
  return guarded([&] {
    ReadOptions options;
    options.validate = validate != 0;
    auto trace = std::make_unique<accelprof_trace>();
    trace->events = load_trace_file(path, options);
    *out = trace.release();
  });
}

accelprof_status accelprof_trace_generate(const char* spec_text, accelprof_trace** out) {
  if (!spec_text || !out) return fail(ACCELPROF_E_INVALID_ARGUMENT, "spec and out must be non-null");
  *out = nullptr;
  return guarded([&] {
    auto trace = std::make_unique<accelprof_trace>();
    trace->events = generate_trace(parse_spec(spec_text));
    *out = trace.release();
  });
}

accelprof_status accelprof_trace_write(const accelprof_trace* trace, const char* path,
                                       const char* format, int strict) {
  if (!trace || !path) return fail(ACCELPROF_E_INVALID_ARGUMENT, "trace and path must be non-null");
  return guarded([&] {
    const std::string fmt = format ? format : "unified";
    if (fmt == "jsonl") {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::IoError, std::string("cannot open ") + path + " for writing");
      to_jsonl(trace->events, out);
      if (!out) throw Error(ErrorCode::IoError, std::string("failed writing ") + path);
      return;
    }
    auto dialect = dialect_from_name(fmt);
    if (!dialect) {
      throw Error(ErrorCode::InvalidArgument,
                  "unknown trace format '" + fmt + "'; expected unified, nvx, rmx or jsonl");
    }
    WriteOptions options;
    options.strict = strict != 0;
    write_trace(trace->events, *dialect, path, options);
  });
}

accelprof_status accelprof_trace_validate(const accelprof_trace* trace) {
  if (!trace) return fail(ACCELPROF_E_INVALID_ARGUMENT, "trace must be non-null");
  return guarded([&] {
    auto report = validate_stream(trace->events);
    if (report.empty()) return;
    std::string message = std::to_string(report.size()) + " violation(s)";
    for (std::size_t i = 0; i < report.size() && i < 20; ++i) {
      message += "\n  seq " + std::to_string(report[i].seq) + " " +
                 std::string(violation_code_name(report[i].code)) + ": " + report[i].message;
    }
    throw Error(ErrorCode::InvariantViolation, message).with_seq(report.front().seq);
  });
}

uint64_t accelprof_trace_event_count(const accelprof_trace* trace) {
  return trace ? trace->events.size() : 0;
}

void accelprof_trace_free(accelprof_trace* trace) { delete trace; }

const char* accelprof_preset_names(void) {
  static const std::string names = [] {
    std::string out;
    for (const auto& n : preset_names()) out += (out.empty() ? "" : ",") + n;
    return out;
  }();
  return names.c_str();
}

size_t accelprof_tool_count(void) { return builtin_registry().size(); }

const char* accelprof_tool_name(size_t index) {
  static const std::vector<std::string> names = builtin_registry().names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

int accelprof_tool_mergeable(const char* name) {
  if (!name || !builtin_registry().contains(name)) return -1;
  return builtin_registry().descriptor(name).mergeable ? 1 : 0;
}

accelprof_status accelprof_select_tool(const char* flag, const char** name) {
  if (!name) return fail(ACCELPROF_E_INVALID_ARGUMENT, "name must be non-null");
  return guarded([&] {
    const auto& desc = select_tool(builtin_registry(), opt_string(flag), process_env());
    *name = desc.name.c_str();
  });
}

void accelprof_run_config_init(accelprof_run_config* c) {
  if (!c) return;
  std::memset(c, 0, sizeof(*c));
  EngineConfig defaults;
  ToolOptions tool_defaults;
  c->workers = 1;
  c->buffer_capacity = defaults.buffer_capacity;
  c->batch_size = defaults.batch_size;
  c->top_k = tool_defaults.top_k;
  c->window_ns = tool_defaults.window_ns;
  c->timings = 1;
}

accelprof_status accelprof_run(const accelprof_trace* trace, const accelprof_run_config* config,
                               accelprof_report** out) {
  if (!trace || !out) return fail(ACCELPROF_E_INVALID_ARGUMENT, "trace and out must be non-null");
  *out = nullptr;
  return guarded([&] {
    auto run = prepare(config);
    auto result = run_engine(trace->events, *run.tool, run.engine);
    *out = finish(run, result);
  });
}

accelprof_status accelprof_run_file(const char* path, const accelprof_run_config* config,
                                    accelprof_report** out) {
  if (!path || !out) return fail(ACCELPROF_E_INVALID_ARGUMENT, "path and out must be non-null");
  *out = nullptr;
  return guarded([&] {
    auto run = prepare(config);
    RunResult result;
    if (has_suffix(path, ".jsonl")) {
      auto events = load_trace_file(path);
      result = run_engine(events, *run.tool, run.engine);
    } else {
      TraceReader reader{std::filesystem::path(path)};
      ReaderSource source(reader);
      result = run_engine(source, *run.tool, run.engine);
    }
    *out = finish(run, result);
  });
}

void accelprof_sim_config_init(accelprof_sim_config* c) {
  if (!c) return;
  UvmConfig d;
  c->policy = "all";
  c->oversub = 1.0;
  c->page_size = d.page_size_bytes;
  c->fault_latency_ns = d.fault_latency_ns;
  c->migration_bw = d.migration_bw_bytes_per_ns;
  c->prefetch_bw = d.prefetch_bw_bytes_per_ns;
  c->prefetch_op_latency_ns = d.prefetch_op_latency_ns;
  c->overlap = d.overlap ? 1 : 0;
  c->device = 0;
  c->per_kernel = 0;
}

accelprof_status accelprof_simulate(const accelprof_trace* trace, const accelprof_sim_config* c,
                                    accelprof_report** out) {
  if (!trace || !c || !out) return fail(ACCELPROF_E_INVALID_ARGUMENT, "arguments must be non-null");
  *out = nullptr;
  return guarded([&] {
    UvmConfig config;
    config.page_size_bytes = c->page_size;
    config.fault_latency_ns = c->fault_latency_ns;
    config.migration_bw_bytes_per_ns = c->migration_bw;
    config.prefetch_bw_bytes_per_ns = c->prefetch_bw;
    config.prefetch_op_latency_ns = c->prefetch_op_latency_ns;
    config.overlap = c->overlap != 0;
    config.device = c->device;
    const uint64_t footprint = device_footprint(trace->events, c->device);
    config.device_capacity_bytes = set_capacity(footprint, c->oversub, c->page_size);

    const std::string policy = c->policy ? c->policy : "all";
    PolicyComparison comparison;
    if (policy == "all") {
      comparison = compare_policies(trace->events, config);
    } else {
      auto p = policy_from_name(policy);
      if (!p) {
        throw Error(ErrorCode::InvalidArgument,
                    "unknown policy '" + policy + "'; expected none, object, tensor or all");
      }
      std::optional<PrefetchPlan> plan;
      if (*p != PrefetchPolicy::None) {
        plan = build_prefetch_plan(trace->events,
                                   *p == PrefetchPolicy::Object ? PlanGranularity::Object
                                                                : PlanGranularity::Tensor,
                                   c->device);
      }
      if (*p != PrefetchPolicy::None) comparison.results.push_back(simulate(trace->events, std::nullopt, config));
      comparison.results.push_back(simulate(trace->events, plan, config));
    }
    Report report = comparison_json(comparison, c->per_kernel != 0);
    report["device"] = c->device;
    report["footprint_bytes"] = footprint;
    report["oversub"] = c->oversub;
    report["capacity_bytes"] = config.device_capacity_bytes;
    *out = make_report(std::move(report));
  });
}

const char* accelprof_report_json(const accelprof_report* report) {
  return report ? report->json.c_str() : nullptr;
}

accelprof_status accelprof_report_render(const accelprof_report* report, const char* format,
                                         char** text) {
  if (!report || !text) return fail(ACCELPROF_E_INVALID_ARGUMENT, "report and text must be non-null");
  *text = nullptr;
  return guarded([&] {
    auto fmt = report_format_from_name(format ? format : "json");
    if (!fmt) throw Error(ErrorCode::InvalidArgument, "unknown report format; expected json or csv");
    const std::string rendered = render_report(report->report, *fmt);
    char* buffer = static_cast<char*>(std::malloc(rendered.size() + 1));
    if (!buffer) throw std::bad_alloc();
    std::memcpy(buffer, rendered.c_str(), rendered.size() + 1);
    *text = buffer;
  });
}

accelprof_status accelprof_report_write(const accelprof_report* report, const char* format,
                                        const char* path) {
  if (!report) return fail(ACCELPROF_E_INVALID_ARGUMENT, "report must be non-null");
  return guarded([&] {
    auto fmt = report_format_from_name(format ? format : "json");
    if (!fmt) throw Error(ErrorCode::InvalidArgument, "unknown report format; expected json or csv");
    emit_report(report->report, *fmt, path ? std::filesystem::path(path) : std::filesystem::path());
  });
}

void accelprof_report_free(accelprof_report* report) { delete report; }
void accelprof_string_free(char* text) { std::free(text); }

}  // extern "C"
