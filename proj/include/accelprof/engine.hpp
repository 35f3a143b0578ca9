/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACCELPROF_ENGINE_HPP
#define ACCELPROF_ENGINE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "accelprof/event.hpp"
#include "accelprof/object_table.hpp"
#include "accelprof/range_filter.hpp"
#include "accelprof/tool.hpp"

namespace accelprof {

class TraceReader;

enum class EngineMode { Serial, Parallel };

// How the artificial per-event analyzer slowdown is spent. Spin burns the
// CPU; Latency paces the analyzer against a deadline and sleeps, which
// models a slow analyzer without needing one core per worker.
enum class SlowdownMode { Latency, Spin };

struct EngineConfig {
  EngineMode mode = EngineMode::Serial;
  uint32_t workers = 1;
  std::size_t buffer_capacity = 65'536;
  std::size_t batch_size = 4'096;
  uint64_t slowdown_ns = 0;  // per analyzed event
  SlowdownMode slowdown_mode = SlowdownMode::Latency;
  RangeFilter filter;
};

// Throws InvalidArgument.
void check_engine_config(const EngineConfig& config);

struct EngineStats {
  double execution_s = 0;   // pulling events from the source
  double collection_s = 0;  // filtering, preprocessing, buffering
  double transfer_s = 0;    // moving batches to analyzers
  double analysis_s = 0;    // tool callbacks, merges, waiting on workers
  double wall_s = 0;
  uint64_t producer_stalls = 0;
  uint64_t events_processed = 0;
  uint64_t unattributed = 0;
  uint64_t batches = 0;

  double phase_sum() const { return execution_s + collection_s + transfer_s + analysis_s; }
};

Report stats_json(const EngineStats& stats, EngineMode mode, uint32_t workers, bool timings);

struct RunResult {
  Report report;
  EngineStats stats;
};

// Pull interface over a trace. The returned pointer is valid until the next
// call; nullptr ends the stream.
class EventSource {
 public:
  virtual ~EventSource() = default;
  virtual const Event* next() = 0;
};

class SpanSource : public EventSource {
 public:
  explicit SpanSource(std::span<const Event> events) : events_(events) {}
  const Event* next() override { return pos_ < events_.size() ? &events_[pos_++] : nullptr; }

 private:
  std::span<const Event> events_;
  std::size_t pos_ = 0;
};

class ReaderSource : public EventSource {
 public:
  explicit ReaderSource(TraceReader& reader) : reader_(reader) {}
  const Event* next() override;

 private:
  TraceReader& reader_;
};

// Resolves a global access against the table; other events carry the
// object for lifecycle events only.
DispatchRecord preprocess(const Event& event, const LiveObjectTable& table);

// Single analyzer fed through a bounded buffer; the producer stalls and the
// buffer is flushed whenever it fills. Tool errors come back as ToolError
// carrying the offending seq.
RunResult run_serial(EventSource& source, Tool& tool, const EngineConfig& config);

// Device ops between serialization points are split across `workers`
// analyzers working on forks of the tool; forks are merged back before any
// other event reaches the tool. Throws ToolNotMergeable.
RunResult run_parallel(EventSource& source, Tool& tool, const EngineConfig& config);

RunResult run_engine(EventSource& source, Tool& tool, const EngineConfig& config);
RunResult run_engine(std::span<const Event> events, Tool& tool, const EngineConfig& config);

}  // namespace accelprof

#endif  // ACCELPROF_ENGINE_HPP
