/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "accelprof/engine.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

#include "accelprof/error.hpp"
#include "accelprof/trace_io.hpp"

namespace accelprof {

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::duration d) { return std::chrono::duration<double>(d).count(); }

// Accumulates consecutive laps into phase counters.
class Lap {
 public:
  Lap() : last_(Clock::now()) {}
  void into(double& phase) {
    auto now = Clock::now();
    phase += seconds(now - last_);
    last_ = now;
  }

 private:
  Clock::time_point last_;
};

class Pacer {
 public:
  Pacer(uint64_t per_event_ns, SlowdownMode mode) : per_event_(per_event_ns), mode_(mode) {}

  void pace() {
    if (per_event_.count() == 0) return;
    auto now = Clock::now();
    if (mode_ == SlowdownMode::Spin) {
      auto until = now + per_event_;
      while (Clock::now() < until) {
      }
      return;
    }
    if (deadline_ < now) deadline_ = now;
    deadline_ += per_event_;
    if (deadline_ - now > std::chrono::microseconds(100)) std::this_thread::sleep_until(deadline_);
  }

  // Pays off any remaining debt, e.g. before a batch is reported done.
  void settle() {
    if (per_event_.count() && mode_ == SlowdownMode::Latency && deadline_ > Clock::now()) {
      std::this_thread::sleep_until(deadline_);
    }
  }

 private:
  std::chrono::nanoseconds per_event_;
  SlowdownMode mode_;
  Clock::time_point deadline_{};
};

// An event held in a buffer together with what preprocessing resolved.
struct Buffered {
  Event event;
  std::optional<ObjectRef> object;
  std::optional<TensorRef> tensor;
  bool unattributed = false;

  DispatchRecord record() const { return DispatchRecord{&event, object, tensor, unattributed}; }
};

Buffered buffered(const Event& e, const LiveObjectTable& table) {
  DispatchRecord r = preprocess(e, table);
  return Buffered{e, r.object, r.tensor, r.unattributed};
}

[[noreturn]] void rethrow_as_tool_error(const Event& e) {
  try {
    throw;
  } catch (const Error& err) {
    // Typed failures keep their code and gain the location.
    Error copy = err;
    if (!copy.seq()) copy.with_seq(e.seq);
    throw copy;
  } catch (const std::exception& ex) {
    throw Error(ErrorCode::ToolError,
                "tool failed at seq " + std::to_string(e.seq) + ": " + ex.what())
        .with_seq(e.seq);
  }
}

bool skipped_for_tool(const Event& e, bool needs_device_ops) {
  return !needs_device_ops && e.category() == Category::DeviceOp;
}

}  // namespace

void check_engine_config(const EngineConfig& config) {
  if (config.workers == 0) throw Error(ErrorCode::InvalidArgument, "workers must be at least 1");
  if (config.buffer_capacity == 0 || config.batch_size == 0) {
    throw Error(ErrorCode::InvalidArgument, "buffer capacity and batch size must be positive");
  }
  if (config.batch_size > config.buffer_capacity) {
    throw Error(ErrorCode::InvalidArgument, "batch size exceeds buffer capacity");
  }
  if (config.mode == EngineMode::Serial && config.workers != 1) {
    throw Error(ErrorCode::InvalidArgument, "the serial engine runs exactly one analyzer");
  }
  check_filter(config.filter);
}

Report stats_json(const EngineStats& s, EngineMode mode, uint32_t workers, bool timings) {
  auto t = [&](double v) { return timings ? v : 0.0; };
  Report j;
  j["engine"] = mode == EngineMode::Serial ? "serial" : "parallel";
  j["workers"] = workers;
  j["execution_s"] = t(s.execution_s);
  j["collection_s"] = t(s.collection_s);
  j["transfer_s"] = t(s.transfer_s);
  j["analysis_s"] = t(s.analysis_s);
  j["wall_s"] = t(s.wall_s);
  j["producer_stalls"] = s.producer_stalls;
  j["events_processed"] = s.events_processed;
  j["unattributed"] = s.unattributed;
  return j;
}

const Event* ReaderSource::next() { return reader_.next(); }

DispatchRecord preprocess(const Event& event, const LiveObjectTable& table) {
  DispatchRecord r;
  r.event = &event;
  if (event.kind == EventKind::GlobalAccess) {
    const auto& a = event.as<MemAccessInfo>();
    r.object = table.find_object(event.device, a.address);
    if (r.object) {
      r.tensor = table.find_tensor(event.device, a.address);
    } else {
      r.unattributed = true;
    }
  } else if (event.kind == EventKind::DeviceMalloc || event.kind == EventKind::DeviceFree) {
    const auto& o = event.as<ObjectEventInfo>();
    r.object = ObjectRef{o.object_id, o.address, o.size_bytes};
  }
  return r;
}

RunResult run_serial(EventSource& source, Tool& tool, const EngineConfig& config) {
  check_engine_config(config);
  const auto started = Clock::now();
  const bool device_ops = tool.descriptor().needs_device_ops;
  RangeFilterState filter(config.filter);
  LiveObjectTable table;
  Pacer pacer(config.slowdown_ns, config.slowdown_mode);
  EngineStats stats;

  std::vector<Buffered> buffer;
  std::vector<Buffered> analyzer;
  buffer.reserve(config.buffer_capacity);
  Lap lap;

  auto flush = [&] {
    lap.into(stats.collection_s);
    analyzer.swap(buffer);
    buffer.clear();
    ++stats.batches;
    lap.into(stats.transfer_s);
    for (const auto& b : analyzer) {
      try {
        dispatch(tool, b.record());
      } catch (...) {
        rethrow_as_tool_error(b.event);
      }
      pacer.pace();
    }
    pacer.settle();
    analyzer.clear();
    lap.into(stats.analysis_s);
  };

  while (true) {
    const Event* e = source.next();
    lap.into(stats.execution_s);
    if (!e) break;
    if (!filter.admit(*e) || skipped_for_tool(*e, device_ops)) continue;
    table.apply_before(*e);
    buffer.push_back(buffered(*e, table));
    table.apply_after(*e);
    ++stats.events_processed;
    if (buffer.back().unattributed) ++stats.unattributed;
    if (buffer.size() == config.buffer_capacity) {
      ++stats.producer_stalls;
      flush();
    }
  }
  if (!buffer.empty()) flush();

  RunResult result;
  try {
    result.report = tool.on_finalize();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& ex) {
    throw Error(ErrorCode::ToolError, std::string("tool failed at finalize: ") + ex.what());
  }
  lap.into(stats.analysis_s);
  stats.wall_s = seconds(Clock::now() - started);
  result.stats = stats;
  return result;
}

namespace {

class WorkerPool {
 public:
  WorkerPool(const Tool& tool, const EngineConfig& config, const LiveObjectTable& table)
      : table_(table) {
    workers_.resize(config.workers);
    for (auto& w : workers_) {
      w.partial = tool.fork();
      if (!w.partial) {
        throw Error(ErrorCode::ToolNotMergeable,
                    "tool '" + tool.descriptor().name + "' did not provide a partial state");
      }
      w.pacer = std::make_unique<Pacer>(config.slowdown_ns, config.slowdown_mode);
    }
    for (std::size_t i = 0; i < workers_.size(); ++i) {
      workers_[i].thread = std::thread([this, i] { loop(i); });
    }
  }

  ~WorkerPool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    work_cv_.notify_all();
    for (auto& w : workers_) {
      if (w.thread.joinable()) w.thread.join();
    }
  }

  std::size_t size() const { return workers_.size(); }
  std::size_t outstanding() {
    std::lock_guard lock(mu_);
    return outstanding_;
  }

  void submit(std::size_t worker, std::vector<Buffered> batch) {
    {
      std::lock_guard lock(mu_);
      outstanding_ += batch.size();
      workers_[worker].queue.push_back(std::move(batch));
    }
    work_cv_.notify_all();
  }

  // Blocks until at most `limit` events are queued or in flight.
  void wait_below(std::size_t limit) {
    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [&] { return outstanding_ <= limit; });
  }

  // After a full drain: rethrows the earliest worker failure, then folds
  // every touched partial into the tool in worker order.
  uint64_t drain_and_merge(Tool& tool) {
    wait_below(0);
    if (error_) std::rethrow_exception(error_);
    uint64_t unattributed = 0;
    for (auto& w : workers_) {
      if (!w.dirty) continue;
      tool.merge(*w.partial);
      w.dirty = false;
      unattributed += w.unattributed;
      w.unattributed = 0;
    }
    return unattributed;
  }

 private:
  struct Worker {
    std::unique_ptr<Tool> partial;
    std::unique_ptr<Pacer> pacer;
    std::deque<std::vector<Buffered>> queue;
    bool dirty = false;
    uint64_t unattributed = 0;
    std::thread thread;
  };

  void loop(std::size_t index) {
    Worker& w = workers_[index];
    while (true) {
      std::vector<Buffered> batch;
      {
        std::unique_lock lock(mu_);
        work_cv_.wait(lock, [&] { return stop_ || !w.queue.empty(); });
        if (w.queue.empty()) return;
        batch = std::move(w.queue.front());
        w.queue.pop_front();
      }
      uint64_t unattributed = 0;
      std::exception_ptr failure;
      uint64_t failure_seq = 0;
      for (auto& b : batch) {
        DispatchRecord r = preprocess(b.event, table_);
        if (r.unattributed) ++unattributed;
        try {
          dispatch(*w.partial, r);
        } catch (...) {
          try {
            rethrow_as_tool_error(b.event);
          } catch (...) {
            failure = std::current_exception();
            failure_seq = b.event.seq;
          }
          break;
        }
        w.pacer->pace();
      }
      w.pacer->settle();
      {
        std::lock_guard lock(mu_);
        w.dirty = true;
        w.unattributed += unattributed;
        if (failure && (!error_ || failure_seq < error_seq_)) {
          error_ = failure;
          error_seq_ = failure_seq;
        }
        outstanding_ -= batch.size();
      }
      done_cv_.notify_all();
    }
  }

  const LiveObjectTable& table_;
  std::vector<Worker> workers_;
  std::mutex mu_;
  std::condition_variable work_cv_;
  std::condition_variable done_cv_;
  std::size_t outstanding_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
  uint64_t error_seq_ = 0;
};

}  // namespace

RunResult run_parallel(EventSource& source, Tool& tool, const EngineConfig& config) {
  check_engine_config(config);
  const auto& desc = tool.descriptor();
  if (!desc.mergeable) {
    throw Error(ErrorCode::ToolNotMergeable,
                "tool '" + desc.name + "' is not mergeable and cannot run on the parallel engine");
  }
  const auto started = Clock::now();
  RangeFilterState filter(config.filter);
  LiveObjectTable table;
  Pacer pacer(config.slowdown_ns, config.slowdown_mode);
  EngineStats stats;
  WorkerPool pool(tool, config, table);
  Lap lap;

  std::vector<Buffered> pending;
  pending.reserve(config.batch_size);

  // Fans the pending device ops out across the workers.
  auto submit_pending = [&] {
    if (pending.empty()) return;
    lap.into(stats.collection_s);
    if (pool.outstanding() + pending.size() > config.buffer_capacity) {
      ++stats.producer_stalls;
      pool.wait_below(config.buffer_capacity - pending.size());
      lap.into(stats.analysis_s);
    }
    const std::size_t n = pending.size();
    const std::size_t parts = std::min<std::size_t>(pool.size(), n);
    std::size_t begin = 0;
    for (std::size_t p = 0; p < parts; ++p) {
      const std::size_t end = begin + (n - begin) / (parts - p);
      std::vector<Buffered> part(std::make_move_iterator(pending.begin() + begin),
                                 std::make_move_iterator(pending.begin() + end));
      pool.submit(p, std::move(part));
      begin = end;
    }
    pending.clear();
    ++stats.batches;
    lap.into(stats.transfer_s);
  };

  while (true) {
    const Event* e = source.next();
    lap.into(stats.execution_s);
    if (!e) break;
    if (!filter.admit(*e) || skipped_for_tool(*e, desc.needs_device_ops)) continue;
    ++stats.events_processed;
    if (e->category() == Category::DeviceOp) {
      pending.push_back(Buffered{*e, std::nullopt, std::nullopt, false});
      if (pending.size() >= config.batch_size) submit_pending();
      continue;
    }
    // Serialization point.
    submit_pending();
    lap.into(stats.collection_s);
    stats.unattributed += pool.drain_and_merge(tool);
    lap.into(stats.analysis_s);
    table.apply_before(*e);
    DispatchRecord r = preprocess(*e, table);
    lap.into(stats.collection_s);
    try {
      dispatch(tool, r);
    } catch (...) {
      rethrow_as_tool_error(*e);
    }
    pacer.pace();
    table.apply_after(*e);
    lap.into(stats.analysis_s);
  }
  submit_pending();
  stats.unattributed += pool.drain_and_merge(tool);
  pacer.settle();

  RunResult result;
  try {
    result.report = tool.on_finalize();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& ex) {
    throw Error(ErrorCode::ToolError, std::string("tool failed at finalize: ") + ex.what());
  }
  lap.into(stats.analysis_s);
  stats.wall_s = seconds(Clock::now() - started);
  result.stats = stats;
  return result;
}

RunResult run_engine(EventSource& source, Tool& tool, const EngineConfig& config) {
  return config.mode == EngineMode::Serial ? run_serial(source, tool, config)
                                           : run_parallel(source, tool, config);
}

RunResult run_engine(std::span<const Event> events, Tool& tool, const EngineConfig& config) {
  SpanSource source(events);
  return run_engine(source, tool, config);
}

}  // namespace accelprof
