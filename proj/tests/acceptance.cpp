/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Run a subset with criterion numbers as arguments.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "accelprof/engine.hpp"
#include "accelprof/error.hpp"
#include "accelprof/range_filter.hpp"
#include "accelprof/trace_io.hpp"
#include "accelprof/uvm.hpp"
#include "accelprof/workload.hpp"
#include "oracles.hpp"
#include "random_specs.hpp"
#include "trace_builder.hpp"

using namespace accelprof;
using accelprof::testing::KernelKey;
using accelprof::testing::TraceBuilder;

namespace {

// Collects failed checks for one criterion.
class Verdict {
 public:
  void check(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    std::string out = notes_;
    for (const auto& f : failures_) out += (out.empty() ? "" : "; ") + std::string("failed: ") + f;
    if (failed_ > failures_.size()) out += "; " + std::to_string(failed_) + " failures in total";
    return out;
  }

 private:
  std::vector<std::string> failures_;
  std::size_t failed_ = 0;
  std::string notes_;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

Report run_tool(std::string_view name, std::span<const Event> events, const EngineConfig& config,
                const ToolOptions& opts = {}) {
  auto tool = builtin_registry().create(name, opts);
  return run_engine(events, *tool, config).report;
}

EngineConfig parallel_config(uint32_t workers, std::size_t batch) {
  EngineConfig c;
  c.mode = EngineMode::Parallel;
  c.workers = workers;
  c.batch_size = batch;
  return c;
}

const std::vector<std::string> kMergeable = {"kernel-freq", "memchar", "hotness", "uvm-profile"};

void engine_equivalence(Verdict& v) {
  std::mt19937_64 rng(1001);
  std::size_t traces = 0, comparisons = 0;
  for (int i = 0; i < 100; ++i) {
    auto events = generate_trace(testing::random_spec(rng));
    ++traces;
    for (const auto& tool : kMergeable) {
      const auto expected = run_tool(tool, events, EngineConfig{});
      for (uint32_t w : {1u, 2u, 4u, 8u}) {
        const std::size_t batch = 32 + rng() % 1024;
        ++comparisons;
        v.check(run_tool(tool, events, parallel_config(w, batch)) == expected,
                tool + " trace " + std::to_string(i) + " workers " + std::to_string(w));
      }
    }
  }
  v.note(std::to_string(traces) + " traces, " + std::to_string(comparisons) +
         " parallel/serial comparisons");
}

// Shared by criteria 2 and 3.
struct SpeedupRuns {
  EngineStats serial;
  EngineStats parallel;
  uint64_t accesses = 0;
  bool reports_equal = false;
};

const SpeedupRuns& speedup_runs() {
  static const SpeedupRuns runs = [] {
    auto spec = preset_spec("bert-toy");
    spec.access_sample_rate = 0.05;
    auto events = generate_trace(spec);
    SpeedupRuns r;
    for (const auto& e : events) r.accesses += e.kind == EventKind::GlobalAccess;
    EngineConfig serial;
    serial.slowdown_ns = 2000;
    auto parallel = parallel_config(4, 4096);
    parallel.slowdown_ns = serial.slowdown_ns;
    auto st = builtin_registry().create("memchar", {});
    auto pt = builtin_registry().create("memchar", {});
    auto s = run_engine(events, *st, serial);
    auto p = run_engine(events, *pt, parallel);
    r.serial = s.stats;
    r.parallel = p.stats;
    r.reports_equal = s.report == p.report;
    return r;
  }();
  return runs;
}

void parallel_speedup(Verdict& v) {
  const auto& r = speedup_runs();
  const double ratio = r.parallel.wall_s / r.serial.wall_s;
  v.check(r.accesses >= 1'000'000, "trace has fewer than 1e6 accesses");
  v.check(ratio <= 0.5, "parallel/serial wall ratio " + fmt(ratio) + " > 0.5");
  v.check(r.reports_equal, "parallel report differs from serial");
  v.note(std::to_string(r.accesses) + " accesses, serial " + fmt(r.serial.wall_s) +
         " s, parallel(4) " + fmt(r.parallel.wall_s) + " s, ratio " + fmt(ratio));
}

void phase_breakdown(Verdict& v) {
  const auto& r = speedup_runs();
  const double share = r.serial.analysis_s / r.serial.phase_sum();
  const double fused = r.parallel.collection_s + r.parallel.analysis_s;
  v.check(share > 0.60, "serial analysis share " + fmt(share) + " <= 0.60");
  v.check(fused < r.serial.analysis_s, "parallel collection+analysis " + fmt(fused) +
                                           " s not below serial analysis " +
                                           fmt(r.serial.analysis_s) + " s");
  v.check(r.serial.phase_sum() >= 0.95 * r.serial.wall_s, "serial phases do not cover the run");
  v.check(r.parallel.phase_sum() >= 0.95 * r.parallel.wall_s,
          "parallel phases do not cover the run");
  v.note("serial analysis share " + fmt(share) + ", parallel collection+analysis " + fmt(fused) +
         " s vs serial analysis " + fmt(r.serial.analysis_s) + " s, serial stalls " +
         std::to_string(r.serial.producer_stalls));
}

void working_set(Verdict& v) {
  std::mt19937_64 rng(404);
  std::size_t excluded = 0;
  for (int i = 0; i < 50; ++i) {
    auto spec = testing::random_spec(rng);
    if (i % 2 == 0) spec.untouched_arg_rate = 0.4;
    auto events = generate_trace(spec);
    auto report = run_tool("memchar", events, EngineConfig{});
    auto naive = testing::naive_memchar(events);
    const std::string tag = "trace " + std::to_string(i);
    v.check(report.at("footprint_bytes") == naive.footprint, tag + " footprint");
    v.check(report.at("ws_bytes") == naive.ws, tag + " ws");
    v.check(report.at("min_ws_bytes") == naive.min, tag + " min");
    v.check(report.at("p90_ws_bytes") == naive.p90, tag + " p90");
    v.check(report.at("median_ws_bytes").get<double>() == naive.median, tag + " median");
    v.check(std::abs(report.at("avg_ws_bytes").get<double>() - naive.avg) <= 1e-9 * naive.avg,
            tag + " avg");
    v.check(naive.ws <= naive.footprint, tag + " ws exceeds footprint");
    const auto& per = report.at("per_kernel");
    v.check(per.size() == naive.kernels.size(), tag + " kernel count");
    if (per.size() != naive.kernels.size()) continue;

    // Argument objects a kernel never touches must not count.
    std::map<KernelKey, uint64_t> arg_bytes;
    std::map<uint64_t, uint64_t> size_of;
    for (const auto& e : events) {
      if (e.kind == EventKind::DeviceMalloc) {
        size_of[e.as<ObjectEventInfo>().object_id] = e.as<ObjectEventInfo>().size_bytes;
      } else if (e.kind == EventKind::KernelLaunch) {
        uint64_t total = 0;
        for (auto o : e.as<KernelLaunchInfo>().arg_objects) total += size_of[o];
        arg_bytes[{e.device, e.as<KernelLaunchInfo>().grid_id}] = total;
      }
    }
    for (std::size_t k = 0; k < per.size(); ++k) {
      v.check(per[k].at("footprint_bytes") == naive.kernels[k].footprint,
              tag + " kernel " + std::to_string(k));
      const uint64_t fp = per[k].at("footprint_bytes");
      if (fp < arg_bytes[naive.kernels[k].key]) ++excluded;
    }
  }
  v.check(excluded > 0, "no kernel had an untouched argument excluded");
  v.note("50 traces match brute force; " + std::to_string(excluded) +
         " kernels with untouched arguments excluded");
}

void footprint_gap(Verdict& v) {
  auto ratio_of = [&](const char* preset) {
    auto r = run_tool("memchar", generate_trace(preset_spec(preset)), EngineConfig{});
    return r.at("footprint_bytes").get<double>() / r.at("ws_bytes").get<double>();
  };
  const double bert = ratio_of("bert-toy");
  const double gpt2 = ratio_of("gpt2-toy");
  v.check(bert >= 2.0, "bert-toy ratio " + fmt(bert) + " < 2");
  v.check(gpt2 >= 2.0, "gpt2-toy ratio " + fmt(gpt2) + " < 2");
  v.check(gpt2 > bert, "gpt2-toy ratio does not exceed bert-toy's");
  v.note("footprint/ws: bert-toy " + fmt(bert, 2) + ", gpt2-toy " + fmt(gpt2, 2));
}

PolicyComparison compare_at(const std::vector<Event>& events, double factor) {
  UvmConfig cfg;
  cfg.device_capacity_bytes = set_capacity(device_footprint(events, 0), factor);
  return compare_policies(events, cfg);
}

void uvm_orderings(Verdict& v) {
  const double sep = 0.95;  // strict orderings need 5% separation
  for (const char* preset : {"cnn-toy", "bert-toy", "gpt2-toy"}) {
    auto cmp = compare_at(generate_trace(preset_spec(preset)), 1.0);
    const double o = cmp.normalized(PrefetchPolicy::Object);
    const double t = cmp.normalized(PrefetchPolicy::Tensor);
    v.check(o <= t && t <= 1.0, std::string(preset) + " factor 1: object " + fmt(o) +
                                    ", tensor " + fmt(t));
    v.note(std::string(preset) + " x1 object " + fmt(o) + " tensor " + fmt(t));
  }
  {
    auto cmp = compare_at(generate_trace(preset_spec("cnn-toy")), 3.0);
    const double o = cmp.normalized(PrefetchPolicy::Object);
    const double t = cmp.normalized(PrefetchPolicy::Tensor);
    v.check(t <= sep * o, "cnn-toy factor 3: tensor " + fmt(t) + " not 5% below object " + fmt(o));
    v.check(sep * o >= 1.0, "cnn-toy factor 3: object " + fmt(o) + " not 5% above none");
    v.note("cnn-toy x3 object " + fmt(o) + " tensor " + fmt(t));
  }
  {
    auto cmp = compare_at(generate_trace(preset_spec("gpt2-toy")), 3.0);
    const double o = cmp.normalized(PrefetchPolicy::Object);
    v.check(o <= 1.0, "gpt2-toy factor 3: object " + fmt(o) + " above none");
    v.note("gpt2-toy x3 object " + fmt(o));
  }
}

void simulator_invariants(Verdict& v) {
  constexpr uint64_t page = kUvmPageSize;
  std::mt19937_64 rng(77);
  // Residency bound over random configurations.
  for (int i = 0; i < 20; ++i) {
    auto spec = testing::random_spec(rng);
    spec.parallelism = Parallelism::None;
    spec.devices = 1;
    auto events = generate_trace(spec);
    UvmConfig cfg;
    const double factor = 1.0 + static_cast<double>(rng() % 40) / 10.0;
    cfg.device_capacity_bytes = std::max(page, set_capacity(device_footprint(events, 0), factor));
    cfg.overlap = rng() % 2;
    cfg.migration_bw_bytes_per_ns = 1.0 + static_cast<double>(rng() % 16);
    try {
      for (const auto& r : compare_policies(events, cfg).results) {
        v.check(r.max_resident_pages * page <= cfg.device_capacity_bytes,
                "residency over capacity in config " + std::to_string(i));
      }
    } catch (const Error& e) {
      v.check(false, std::string("config ") + std::to_string(i) + ": " + e.what());
    }
  }

  auto paged = [&](uint64_t n_pages, const std::vector<std::vector<uint64_t>>& kernels,
                   std::vector<uint64_t>& grids) {
    TraceBuilder b;
    for (uint64_t p = 1; p <= n_pages; ++p) b.malloc_object(0, p * page, page);
    for (const auto& ks : kernels) {
      std::vector<uint64_t> addrs;
      for (auto p : ks) addrs.push_back(p * page);
      grids.push_back(b.kernel(0, "k", addrs));
    }
    return b.events;
  };
  auto plan_of = [&](const std::map<uint64_t, std::set<uint64_t>>& by_grid) {
    PrefetchPlan plan;
    for (const auto& [g, pages] : by_grid) {
      for (auto p : pages) plan.ranges[g].push_back(ByteRange{p * page, page});
    }
    return plan;
  };
  auto cfg_pages = [&](uint64_t n) {
    UvmConfig c;
    c.device_capacity_bytes = n * page;
    return c;
  };

  // Prefetch and eviction monotonicity.
  int fault_cases = 0, eviction_cases = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const uint64_t n_pages = 4 + rng() % 8;
    std::vector<std::vector<uint64_t>> kernels(3 + rng() % 5);
    for (auto& k : kernels) {
      for (uint64_t j = 0, n = 1 + rng() % 4; j < n; ++j) k.push_back(1 + rng() % n_pages);
    }
    std::vector<uint64_t> grids;
    auto events = paged(n_pages, kernels, grids);
    const std::size_t target = rng() % kernels.size();
    std::set<uint64_t> pages(kernels[target].begin(), kernels[target].end());

    std::set<uint64_t> wide, narrow;
    for (auto p : pages) {
      if (rng() % 3) wide.insert(p);
    }
    for (auto p : wide) {
      if (rng() % 2) narrow.insert(p);
    }
    const uint64_t cap = std::max<uint64_t>(pages.size(), 1 + rng() % n_pages);
    auto rw = simulate(events, plan_of({{grids[target], wide}}), cfg_pages(cap));
    auto rn = simulate(events, plan_of({{grids[target], narrow}}), cfg_pages(cap));
    v.check(rw.kernels[target].faults <= rn.kernels[target].faults,
            "prefetch monotonicity trial " + std::to_string(trial));
    ++fault_cases;

    std::set<uint64_t> any_wide, any_narrow;
    for (uint64_t p = 1; p <= n_pages; ++p) {
      if (rng() % 2) any_wide.insert(p);
    }
    for (auto p : any_wide) {
      if (rng() % 2) any_narrow.insert(p);
    }
    const uint64_t small_cap = 1 + rng() % n_pages;
    auto ew = simulate(events, plan_of({{grids[target], any_wide}}), cfg_pages(small_cap));
    auto en = simulate(events, plan_of({{grids[target], any_narrow}}), cfg_pages(small_cap));
    v.check(ew.kernels[target].staging_evictions >= en.kernels[target].staging_evictions,
            "eviction monotonicity trial " + std::to_string(trial));
    ++eviction_cases;
  }

  // Four kernels alternating two pages through one page of capacity.
  std::vector<uint64_t> grids;
  auto thrash = paged(2, {{1}, {2}, {1}, {2}}, grids);
  auto r = simulate(thrash, std::nullopt, cfg_pages(1));
  const uint64_t fault_ns = 20'000 + page / 8;
  uint64_t base = 0;
  for (const auto& k : r.kernels) base += k.base_ns;
  v.check(r.faults == 4 && r.evictions == 3 && r.total_time_ns == base + 4 * fault_ns,
          "thrash example: faults " + std::to_string(r.faults) + ", evictions " +
              std::to_string(r.evictions));
  for (const auto& k : r.kernels) v.check(k.faults == 1, "thrash: a kernel did not fault");
  v.note("20 residency configs, " + std::to_string(fault_cases) + " prefetch and " +
         std::to_string(eviction_cases) + " eviction monotonicity cases, thrash " +
         std::to_string(r.faults) + " faults / " + std::to_string(r.evictions) + " evictions");
}

Report timeline_of(Parallelism p) {
  auto spec = preset_spec("gpt2-toy");
  spec.mode = RunMode::Train;
  spec.devices = 2;
  spec.parallelism = p;
  return run_tool("mem-timeline", generate_trace(spec), EngineConfig{});
}

void multi_gpu(Verdict& v) {
  auto dp = timeline_of(Parallelism::DP);
  auto tp = timeline_of(Parallelism::TP);
  auto pp = timeline_of(Parallelism::PP);
  bool dp_zero = true, pp_nonzero = false;
  for (const auto& pt : dp.at("difference")) dp_zero &= pt[1] == 0;
  for (const auto& pt : pp.at("difference")) pp_nonzero |= pt[1] != 0;
  v.check(dp_zero, "DP-2 difference series is not identically zero");
  v.check(pp_nonzero, "PP-2 difference series is identically zero");
  double worst = 0;
  for (std::size_t d = 0; d < 2; ++d) {
    const double ratio = tp.at("devices")[d].at("peak_bytes").get<double>() /
                         dp.at("devices")[d].at("peak_bytes").get<double>();
    v.check(std::abs(ratio - 0.5) <= 0.05, "TP/DP peak ratio " + fmt(ratio) + " on device " +
                                               std::to_string(d));
    worst = std::max(worst, std::abs(ratio - 0.5));
  }
  v.note("DP diff zero over " + std::to_string(dp.at("difference").size()) +
         " points; TP/DP peak within " + fmt(worst / 0.5 * 100, 1) + "% of 0.5");
}

void dialects(Verdict& v) {
  for (const char* preset : {"cnn-toy", "bert-toy", "gpt2-toy"}) {
    auto spec = preset_spec(preset);
    spec.layers = 2;
    spec.mode = RunMode::Train;
    auto events = generate_trace(spec);
    auto nvx = decode_trace(encode_trace(events, Dialect::NVX));
    auto rmx = decode_trace(encode_trace(events, Dialect::RMX));
    v.check(nvx == rmx, std::string(preset) + ": nvx and rmx differ");
    v.check(nvx == events, std::string(preset) + ": normalization lost information");
  }
  // Sign and unit fixtures.
  TraceBuilder b;
  auto obj = b.malloc_object(0, 0x400000, 2 * kMiB);
  auto t = b.tensor_alloc(0, obj, 0x400000, 4096);
  b.tensor_reclaim(t);
  b.events[2].timestamp_ns = 5000;
  auto rmx = decode_trace(encode_trace(b.events, Dialect::RMX));
  const auto& p = rmx[2].as<TensorEventInfo>();
  v.check(rmx[2].kind == EventKind::TensorReclaim && p.action == TensorAction::Reclaim &&
              p.size_bytes == 4096 && rmx[2].timestamp_ns == 5000,
          "negative-size release at 5 us");
  b.events[2].timestamp_ns = 5500;
  bool rejected = false;
  try {
    encode_trace(b.events, Dialect::RMX);
  } catch (const Error& e) {
    rejected = e.code() == ErrorCode::DialectLoss;
  }
  v.check(rejected, "strict rmx accepted a sub-microsecond timestamp");
  v.note("3 workloads identical across nvx/rmx; sign and unit fixtures exact");
}

// memchar statistics over a subset of per-kernel rows.
Report restrict_memchar(const Report& full, const std::set<KernelKey>& keep) {
  Report out;
  out["footprint_bytes"] = full.at("footprint_bytes");
  Report rows = Report::array();
  std::vector<uint64_t> fp;
  for (const auto& k : full.at("per_kernel")) {
    if (!keep.contains({k.at("device").get<uint32_t>(), k.at("grid_id").get<uint64_t>()})) continue;
    rows.push_back(k);
    fp.push_back(k.at("footprint_bytes"));
  }
  std::sort(fp.begin(), fp.end());
  out["kernel_count"] = fp.size();
  out["ws_bytes"] = fp.empty() ? 0 : fp.back();
  out["min_ws_bytes"] = fp.empty() ? 0 : fp.front();
  std::size_t rank = 0;
  while (rank * 10 < 9 * fp.size()) ++rank;
  out["p90_ws_bytes"] = fp.empty() ? 0 : fp[rank - 1];
  out["per_kernel"] = rows;
  return out;
}

void range_filtering(Verdict& v) {
  std::mt19937_64 rng(1010);
  int cases = 0;
  for (int i = 0; i < 20; ++i) {
    auto spec = testing::random_spec(rng);
    spec.annotate_layer = static_cast<int32_t>(rng() % spec.layers);
    auto events = generate_trace(spec);
    const std::string label =
        spec.model == ModelKind::CnnToy ? "conv_layer" : "transformer_layer";
    const auto full_memchar = run_tool("memchar", events, EngineConfig{});

    for (int variant = 0; variant < 3; ++variant) {
      EngineConfig cfg;
      std::optional<std::pair<uint64_t, uint64_t>> window;
      std::set<std::string> labels;
      if (variant != 1) {
        const uint64_t lo = rng() % 12;
        window = std::pair{lo, lo + rng() % 40};
        cfg.filter.grid_window = GridWindow{window->first, window->second};
      }
      if (variant != 0) {
        labels = {label};
        cfg.filter.marker_labels = labels;
      }
      const auto keep = testing::naive_in_range(events, window, labels);
      const std::string tag = "trace " + std::to_string(i) + " variant " + std::to_string(variant);
      ++cases;

      // kernel-freq: counts of in-range kernels from the full-stream rows.
      std::map<std::string, uint64_t> expect_counts;
      for (const auto& k : full_memchar.at("per_kernel")) {
        if (keep.contains({k.at("device").get<uint32_t>(), k.at("grid_id").get<uint64_t>()})) {
          ++expect_counts[k.at("kernel").get<std::string>()];
        }
      }
      auto kf = run_tool("kernel-freq", events, cfg);
      v.check(kf.at("counts").get<std::map<std::string, uint64_t>>() == expect_counts,
              tag + " kernel-freq");

      auto filtered = run_tool("memchar", events, cfg);
      auto expected = restrict_memchar(full_memchar, keep);
      for (const auto& key : {"footprint_bytes", "kernel_count", "ws_bytes", "min_ws_bytes",
                              "p90_ws_bytes", "per_kernel"}) {
        v.check(filtered.at(key) == expected.at(key), tag + " memchar " + key);
      }
    }
  }
  v.note(std::to_string(cases) + " filter cases over 20 traces (window, labels, both)");
}

void hotness_semantics(Verdict& v) {
  // Conservation on a generated trace.
  auto events = generate_trace(preset_spec("bert-toy"));
  uint64_t accesses = 0;
  for (const auto& e : events) accesses += e.kind == EventKind::GlobalAccess;
  ToolOptions opts;
  opts.window_ns = 100'000;
  auto r = run_tool("hotness", events, EngineConfig{}, opts);
  uint64_t sum = 0;
  for (const auto& row : r.at("matrix")) {
    for (const auto& c : row) sum += c.get<uint64_t>();
  }
  v.check(sum == accesses, "matrix sum " + std::to_string(sum) + " != " + std::to_string(accesses));

  // A persistent tensor read in every window and a transient tensor that
  // lives only for windows 4..6.
  constexpr uint64_t page = 2 * kMiB;
  constexpr uint64_t window = 1'000'000;
  TraceBuilder b;
  auto persistent_obj = b.malloc_object(0, 8 * page, page);
  auto transient_obj = b.malloc_object(0, 20 * page, page);
  b.tensor_alloc(0, persistent_obj, 8 * page, 64 * 1024);
  for (uint64_t w = 0; w < 10; ++w) {
    const uint64_t t0 = 1'000'000 + w * window;
    std::optional<uint64_t> transient;
    if (w == 4) transient = b.tensor_alloc(0, transient_obj, 20 * page, 64 * 1024);
    auto g = b.launch(0, "step");
    b.access(0, g, 8 * page + 64, 32, false, t0 + 100);
    if (w >= 4 && w <= 6) {
      for (int j = 0; j < 5; ++j) b.access(0, g, 20 * page + 32 * j, 32, true, t0 + 200 + j);
    }
    b.complete(0, g, t0 + 900);
  }
  ToolOptions o;
  o.window_ns = window;
  auto h = run_tool("hotness", b.events, EngineConfig{}, o);
  const auto& blocks = h.at("blocks");
  const auto& matrix = h.at("matrix");
  v.check(blocks.size() == 2 && matrix.size() == 10, "constructed matrix shape");
  if (blocks.size() == 2 && matrix.size() == 10) {
    bool persistent_full = true, transient_burst_only = true;
    for (std::size_t w = 0; w < 10; ++w) {
      persistent_full &= matrix[w][0] == 1;
      const uint64_t c = matrix[w][1];
      transient_burst_only &= (w >= 4 && w <= 6) ? c == 5 : c == 0;
    }
    v.check(blocks[0].at("block") == 8 && blocks[1].at("block") == 20, "block indices");
    v.check(persistent_full, "persistent block row has a zero window");
    v.check(transient_burst_only, "transient block row is non-zero outside its burst");
  }
  v.note("matrix sum " + std::to_string(sum) + " = access count; persistent row full, "
         "transient row confined to windows 4-6");
}

struct Criterion {
  int number;
  const char* title;
  std::function<void(Verdict&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "engine equivalence", engine_equivalence},
      {2, "parallel speedup", parallel_speedup},
      {3, "phase breakdown", phase_breakdown},
      {4, "working-set correctness", working_set},
      {5, "footprint/ws gap", footprint_gap},
      {6, "uvm orderings", uvm_orderings},
      {7, "simulator invariants", simulator_invariants},
      {8, "multi-gpu semantics", multi_gpu},
      {9, "dialect normalization", dialects},
      {10, "range filtering", range_filtering},
      {11, "hotness semantics", hotness_semantics},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.contains(c.number)) continue;
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d (%s) [%.1fs]: %s\n", v.ok() ? "PASS" : "FAIL", c.number, c.title,
                secs, v.summary().c_str());
    std::fflush(stdout);
    if (!v.ok()) ++failed;
  }
  return failed ? 1 : 0;
}
