/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACCELPROF_UVM_HPP
#define ACCELPROF_UVM_HPP

#include <cstdint>
#include <list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "accelprof/event.hpp"
#include "accelprof/tool.hpp"

namespace accelprof {

enum class PlanGranularity { Object, Tensor };
enum class PrefetchPolicy { None, Object, Tensor };

std::string_view policy_name(PrefetchPolicy policy);
std::optional<PrefetchPolicy> policy_from_name(std::string_view name);

struct ByteRange {
  uint64_t address = 0;
  uint64_t size = 0;
  bool operator==(const ByteRange&) const = default;
};

struct PrefetchPlan {
  PlanGranularity granularity = PlanGranularity::Object;
  uint32_t device = 0;
  std::map<uint64_t, std::vector<ByteRange>> ranges;  // grid id -> ranges, sorted, disjoint

  uint64_t bytes(uint64_t grid_id) const;
};

// Profiles `events` with the uvm-profile tool. Throws EmptyProfile when the
// device saw no global accesses.
PrefetchPlan build_prefetch_plan(std::span<const Event> events, PlanGranularity granularity,
                                 uint32_t device = 0);
PrefetchPlan plan_from_profile(const Report& profile, PlanGranularity granularity,
                               uint32_t device = 0);

inline constexpr uint64_t kUvmPageSize = 2 * 1024 * 1024;

struct UvmConfig {
  uint64_t device_capacity_bytes = 0;
  uint64_t page_size_bytes = kUvmPageSize;
  uint64_t fault_latency_ns = 20'000;
  double migration_bw_bytes_per_ns = 8.0;
  double prefetch_bw_bytes_per_ns = 16.0;
  // Fixed cost per issued prefetch operation (one per planned range that
  // has non-resident pages).
  uint64_t prefetch_op_latency_ns = 20'000;
  bool overlap = true;
  uint32_t device = 0;
};

// round_down_to_page(footprint / factor). Throws InvalidArgument for
// factor < 1 or a zero page size.
uint64_t set_capacity(uint64_t footprint_bytes, double oversub_factor,
                      uint64_t page_size_bytes = kUvmPageSize);

// Peak simultaneous live object bytes on one device.
uint64_t device_footprint(std::span<const Event> events, uint32_t device);

// Page-granular LRU residency. Logical clock only; no wall time.
class ResidencySet {
 public:
  explicit ResidencySet(uint64_t capacity_pages) : capacity_(capacity_pages) {}

  bool resident(uint64_t page) const { return where_.contains(page); }
  // Marks most recently used; false if absent.
  bool touch(uint64_t page);
  // Inserts as most recently used, evicting LRU pages as needed. Returns the
  // number of evictions.
  uint64_t insert(uint64_t page);

  std::size_t size() const { return where_.size(); }
  uint64_t capacity() const { return capacity_; }
  // Least recently used first.
  std::vector<uint64_t> pages() const { return {order_.begin(), order_.end()}; }

 private:
  uint64_t capacity_;
  std::list<uint64_t> order_;  // front = LRU
  std::unordered_map<uint64_t, std::list<uint64_t>::iterator> where_;
};

struct KernelSim {
  uint64_t grid_id = 0;
  std::string kernel;
  uint64_t base_ns = 0;
  uint64_t prefetch_ns = 0;  // exposed staging time
  uint64_t fault_ns = 0;
  uint64_t faults = 0;
  uint64_t evictions = 0;  // during staging and execution
  uint64_t staging_evictions = 0;
  uint64_t staged_pages = 0;
};

struct SimResult {
  PrefetchPolicy policy = PrefetchPolicy::None;
  uint64_t capacity_bytes = 0;
  uint64_t page_size_bytes = 0;
  uint64_t total_time_ns = 0;
  uint64_t base_time_ns = 0;
  uint64_t faults = 0;
  uint64_t demand_migrated_bytes = 0;
  uint64_t prefetched_bytes = 0;
  uint64_t prefetch_ops = 0;
  uint64_t evictions = 0;
  uint64_t max_resident_pages = 0;
  std::vector<KernelSim> kernels;
};

// Replays the device's kernels in launch order. Throws CapacityTooSmall or
// PlanMismatch.
SimResult simulate(std::span<const Event> events, const std::optional<PrefetchPlan>& plan,
                   const UvmConfig& config);

struct PolicyComparison {
  std::vector<SimResult> results;  // none, object, tensor
  double normalized(PrefetchPolicy policy) const;
};

// Plans come from profiling the same trace.
PolicyComparison compare_policies(std::span<const Event> events, const UvmConfig& config);

Report sim_json(const SimResult& result, bool per_kernel = true);
Report comparison_json(const PolicyComparison& comparison, bool per_kernel = false);

}  // namespace accelprof

#endif  // ACCELPROF_UVM_HPP
