/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "accelprof/uvm.hpp"

#include <algorithm>
#include <cmath>

#include "accelprof/engine.hpp"
#include "accelprof/error.hpp"

namespace accelprof {

namespace {

struct ReplayKernel {
  uint64_t grid_id = 0;
  std::string name;
  uint64_t launch_ns = 0;
  std::optional<uint64_t> complete_ns;
  std::vector<uint64_t> pages;  // in access order, consecutive repeats folded
};

uint64_t ns_for(uint64_t bytes, double bw) {
  return static_cast<uint64_t>(std::llround(static_cast<double>(bytes) / bw));
}

}  // namespace

std::string_view policy_name(PrefetchPolicy policy) {
  switch (policy) {
    case PrefetchPolicy::None: return "none";
    case PrefetchPolicy::Object: return "object";
    case PrefetchPolicy::Tensor: return "tensor";
  }
  return "none";
}

std::optional<PrefetchPolicy> policy_from_name(std::string_view name) {
  if (name == "none") return PrefetchPolicy::None;
  if (name == "object") return PrefetchPolicy::Object;
  if (name == "tensor") return PrefetchPolicy::Tensor;
  return std::nullopt;
}

uint64_t PrefetchPlan::bytes(uint64_t grid_id) const {
  auto it = ranges.find(grid_id);
  if (it == ranges.end()) return 0;
  uint64_t total = 0;
  for (const auto& r : it->second) total += r.size;
  return total;
}

PrefetchPlan plan_from_profile(const Report& profile, PlanGranularity granularity,
                               uint32_t device) {
  PrefetchPlan plan;
  plan.granularity = granularity;
  plan.device = device;
  const char* key = granularity == PlanGranularity::Object ? "object_ranges" : "tensor_ranges";
  bool any = false;
  for (const auto& k : profile.at("kernels")) {
    if (k.at("device").get<uint32_t>() != device) continue;
    auto& ranges = plan.ranges[k.at("grid_id").get<uint64_t>()];
    for (const auto& r : k.at(key)) {
      ranges.push_back(ByteRange{r[0].get<uint64_t>(), r[1].get<uint64_t>()});
      any = true;
    }
  }
  if (!any) {
    throw Error(ErrorCode::EmptyProfile,
                "profile has no global accesses on device " + std::to_string(device));
  }
  return plan;
}

PrefetchPlan build_prefetch_plan(std::span<const Event> events, PlanGranularity granularity,
                                 uint32_t device) {
  auto tool = builtin_registry().create("uvm-profile", ToolOptions{});
  EngineConfig config;
  auto result = run_engine(events, *tool, config);
  return plan_from_profile(result.report, granularity, device);
}

uint64_t set_capacity(uint64_t footprint_bytes, double oversub_factor, uint64_t page_size_bytes) {
  if (!(oversub_factor >= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "oversubscription factor must be at least 1");
  }
  if (page_size_bytes == 0) throw Error(ErrorCode::InvalidArgument, "page size must be positive");
  const auto raw = static_cast<uint64_t>(std::floor(static_cast<long double>(footprint_bytes) /
                                                    oversub_factor));
  return raw / page_size_bytes * page_size_bytes;
}

uint64_t device_footprint(std::span<const Event> events, uint32_t device) {
  uint64_t live = 0;
  uint64_t peak = 0;
  for (const auto& e : events) {
    if (e.device != device) continue;
    if (e.kind == EventKind::DeviceMalloc) {
      live += e.as<ObjectEventInfo>().size_bytes;
      peak = std::max(peak, live);
    } else if (e.kind == EventKind::DeviceFree) {
      live -= std::min(live, e.as<ObjectEventInfo>().size_bytes);
    }
  }
  return peak;
}

bool ResidencySet::touch(uint64_t page) {
  auto it = where_.find(page);
  if (it == where_.end()) return false;
  order_.splice(order_.end(), order_, it->second);
  return true;
}

uint64_t ResidencySet::insert(uint64_t page) {
  if (touch(page)) return 0;
  uint64_t evicted = 0;
  while (where_.size() >= capacity_ && !order_.empty()) {
    where_.erase(order_.front());
    order_.pop_front();
    ++evicted;
  }
  order_.push_back(page);
  where_[page] = std::prev(order_.end());
  return evicted;
}

SimResult simulate(std::span<const Event> events, const std::optional<PrefetchPlan>& plan,
                   const UvmConfig& config) {
  if (config.page_size_bytes == 0) throw Error(ErrorCode::InvalidArgument, "page size must be positive");
  if (!(config.migration_bw_bytes_per_ns > 0) || !(config.prefetch_bw_bytes_per_ns > 0)) {
    throw Error(ErrorCode::InvalidArgument, "bandwidths must be positive");
  }
  const uint64_t capacity_pages = config.device_capacity_bytes / config.page_size_bytes;
  if (capacity_pages == 0) {
    throw Error(ErrorCode::CapacityTooSmall,
                "device capacity " + std::to_string(config.device_capacity_bytes) +
                    " B is below one page of " + std::to_string(config.page_size_bytes) + " B");
  }
  if (plan && plan->device != config.device) {
    throw Error(ErrorCode::PlanMismatch, "plan was built for device " +
                                             std::to_string(plan->device) + ", simulating device " +
                                             std::to_string(config.device));
  }

  std::vector<ReplayKernel> kernels;
  std::map<uint64_t, std::size_t> by_grid;
  for (const auto& e : events) {
    if (e.device != config.device) continue;
    if (e.kind == EventKind::KernelLaunch) {
      const auto& k = e.as<KernelLaunchInfo>();
      by_grid[k.grid_id] = kernels.size();
      kernels.push_back(ReplayKernel{k.grid_id, k.kernel_name, e.timestamp_ns, std::nullopt, {}});
    } else if (e.kind == EventKind::KernelComplete) {
      if (auto it = by_grid.find(e.as<KernelCompleteInfo>().grid_id); it != by_grid.end()) {
        kernels[it->second].complete_ns = e.timestamp_ns;
      }
    } else if (e.kind == EventKind::GlobalAccess) {
      const auto& a = e.as<MemAccessInfo>();
      auto it = by_grid.find(a.grid_id);
      if (it == by_grid.end()) continue;
      auto& pages = kernels[it->second].pages;
      const uint64_t page = a.address / config.page_size_bytes;
      if (pages.empty() || pages.back() != page) pages.push_back(page);
    }
  }
  if (plan) {
    for (const auto& [grid, ranges] : plan->ranges) {
      if (!by_grid.contains(grid)) {
        throw Error(ErrorCode::PlanMismatch,
                    "plan names grid " + std::to_string(grid) + " which the trace never launches");
      }
    }
  }

  SimResult result;
  result.policy = !plan ? PrefetchPolicy::None
                        : (plan->granularity == PlanGranularity::Object ? PrefetchPolicy::Object
                                                                        : PrefetchPolicy::Tensor);
  result.capacity_bytes = capacity_pages * config.page_size_bytes;
  result.page_size_bytes = config.page_size_bytes;

  ResidencySet resident(capacity_pages);
  const uint64_t fault_cost =
      config.fault_latency_ns + ns_for(config.page_size_bytes, config.migration_bw_bytes_per_ns);
  const uint64_t stage_cost = ns_for(config.page_size_bytes, config.prefetch_bw_bytes_per_ns);
  auto check = [&] {
    if (resident.size() > capacity_pages) {
      throw Error(ErrorCode::InvariantViolation, "residency exceeds device capacity");
    }
    result.max_resident_pages = std::max<uint64_t>(result.max_resident_pages, resident.size());
  };

  uint64_t previous_kernel_ns = 0;
  for (const auto& k : kernels) {
    KernelSim ks;
    ks.grid_id = k.grid_id;
    ks.kernel = k.name;
    ks.base_ns = k.complete_ns ? *k.complete_ns - k.launch_ns : 0;

    if (plan) {
      uint64_t ops = 0;
      if (auto it = plan->ranges.find(k.grid_id); it != plan->ranges.end()) {
        for (const auto& r : it->second) {
          if (r.size == 0) continue;
          bool issued = false;
          const uint64_t first = r.address / config.page_size_bytes;
          const uint64_t last = (r.address + r.size - 1) / config.page_size_bytes;
          for (uint64_t p = first; p <= last; ++p) {
            if (resident.touch(p)) continue;
            issued = true;
            ks.staging_evictions += resident.insert(p);
            ++ks.staged_pages;
            check();
          }
          if (issued) ++ops;
        }
      }
      ks.evictions = ks.staging_evictions;
      const uint64_t staging =
          ops * config.prefetch_op_latency_ns + ks.staged_pages * stage_cost;
      ks.prefetch_ns = config.overlap && staging > previous_kernel_ns
                           ? staging - previous_kernel_ns
                           : (config.overlap ? 0 : staging);
      result.prefetch_ops += ops;
      result.prefetched_bytes += ks.staged_pages * config.page_size_bytes;
    }

    for (uint64_t p : k.pages) {
      if (resident.touch(p)) continue;
      ks.evictions += resident.insert(p);
      ++ks.faults;
      ks.fault_ns += fault_cost;
      check();
    }

    const uint64_t kernel_ns = ks.base_ns + ks.fault_ns;
    previous_kernel_ns = kernel_ns;
    result.total_time_ns += ks.prefetch_ns + kernel_ns;
    result.base_time_ns += ks.base_ns;
    result.faults += ks.faults;
    result.demand_migrated_bytes += ks.faults * config.page_size_bytes;
    result.evictions += ks.evictions;
    result.kernels.push_back(std::move(ks));
  }
  return result;
}

double PolicyComparison::normalized(PrefetchPolicy policy) const {
  const SimResult* base = nullptr;
  const SimResult* target = nullptr;
  for (const auto& r : results) {
    if (r.policy == PrefetchPolicy::None) base = &r;
    if (r.policy == policy) target = &r;
  }
  if (!base || !target || base->total_time_ns == 0) return 0.0;
  return static_cast<double>(target->total_time_ns) / static_cast<double>(base->total_time_ns);
}

PolicyComparison compare_policies(std::span<const Event> events, const UvmConfig& config) {
  auto tool = builtin_registry().create("uvm-profile", ToolOptions{});
  auto profile = run_engine(events, *tool, EngineConfig{}).report;
  PolicyComparison out;
  out.results.push_back(simulate(events, std::nullopt, config));
  out.results.push_back(
      simulate(events, plan_from_profile(profile, PlanGranularity::Object, config.device), config));
  out.results.push_back(
      simulate(events, plan_from_profile(profile, PlanGranularity::Tensor, config.device), config));
  return out;
}

Report sim_json(const SimResult& r, bool per_kernel) {
  Report j;
  j["policy"] = std::string(policy_name(r.policy));
  j["capacity_bytes"] = r.capacity_bytes;
  j["page_size_bytes"] = r.page_size_bytes;
  j["total_time_ns"] = r.total_time_ns;
  j["base_time_ns"] = r.base_time_ns;
  j["faults"] = r.faults;
  j["demand_migrated_bytes"] = r.demand_migrated_bytes;
  j["prefetched_bytes"] = r.prefetched_bytes;
  j["prefetch_ops"] = r.prefetch_ops;
  j["evictions"] = r.evictions;
  j["max_resident_pages"] = r.max_resident_pages;
  if (per_kernel) {
    j["kernels"] = Report::array();
    for (const auto& k : r.kernels) {
      j["kernels"].push_back(Report{{"grid_id", k.grid_id},
                                    {"kernel", k.kernel},
                                    {"base_ns", k.base_ns},
                                    {"prefetch_ns", k.prefetch_ns},
                                    {"fault_ns", k.fault_ns},
                                    {"faults", k.faults},
                                    {"evictions", k.evictions},
                                    {"staging_evictions", k.staging_evictions},
                                    {"staged_pages", k.staged_pages}});
    }
  }
  return j;
}

Report comparison_json(const PolicyComparison& c, bool per_kernel) {
  Report j;
  j["tool"] = "sim-uvm";
  j["results"] = Report::array();
  for (const auto& r : c.results) {
    Report s = sim_json(r, per_kernel);
    s["normalized_time"] = c.normalized(r.policy);
    j["results"].push_back(std::move(s));
  }
  return j;
}

}  // namespace accelprof
