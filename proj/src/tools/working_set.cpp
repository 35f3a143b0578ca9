/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <algorithm>

#include "tools/builtin.hpp"

namespace accelprof::tools {

namespace {

struct KernelState {
  uint64_t launch_index = 0;
  std::string name;
  AccessCountMap objects;
  std::map<uint64_t, uint64_t> object_sizes;
  std::map<uint64_t, uint64_t> tensor_sizes;  // accessed tensors
};

struct KernelFootprint {
  uint64_t launch_index = 0;
  uint32_t device = 0;
  uint64_t grid_id = 0;
  std::string name;
  uint64_t footprint = 0;
  uint64_t tensor_footprint = 0;
};

class MemChar final : public Tool {
 public:
  const ToolDescriptor& descriptor() const override { return memchar_descriptor(); }

  void on_object_event(const DispatchRecord& r) override {
    const auto& o = r.event->as<ObjectEventInfo>();
    const uint32_t dev = r.event->device;
    if (r.event->kind == EventKind::DeviceMalloc) {
      live_[dev] += o.size_bytes;
      live_total_ += o.size_bytes;
    } else {
      live_[dev] -= std::min(live_[dev], o.size_bytes);
      live_total_ -= std::min(live_total_, o.size_bytes);
    }
    peak_[dev] = std::max(peak_[dev], live_[dev]);
    peak_total_ = std::max(peak_total_, live_total_);
  }

  void on_tensor_event(const DispatchRecord& r) override {
    const auto& t = r.event->as<TensorEventInfo>();
    if (r.event->kind == EventKind::TensorAlloc) {
      tensor_live_ += t.size_bytes;
    } else {
      tensor_live_ -= std::min(tensor_live_, t.size_bytes);
    }
    tensor_peak_ = std::max(tensor_peak_, tensor_live_);
  }

  void on_kernel_launch(const DispatchRecord& r) override {
    const auto& k = r.event->as<KernelLaunchInfo>();
    KernelScope scope{r.event->device, k.grid_id};
    auto& state = kernels_[scope];
    state.launch_index = launches_++;
    state.name = k.kernel_name;
    state.objects.scope = scope;
  }

  void on_mem_access(const DispatchRecord& r) override {
    if (r.event->kind != EventKind::GlobalAccess || !r.object) return;
    KernelScope scope{r.event->device, r.event->as<MemAccessInfo>().grid_id};
    auto& state = kernels_[scope];
    state.objects.scope = scope;
    ++state.objects.counts[r.object->object_id];
    state.object_sizes[r.object->object_id] = r.object->size_bytes;
    if (r.tensor) state.tensor_sizes[r.tensor->tensor_id] = r.tensor->size_bytes;
  }

  void on_kernel_complete(const DispatchRecord& r) override {
    KernelScope scope{r.event->device, r.event->as<KernelCompleteInfo>().grid_id};
    auto it = kernels_.find(scope);
    if (it == kernels_.end()) return;
    close(it->first, it->second);
    kernels_.erase(it);
  }

  Report on_finalize() override {
    for (const auto& [scope, state] : kernels_) close(scope, state);
    kernels_.clear();
    std::sort(done_.begin(), done_.end(),
              [](const auto& a, const auto& b) { return a.launch_index < b.launch_index; });

    std::vector<uint64_t> fp;
    uint64_t tensor_ws = 0;
    for (const auto& k : done_) {
      fp.push_back(k.footprint);
      tensor_ws = std::max(tensor_ws, k.tensor_footprint);
    }
    std::sort(fp.begin(), fp.end());
    const std::size_t n = fp.size();
    double avg = 0;
    double median = 0;
    uint64_t p90 = 0;
    if (n) {
      long double sum = 0;
      for (auto v : fp) sum += v;
      avg = static_cast<double>(sum / n);
      median = n % 2 ? static_cast<double>(fp[n / 2])
                     : (static_cast<double>(fp[n / 2 - 1]) + static_cast<double>(fp[n / 2])) / 2.0;
      p90 = fp[(9 * n + 9) / 10 - 1];
    }

    Report out;
    out["tool"] = "memchar";
    out["kernel_count"] = n;
    out["footprint_bytes"] = peak_total_;
    out["ws_bytes"] = n ? fp.back() : 0;
    out["min_ws_bytes"] = n ? fp.front() : 0;
    out["avg_ws_bytes"] = avg;
    out["median_ws_bytes"] = median;
    out["p90_ws_bytes"] = p90;
    out["tensor_footprint_bytes"] = tensor_peak_;
    out["tensor_ws_bytes"] = tensor_ws;
    out["per_device"] = Report::array();
    for (const auto& [dev, peak] : peak_) {
      out["per_device"].push_back(Report{{"device", dev}, {"footprint_bytes", peak}});
    }
    out["per_kernel"] = Report::array();
    for (const auto& k : done_) {
      out["per_kernel"].push_back(Report{{"device", k.device},
                                         {"grid_id", k.grid_id},
                                         {"kernel", k.name},
                                         {"footprint_bytes", k.footprint},
                                         {"tensor_footprint_bytes", k.tensor_footprint}});
    }
    return out;
  }

  std::unique_ptr<Tool> fork() const override { return std::make_unique<MemChar>(); }

  void merge(Tool& partial) override {
    auto& p = static_cast<MemChar&>(partial);
    for (auto& [scope, part] : p.kernels_) {
      auto& mine = kernels_[scope];
      mine.objects.scope = scope;
      mine.objects = merge_count_maps(mine.objects, part.objects);
      mine.object_sizes.merge(part.object_sizes);
      mine.tensor_sizes.merge(part.tensor_sizes);
    }
    p.kernels_.clear();
  }

 private:
  void close(const KernelScope& scope, const KernelState& state) {
    KernelFootprint k{state.launch_index, scope.device, scope.grid_id, state.name, 0, 0};
    for (const auto& [object, count] : state.objects.counts) {
      if (count > 0) k.footprint += state.object_sizes.at(object);
    }
    for (const auto& [tensor, size] : state.tensor_sizes) k.tensor_footprint += size;
    done_.push_back(std::move(k));
  }

  std::map<KernelScope, KernelState> kernels_;
  std::vector<KernelFootprint> done_;
  uint64_t launches_ = 0;
  std::map<uint32_t, uint64_t> live_;
  std::map<uint32_t, uint64_t> peak_;
  uint64_t live_total_ = 0;
  uint64_t peak_total_ = 0;
  uint64_t tensor_live_ = 0;
  uint64_t tensor_peak_ = 0;
};

}  // namespace

const ToolDescriptor& memchar_descriptor() {
  static const ToolDescriptor d{
      "memchar", "per-kernel object footprints, working set and memory footprint", true, true};
  return d;
}

std::unique_ptr<Tool> make_memchar(const ToolOptions&) { return std::make_unique<MemChar>(); }

}  // namespace accelprof::tools
