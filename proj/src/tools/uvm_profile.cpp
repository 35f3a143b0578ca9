/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <algorithm>

#include "tools/builtin.hpp"

namespace accelprof::tools {

namespace {

using Ranges = std::map<uint64_t, uint64_t>;  // address -> size

struct KernelProfile {
  uint64_t launch_index = 0;
  std::string name;
  Ranges objects;
  Ranges tensors;  // accessed tensors, or the bare access when no tensor covers it
};

Report merged_ranges(const Ranges& ranges, uint64_t& bytes) {
  Report out = Report::array();
  bytes = 0;
  uint64_t start = 0;
  uint64_t end = 0;
  bool open = false;
  for (const auto& [addr, size] : ranges) {
    if (open && addr <= end) {
      end = std::max(end, addr + size);
      continue;
    }
    if (open) {
      out.push_back(Report::array({start, end - start}));
      bytes += end - start;
    }
    start = addr;
    end = addr + size;
    open = true;
  }
  if (open) {
    out.push_back(Report::array({start, end - start}));
    bytes += end - start;
  }
  return out;
}

class UvmProfile final : public Tool {
 public:
  const ToolDescriptor& descriptor() const override { return uvm_profile_descriptor(); }

  void on_kernel_launch(const DispatchRecord& r) override {
    const auto& k = r.event->as<KernelLaunchInfo>();
    auto& p = kernels_[KernelScope{r.event->device, k.grid_id}];
    p.launch_index = launches_++;
    p.name = k.kernel_name;
  }

  void on_mem_access(const DispatchRecord& r) override {
    if (r.event->kind != EventKind::GlobalAccess || !r.object) return;
    const auto& a = r.event->as<MemAccessInfo>();
    auto& p = kernels_[KernelScope{r.event->device, a.grid_id}];
    p.objects.emplace(r.object->address, r.object->size_bytes);
    if (r.tensor) {
      auto& size = p.tensors[r.tensor->address];
      size = std::max(size, r.tensor->size_bytes);
    } else {
      auto& size = p.tensors[a.address];
      size = std::max<uint64_t>(size, a.size_bytes);
    }
  }

  Report on_finalize() override {
    std::vector<std::pair<KernelScope, const KernelProfile*>> order;
    for (const auto& [scope, p] : kernels_) order.emplace_back(scope, &p);
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      return a.second->launch_index < b.second->launch_index;
    });
    Report out;
    out["tool"] = "uvm-profile";
    out["kernel_count"] = order.size();
    uint64_t object_total = 0;
    uint64_t tensor_total = 0;
    Report kernels = Report::array();
    for (const auto& [scope, p] : order) {
      uint64_t object_bytes = 0;
      uint64_t tensor_bytes = 0;
      Report k;
      k["device"] = scope.device;
      k["grid_id"] = scope.grid_id;
      k["kernel"] = p->name;
      k["object_ranges"] = merged_ranges(p->objects, object_bytes);
      k["tensor_ranges"] = merged_ranges(p->tensors, tensor_bytes);
      k["object_bytes"] = object_bytes;
      k["tensor_bytes"] = tensor_bytes;
      object_total += object_bytes;
      tensor_total += tensor_bytes;
      kernels.push_back(std::move(k));
    }
    out["object_bytes"] = object_total;
    out["tensor_bytes"] = tensor_total;
    out["kernels"] = std::move(kernels);
    return out;
  }

  std::unique_ptr<Tool> fork() const override { return std::make_unique<UvmProfile>(); }

  void merge(Tool& partial) override {
    auto& other = static_cast<UvmProfile&>(partial);
    for (auto& [scope, part] : other.kernels_) {
      auto& mine = kernels_[scope];
      for (const auto& [addr, size] : part.objects) mine.objects.emplace(addr, size);
      for (const auto& [addr, size] : part.tensors) {
        auto& s = mine.tensors[addr];
        s = std::max(s, size);
      }
    }
    other.kernels_.clear();
  }

 private:
  std::map<KernelScope, KernelProfile> kernels_;
  uint64_t launches_ = 0;
};

}  // namespace

const ToolDescriptor& uvm_profile_descriptor() {
  static const ToolDescriptor d{
      "uvm-profile", "per-kernel accessed object and tensor ranges for prefetch planning", true,
      true};
  return d;
}

std::unique_ptr<Tool> make_uvm_profile(const ToolOptions&) { return std::make_unique<UvmProfile>(); }

}  // namespace accelprof::tools
