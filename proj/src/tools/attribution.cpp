/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "accelprof/error.hpp"
#include "tools/builtin.hpp"

namespace accelprof::tools {

namespace {

struct Winner {
  std::string kernel;
  uint64_t value = 0;
  std::shared_ptr<const CallStack> stack;
};

struct InFlight {
  std::string name;
  std::shared_ptr<const CallStack> stack;
};

class Attribution final : public Tool {
 public:
  explicit Attribution(const Knobs& knobs)
      : called_(knobs.enabled(kMaxCalledKernel)),
        referenced_(knobs.enabled(kMaxMemReferencedKernel)),
        enabled_(knobs.enabled_names()) {
    if (!knobs.any()) {
      throw Error(ErrorCode::NoKnobEnabled,
                  "attribution needs at least one knob enabled; known knobs: " +
                      std::string(kMaxCalledKernel) + ", " + std::string(kMaxMemReferencedKernel));
    }
  }

  const ToolDescriptor& descriptor() const override { return attribution_descriptor(); }

  void on_kernel_launch(const DispatchRecord& r) override {
    const auto& k = r.event->as<KernelLaunchInfo>();
    inflight_[KernelScope{r.event->device, k.grid_id}] = InFlight{k.kernel_name, r.event->stack};
    const uint64_t n = ++launches_[k.kernel_name];
    // Strictly greater: on ties the first to reach the value keeps the win.
    if (called_ && n > winners_[std::string(kMaxCalledKernel)].value) {
      winners_[std::string(kMaxCalledKernel)] = Winner{k.kernel_name, n, r.event->stack};
    }
  }

  void on_mem_access(const DispatchRecord& r) override {
    if (!referenced_ || r.event->kind != EventKind::GlobalAccess) return;
    auto it = inflight_.find(KernelScope{r.event->device, r.event->as<MemAccessInfo>().grid_id});
    if (it == inflight_.end()) return;
    const uint64_t n = ++references_[it->second.name];
    auto& best = winners_[std::string(kMaxMemReferencedKernel)];
    if (n > best.value) best = Winner{it->second.name, n, it->second.stack};
  }

  void on_kernel_complete(const DispatchRecord& r) override {
    inflight_.erase(KernelScope{r.event->device, r.event->as<KernelCompleteInfo>().grid_id});
  }

  Report on_finalize() override {
    Report out;
    out["tool"] = "attribution";
    out["winners"] = Report::array();
    for (const auto& knob : enabled_) {
      const Winner& w = winners_[knob];
      Report entry;
      entry["knob"] = knob;
      entry["kernel"] = w.value ? Report(w.kernel) : Report(nullptr);
      entry["value"] = w.value;
      entry["stack"] = stack_json(w.stack.get());
      out["winners"].push_back(std::move(entry));
    }
    return out;
  }

 private:
  bool called_;
  bool referenced_;
  std::vector<std::string> enabled_;
  std::map<KernelScope, InFlight> inflight_;
  std::map<std::string, uint64_t> launches_;
  std::map<std::string, uint64_t> references_;
  std::map<std::string, Winner> winners_;
};

}  // namespace

const ToolDescriptor& attribution_descriptor() {
  static const ToolDescriptor d{
      "attribution", "call-stack attribution of the arg-max kernel per enabled knob", true, false};
  return d;
}

std::unique_ptr<Tool> make_attribution(const ToolOptions& options) {
  return std::make_unique<Attribution>(options.knobs);
}

}  // namespace accelprof::tools
