/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <algorithm>

#include "tools/builtin.hpp"

namespace accelprof::tools {

namespace {

class KernelFreq final : public Tool {
 public:
  explicit KernelFreq(uint32_t top_k) : top_k_(top_k) {}

  const ToolDescriptor& descriptor() const override { return kernel_freq_descriptor(); }

  void on_kernel_launch(const DispatchRecord& r) override {
    ++counts_[r.event->as<KernelLaunchInfo>().kernel_name];
    ++total_;
  }

  Report on_finalize() override {
    std::vector<std::pair<std::string, uint64_t>> ranked(counts_.begin(), counts_.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    Report top = Report::array();
    uint64_t shown = 0;
    for (std::size_t i = 0; i < ranked.size() && i < top_k_; ++i) {
      top.push_back(Report{{"kernel", ranked[i].first}, {"count", ranked[i].second}});
      shown += ranked[i].second;
    }
    if (shown < total_) top.push_back(Report{{"kernel", "Other kernels"}, {"count", total_ - shown}});

    Report out;
    out["tool"] = "kernel-freq";
    out["counts"] = Report::object();
    for (const auto& [name, n] : counts_) out["counts"][name] = n;
    out["total"] = total_;
    out["k"] = top_k_;
    out["top_k"] = std::move(top);
    return out;
  }

  std::unique_ptr<Tool> fork() const override { return std::make_unique<KernelFreq>(top_k_); }
  // Launches are never delivered to partials; nothing to fold.
  void merge(Tool&) override {}

 private:
  uint32_t top_k_;
  std::map<std::string, uint64_t> counts_;
  uint64_t total_ = 0;
};

}  // namespace

const ToolDescriptor& kernel_freq_descriptor() {
  static const ToolDescriptor d{"kernel-freq", "kernel invocation counts with a top-K summary",
                                false, true};
  return d;
}

std::unique_ptr<Tool> make_kernel_freq(const ToolOptions& options) {
  return std::make_unique<KernelFreq>(options.top_k);
}

}  // namespace accelprof::tools
