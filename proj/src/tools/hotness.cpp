/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <algorithm>
#include <set>

#include "accelprof/error.hpp"
#include "tools/builtin.hpp"

namespace accelprof::tools {

namespace {

class Hotness final : public Tool {
 public:
  Hotness(uint64_t window_ns, uint64_t block_size) : window_ns_(window_ns), block_size_(block_size) {
    if (window_ns_ == 0) throw Error(ErrorCode::InvalidArgument, "hotness window must be positive");
    if (block_size_ == 0) throw Error(ErrorCode::InvalidArgument, "hotness block size must be positive");
  }

  const ToolDescriptor& descriptor() const override { return hotness_descriptor(); }

  void on_mem_access(const DispatchRecord& r) override {
    if (r.event->kind != EventKind::GlobalAccess) return;
    const uint64_t block = r.event->as<MemAccessInfo>().address / block_size_;
    ++counts_[{r.event->timestamp_ns, block}];
  }

  Report on_finalize() override {
    Report out;
    out["tool"] = "hotness";
    out["window_ns"] = window_ns_;
    out["block_size"] = block_size_;
    uint64_t origin = 0;
    uint64_t windows = 0;
    std::set<uint64_t> blocks;
    uint64_t total = 0;
    if (!counts_.empty()) {
      origin = counts_.begin()->first.first;
      windows = (counts_.rbegin()->first.first - origin) / window_ns_ + 1;
    }
    for (const auto& [key, n] : counts_) {
      blocks.insert(key.second);
      total += n;
    }
    std::map<uint64_t, std::size_t> column;
    out["blocks"] = Report::array();
    for (auto b : blocks) {
      column[b] = column.size();
      out["blocks"].push_back(Report{{"block", b}, {"base_address", b * block_size_}});
    }
    std::vector<std::vector<uint64_t>> matrix(windows, std::vector<uint64_t>(blocks.size(), 0));
    for (const auto& [key, n] : counts_) {
      matrix[(key.first - origin) / window_ns_][column[key.second]] += n;
    }
    out["origin_ns"] = origin;
    out["window_count"] = windows;
    out["total_accesses"] = total;
    out["matrix"] = matrix;
    return out;
  }

  std::unique_ptr<Tool> fork() const override {
    return std::make_unique<Hotness>(window_ns_, block_size_);
  }

  void merge(Tool& partial) override {
    auto& p = static_cast<Hotness&>(partial);
    for (const auto& [key, n] : p.counts_) counts_[key] += n;
    p.counts_.clear();
  }

 private:
  uint64_t window_ns_;
  uint64_t block_size_;
  std::map<std::pair<uint64_t, uint64_t>, uint64_t> counts_;  // (timestamp, block) -> accesses
};

}  // namespace

const ToolDescriptor& hotness_descriptor() {
  static const ToolDescriptor d{"hotness", "global access counts per time window and 2 MiB block",
                                true, true};
  return d;
}

std::unique_ptr<Tool> make_hotness(const ToolOptions& options) {
  return std::make_unique<Hotness>(options.window_ns, options.block_size);
}

}  // namespace accelprof::tools
