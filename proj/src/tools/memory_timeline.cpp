/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <algorithm>

#include "accelprof/error.hpp"
#include "tools/builtin.hpp"

namespace accelprof::tools {

namespace {

using Series = std::vector<std::pair<uint64_t, int64_t>>;  // (timestamp, live bytes)

// Value of a step series after every point at or before t.
int64_t value_at(const Series& s, uint64_t t) {
  auto it = std::upper_bound(s.begin(), s.end(), t,
                             [](uint64_t v, const auto& p) { return v < p.first; });
  return it == s.begin() ? 0 : std::prev(it)->second;
}

class MemTimeline final : public Tool {
 public:
  explicit MemTimeline(std::optional<std::pair<uint32_t, uint32_t>> pair) : pair_(pair) {}

  const ToolDescriptor& descriptor() const override { return mem_timeline_descriptor(); }

  void on_tensor_event(const DispatchRecord& r) override {
    const auto& t = r.event->as<TensorEventInfo>();
    auto& live = live_[r.event->device];
    live += r.event->kind == EventKind::TensorAlloc ? static_cast<int64_t>(t.size_bytes)
                                                    : -static_cast<int64_t>(t.size_bytes);
    series_[r.event->device].emplace_back(r.event->timestamp_ns, live);
  }

  Report on_finalize() override {
    Report out;
    out["tool"] = "mem-timeline";
    out["devices"] = Report::array();
    for (const auto& [dev, series] : series_) {
      int64_t peak = 0;
      for (const auto& p : series) peak = std::max(peak, p.second);
      Report points = Report::array();
      for (const auto& [t, v] : series) points.push_back(Report::array({t, v}));
      out["devices"].push_back(
          Report{{"device", dev}, {"peak_bytes", peak}, {"points", std::move(points)}});
    }

    std::optional<std::pair<uint32_t, uint32_t>> pair = pair_;
    if (!pair && series_.size() >= 2) {
      pair = std::pair{series_.begin()->first, std::next(series_.begin())->first};
    }
    if (pair) {
      for (uint32_t d : {pair->first, pair->second}) {
        if (!series_.contains(d)) {
          throw Error(ErrorCode::UnknownDevice,
                      "device " + std::to_string(d) + " has no memory events in the trace");
        }
      }
      const Series& a = series_.at(pair->first);
      const Series& b = series_.at(pair->second);
      std::vector<uint64_t> times;
      for (const auto& p : a) times.push_back(p.first);
      for (const auto& p : b) times.push_back(p.first);
      std::sort(times.begin(), times.end());
      times.erase(std::unique(times.begin(), times.end()), times.end());
      Report diff = Report::array();
      for (auto t : times) diff.push_back(Report::array({t, value_at(a, t) - value_at(b, t)}));
      out["pair"] = Report::array({pair->first, pair->second});
      out["difference"] = std::move(diff);
    }
    return out;
  }

 private:
  std::optional<std::pair<uint32_t, uint32_t>> pair_;
  std::map<uint32_t, int64_t> live_;
  std::map<uint32_t, Series> series_;
};

}  // namespace

const ToolDescriptor& mem_timeline_descriptor() {
  static const ToolDescriptor d{"mem-timeline", "per-device live tensor bytes over time",
                                false, false};
  return d;
}

std::unique_ptr<Tool> make_mem_timeline(const ToolOptions& options) {
  return std::make_unique<MemTimeline>(options.device_pair);
}

}  // namespace accelprof::tools
