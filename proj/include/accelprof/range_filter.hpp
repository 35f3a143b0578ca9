/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACCELPROF_RANGE_FILTER_HPP
#define ACCELPROF_RANGE_FILTER_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "accelprof/event.hpp"
#include "accelprof/tool.hpp"

namespace accelprof {

struct GridWindow {
  uint64_t start = 0;
  uint64_t end = 0;  // inclusive
};

struct RangeFilter {
  std::optional<GridWindow> grid_window;
  std::set<std::string> marker_labels;

  bool empty() const { return !grid_window && marker_labels.empty(); }
};

// Throws InvalidArgument when start > end.
void check_filter(const RangeFilter& filter);

// START_GRID_ID / END_GRID_ID; a missing bound is open. Flags override.
RangeFilter filter_from_env(const EnvLookup& env);

// Streaming evaluation. Lifecycle events (object mallocs/frees and every
// framework event) always pass. Kernel launches pass when inside the grid
// window and, if labels are set, opened while a matching range is open on
// that device; the kernel's accesses, device ops and completion follow the
// launch's decision. Other host events only face the label condition.
class RangeFilterState {
 public:
  explicit RangeFilterState(RangeFilter filter);
  bool admit(const Event& event);

 private:
  bool inside_label(uint32_t device) const;

  RangeFilter filter_;
  std::map<uint32_t, std::map<uint64_t, std::string>> open_ranges_;  // device -> id -> label
  std::set<KernelScope> admitted_;
};

std::vector<Event> apply_range_filter(std::span<const Event> events, const RangeFilter& filter);

}  // namespace accelprof

#endif  // ACCELPROF_RANGE_FILTER_HPP
