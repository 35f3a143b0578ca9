/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "accelprof/range_filter.hpp"

#include <charconv>
#include <limits>

#include "accelprof/error.hpp"

namespace accelprof {

namespace {

uint64_t parse_grid_id(const std::string& name, const std::string& text) {
  uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::InvalidArgument, name + " must be a decimal grid id, got '" + text + "'");
  }
  return v;
}

bool lifecycle(const Event& e) {
  return e.category() == Category::Framework || e.kind == EventKind::DeviceMalloc ||
         e.kind == EventKind::DeviceFree;
}

}  // namespace

void check_filter(const RangeFilter& filter) {
  if (filter.grid_window && filter.grid_window->start > filter.grid_window->end) {
    throw Error(ErrorCode::InvalidArgument,
                "grid window start " + std::to_string(filter.grid_window->start) +
                    " exceeds end " + std::to_string(filter.grid_window->end));
  }
}

RangeFilter filter_from_env(const EnvLookup& env) {
  RangeFilter filter;
  if (!env) return filter;
  auto start = env("START_GRID_ID");
  auto end = env("END_GRID_ID");
  if ((start && !start->empty()) || (end && !end->empty())) {
    GridWindow w{0, std::numeric_limits<uint64_t>::max()};
    if (start && !start->empty()) w.start = parse_grid_id("START_GRID_ID", *start);
    if (end && !end->empty()) w.end = parse_grid_id("END_GRID_ID", *end);
    filter.grid_window = w;
  }
  check_filter(filter);
  return filter;
}

RangeFilterState::RangeFilterState(RangeFilter filter) : filter_(std::move(filter)) {
  check_filter(filter_);
}

bool RangeFilterState::inside_label(uint32_t device) const {
  auto it = open_ranges_.find(device);
  if (it == open_ranges_.end()) return false;
  for (const auto& [id, label] : it->second) {
    if (filter_.marker_labels.contains(label)) return true;
  }
  return false;
}

bool RangeFilterState::admit(const Event& event) {
  if (filter_.empty()) return true;
  if (event.kind == EventKind::RangeStart) {
    const auto& r = event.as<RangeMarkerInfo>();
    open_ranges_[event.device][r.range_id] = r.label;
    return true;
  }
  if (event.kind == EventKind::RangeEnd) {
    open_ranges_[event.device].erase(event.as<RangeMarkerInfo>().range_id);
    return true;
  }
  if (lifecycle(event)) return true;

  if (event.kind == EventKind::KernelLaunch) {
    const uint64_t grid = event.as<KernelLaunchInfo>().grid_id;
    bool pass = true;
    if (filter_.grid_window) {
      pass = grid >= filter_.grid_window->start && grid <= filter_.grid_window->end;
    }
    if (pass && !filter_.marker_labels.empty()) pass = inside_label(event.device);
    if (pass) admitted_.insert(KernelScope{event.device, grid});
    return pass;
  }
  if (auto grid = grid_of(event)) {
    const KernelScope scope{event.device, *grid};
    const bool pass = admitted_.contains(scope);
    if (pass && event.kind == EventKind::KernelComplete) admitted_.erase(scope);
    return pass;
  }
  if (filter_.marker_labels.empty()) return true;
  return inside_label(event.device);
}

std::vector<Event> apply_range_filter(std::span<const Event> events, const RangeFilter& filter) {
  RangeFilterState state(filter);
  std::vector<Event> out;
  for (const auto& e : events) {
    if (state.admit(e)) out.push_back(e);
  }
  return out;
}

}  // namespace accelprof
