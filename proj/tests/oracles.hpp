/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACCELPROF_TESTS_ORACLES_HPP
#define ACCELPROF_TESTS_ORACLES_HPP

// Brute-force recomputations used as independent references. None of this
// shares code with the library beyond the event types.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "accelprof/event.hpp"

namespace accelprof::testing {

struct KernelKey {
  uint32_t device = 0;
  uint64_t grid_id = 0;
  auto operator<=>(const KernelKey&) const = default;
};

struct NaiveKernel {
  KernelKey key;
  std::string name;
  uint64_t footprint = 0;
  uint64_t accesses = 0;
};

struct NaiveMemchar {
  uint64_t footprint = 0;
  std::vector<NaiveKernel> kernels;  // launch order
  uint64_t ws = 0, min = 0, p90 = 0;
  double avg = 0, median = 0;
};

// Objects live during each access are found by linear search over every
// object allocated so far.
inline NaiveMemchar naive_memchar(const std::vector<Event>& events) {
  struct Obj {
    uint32_t device;
    uint64_t id, address, size;
    bool live;
  };
  std::vector<Obj> objects;
  std::map<KernelKey, std::size_t> index;
  std::map<KernelKey, std::set<uint64_t>> touched;
  std::map<uint64_t, uint64_t> size_of;
  NaiveMemchar out;
  uint64_t live = 0;
  for (const auto& e : events) {
    if (e.kind == EventKind::DeviceMalloc) {
      const auto& o = e.as<ObjectEventInfo>();
      objects.push_back({e.device, o.object_id, o.address, o.size_bytes, true});
      size_of[o.object_id] = o.size_bytes;
      live += o.size_bytes;
      out.footprint = std::max(out.footprint, live);
    } else if (e.kind == EventKind::DeviceFree) {
      for (auto& o : objects) {
        if (o.live && o.device == e.device && o.id == e.as<ObjectEventInfo>().object_id) {
          o.live = false;
          live -= o.size;
        }
      }
    } else if (e.kind == EventKind::KernelLaunch) {
      KernelKey k{e.device, e.as<KernelLaunchInfo>().grid_id};
      index[k] = out.kernels.size();
      out.kernels.push_back({k, e.as<KernelLaunchInfo>().kernel_name, 0, 0});
    } else if (e.kind == EventKind::GlobalAccess) {
      const auto& a = e.as<MemAccessInfo>();
      KernelKey k{e.device, a.grid_id};
      ++out.kernels.at(index.at(k)).accesses;
      for (const auto& o : objects) {
        if (o.live && o.device == e.device && a.address >= o.address &&
            a.address < o.address + o.size) {
          touched[k].insert(o.id);
        }
      }
    }
  }
  std::vector<uint64_t> fp;
  for (auto& k : out.kernels) {
    for (auto id : touched[k.key]) k.footprint += size_of[id];
    fp.push_back(k.footprint);
  }
  std::sort(fp.begin(), fp.end());
  if (!fp.empty()) {
    const std::size_t n = fp.size();
    out.min = fp.front();
    out.ws = fp.back();
    double sum = 0;
    for (auto v : fp) sum += static_cast<double>(v);
    out.avg = sum / static_cast<double>(n);
    out.median = n % 2 ? static_cast<double>(fp[n / 2])
                       : (static_cast<double>(fp[n / 2 - 1]) + static_cast<double>(fp[n / 2])) / 2;
    // Nearest rank: 1-based index ceil(0.9 n).
    std::size_t rank = 0;
    while (rank * 10 < 9 * n) ++rank;
    out.p90 = fp[rank - 1];
  }
  return out;
}

inline std::map<std::string, uint64_t> naive_kernel_counts(const std::vector<Event>& events) {
  std::map<std::string, uint64_t> counts;
  for (const auto& e : events) {
    if (e.kind == EventKind::KernelLaunch) ++counts[e.as<KernelLaunchInfo>().kernel_name];
  }
  return counts;
}

// Kernels a filter should keep, found by walking markers directly: a
// kernel is in range when its grid id is in the window and a range with a
// wanted label is open on its device at launch time.
inline std::set<KernelKey> naive_in_range(const std::vector<Event>& events,
                                          std::optional<std::pair<uint64_t, uint64_t>> window,
                                          const std::set<std::string>& labels) {
  std::map<uint32_t, std::vector<std::string>> open;
  std::set<KernelKey> keep;
  for (const auto& e : events) {
    if (e.kind == EventKind::RangeStart) {
      open[e.device].push_back(e.as<RangeMarkerInfo>().label);
    } else if (e.kind == EventKind::RangeEnd) {
      auto& stack = open[e.device];
      auto it = std::find(stack.rbegin(), stack.rend(), e.as<RangeMarkerInfo>().label);
      if (it != stack.rend()) stack.erase(std::next(it).base());
    } else if (e.kind == EventKind::KernelLaunch) {
      const uint64_t g = e.as<KernelLaunchInfo>().grid_id;
      if (window && (g < window->first || g > window->second)) continue;
      if (!labels.empty()) {
        bool inside = false;
        for (const auto& l : open[e.device]) inside |= labels.contains(l);
        if (!inside) continue;
      }
      keep.insert({e.device, g});
    }
  }
  return keep;
}

}  // namespace accelprof::testing

#endif  // ACCELPROF_TESTS_ORACLES_HPP
