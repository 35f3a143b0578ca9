/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACCELPROF_TESTS_TRACE_BUILDER_HPP
#define ACCELPROF_TESTS_TRACE_BUILDER_HPP

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "accelprof/event.hpp"

namespace accelprof::testing {

// Emits well-formed event streams by hand. Each event advances the clock of
// its device by `step` ns unless a timestamp is given.
class TraceBuilder {
 public:
  uint64_t step = 1000;
  std::vector<Event> events;

  Event& push(uint32_t device, EventKind kind, Payload payload,
              std::shared_ptr<const CallStack> stack = nullptr, std::optional<uint64_t> ts = {}) {
    uint64_t& clock = clock_[device];
    clock = ts ? std::max(clock, *ts) : clock + step;
    Event e;
    e.seq = events.size();
    e.device = device;
    e.timestamp_ns = clock;
    e.kind = kind;
    e.payload = std::move(payload);
    e.stack = std::move(stack);
    events.push_back(std::move(e));
    return events.back();
  }

  uint64_t malloc_object(uint32_t device, uint64_t address, uint64_t size) {
    const uint64_t id = ++next_object_;
    objects_[id] = {device, address, size};
    push(device, EventKind::DeviceMalloc, ObjectEventInfo{id, address, size, ObjectAction::Malloc});
    return id;
  }

  void free_object(uint64_t id) {
    auto o = objects_.at(id);
    push(o.device, EventKind::DeviceFree, ObjectEventInfo{id, o.address, o.size, ObjectAction::Free});
  }

  uint64_t tensor_alloc(uint32_t device, uint64_t object, uint64_t address, uint64_t size) {
    const uint64_t id = ++next_tensor_;
    tensors_[id] = {device, address, size, object};
    push(device, EventKind::TensorAlloc,
         TensorEventInfo{id, object, address, size, TensorAction::Alloc});
    return id;
  }

  void tensor_reclaim(uint64_t id) {
    auto t = tensors_.at(id);
    push(t.device, EventKind::TensorReclaim,
         TensorEventInfo{id, t.object, t.address, t.size, TensorAction::Reclaim});
  }

  uint64_t launch(uint32_t device, const std::string& name, std::vector<uint64_t> args = {},
                  std::shared_ptr<const CallStack> stack = nullptr) {
    const uint64_t grid = next_grid_[device]++;
    KernelLaunchInfo k;
    k.kernel_name = name;
    k.grid_id = grid;
    k.grid_dims = Dim3{1, 1, 1};
    k.block_dims = Dim3{32, 1, 1};
    k.arg_objects = std::move(args);
    push(device, EventKind::KernelLaunch, std::move(k), std::move(stack));
    return grid;
  }

  void access(uint32_t device, uint64_t grid, uint64_t address, uint32_t size = 32,
              bool write = false, std::optional<uint64_t> ts = {}) {
    push(device, EventKind::GlobalAccess,
         MemAccessInfo{grid, address, size, write, MemSpace::Global}, nullptr, ts);
  }

  void shared_access(uint32_t device, uint64_t grid) {
    push(device, EventKind::SharedAccess, MemAccessInfo{grid, 0, 4, false, MemSpace::Shared});
  }

  void device_op(uint32_t device, EventKind kind, uint64_t grid) {
    push(device, kind, DeviceOpInfo{grid, 0});
  }

  void complete(uint32_t device, uint64_t grid, std::optional<uint64_t> ts = {}) {
    push(device, EventKind::KernelComplete, KernelCompleteInfo{grid}, nullptr, ts);
  }

  uint64_t range_start(uint32_t device, const std::string& label) {
    const uint64_t id = ++next_range_;
    push(device, EventKind::RangeStart, RangeMarkerInfo{id, label});
    return id;
  }

  void range_end(uint32_t device, uint64_t id, const std::string& label) {
    push(device, EventKind::RangeEnd, RangeMarkerInfo{id, label});
  }

  void host_call(uint32_t device, EventKind kind = EventKind::RuntimeCall) {
    push(device, kind, ApiCallInfo{"cudaSomething", 0});
  }

  // Launch, one access per address, complete.
  uint64_t kernel(uint32_t device, const std::string& name, const std::vector<uint64_t>& addresses,
                  std::vector<uint64_t> args = {}) {
    const uint64_t grid = launch(device, name, std::move(args));
    for (auto a : addresses) access(device, grid, a);
    complete(device, grid);
    return grid;
  }

 private:
  struct Obj {
    uint32_t device;
    uint64_t address;
    uint64_t size;
  };
  struct Ten {
    uint32_t device;
    uint64_t address;
    uint64_t size;
    uint64_t object;
  };
  std::map<uint32_t, uint64_t> clock_;
  std::map<uint32_t, uint64_t> next_grid_;
  std::map<uint64_t, Obj> objects_;
  std::map<uint64_t, Ten> tensors_;
  uint64_t next_object_ = 0;
  uint64_t next_tensor_ = 0;
  uint64_t next_range_ = 0;
};

inline std::shared_ptr<const CallStack> make_stack(const std::string& leaf) {
  CallStack s;
  s.frames.push_back(Frame{FrameLevel::Python, "main", "run.py", 1});
  s.frames.push_back(Frame{FrameLevel::Framework, "ops::" + leaf, "ops.cpp", 2});
  s.frames.push_back(Frame{FrameLevel::Native, "launch_" + leaf, "k.cu", 3});
  return std::make_shared<const CallStack>(std::move(s));
}

}  // namespace accelprof::testing

#endif  // ACCELPROF_TESTS_TRACE_BUILDER_HPP
