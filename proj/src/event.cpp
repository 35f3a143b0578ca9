/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "accelprof/event.hpp"

#include <algorithm>

namespace accelprof {

namespace {

struct KindEntry {
  EventKind kind;
  std::string_view name;
};

constexpr std::array<KindEntry, 32> kKindNames = {{
    {EventKind::DriverCall, "driver_call"},
    {EventKind::RuntimeCall, "runtime_call"},
    {EventKind::Sync, "sync"},
    {EventKind::KernelLaunch, "kernel_launch"},
    {EventKind::KernelComplete, "kernel_complete"},
    {EventKind::MemCopy, "mem_copy"},
    {EventKind::MemSet, "mem_set"},
    {EventKind::ResourceOp, "resource_op"},
    {EventKind::BatchMemOp, "batch_mem_op"},
    {EventKind::DeviceMalloc, "device_malloc"},
    {EventKind::DeviceFree, "device_free"},
    {EventKind::BlockEnter, "block_enter"},
    {EventKind::BlockExit, "block_exit"},
    {EventKind::GlobalAccess, "global_access"},
    {EventKind::SharedAccess, "shared_access"},
    {EventKind::Barrier, "barrier"},
    {EventKind::FuncCall, "func_call"},
    {EventKind::FuncReturn, "func_return"},
    {EventKind::DeviceSideMalloc, "device_side_malloc"},
    {EventKind::DeviceSideFree, "device_side_free"},
    {EventKind::GlobalToSharedCopy, "global_to_shared_copy"},
    {EventKind::PipelineCommit, "pipeline_commit"},
    {EventKind::PipelineWait, "pipeline_wait"},
    {EventKind::RemoteSharedAccess, "remote_shared_access"},
    {EventKind::ClusterBarrier, "cluster_barrier"},
    {EventKind::Instruction, "instruction"},
    {EventKind::OperatorStart, "operator_start"},
    {EventKind::OperatorEnd, "operator_end"},
    {EventKind::TensorAlloc, "tensor_alloc"},
    {EventKind::TensorReclaim, "tensor_reclaim"},
    {EventKind::RangeStart, "range_start"},
    {EventKind::RangeEnd, "range_end"},
}};

}  // namespace

Category category_of(EventKind kind) {
  auto tag = static_cast<uint16_t>(kind);
  if (tag >= 64) return Category::Framework;
  if (tag >= 32) return Category::DeviceOp;
  return Category::HostApi;
}

std::string_view category_name(Category category) {
  switch (category) {
    case Category::HostApi: return "host_api";
    case Category::DeviceOp: return "device_op";
    case Category::Framework: return "framework";
  }
  return "unknown";
}

std::string_view kind_name(EventKind kind) {
  for (const auto& e : kKindNames) {
    if (e.kind == kind) return e.name;
  }
  return "unknown";
}

std::optional<EventKind> kind_from_name(std::string_view name) {
  for (const auto& e : kKindNames) {
    if (e.name == name) return e.kind;
  }
  return std::nullopt;
}

std::optional<EventKind> kind_from_tag(uint16_t tag) {
  for (const auto& e : kKindNames) {
    if (static_cast<uint16_t>(e.kind) == tag) return e.kind;
  }
  return std::nullopt;
}

std::size_t expected_payload_index(EventKind kind) {
  switch (kind) {
    case EventKind::KernelLaunch: return 1;
    case EventKind::KernelComplete: return 2;
    case EventKind::MemCopy: return 3;
    case EventKind::DeviceMalloc:
    case EventKind::DeviceFree: return 4;
    case EventKind::GlobalAccess:
    case EventKind::SharedAccess:
    case EventKind::RemoteSharedAccess: return 5;
    case EventKind::OperatorStart:
    case EventKind::OperatorEnd: return 7;
    case EventKind::TensorAlloc:
    case EventKind::TensorReclaim: return 8;
    case EventKind::RangeStart:
    case EventKind::RangeEnd: return 9;
    default: break;
  }
  return category_of(kind) == Category::DeviceOp ? 6 : 0;
}

std::string_view frame_level_name(FrameLevel level) {
  switch (level) {
    case FrameLevel::Native: return "native";
    case FrameLevel::Framework: return "framework";
    case FrameLevel::Python: return "python";
  }
  return "native";
}

std::optional<FrameLevel> frame_level_from_name(std::string_view name) {
  if (name == "native") return FrameLevel::Native;
  if (name == "framework") return FrameLevel::Framework;
  if (name == "python") return FrameLevel::Python;
  return std::nullopt;
}

bool operator==(const Event& a, const Event& b) {
  if (a.seq != b.seq || a.device != b.device ||
      a.timestamp_ns != b.timestamp_ns || a.kind != b.kind ||
      !(a.payload == b.payload)) {
    return false;
  }
  if (!a.stack || !b.stack) return !a.stack && !b.stack;
  return *a.stack == *b.stack;
}

std::optional<uint64_t> grid_of(const Event& event) {
  if (const auto* l = event.get_if<KernelLaunchInfo>()) return l->grid_id;
  if (const auto* c = event.get_if<KernelCompleteInfo>()) return c->grid_id;
  if (const auto* m = event.get_if<MemAccessInfo>()) return m->grid_id;
  if (const auto* d = event.get_if<DeviceOpInfo>()) return d->grid_id;
  return std::nullopt;
}

bool is_kernel_scoped(EventKind kind) {
  return kind == EventKind::KernelLaunch || kind == EventKind::KernelComplete ||
         category_of(kind) == Category::DeviceOp;
}

bool is_mem_access(EventKind kind) {
  return kind == EventKind::GlobalAccess || kind == EventKind::SharedAccess ||
         kind == EventKind::RemoteSharedAccess;
}

}  // namespace accelprof
