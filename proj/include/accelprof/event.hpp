/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACCELPROF_EVENT_HPP
#define ACCELPROF_EVENT_HPP

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace accelprof {

/*
 * Unified event model.
 *
 * Every backend dialect is normalized into this form before any tool sees it:
 * nanosecond timestamps, strictly positive sizes, and an explicit action for
 * allocation/release events.
 */

enum class Category : uint8_t { HostApi, DeviceOp, Framework };

// Numeric values are the on-disk kind tags of the unified dialect.
enum class EventKind : uint16_t {
  // Host-called API events
  DriverCall = 1,
  RuntimeCall = 2,
  Sync = 3,
  KernelLaunch = 4,
  KernelComplete = 5,
  MemCopy = 6,
  MemSet = 7,
  ResourceOp = 8,
  BatchMemOp = 9,
  DeviceMalloc = 10,
  DeviceFree = 11,
  // Fine-grained device-side operations
  BlockEnter = 32,
  BlockExit = 33,
  GlobalAccess = 34,
  SharedAccess = 35,
  Barrier = 36,
  FuncCall = 37,
  FuncReturn = 38,
  DeviceSideMalloc = 39,
  DeviceSideFree = 40,
  GlobalToSharedCopy = 41,
  PipelineCommit = 42,
  PipelineWait = 43,
  RemoteSharedAccess = 44,
  ClusterBarrier = 45,
  Instruction = 46,
  // DL framework events
  OperatorStart = 64,
  OperatorEnd = 65,
  TensorAlloc = 66,
  TensorReclaim = 67,
  RangeStart = 68,
  RangeEnd = 69,
};

inline constexpr std::array<EventKind, 32> kAllEventKinds = {
    EventKind::DriverCall,       EventKind::RuntimeCall,
    EventKind::Sync,             EventKind::KernelLaunch,
    EventKind::KernelComplete,   EventKind::MemCopy,
    EventKind::MemSet,           EventKind::ResourceOp,
    EventKind::BatchMemOp,       EventKind::DeviceMalloc,
    EventKind::DeviceFree,       EventKind::BlockEnter,
    EventKind::BlockExit,        EventKind::GlobalAccess,
    EventKind::SharedAccess,     EventKind::Barrier,
    EventKind::FuncCall,         EventKind::FuncReturn,
    EventKind::DeviceSideMalloc, EventKind::DeviceSideFree,
    EventKind::GlobalToSharedCopy, EventKind::PipelineCommit,
    EventKind::PipelineWait,     EventKind::RemoteSharedAccess,
    EventKind::ClusterBarrier,   EventKind::Instruction,
    EventKind::OperatorStart,    EventKind::OperatorEnd,
    EventKind::TensorAlloc,      EventKind::TensorReclaim,
    EventKind::RangeStart,       EventKind::RangeEnd,
};

Category category_of(EventKind kind);
std::string_view category_name(Category category);

// Stable snake_case names ("kernel_launch", "global_access", ...).
std::string_view kind_name(EventKind kind);
std::optional<EventKind> kind_from_name(std::string_view name);
std::optional<EventKind> kind_from_tag(uint16_t tag);

struct Dim3 {
  uint32_t x = 1;
  uint32_t y = 1;
  uint32_t z = 1;
  bool operator==(const Dim3&) const = default;
};

// Driver/runtime calls, syncs, memsets, resource and batch memory ops.
struct ApiCallInfo {
  std::string name;
  uint64_t arg = 0;
  bool operator==(const ApiCallInfo&) const = default;
};

struct KernelLaunchInfo {
  std::string kernel_name;
  uint64_t grid_id = 0;
  Dim3 grid_dims;
  Dim3 block_dims;
  uint32_t stream = 0;
  // Objects passed as kernel arguments. Real profiling interfaces do not
  // expose this; analyses must not rely on it.
  std::vector<uint64_t> arg_objects;
  bool operator==(const KernelLaunchInfo&) const = default;
};

struct KernelCompleteInfo {
  uint64_t grid_id = 0;
  bool operator==(const KernelCompleteInfo&) const = default;
};

enum class CopyDirection : uint8_t { HostToDevice, DeviceToHost, DeviceToDevice };

struct MemCopyInfo {
  uint64_t src_addr = 0;
  uint64_t dst_addr = 0;
  uint64_t size_bytes = 0;
  CopyDirection direction = CopyDirection::HostToDevice;
  bool operator==(const MemCopyInfo&) const = default;
};

enum class ObjectAction : uint8_t { Malloc, Free };

struct ObjectEventInfo {
  uint64_t object_id = 0;
  uint64_t address = 0;
  uint64_t size_bytes = 0;
  ObjectAction action = ObjectAction::Malloc;
  bool operator==(const ObjectEventInfo&) const = default;
};

enum class MemSpace : uint8_t { Global, Shared };

struct MemAccessInfo {
  uint64_t grid_id = 0;
  uint64_t address = 0;
  uint32_t size_bytes = 0;
  bool is_write = false;
  MemSpace space = MemSpace::Global;
  bool operator==(const MemAccessInfo&) const = default;
};

// Device-side operations without an address payload (block entry/exit,
// barriers, device function calls, pipeline ops, instructions).
struct DeviceOpInfo {
  uint64_t grid_id = 0;
  uint64_t value = 0;
  bool operator==(const DeviceOpInfo&) const = default;
};

struct OperatorInfo {
  uint64_t op_id = 0;
  std::string name;
  bool operator==(const OperatorInfo&) const = default;
};

enum class TensorAction : uint8_t { Alloc, Reclaim };

struct TensorEventInfo {
  uint64_t tensor_id = 0;
  uint64_t object_id = 0;
  uint64_t address = 0;
  uint64_t size_bytes = 0;
  TensorAction action = TensorAction::Alloc;
  bool operator==(const TensorEventInfo&) const = default;
};

struct RangeMarkerInfo {
  uint64_t range_id = 0;
  std::string label;
  bool operator==(const RangeMarkerInfo&) const = default;
};

using Payload = std::variant<ApiCallInfo, KernelLaunchInfo, KernelCompleteInfo,
                             MemCopyInfo, ObjectEventInfo, MemAccessInfo,
                             DeviceOpInfo, OperatorInfo, TensorEventInfo,
                             RangeMarkerInfo>;

// Variant index of the payload a kind must carry.
std::size_t expected_payload_index(EventKind kind);

// Python >= Framework >= Native along a cross-layer stack.
enum class FrameLevel : uint8_t { Native = 0, Framework = 1, Python = 2 };

std::string_view frame_level_name(FrameLevel level);
std::optional<FrameLevel> frame_level_from_name(std::string_view name);

struct Frame {
  FrameLevel level = FrameLevel::Native;
  std::string function;
  std::string file;
  uint32_t line = 0;
  bool operator==(const Frame&) const = default;
};

// Outermost frame first.
struct CallStack {
  std::vector<Frame> frames;
  bool operator==(const CallStack&) const = default;
};

struct Event {
  uint64_t seq = 0;
  uint32_t device = 0;
  uint64_t timestamp_ns = 0;
  EventKind kind = EventKind::RuntimeCall;
  Payload payload;
  std::shared_ptr<const CallStack> stack;

  Category category() const { return category_of(kind); }

  template <typename T>
  const T& as() const {
    return std::get<T>(payload);
  }
  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(&payload);
  }
};

// Stacks compare by value.
bool operator==(const Event& a, const Event& b);

// Grid id of kernel-scoped events: launches, completions and device ops.
std::optional<uint64_t> grid_of(const Event& event);

bool is_kernel_scoped(EventKind kind);
bool is_mem_access(EventKind kind);

}  // namespace accelprof

#endif  // ACCELPROF_EVENT_HPP
