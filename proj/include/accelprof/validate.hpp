/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACCELPROF_VALIDATE_HPP
#define ACCELPROF_VALIDATE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "accelprof/event.hpp"

namespace accelprof {

enum class ViolationCode {
  SeqOrder,
  TimestampOrder,
  PayloadMismatch,
  GridIdGap,
  BadDims,
  UnknownGrid,
  BadAccess,
  BadCopy,
  BadObject,
  ObjectOverlap,
  ObjectNotLive,
  BadTensor,
  TensorNotLive,
  TensorOutsideObject,
  RangeMismatch,
  StackShape,
};

std::string_view violation_code_name(ViolationCode code);

struct Violation {
  uint64_t seq = 0;
  ViolationCode code = ViolationCode::SeqOrder;
  std::string message;
};

using ValidationReport = std::vector<Violation>;

// Incremental checker; feed events in stream order. Used by validate_stream
// and by the trace reader, which checks each record as it is decoded.
class StreamValidator {
 public:
  // Appends violations for `event` to `out`; returns the number appended.
  std::size_t feed(const Event& event, ValidationReport& out);

 private:
  struct LiveObject {
    uint64_t object_id;
    uint64_t size;
  };
  struct LiveTensor {
    uint32_t device;
    uint64_t object_id;
    uint64_t address;
    uint64_t size;
  };
  struct DeviceState {
    std::optional<uint64_t> last_timestamp;
    uint64_t next_grid = 0;
    std::map<uint64_t, LiveObject> objects;  // base address -> object
    std::unordered_map<uint64_t, uint64_t> object_base;  // id -> base
    std::vector<RangeMarkerInfo> open_ranges;
  };

  void check_payload(const Event& event, DeviceState& dev, ValidationReport& out);

  std::optional<uint64_t> last_seq_;
  std::map<uint32_t, DeviceState> devices_;
  std::unordered_map<uint64_t, LiveTensor> tensors_;
};

ValidationReport validate_stream(std::span<const Event> events);

}  // namespace accelprof

#endif  // ACCELPROF_VALIDATE_HPP
