/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "accelprof/validate.hpp"

#include <algorithm>
#include <iterator>
#include <limits>

namespace accelprof {

std::string_view violation_code_name(ViolationCode code) {
  switch (code) {
    case ViolationCode::SeqOrder: return "seq_order";
    case ViolationCode::TimestampOrder: return "timestamp_order";
    case ViolationCode::PayloadMismatch: return "payload_mismatch";
    case ViolationCode::GridIdGap: return "grid_id_gap";
    case ViolationCode::BadDims: return "bad_dims";
    case ViolationCode::UnknownGrid: return "unknown_grid";
    case ViolationCode::BadAccess: return "bad_access";
    case ViolationCode::BadCopy: return "bad_copy";
    case ViolationCode::BadObject: return "bad_object";
    case ViolationCode::ObjectOverlap: return "object_overlap";
    case ViolationCode::ObjectNotLive: return "object_not_live";
    case ViolationCode::BadTensor: return "bad_tensor";
    case ViolationCode::TensorNotLive: return "tensor_not_live";
    case ViolationCode::TensorOutsideObject: return "tensor_outside_object";
    case ViolationCode::RangeMismatch: return "range_mismatch";
    case ViolationCode::StackShape: return "stack_shape";
  }
  return "unknown";
}

namespace {

bool dims_ok(const Dim3& d) { return d.x >= 1 && d.y >= 1 && d.z >= 1; }

bool overflows(uint64_t address, uint64_t size) {
  return address > std::numeric_limits<uint64_t>::max() - size;
}

}  // namespace

std::size_t StreamValidator::feed(const Event& event, ValidationReport& out) {
  const std::size_t before = out.size();
  auto report = [&](ViolationCode code, std::string message) {
    out.push_back(Violation{event.seq, code, std::move(message)});
  };

  if (last_seq_ && event.seq <= *last_seq_) {
    report(ViolationCode::SeqOrder, "seq " + std::to_string(event.seq) +
                                        " does not follow " +
                                        std::to_string(*last_seq_));
  }
  last_seq_ = event.seq;

  DeviceState& dev = devices_[event.device];
  if (dev.last_timestamp && event.timestamp_ns < *dev.last_timestamp) {
    report(ViolationCode::TimestampOrder,
           "timestamp goes backwards on device " + std::to_string(event.device));
  }
  dev.last_timestamp = event.timestamp_ns;

  if (event.payload.index() != expected_payload_index(event.kind)) {
    report(ViolationCode::PayloadMismatch,
           std::string("payload does not match kind ") +
               std::string(kind_name(event.kind)));
  } else {
    check_payload(event, dev, out);
  }

  if (event.stack) {
    const auto& frames = event.stack->frames;
    for (std::size_t i = 1; i < frames.size(); ++i) {
      if (frames[i].level > frames[i - 1].level) {
        report(ViolationCode::StackShape,
               "call stack level increases at frame " + std::to_string(i));
        break;
      }
    }
  }
  return out.size() - before;
}

void StreamValidator::check_payload(const Event& event, DeviceState& dev,
                                    ValidationReport& out) {
  auto report = [&](ViolationCode code, std::string message) {
    out.push_back(Violation{event.seq, code, std::move(message)});
  };

  switch (event.kind) {
    case EventKind::KernelLaunch: {
      const auto& l = event.as<KernelLaunchInfo>();
      if (l.grid_id != dev.next_grid) {
        report(ViolationCode::GridIdGap,
               "grid_id gap: expected " + std::to_string(dev.next_grid) +
                   ", got " + std::to_string(l.grid_id));
      }
      dev.next_grid = std::max(dev.next_grid, l.grid_id + 1);
      if (!dims_ok(l.grid_dims) || !dims_ok(l.block_dims)) {
        report(ViolationCode::BadDims, "grid/block dims must be >= 1");
      }
      return;
    }
    case EventKind::MemCopy: {
      const auto& c = event.as<MemCopyInfo>();
      if (c.size_bytes == 0) report(ViolationCode::BadCopy, "copy of zero bytes");
      return;
    }
    case EventKind::DeviceMalloc: {
      const auto& o = event.as<ObjectEventInfo>();
      if (o.action != ObjectAction::Malloc) {
        report(ViolationCode::PayloadMismatch, "malloc event with free action");
      }
      if (o.size_bytes == 0 || overflows(o.address, o.size_bytes)) {
        report(ViolationCode::BadObject, "object size must be positive");
        return;
      }
      if (dev.object_base.count(o.object_id)) {
        report(ViolationCode::BadObject,
               "object " + std::to_string(o.object_id) + " already live");
        return;
      }
      auto next = dev.objects.lower_bound(o.address);
      bool overlap = false;
      if (next != dev.objects.end() && next->first < o.address + o.size_bytes) {
        overlap = true;
      }
      if (next != dev.objects.begin()) {
        auto prev = std::prev(next);
        if (prev->first + prev->second.size > o.address) overlap = true;
      }
      if (overlap) {
        report(ViolationCode::ObjectOverlap,
               "object " + std::to_string(o.object_id) +
                   " overlaps a live object");
        return;
      }
      dev.objects[o.address] = LiveObject{o.object_id, o.size_bytes};
      dev.object_base[o.object_id] = o.address;
      return;
    }
    case EventKind::DeviceFree: {
      const auto& o = event.as<ObjectEventInfo>();
      if (o.action != ObjectAction::Free) {
        report(ViolationCode::PayloadMismatch, "free event with malloc action");
      }
      auto it = dev.object_base.find(o.object_id);
      if (it == dev.object_base.end()) {
        report(ViolationCode::ObjectNotLive,
               "free of object " + std::to_string(o.object_id) +
                   " which is not live");
        return;
      }
      dev.objects.erase(it->second);
      dev.object_base.erase(it);
      return;
    }
    case EventKind::TensorAlloc: {
      const auto& t = event.as<TensorEventInfo>();
      if (t.action != TensorAction::Alloc) {
        report(ViolationCode::PayloadMismatch, "tensor alloc with reclaim action");
      }
      if (t.size_bytes == 0 || overflows(t.address, t.size_bytes)) {
        report(ViolationCode::BadTensor, "tensor size must be positive");
        return;
      }
      if (tensors_.count(t.tensor_id)) {
        report(ViolationCode::BadTensor,
               "tensor " + std::to_string(t.tensor_id) + " already live");
        return;
      }
      auto base = dev.object_base.find(t.object_id);
      if (base == dev.object_base.end()) {
        report(ViolationCode::TensorOutsideObject,
               "tensor " + std::to_string(t.tensor_id) +
                   " references object " + std::to_string(t.object_id) +
                   " which is not live");
      } else {
        const auto& obj = dev.objects.at(base->second);
        if (t.address < base->second ||
            t.address + t.size_bytes > base->second + obj.size) {
          report(ViolationCode::TensorOutsideObject,
                 "tensor " + std::to_string(t.tensor_id) +
                     " lies outside its object");
        }
      }
      tensors_[t.tensor_id] =
          LiveTensor{event.device, t.object_id, t.address, t.size_bytes};
      return;
    }
    case EventKind::TensorReclaim: {
      const auto& t = event.as<TensorEventInfo>();
      if (t.action != TensorAction::Reclaim) {
        report(ViolationCode::PayloadMismatch, "tensor reclaim with alloc action");
      }
      if (t.size_bytes == 0) {
        report(ViolationCode::BadTensor, "tensor size must be positive");
      }
      auto it = tensors_.find(t.tensor_id);
      if (it == tensors_.end() || it->second.device != event.device) {
        report(ViolationCode::TensorNotLive,
               "reclaim of tensor " + std::to_string(t.tensor_id) +
                   " without a prior alloc");
        return;
      }
      tensors_.erase(it);
      return;
    }
    case EventKind::RangeStart: {
      dev.open_ranges.push_back(event.as<RangeMarkerInfo>());
      return;
    }
    case EventKind::RangeEnd: {
      const auto& r = event.as<RangeMarkerInfo>();
      if (dev.open_ranges.empty() || dev.open_ranges.back().range_id != r.range_id) {
        report(ViolationCode::RangeMismatch,
               "range end " + std::to_string(r.range_id) +
                   " does not close the innermost open range");
        for (auto it = dev.open_ranges.begin(); it != dev.open_ranges.end(); ++it) {
          if (it->range_id == r.range_id) {
            dev.open_ranges.erase(it);
            break;
          }
        }
        return;
      }
      dev.open_ranges.pop_back();
      return;
    }
    default:
      break;
  }

  if (auto grid = grid_of(event); grid && event.kind != EventKind::KernelLaunch) {
    if (*grid >= dev.next_grid) {
      report(ViolationCode::UnknownGrid,
             "grid_id " + std::to_string(*grid) +
                 " has no earlier launch on device " +
                 std::to_string(event.device));
    }
  }
  if (const auto* a = event.get_if<MemAccessInfo>()) {
    if (a->size_bytes == 0 || a->size_bytes > 128 ||
        overflows(a->address, a->size_bytes)) {
      report(ViolationCode::BadAccess,
             "access size must be in [1, 128] and not overflow");
    }
  }
}

ValidationReport validate_stream(std::span<const Event> events) {
  ValidationReport report;
  StreamValidator validator;
  for (const auto& e : events) validator.feed(e, report);
  return report;
}

}  // namespace accelprof
