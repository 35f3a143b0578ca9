/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "accelprof/object_table.hpp"

#include <iterator>

namespace accelprof {

namespace {

template <typename Map>
auto containing(const Map& m, uint64_t address) -> const typename Map::mapped_type* {
  auto it = m.upper_bound(address);
  if (it == m.begin()) return nullptr;
  --it;
  const auto& ref = it->second;
  return address - ref.address < ref.size_bytes ? &ref : nullptr;
}

}  // namespace

void LiveObjectTable::apply_before(const Event& event) {
  if (event.kind == EventKind::DeviceMalloc) {
    const auto& o = event.as<ObjectEventInfo>();
    auto& dev = devices_[event.device];
    dev.objects[o.address] = ObjectRef{o.object_id, o.address, o.size_bytes};
    dev.object_base[o.object_id] = o.address;
  } else if (event.kind == EventKind::TensorAlloc) {
    const auto& t = event.as<TensorEventInfo>();
    devices_[event.device].tensors[t.address] = TensorRef{t.tensor_id, t.address, t.size_bytes};
  }
}

void LiveObjectTable::apply_after(const Event& event) {
  if (event.kind == EventKind::DeviceFree) {
    const auto& o = event.as<ObjectEventInfo>();
    auto& dev = devices_[event.device];
    if (auto it = dev.object_base.find(o.object_id); it != dev.object_base.end()) {
      dev.objects.erase(it->second);
      dev.object_base.erase(it);
    }
  } else if (event.kind == EventKind::TensorReclaim) {
    const auto& t = event.as<TensorEventInfo>();
    auto& tensors = devices_[event.device].tensors;
    if (auto it = tensors.find(t.address); it != tensors.end() && it->second.tensor_id == t.tensor_id) {
      tensors.erase(it);
    }
  }
}

std::optional<ObjectRef> LiveObjectTable::find_object(uint32_t device, uint64_t address) const {
  auto dev = devices_.find(device);
  if (dev == devices_.end()) return std::nullopt;
  if (const auto* ref = containing(dev->second.objects, address)) return *ref;
  return std::nullopt;
}

std::optional<TensorRef> LiveObjectTable::find_tensor(uint32_t device, uint64_t address) const {
  auto dev = devices_.find(device);
  if (dev == devices_.end()) return std::nullopt;
  if (const auto* ref = containing(dev->second.tensors, address)) return *ref;
  return std::nullopt;
}

std::optional<ObjectRef> LiveObjectTable::object_by_id(uint32_t device, uint64_t object_id) const {
  auto dev = devices_.find(device);
  if (dev == devices_.end()) return std::nullopt;
  auto it = dev->second.object_base.find(object_id);
  if (it == dev->second.object_base.end()) return std::nullopt;
  return dev->second.objects.at(it->second);
}

std::size_t LiveObjectTable::live_objects() const {
  std::size_t n = 0;
  for (const auto& [d, dev] : devices_) n += dev.objects.size();
  return n;
}

}  // namespace accelprof
