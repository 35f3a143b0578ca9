/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACCELPROF_OBJECT_TABLE_HPP
#define ACCELPROF_OBJECT_TABLE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>

#include "accelprof/event.hpp"

namespace accelprof {

struct ObjectRef {
  uint64_t object_id = 0;
  uint64_t address = 0;
  uint64_t size_bytes = 0;
  bool operator==(const ObjectRef&) const = default;
};

struct TensorRef {
  uint64_t tensor_id = 0;
  uint64_t address = 0;
  uint64_t size_bytes = 0;
  bool operator==(const TensorRef&) const = default;
};

// Live objects and tensors per device, keyed by base address. Lookups are
// const and safe to run concurrently while no event mutates the table.
class LiveObjectTable {
 public:
  void apply_before(const Event& event);  // mallocs and tensor allocs
  void apply_after(const Event& event);   // frees and reclaims

  std::optional<ObjectRef> find_object(uint32_t device, uint64_t address) const;
  std::optional<TensorRef> find_tensor(uint32_t device, uint64_t address) const;
  std::optional<ObjectRef> object_by_id(uint32_t device, uint64_t object_id) const;

  std::size_t live_objects() const;

 private:
  struct Device {
    std::map<uint64_t, ObjectRef> objects;
    std::map<uint64_t, TensorRef> tensors;
    std::unordered_map<uint64_t, uint64_t> object_base;
  };
  std::map<uint32_t, Device> devices_;
};

}  // namespace accelprof

#endif  // ACCELPROF_OBJECT_TABLE_HPP
