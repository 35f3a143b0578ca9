/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACCELPROF_TOOL_HPP
#define ACCELPROF_TOOL_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "accelprof/event.hpp"
#include "accelprof/object_table.hpp"

namespace accelprof {

using Report = nlohmann::ordered_json;

// One preprocessed event as handed to a tool.
struct DispatchRecord {
  const Event* event = nullptr;
  // Global accesses and object lifecycle events.
  std::optional<ObjectRef> object;
  // Global accesses landing inside a live tensor.
  std::optional<TensorRef> tensor;
  // A global access that no live object contains.
  bool unattributed = false;
};

struct ToolDescriptor {
  std::string name;
  std::string summary;
  bool needs_device_ops = false;
  bool mergeable = false;
};

// Kernel execution scope for per-kernel state: (device, grid id).
struct KernelScope {
  uint32_t device = 0;
  uint64_t grid_id = 0;
  auto operator<=>(const KernelScope&) const = default;
};

struct AccessCountMap {
  KernelScope scope;
  std::map<uint64_t, uint64_t> counts;  // object id -> accesses
  bool operator==(const AccessCountMap&) const = default;
};

// Pointwise sum. Throws ScopeMismatch unless both maps share a scope.
AccessCountMap merge_count_maps(const AccessCountMap& a, const AccessCountMap& b);

inline constexpr std::string_view kMaxMemReferencedKernel = "MAX_MEM_REFERENCED_KERNEL";
inline constexpr std::string_view kMaxCalledKernel = "MAX_CALLED_KERNEL";

class Knobs {
 public:
  Knobs();

  // Adds a knob name that enable() will accept.
  void declare(std::string_view name);
  // Throws UnknownKnob naming the known knobs.
  void enable(std::string_view name);
  bool enabled(std::string_view name) const;
  std::vector<std::string> enabled_names() const;
  std::vector<std::string> known_names() const;
  bool any() const;

  // Comma-separated list, e.g. "MAX_CALLED_KERNEL,MAX_MEM_REFERENCED_KERNEL".
  void enable_list(std::string_view csv);

 private:
  std::map<std::string, bool, std::less<>> knobs_;
};

struct ToolOptions {
  uint32_t top_k = 20;
  uint64_t window_ns = 1'000'000;
  uint64_t block_size = 2 * 1024 * 1024;
  std::optional<std::pair<uint32_t, uint32_t>> device_pair;
  Knobs knobs;
};

// Tool callback template. Device-op callbacks (on_mem_access,
// on_device_op) may run on per-worker forks in the parallel engine; every
// other callback is delivered in seq order on the tool itself.
class Tool {
 public:
  virtual ~Tool() = default;

  virtual const ToolDescriptor& descriptor() const = 0;

  virtual void on_kernel_launch(const DispatchRecord&) {}
  virtual void on_kernel_complete(const DispatchRecord&) {}
  virtual void on_mem_access(const DispatchRecord&) {}
  virtual void on_device_op(const DispatchRecord&) {}
  virtual void on_tensor_event(const DispatchRecord&) {}
  virtual void on_object_event(const DispatchRecord&) {}
  virtual void on_mem_copy(const DispatchRecord&) {}
  virtual void on_op_boundary(const DispatchRecord&) {}
  virtual void on_range(const DispatchRecord&) {}
  virtual void on_host_call(const DispatchRecord&) {}

  virtual Report on_finalize() = 0;

  // Mergeable tools: an empty partial-state tool for one worker, and the
  // associative, commutative fold of a partial back into this tool. merge
  // leaves the partial empty.
  virtual std::unique_ptr<Tool> fork() const { return nullptr; }
  virtual void merge(Tool& /*partial*/) {}
};

// Routes a record to the callback for its event kind.
void dispatch(Tool& tool, const DispatchRecord& record);

using ToolFactory = std::function<std::unique_ptr<Tool>(const ToolOptions&)>;

class ToolRegistry {
 public:
  // Throws DuplicateName.
  void register_tool(ToolDescriptor descriptor, ToolFactory factory);

  bool contains(std::string_view name) const;
  // Throws UnknownTool listing the registered names.
  const ToolDescriptor& descriptor(std::string_view name) const;
  std::unique_ptr<Tool> create(std::string_view name, const ToolOptions& options) const;
  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    ToolDescriptor descriptor;
    ToolFactory factory;
  };
  std::map<std::string, Entry, std::less<>> entries_;
};

// The six built-in tools, registered once.
const ToolRegistry& builtin_registry();
void register_builtin_tools(ToolRegistry& registry);

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;
EnvLookup process_env();

// Flag wins over PASTA_TOOL. Throws UnknownTool or NoToolSpecified.
const ToolDescriptor& select_tool(const ToolRegistry& registry,
                                  const std::optional<std::string>& cli_flag,
                                  const EnvLookup& env);

}  // namespace accelprof

#endif  // ACCELPROF_TOOL_HPP
