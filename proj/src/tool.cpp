/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "accelprof/tool.hpp"

#include <cstdlib>

#include "accelprof/error.hpp"

namespace accelprof {

namespace {

std::string joined(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

std::string scope_text(const KernelScope& s) {
  return "device " + std::to_string(s.device) + " grid " + std::to_string(s.grid_id);
}

}  // namespace

AccessCountMap merge_count_maps(const AccessCountMap& a, const AccessCountMap& b) {
  if (a.scope != b.scope) {
    throw Error(ErrorCode::ScopeMismatch,
                "cannot merge counts of " + scope_text(a.scope) + " and " + scope_text(b.scope));
  }
  AccessCountMap out = a;
  for (const auto& [object, n] : b.counts) out.counts[object] += n;
  return out;
}

Knobs::Knobs() {
  declare(kMaxMemReferencedKernel);
  declare(kMaxCalledKernel);
}

void Knobs::declare(std::string_view name) { knobs_.try_emplace(std::string(name), false); }

void Knobs::enable(std::string_view name) {
  auto it = knobs_.find(name);
  if (it == knobs_.end()) {
    throw Error(ErrorCode::UnknownKnob,
                "unknown knob '" + std::string(name) + "'; known knobs: " + joined(known_names()));
  }
  it->second = true;
}

bool Knobs::enabled(std::string_view name) const {
  auto it = knobs_.find(name);
  return it != knobs_.end() && it->second;
}

std::vector<std::string> Knobs::enabled_names() const {
  std::vector<std::string> out;
  for (const auto& [name, on] : knobs_) {
    if (on) out.push_back(name);
  }
  return out;
}

std::vector<std::string> Knobs::known_names() const {
  std::vector<std::string> out;
  for (const auto& [name, on] : knobs_) out.push_back(name);
  return out;
}

bool Knobs::any() const {
  for (const auto& [name, on] : knobs_) {
    if (on) return true;
  }
  return false;
}

void Knobs::enable_list(std::string_view csv) {
  while (!csv.empty()) {
    auto comma = csv.find(',');
    auto item = csv.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) enable(item);
    if (comma == std::string_view::npos) break;
    csv.remove_prefix(comma + 1);
  }
}

void dispatch(Tool& tool, const DispatchRecord& record) {
  const Event& e = *record.event;
  switch (e.kind) {
    case EventKind::KernelLaunch: tool.on_kernel_launch(record); return;
    case EventKind::KernelComplete: tool.on_kernel_complete(record); return;
    case EventKind::MemCopy: tool.on_mem_copy(record); return;
    case EventKind::DeviceMalloc:
    case EventKind::DeviceFree: tool.on_object_event(record); return;
    case EventKind::TensorAlloc:
    case EventKind::TensorReclaim: tool.on_tensor_event(record); return;
    case EventKind::OperatorStart:
    case EventKind::OperatorEnd: tool.on_op_boundary(record); return;
    case EventKind::RangeStart:
    case EventKind::RangeEnd: tool.on_range(record); return;
    default: break;
  }
  if (is_mem_access(e.kind)) {
    tool.on_mem_access(record);
  } else if (e.category() == Category::DeviceOp) {
    tool.on_device_op(record);
  } else {
    tool.on_host_call(record);
  }
}

void ToolRegistry::register_tool(ToolDescriptor descriptor, ToolFactory factory) {
  if (entries_.contains(descriptor.name)) {
    throw Error(ErrorCode::DuplicateName, "tool '" + descriptor.name + "' is already registered");
  }
  std::string name = descriptor.name;
  entries_.emplace(std::move(name), Entry{std::move(descriptor), std::move(factory)});
}

bool ToolRegistry::contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }

const ToolDescriptor& ToolRegistry::descriptor(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw Error(ErrorCode::UnknownTool, "unknown tool '" + std::string(name) +
                                            "'; registered tools: " + joined(names()));
  }
  return it->second.descriptor;
}

std::unique_ptr<Tool> ToolRegistry::create(std::string_view name, const ToolOptions& options) const {
  descriptor(name);
  return entries_.find(name)->second.factory(options);
}

std::vector<std::string> ToolRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, entry] : entries_) out.push_back(name);
  return out;
}

const ToolRegistry& builtin_registry() {
  static const ToolRegistry registry = [] {
    ToolRegistry r;
    register_builtin_tools(r);
    return r;
  }();
  return registry;
}

EnvLookup process_env() {
  return [](std::string_view name) -> std::optional<std::string> {
    const char* v = std::getenv(std::string(name).c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

const ToolDescriptor& select_tool(const ToolRegistry& registry,
                                  const std::optional<std::string>& cli_flag,
                                  const EnvLookup& env) {
  if (cli_flag) return registry.descriptor(*cli_flag);
  if (env) {
    if (auto from_env = env("PASTA_TOOL"); from_env && !from_env->empty()) {
      return registry.descriptor(*from_env);
    }
  }
  throw Error(ErrorCode::NoToolSpecified,
              "no tool selected; pass --tool or set PASTA_TOOL (registered tools: " +
                  joined(registry.names()) + ")");
}

}  // namespace accelprof
