/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "tools/builtin.hpp"

namespace accelprof {

void register_builtin_tools(ToolRegistry& registry) {
  registry.register_tool(tools::kernel_freq_descriptor(), tools::make_kernel_freq);
  registry.register_tool(tools::memchar_descriptor(), tools::make_memchar);
  registry.register_tool(tools::hotness_descriptor(), tools::make_hotness);
  registry.register_tool(tools::mem_timeline_descriptor(), tools::make_mem_timeline);
  registry.register_tool(tools::attribution_descriptor(), tools::make_attribution);
  registry.register_tool(tools::uvm_profile_descriptor(), tools::make_uvm_profile);
}

namespace tools {

Report stack_json(const CallStack* stack) {
  Report frames = Report::array();
  if (!stack) return frames;
  for (const auto& f : stack->frames) {
    frames.push_back(Report{{"level", std::string(frame_level_name(f.level))},
                            {"function", f.function},
                            {"file", f.file},
                            {"line", f.line}});
  }
  return frames;
}

}  // namespace tools
}  // namespace accelprof
