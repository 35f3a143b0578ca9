/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACCELPROF_SRC_TOOLS_BUILTIN_HPP
#define ACCELPROF_SRC_TOOLS_BUILTIN_HPP

#include <memory>

#include "accelprof/tool.hpp"

namespace accelprof::tools {

const ToolDescriptor& kernel_freq_descriptor();
const ToolDescriptor& memchar_descriptor();
const ToolDescriptor& hotness_descriptor();
const ToolDescriptor& mem_timeline_descriptor();
const ToolDescriptor& attribution_descriptor();
const ToolDescriptor& uvm_profile_descriptor();

std::unique_ptr<Tool> make_kernel_freq(const ToolOptions& options);
std::unique_ptr<Tool> make_memchar(const ToolOptions& options);
std::unique_ptr<Tool> make_hotness(const ToolOptions& options);
std::unique_ptr<Tool> make_mem_timeline(const ToolOptions& options);
std::unique_ptr<Tool> make_attribution(const ToolOptions& options);
std::unique_ptr<Tool> make_uvm_profile(const ToolOptions& options);

Report stack_json(const CallStack* stack);

}  // namespace accelprof::tools

#endif  // ACCELPROF_SRC_TOOLS_BUILTIN_HPP
