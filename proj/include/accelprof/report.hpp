/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACCELPROF_REPORT_HPP
#define ACCELPROF_REPORT_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "accelprof/tool.hpp"

namespace accelprof {

enum class ReportFormat { Json, Csv };

std::optional<ReportFormat> report_format_from_name(std::string_view name);

// Two-space indented JSON with a trailing newline; key order is stable.
std::string report_to_json(const Report& report);

// Plot-ready CSV keyed on the report's "tool" field:
//   kernel-freq   kernel,count
//   memchar       device,grid_id,kernel,footprint_bytes,tensor_footprint_bytes
//   hotness       window,block,base_address,count   (dense, every cell)
//   mem-timeline  series,timestamp_ns,bytes          (series: device:<n> or difference)
//   attribution   knob,kernel,value,stack            (stack: frames joined by ';')
//   uvm-profile   device,grid_id,kernel,object_bytes,tensor_bytes
//   sim-uvm       policy,total_time_ns,faults,demand_migrated_bytes,prefetched_bytes,
//                 prefetch_ops,evictions,normalized_time
// Throws InvalidArgument for reports without a CSV form.
std::string report_to_csv(const Report& report);

std::string render_report(const Report& report, ReportFormat format);

// Writes to `path`, or stdout when empty. Throws IoError.
void emit_report(const Report& report, ReportFormat format, const std::filesystem::path& path);

}  // namespace accelprof

#endif  // ACCELPROF_REPORT_HPP
