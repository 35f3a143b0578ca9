/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "accelprof/report.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "accelprof/error.hpp"

namespace accelprof {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string scalar(const Report& v) {
  if (v.is_string()) return csv_field(v.get<std::string>());
  if (v.is_null()) return "";
  return v.dump();
}

template <typename... Fields>
void row(std::ostringstream& out, const Fields&... fields) {
  bool first = true;
  ((out << (first ? "" : ",") << fields, first = false), ...);
  out << '\n';
}

}  // namespace

std::optional<ReportFormat> report_format_from_name(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  return std::nullopt;
}

std::string report_to_json(const Report& report) { return report.dump(2) + "\n"; }

std::string report_to_csv(const Report& report) {
  const std::string tool = report.value("tool", "");
  std::ostringstream out;
  if (tool == "kernel-freq") {
    row(out, "kernel", "count");
    for (const auto& [name, n] : report.at("counts").items()) row(out, csv_field(name), scalar(n));
  } else if (tool == "memchar") {
    row(out, "device", "grid_id", "kernel", "footprint_bytes", "tensor_footprint_bytes");
    for (const auto& k : report.at("per_kernel")) {
      row(out, scalar(k["device"]), scalar(k["grid_id"]), scalar(k["kernel"]),
          scalar(k["footprint_bytes"]), scalar(k["tensor_footprint_bytes"]));
    }
  } else if (tool == "hotness") {
    row(out, "window", "block", "base_address", "count");
    const auto& blocks = report.at("blocks");
    const auto& matrix = report.at("matrix");
    for (std::size_t w = 0; w < matrix.size(); ++w) {
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        row(out, w, scalar(blocks[b]["block"]), scalar(blocks[b]["base_address"]),
            scalar(matrix[w][b]));
      }
    }
  } else if (tool == "mem-timeline") {
    row(out, "series", "timestamp_ns", "bytes");
    for (const auto& d : report.at("devices")) {
      const std::string series = "device:" + scalar(d["device"]);
      for (const auto& p : d["points"]) row(out, series, scalar(p[0]), scalar(p[1]));
    }
    if (report.contains("difference")) {
      for (const auto& p : report["difference"]) row(out, "difference", scalar(p[0]), scalar(p[1]));
    }
  } else if (tool == "attribution") {
    row(out, "knob", "kernel", "value", "stack");
    for (const auto& w : report.at("winners")) {
      std::string frames;
      for (const auto& f : w["stack"]) {
        if (!frames.empty()) frames += ';';
        frames += f["function"].get<std::string>();
      }
      row(out, scalar(w["knob"]), scalar(w["kernel"]), scalar(w["value"]), csv_field(frames));
    }
  } else if (tool == "uvm-profile") {
    row(out, "device", "grid_id", "kernel", "object_bytes", "tensor_bytes");
    for (const auto& k : report.at("kernels")) {
      row(out, scalar(k["device"]), scalar(k["grid_id"]), scalar(k["kernel"]),
          scalar(k["object_bytes"]), scalar(k["tensor_bytes"]));
    }
  } else if (tool == "sim-uvm") {
    row(out, "policy", "total_time_ns", "faults", "demand_migrated_bytes", "prefetched_bytes",
        "prefetch_ops", "evictions", "normalized_time");
    for (const auto& r : report.at("results")) {
      row(out, scalar(r["policy"]), scalar(r["total_time_ns"]), scalar(r["faults"]),
          scalar(r["demand_migrated_bytes"]), scalar(r["prefetched_bytes"]),
          scalar(r["prefetch_ops"]), scalar(r["evictions"]), scalar(r["normalized_time"]));
    }
  } else {
    throw Error(ErrorCode::InvalidArgument, "no CSV form for report '" + tool + "'");
  }
  return out.str();
}

std::string render_report(const Report& report, ReportFormat format) {
  return format == ReportFormat::Json ? report_to_json(report) : report_to_csv(report);
}

void emit_report(const Report& report, ReportFormat format, const std::filesystem::path& path) {
  const std::string text = render_report(report, format);
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace accelprof
