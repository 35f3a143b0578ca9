/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "accelprof/error.hpp"
#include "accelprof/trace_io.hpp"

namespace accelprof {

namespace {

using json = nlohmann::ordered_json;

std::string_view direction_name(CopyDirection d) {
  switch (d) {
    case CopyDirection::HostToDevice: return "h2d";
    case CopyDirection::DeviceToHost: return "d2h";
    case CopyDirection::DeviceToDevice: return "d2d";
  }
  return "h2d";
}

CopyDirection direction_from(const std::string& s) {
  if (s == "h2d") return CopyDirection::HostToDevice;
  if (s == "d2h") return CopyDirection::DeviceToHost;
  if (s == "d2d") return CopyDirection::DeviceToDevice;
  throw std::invalid_argument("unknown copy direction '" + s + "'");
}

json dims_json(const Dim3& d) { return json::array({d.x, d.y, d.z}); }

Dim3 dims_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("dims must be [x,y,z]");
  return Dim3{j[0].get<uint32_t>(), j[1].get<uint32_t>(), j[2].get<uint32_t>()};
}

json event_json(const Event& e) {
  json j;
  j["seq"] = e.seq;
  j["device"] = e.device;
  j["timestamp_ns"] = e.timestamp_ns;
  j["kind"] = std::string(kind_name(e.kind));
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ApiCallInfo>) {
          j["name"] = p.name;
          j["arg"] = p.arg;
        } else if constexpr (std::is_same_v<T, KernelLaunchInfo>) {
          j["kernel_name"] = p.kernel_name;
          j["grid_id"] = p.grid_id;
          j["grid_dims"] = dims_json(p.grid_dims);
          j["block_dims"] = dims_json(p.block_dims);
          j["stream"] = p.stream;
          j["arg_objects"] = p.arg_objects;
        } else if constexpr (std::is_same_v<T, KernelCompleteInfo>) {
          j["grid_id"] = p.grid_id;
        } else if constexpr (std::is_same_v<T, MemCopyInfo>) {
          j["src_addr"] = p.src_addr;
          j["dst_addr"] = p.dst_addr;
          j["size_bytes"] = p.size_bytes;
          j["direction"] = std::string(direction_name(p.direction));
        } else if constexpr (std::is_same_v<T, ObjectEventInfo>) {
          j["object_id"] = p.object_id;
          j["address"] = p.address;
          j["size_bytes"] = p.size_bytes;
        } else if constexpr (std::is_same_v<T, MemAccessInfo>) {
          j["grid_id"] = p.grid_id;
          j["address"] = p.address;
          j["size_bytes"] = p.size_bytes;
          j["is_write"] = p.is_write;
          j["space"] = p.space == MemSpace::Global ? "global" : "shared";
        } else if constexpr (std::is_same_v<T, DeviceOpInfo>) {
          j["grid_id"] = p.grid_id;
          j["value"] = p.value;
        } else if constexpr (std::is_same_v<T, OperatorInfo>) {
          j["op_id"] = p.op_id;
          j["name"] = p.name;
        } else if constexpr (std::is_same_v<T, TensorEventInfo>) {
          j["tensor_id"] = p.tensor_id;
          j["object_id"] = p.object_id;
          j["address"] = p.address;
          j["size_bytes"] = p.size_bytes;
        } else if constexpr (std::is_same_v<T, RangeMarkerInfo>) {
          j["range_id"] = p.range_id;
          j["label"] = p.label;
        }
      },
      e.payload);
  if (e.stack) {
    json frames = json::array();
    for (const auto& f : e.stack->frames) {
      frames.push_back(json{{"level", std::string(frame_level_name(f.level))},
                            {"function", f.function},
                            {"file", f.file},
                            {"line", f.line}});
    }
    j["stack"] = std::move(frames);
  }
  return j;
}

Event event_from(const json& j) {
  Event e;
  e.seq = j.at("seq").get<uint64_t>();
  e.device = j.at("device").get<uint32_t>();
  e.timestamp_ns = j.at("timestamp_ns").get<uint64_t>();
  auto kind = kind_from_name(j.at("kind").get<std::string>());
  if (!kind) throw std::invalid_argument("unknown kind");
  e.kind = *kind;
  switch (expected_payload_index(e.kind)) {
    case 0:
      e.payload = ApiCallInfo{j.at("name").get<std::string>(), j.at("arg").get<uint64_t>()};
      break;
    case 1: {
      KernelLaunchInfo p;
      p.kernel_name = j.at("kernel_name").get<std::string>();
      p.grid_id = j.at("grid_id").get<uint64_t>();
      p.grid_dims = dims_from(j.at("grid_dims"));
      p.block_dims = dims_from(j.at("block_dims"));
      p.stream = j.at("stream").get<uint32_t>();
      p.arg_objects = j.at("arg_objects").get<std::vector<uint64_t>>();
      e.payload = std::move(p);
      break;
    }
    case 2:
      e.payload = KernelCompleteInfo{j.at("grid_id").get<uint64_t>()};
      break;
    case 3:
      e.payload = MemCopyInfo{j.at("src_addr").get<uint64_t>(), j.at("dst_addr").get<uint64_t>(),
                              j.at("size_bytes").get<uint64_t>(),
                              direction_from(j.at("direction").get<std::string>())};
      break;
    case 4:
      e.payload = ObjectEventInfo{
          j.at("object_id").get<uint64_t>(), j.at("address").get<uint64_t>(),
          j.at("size_bytes").get<uint64_t>(),
          e.kind == EventKind::DeviceMalloc ? ObjectAction::Malloc : ObjectAction::Free};
      break;
    case 5: {
      MemAccessInfo p;
      p.grid_id = j.at("grid_id").get<uint64_t>();
      p.address = j.at("address").get<uint64_t>();
      p.size_bytes = j.at("size_bytes").get<uint32_t>();
      p.is_write = j.at("is_write").get<bool>();
      auto space = j.at("space").get<std::string>();
      if (space != "global" && space != "shared") throw std::invalid_argument("bad space");
      p.space = space == "global" ? MemSpace::Global : MemSpace::Shared;
      e.payload = p;
      break;
    }
    case 6:
      e.payload = DeviceOpInfo{j.at("grid_id").get<uint64_t>(), j.at("value").get<uint64_t>()};
      break;
    case 7:
      e.payload = OperatorInfo{j.at("op_id").get<uint64_t>(), j.at("name").get<std::string>()};
      break;
    case 8:
      e.payload = TensorEventInfo{
          j.at("tensor_id").get<uint64_t>(), j.at("object_id").get<uint64_t>(),
          j.at("address").get<uint64_t>(), j.at("size_bytes").get<uint64_t>(),
          e.kind == EventKind::TensorAlloc ? TensorAction::Alloc : TensorAction::Reclaim};
      break;
    default:
      e.payload = RangeMarkerInfo{j.at("range_id").get<uint64_t>(),
                                  j.at("label").get<std::string>()};
      break;
  }
  if (auto it = j.find("stack"); it != j.end()) {
    CallStack stack;
    for (const auto& f : *it) {
      auto level = frame_level_from_name(f.at("level").get<std::string>());
      if (!level) throw std::invalid_argument("bad frame level");
      stack.frames.push_back(Frame{*level, f.at("function").get<std::string>(),
                                   f.at("file").get<std::string>(),
                                   f.at("line").get<uint32_t>()});
    }
    e.stack = std::make_shared<const CallStack>(std::move(stack));
  }
  return e;
}

}  // namespace

void to_jsonl(std::span<const Event> events, std::ostream& out) {
  for (const auto& e : events) out << event_json(e).dump() << '\n';
}

std::string to_jsonl(std::span<const Event> events) {
  std::ostringstream out;
  to_jsonl(events, out);
  return out.str();
}

std::vector<Event> from_jsonl(std::istream& in) {
  std::vector<Event> events;
  std::string line;
  uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      events.push_back(event_from(json::parse(line)));
    } catch (const std::exception& ex) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": " + ex.what())
          .with_line(line_no);
    }
  }
  return events;
}

std::vector<Event> from_jsonl(const std::string& text) {
  std::istringstream in(text);
  return from_jsonl(in);
}

}  // namespace accelprof
