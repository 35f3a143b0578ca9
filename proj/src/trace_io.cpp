/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "accelprof/trace_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "accelprof/error.hpp"

namespace accelprof {

namespace {

constexpr char kMagic[4] = {'P', 'S', 'T', 'A'};
constexpr uint32_t kMaxRecordBytes = 1u << 26;

// Dialect-specific kind tags. The unified dialect uses EventKind values.
constexpr uint16_t kNvxBase = 0x1000;
constexpr uint16_t kNvxTensor = 0x1100;
constexpr uint16_t kNvxObject = 0x1101;
constexpr uint16_t kRmxBase = 0x2000;
constexpr uint16_t kRmxTensor = 0x2100;
constexpr uint16_t kRmxObject = 0x2101;

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<uint8_t>& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    static_assert(std::is_integral_v<T>);
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<uint8_t>(u >> (8 * i)));
    }
  }
  void str(const std::string& s) {
    put<uint32_t>(static_cast<uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void dims(const Dim3& d) {
    put(d.x);
    put(d.y);
    put(d.z);
  }
  std::size_t size() const { return out_.size(); }
  void patch_u32(std::size_t at, uint32_t value) {
    for (std::size_t i = 0; i < 4; ++i) out_[at + i] = static_cast<uint8_t>(value >> (8 * i));
  }

 private:
  std::vector<uint8_t>& out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const uint8_t> bytes, uint64_t base_offset)
      : bytes_(bytes), base_offset_(base_offset) {}

  template <typename T>
  T get() {
    static_assert(std::is_integral_v<T>);
    need(sizeof(T));
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  std::string str() {
    auto n = get<uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  Dim3 dims() {
    Dim3 d;
    d.x = get<uint32_t>();
    d.y = get<uint32_t>();
    d.z = get<uint32_t>();
    return d;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::CorruptRecord, "record payload shorter than its fields")
          .with_byte_offset(base_offset_ + pos_);
    }
  }

  std::span<const uint8_t> bytes_;
  uint64_t base_offset_;
  std::size_t pos_ = 0;
};

std::string stack_key(const CallStack& stack) {
  std::vector<uint8_t> bytes;
  ByteWriter w(bytes);
  for (const auto& f : stack.frames) {
    w.put(static_cast<uint8_t>(f.level));
    w.str(f.function);
    w.str(f.file);
    w.put(f.line);
  }
  return std::string(bytes.begin(), bytes.end());
}

void put_stack(ByteWriter& w, const CallStack& stack) {
  w.put<uint32_t>(static_cast<uint32_t>(stack.frames.size()));
  for (const auto& f : stack.frames) {
    w.put(static_cast<uint8_t>(f.level));
    w.str(f.function);
    w.str(f.file);
    w.put(f.line);
  }
}

int64_t signed_size(uint64_t size, bool release) {
  if (size > static_cast<uint64_t>(std::numeric_limits<int64_t>::max())) {
    throw Error(ErrorCode::DialectLoss, "size does not fit a signed 64-bit field");
  }
  auto s = static_cast<int64_t>(size);
  return release ? -s : s;
}

// ---- encoding ----

uint16_t tag_for(const Event& e, Dialect dialect) {
  auto kind = static_cast<uint16_t>(e.kind);
  switch (dialect) {
    case Dialect::Unified:
      return kind;
    case Dialect::NVX:
      if (e.kind == EventKind::TensorAlloc || e.kind == EventKind::TensorReclaim) return kNvxTensor;
      if (e.kind == EventKind::DeviceMalloc || e.kind == EventKind::DeviceFree) return kNvxObject;
      return static_cast<uint16_t>(kNvxBase | kind);
    case Dialect::RMX:
      if (e.kind == EventKind::TensorAlloc || e.kind == EventKind::TensorReclaim) return kRmxTensor;
      if (e.kind == EventKind::DeviceMalloc || e.kind == EventKind::DeviceFree) return kRmxObject;
      return static_cast<uint16_t>(kRmxBase | kind);
  }
  return kind;
}

// Field order A: unified and NVX.
void encode_body_a(ByteWriter& w, const Event& e, Dialect dialect) {
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ApiCallInfo>) {
          w.str(p.name);
          w.put(p.arg);
        } else if constexpr (std::is_same_v<T, KernelLaunchInfo>) {
          w.str(p.kernel_name);
          w.put(p.grid_id);
          w.dims(p.grid_dims);
          w.dims(p.block_dims);
          w.put(p.stream);
          w.put<uint32_t>(static_cast<uint32_t>(p.arg_objects.size()));
          for (auto id : p.arg_objects) w.put(id);
        } else if constexpr (std::is_same_v<T, KernelCompleteInfo>) {
          w.put(p.grid_id);
        } else if constexpr (std::is_same_v<T, MemCopyInfo>) {
          w.put(p.src_addr);
          w.put(p.dst_addr);
          w.put(p.size_bytes);
          w.put(static_cast<uint8_t>(p.direction));
        } else if constexpr (std::is_same_v<T, ObjectEventInfo>) {
          w.put(p.object_id);
          w.put(p.address);
          w.put(p.size_bytes);
          if (dialect == Dialect::NVX) w.put(static_cast<uint8_t>(p.action));
        } else if constexpr (std::is_same_v<T, MemAccessInfo>) {
          w.put(p.grid_id);
          w.put(p.address);
          w.put(p.size_bytes);
          w.put(static_cast<uint8_t>(p.is_write));
          w.put(static_cast<uint8_t>(p.space));
        } else if constexpr (std::is_same_v<T, DeviceOpInfo>) {
          w.put(p.grid_id);
          w.put(p.value);
        } else if constexpr (std::is_same_v<T, OperatorInfo>) {
          w.put(p.op_id);
          w.str(p.name);
        } else if constexpr (std::is_same_v<T, TensorEventInfo>) {
          w.put(p.tensor_id);
          w.put(p.object_id);
          w.put(p.address);
          w.put(p.size_bytes);
          if (dialect == Dialect::NVX) w.put(static_cast<uint8_t>(p.action));
        } else if constexpr (std::is_same_v<T, RangeMarkerInfo>) {
          w.put(p.range_id);
          w.str(p.label);
        }
      },
      e.payload);
}

// Field order B: RMX. Releases are negative sizes, no action flag.
void encode_body_b(ByteWriter& w, const Event& e) {
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ApiCallInfo>) {
          w.put(p.arg);
          w.str(p.name);
        } else if constexpr (std::is_same_v<T, KernelLaunchInfo>) {
          w.put(p.grid_id);
          w.put(p.stream);
          w.dims(p.block_dims);
          w.dims(p.grid_dims);
          w.put<uint32_t>(static_cast<uint32_t>(p.arg_objects.size()));
          for (auto id : p.arg_objects) w.put(id);
          w.str(p.kernel_name);
        } else if constexpr (std::is_same_v<T, KernelCompleteInfo>) {
          w.put(p.grid_id);
        } else if constexpr (std::is_same_v<T, MemCopyInfo>) {
          w.put(static_cast<uint8_t>(p.direction));
          w.put(p.size_bytes);
          w.put(p.dst_addr);
          w.put(p.src_addr);
        } else if constexpr (std::is_same_v<T, ObjectEventInfo>) {
          w.put(signed_size(p.size_bytes, p.action == ObjectAction::Free));
          w.put(p.address);
          w.put(p.object_id);
        } else if constexpr (std::is_same_v<T, MemAccessInfo>) {
          w.put(static_cast<uint8_t>((p.is_write ? 1u : 0u) |
                                     (static_cast<uint8_t>(p.space) << 1)));
          w.put(p.size_bytes);
          w.put(p.address);
          w.put(p.grid_id);
        } else if constexpr (std::is_same_v<T, DeviceOpInfo>) {
          w.put(p.value);
          w.put(p.grid_id);
        } else if constexpr (std::is_same_v<T, OperatorInfo>) {
          w.str(p.name);
          w.put(p.op_id);
        } else if constexpr (std::is_same_v<T, TensorEventInfo>) {
          w.put(signed_size(p.size_bytes, p.action == TensorAction::Reclaim));
          w.put(p.address);
          w.put(p.object_id);
          w.put(p.tensor_id);
        } else if constexpr (std::is_same_v<T, RangeMarkerInfo>) {
          w.str(p.label);
          w.put(p.range_id);
        }
      },
      e.payload);
}

// ---- decoding ----

template <typename T>
T get_enum(ByteReader& r, uint8_t max, uint64_t offset, const char* what) {
  auto v = r.get<uint8_t>();
  if (v > max) {
    throw Error(ErrorCode::CorruptRecord, std::string("bad ") + what + " value")
        .with_byte_offset(offset);
  }
  return static_cast<T>(v);
}

Payload decode_body_a(ByteReader& r, EventKind kind, Dialect dialect,
                      uint64_t offset, std::optional<uint8_t>* action) {
  switch (expected_payload_index(kind)) {
    case 0: {
      ApiCallInfo p;
      p.name = r.str();
      p.arg = r.get<uint64_t>();
      return p;
    }
    case 1: {
      KernelLaunchInfo p;
      p.kernel_name = r.str();
      p.grid_id = r.get<uint64_t>();
      p.grid_dims = r.dims();
      p.block_dims = r.dims();
      p.stream = r.get<uint32_t>();
      auto n = r.get<uint32_t>();
      if (n > kMaxRecordBytes / 8) {
        throw Error(ErrorCode::CorruptRecord, "argument list too long").with_byte_offset(offset);
      }
      p.arg_objects.reserve(n);
      for (uint32_t i = 0; i < n; ++i) p.arg_objects.push_back(r.get<uint64_t>());
      return p;
    }
    case 2: {
      KernelCompleteInfo p;
      p.grid_id = r.get<uint64_t>();
      return p;
    }
    case 3: {
      MemCopyInfo p;
      p.src_addr = r.get<uint64_t>();
      p.dst_addr = r.get<uint64_t>();
      p.size_bytes = r.get<uint64_t>();
      p.direction = get_enum<CopyDirection>(r, 2, offset, "copy direction");
      return p;
    }
    case 4: {
      ObjectEventInfo p;
      p.object_id = r.get<uint64_t>();
      p.address = r.get<uint64_t>();
      p.size_bytes = r.get<uint64_t>();
      if (dialect == Dialect::NVX) *action = r.get<uint8_t>();
      return p;
    }
    case 5: {
      MemAccessInfo p;
      p.grid_id = r.get<uint64_t>();
      p.address = r.get<uint64_t>();
      p.size_bytes = r.get<uint32_t>();
      p.is_write = r.get<uint8_t>() != 0;
      p.space = get_enum<MemSpace>(r, 1, offset, "memory space");
      return p;
    }
    case 6: {
      DeviceOpInfo p;
      p.grid_id = r.get<uint64_t>();
      p.value = r.get<uint64_t>();
      return p;
    }
    case 7: {
      OperatorInfo p;
      p.op_id = r.get<uint64_t>();
      p.name = r.str();
      return p;
    }
    case 8: {
      TensorEventInfo p;
      p.tensor_id = r.get<uint64_t>();
      p.object_id = r.get<uint64_t>();
      p.address = r.get<uint64_t>();
      p.size_bytes = r.get<uint64_t>();
      if (dialect == Dialect::NVX) *action = r.get<uint8_t>();
      return p;
    }
    default: {
      RangeMarkerInfo p;
      p.range_id = r.get<uint64_t>();
      p.label = r.str();
      return p;
    }
  }
}

Payload decode_body_b(ByteReader& r, EventKind kind, uint64_t offset,
                      int64_t* signed_size_out) {
  switch (expected_payload_index(kind)) {
    case 0: {
      ApiCallInfo p;
      p.arg = r.get<uint64_t>();
      p.name = r.str();
      return p;
    }
    case 1: {
      KernelLaunchInfo p;
      p.grid_id = r.get<uint64_t>();
      p.stream = r.get<uint32_t>();
      p.block_dims = r.dims();
      p.grid_dims = r.dims();
      auto n = r.get<uint32_t>();
      if (n > kMaxRecordBytes / 8) {
        throw Error(ErrorCode::CorruptRecord, "argument list too long").with_byte_offset(offset);
      }
      p.arg_objects.reserve(n);
      for (uint32_t i = 0; i < n; ++i) p.arg_objects.push_back(r.get<uint64_t>());
      p.kernel_name = r.str();
      return p;
    }
    case 2: {
      KernelCompleteInfo p;
      p.grid_id = r.get<uint64_t>();
      return p;
    }
    case 3: {
      MemCopyInfo p;
      p.direction = get_enum<CopyDirection>(r, 2, offset, "copy direction");
      p.size_bytes = r.get<uint64_t>();
      p.dst_addr = r.get<uint64_t>();
      p.src_addr = r.get<uint64_t>();
      return p;
    }
    case 4: {
      ObjectEventInfo p;
      *signed_size_out = r.get<int64_t>();
      p.address = r.get<uint64_t>();
      p.object_id = r.get<uint64_t>();
      return p;
    }
    case 5: {
      MemAccessInfo p;
      auto flags = r.get<uint8_t>();
      if (flags > 3) {
        throw Error(ErrorCode::CorruptRecord, "bad access flags").with_byte_offset(offset);
      }
      p.is_write = (flags & 1u) != 0;
      p.space = static_cast<MemSpace>(flags >> 1);
      p.size_bytes = r.get<uint32_t>();
      p.address = r.get<uint64_t>();
      p.grid_id = r.get<uint64_t>();
      return p;
    }
    case 6: {
      DeviceOpInfo p;
      p.value = r.get<uint64_t>();
      p.grid_id = r.get<uint64_t>();
      return p;
    }
    case 7: {
      OperatorInfo p;
      p.name = r.str();
      p.op_id = r.get<uint64_t>();
      return p;
    }
    case 8: {
      TensorEventInfo p;
      *signed_size_out = r.get<int64_t>();
      p.address = r.get<uint64_t>();
      p.object_id = r.get<uint64_t>();
      p.tensor_id = r.get<uint64_t>();
      return p;
    }
    default: {
      RangeMarkerInfo p;
      p.label = r.str();
      p.range_id = r.get<uint64_t>();
      return p;
    }
  }
}

uint64_t magnitude(int64_t v) {
  return v < 0 ? static_cast<uint64_t>(-(v + 1)) + 1 : static_cast<uint64_t>(v);
}

// Resolves the dialect tag into a unified kind and normalizes the payload.
void decode_record(std::span<const uint8_t> body, Dialect dialect, uint64_t offset,
                   const std::vector<std::shared_ptr<const CallStack>>& stacks,
                   Event& out) {
  ByteReader r(body, offset + 4);
  const auto tag = r.get<uint16_t>();

  uint32_t stack_ref = 0;
  if (dialect == Dialect::RMX) {
    auto ts_us = r.get<uint64_t>();
    if (ts_us > std::numeric_limits<uint64_t>::max() / 1000) {
      throw Error(ErrorCode::CorruptRecord, "timestamp overflows nanoseconds")
          .with_byte_offset(offset);
    }
    out.timestamp_ns = ts_us * 1000;
    out.device = r.get<uint32_t>();
    out.seq = r.get<uint64_t>();
    stack_ref = r.get<uint32_t>();
  } else {
    out.seq = r.get<uint64_t>();
    out.device = r.get<uint32_t>();
    out.timestamp_ns = r.get<uint64_t>();
    stack_ref = r.get<uint32_t>();
  }
  if (stack_ref > stacks.size()) {
    throw Error(ErrorCode::CorruptRecord, "stack reference out of range")
        .with_byte_offset(offset);
  }
  out.stack = stack_ref == 0 ? nullptr : stacks[stack_ref - 1];

  auto corrupt_tag = [&]() {
    return Error(ErrorCode::CorruptRecord, "unknown kind tag " + std::to_string(tag))
        .with_byte_offset(offset);
  };

  if (dialect == Dialect::Unified) {
    auto kind = kind_from_tag(tag);
    if (!kind) throw corrupt_tag();
    out.kind = *kind;
    out.payload = decode_body_a(r, out.kind, dialect, offset, nullptr);
    // The action is implied by the kind tag.
    if (auto* t = std::get_if<TensorEventInfo>(&out.payload)) {
      t->action = out.kind == EventKind::TensorAlloc ? TensorAction::Alloc : TensorAction::Reclaim;
    } else if (auto* o = std::get_if<ObjectEventInfo>(&out.payload)) {
      o->action = out.kind == EventKind::DeviceMalloc ? ObjectAction::Malloc : ObjectAction::Free;
    }
  } else if (dialect == Dialect::NVX) {
    std::optional<uint8_t> action;
    if (tag == kNvxTensor || tag == kNvxObject) {
      bool tensor = tag == kNvxTensor;
      out.payload = decode_body_a(r, tensor ? EventKind::TensorAlloc : EventKind::DeviceMalloc,
                                  dialect, offset, &action);
      if (!action || *action > 1) {
        throw Error(ErrorCode::CorruptRecord, "bad action flag").with_byte_offset(offset);
      }
      if (tensor) {
        auto& p = std::get<TensorEventInfo>(out.payload);
        p.action = static_cast<TensorAction>(*action);
        out.kind = p.action == TensorAction::Alloc ? EventKind::TensorAlloc
                                                   : EventKind::TensorReclaim;
      } else {
        auto& p = std::get<ObjectEventInfo>(out.payload);
        p.action = static_cast<ObjectAction>(*action);
        out.kind = p.action == ObjectAction::Malloc ? EventKind::DeviceMalloc
                                                    : EventKind::DeviceFree;
      }
    } else {
      if ((tag & 0xF000) != kNvxBase) throw corrupt_tag();
      auto kind = kind_from_tag(static_cast<uint16_t>(tag & 0x0FFF));
      if (!kind || expected_payload_index(*kind) == 4 || expected_payload_index(*kind) == 8) {
        throw corrupt_tag();
      }
      out.kind = *kind;
      out.payload = decode_body_a(r, out.kind, dialect, offset, &action);
    }
  } else {
    int64_t size = 0;
    if (tag == kRmxTensor || tag == kRmxObject) {
      bool tensor = tag == kRmxTensor;
      out.payload = decode_body_b(r, tensor ? EventKind::TensorAlloc : EventKind::DeviceMalloc,
                                  offset, &size);
      if (size == 0) {
        throw Error(ErrorCode::CorruptRecord, "zero size in signed-size record")
            .with_byte_offset(offset);
      }
      bool release = size < 0;
      if (tensor) {
        auto& p = std::get<TensorEventInfo>(out.payload);
        p.size_bytes = magnitude(size);
        p.action = release ? TensorAction::Reclaim : TensorAction::Alloc;
        out.kind = release ? EventKind::TensorReclaim : EventKind::TensorAlloc;
      } else {
        auto& p = std::get<ObjectEventInfo>(out.payload);
        p.size_bytes = magnitude(size);
        p.action = release ? ObjectAction::Free : ObjectAction::Malloc;
        out.kind = release ? EventKind::DeviceFree : EventKind::DeviceMalloc;
      }
    } else {
      if ((tag & 0xF000) != kRmxBase) throw corrupt_tag();
      auto kind = kind_from_tag(static_cast<uint16_t>(tag & 0x0FFF));
      if (!kind || expected_payload_index(*kind) == 4 || expected_payload_index(*kind) == 8) {
        throw corrupt_tag();
      }
      out.kind = *kind;
      out.payload = decode_body_b(r, out.kind, offset, &size);
    }
  }
  if (!r.done()) {
    throw Error(ErrorCode::CorruptRecord, "record length exceeds its fields")
        .with_byte_offset(offset);
  }
}

}  // namespace

std::string_view dialect_name(Dialect dialect) {
  switch (dialect) {
    case Dialect::Unified: return "unified";
    case Dialect::NVX: return "nvx";
    case Dialect::RMX: return "rmx";
  }
  return "unified";
}

std::optional<Dialect> dialect_from_name(std::string_view name) {
  if (name == "unified") return Dialect::Unified;
  if (name == "nvx") return Dialect::NVX;
  if (name == "rmx") return Dialect::RMX;
  return std::nullopt;
}

std::vector<uint8_t> encode_trace(std::span<const Event> events, Dialect dialect,
                                  const WriteOptions& options) {
  std::vector<uint8_t> out;
  ByteWriter w(out);

  uint32_t device_count = 0;
  std::map<std::string, uint32_t> stack_index;
  std::vector<const CallStack*> stack_table;
  for (const auto& e : events) {
    device_count = std::max(device_count, e.device + 1);
    if (e.stack) {
      auto [it, inserted] = stack_index.emplace(stack_key(*e.stack),
                                                static_cast<uint32_t>(stack_table.size()));
      if (inserted) stack_table.push_back(e.stack.get());
    }
  }

  out.insert(out.end(), kMagic, kMagic + 4);
  w.put(kTraceVersion);
  w.put(static_cast<uint8_t>(dialect));
  w.put<uint8_t>(0);
  w.put<uint16_t>(0);
  w.put(device_count);
  w.put(options.epoch_ns);
  w.put<uint64_t>(events.size());
  w.put<uint32_t>(static_cast<uint32_t>(stack_table.size()));
  for (const auto* s : stack_table) put_stack(w, *s);

  for (const auto& e : events) {
    uint32_t stack_ref = e.stack ? stack_index.at(stack_key(*e.stack)) + 1 : 0;
    const std::size_t length_at = w.size();
    w.put<uint32_t>(0);
    w.put(tag_for(e, dialect));
    if (dialect == Dialect::RMX) {
      if (e.timestamp_ns % 1000 != 0 && options.strict) {
        throw Error(ErrorCode::DialectLoss,
                    "timestamp " + std::to_string(e.timestamp_ns) +
                        " ns is not a whole microsecond")
            .with_seq(e.seq);
      }
      w.put(e.timestamp_ns / 1000);
      w.put(e.device);
      w.put(e.seq);
      w.put(stack_ref);
      encode_body_b(w, e);
    } else {
      w.put(e.seq);
      w.put(e.device);
      w.put(e.timestamp_ns);
      w.put(stack_ref);
      encode_body_a(w, e, dialect);
    }
    w.patch_u32(length_at, static_cast<uint32_t>(w.size() - length_at - 4));
  }
  return out;
}

void write_trace(std::span<const Event> events, Dialect dialect,
                 const std::filesystem::path& path, const WriteOptions& options) {
  auto bytes = encode_trace(events, dialect, options);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

// ---- reader ----

TraceReader::TraceReader(const std::filesystem::path& path, const ReadOptions& options)
    : options_(options) {
  auto file = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*file) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  in_ = std::move(file);
  read_header();
}

TraceReader::TraceReader(std::unique_ptr<std::istream> in, const ReadOptions& options)
    : in_(std::move(in)), options_(options) {
  read_header();
}

std::size_t TraceReader::read_some(void* dst, std::size_t n) {
  in_->read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  auto got = static_cast<std::size_t>(in_->gcount());
  offset_ += got;
  return got;
}

void TraceReader::read_header() {
  uint8_t fixed[kFixedHeaderBytes];
  auto got = read_some(fixed, sizeof(fixed));
  if (got < 4 || std::memcmp(fixed, kMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "not a trace file (bad magic)").with_byte_offset(0);
  }
  if (got < sizeof(fixed)) {
    throw Error(ErrorCode::TruncatedRecord, "truncated trace header").with_byte_offset(got);
  }
  ByteReader r(std::span<const uint8_t>(fixed + 4, sizeof(fixed) - 4), 4);
  header_.version = r.get<uint32_t>();
  if (header_.version != kTraceVersion) {
    throw Error(ErrorCode::UnsupportedVersion,
                "unsupported trace version " + std::to_string(header_.version))
        .with_byte_offset(4);
  }
  auto dialect = r.get<uint8_t>();
  if (dialect > 2) {
    throw Error(ErrorCode::CorruptRecord, "unknown dialect in header").with_byte_offset(8);
  }
  header_.dialect = static_cast<Dialect>(dialect);
  r.get<uint8_t>();
  r.get<uint16_t>();
  header_.device_count = r.get<uint32_t>();
  header_.epoch_ns = r.get<uint64_t>();
  header_.event_count = r.get<uint64_t>();

  uint8_t count_bytes[4];
  if (read_some(count_bytes, 4) < 4) {
    throw Error(ErrorCode::TruncatedRecord, "truncated stack table").with_byte_offset(offset_);
  }
  uint32_t stack_count = ByteReader(count_bytes, offset_ - 4).get<uint32_t>();
  // Stack entries are read frame by frame straight from the stream.
  for (uint32_t i = 0; i < stack_count; ++i) {
    const uint64_t entry_offset = offset_;
    auto read_u32 = [&]() {
      uint8_t b[4];
      if (read_some(b, 4) < 4) {
        throw Error(ErrorCode::TruncatedRecord, "truncated stack table")
            .with_byte_offset(entry_offset);
      }
      return ByteReader(b, 0).get<uint32_t>();
    };
    auto read_str = [&]() {
      auto n = read_u32();
      if (n > kMaxRecordBytes) {
        throw Error(ErrorCode::CorruptRecord, "oversized string in stack table")
            .with_byte_offset(entry_offset);
      }
      std::string s(n, '\0');
      if (read_some(s.data(), n) < n) {
        throw Error(ErrorCode::TruncatedRecord, "truncated stack table")
            .with_byte_offset(entry_offset);
      }
      return s;
    };
    CallStack stack;
    auto frames = read_u32();
    for (uint32_t f = 0; f < frames; ++f) {
      uint8_t level;
      if (read_some(&level, 1) < 1) {
        throw Error(ErrorCode::TruncatedRecord, "truncated stack table")
            .with_byte_offset(entry_offset);
      }
      if (level > 2) {
        throw Error(ErrorCode::CorruptRecord, "bad frame level in stack table")
            .with_byte_offset(entry_offset);
      }
      Frame frame;
      frame.level = static_cast<FrameLevel>(level);
      frame.function = read_str();
      frame.file = read_str();
      frame.line = read_u32();
      stack.frames.push_back(std::move(frame));
    }
    stacks_.push_back(std::make_shared<const CallStack>(std::move(stack)));
  }
}

const Event* TraceReader::next() {
  const uint64_t record_offset = offset_;
  uint8_t len_bytes[4];
  auto got = read_some(len_bytes, 4);
  if (records_read_ == header_.event_count) {
    if (got != 0) {
      throw Error(ErrorCode::CorruptRecord, "trailing data after last record")
          .with_byte_offset(record_offset);
    }
    return nullptr;
  }
  if (got < 4) {
    throw Error(ErrorCode::TruncatedRecord,
                "trace ends inside record " + std::to_string(records_read_) +
                    " at byte offset " + std::to_string(record_offset))
        .with_byte_offset(record_offset);
  }
  auto length = ByteReader(len_bytes, record_offset).get<uint32_t>();
  if (length < 2 || length > kMaxRecordBytes) {
    throw Error(ErrorCode::CorruptRecord, "implausible record length")
        .with_byte_offset(record_offset);
  }
  record_.resize(length);
  peak_record_bytes_ = std::max(peak_record_bytes_, record_.size());
  if (read_some(record_.data(), length) < length) {
    throw Error(ErrorCode::TruncatedRecord,
                "trace ends inside record " + std::to_string(records_read_) +
                    " at byte offset " + std::to_string(record_offset))
        .with_byte_offset(record_offset);
  }
  decode_record(record_, header_.dialect, record_offset, stacks_, current_);
  ++records_read_;

  if (options_.validate) {
    violations_.clear();
    if (validator_.feed(current_, violations_) > 0) {
      throw Error(ErrorCode::InvariantViolation, violations_.front().message)
          .with_seq(current_.seq)
          .with_byte_offset(record_offset);
    }
  }
  return &current_;
}

std::vector<Event> read_trace(const std::filesystem::path& path, TraceHeader* header,
                              const ReadOptions& options) {
  TraceReader reader(path, options);
  if (header) *header = reader.header();
  std::vector<Event> events;
  events.reserve(std::min<uint64_t>(reader.header().event_count, 1u << 24));
  while (const Event* e = reader.next()) events.push_back(*e);
  return events;
}

std::vector<Event> decode_trace(std::span<const uint8_t> bytes, TraceHeader* header,
                                const ReadOptions& options) {
  auto stream = std::make_unique<std::istringstream>(
      std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  TraceReader reader(std::move(stream), options);
  if (header) *header = reader.header();
  std::vector<Event> events;
  while (const Event* e = reader.next()) events.push_back(*e);
  return events;
}

std::vector<Event> load_trace_file(const std::filesystem::path& path,
                                   const ReadOptions& options) {
  if (path.extension() == ".jsonl") {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    auto events = from_jsonl(in);
    if (options.validate) {
      auto report = validate_stream(events);
      if (!report.empty()) {
        throw Error(ErrorCode::InvariantViolation, report.front().message)
            .with_seq(report.front().seq);
      }
    }
    return events;
  }
  return read_trace(path, nullptr, options);
}

}  // namespace accelprof
