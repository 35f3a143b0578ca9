/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACCELPROF_TRACE_IO_HPP
#define ACCELPROF_TRACE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "accelprof/event.hpp"
#include "accelprof/validate.hpp"

namespace accelprof {

/*
 * Binary trace layout (little-endian):
 *
 *   offset  size  field
 *   0       4     magic "PSTA"
 *   4       4     version (1)
 *   8       1     dialect (0 unified, 1 nvx, 2 rmx)
 *   9       3     reserved, zero
 *   12      4     device_count
 *   16      8     epoch_ns
 *   24      8     event_count
 *   32      4     stack_count, followed by the call-stack table
 *
 * then event_count records of: u32 length, u16 kind tag, payload. The length
 * covers tag and payload. Strings are u32-length-prefixed UTF-8.
 */

enum class Dialect : uint8_t { Unified = 0, NVX = 1, RMX = 2 };

std::string_view dialect_name(Dialect dialect);
std::optional<Dialect> dialect_from_name(std::string_view name);

inline constexpr uint32_t kTraceVersion = 1;
inline constexpr std::size_t kFixedHeaderBytes = 32;

struct TraceHeader {
  uint32_t version = kTraceVersion;
  Dialect dialect = Dialect::Unified;
  uint32_t device_count = 0;
  uint64_t epoch_ns = 0;
  uint64_t event_count = 0;
};

struct WriteOptions {
  // RMX stores microseconds. Strict mode rejects timestamps that are not a
  // whole number of microseconds; lenient mode truncates them.
  bool strict = true;
  uint64_t epoch_ns = 0;
};

void write_trace(std::span<const Event> events, Dialect dialect,
                 const std::filesystem::path& path,
                 const WriteOptions& options = {});

// Encodes a trace into memory; write_trace is this plus a file write.
std::vector<uint8_t> encode_trace(std::span<const Event> events, Dialect dialect,
                                  const WriteOptions& options = {});

struct ReadOptions {
  bool validate = true;
};

// Streaming reader. Holds the header, the call-stack table and one record.
class TraceReader {
 public:
  explicit TraceReader(const std::filesystem::path& path,
                       const ReadOptions& options = {});
  TraceReader(std::unique_ptr<std::istream> in, const ReadOptions& options = {});

  const TraceHeader& header() const { return header_; }

  // Next normalized event, or nullptr at end of trace. The pointer stays
  // valid until the following call.
  const Event* next();

  uint64_t records_read() const { return records_read_; }
  // Largest single record buffer held so far, in bytes.
  std::size_t peak_record_bytes() const { return peak_record_bytes_; }

 private:
  void read_header();
  // Returns the number of bytes read before EOF.
  std::size_t read_some(void* dst, std::size_t n);

  std::unique_ptr<std::istream> in_;
  ReadOptions options_;
  TraceHeader header_;
  std::vector<std::shared_ptr<const CallStack>> stacks_;
  std::vector<uint8_t> record_;
  uint64_t offset_ = 0;
  uint64_t records_read_ = 0;
  std::size_t peak_record_bytes_ = 0;
  Event current_;
  StreamValidator validator_;
  ValidationReport violations_;
};

// Reads the whole trace into memory.
std::vector<Event> read_trace(const std::filesystem::path& path,
                              TraceHeader* header = nullptr,
                              const ReadOptions& options = {});

// Decodes an in-memory image produced by encode_trace.
std::vector<Event> decode_trace(std::span<const uint8_t> bytes,
                                TraceHeader* header = nullptr,
                                const ReadOptions& options = {});

// JSON-lines mirror of the unified dialect: one event per line.
void to_jsonl(std::span<const Event> events, std::ostream& out);
std::string to_jsonl(std::span<const Event> events);
std::vector<Event> from_jsonl(std::istream& in);
std::vector<Event> from_jsonl(const std::string& text);

// Loads .jsonl or binary traces by extension.
std::vector<Event> load_trace_file(const std::filesystem::path& path,
                                   const ReadOptions& options = {});

}  // namespace accelprof

#endif  // ACCELPROF_TRACE_IO_HPP
