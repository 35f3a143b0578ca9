/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACCELPROF_ERROR_HPP
#define ACCELPROF_ERROR_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace accelprof {

enum class ErrorCode {
  InvalidArgument,
  IoError,
  BadMagic,
  UnsupportedVersion,
  TruncatedRecord,
  CorruptRecord,
  InvariantViolation,
  DialectLoss,
  ParseError,
  SpecError,
  UnknownTensor,
  ScopeMismatch,
  DuplicateName,
  UnknownTool,
  NoToolSpecified,
  UnknownKnob,
  NoKnobEnabled,
  UnknownDevice,
  ToolError,
  ToolNotMergeable,
  EmptyProfile,
  PlanMismatch,
  CapacityTooSmall,
};

std::string_view error_code_name(ErrorCode code);

// The single exception type thrown by the core. Location fields are filled
// in where the failure can be pinned to a record, byte offset or text line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

  const std::optional<uint64_t>& seq() const { return seq_; }
  const std::optional<uint64_t>& byte_offset() const { return byte_offset_; }
  const std::optional<uint64_t>& line() const { return line_; }

  Error& with_seq(uint64_t seq);
  Error& with_byte_offset(uint64_t offset);
  Error& with_line(uint64_t line);

 private:
  ErrorCode code_;
  std::optional<uint64_t> seq_;
  std::optional<uint64_t> byte_offset_;
  std::optional<uint64_t> line_;
};

}  // namespace accelprof

#endif  // ACCELPROF_ERROR_HPP
