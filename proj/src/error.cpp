/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "accelprof/error.hpp"

namespace accelprof {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedRecord: return "TruncatedRecord";
    case ErrorCode::CorruptRecord: return "CorruptRecord";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::DialectLoss: return "DialectLoss";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SpecError: return "SpecError";
    case ErrorCode::UnknownTensor: return "UnknownTensor";
    case ErrorCode::ScopeMismatch: return "ScopeMismatch";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::UnknownTool: return "UnknownTool";
    case ErrorCode::NoToolSpecified: return "NoToolSpecified";
    case ErrorCode::UnknownKnob: return "UnknownKnob";
    case ErrorCode::NoKnobEnabled: return "NoKnobEnabled";
    case ErrorCode::UnknownDevice: return "UnknownDevice";
    case ErrorCode::ToolError: return "ToolError";
    case ErrorCode::ToolNotMergeable: return "ToolNotMergeable";
    case ErrorCode::EmptyProfile: return "EmptyProfile";
    case ErrorCode::PlanMismatch: return "PlanMismatch";
    case ErrorCode::CapacityTooSmall: return "CapacityTooSmall";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

Error& Error::with_seq(uint64_t seq) {
  seq_ = seq;
  return *this;
}

Error& Error::with_byte_offset(uint64_t offset) {
  byte_offset_ = offset;
  return *this;
}

Error& Error::with_line(uint64_t line) {
  line_ = line;
  return *this;
}

}  // namespace accelprof
