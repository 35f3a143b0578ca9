/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <algorithm>
#include <iterator>
#include <limits>

#include "accelprof/error.hpp"
#include "accelprof/workload.hpp"

namespace accelprof {

namespace {

uint64_t round_up(uint64_t v, uint64_t m) { return (v + m - 1) / m * m; }

}  // namespace

CachingAllocator::CachingAllocator(uint32_t device)
    : device_(device), next_address_(device_base(device)) {}

uint64_t CachingAllocator::device_base(uint32_t device) {
  return 0x7f0000000000ull + (static_cast<uint64_t>(device) << 40);
}

uint64_t CachingAllocator::round_size(uint64_t size_bytes) {
  return round_up(size_bytes, kAllocRounding);
}

uint64_t CachingAllocator::chunk_size_for(uint64_t rounded_size) {
  return std::max(kChunkGranularity, round_up(rounded_size, kChunkGranularity));
}

CachingAllocator::AllocResult CachingAllocator::alloc(uint64_t size_bytes) {
  if (size_bytes == 0) throw Error(ErrorCode::InvalidArgument, "tensor size must be positive");
  const uint64_t size = round_size(size_bytes);

  // Best fit; ties go to the lowest address.
  Chunk* best_chunk = nullptr;
  uint64_t best_offset = 0;
  uint64_t best_len = std::numeric_limits<uint64_t>::max();
  for (auto& chunk : chunks_) {
    for (const auto& [offset, len] : chunk.free_segments) {
      if (len < size) continue;
      if (len < best_len ||
          (len == best_len && chunk.base + offset < best_chunk->base + best_offset)) {
        best_chunk = &chunk;
        best_offset = offset;
        best_len = len;
      }
    }
  }

  AllocResult result;
  if (!best_chunk) {
    Chunk chunk;
    chunk.object_id = (static_cast<uint64_t>(device_) << 48) | next_object_++;
    chunk.base = next_address_;
    chunk.size = chunk_size_for(size);
    chunk.free_segments[0] = chunk.size;
    next_address_ += chunk.size;
    reserved_ += chunk.size;
    result.new_object =
        ObjectEventInfo{chunk.object_id, chunk.base, chunk.size, ObjectAction::Malloc};
    chunks_.push_back(std::move(chunk));
    best_chunk = &chunks_.back();
    best_offset = 0;
    best_len = best_chunk->size;
  }

  best_chunk->free_segments.erase(best_offset);
  if (best_len > size) best_chunk->free_segments[best_offset + size] = best_len - size;

  TensorPlacement t;
  t.tensor_id = (static_cast<uint64_t>(device_) << 48) | next_tensor_++;
  t.object_id = best_chunk->object_id;
  t.address = best_chunk->base + best_offset;
  t.size_bytes = size;
  live_[t.tensor_id] = t;
  live_bytes_ += size;
  result.tensor = t;
  return result;
}

TensorPlacement CachingAllocator::free(uint64_t tensor_id) {
  auto it = live_.find(tensor_id);
  if (it == live_.end()) {
    throw Error(ErrorCode::UnknownTensor, "tensor " + std::to_string(tensor_id) + " is not live");
  }
  const TensorPlacement t = it->second;
  live_.erase(it);
  live_bytes_ -= t.size_bytes;

  Chunk* chunk = nullptr;
  for (auto& c : chunks_) {
    if (c.object_id == t.object_id) chunk = &c;
  }
  uint64_t offset = t.address - chunk->base;
  uint64_t len = t.size_bytes;
  auto& segs = chunk->free_segments;
  auto next = segs.lower_bound(offset);
  if (next != segs.end() && next->first == offset + len) {
    len += next->second;
    next = segs.erase(next);
  }
  if (next != segs.begin()) {
    auto prev = std::prev(next);
    if (prev->first + prev->second == offset) {
      prev->second += len;
      return t;
    }
  }
  segs[offset] = len;
  return t;
}

uint64_t CachingAllocator::free_bytes() const {
  uint64_t total = 0;
  for (const auto& c : chunks_) {
    for (const auto& [off, len] : c.free_segments) total += len;
  }
  return total;
}

void CachingAllocator::check_invariants() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::InvariantViolation, "allocator: " + what);
  };
  std::map<uint64_t, std::vector<std::pair<uint64_t, uint64_t>>> used;  // object -> [off,len)
  for (const auto& [id, t] : live_) used[t.object_id].emplace_back(t.address, t.size_bytes);

  uint64_t covered_total = 0;
  for (const auto& c : chunks_) {
    std::vector<std::pair<uint64_t, uint64_t>> pieces;
    uint64_t prev_end = 0;
    bool first = true;
    for (const auto& [off, len] : c.free_segments) {
      if (len == 0) fail("empty free segment");
      if (!first && off < prev_end) fail("free segments overlap");
      if (!first && off == prev_end) fail("adjacent free segments not coalesced");
      first = false;
      prev_end = off + len;
      pieces.emplace_back(off, len);
    }
    for (const auto& [addr, len] : used[c.object_id]) pieces.emplace_back(addr - c.base, len);
    std::sort(pieces.begin(), pieces.end());
    uint64_t cursor = 0;
    for (const auto& [off, len] : pieces) {
      if (off != cursor) fail("chunk not exactly covered by live and free bytes");
      cursor = off + len;
    }
    if (cursor != c.size) fail("chunk not exactly covered by live and free bytes");
    covered_total += c.size;
  }
  if (covered_total != reserved_ || reserved_ != live_bytes_ + free_bytes()) {
    fail("reserved bytes do not equal live plus free bytes");
  }
}

}  // namespace accelprof
