/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ACCELPROF_WORKLOAD_HPP
#define ACCELPROF_WORKLOAD_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "accelprof/event.hpp"

namespace accelprof {

inline constexpr uint64_t kMiB = 1024 * 1024;
inline constexpr uint64_t kAllocRounding = 512;
inline constexpr uint64_t kChunkGranularity = 2 * kMiB;
inline constexpr uint64_t kAccessGranule = 32;

struct TensorPlacement {
  uint64_t tensor_id = 0;
  uint64_t object_id = 0;
  uint64_t address = 0;
  uint64_t size_bytes = 0;  // rounded
};

// Pool allocator in the style of DL framework caching allocators: chunks are
// requested from the device and never returned; tensors are carved out of
// them best-fit.
class CachingAllocator {
 public:
  explicit CachingAllocator(uint32_t device = 0);

  struct Chunk {
    uint64_t object_id = 0;
    uint64_t base = 0;
    uint64_t size = 0;
    std::map<uint64_t, uint64_t> free_segments;  // offset -> length
  };

  struct AllocResult {
    TensorPlacement tensor;
    std::optional<ObjectEventInfo> new_object;  // set when a chunk was malloc'd
  };

  AllocResult alloc(uint64_t size_bytes);
  // Throws UnknownTensor.
  TensorPlacement free(uint64_t tensor_id);

  const std::vector<Chunk>& chunks() const { return chunks_; }
  const std::map<uint64_t, TensorPlacement>& live_tensors() const { return live_; }
  uint64_t reserved_bytes() const { return reserved_; }
  uint64_t live_bytes() const { return live_bytes_; }
  uint64_t free_bytes() const;

  // Throws InvariantViolation describing the first broken invariant.
  void check_invariants() const;

  static uint64_t device_base(uint32_t device);
  static uint64_t round_size(uint64_t size_bytes);
  static uint64_t chunk_size_for(uint64_t rounded_size);

 private:
  uint32_t device_;
  uint64_t next_address_;
  uint64_t next_object_ = 1;
  uint64_t next_tensor_ = 1;
  uint64_t reserved_ = 0;
  uint64_t live_bytes_ = 0;
  std::vector<Chunk> chunks_;
  std::map<uint64_t, TensorPlacement> live_;  // tensor id -> placement
};

enum class ModelKind { CnnToy, TransformerEncoderToy, TransformerDecoderToy };
enum class RunMode { Inference, Train };
enum class Parallelism { None, DP, TP, PP };

std::string_view model_name(ModelKind model);
std::string_view parallelism_name(Parallelism p);

struct WorkloadSpec {
  ModelKind model = ModelKind::CnnToy;
  uint32_t layers = 2;
  uint32_t batch = 1;
  RunMode mode = RunMode::Inference;
  uint32_t devices = 1;
  Parallelism parallelism = Parallelism::None;
  uint64_t seed = 0;
  double access_sample_rate = 0.05;
  double untouched_arg_rate = 0.0;

  // Shape. Zero selects the model default.
  uint32_t hidden = 0;     // channels for the CNN
  uint32_t seq_len = 0;    // image side for the CNN
  uint32_t vocab = 0;      // classes for the CNN
  uint32_t iterations = 1;

  // Kernel time model: overhead + touched bytes / bandwidth.
  uint64_t kernel_overhead_ns = 4000;
  double kernel_bytes_per_ns = 1000.0;

  // Wraps this layer's operators in a RangeStart/RangeEnd pair; -1 disables.
  int32_t annotate_layer = -1;
  // Appends one kernel whose access count exceeds every other kernel's.
  bool plant_heavy_kernel = false;
  // Emit block enter/exit, barrier and shared-memory events per kernel.
  bool device_ops = true;
};

// Named default specs: "cnn-toy", "bert-toy", "gpt2-toy".
WorkloadSpec preset_spec(std::string_view name);
std::vector<std::string> preset_names();

// Throws SpecError.
void check_spec(const WorkloadSpec& spec);

// key=value lines; '#' starts a comment. "preset=<name>" first loads a preset.
// Throws SpecError on unknown keys or bad values.
WorkloadSpec parse_spec(std::string_view text);
void apply_spec_setting(WorkloadSpec& spec, std::string_view key, std::string_view value);

// Deterministic for a fixed spec. Output passes validate_stream.
std::vector<Event> generate_trace(const WorkloadSpec& spec);

// Distinct 32 B granules covering at least `rate` of the interval, as
// (address, size) pairs in address order.
std::vector<std::pair<uint64_t, uint32_t>> sample_granules(uint64_t address,
                                                           uint64_t size_bytes,
                                                           double rate,
                                                           uint64_t jitter_seed);

inline constexpr std::string_view kHeavyKernelName = "planted_heavy_gather";

}  // namespace accelprof

#endif  // ACCELPROF_WORKLOAD_HPP
