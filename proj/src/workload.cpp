/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "accelprof/workload.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "accelprof/error.hpp"

namespace accelprof {

namespace {

/*
 * A model is a list of kernels over named values (activations and
 * parameters). The executor walks it forward, and backward in training mode,
 * allocating through the caching allocator and emitting events per device.
 */

struct Value {
  std::string name;
  uint64_t bytes = 0;
  int32_t layer = -1;
  bool param = false;
  bool needs_grad = true;
};

struct Node {
  uint32_t op = 0;
  std::string kernel;
  std::vector<uint32_t> inputs;
  // Per input: bytes read from the tail of the value, 0 for the whole value.
  std::vector<uint64_t> tail_bytes;
  std::optional<uint32_t> output;
  bool in_place = false;  // reads and writes inputs[0]; no new value
  int32_t layer = -1;
};

struct OpDef {
  std::string name;
  int32_t layer = -1;
};

struct Graph {
  std::vector<Value> values;
  std::vector<Node> nodes;
  std::vector<OpDef> ops;
  std::vector<std::vector<uint32_t>> param_groups;  // packed into one object each
  std::vector<uint32_t> inputs;                     // uploaded host-to-device
  uint32_t output = 0;                              // copied back to the host
  std::optional<uint32_t> loss;
  int32_t layers = 0;
  std::string layer_label;

  uint32_t value(std::string name, uint64_t bytes, int32_t layer, bool needs_grad = true) {
    values.push_back(Value{std::move(name), std::max<uint64_t>(bytes, 1), layer, false,
                           needs_grad});
    return static_cast<uint32_t>(values.size() - 1);
  }
  uint32_t param(std::string name, uint64_t bytes, int32_t layer) {
    values.push_back(Value{std::move(name), std::max<uint64_t>(bytes, 1), layer, true, true});
    return static_cast<uint32_t>(values.size() - 1);
  }
  uint32_t op(std::string name, int32_t layer) {
    ops.push_back(OpDef{std::move(name), layer});
    return static_cast<uint32_t>(ops.size() - 1);
  }
  // New output value sized `out_bytes`.
  uint32_t kernel(uint32_t op_index, std::string name, std::vector<uint32_t> in,
                  uint64_t out_bytes, std::vector<uint64_t> tails = {}) {
    const int32_t layer = ops[op_index].layer;
    uint32_t out = value(name + "_out", out_bytes, layer);
    Node n;
    n.op = op_index;
    n.kernel = std::move(name);
    n.tail_bytes = tails.empty() ? std::vector<uint64_t>(in.size(), 0) : std::move(tails);
    n.inputs = std::move(in);
    n.output = out;
    n.layer = layer;
    nodes.push_back(std::move(n));
    return out;
  }
  void in_place(uint32_t op_index, std::string name, uint32_t target) {
    Node n;
    n.op = op_index;
    n.kernel = std::move(name);
    n.inputs = {target};
    n.tail_bytes = {0};
    n.in_place = true;
    n.layer = ops[op_index].layer;
    nodes.push_back(std::move(n));
  }
};

uint64_t f32(uint64_t elements) { return elements * 4; }

// Convolutional classifier: conv+relu blocks and one large fully connected
// layer. All weights live in a single packed object.
Graph build_cnn(const WorkloadSpec& s, bool tp) {
  Graph g;
  g.layers = static_cast<int32_t>(s.layers);
  g.layer_label = "conv_layer";
  const uint64_t c = s.hidden, side = s.seq_len, classes = s.vocab, b = s.batch;
  const uint64_t pixels = side * side;

  uint32_t x = g.value("image", f32(b * 3 * pixels), -1, false);
  g.inputs.push_back(x);
  std::vector<uint32_t> weights;
  for (uint32_t l = 0; l < s.layers; ++l) {
    const uint64_t cin = l == 0 ? 3 : c;
    weights.push_back(g.param("conv_weight", f32(c * cin * 9), static_cast<int32_t>(l)));
  }
  const int32_t head = g.layers;
  uint32_t fc = g.param("fc_weight", f32(c * pixels * classes), head);
  weights.push_back(fc);
  g.param_groups.push_back(weights);

  for (uint32_t l = 0; l < s.layers; ++l) {
    const auto layer = static_cast<int32_t>(l);
    uint32_t conv = g.op("conv2d", layer);
    uint32_t y = g.kernel(conv, "implicit_gemm_conv", {x, weights[l]}, f32(b * c * pixels));
    uint32_t act = g.op("relu", layer);
    x = g.kernel(act, "relu_fwd", {y}, f32(b * c * pixels));
    if (tp) g.in_place(g.op("allreduce", layer), "allreduce_ring", x);
  }
  uint32_t lin = g.op("linear", head);
  uint32_t logits = g.kernel(lin, "gemm_fc", {x, fc}, f32(b * classes));
  uint32_t sm = g.op("softmax", head);
  g.output = g.kernel(sm, "softmax_fwd", {logits}, f32(b * classes));
  if (s.mode == RunMode::Train) {
    uint32_t labels = g.value("labels", f32(b), -1, false);
    g.inputs.push_back(labels);
    uint32_t loss_op = g.op("cross_entropy", head);
    g.loss = g.kernel(loss_op, "cross_entropy_fwd", {g.output, labels}, 4);
  }
  return g;
}

// Transformer stack. The encoder uses a 6x feed-forward width so that one
// layer's weights fill whole 2 MiB pages; the decoder uses 4x and computes
// logits for the last token only.
Graph build_transformer(const WorkloadSpec& s, bool decoder, bool tp) {
  Graph g;
  g.layers = static_cast<int32_t>(s.layers);
  g.layer_label = "transformer_layer";
  const uint64_t h = s.hidden, b = s.batch, seq = s.seq_len, vocab = s.vocab;
  const uint64_t tokens = b * seq;
  const uint64_t ffn = decoder ? 4 * h : 6 * h;
  const uint64_t heads = std::max<uint64_t>(1, h / 64);

  uint32_t ids = g.value("token_ids", f32(tokens), -1, false);
  g.inputs.push_back(ids);
  uint32_t emb = g.param("embedding", f32(vocab * h), -1);
  g.param_groups.push_back({emb});

  struct LayerParams {
    uint32_t qkv, out, fc1, fc2;
  };
  std::vector<LayerParams> params;
  for (uint32_t l = 0; l < s.layers; ++l) {
    const auto layer = static_cast<int32_t>(l);
    LayerParams p{g.param("w_qkv", f32(h * 3 * h), layer), g.param("w_out", f32(h * h), layer),
                  g.param("w_fc1", f32(h * ffn), layer), g.param("w_fc2", f32(ffn * h), layer)};
    params.push_back(p);
    g.param_groups.push_back({p.qkv, p.out, p.fc1, p.fc2});
  }
  const int32_t head = g.layers;
  uint32_t head_w = 0;
  if (decoder) {
    head_w = g.param("lm_head", f32(vocab * h), head);
    g.param_groups.push_back({head_w});
  } else {
    head_w = g.param("classifier", f32(h * 2), head);
    g.param_groups.push_back({head_w});
  }

  uint32_t e = g.op("embedding", -1);
  uint32_t x = g.kernel(e, "embedding_gather", {ids, emb}, f32(tokens * h));
  for (uint32_t l = 0; l < s.layers; ++l) {
    const auto layer = static_cast<int32_t>(l);
    const auto& p = params[l];
    uint32_t ln1 = g.op("layer_norm", layer);
    uint32_t n1 = g.kernel(ln1, "layer_norm_fwd", {x}, f32(tokens * h));
    uint32_t attn = g.op("self_attention", layer);
    uint32_t qkv = g.kernel(attn, "gemm_qkv", {n1, p.qkv}, f32(tokens * 3 * h));
    uint32_t scores = g.kernel(attn, "gemm_qk_scores", {qkv}, f32(b * heads * seq * seq));
    uint32_t probs = g.kernel(attn, decoder ? "masked_softmax_fwd" : "softmax_fwd", {scores},
                              f32(b * heads * seq * seq));
    uint32_t ctx = g.kernel(attn, "gemm_attn_v", {probs, qkv}, f32(tokens * h));
    uint32_t proj = g.op("linear", layer);
    uint32_t o = g.kernel(proj, "gemm_out_proj", {ctx, p.out}, f32(tokens * h));
    if (tp) g.in_place(g.op("allreduce", layer), "allreduce_ring", o);
    uint32_t add1 = g.op("add", layer);
    uint32_t x2 = g.kernel(add1, "residual_add", {x, o}, f32(tokens * h));
    uint32_t ln2 = g.op("layer_norm", layer);
    uint32_t n2 = g.kernel(ln2, "layer_norm_fwd", {x2}, f32(tokens * h));
    uint32_t mlp = g.op("mlp", layer);
    uint32_t f1 = g.kernel(mlp, "gemm_fc1", {n2, p.fc1}, f32(tokens * ffn));
    uint32_t act = g.kernel(mlp, "gelu_fwd", {f1}, f32(tokens * ffn));
    uint32_t y = g.kernel(mlp, "gemm_fc2", {act, p.fc2}, f32(tokens * h));
    if (tp) g.in_place(g.op("allreduce", layer), "allreduce_ring", y);
    uint32_t add2 = g.op("add", layer);
    x = g.kernel(add2, "residual_add", {x2, y}, f32(tokens * h));
  }
  uint32_t lnf = g.op("layer_norm", head);
  uint32_t xf = g.kernel(lnf, "layer_norm_fwd", {x}, f32(tokens * h));
  uint32_t out_op = g.op(decoder ? "lm_head" : "classifier", head);
  if (decoder) {
    // Only the final position of each sequence feeds the head.
    g.output = g.kernel(out_op, "gemm_lm_head", {xf, head_w}, f32(b * vocab),
                        {f32(b * h), 0});
  } else {
    g.output = g.kernel(out_op, "gemm_classifier", {xf, head_w}, f32(b * 2), {f32(b * h), 0});
  }
  if (s.mode == RunMode::Train) {
    uint32_t labels = g.value("labels", f32(b), -1, false);
    g.inputs.push_back(labels);
    uint32_t loss_op = g.op("cross_entropy", head);
    g.loss = g.kernel(loss_op, "cross_entropy_fwd", {g.output, labels}, 4);
  }
  return g;
}


struct Region {
  TensorPlacement tensor;
  uint64_t offset = 0;
  uint64_t length = 0;
  bool write = false;
};

struct DeviceState {
  uint32_t device = 0;
  CachingAllocator alloc;
  std::mt19937_64 rng;
  std::vector<Event> events;
  uint64_t now = 0;
  uint64_t next_grid = 0;
  uint64_t next_op = 0;
  uint64_t next_range = 0;
  std::map<uint32_t, TensorPlacement> values;
  std::map<uint32_t, TensorPlacement> grads;
  std::map<uint32_t, std::pair<TensorPlacement, TensorPlacement>> moments;

  DeviceState(uint32_t dev, uint64_t seed) : device(dev), alloc(dev), rng(seed) {}
};

class Generator {
 public:
  Generator(const WorkloadSpec& spec, Graph graph) : spec_(spec), g_(std::move(graph)) {}

  std::vector<Event> run();

 private:
  static void tick(DeviceState& d) { d.now += 1000; }
  void emit(DeviceState& d, EventKind kind, Payload payload,
            std::shared_ptr<const CallStack> stack = nullptr) {
    Event e;
    e.device = d.device;
    e.timestamp_ns = d.now;
    e.kind = kind;
    e.payload = std::move(payload);
    e.stack = std::move(stack);
    d.events.push_back(std::move(e));
  }
  void host(DeviceState& d, EventKind kind, std::string name, uint64_t arg) {
    emit(d, kind, ApiCallInfo{std::move(name), arg});
    tick(d);
  }
  uint64_t scaled(uint64_t bytes) const {
    return std::max<uint64_t>(1, static_cast<uint64_t>(std::ceil(bytes * scale_)));
  }
  bool replicated() const { return spec_.parallelism != Parallelism::PP; }

  TensorPlacement alloc(DeviceState& d, uint64_t bytes);
  void release(DeviceState& d, const TensorPlacement& t);
  std::vector<TensorPlacement> alloc_packed(DeviceState& d, const std::vector<uint64_t>& sizes);
  std::shared_ptr<const CallStack> stack_for(const std::string& kernel);
  void kernel(DeviceState& d, const std::string& name, const std::vector<Region>& regions,
              double rate);
  void op_begin(DeviceState& d, const std::string& name);
  void op_end(DeviceState& d);
  uint64_t range_start(DeviceState& d, const std::string& label);
  void range_end(DeviceState& d, uint64_t id, const std::string& label);

  uint32_t stage_of(int32_t layer) const;
  DeviceState& device_for(int32_t layer);
  const TensorPlacement& local_value(DeviceState& d, uint32_t v);
  std::optional<TensorPlacement> take_grad(DeviceState& d, uint32_t v);
  TensorPlacement& ensure_grad(DeviceState& d, uint32_t v);
  void drop_value(uint32_t v);
  void drop_everywhere(uint32_t v);

  void init_device(DeviceState& d);
  void upload_inputs(DeviceState& d);
  void finish_iteration(DeviceState& d);
  void forward();
  void backward();
  void optimizer(DeviceState& d);
  void plant_heavy(DeviceState& d);

  const WorkloadSpec& spec_;
  Graph g_;
  double scale_ = 1.0;
  std::vector<std::unique_ptr<DeviceState>> devs_;
  // Devices taking part in the current pass: one replica, or all stages.
  std::vector<DeviceState*> active_;
  std::vector<int> uses_left_;
  std::map<std::string, std::shared_ptr<const CallStack>> stacks_;
  std::map<std::string, uint64_t> accesses_by_kernel_;
  std::string current_op_;
  uint64_t current_op_id_ = 0;
  static constexpr uint64_t kHostBuffer = 0x10000000;
};

TensorPlacement Generator::alloc(DeviceState& d, uint64_t bytes) {
  auto r = d.alloc.alloc(bytes);
  if (r.new_object) {
    emit(d, EventKind::DeviceMalloc, *r.new_object);
    tick(d);
  }
  emit(d, EventKind::TensorAlloc,
       TensorEventInfo{r.tensor.tensor_id, r.tensor.object_id, r.tensor.address,
                       r.tensor.size_bytes, TensorAction::Alloc});
  tick(d);
  return r.tensor;
}

void Generator::release(DeviceState& d, const TensorPlacement& t) {
  d.alloc.free(t.tensor_id);
  emit(d, EventKind::TensorReclaim,
       TensorEventInfo{t.tensor_id, t.object_id, t.address, t.size_bytes,
                       TensorAction::Reclaim});
  tick(d);
}

// Loads a group the way a checkpoint loader does: one staging buffer for the
// whole group is allocated and released, and the tensors are then carved out
// of the chunk it left behind.
std::vector<TensorPlacement> Generator::alloc_packed(DeviceState& d,
                                                     const std::vector<uint64_t>& sizes) {
  uint64_t total = 0;
  for (auto s : sizes) total += CachingAllocator::round_size(s);
  release(d, alloc(d, total));
  std::vector<TensorPlacement> out;
  for (auto s : sizes) out.push_back(alloc(d, s));
  return out;
}

std::shared_ptr<const CallStack> Generator::stack_for(const std::string& kernel) {
  auto it = stacks_.find(kernel);
  if (it != stacks_.end()) return it->second;
  const auto line = static_cast<uint32_t>(std::hash<std::string>{}(current_op_) % 400 + 20);
  CallStack s;
  s.frames.push_back(Frame{FrameLevel::Python, "main", "run.py", 12});
  s.frames.push_back(Frame{FrameLevel::Python, std::string(model_name(spec_.model)) + ".forward",
                           "model.py", line});
  s.frames.push_back(Frame{FrameLevel::Framework, "ops::" + current_op_, "ops/dispatch.cpp", 88});
  s.frames.push_back(Frame{FrameLevel::Native, "launch_" + kernel, "kernels.cu", 301});
  auto ptr = std::make_shared<const CallStack>(std::move(s));
  stacks_.emplace(kernel, ptr);
  return ptr;
}

void Generator::kernel(DeviceState& d, const std::string& name,
                       const std::vector<Region>& regions, double rate) {
  std::vector<uint64_t> touched;
  uint64_t touched_bytes = 0;
  for (const auto& r : regions) {
    if (std::find(touched.begin(), touched.end(), r.tensor.object_id) == touched.end()) {
      touched.push_back(r.tensor.object_id);
    }
    touched_bytes += r.length;
  }
  std::vector<uint64_t> args = touched;
  if (spec_.untouched_arg_rate > 0) {
    std::vector<uint64_t> idle;
    for (const auto& c : d.alloc.chunks()) {
      if (std::find(touched.begin(), touched.end(), c.object_id) == touched.end()) {
        idle.push_back(c.object_id);
      }
    }
    const double r = spec_.untouched_arg_rate;
    auto want = static_cast<std::size_t>(std::llround(touched.size() * r / (1.0 - r)));
    want = std::min(want, idle.size());
    std::shuffle(idle.begin(), idle.end(), d.rng);
    args.insert(args.end(), idle.begin(), idle.begin() + static_cast<std::ptrdiff_t>(want));
  }

  const uint64_t grid = d.next_grid++;
  std::vector<MemAccessInfo> accesses;
  for (const auto& r : regions) {
    for (auto [addr, size] : sample_granules(r.tensor.address + r.offset, r.length, rate, d.rng())) {
      accesses.push_back(MemAccessInfo{grid, addr, size, r.write, MemSpace::Global});
    }
  }
  accesses_by_kernel_[name] += accesses.size();

  const auto raw_ns = spec_.kernel_overhead_ns +
                      static_cast<uint64_t>(static_cast<double>(touched_bytes) /
                                            spec_.kernel_bytes_per_ns);
  const uint64_t duration = std::max<uint64_t>(1000, (raw_ns + 999) / 1000 * 1000);
  const uint64_t start = d.now;

  KernelLaunchInfo launch;
  launch.kernel_name = name;
  launch.grid_id = grid;
  launch.grid_dims =
      Dim3{static_cast<uint32_t>(std::clamp<uint64_t>(touched_bytes / 4096, 1, 65535)), 1, 1};
  launch.block_dims = Dim3{256, 1, 1};
  launch.arg_objects = std::move(args);
  emit(d, EventKind::KernelLaunch, std::move(launch), stack_for(name));
  if (spec_.device_ops) emit(d, EventKind::BlockEnter, DeviceOpInfo{grid, 0});

  const std::size_t n = accesses.size();
  for (std::size_t i = 0; i < n; ++i) {
    d.now = start + (duration * i / n) / 1000 * 1000;
    if (spec_.device_ops && i == n / 2) {
      emit(d, EventKind::SharedAccess, MemAccessInfo{grid, 0, 32, true, MemSpace::Shared});
      emit(d, EventKind::Barrier, DeviceOpInfo{grid, 0});
      emit(d, EventKind::SharedAccess, MemAccessInfo{grid, 0, 32, false, MemSpace::Shared});
    }
    emit(d, EventKind::GlobalAccess, accesses[i]);
  }
  d.now = start + duration;
  if (spec_.device_ops) emit(d, EventKind::BlockExit, DeviceOpInfo{grid, 0});
  emit(d, EventKind::KernelComplete, KernelCompleteInfo{grid});
  tick(d);
}

void Generator::op_begin(DeviceState& d, const std::string& name) {
  current_op_ = name;
  current_op_id_ = d.next_op++;
  emit(d, EventKind::OperatorStart, OperatorInfo{current_op_id_, name});
  tick(d);
}

void Generator::op_end(DeviceState& d) {
  emit(d, EventKind::OperatorEnd, OperatorInfo{current_op_id_, current_op_});
  tick(d);
}

uint64_t Generator::range_start(DeviceState& d, const std::string& label) {
  const uint64_t id = d.next_range++;
  emit(d, EventKind::RangeStart, RangeMarkerInfo{id, label});
  tick(d);
  return id;
}

void Generator::range_end(DeviceState& d, uint64_t id, const std::string& label) {
  emit(d, EventKind::RangeEnd, RangeMarkerInfo{id, label});
  tick(d);
}

uint32_t Generator::stage_of(int32_t layer) const {
  if (replicated()) return 0;
  const auto stages = static_cast<int64_t>(devs_.size());
  if (layer < 0) return 0;
  if (layer >= g_.layers) return static_cast<uint32_t>(stages - 1);
  return static_cast<uint32_t>(static_cast<int64_t>(layer) * stages / g_.layers);
}

DeviceState& Generator::device_for(int32_t layer) {
  if (replicated()) return *active_.front();
  return *devs_[stage_of(layer)];
}

const TensorPlacement& Generator::local_value(DeviceState& d, uint32_t v) {
  auto it = d.values.find(v);
  if (it != d.values.end()) return it->second;
  // Pipeline hand-off from the stage that produced it.
  for (auto* other : active_) {
    if (other == &d) continue;
    auto src = other->values.find(v);
    if (src == other->values.end()) continue;
    d.now = std::max(d.now, other->now);
    auto t = alloc(d, scaled(g_.values[v].bytes));
    emit(d, EventKind::MemCopy,
         MemCopyInfo{src->second.address, t.address, t.size_bytes, CopyDirection::DeviceToDevice});
    tick(d);
    return d.values.emplace(v, t).first->second;
  }
  throw Error(ErrorCode::SpecError, "value '" + g_.values[v].name + "' used before it exists");
}

std::optional<TensorPlacement> Generator::take_grad(DeviceState& d, uint32_t v) {
  std::optional<TensorPlacement> result;
  if (auto it = d.grads.find(v); it != d.grads.end()) {
    result = it->second;
    d.grads.erase(it);
  }
  for (auto* other : active_) {
    if (other == &d) continue;
    auto it = other->grads.find(v);
    if (it == other->grads.end()) continue;
    d.now = std::max(d.now, other->now);
    auto t = alloc(d, it->second.size_bytes);
    emit(d, EventKind::MemCopy,
         MemCopyInfo{it->second.address, t.address, t.size_bytes, CopyDirection::DeviceToDevice});
    tick(d);
    release(*other, it->second);
    other->grads.erase(it);
    if (!result) {
      result = t;
    } else {
      op_begin(d, "grad_accumulate");
      kernel(d, "grad_accumulate",
             {Region{t, 0, t.size_bytes, false}, Region{*result, 0, result->size_bytes, true}},
             spec_.access_sample_rate);
      op_end(d);
      release(d, t);
    }
  }
  return result;
}

TensorPlacement& Generator::ensure_grad(DeviceState& d, uint32_t v) {
  auto it = d.grads.find(v);
  if (it != d.grads.end()) return it->second;
  auto t = alloc(d, scaled(g_.values[v].bytes));
  if (g_.values[v].param) host(d, EventKind::MemSet, "memset_async", t.size_bytes);
  return d.grads.emplace(v, t).first->second;
}

void Generator::drop_value(uint32_t v) {
  for (auto* d : active_) {
    auto it = d->values.find(v);
    if (it == d->values.end()) continue;
    release(*d, it->second);
    d->values.erase(it);
  }
}

void Generator::init_device(DeviceState& d) {
  host(d, EventKind::DriverCall, "context_create", d.device);
  host(d, EventKind::DriverCall, "module_load", 0);
  host(d, EventKind::RuntimeCall, "stream_create", 0);
  host(d, EventKind::BatchMemOp, "stream_batch_mem_op", 1);
  for (const auto& group : g_.param_groups) {
    std::vector<uint32_t> mine;
    for (auto p : group) {
      if (replicated() || stage_of(g_.values[p].layer) == d.device) mine.push_back(p);
    }
    if (mine.empty()) continue;
    std::vector<uint64_t> sizes;
    for (auto p : mine) sizes.push_back(scaled(g_.values[p].bytes));
    auto placed = alloc_packed(d, sizes);
    for (std::size_t i = 0; i < mine.size(); ++i) {
      d.values[mine[i]] = placed[i];
      emit(d, EventKind::MemCopy,
           MemCopyInfo{kHostBuffer, placed[i].address, placed[i].size_bytes,
                       CopyDirection::HostToDevice});
      tick(d);
    }
    if (spec_.mode == RunMode::Train) {
      // Optimizer moments, packed like the weights they track.
      std::vector<uint64_t> moments;
      for (auto s : sizes) {
        moments.push_back(s);
        moments.push_back(s);
      }
      auto m = alloc_packed(d, moments);
      for (std::size_t i = 0; i < mine.size(); ++i) d.moments[mine[i]] = {m[2 * i], m[2 * i + 1]};
    }
  }
  host(d, EventKind::ResourceOp, "event_create", 0);
}

void Generator::upload_inputs(DeviceState& d) {
  for (std::size_t i = 0; i < g_.inputs.size(); ++i) {
    const uint32_t v = g_.inputs[i];
    // The first input feeds the first stage; labels feed the loss.
    if (stage_of(i == 0 ? -1 : g_.layers) != (replicated() ? 0 : d.device)) continue;
    auto t = alloc(d, scaled(g_.values[v].bytes));
    emit(d, EventKind::MemCopy,
         MemCopyInfo{kHostBuffer, t.address, t.size_bytes, CopyDirection::HostToDevice});
    tick(d);
    d.values[v] = t;
  }
}

void Generator::finish_iteration(DeviceState& d) {
  if (auto out = d.values.find(g_.output); out != d.values.end()) {
    emit(d, EventKind::MemCopy,
         MemCopyInfo{out->second.address, kHostBuffer, out->second.size_bytes,
                     CopyDirection::DeviceToHost});
    tick(d);
  }
  host(d, EventKind::Sync, "device_synchronize", 0);
  std::vector<uint32_t> left;
  for (const auto& [v, t] : d.values) {
    if (!g_.values[v].param) left.push_back(v);
  }
  for (auto v : left) {
    release(d, d.values.at(v));
    d.values.erase(v);
  }
  host(d, EventKind::ResourceOp, "event_record", 0);
}

void Generator::forward() {
  const bool train = spec_.mode == RunMode::Train;
  uses_left_.assign(g_.values.size(), 0);
  for (const auto& n : g_.nodes) {
    if (!n.in_place) {
      for (auto v : n.inputs) ++uses_left_[v];
    }
  }
  std::vector<uint64_t> pass_ranges;
  for (auto* d : active_) pass_ranges.push_back(range_start(*d, "forward"));

  uint64_t layer_range = 0;
  bool layer_open = false;
  DeviceState* layer_dev = nullptr;
  for (std::size_t i = 0; i < g_.nodes.size(); ++i) {
    const Node& n = g_.nodes[i];
    DeviceState& d = device_for(n.layer);
    if (!layer_open && spec_.annotate_layer >= 0 && n.layer == spec_.annotate_layer) {
      d.now = std::max(d.now, layer_dev ? layer_dev->now : d.now);
      layer_range = range_start(d, g_.layer_label);
      layer_open = true;
      layer_dev = &d;
    }
    if (i == 0 || g_.nodes[i - 1].op != n.op) op_begin(d, g_.ops[n.op].name);

    std::vector<Region> regions;
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      const auto& t = local_value(d, n.inputs[k]);
      const uint64_t tail =
          n.tail_bytes[k] ? std::min(scaled(n.tail_bytes[k]), t.size_bytes) : t.size_bytes;
      regions.push_back(Region{t, t.size_bytes - tail, tail, n.in_place});
    }
    if (n.output) {
      auto t = alloc(d, scaled(g_.values[*n.output].bytes));
      d.values[*n.output] = t;
      regions.push_back(Region{t, 0, t.size_bytes, true});
    }
    kernel(d, n.kernel, regions, spec_.access_sample_rate);
    if (i + 1 == g_.nodes.size() || g_.nodes[i + 1].op != n.op) op_end(d);

    if (!train && !n.in_place) {
      for (auto v : n.inputs) {
        if (--uses_left_[v] == 0 && !g_.values[v].param && v != g_.output) drop_value(v);
      }
    }
    if (layer_open &&
        (i + 1 == g_.nodes.size() || g_.nodes[i + 1].layer != spec_.annotate_layer)) {
      range_end(*layer_dev, layer_range, g_.layer_label);
      layer_open = false;
    }
  }
  for (std::size_t i = 0; i < active_.size(); ++i) {
    range_end(*active_[i], pass_ranges[i], "forward");
  }
}

void Generator::backward() {
  std::vector<uint64_t> pass_ranges;
  for (auto* d : active_) pass_ranges.push_back(range_start(*d, "backward"));

  if (g_.loss) {
    DeviceState& d = device_for(g_.layers);
    op_begin(d, "loss_backward");
    auto& seed = ensure_grad(d, *g_.loss);
    kernel(d, "fill_ones", {Region{seed, 0, seed.size_bytes, true}}, spec_.access_sample_rate);
    op_end(d);
  }

  for (std::size_t i = g_.nodes.size(); i-- > 0;) {
    const Node& n = g_.nodes[i];
    DeviceState& d = device_for(n.layer);
    const std::string op_name = g_.ops[n.op].name + "_backward";
    if (n.in_place) {
      if (auto it = d.grads.find(n.inputs[0]); it != d.grads.end()) {
        op_begin(d, op_name);
        kernel(d, n.kernel, {Region{it->second, 0, it->second.size_bytes, true}},
               spec_.access_sample_rate);
        op_end(d);
      }
      continue;
    }
    const uint32_t out = *n.output;
    auto grad_out = take_grad(d, out);
    if (grad_out) {
      std::optional<uint32_t> activation;
      std::vector<uint32_t> params;
      for (auto v : n.inputs) {
        if (g_.values[v].param) {
          params.push_back(v);
        } else if (!activation) {
          activation = v;
        }
      }
      bool any = false;
      for (auto v : n.inputs) any = any || g_.values[v].needs_grad;
      if (any) {
        op_begin(d, op_name);
        for (auto v : n.inputs) {
          if (!g_.values[v].needs_grad) continue;
          if (g_.values[v].param) {
            std::vector<Region> regions{Region{*grad_out, 0, grad_out->size_bytes, false}};
            if (activation) {
              const auto& a = local_value(d, *activation);
              regions.push_back(Region{a, 0, a.size_bytes, false});
            }
            auto& gp = ensure_grad(d, v);
            regions.push_back(Region{gp, 0, gp.size_bytes, true});
            kernel(d, n.kernel + "_wgrad", regions, spec_.access_sample_rate);
          } else {
            std::vector<Region> regions{Region{*grad_out, 0, grad_out->size_bytes, false}};
            for (auto p : params) {
              const auto& w = local_value(d, p);
              regions.push_back(Region{w, 0, w.size_bytes, false});
            }
            auto& gi = ensure_grad(d, v);
            regions.push_back(Region{gi, 0, gi.size_bytes, true});
            kernel(d, n.kernel + "_dgrad", regions, spec_.access_sample_rate);
          }
        }
        op_end(d);
      }
      release(d, *grad_out);
    }
    drop_value(out);
  }
  for (std::size_t i = 0; i < active_.size(); ++i) {
    range_end(*active_[i], pass_ranges[i], "backward");
  }
}

void Generator::optimizer(DeviceState& d) {
  for (const auto& group : g_.param_groups) {
    std::vector<uint32_t> mine;
    for (auto p : group) {
      if (d.grads.count(p)) mine.push_back(p);
    }
    for (std::size_t base = 0; base < mine.size(); base += 4) {
      const std::size_t end = std::min(mine.size(), base + 4);
      if (spec_.parallelism == Parallelism::DP) {
        op_begin(d, "allreduce");
        for (std::size_t i = base; i < end; ++i) {
          const auto& gr = d.grads.at(mine[i]);
          kernel(d, "allreduce_ring", {Region{gr, 0, gr.size_bytes, true}},
                 spec_.access_sample_rate);
        }
        op_end(d);
      }
      op_begin(d, "optimizer_step");
      for (std::size_t i = base; i < end; ++i) {
        const auto& w = d.values.at(mine[i]);
        const auto& gr = d.grads.at(mine[i]);
        const auto& [m, v] = d.moments.at(mine[i]);
        kernel(d, "adam_update",
               {Region{gr, 0, gr.size_bytes, false}, Region{m, 0, m.size_bytes, true},
                Region{v, 0, v.size_bytes, true}, Region{w, 0, w.size_bytes, true}},
               spec_.access_sample_rate);
      }
      op_end(d);
      for (std::size_t i = base; i < end; ++i) {
        release(d, d.grads.at(mine[i]));
        d.grads.erase(mine[i]);
      }
    }
  }
}

// One kernel whose access count is strictly above every other kernel name's
// total so far.
void Generator::plant_heavy(DeviceState& d) {
  uint64_t most = 0;
  for (const auto& [name, count] : accesses_by_kernel_) most = std::max(most, count);
  const std::string name(kHeavyKernelName);
  auto t = alloc(d, (most + 1) * kAccessGranule);
  current_op_ = "gather";
  op_begin(d, "gather");
  kernel(d, name, {Region{t, 0, t.size_bytes, false}}, 1.0);
  op_end(d);
  release(d, t);
}

std::vector<Event> Generator::run() {
  const uint32_t ndev = spec_.devices;
  if (spec_.parallelism == Parallelism::TP) scale_ = 1.0 / ndev;
  for (uint32_t dev = 0; dev < ndev; ++dev) {
    // Replicas share a seed so that their streams match.
    const uint64_t seed = replicated() ? spec_.seed : spec_.seed + dev;
    devs_.push_back(std::make_unique<DeviceState>(dev, seed));
  }

  auto run_iterations = [&]() {
    for (uint32_t it = 0; it < spec_.iterations; ++it) {
      for (auto* d : active_) upload_inputs(*d);
      forward();
      if (spec_.mode == RunMode::Train) {
        backward();
        for (auto* d : active_) optimizer(*d);
      }
      for (auto* d : active_) finish_iteration(*d);
    }
  };
  if (replicated()) {
    for (auto& d : devs_) {
      active_ = {d.get()};
      init_device(*d);
      run_iterations();
    }
  } else {
    active_.clear();
    for (auto& d : devs_) active_.push_back(d.get());
    for (auto* d : active_) init_device(*d);
    run_iterations();
  }
  if (spec_.plant_heavy_kernel) {
    active_ = {devs_.front().get()};
    plant_heavy(*devs_.front());
  }

  // Merge per-device streams by time; ties go to the lower device.
  std::vector<Event> merged;
  std::size_t total = 0;
  for (auto& d : devs_) total += d->events.size();
  merged.reserve(total);
  std::vector<std::size_t> pos(devs_.size(), 0);
  while (merged.size() < total) {
    std::size_t best = devs_.size();
    for (std::size_t i = 0; i < devs_.size(); ++i) {
      if (pos[i] == devs_[i]->events.size()) continue;
      if (best == devs_.size() ||
          devs_[i]->events[pos[i]].timestamp_ns < devs_[best]->events[pos[best]].timestamp_ns) {
        best = i;
      }
    }
    merged.push_back(std::move(devs_[best]->events[pos[best]++]));
    merged.back().seq = merged.size() - 1;
  }
  return merged;
}

uint64_t parse_u64(std::string_view key, std::string_view value) {
  uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::SpecError,
                "bad value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

uint32_t parse_u32(std::string_view key, std::string_view value) {
  auto v = parse_u64(key, value);
  if (v > UINT32_MAX) {
    throw Error(ErrorCode::SpecError, "value out of range for " + std::string(key));
  }
  return static_cast<uint32_t>(v);
}

double parse_double(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    std::string s(value);
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::SpecError,
                "bad value '" + std::string(value) + "' for " + std::string(key));
  }
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw Error(ErrorCode::SpecError,
              "bad value '" + std::string(value) + "' for " + std::string(key));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

void fill_defaults(WorkloadSpec& s) {
  switch (s.model) {
    case ModelKind::CnnToy:
      if (!s.hidden) s.hidden = 64;
      if (!s.seq_len) s.seq_len = 16;
      if (!s.vocab) s.vocab = 10;
      break;
    case ModelKind::TransformerEncoderToy:
    case ModelKind::TransformerDecoderToy:
      if (!s.hidden) s.hidden = 64;
      if (!s.seq_len) s.seq_len = 32;
      if (!s.vocab) s.vocab = 512;
      break;
  }
}

}  // namespace

std::string_view model_name(ModelKind model) {
  switch (model) {
    case ModelKind::CnnToy: return "cnn";
    case ModelKind::TransformerEncoderToy: return "encoder";
    case ModelKind::TransformerDecoderToy: return "decoder";
  }
  return "cnn";
}

std::string_view parallelism_name(Parallelism p) {
  switch (p) {
    case Parallelism::None: return "none";
    case Parallelism::DP: return "dp";
    case Parallelism::TP: return "tp";
    case Parallelism::PP: return "pp";
  }
  return "none";
}

std::vector<std::string> preset_names() { return {"cnn-toy", "bert-toy", "gpt2-toy"}; }

WorkloadSpec preset_spec(std::string_view name) {
  WorkloadSpec s;
  s.access_sample_rate = 0.01;
  if (name == "cnn-toy") {
    // Weights dominate and one kernel touches nearly all of them: working
    // set close to the footprint.
    s.model = ModelKind::CnnToy;
    s.layers = 8;
    s.batch = 2;
    s.hidden = 256;
    s.seq_len = 32;
    s.vocab = 10;
  } else if (name == "bert-toy") {
    s.model = ModelKind::TransformerEncoderToy;
    s.layers = 12;
    s.batch = 8;
    s.hidden = 256;
    s.seq_len = 128;
    s.vocab = 4096;
  } else if (name == "gpt2-toy") {
    s.model = ModelKind::TransformerDecoderToy;
    s.layers = 12;
    s.batch = 1;
    s.hidden = 512;
    s.seq_len = 128;
    s.vocab = 4096;
  } else {
    throw Error(ErrorCode::SpecError, "unknown preset '" + std::string(name) + "'");
  }
  return s;
}

void check_spec(const WorkloadSpec& s) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::SpecError, m); };
  if (s.layers == 0) fail("layers must be >= 1");
  if (s.batch == 0) fail("batch must be >= 1");
  if (s.iterations == 0) fail("iterations must be >= 1");
  if (s.devices == 0) fail("devices must be >= 1");
  if (s.parallelism == Parallelism::None && s.devices != 1) {
    fail("parallelism none requires devices = 1");
  }
  if (s.parallelism != Parallelism::None && s.devices < 2) {
    fail("parallelism " + std::string(parallelism_name(s.parallelism)) +
         " requires devices >= 2");
  }
  if (!(s.access_sample_rate > 0.0 && s.access_sample_rate <= 1.0)) {
    fail("access_sample_rate must be in (0, 1]");
  }
  if (!(s.untouched_arg_rate >= 0.0 && s.untouched_arg_rate < 1.0)) {
    fail("untouched_arg_rate must be in [0, 1)");
  }
  if (!(s.kernel_bytes_per_ns > 0.0)) fail("kernel_bytes_per_ns must be positive");
  if (s.annotate_layer >= static_cast<int64_t>(s.layers)) {
    fail("annotate_layer must be below layers");
  }
}

void apply_spec_setting(WorkloadSpec& s, std::string_view key, std::string_view value) {
  if (key == "preset") {
    s = preset_spec(value);
  } else if (key == "model") {
    if (value == "cnn" || value == "cnn-toy") {
      s.model = ModelKind::CnnToy;
    } else if (value == "encoder" || value == "transformer-encoder") {
      s.model = ModelKind::TransformerEncoderToy;
    } else if (value == "decoder" || value == "transformer-decoder") {
      s.model = ModelKind::TransformerDecoderToy;
    } else {
      throw Error(ErrorCode::SpecError, "unknown model '" + std::string(value) + "'");
    }
  } else if (key == "layers") {
    s.layers = parse_u32(key, value);
  } else if (key == "batch") {
    s.batch = parse_u32(key, value);
  } else if (key == "mode") {
    if (value == "inference") {
      s.mode = RunMode::Inference;
    } else if (value == "train") {
      s.mode = RunMode::Train;
    } else {
      throw Error(ErrorCode::SpecError, "mode must be inference or train");
    }
  } else if (key == "devices") {
    s.devices = parse_u32(key, value);
  } else if (key == "parallelism") {
    if (value == "none") {
      s.parallelism = Parallelism::None;
    } else if (value == "dp") {
      s.parallelism = Parallelism::DP;
    } else if (value == "tp") {
      s.parallelism = Parallelism::TP;
    } else if (value == "pp") {
      s.parallelism = Parallelism::PP;
    } else {
      throw Error(ErrorCode::SpecError, "parallelism must be none, dp, tp or pp");
    }
  } else if (key == "seed") {
    s.seed = parse_u64(key, value);
  } else if (key == "access_sample_rate") {
    s.access_sample_rate = parse_double(key, value);
  } else if (key == "untouched_arg_rate") {
    s.untouched_arg_rate = parse_double(key, value);
  } else if (key == "hidden") {
    s.hidden = parse_u32(key, value);
  } else if (key == "seq_len") {
    s.seq_len = parse_u32(key, value);
  } else if (key == "vocab") {
    s.vocab = parse_u32(key, value);
  } else if (key == "iterations") {
    s.iterations = parse_u32(key, value);
  } else if (key == "kernel_overhead_ns") {
    s.kernel_overhead_ns = parse_u64(key, value);
  } else if (key == "kernel_bytes_per_ns") {
    s.kernel_bytes_per_ns = parse_double(key, value);
  } else if (key == "annotate_layer") {
    if (value == "-1") {
      s.annotate_layer = -1;
    } else {
      s.annotate_layer = static_cast<int32_t>(parse_u32(key, value));
    }
  } else if (key == "plant_heavy_kernel") {
    s.plant_heavy_kernel = parse_bool(key, value);
  } else if (key == "device_ops") {
    s.device_ops = parse_bool(key, value);
  } else {
    throw Error(ErrorCode::SpecError, "unknown spec key '" + std::string(key) + "'");
  }
}

WorkloadSpec parse_spec(std::string_view text) {
  WorkloadSpec s;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::SpecError,
                  "line " + std::to_string(line_no) + ": expected key=value")
          .with_line(line_no);
    }
    try {
      apply_spec_setting(s, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (Error& e) {
      throw e.with_line(line_no);
    }
  }
  return s;
}

std::vector<std::pair<uint64_t, uint32_t>> sample_granules(uint64_t address, uint64_t size_bytes,
                                                           double rate, uint64_t jitter_seed) {
  std::vector<std::pair<uint64_t, uint32_t>> out;
  if (size_bytes == 0) return out;
  const uint64_t granules = (size_bytes + kAccessGranule - 1) / kAccessGranule;
  auto n = static_cast<uint64_t>(std::ceil(rate * static_cast<double>(granules) - 1e-9));
  n = std::clamp<uint64_t>(n, 1, granules);
  std::mt19937_64 rng(jitter_seed);
  out.reserve(n);
  // One granule from each of n equal strata.
  for (uint64_t i = 0; i < n; ++i) {
    const uint64_t lo = i * granules / n;
    const uint64_t hi = (i + 1) * granules / n;
    const uint64_t pick = hi - lo > 1 ? lo + rng() % (hi - lo) : lo;
    const uint64_t off = pick * kAccessGranule;
    const auto len = static_cast<uint32_t>(std::min<uint64_t>(kAccessGranule, size_bytes - off));
    out.emplace_back(address + off, len);
  }
  return out;
}

std::vector<Event> generate_trace(const WorkloadSpec& input) {
  check_spec(input);
  WorkloadSpec spec = input;
  fill_defaults(spec);
  const bool tp = spec.parallelism == Parallelism::TP;
  Graph g = spec.model == ModelKind::CnnToy
                ? build_cnn(spec, tp)
                : build_transformer(spec, spec.model == ModelKind::TransformerDecoderToy, tp);
  Generator gen(spec, std::move(g));
  return gen.run();
}

}  // namespace accelprof
