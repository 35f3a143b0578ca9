/*
 * Copyright The accelprof authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <doctest.h>

#include <random>

#include "accelprof/engine.hpp"
#include "accelprof/error.hpp"
#include "accelprof/range_filter.hpp"
#include "accelprof/tool.hpp"
#include "accelprof/workload.hpp"
#include "oracles.hpp"
#include "random_specs.hpp"
#include "trace_builder.hpp"

using namespace accelprof;
using accelprof::testing::TraceBuilder;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](std::string_view key) -> std::optional<std::string> {
    auto it = vars.find(std::string(key));
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an accelprof::Error");
  return ErrorCode::InvalidArgument;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

class NullTool : public Tool {
 public:
  const ToolDescriptor& descriptor() const override {
    static const ToolDescriptor d{"null", "", false, false};
    return d;
  }
  Report on_finalize() override { return Report::object(); }
};

std::vector<uint64_t> seqs(const std::vector<Event>& events) {
  std::vector<uint64_t> out;
  for (const auto& e : events) out.push_back(e.seq);
  return out;
}

}  // namespace

TEST_SUITE("tool_api") {
  TEST_CASE("registration") {
    ToolRegistry reg;
    reg.register_tool({"kernel-freq", "", false, true},
                      [](const ToolOptions&) { return std::make_unique<NullTool>(); });
    CHECK(reg.contains("kernel-freq"));
    CHECK(reg.names() == std::vector<std::string>{"kernel-freq"});
    CHECK(code_of([&] {
            reg.register_tool({"kernel-freq", "", false, true},
                              [](const ToolOptions&) { return std::make_unique<NullTool>(); });
          }) == ErrorCode::DuplicateName);
    CHECK(code_of([&] { reg.descriptor("nope"); }) == ErrorCode::UnknownTool);
    CHECK(message_of([&] { reg.descriptor("nope"); }).find("kernel-freq") != std::string::npos);
  }

  TEST_CASE("built-in registry holds six tools with the declared merge contract") {
    const auto& reg = builtin_registry();
    CHECK(reg.size() == 6);
    const std::map<std::string, bool> mergeable = {
        {"kernel-freq", true},   {"memchar", true},      {"hotness", true},
        {"mem-timeline", false}, {"attribution", false}, {"uvm-profile", true}};
    for (const auto& [name, m] : mergeable) {
      CAPTURE(name);
      REQUIRE(reg.contains(name));
      CHECK(reg.descriptor(name).mergeable == m);
      ToolOptions opts;
      opts.knobs.enable(kMaxCalledKernel);
      auto tool = reg.create(name, opts);
      CHECK(tool->descriptor().name == name);
      CHECK((tool->fork() != nullptr) == m);
    }
  }

  TEST_CASE("tool selection precedence over every combination") {
    const auto& reg = builtin_registry();
    const std::vector<std::optional<std::string>> flags = {std::nullopt, "memchar", "bogus"};
    const std::vector<std::optional<std::string>> envs = {std::nullopt, "", "kernel-freq",
                                                          "bogus"};
    for (const auto& flag : flags) {
      for (const auto& env : envs) {
        CAPTURE(flag.value_or("<none>"));
        CAPTURE(env.value_or("<none>"));
        std::map<std::string, std::string> vars;
        if (env) vars["PASTA_TOOL"] = *env;
        auto call = [&] { return select_tool(reg, flag, env_of(vars)).name; };
        if (flag) {
          if (*flag == "bogus") {
            CHECK(code_of(call) == ErrorCode::UnknownTool);
          } else {
            CHECK(call() == *flag);
          }
        } else if (env && !env->empty()) {
          if (*env == "bogus") {
            CHECK(code_of(call) == ErrorCode::UnknownTool);
          } else {
            CHECK(call() == *env);
          }
        } else {
          CHECK(code_of(call) == ErrorCode::NoToolSpecified);
        }
      }
    }
  }

  TEST_CASE("knobs") {
    Knobs k;
    CHECK(!k.any());
    k.enable(kMaxCalledKernel);
    CHECK(k.enabled(kMaxCalledKernel));
    CHECK(!k.enabled(kMaxMemReferencedKernel));
    CHECK(code_of([&] { k.enable("MAX_FUN"); }) == ErrorCode::UnknownKnob);
    auto msg = message_of([&] { k.enable("MAX_FUN"); });
    CHECK(msg.find(std::string(kMaxMemReferencedKernel)) != std::string::npos);
    k.declare("MY_KNOB");
    k.enable_list("MY_KNOB,MAX_MEM_REFERENCED_KERNEL");
    CHECK(k.enabled_names().size() == 3);
    CHECK(k.known_names().size() == 3);
  }

  TEST_CASE("filter environment") {
    auto f = filter_from_env(env_of({{"START_GRID_ID", "4"}, {"END_GRID_ID", "9"}}));
    REQUIRE(f.grid_window.has_value());
    CHECK(f.grid_window->start == 4);
    CHECK(f.grid_window->end == 9);
    auto open_end = filter_from_env(env_of({{"START_GRID_ID", "4"}}));
    CHECK(open_end.grid_window->end == UINT64_MAX);
    CHECK(filter_from_env(env_of({})).empty());
    CHECK(code_of([&] { filter_from_env(env_of({{"START_GRID_ID", "x"}})); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([&] {
            filter_from_env(env_of({{"START_GRID_ID", "9"}, {"END_GRID_ID", "4"}}));
          }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("window [0,0] keeps only the first kernel") {
    TraceBuilder b;
    auto obj = b.malloc_object(0, 0x200000, 2 * kMiB);
    for (int i = 0; i < 3; ++i) b.kernel(0, "k" + std::to_string(i), {0x200000, 0x200020}, {obj});
    RangeFilter f;
    f.grid_window = GridWindow{0, 0};
    auto kept = apply_range_filter(b.events, f);
    // malloc + launch + 2 accesses + complete
    CHECK(seqs(kept) == std::vector<uint64_t>{0, 1, 2, 3, 4});
  }

  TEST_CASE("labels keep exactly the enclosed kernels") {
    TraceBuilder b;
    b.malloc_object(0, 0x200000, 2 * kMiB);
    std::vector<uint64_t> inside;
    for (int i = 0; i < 12; ++i) {
      uint64_t range = 0;
      if (i == 5) range = b.range_start(0, "transformer_layer");
      auto g = b.kernel(0, "k", {0x200000});
      if (i >= 5 && i <= 8) inside.push_back(g);
      if (i == 8) b.range_end(0, 1, "transformer_layer");
      (void)range;
    }
    RangeFilter f;
    f.marker_labels = {"transformer_layer"};
    std::vector<uint64_t> grids;
    for (const auto& e : apply_range_filter(b.events, f)) {
      if (e.kind == EventKind::KernelLaunch) grids.push_back(e.as<KernelLaunchInfo>().grid_id);
      if (is_kernel_scoped(e.kind) && e.kind != EventKind::KernelLaunch) {
        auto g = grid_of(e);
        CHECK(std::find(inside.begin(), inside.end(), *g) != inside.end());
      }
    }
    CHECK(grids == inside);
  }

  TEST_CASE("label filter over a generated annotated trace matches marker placement") {
    auto s = preset_spec("bert-toy");
    s.layers = 4;
    s.annotate_layer = 2;
    auto events = generate_trace(s);
    RangeFilter f;
    f.marker_labels = {"transformer_layer"};
    auto expect = testing::naive_in_range(events, std::nullopt, f.marker_labels);
    REQUIRE(!expect.empty());
    std::set<testing::KernelKey> got;
    for (const auto& e : apply_range_filter(events, f)) {
      if (e.kind == EventKind::KernelLaunch) got.insert({e.device, e.as<KernelLaunchInfo>().grid_id});
    }
    CHECK(got == expect);
  }

  TEST_CASE("empty filter is the identity") {
    auto events = generate_trace(preset_spec("cnn-toy"));
    CHECK(apply_range_filter(events, RangeFilter{}) == events);
  }

  TEST_CASE("narrowing the window never admits a new event") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 10; ++t) {
      auto events = generate_trace(testing::random_spec(rng));
      uint64_t lo = rng() % 20, hi = lo + rng() % 40;
      RangeFilter wide;
      wide.grid_window = GridWindow{lo, hi};
      RangeFilter narrow;
      const uint64_t nlo = lo + rng() % (hi - lo + 1);
      narrow.grid_window = GridWindow{nlo, nlo + rng() % (hi - nlo + 1)};
      auto w = seqs(apply_range_filter(events, wide));
      auto n = seqs(apply_range_filter(events, narrow));
      CHECK(std::includes(w.begin(), w.end(), n.begin(), n.end()));
    }
  }

  TEST_CASE("every delivered access still resolves to a live object") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 10; ++t) {
      auto spec = testing::random_spec(rng);
      auto events = generate_trace(spec);
      RangeFilter f;
      const uint64_t lo = rng() % 10;
      f.grid_window = GridWindow{lo, lo + rng() % 30};
      if (rng() % 2) f.marker_labels = {"transformer_layer", "conv_layer"};
      auto kept = apply_range_filter(events, f);
      LiveObjectTable table;
      uint64_t accesses = 0;
      for (const auto& e : kept) {
        table.apply_before(e);
        if (e.kind == EventKind::GlobalAccess) {
          ++accesses;
          CHECK(table.find_object(e.device, e.as<MemAccessInfo>().address).has_value());
        }
        table.apply_after(e);
      }
    }
  }

  TEST_CASE("dispatch routes by kind") {
    struct Recorder : NullTool {
      std::vector<std::string> calls;
      void on_kernel_launch(const DispatchRecord&) override { calls.push_back("launch"); }
      void on_kernel_complete(const DispatchRecord&) override { calls.push_back("complete"); }
      void on_mem_access(const DispatchRecord&) override { calls.push_back("access"); }
      void on_device_op(const DispatchRecord&) override { calls.push_back("op"); }
      void on_tensor_event(const DispatchRecord&) override { calls.push_back("tensor"); }
      void on_object_event(const DispatchRecord&) override { calls.push_back("object"); }
      void on_mem_copy(const DispatchRecord&) override { calls.push_back("copy"); }
      void on_op_boundary(const DispatchRecord&) override { calls.push_back("boundary"); }
      void on_range(const DispatchRecord&) override { calls.push_back("range"); }
      void on_host_call(const DispatchRecord&) override { calls.push_back("host"); }
    } rec;
    TraceBuilder b;
    auto obj = b.malloc_object(0, 0x200000, 2 * kMiB);
    b.tensor_alloc(0, obj, 0x200000, 512);
    auto r = b.range_start(0, "x");
    auto g = b.launch(0, "k");
    b.access(0, g, 0x200000);
    b.shared_access(0, g);
    b.device_op(0, EventKind::Barrier, g);
    b.complete(0, g);
    b.range_end(0, r, "x");
    b.push(0, EventKind::MemCopy, MemCopyInfo{1, 0x200000, 64, CopyDirection::HostToDevice});
    b.push(0, EventKind::OperatorStart, OperatorInfo{1, "op"});
    b.host_call(0, EventKind::Sync);
    for (const auto& e : b.events) dispatch(rec, DispatchRecord{&e, {}, {}, false});
    CHECK(rec.calls == std::vector<std::string>{"object", "tensor", "range", "launch", "access",
                                                "access", "op", "complete", "range", "copy",
                                                "boundary", "host"});
  }
}
