#include <benchmark/benchmark.h>

#include <random>

#include "edgesim/dataplane.hpp"
#include "edgesim/maxmin.hpp"
#include "edgesim/paths.hpp"
#include "edgesim/scenario.hpp"
#include "edgesim/sim.hpp"

using namespace edgesim;

namespace {

Topology grid(int n) {
  Topology topo;
  for (int i = 0; i < n * n; ++i) topo.add_switch(static_cast<Dpid>(i));
  PortIndex port = 1;
  auto connect = [&](int a, int b) {
    topo.add_link(NodeId::sw(a), port++, NodeId::sw(b), port++, 1e7, 5e-5);
  };
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (c + 1 < n) connect(r * n + c, r * n + c + 1);
      if (r + 1 < n) connect(r * n + c, (r + 1) * n + c);
    }
  }
  return topo;
}

Frame flow_frame(uint64_t key) {
  Frame f = Frame::make_l4(IpProto::Tcp, MacAddress::from_integer(key),
                           Ipv4Address::from_integer(0x0a000001),
                           Ipv4Address::from_integer(0x0a000002),
                           static_cast<uint16_t>(key), 5002);
  f.eth.dst = MacAddress::from_integer(key * 2654435761u);
  return f;
}

void BM_ShortestPath(benchmark::State& state) {
  const Topology topo = grid(static_cast<int>(state.range(0)));
  const NodeId src = NodeId::sw(0);
  const NodeId dst = NodeId::sw(topo.switches().size() - 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(shortest_path(topo, src, dst));
  }
}
BENCHMARK(BM_ShortestPath)->Arg(3)->Arg(5)->Arg(8);

void BM_AllSimplePaths(benchmark::State& state) {
  const Topology topo = grid(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        all_simple_paths(topo, NodeId::sw(0), NodeId::sw(8)));
  }
}
BENCHMARK(BM_AllSimplePaths);

void BM_SelectBucket(benchmark::State& state) {
  SelectGroup group;
  group.group_id = 1;
  for (int i = 0; i < 4; ++i) {
    group.buckets.push_back(Bucket{10.0 + i, {Output{PortIndex(i)}}});
  }
  uint64_t key = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_bucket(group, flow_frame(++key)));
  }
}
BENCHMARK(BM_SelectBucket);

void BM_FlowLookup(benchmark::State& state) {
  Switch sw(1, FailMode::Secure, {1, 2, 3});
  std::mt19937_64 rng(3);
  for (int i = 0; i < state.range(0); ++i) {
    FlowRule rule;
    rule.match.eth_dst = MacAddress::from_integer(rng() & 0xffff);
    rule.priority = static_cast<int32_t>(rng() % 10);
    rule.actions = {Output{2}};
    sw.apply_flow_mod(FlowModAdd{rule});
  }
  uint64_t key = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sw.lookup(1, flow_frame(++key)));
  }
}
BENCHMARK(BM_FlowLookup)->Arg(10)->Arg(100);

void BM_MaxMinAllocate(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::vector<double> capacity(6, 10e6);
  std::vector<MaxMinFlow> flows;
  for (int f = 0; f < 8; ++f) {
    MaxMinFlow flow;
    flow.elastic = f % 3 != 0;
    flow.rate_cap_bps = 2e6;
    flow.links = {rng() % 6, rng() % 6};
    flows.push_back(std::move(flow));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(maxmin_allocate(flows, capacity));
  }
}
BENCHMARK(BM_MaxMinAllocate);

void BM_RunScenario(benchmark::State& state) {
  const Scenario scn = Scenario::from_file(
      std::string(EDGESIM_SCENARIO_DIR) + "/failover_standalone.json");
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_scenario(scn));
  }
}
BENCHMARK(BM_RunScenario);

}  // namespace

BENCHMARK_MAIN();
