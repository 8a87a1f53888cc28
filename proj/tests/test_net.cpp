#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "edgesim/addr.hpp"
#include "edgesim/paths.hpp"
#include "edgesim/topology.hpp"
#include "oracles.hpp"

using namespace edgesim;

namespace {

Topology chain(std::initializer_list<double> weights) {
  // s0 - s1 - ... with the given symmetric weights
  Topology topo;
  size_t n = weights.size() + 1;
  for (size_t i = 0; i < n; ++i) topo.add_switch(i);
  PortIndex port = 1;
  size_t i = 0;
  for (double w : weights) {
    topo.add_link(NodeId::sw(i), port++, NodeId::sw(i + 1), port++, 1e6,
                  0.0001);
    topo.set_edge_weight(NodeId::sw(i), NodeId::sw(i + 1), w);
    topo.set_edge_weight(NodeId::sw(i + 1), NodeId::sw(i), w);
    ++i;
  }
  return topo;
}

void link_weighted(Topology& topo, Dpid a, PortIndex pa, Dpid b, PortIndex pb,
                   double w) {
  topo.add_link(NodeId::sw(a), pa, NodeId::sw(b), pb, 1e6, 0.0001);
  topo.set_edge_weight(NodeId::sw(a), NodeId::sw(b), w);
  topo.set_edge_weight(NodeId::sw(b), NodeId::sw(a), w);
}

}  // namespace

TEST_CASE("mac address integer mapping") {
  CHECK(MacAddress::parse("00:00:00:00:00:00")->as_integer() == 0);
  CHECK(MacAddress::parse("00:00:00:00:00:05")->as_integer() == 5);
  CHECK(MacAddress::parse("00:00:00:00:01:00")->as_integer() == 256);
  CHECK(MacAddress::broadcast().as_integer() == 0xffffffffffffull);
  CHECK(MacAddress::broadcast().is_broadcast());
  CHECK_FALSE(MacAddress::from_integer(12).is_broadcast());
}

TEST_CASE("mac round trip and injectivity") {
  std::mt19937_64 rng(7);
  std::set<uint64_t> ints;
  std::set<MacAddress> macs;
  for (int i = 0; i < 1000; ++i) {
    const auto mac = MacAddress::from_integer(rng() & 0xffffffffffffull);
    CHECK(MacAddress::parse(mac.to_string()) == mac);
    CHECK(MacAddress::from_integer(mac.as_integer()) == mac);
    ints.insert(mac.as_integer());
    macs.insert(mac);
  }
  CHECK(ints.size() == macs.size());
}

TEST_CASE("ipv4 round trip") {
  const auto a = Ipv4Address::parse("10.0.0.42");
  REQUIRE(a.has_value());
  CHECK(a->to_string() == "10.0.0.42");
  CHECK(Ipv4Address::parse(a->to_string()) == a);
  CHECK_FALSE(Ipv4Address::parse("10.0.0.999").has_value());
  CHECK_FALSE(Ipv4Address::parse("banana").has_value());
}

TEST_CASE("shortest path degenerate and forced cases") {
  Topology tri;
  for (Dpid d : {0, 1, 2}) tri.add_switch(d);
  link_weighted(tri, 0, 1, 1, 1, 1.0);  // A-B w1
  link_weighted(tri, 1, 2, 2, 1, 1.0);  // B-C w1
  link_weighted(tri, 0, 2, 2, 2, 3.0);  // A-C w3

  auto same = shortest_path(tri, NodeId::sw(0), NodeId::sw(0));
  REQUIRE(same.has_value());
  CHECK(*same == std::vector<NodeId>{NodeId::sw(0)});

  auto path = shortest_path(tri, NodeId::sw(0), NodeId::sw(2));
  REQUIRE(path.has_value());
  CHECK(*path ==
        std::vector<NodeId>{NodeId::sw(0), NodeId::sw(1), NodeId::sw(2)});
}

TEST_CASE("shortest path picks the cheap diamond arm") {
  // Expected value computed by exhaustive enumeration over the four
  // simple paths of the diamond.
  Topology topo;
  for (Dpid d : {0, 1, 2, 3}) topo.add_switch(d);
  link_weighted(topo, 0, 1, 1, 1, 2.0);  // A-B
  link_weighted(topo, 1, 2, 3, 1, 2.0);  // B-D
  link_weighted(topo, 0, 2, 2, 2, 1.0);  // A-C
  link_weighted(topo, 2, 3, 3, 2, 1.0);  // C-D

  auto expected = oracles::best_path_by_enumeration(topo, NodeId::sw(0),
                                                    NodeId::sw(3));
  auto actual = shortest_path(topo, NodeId::sw(0), NodeId::sw(3));
  REQUIRE(actual.has_value());
  CHECK(*actual ==
        std::vector<NodeId>{NodeId::sw(0), NodeId::sw(2), NodeId::sw(3)});
  CHECK(*actual == *expected);
}

TEST_CASE("shortest path reports unreachable destinations") {
  Topology topo;
  topo.add_switch(0);
  topo.add_switch(1);
  CHECK_FALSE(shortest_path(topo, NodeId::sw(0), NodeId::sw(1)).has_value());
}

TEST_CASE("all simple paths enumeration order") {
  Topology line = chain({1.0, 1.0});
  auto paths = all_simple_paths(line, NodeId::sw(0), NodeId::sw(2));
  REQUIRE(paths.size() == 1);
  CHECK(paths[0] ==
        std::vector<NodeId>{NodeId::sw(0), NodeId::sw(1), NodeId::sw(2)});

  Topology diamond;
  for (Dpid d : {0, 1, 2, 3}) diamond.add_switch(d);
  link_weighted(diamond, 0, 1, 1, 1, 1);
  link_weighted(diamond, 1, 3, 3, 1, 1);
  link_weighted(diamond, 0, 2, 2, 2, 1);
  link_weighted(diamond, 2, 3, 3, 2, 1);
  auto dpaths = all_simple_paths(diamond, NodeId::sw(0), NodeId::sw(3));
  REQUIRE(dpaths.size() == 2);
  CHECK(dpaths[0] ==
        std::vector<NodeId>{NodeId::sw(0), NodeId::sw(1), NodeId::sw(3)});
  CHECK(dpaths[1] ==
        std::vector<NodeId>{NodeId::sw(0), NodeId::sw(2), NodeId::sw(3)});

  Topology tri;
  for (Dpid d : {0, 1, 2}) tri.add_switch(d);
  link_weighted(tri, 0, 1, 1, 1, 1);
  link_weighted(tri, 1, 2, 2, 1, 1);
  link_weighted(tri, 0, 2, 2, 2, 1);
  auto tpaths = all_simple_paths(tri, NodeId::sw(0), NodeId::sw(2));
  REQUIRE(tpaths.size() == 2);
  CHECK(tpaths[0] ==
        std::vector<NodeId>{NodeId::sw(0), NodeId::sw(1), NodeId::sw(2)});
  CHECK(tpaths[1] == std::vector<NodeId>{NodeId::sw(0), NodeId::sw(2)});
}

TEST_CASE("powering a link off removes it from both path operations") {
  Topology tri;
  for (Dpid d : {0, 1, 2}) tri.add_switch(d);
  link_weighted(tri, 0, 1, 1, 1, 1);
  link_weighted(tri, 1, 2, 2, 1, 1);
  link_weighted(tri, 0, 2, 2, 2, 5);

  const auto direct = *tri.link_between(NodeId::sw(0), NodeId::sw(2));
  tri.set_link_power(direct, Power::Off);
  auto paths = all_simple_paths(tri, NodeId::sw(0), NodeId::sw(2));
  CHECK(paths.size() == 1);
  auto sp = shortest_path(tri, NodeId::sw(0), NodeId::sw(2));
  REQUIRE(sp.has_value());
  CHECK(sp->size() == 3);

  tri.set_link_power(direct, Power::On);
  CHECK(all_simple_paths(tri, NodeId::sw(0), NodeId::sw(2)).size() == 2);
}

TEST_CASE("dijkstra agrees with exhaustive enumeration on random graphs") {
  std::mt19937_64 rng(20240811);
  for (int trial = 0; trial < 200; ++trial) {
    Topology topo = oracles::random_graph(rng, 8);
    const auto n = topo.switches().size();
    std::uniform_int_distribution<Dpid> pick(0, n - 1);
    const NodeId src = NodeId::sw(pick(rng));
    const NodeId dst = NodeId::sw(pick(rng));
    auto expected = oracles::best_path_by_enumeration(topo, src, dst);
    auto actual = shortest_path(topo, src, dst);
    REQUIRE(expected.has_value() == actual.has_value());
    if (!actual) continue;
    // Integer weights keep the sums exact, so cost equality is exact.
    CHECK(oracles::path_weight(topo, *actual) ==
          oracles::path_weight(topo, *expected));
    CHECK(*actual == *expected);
  }
}

TEST_CASE("topology rejects inconsistent construction") {
  Topology topo;
  topo.add_switch(1);
  CHECK_THROWS(topo.add_switch(1));
  CHECK_THROWS(topo.add_link(NodeId::sw(1), 1, NodeId::sw(9), 1, 1e6, 0));
  topo.add_switch(2);
  topo.add_link(NodeId::sw(1), 1, NodeId::sw(2), 1, 1e6, 0);
  CHECK_THROWS(topo.add_link(NodeId::sw(1), 1, NodeId::sw(2), 2, 1e6, 0));
}
