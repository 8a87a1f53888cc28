#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "edgesim/controller.hpp"
#include "edgesim/paths.hpp"

using namespace edgesim;

namespace {

MacAddress mac(uint64_t v) { return MacAddress::from_integer(v); }
Ipv4Address ip(const char* s) { return *Ipv4Address::parse(s); }

// h1 - s1 - s2 - {h4, h5, h6}  (farm behind s2)
Topology farm_topology() {
  Topology topo;
  topo.add_switch(1);
  topo.add_switch(2);
  topo.add_host(HostInfo{"h1", mac(1), ip("10.0.0.1"), 1, 1}, 1e8, 5e-5);
  topo.add_host(HostInfo{"h4", mac(4), ip("10.0.0.4"), 2, 2}, 1e8, 5e-5);
  topo.add_host(HostInfo{"h5", mac(5), ip("10.0.0.5"), 2, 3}, 1e8, 5e-5);
  topo.add_host(HostInfo{"h6", mac(6), ip("10.0.0.6"), 2, 4}, 1e8, 5e-5);
  topo.add_link(NodeId::sw(1), 2, NodeId::sw(2), 1, 1e7, 5e-5);
  return topo;
}

FarmConfig farm_config(const Topology& topo, int initial_active = 0) {
  FarmConfig farm;
  farm.virtual_ip = ip("10.0.0.100");
  for (const char* name : {"h4", "h5", "h6"}) {
    const auto index = *topo.host_index_by_name(name);
    const HostInfo& info = topo.host(index);
    farm.servers.push_back(FarmServer{info.mac, info.ip, info.attached_dpid,
                                      info.attached_port, index});
    farm.segment.push_back(DeviceRef::host(index));
  }
  farm.initial_active = initial_active;
  farm.idle_timer_s = 3.0;
  farm.flows_per_server = 2;
  return farm;
}

PowerView all_on() {
  PowerView view;
  view.is_on = [](const DeviceRef&) { return true; };
  view.farm_traffic_active = [] { return false; };
  return view;
}

Controller make_ctrl(const Topology& topo, std::optional<FarmConfig> farm,
                     ControllerConfig cfg = {}) {
  return Controller(0, 1000, topo, cfg, std::move(farm));
}

Frame arp_to_virtual(uint64_t client_mac, const char* client_ip) {
  return Frame::make_arp_request(mac(client_mac), ip(client_ip),
                                 ip("10.0.0.100"));
}

size_t count_kind(const std::vector<ControlMessage>& msgs, auto pred) {
  size_t n = 0;
  for (const auto& m : msgs) n += pred(m);
  return n;
}

size_t flow_mods(const std::vector<ControlMessage>& msgs) {
  return count_kind(msgs, [](const ControlMessage& m) {
    return std::holds_alternative<FlowModMsg>(m.v);
  });
}
size_t group_mods(const std::vector<ControlMessage>& msgs) {
  return count_kind(msgs, [](const ControlMessage& m) {
    return std::holds_alternative<GroupModMsg>(m.v);
  });
}
size_t packet_outs(const std::vector<ControlMessage>& msgs) {
  return count_kind(msgs, [](const ControlMessage& m) {
    return std::holds_alternative<PacketOutMsg>(m.v);
  });
}

}  // namespace

TEST_CASE("arbitration by dpid follows the modular rule") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, std::nullopt);
  c.role_monitor("EQUAL:2:1\n", 0.0);
  CHECK(c.should_process(5));  // 5 mod 2 == 1
  CHECK_FALSE(c.should_process(4));

  Controller c0 = make_ctrl(topo, std::nullopt);
  c0.role_monitor("EQUAL:2:0\n", 0.0);
  CHECK_FALSE(c0.should_process(5));
  CHECK(c0.should_process(4));
}

TEST_CASE("arbitration by counter alternates exactly") {
  Topology topo = farm_topology();
  ControllerConfig cfg;
  cfg.scheme = ArbitrationScheme::ByCounter;
  Controller a(0, 10, topo, cfg, std::nullopt);
  Controller b(1, 20, topo, cfg, std::nullopt);
  a.role_monitor("EQUAL:2:0\n", 0.0);
  b.role_monitor("EQUAL:2:1\n", 0.0);

  // Both controllers observe the same 100 Packet-Ins.
  PacketInEvent ev{1, 1, arp_to_virtual(1, "10.0.0.1")};
  int handled_a = 0;
  int handled_b = 0;
  for (int i = 0; i < 100; ++i) {
    const auto before_a = a.processed_count();
    const auto before_b = b.processed_count();
    a.handle_packet_in(ev, all_on(), 0.0);
    b.handle_packet_in(ev, all_on(), 0.0);
    handled_a += a.processed_count() > before_a;
    handled_b += b.processed_count() > before_b;
  }
  CHECK(handled_a == 50);
  CHECK(handled_b == 50);
  CHECK(a.packet_in_count() == 100);
  CHECK(b.packet_in_count() == 100);
}

TEST_CASE("loop guard learns first sighting and suppresses looped floods") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, std::nullopt);
  CHECK(c.loop_guard(1, mac(1), MacAddress::broadcast(), 1) ==
        LoopGuardResult::Proceed);
  CHECK(c.loop_guard(1, mac(1), MacAddress::broadcast(), 2) ==
        LoopGuardResult::Suppress);
  // Unicast from a different port proceeds; the guard is broadcast-only.
  CHECK(c.loop_guard(1, mac(1), mac(2), 2) == LoopGuardResult::Proceed);
}

TEST_CASE("proxy arp picks servers by requester MAC modulo active count") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, farm_config(topo));
  REQUIRE(c.farm_n_active() == 3);

  auto [reply, activation] =
      c.generate_arp_reply(ip("10.0.0.1"), mac(7), all_on(), 0.0);
  REQUIRE(reply.arp.has_value());
  CHECK(reply.arp->opcode == ArpOp::Reply);
  CHECK(reply.arp->src_ip == ip("10.0.0.100"));
  CHECK(reply.arp->src_mac == mac(5));  // 7 mod 3 == 1 -> h5
  CHECK(reply.eth.dst == mac(7));
  CHECK(activation.empty());

  // Single active server always answers with server 0.
  Controller single = make_ctrl(topo, farm_config(topo, 1));
  for (uint64_t m = 1; m < 9; ++m) {
    auto [r, act] = single.generate_arp_reply(ip("10.0.0.1"), mac(m),
                                              all_on(), 0.0);
    CHECK(r.arp->src_mac == mac(4));
  }

  // Requesters 0..8 against three servers: an exact three-way split.
  std::map<uint64_t, int> hits;
  for (uint64_t m = 0; m < 9; ++m) {
    auto [r, act] = c.generate_arp_reply(ip("10.0.0.1"), mac(m), all_on(),
                                         0.0);
    hits[r.arp->src_mac.as_integer()]++;
  }
  CHECK(hits[4] == 3);
  CHECK(hits[5] == 3);
  CHECK(hits[6] == 3);
}

TEST_CASE("empty farm raises") {
  Topology topo = farm_topology();
  FarmConfig farm;
  farm.virtual_ip = ip("10.0.0.100");
  Controller c = make_ctrl(topo, farm);
  CHECK_THROWS_AS(c.generate_arp_reply(ip("10.0.0.1"), mac(1), all_on(), 0.0),
                  EmptyFarmError);
}

TEST_CASE("proxy arp requests power-on for cold servers") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, farm_config(topo));
  PowerView cold;
  cold.is_on = [](const DeviceRef& dev) {
    return dev.kind != DeviceRef::Kind::Host;
  };
  cold.farm_traffic_active = [] { return false; };
  auto [reply, activation] =
      c.generate_arp_reply(ip("10.0.0.1"), mac(7), cold, 0.0);
  CHECK(activation.size() == 3);  // all three cold servers in the segment
}

TEST_CASE("slave controllers ignore packet-ins but keep counting") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, farm_config(topo));
  c.role_monitor("SLAVE:2:0\n", 0.0);
  auto msgs = c.handle_packet_in({1, 1, arp_to_virtual(1, "10.0.0.1")},
                                 all_on(), 0.0);
  CHECK(msgs.empty());
  CHECK(c.packet_in_count() == 1);
  CHECK(c.processed_count() == 0);
}

TEST_CASE("equal-role rejection still increments the counter") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, farm_config(topo));
  c.role_monitor("EQUAL:2:0\n", 0.0);
  // dpid 1 mod 2 == 1 != order 0: rejected.
  auto msgs = c.handle_packet_in({1, 1, arp_to_virtual(1, "10.0.0.1")},
                                 all_on(), 0.0);
  CHECK(msgs.empty());
  CHECK(c.packet_in_count() == 1);
}

TEST_CASE("arp request for the virtual ip yields exactly one packet-out") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, farm_config(topo));
  c.role_monitor("MASTER:1:0\n", 0.0);
  auto msgs = c.handle_packet_in({1, 1, arp_to_virtual(1, "10.0.0.1")},
                                 all_on(), 0.0);
  REQUIRE(msgs.size() == 1);
  const auto& out = std::get<PacketOutMsg>(msgs[0].v);
  REQUIRE(out.frame.arp.has_value());
  CHECK(out.frame.arp->opcode == ArpOp::Reply);
  CHECK(out.dpid == 1);
}

TEST_CASE("virtual ip packets install forward and reverse rewrite rules") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, farm_config(topo));
  c.role_monitor("MASTER:1:0\n", 0.0);

  Frame first = Frame::make_l4(IpProto::Tcp, mac(1), ip("10.0.0.1"),
                               ip("10.0.0.100"), 40000, 5002);
  first.eth.dst = mac(4);  // server h4, attached to s2 port 2

  auto msgs = c.handle_virtual_ip_packet(2, 1, first);
  REQUIRE(flow_mods(msgs) == 2);
  REQUIRE(packet_outs(msgs) == 1);

  const auto& fwd =
      std::get<FlowModAdd>(std::get<FlowModMsg>(msgs[0].v).op).rule;
  CHECK(fwd.match.in_port == 1);
  CHECK(fwd.match.eth_type == EtherType::Ipv4);
  CHECK(fwd.match.ipv4_src == ip("10.0.0.1"));
  CHECK(fwd.match.ipv4_dst == ip("10.0.0.100"));
  CHECK(std::get<SetIpv4Dst>(fwd.actions[0]).addr == ip("10.0.0.4"));
  CHECK(std::get<Output>(fwd.actions[1]).port == 2);

  const auto& rev =
      std::get<FlowModAdd>(std::get<FlowModMsg>(msgs[1].v).op).rule;
  CHECK(rev.match.in_port == 2);
  CHECK(rev.match.ipv4_src == ip("10.0.0.4"));
  CHECK(rev.match.ipv4_dst == ip("10.0.0.1"));
  CHECK(std::get<SetIpv4Src>(rev.actions[0]).addr == ip("10.0.0.100"));
  CHECK(std::get<Output>(rev.actions[1]).port == 1);

  // Same flow again: rules cached, only the packet-out repeats.
  auto again = c.handle_virtual_ip_packet(2, 1, first);
  CHECK(flow_mods(again) == 0);
  CHECK(packet_outs(again) == 1);

  // Unknown server MAC: drop.
  Frame bogus = first;
  bogus.eth.dst = mac(99);
  CHECK(c.handle_virtual_ip_packet(2, 1, bogus).empty());
}

TEST_CASE("stats polling covers each powered-on switch twice") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, std::nullopt);
  CHECK(c.poll_stats(all_on()).size() == 4);  // 2 switches x (port + flow)

  PowerView one_down;
  one_down.is_on = [](const DeviceRef& dev) {
    return !(dev.kind == DeviceRef::Kind::Switch && dev.id == 2);
  };
  one_down.farm_traffic_active = [] { return false; };
  CHECK(c.poll_stats(one_down).size() == 2);

  Topology empty;
  Controller none = make_ctrl(empty, std::nullopt);
  CHECK(none.poll_stats(all_on()).empty());
}

TEST_CASE("link cost updates follow the smoothed-rate formula") {
  Topology topo = farm_topology();
  ControllerConfig cfg;
  cfg.alfa = 0.2;
  cfg.default_bw1 = 1000.0;
  cfg.k = 1.0;
  Controller c = make_ctrl(topo, std::nullopt, cfg);

  // First sample: rate = alfa*0 + (1-alfa)*delta.
  PortStatsSnapshot snap;
  snap[2].tx_bytes = 1000;
  c.update_link_costs(1, snap);
  CHECK(c.port_rate(1, 2) == 0.2 * 0.0 + (1.0 - 0.2) * 1000.0);

  // Drive the averages to a value where c = 1 - 1000/bw is positive.
  Controller loaded = make_ctrl(topo, std::nullopt, cfg);
  PortStatsSnapshot big;
  uint64_t total = 0;
  for (int i = 0; i < 400; ++i) {
    total += 3125;
    big[2].tx_bytes = total;
    loaded.update_link_costs(1, big);
  }
  // Steady state: rate -> 3125, bandwidths -> 3125, c -> 0.68, cost 10/c.
  CHECK(loaded.port_rate(1, 2) == doctest::Approx(3125.0));
  CHECK(loaded.port_bandwidth(1, 2) == doctest::Approx(3125.0));
  const double cc = 1.0 - 1000.0 / loaded.port_bandwidth(1, 2);
  CHECK(loaded.port_cost(1, 2) == doctest::Approx(10.0 / cc));

  // Underused port: c <= 0 pins the cost at 1000.
  Controller idle = make_ctrl(topo, std::nullopt, cfg);
  PortStatsSnapshot small;
  small[2].tx_bytes = 100;
  idle.update_link_costs(1, small);
  CHECK(idle.port_cost(1, 2) == 1000.0);

  // Zero bandwidth hits the division guard.
  Controller zero = make_ctrl(topo, std::nullopt, cfg);
  PortStatsSnapshot none;
  none[2].tx_bytes = 0;
  zero.update_link_costs(1, none);
  CHECK(zero.port_cost(1, 2) == 1000.0);
}

TEST_CASE("ema converges geometrically to a constant input") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, std::nullopt);
  const double target = 5000.0;
  uint64_t total = 0;
  double prev_gap = target;
  for (int i = 0; i < 40; ++i) {
    total += 5000;
    PortStatsSnapshot snap;
    snap[2].tx_bytes = total;
    c.update_link_costs(1, snap);
    const double gap = std::abs(c.port_rate(1, 2) - target);
    CHECK(gap <= prev_gap * 0.5 + 1e-9);  // alfa=0.2 halves at every poll
    prev_gap = gap;
  }
}

TEST_CASE("cost codomain is {1000} union (10, inf)") {
  Topology topo = farm_topology();
  ControllerConfig cfg;
  cfg.default_bw1 = 500.0;
  Controller c = make_ctrl(topo, std::nullopt, cfg);
  std::mt19937_64 rng(3);
  uint64_t total = 0;
  for (int i = 0; i < 500; ++i) {
    total += rng() % 4000;
    PortStatsSnapshot snap;
    snap[2].tx_bytes = total;
    c.update_link_costs(1, snap);
    const double cost = c.port_cost(1, 2);
    CHECK((cost == 1000.0 || cost > 10.0));
  }
}

TEST_CASE("topology weights mirror the cost map on inter-switch edges") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, std::nullopt);

  uint64_t total = 0;
  for (int i = 0; i < 10; ++i) {
    total += 100000;
    PortStatsSnapshot snap;
    snap[2].tx_bytes = total;  // port 2 of s1 faces s2
    snap[1].tx_bytes = 0;
    c.update_link_costs(1, snap);
  }
  c.update_topology_weights();

  const auto s1 = NodeId::sw(1);
  const auto s2 = NodeId::sw(2);
  CHECK(c.topo_view().edge_weight(s1, s2) == c.port_cost(1, 2));
  CHECK(c.topo_view().edge_weight(s2, s1) == c.port_cost(2, 1));
  // Host-facing edges keep their defaults.
  const auto h1 = NodeId::host(*topo.host_index_by_name("h1"));
  CHECK(c.topo_view().edge_weight(s1, h1) == 1.0);

  // Locality: bumping one port only moves its directed edge.
  const double before_back = c.topo_view().edge_weight(s2, s1);
  total += 500000;
  PortStatsSnapshot snap;
  snap[2].tx_bytes = total;
  c.update_link_costs(1, snap);
  c.update_topology_weights();
  CHECK(c.topo_view().edge_weight(s2, s1) == before_back);
}

TEST_CASE("install paths: single path means one flow mod at the caller") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, std::nullopt);
  auto msgs = c.install_paths(1, 1, mac(1), mac(4));
  CHECK(flow_mods(msgs) == 1);
  CHECK(group_mods(msgs) == 0);
  const auto& mod = std::get<FlowModMsg>(msgs[0].v);
  CHECK(mod.dpid == 1);
  const auto& rule = std::get<FlowModAdd>(mod.op).rule;
  CHECK(std::get<Output>(rule.actions[0]).port == 2);
}

namespace {

// h1 - s1 - {s2, s3} - s4 - h9: two parallel arms with distinct costs.
Topology two_arm_topology() {
  Topology topo;
  for (Dpid d : {1, 2, 3, 4}) topo.add_switch(d);
  topo.add_host(HostInfo{"h1", mac(1), ip("10.0.0.1"), 1, 1}, 1e8, 5e-5);
  topo.add_host(HostInfo{"h9", mac(9), ip("10.0.0.9"), 4, 1}, 1e8, 5e-5);
  topo.add_link(NodeId::sw(1), 2, NodeId::sw(2), 1, 1e7, 5e-5);
  topo.add_link(NodeId::sw(1), 3, NodeId::sw(3), 1, 1e7, 5e-5);
  topo.add_link(NodeId::sw(2), 2, NodeId::sw(4), 2, 1e7, 5e-5);
  topo.add_link(NodeId::sw(3), 2, NodeId::sw(4), 3, 1e7, 5e-5);
  return topo;
}

void set_sym(Topology& topo, Dpid a, Dpid b, double w) {
  topo.set_edge_weight(NodeId::sw(a), NodeId::sw(b), w);
  topo.set_edge_weight(NodeId::sw(b), NodeId::sw(a), w);
}

}  // namespace

TEST_CASE("install paths: bucket weights equal path costs") {
  Topology topo = two_arm_topology();
  Controller c = make_ctrl(topo, std::nullopt);
  // Arm via s2 costs 4+5, via s3 costs 14+15; host edge adds 1.
  set_sym(c.topo_view(), 1, 2, 4);
  set_sym(c.topo_view(), 2, 4, 5);
  set_sym(c.topo_view(), 1, 3, 14);
  set_sym(c.topo_view(), 3, 4, 15);

  auto msgs = c.install_paths(1, 1, mac(1), mac(9));
  REQUIRE(group_mods(msgs) == 1);
  const GroupModMsg* gm = nullptr;
  for (const auto& m : msgs) {
    if (const auto* g = std::get_if<GroupModMsg>(&m.v)) gm = g;
  }
  REQUIRE(gm->group.buckets.size() == 2);
  CHECK(gm->group.buckets[0].weight == 10.0);
  CHECK(gm->group.buckets[1].weight == 30.0);

  // Oracle: every bucket weight equals the recomputed cost of its path.
  auto paths = all_simple_paths(c.topo_view(), NodeId::sw(1),
                                NodeId::host(*topo.host_index_by_name("h9")));
  REQUIRE(paths.size() == 2);
  for (size_t i = 0; i < paths.size(); ++i) {
    CHECK(gm->group.buckets[i].weight == path_cost(c.topo_view(), paths[i]));
  }

  // Downstream switches got plain next-hop rules along each arm.
  CHECK(flow_mods(msgs) == 4);  // group rule at s1 + s2, s3, s4

  // Unchanged weights: nothing new to send.
  CHECK(c.install_paths(1, 1, mac(1), mac(9)).empty());

  // A cost change reissues the group with fresh weights.
  set_sym(c.topo_view(), 1, 2, 6);
  auto update = c.install_paths(1, 1, mac(1), mac(9));
  REQUIRE(group_mods(update) == 1);
  for (const auto& m : update) {
    if (const auto* g = std::get_if<GroupModMsg>(&m.v)) {
      CHECK(g->group.buckets[0].weight == 12.0);
    }
  }
}

TEST_CASE("select groups can be disabled scenario-wide") {
  Topology topo = two_arm_topology();
  ControllerConfig cfg;
  cfg.use_select_groups = false;
  Controller c = make_ctrl(topo, std::nullopt, cfg);
  set_sym(c.topo_view(), 1, 2, 4);
  set_sym(c.topo_view(), 2, 4, 5);
  set_sym(c.topo_view(), 1, 3, 14);
  set_sym(c.topo_view(), 3, 4, 15);
  auto msgs = c.install_paths(1, 1, mac(1), mac(9));
  CHECK(group_mods(msgs) == 0);
  REQUIRE(flow_mods(msgs) == 1);
  const auto& rule =
      std::get<FlowModAdd>(std::get<FlowModMsg>(msgs[0].v).op).rule;
  CHECK(std::get<Output>(rule.actions[0]).port == 2);  // cheap arm via s2
}

TEST_CASE("inverted dijkstra weights flip the no-select path choice") {
  Topology topo = two_arm_topology();
  ControllerConfig cfg;
  cfg.use_select_groups = false;
  cfg.invert_dijkstra_weights = true;
  Controller c = make_ctrl(topo, std::nullopt, cfg);
  set_sym(c.topo_view(), 1, 2, 4);
  set_sym(c.topo_view(), 2, 4, 5);
  set_sym(c.topo_view(), 1, 3, 14);
  set_sym(c.topo_view(), 3, 4, 15);
  auto msgs = c.install_paths(1, 1, mac(1), mac(9));
  REQUIRE(flow_mods(msgs) == 1);
  const auto& rule =
      std::get<FlowModAdd>(std::get<FlowModMsg>(msgs[0].v).op).rule;
  // 1/w weights make the expensive arm (via s3, port 3) the cheapest.
  CHECK(std::get<Output>(rule.actions[0]).port == 3);
}

TEST_CASE("role monitor parses replies and reloads rules on change") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, std::nullopt);

  auto msgs = c.role_monitor("SLAVE:2:0\n", 0.0);
  CHECK(c.mode() == ControllerRole::Slave);
  CHECK(c.num_serv() == 2);
  CHECK(c.order() == 0);
  // Role change from unset: role-sets go out, but a slave controls no
  // switches, so no flushes.
  CHECK(count_kind(msgs, [](const ControlMessage& m) {
          return std::holds_alternative<RoleSetMsg>(m.v);
        }) == 2);
  CHECK(flow_mods(msgs) == 0);

  // Same role again: quiet.
  CHECK(c.role_monitor("SLAVE:2:0\n", 1.0).empty());

  // A lone controller is master whatever the reply says.
  auto lone = c.role_monitor("SLAVE:1:0\n", 2.0);
  CHECK(c.mode() == ControllerRole::Master);
  // Master takes over every switch: flush + default rule per switch.
  CHECK(flow_mods(lone) == 4);

  // Malformed replies keep the previous role.
  CHECK(c.role_monitor("garbage\n", 3.0).empty());
  CHECK(c.mode() == ControllerRole::Master);
}

TEST_CASE("farm idles out and powers the segment off") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, farm_config(topo));
  c.role_monitor("MASTER:1:0\n", 0.0);

  // Traffic at t=1 marks activity and installs NAT rules at s2.
  Frame first = Frame::make_l4(IpProto::Tcp, mac(1), ip("10.0.0.1"),
                               ip("10.0.0.100"), 40000, 5002);
  first.eth.dst = mac(4);
  c.handle_packet_in({2, 1, first}, all_on(), 1.0);

  // Well before the idle timer: nothing happens.
  CHECK(c.check_farm_idle(all_on(), 2.0).empty());
  // After idle_timer with no farm traffic: flush + power down.
  auto msgs = c.check_farm_idle(all_on(), 5.0);
  REQUIRE(!msgs.empty());
  CHECK(count_kind(msgs, [](const ControlMessage& m) {
          return std::holds_alternative<DeactivateMsg>(m.v);
        }) == 1);
  CHECK(flow_mods(msgs) >= 2);  // delete-from + fresh default rule

  // Live fluid traffic defers the idle decision.
  Controller busy = make_ctrl(topo, farm_config(topo));
  busy.role_monitor("MASTER:1:0\n", 0.0);
  busy.handle_packet_in({2, 1, first}, all_on(), 1.0);
  PowerView active = all_on();
  active.farm_traffic_active = [] { return true; };
  CHECK(busy.check_farm_idle(active, 10.0).empty());
}

TEST_CASE("cold farm wraps responses in an activation") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, farm_config(topo));
  c.role_monitor("MASTER:1:0\n", 0.0);
  PowerView cold;
  cold.is_on = [](const DeviceRef& dev) {
    return dev.kind != DeviceRef::Kind::Host;
  };
  cold.farm_traffic_active = [] { return false; };

  auto msgs = c.handle_packet_in({1, 1, arp_to_virtual(1, "10.0.0.1")}, cold,
                                 0.0);
  REQUIRE(msgs.size() == 1);
  const auto& act = std::get<ActivateMsg>(msgs[0].v);
  CHECK(act.targets.size() == 3);
  REQUIRE(act.deferred.size() == 1);
  CHECK(std::holds_alternative<PacketOutMsg>(act.deferred[0].v));
}

TEST_CASE("elastic growth follows distinct client flows") {
  Topology topo = farm_topology();
  Controller c = make_ctrl(topo, farm_config(topo, 1));
  c.role_monitor("MASTER:1:0\n", 0.0);
  CHECK(c.farm_n_active() == 1);

  // flows_per_server = 2: the third distinct flow grows the farm.
  for (int i = 0; i < 3; ++i) {
    Frame f = Frame::make_l4(IpProto::Tcp, mac(1), ip("10.0.0.1"),
                             ip("10.0.0.100"),
                             static_cast<uint16_t>(40000 + i), 5002);
    f.eth.dst = mac(4);
    c.handle_packet_in({2, 1, f}, all_on(), 1.0);
  }
  CHECK(c.farm_n_active() == 2);
}
