#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "edgesim/engine.hpp"
#include "edgesim/maxmin.hpp"
#include "edgesim/report.hpp"
#include "edgesim/scenario.hpp"
#include "edgesim/sim.hpp"
#include "oracles.hpp"

using namespace edgesim;

namespace {

std::string mac_str(uint64_t v) {
  return MacAddress::from_integer(v).to_string();
}

int losses_of(const std::vector<PingResult>& rtts) {
  int n = 0;
  for (const PingResult& r : rtts) n += r.lost;
  return n;
}

/// Two hosts, two switches, one controller; fodder for ping experiments.
Scenario two_host_scenario() {
  Scenario scn;
  scn.name = "two_host";
  scn.seed = 5;
  scn.duration_s = 6.0;
  scn.switches = {ScenarioSwitch{1, FailMode::Standalone, Power::On},
                  ScenarioSwitch{2, FailMode::Standalone, Power::On}};
  scn.hosts = {
      ScenarioHost{"h1", *MacAddress::parse(mac_str(1)),
                   *Ipv4Address::parse("10.0.0.1"), 1, 1, 100.0, 0.05,
                   Power::On},
      ScenarioHost{"h2", *MacAddress::parse(mac_str(2)),
                   *Ipv4Address::parse("10.0.0.2"), 2, 1, 100.0, 0.05,
                   Power::On}};
  scn.links = {ScenarioLink{1, 2, 2, 2, 10.0, 0.05, Power::On}};
  scn.controllers.count = 1;
  return scn;
}

}  // namespace

TEST_CASE("event queue executes in time order with sequence tie-break") {
  EventQueue<int> q;
  q.schedule(30, 3);
  q.schedule(10, 1);
  q.schedule(10, 2);
  q.schedule(20, 9);
  std::vector<int> order;
  while (auto ev = q.pop()) order.push_back(ev->payload);
  CHECK(order == std::vector<int>{1, 2, 9, 3});
  CHECK(q.now() == 30);
  CHECK_THROWS_AS(q.schedule(29, 0), CausalityError);
  q.schedule(30, 0);  // same instant is fine
}

TEST_CASE("max-min: equal split on a shared link") {
  std::vector<MaxMinFlow> flows(3, MaxMinFlow{true, 0, {0}});
  const auto rates = maxmin_allocate(flows, {10e6});
  for (double r : rates) CHECK(r == doctest::Approx(10e6 / 3).epsilon(1e-9));
}

TEST_CASE("max-min: inelastic flows are served first") {
  // Mirrors one TCP against three 2.16 Mbps UDP flows on a 10 Mbps link.
  std::vector<MaxMinFlow> flows;
  flows.push_back(MaxMinFlow{true, 0, {0}});
  for (int i = 0; i < 3; ++i) {
    flows.push_back(MaxMinFlow{false, 2.16e6, {0}});
  }
  const auto rates = maxmin_allocate(flows, {10e6});
  CHECK(rates[0] == doctest::Approx(3.52e6).epsilon(1e-9));
  for (int i = 1; i < 4; ++i) {
    CHECK(rates[i] == doctest::Approx(2.16e6).epsilon(1e-9));
  }
}

TEST_CASE("max-min: disjoint paths do not interact") {
  std::vector<MaxMinFlow> flows = {MaxMinFlow{true, 0, {0}},
                                   MaxMinFlow{true, 0, {1}},
                                   MaxMinFlow{true, 0, {2}}};
  const auto rates = maxmin_allocate(flows, {10e6, 10e6, 10e6});
  double total = 0;
  for (double r : rates) {
    CHECK(r == doctest::Approx(10e6));
    total += r;
  }
  CHECK(total == doctest::Approx(30e6));
}

TEST_CASE("max-min: flows without links get nothing") {
  std::vector<MaxMinFlow> flows = {MaxMinFlow{true, 0, {}},
                                   MaxMinFlow{true, 0, {0}}};
  const auto rates = maxmin_allocate(flows, {10e6});
  CHECK(rates[0] == 0.0);
  CHECK(rates[1] == doctest::Approx(10e6));
}

TEST_CASE("max-min agrees with the water-filling oracle") {
  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<int> nlinks(1, 6);
  std::uniform_int_distribution<int> nflows(1, 8);
  std::uniform_real_distribution<double> cap(1e6, 20e6);
  std::uniform_real_distribution<double> urate(0.5e6, 5e6);

  for (int trial = 0; trial < 200; ++trial) {
    const int L = nlinks(rng);
    const int F = nflows(rng);
    std::vector<double> capacity;
    for (int l = 0; l < L; ++l) capacity.push_back(cap(rng));
    std::vector<MaxMinFlow> flows;
    for (int f = 0; f < F; ++f) {
      MaxMinFlow flow;
      flow.elastic = (rng() % 3) != 0;
      if (!flow.elastic) flow.rate_cap_bps = urate(rng);
      std::set<size_t> links;
      const int span = 1 + static_cast<int>(rng() % L);
      while (static_cast<int>(links.size()) < span) {
        links.insert(rng() % L);
      }
      flow.links.assign(links.begin(), links.end());
      flows.push_back(std::move(flow));
    }

    const auto got = maxmin_allocate(flows, capacity);
    const auto want = oracles::maxmin_waterfill(flows, capacity);
    for (int f = 0; f < F; ++f) {
      CHECK(got[f] ==
            doctest::Approx(want[f]).epsilon(1e-9).scale(1.0 + want[f]));
    }

    // Conservation: no directed link is oversubscribed.
    for (int l = 0; l < L; ++l) {
      double used = 0;
      for (int f = 0; f < F; ++f) {
        for (size_t fl : flows[f].links) {
          if (fl == static_cast<size_t>(l)) used += got[f];
        }
      }
      CHECK(used <= capacity[l] * (1 + 1e-9) + 1e-3);
    }
  }
}

TEST_CASE("control byte model matches the message classes") {
  const auto [mgr_cls, mgr_bytes] = account_manager_line("1234\n", 64);
  CHECK(mgr_cls == MsgClass::ManageCluster);
  CHECK(mgr_bytes == 64 + 5);

  Frame f = Frame::make_icmp_echo(IcmpKind::EchoRequest,
                                  MacAddress::from_integer(1),
                                  *Ipv4Address::parse("10.0.0.1"),
                                  *Ipv4Address::parse("10.0.0.2"), 1, 0);
  f.payload_bytes = 100 - f.wire_size();
  REQUIRE(f.wire_size() == 100);
  const auto [pin_cls, pin_bytes] = account_packet_in(f, 64);
  CHECK(pin_cls == MsgClass::DataPathControl);
  CHECK(pin_bytes == 164);

  ControlMessage flow_mod{FlowModMsg{1, FlowModDeleteAll{}}};
  CHECK(account_control_bytes(flow_mod, 64) ==
        std::pair{MsgClass::DataPathControl, uint64_t{64}});
  ControlMessage role{RoleSetMsg{1, ControllerRole::Master}};
  CHECK(account_control_bytes(role, 64) ==
        std::pair{MsgClass::OtherControlMsg, uint64_t{64}});
  ControlMessage stats{StatsRequestMsg{1, StatsKind::Port}};
  CHECK(account_control_bytes(stats, 64) ==
        std::pair{MsgClass::StatsCollection, uint64_t{64}});
}

TEST_CASE("empty demand list yields a report without traffic") {
  Scenario scn = two_host_scenario();
  const MetricsReport report = run_scenario(scn);
  CHECK(report.flow_throughput_bps.empty());
  CHECK(report.rtt_series.empty());
  CHECK(report.message_counts.count("packet_in") == 0);  // no traffic at all
  CHECK(report.control_bytes_total.at("ManageCluster") > 0);
  // Class totals partition the total.
  uint64_t sum = 0;
  for (auto& [cls, bytes] : report.control_bytes_total) sum += bytes;
  CHECK(sum == report.total_control_bytes());
}

TEST_CASE("identical scenarios and seeds reproduce byte-identical reports") {
  Scenario scn = two_host_scenario();
  scn.demands.push_back(
      PingDemand{"h1", *Ipv4Address::parse("10.0.0.2"), 4, 0.25, 0.2});
  const std::string a = run_scenario(scn).to_json_text();
  const std::string b = run_scenario(scn).to_json_text();
  CHECK(a == b);

  Scenario other = scn;
  other.seed = 6;
  CHECK(run_scenario(other).to_json_text() != a);  // cont_ids differ
}

TEST_CASE("reactive first ping towers over the proactive rest") {
  Scenario scn = two_host_scenario();
  scn.demands.push_back(
      PingDemand{"h1", *Ipv4Address::parse("10.0.0.2"), 4, 0.5, 0.2});
  const MetricsReport report = run_scenario(scn);
  const auto& rtts = report.rtt_series.at("ping0");
  REQUIRE(rtts.size() == 4);
  for (const PingResult& r : rtts) CHECK_FALSE(r.lost);
  // Propagation-only RTT: 3 links x 0.05 ms each way.
  const double baseline = 2 * 3 * 0.05;
  CHECK(rtts[0].rtt_ms > 5 * rtts[1].rtt_ms);
  for (size_t i = 1; i < 4; ++i) {
    CHECK(rtts[i].rtt_ms == doctest::Approx(baseline).epsilon(0.2));
  }
}

TEST_CASE("cutting the control channel leaves standalone pings intact") {
  Scenario scn = two_host_scenario();
  scn.demands.push_back(
      PingDemand{"h1", *Ipv4Address::parse("10.0.0.2"), 4, 0.25, 0.2});
  scn.demands.push_back(
      PingDemand{"h1", *Ipv4Address::parse("10.0.0.2"), 4, 0.25, 2.0});
  scn.failures.push_back(FailureInjection{1.5, CutControlChannel{1}});
  scn.failures.push_back(FailureInjection{1.5, CutControlChannel{2}});
  const MetricsReport report = run_scenario(scn);
  for (const PingResult& r : report.rtt_series.at("ping1")) {
    CHECK_FALSE(r.lost);
  }
}

TEST_CASE("cutting the only link strands later pings") {
  Scenario scn = two_host_scenario();
  scn.demands.push_back(
      PingDemand{"h1", *Ipv4Address::parse("10.0.0.2"), 2, 0.25, 0.2});
  scn.demands.push_back(
      PingDemand{"h1", *Ipv4Address::parse("10.0.0.2"), 2, 0.25, 2.0});
  scn.failures.push_back(FailureInjection{1.5, CutLink{"s1", "s2"}});
  const MetricsReport report = run_scenario(scn);
  CHECK(losses_of(report.rtt_series.at("ping0")) == 0);
  CHECK(losses_of(report.rtt_series.at("ping1")) == 2);
  bool saw_off = false;
  for (const PowerEvent& e : report.power_events) {
    saw_off = saw_off || (!e.on && e.device.find("link") == 0);
  }
  CHECK(saw_off);
}

TEST_CASE("scenario validation pinpoints offending fields") {
  Scenario scn = two_host_scenario();
  scn.demands.push_back(
      PingDemand{"h9", *Ipv4Address::parse("10.0.0.2"), 4, 1.0, 0.0});
  const auto issues = scn.validate();
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].find("demands[0].src") != std::string::npos);
  CHECK_THROWS_AS(run_scenario(scn), ScenarioError);
}

TEST_CASE("kill_master before any election is a runtime error") {
  Scenario scn = two_host_scenario();
  scn.controllers.count = 2;
  scn.failures.push_back(FailureInjection{0.0005, KillMaster{}});
  CHECK_THROWS_AS(run_scenario(scn), SimRuntimeError);
}

TEST_CASE("scenario json round-trips through parse and serialize") {
  Scenario scn = two_host_scenario();
  scn.demands.push_back(
      PingDemand{"h1", *Ipv4Address::parse("10.0.0.2"), 2, 0.5, 0.2});
  const Scenario back = Scenario::from_json_text(scn.to_json_text());
  CHECK(back.to_json_text() == scn.to_json_text());
  CHECK(run_scenario(back).to_json_text() ==
        run_scenario(scn).to_json_text());
}
