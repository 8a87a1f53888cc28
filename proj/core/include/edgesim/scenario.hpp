#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "edgesim/cluster.hpp"
#include "edgesim/controller.hpp"
#include "edgesim/topology.hpp"

namespace edgesim {

struct ScenarioError : std::runtime_error {
  std::vector<std::string> issues;
  explicit ScenarioError(std::vector<std::string> list)
      : std::runtime_error(list.empty() ? "invalid scenario" : list.front()),
        issues(std::move(list)) {}
};

struct ScenarioSwitch {
  Dpid dpid{0};
  FailMode fail_mode{FailMode::Standalone};
  Power power{Power::On};
};

struct ScenarioHost {
  std::string name;
  MacAddress mac;
  Ipv4Address ip;
  Dpid attached_dpid{0};
  PortIndex attached_port{0};
  double capacity_mbps{1000.0};
  double delay_ms{0.05};
  Power link_power{Power::On};
};

struct ScenarioLink {
  Dpid a{0};
  PortIndex a_port{0};
  Dpid b{0};
  PortIndex b_port{0};
  double capacity_mbps{10.0};
  double delay_ms{0.05};
  Power power{Power::On};
};

struct ScenarioFarm {
  Ipv4Address virtual_ip;
  std::vector<std::string> servers;  // host names; index order drives selection
  int initial_active{0};             // 0 = all active
  double idle_timer_s{30.0};
  int flows_per_server{8};
  std::vector<Dpid> segment_switches;
  std::vector<std::array<std::string, 2>> segment_links;  // node names
};

struct ScenarioControllers {
  int count{1};
  ArbitrationScheme scheme{ArbitrationScheme::ByDpid};
  bool equal_mode{false};
  double poll_period_s{1.0};
  double alfa{0.2};
  std::optional<double> default_bw1;  // bytes/interval; derived when absent
  double k{1.0};
  bool invert_dijkstra_weights{false};
  bool use_select_groups{true};
  double control_latency_ms{1.0};
};

struct ScenarioManager {
  ConnMode conn_mode{ConnMode::ConcurrentPersistent};
  uint32_t header_bytes{64};
  uint32_t setup_bytes{180};    // modeled three-way handshake
  uint32_t teardown_bytes{240};  // modeled four-way teardown
  double latency_ms{1.0};
};

struct PingDemand {
  std::string src;
  Ipv4Address dst_ip;
  int count{4};
  double interval_s{1.0};
  double start_s{0.1};
};

struct TcpDemand {
  std::string src;
  Ipv4Address dst_ip;
  uint16_t dst_port{5002};
  double start_s{0.0};
  double duration_s{10.0};
};

struct UdpDemand {
  std::string src;
  Ipv4Address dst_ip;
  uint16_t dst_port{9000};
  double rate_mbps{1.0};
  double start_s{0.0};
  double duration_s{10.0};
};

using TrafficDemand = std::variant<PingDemand, TcpDemand, UdpDemand>;

struct KillController {
  int index{0};
};
struct KillMaster {};
struct CutControlChannel {
  Dpid dpid{0};
};
struct CutLink {
  std::string a;
  std::string b;
};
struct ReviveController {
  int index{0};
};
using FailureKind = std::variant<KillController, KillMaster,
                                 CutControlChannel, CutLink,
                                 ReviveController>;

struct FailureInjection {
  double at_s{0.0};
  FailureKind what;
};

struct Scenario {
  std::string name{"scenario"};
  uint64_t seed{1};
  double duration_s{10.0};
  double activation_latency_s{0.5};
  double ping_timeout_s{10.0};

  std::vector<ScenarioSwitch> switches;
  std::vector<ScenarioHost> hosts;
  std::vector<ScenarioLink> links;
  std::optional<ScenarioFarm> farm;
  ScenarioControllers controllers;
  ScenarioManager manager;
  std::vector<TrafficDemand> demands;
  std::vector<FailureInjection> failures;

  /// Parses and structurally validates; throws ScenarioError listing every
  /// offending field path.
  static Scenario from_json_text(const std::string& text);
  static Scenario from_file(const std::string& path);
  std::string to_json_text() const;

  /// Semantic validation (referential integrity, ranges). Empty = valid.
  std::vector<std::string> validate() const;

  /// Physical topology with initial power states. validate() must pass.
  Topology build_topology() const;

  /// Node lookup by scenario name: "s<dpid>" or a host name.
  std::optional<NodeId> node_by_name(const Topology& topo,
                                     const std::string& name) const;

  double default_bw1_bytes_per_interval() const;
};

}  // namespace edgesim
