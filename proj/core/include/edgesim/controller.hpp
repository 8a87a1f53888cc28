#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgesim/cluster.hpp"
#include "edgesim/messages.hpp"
#include "edgesim/paths.hpp"
#include "edgesim/topology.hpp"

namespace edgesim {

enum class ArbitrationScheme : uint8_t { ByDpid, ByCounter };
enum class LoopGuardResult : uint8_t { Proceed, Suppress };

struct EmptyFarmError : std::runtime_error {
  EmptyFarmError() : std::runtime_error("server farm has no active servers") {}
};

struct ControllerConfig {
  double poll_period_s{1.0};  // T: stats poll and heartbeat period
  double alfa{0.2};
  double default_bw1{0.0};  // bytes per poll interval
  double k{1.0};
  bool invert_dijkstra_weights{false};
  bool use_select_groups{true};
  ArbitrationScheme scheme{ArbitrationScheme::ByDpid};
  double default_cost{1000.0};  // cost of a never-measured port
};

struct FarmServer {
  MacAddress mac;
  Ipv4Address ip;
  Dpid last_dpid{0};      // last switch on the path to the server
  PortIndex out_port{0};  // port of that switch toward the server
  size_t host_index{0};
};

struct FarmConfig {
  Ipv4Address virtual_ip;
  std::vector<FarmServer> servers;
  int initial_active{0};  // 0 means all servers active from the start
  double idle_timer_s{30.0};
  int flows_per_server{8};
  /// Devices (switches, links, server hosts) powered as one elastic unit.
  std::vector<DeviceRef> segment;
};

/// The controller's window onto physical device state, supplied by the
/// harness. `farm_traffic_active` reports whether any live flow still
/// targets the farm, standing in for the flow counters a real controller
/// would poll.
struct PowerView {
  std::function<bool(const DeviceRef&)> is_on;
  std::function<bool()> farm_traffic_active;
};

/// One SDN controller: Packet-In arbitration, loop suppression, proxy-ARP
/// farm balancing, virtual-IP NAT rule installation, stats polling with
/// EMA link costs, Select-group path installation and the cluster role
/// lifecycle. Pure message-in/message-out; the harness owns delivery.
class Controller {
 public:
  Controller(size_t index, uint32_t cont_id, Topology view,
             ControllerConfig config, std::optional<FarmConfig> farm);

  size_t index() const { return index_; }
  uint32_t cont_id() const { return cont_id_; }
  void set_cont_id(uint32_t id) { cont_id_ = id; }

  ControllerRole mode() const { return mode_; }
  int num_serv() const { return num_serv_; }
  int order() const { return order_; }
  uint64_t packet_in_count() const { return packet_in_counter_; }
  uint64_t processed_count() const { return processed_count_; }

  void connect_switch(Dpid dpid) { datapaths_.insert(dpid); }
  void disconnect_switch(Dpid dpid) { datapaths_.erase(dpid); }
  const std::set<Dpid>& datapaths() const { return datapaths_; }

  /// Marks a link as unusable in the controller's topology view.
  void on_link_down(NodeId a, NodeId b);

  /// Equal-role arbitration: true iff this controller must handle the
  /// event under the configured modular scheme.
  bool should_process(Dpid dpid) const;

  LoopGuardResult loop_guard(Dpid dpid, MacAddress src, MacAddress dst,
                             PortIndex in_port);

  std::vector<ControlMessage> handle_packet_in(const PacketInEvent& event,
                                               const PowerView& power,
                                               double now_s);

  /// Proxy-ARP answer for the farm virtual IP. Returns the reply frame and
  /// the devices that must be powered on before it may be sent.
  std::pair<Frame, std::vector<DeviceRef>> generate_arp_reply(
      Ipv4Address requester_ip, MacAddress requester_mac,
      const PowerView& power, double now_s);

  /// NAT handling at the last switch before the selected server: forward
  /// and reverse rewrite rules plus the rewritten first packet.
  std::vector<ControlMessage> handle_virtual_ip_packet(Dpid dpid,
                                                       PortIndex in_port,
                                                       const Frame& frame);

  /// One port-stats and one flow-stats request per connected, powered-on
  /// switch. Runs every T seconds.
  std::vector<ControlMessage> poll_stats(const PowerView& power) const;

  void update_link_costs(Dpid dpid, const PortStatsSnapshot& snapshot);
  void update_topology_weights();

  std::vector<ControlMessage> install_paths(Dpid dpid, PortIndex in_port,
                                            MacAddress src, MacAddress dst);

  /// Applies a manager heartbeat reply; on a role change emits Role-Set to
  /// every switch and reloads default rules on the switches this
  /// controller now controls.
  std::vector<ControlMessage> role_monitor(const std::string& reply_line,
                                           double now_s);

  /// Powers the farm segment off after idle_timer with no matching
  /// traffic, flushing the rules this controller installed for it.
  std::vector<ControlMessage> check_farm_idle(const PowerView& power,
                                              double now_s);

  const Topology& topo_view() const { return topo_view_; }
  Topology& topo_view() { return topo_view_; }
  double port_cost(Dpid dpid, PortIndex port) const;
  double port_rate(Dpid dpid, PortIndex port) const;
  double port_bandwidth(Dpid dpid, PortIndex port) const;
  bool has_farm() const { return farm_.has_value(); }
  int farm_n_active() const;
  const std::map<Dpid, std::map<MacAddress, PortIndex>>& mac_to_port() const {
    return mac_to_port_;
  }

  static uint32_t group_id_for(size_t host_index, Dpid dpid);

 private:
  struct FarmState {
    FarmConfig cfg;
    int n_active{0};
    double last_activity{-1e300};
    std::set<std::string> active_flows;
    std::set<Dpid> rule_dpids;
  };

  std::vector<ControlMessage> l2_route(Dpid dpid, PortIndex in_port,
                                       const Frame& frame);
  FlowRule default_rule() const;
  std::vector<Dpid> controlled_switches() const;
  double cost_or_default(Dpid dpid, PortIndex port) const;
  EdgeWeightFn dijkstra_weights() const;
  const FarmServer* server_by_mac(MacAddress mac) const;
  std::vector<DeviceRef> farm_power_deficit(const PowerView& power) const;
  void note_farm_flow(const Frame& frame, double now_s);
  bool is_farm_mac(MacAddress mac) const;
  const std::vector<FlowAction>* cached_actions(Dpid dpid,
                                                MacAddress dst) const;

  size_t index_;
  uint32_t cont_id_;
  ControllerRole mode_{ControllerRole::Unset};
  ControllerRole mode_prev_{ControllerRole::Unset};
  int num_serv_{1};
  int order_{0};
  uint64_t packet_in_counter_{0};
  uint64_t processed_count_{0};

  Topology topo_view_;
  ControllerConfig config_;
  std::optional<FarmState> farm_;

  std::set<Dpid> datapaths_;
  std::map<Dpid, std::map<MacAddress, PortIndex>> learned_macs_;
  std::map<Dpid, std::map<MacAddress, PortIndex>> mac_to_port_;

  std::map<std::pair<Dpid, PortIndex>, uint64_t> tx_bytes_prev_;
  std::map<std::pair<Dpid, PortIndex>, double> rate_;
  std::map<std::pair<Dpid, PortIndex>, double> bandwidths_;
  std::map<std::pair<Dpid, PortIndex>, double> costs_;

  // What this controller believes is installed, to avoid re-sending
  // identical rules and groups.
  struct RuleSig {
    int32_t priority;
    std::vector<FlowAction> actions;
  };
  std::map<Dpid, std::map<MacAddress, RuleSig>> l2_rules_;
  std::map<Dpid, std::set<std::string>> nat_rules_;
  std::map<std::pair<Dpid, uint32_t>, std::vector<double>> group_weights_;
};

}  // namespace edgesim
