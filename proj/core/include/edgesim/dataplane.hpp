#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <variant>
#include <vector>

#include "edgesim/frame.hpp"
#include "edgesim/topology.hpp"

namespace edgesim {

struct PoweredOffError : std::logic_error {
  explicit PoweredOffError(Dpid dpid)
      : std::logic_error("switch " + std::to_string(dpid) + " is powered off") {
  }
};

/// Absent fields are wildcards; a frame matches iff every present field
/// equals the frame's corresponding value.
struct FlowMatch {
  std::optional<PortIndex> in_port;
  std::optional<EtherType> eth_type;
  std::optional<MacAddress> eth_dst;
  std::optional<Ipv4Address> ipv4_src;
  std::optional<Ipv4Address> ipv4_dst;
  std::optional<IpProto> proto;

  bool matches(PortIndex port, const Frame& frame) const;
  auto operator<=>(const FlowMatch&) const = default;
};

struct SetIpv4Dst {
  Ipv4Address addr;
  auto operator<=>(const SetIpv4Dst&) const = default;
};
struct SetIpv4Src {
  Ipv4Address addr;
  auto operator<=>(const SetIpv4Src&) const = default;
};
struct Output {
  PortIndex port{0};
  auto operator<=>(const Output&) const = default;
};
struct OutputGroup {
  uint32_t group_id{0};
  auto operator<=>(const OutputGroup&) const = default;
};
struct Flood {
  auto operator<=>(const Flood&) const = default;
};
struct Drop {
  auto operator<=>(const Drop&) const = default;
};
/// Punt to the connected controllers (the table-miss default rule).
struct SendToControllers {
  auto operator<=>(const SendToControllers&) const = default;
};

using FlowAction = std::variant<SetIpv4Dst, SetIpv4Src, Output, OutputGroup,
                                Flood, Drop, SendToControllers>;

struct FlowRule {
  FlowMatch match;
  int32_t priority{0};
  std::vector<FlowAction> actions;
  uint32_t installed_by{0};  // cont_id of the installing controller
  uint64_t packet_count{0};
  uint64_t byte_count{0};
  uint64_t install_seq{0};
};

struct Bucket {
  double weight{0};
  std::vector<FlowAction> actions;
};

struct SelectGroup {
  uint32_t group_id{0};
  std::vector<Bucket> buckets;
};

/// Deterministic weighted bucket choice for a flow key: a 64-bit mix of
/// the canonical key selects a point on the cumulative weight range. The
/// same key maps to the same bucket while weights are unchanged. With all
/// weights zero, bucket 0 is used.
size_t select_bucket(const SelectGroup& group, const Frame& frame);

struct FlowModAdd {
  FlowRule rule;
};
struct FlowModDeleteFrom {
  uint32_t controller{0};
};
struct FlowModDeleteAll {};
using FlowModOp = std::variant<FlowModAdd, FlowModDeleteFrom, FlowModDeleteAll>;

enum class FailMode : uint8_t { Secure, Standalone };

struct PortCounters {
  uint64_t tx_bytes{0};
  uint64_t rx_bytes{0};
  uint64_t tx_packets{0};
  uint64_t rx_packets{0};
  bool operator==(const PortCounters&) const = default;
};

using PortStatsSnapshot = std::map<PortIndex, PortCounters>;

struct FlowStatEntry {
  FlowMatch match;
  int32_t priority{0};
  uint64_t packet_count{0};
  uint64_t byte_count{0};
};

using FlowStatsSnapshot = std::vector<FlowStatEntry>;

struct ForwardOnPort {
  PortIndex port{0};
  Frame frame;
};
struct EmitPacketIn {
  PortIndex in_port{0};
  Frame frame;
  std::vector<size_t> controllers;  // connected controller indices
};
using SwitchEffect = std::variant<ForwardOnPort, EmitPacketIn>;

/// One simulated switch: flow table, Select group table, L2 learning
/// table, port counters, fail mode. Mutated only by the simulation loop.
class Switch {
 public:
  Switch(Dpid dpid, FailMode mode, std::vector<PortIndex> ports,
         Power power = Power::On);

  Dpid dpid() const { return dpid_; }
  FailMode fail_mode() const { return fail_mode_; }
  Power power() const { return power_; }
  bool is_on() const { return power_ == Power::On; }

  /// Powering Off clears flow/group/L2 tables and counters.
  void set_power(Power power);

  const std::set<size_t>& connected_controllers() const { return connected_; }
  void connect_controller(size_t index) { connected_.insert(index); }
  void disconnect_controller(size_t index) { connected_.erase(index); }
  void disconnect_all_controllers() { connected_.clear(); }

  /// Runs one frame through the pipeline. Exactly one of: matched rule
  /// actions, Packet-In to every connected controller, standalone L2
  /// fallback, or secure drop.
  std::vector<SwitchEffect> process_frame(PortIndex in_port,
                                          const Frame& frame);

  /// Packet-Out: apply a controller-supplied action list to a frame.
  /// `in_port` is excluded from floods.
  std::vector<SwitchEffect> apply_packet_out(
      const std::vector<FlowAction>& actions, PortIndex in_port,
      const Frame& frame);

  /// Add replaces any existing rule with the same match and priority.
  void apply_flow_mod(const FlowModOp& op);
  void apply_group_mod(SelectGroup group);

  PortStatsSnapshot read_port_stats() const;
  FlowStatsSnapshot read_flow_stats() const;

  /// Highest-priority matching rule; ties broken by earliest install.
  const FlowRule* lookup(PortIndex in_port, const Frame& frame) const;

  const std::vector<FlowRule>& flow_table() const { return flow_table_; }
  const std::map<uint32_t, SelectGroup>& group_table() const {
    return group_table_;
  }
  const std::map<MacAddress, PortIndex>& l2_table() const { return l2_table_; }
  const std::vector<PortIndex>& ports() const { return ports_; }

  /// Accounts fluid-model traffic on a port's transmit counters.
  void add_port_tx(PortIndex port, uint64_t bytes, uint64_t packets);

 private:
  std::vector<SwitchEffect> l2_learn_and_forward(PortIndex in_port,
                                                 const Frame& frame);
  std::vector<SwitchEffect> run_actions(const std::vector<FlowAction>& actions,
                                        PortIndex in_port, Frame frame,
                                        bool allow_groups,
                                        bool allow_packet_in);
  void count_tx(PortIndex port, const Frame& frame);
  void ensure_on() const;

  Dpid dpid_;
  FailMode fail_mode_;
  Power power_;
  std::vector<PortIndex> ports_;
  std::set<size_t> connected_;
  std::vector<FlowRule> flow_table_;  // sorted by (-priority, install_seq)
  std::map<uint32_t, SelectGroup> group_table_;
  std::map<MacAddress, PortIndex> l2_table_;
  std::map<PortIndex, PortCounters> port_stats_;
  uint64_t next_install_seq_{0};
};

}  // namespace edgesim
