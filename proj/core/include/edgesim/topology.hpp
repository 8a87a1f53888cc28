#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edgesim/addr.hpp"

namespace edgesim {

using Dpid = uint64_t;
using PortIndex = uint32_t;

enum class Power : uint8_t { On, Off };

/// Graph node: a switch identified by dpid or a host identified by its
/// index in the topology host list. Switches order before hosts.
struct NodeId {
  enum class Kind : uint8_t { Switch, Host };
  Kind kind{Kind::Switch};
  uint64_t id{0};

  auto operator<=>(const NodeId&) const = default;

  static NodeId sw(Dpid dpid) { return {Kind::Switch, dpid}; }
  static NodeId host(uint64_t index) { return {Kind::Host, index}; }
  bool is_switch() const { return kind == Kind::Switch; }
};

struct PortRef {
  NodeId node;
  PortIndex port{0};
  auto operator<=>(const PortRef&) const = default;
};

/// Bidirectional link with per-direction routing weights. capacity and
/// delay apply to each direction independently (full duplex).
struct Link {
  PortRef a;
  PortRef b;
  double capacity_bps{0};
  double delay_s{0};
  Power power{Power::On};
  double weight_ab{1.0};
  double weight_ba{1.0};
};

struct HostInfo {
  std::string name;
  MacAddress mac;
  Ipv4Address ip;
  Dpid attached_dpid{0};
  PortIndex attached_port{0};
};

struct Neighbor {
  NodeId node;
  PortIndex local_port{0};
  size_t link_index{0};
};

/// Switch/host/link graph. At most one link may exist per (node, port)
/// and per unordered node pair, so a node pair identifies a link.
class Topology {
 public:
  Dpid add_switch(Dpid dpid);
  /// Adds the host and its access link to the attached switch.
  size_t add_host(HostInfo info, double capacity_bps, double delay_s,
                  Power link_power = Power::On);
  size_t add_link(NodeId a, PortIndex a_port, NodeId b, PortIndex b_port,
                  double capacity_bps, double delay_s,
                  Power power = Power::On);

  const std::set<Dpid>& switches() const { return switches_; }
  const std::vector<HostInfo>& hosts() const { return hosts_; }
  const std::vector<Link>& links() const { return links_; }
  Link& link(size_t index) { return links_[index]; }
  const Link& link(size_t index) const { return links_[index]; }

  bool has_switch(Dpid dpid) const { return switches_.count(dpid) > 0; }
  bool has_node(NodeId node) const;

  std::optional<size_t> host_index_by_name(const std::string& name) const;
  std::optional<size_t> host_index_by_mac(MacAddress mac) const;
  std::optional<size_t> host_index_by_ip(Ipv4Address ip) const;
  const HostInfo& host(size_t index) const { return hosts_[index]; }

  std::optional<size_t> link_at(PortRef port) const;
  std::optional<size_t> link_between(NodeId a, NodeId b) const;

  /// Neighbors reachable from `node`, sorted by neighbor id. With
  /// `powered_only`, links that are Off are skipped.
  std::vector<Neighbor> neighbors(NodeId node, bool powered_only = true) const;

  /// Ports configured on a switch (one per incident link), sorted.
  std::vector<PortIndex> switch_ports(Dpid dpid) const;

  void set_link_power(size_t index, Power power);

  /// Directional routing weight of the edge from `from` to `to`.
  /// Both nodes must be joined by a link.
  double edge_weight(NodeId from, NodeId to) const;
  void set_edge_weight(NodeId from, NodeId to, double weight);

  std::string node_name(NodeId node) const;

 private:
  std::set<Dpid> switches_;
  std::vector<HostInfo> hosts_;
  std::vector<Link> links_;
  std::map<PortRef, size_t> port_to_link_;
  std::map<std::pair<NodeId, NodeId>, size_t> pair_to_link_;
  std::map<std::string, size_t> name_to_host_;
  std::map<MacAddress, size_t> mac_to_host_;
  std::map<Ipv4Address, size_t> ip_to_host_;
};

}  // namespace edgesim
