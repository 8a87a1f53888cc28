#include "edgesim/topology.hpp"

#include <algorithm>
#include <stdexcept>

namespace edgesim {

namespace {
std::pair<NodeId, NodeId> ordered(NodeId a, NodeId b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}
}  // namespace

Dpid Topology::add_switch(Dpid dpid) {
  if (!switches_.insert(dpid).second) {
    throw std::invalid_argument("duplicate dpid " + std::to_string(dpid));
  }
  return dpid;
}

size_t Topology::add_host(HostInfo info, double capacity_bps, double delay_s,
                          Power link_power) {
  if (name_to_host_.count(info.name)) {
    throw std::invalid_argument("duplicate host name " + info.name);
  }
  if (mac_to_host_.count(info.mac)) {
    throw std::invalid_argument("duplicate host mac " + info.mac.to_string());
  }
  if (!has_switch(info.attached_dpid)) {
    throw std::invalid_argument("host " + info.name +
                                " attached to unknown switch");
  }
  const size_t index = hosts_.size();
  name_to_host_[info.name] = index;
  mac_to_host_[info.mac] = index;
  ip_to_host_[info.ip] = index;
  const Dpid dpid = info.attached_dpid;
  const PortIndex port = info.attached_port;
  hosts_.push_back(std::move(info));
  add_link(NodeId::host(index), 0, NodeId::sw(dpid), port, capacity_bps,
           delay_s, link_power);
  return index;
}

size_t Topology::add_link(NodeId a, PortIndex a_port, NodeId b,
                          PortIndex b_port, double capacity_bps,
                          double delay_s, Power power) {
  if (!has_node(a) || !has_node(b)) {
    throw std::invalid_argument("link endpoint references unknown node");
  }
  const PortRef pa{a, a_port};
  const PortRef pb{b, b_port};
  if (port_to_link_.count(pa) || port_to_link_.count(pb)) {
    throw std::invalid_argument("port already has a link");
  }
  if (pair_to_link_.count(ordered(a, b))) {
    throw std::invalid_argument("nodes already linked");
  }
  const size_t index = links_.size();
  links_.push_back(Link{pa, pb, capacity_bps, delay_s, power, 1.0, 1.0});
  port_to_link_[pa] = index;
  port_to_link_[pb] = index;
  pair_to_link_[ordered(a, b)] = index;
  return index;
}

bool Topology::has_node(NodeId node) const {
  if (node.is_switch()) return has_switch(node.id);
  return node.id < hosts_.size();
}

std::optional<size_t> Topology::host_index_by_name(
    const std::string& name) const {
  auto it = name_to_host_.find(name);
  if (it == name_to_host_.end()) return std::nullopt;
  return it->second;
}

std::optional<size_t> Topology::host_index_by_mac(MacAddress mac) const {
  auto it = mac_to_host_.find(mac);
  if (it == mac_to_host_.end()) return std::nullopt;
  return it->second;
}

std::optional<size_t> Topology::host_index_by_ip(Ipv4Address ip) const {
  auto it = ip_to_host_.find(ip);
  if (it == ip_to_host_.end()) return std::nullopt;
  return it->second;
}

std::optional<size_t> Topology::link_at(PortRef port) const {
  auto it = port_to_link_.find(port);
  if (it == port_to_link_.end()) return std::nullopt;
  return it->second;
}

std::optional<size_t> Topology::link_between(NodeId a, NodeId b) const {
  auto it = pair_to_link_.find(ordered(a, b));
  if (it == pair_to_link_.end()) return std::nullopt;
  return it->second;
}

std::vector<Neighbor> Topology::neighbors(NodeId node,
                                          bool powered_only) const {
  std::vector<Neighbor> result;
  for (auto& [port, index] : port_to_link_) {
    if (port.node != node) continue;
    const Link& l = links_[index];
    if (powered_only && l.power == Power::Off) continue;
    const PortRef other = l.a.node == node ? l.b : l.a;
    result.push_back(Neighbor{other.node, port.port, index});
  }
  std::sort(result.begin(), result.end(), [](const auto& x, const auto& y) {
    return x.node < y.node;
  });
  return result;
}

std::vector<PortIndex> Topology::switch_ports(Dpid dpid) const {
  std::vector<PortIndex> ports;
  const NodeId node = NodeId::sw(dpid);
  for (auto& [port, index] : port_to_link_) {
    if (port.node == node) ports.push_back(port.port);
  }
  std::sort(ports.begin(), ports.end());
  return ports;
}

void Topology::set_link_power(size_t index, Power power) {
  links_.at(index).power = power;
}

double Topology::edge_weight(NodeId from, NodeId to) const {
  auto index = link_between(from, to);
  if (!index) throw std::invalid_argument("no link between nodes");
  const Link& l = links_[*index];
  return l.a.node == from ? l.weight_ab : l.weight_ba;
}

void Topology::set_edge_weight(NodeId from, NodeId to, double weight) {
  auto index = link_between(from, to);
  if (!index) throw std::invalid_argument("no link between nodes");
  Link& l = links_[*index];
  (l.a.node == from ? l.weight_ab : l.weight_ba) = weight;
}

std::string Topology::node_name(NodeId node) const {
  if (node.is_switch()) return "s" + std::to_string(node.id);
  if (node.id < hosts_.size()) return hosts_[node.id].name;
  return "h?" + std::to_string(node.id);
}

}  // namespace edgesim
