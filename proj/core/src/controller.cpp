#include "edgesim/controller.hpp"

#include <algorithm>
#include <deque>
#include <iostream>

namespace edgesim {

namespace {

constexpr int kDefaultRulePriority = 0;
constexpr int kPathRulePriority = 10;
constexpr int kNatRulePriority = 20;

std::string flow_tuple(const Frame& frame) {
  std::string t = frame.ipv4->src.to_string();
  t += "|" + std::to_string(static_cast<int>(frame.ipv4->proto));
  if (frame.l4) {
    t += "|" + std::to_string(frame.l4->src_port) + "|" +
         std::to_string(frame.l4->dst_port);
  }
  return t;
}

}  // namespace

Controller::Controller(size_t index, uint32_t cont_id, Topology view,
                       ControllerConfig config, std::optional<FarmConfig> farm)
    : index_(index),
      cont_id_(cont_id),
      topo_view_(std::move(view)),
      config_(std::move(config)) {
  for (Dpid dpid : topo_view_.switches()) datapaths_.insert(dpid);
  if (farm) {
    FarmState state;
    state.cfg = std::move(*farm);
    state.n_active = state.cfg.initial_active > 0
                         ? state.cfg.initial_active
                         : static_cast<int>(state.cfg.servers.size());
    state.n_active = std::min<int>(state.n_active,
                                   static_cast<int>(state.cfg.servers.size()));
    farm_ = std::move(state);
  }
}

uint32_t Controller::group_id_for(size_t host_index, Dpid dpid) {
  return static_cast<uint32_t>(((host_index + 1) << 16) | (dpid & 0xffff));
}

void Controller::on_link_down(NodeId a, NodeId b) {
  if (auto index = topo_view_.link_between(a, b)) {
    topo_view_.set_link_power(*index, Power::Off);
  }
}

bool Controller::should_process(Dpid dpid) const {
  const auto n = static_cast<uint64_t>(num_serv_);
  if (n <= 1) return true;
  if (config_.scheme == ArbitrationScheme::ByDpid) {
    return dpid % n == static_cast<uint64_t>(order_);
  }
  return packet_in_counter_ % n == static_cast<uint64_t>(order_);
}

LoopGuardResult Controller::loop_guard(Dpid dpid, MacAddress src,
                                       MacAddress dst, PortIndex in_port) {
  auto& learned = learned_macs_[dpid];
  auto it = learned.find(src);
  if (it == learned.end()) {
    learned[src] = in_port;
    return LoopGuardResult::Proceed;
  }
  // A broadcast from an already-learned source arriving on a different
  // port can only be a looped copy.
  if (it->second != in_port && dst.is_broadcast()) {
    return LoopGuardResult::Suppress;
  }
  return LoopGuardResult::Proceed;
}

std::vector<ControlMessage> Controller::handle_packet_in(
    const PacketInEvent& event, const PowerView& power, double now_s) {
  ++packet_in_counter_;
  if (mode_ == ControllerRole::Slave || mode_ == ControllerRole::Unset) {
    return {};
  }
  if (mode_ == ControllerRole::Equal && !should_process(event.dpid)) {
    return {};
  }
  ++processed_count_;

  update_topology_weights();

  const Frame& frame = event.frame;
  if (loop_guard(event.dpid, frame.eth.src, frame.eth.dst, event.in_port) ==
      LoopGuardResult::Suppress) {
    return {};
  }

  if (frame.arp) {
    if (farm_ && frame.arp->opcode == ArpOp::Request &&
        frame.arp->dst_ip == farm_->cfg.virtual_ip) {
      auto [reply, targets] =
          generate_arp_reply(frame.arp->src_ip, frame.arp->src_mac, power,
                             now_s);
      ControlMessage out{PacketOutMsg{event.dpid,
                                      event.in_port,
                                      {Output{event.in_port}},
                                      std::move(reply)}};
      if (!targets.empty()) {
        ActivateMsg activate;
        activate.targets = std::move(targets);
        activate.deferred.push_back(std::move(out));
        return {ControlMessage{std::move(activate)}};
      }
      std::vector<ControlMessage> msgs;
      msgs.push_back(std::move(out));
      return msgs;
    }
    return l2_route(event.dpid, event.in_port, frame);
  }

  if (frame.ipv4) {
    if (farm_ && frame.ipv4->dst == farm_->cfg.virtual_ip) {
      const FarmServer* server = server_by_mac(frame.eth.dst);
      if (!server) return {};  // unknown server MAC: drop the event
      note_farm_flow(frame, now_s);
      std::vector<ControlMessage> msgs;
      if (event.dpid == server->last_dpid) {
        msgs = handle_virtual_ip_packet(event.dpid, event.in_port, frame);
      } else {
        msgs = l2_route(event.dpid, event.in_port, frame);
      }
      auto targets = farm_power_deficit(power);
      if (!targets.empty()) {
        ActivateMsg activate;
        activate.targets = std::move(targets);
        activate.deferred = std::move(msgs);
        return {ControlMessage{std::move(activate)}};
      }
      return msgs;
    }
    return l2_route(event.dpid, event.in_port, frame);
  }

  return {};
}

std::vector<ControlMessage> Controller::l2_route(Dpid dpid, PortIndex in_port,
                                                 const Frame& frame) {
  const MacAddress dst = frame.eth.dst;
  if (dst.is_broadcast() || !topo_view_.host_index_by_mac(dst)) {
    return {ControlMessage{PacketOutMsg{dpid, in_port, {Flood{}}, frame}}};
  }
  auto msgs = install_paths(dpid, in_port, frame.eth.src, dst);
  if (const auto* actions = cached_actions(dpid, dst)) {
    msgs.push_back(
        ControlMessage{PacketOutMsg{dpid, in_port, *actions, frame}});
  }
  return msgs;
}

std::pair<Frame, std::vector<DeviceRef>> Controller::generate_arp_reply(
    Ipv4Address requester_ip, MacAddress requester_mac,
    const PowerView& power, double now_s) {
  if (!farm_) throw std::logic_error("no farm configured");
  if (farm_->n_active <= 0) throw EmptyFarmError{};

  const size_t i = static_cast<size_t>(
      requester_mac.as_integer() %
      static_cast<uint64_t>(farm_->n_active));
  const FarmServer& server = farm_->cfg.servers[i];
  farm_->last_activity = now_s;

  Frame reply = Frame::make_arp_reply(server.mac, farm_->cfg.virtual_ip,
                                      requester_mac, requester_ip);
  return {std::move(reply), farm_power_deficit(power)};
}

std::vector<ControlMessage> Controller::handle_virtual_ip_packet(
    Dpid dpid, PortIndex in_port, const Frame& frame) {
  const FarmServer* server = server_by_mac(frame.eth.dst);
  if (!server || !frame.ipv4) return {};  // unknown server MAC: drop

  const Ipv4Address client_ip = frame.ipv4->src;
  const Ipv4Address virtual_ip = farm_->cfg.virtual_ip;
  std::vector<ControlMessage> msgs;

  const std::string sig =
      client_ip.to_string() + "@" + std::to_string(in_port);
  if (!nat_rules_[dpid].count(sig)) {
    nat_rules_[dpid].insert(sig);
    FlowRule forward;
    forward.match.in_port = in_port;
    forward.match.eth_type = EtherType::Ipv4;
    forward.match.ipv4_src = client_ip;
    forward.match.ipv4_dst = virtual_ip;
    forward.priority = kNatRulePriority;
    forward.actions = {SetIpv4Dst{server->ip}, Output{server->out_port}};
    forward.installed_by = cont_id_;

    FlowRule reverse;
    reverse.match.in_port = server->out_port;
    reverse.match.eth_type = EtherType::Ipv4;
    reverse.match.ipv4_src = server->ip;
    reverse.match.ipv4_dst = client_ip;
    reverse.priority = kNatRulePriority;
    reverse.actions = {SetIpv4Src{virtual_ip}, Output{in_port}};
    reverse.installed_by = cont_id_;

    msgs.push_back(ControlMessage{FlowModMsg{dpid, FlowModAdd{forward}}});
    msgs.push_back(ControlMessage{FlowModMsg{dpid, FlowModAdd{reverse}}});
    farm_->rule_dpids.insert(dpid);
  }

  // Re-emit the triggering packet with the destination rewritten.
  msgs.push_back(ControlMessage{PacketOutMsg{
      dpid,
      in_port,
      {SetIpv4Dst{server->ip}, Output{server->out_port}},
      frame}});
  return msgs;
}

std::vector<ControlMessage> Controller::poll_stats(
    const PowerView& power) const {
  std::vector<ControlMessage> msgs;
  for (Dpid dpid : datapaths_) {
    if (power.is_on && !power.is_on(DeviceRef::sw(dpid))) continue;
    msgs.push_back(ControlMessage{StatsRequestMsg{dpid, StatsKind::Port}});
    msgs.push_back(ControlMessage{StatsRequestMsg{dpid, StatsKind::Flow}});
  }
  return msgs;
}

void Controller::update_link_costs(Dpid dpid,
                                   const PortStatsSnapshot& snapshot) {
  const double alfa = config_.alfa;
  for (const auto& [port, counters] : snapshot) {
    const auto key = std::make_pair(dpid, port);
    uint64_t prev = 0;
    if (auto it = tx_bytes_prev_.find(key); it != tx_bytes_prev_.end()) {
      prev = it->second;
    }
    // A counter below the previous sample means the switch power-cycled.
    const double delta = counters.tx_bytes >= prev
                             ? static_cast<double>(counters.tx_bytes - prev)
                             : static_cast<double>(counters.tx_bytes);
    rate_[key] = alfa * rate_[key] + (1.0 - alfa) * delta;
    tx_bytes_prev_[key] = counters.tx_bytes;
    bandwidths_[key] = alfa * bandwidths_[key] + (1.0 - alfa) * rate_[key];

    const double bw = bandwidths_[key];
    double cost = 1000.0;
    if (bw > 0) {
      const double c = 1.0 - config_.default_bw1 / (config_.k * bw);
      if (c > 0) cost = 10.0 / c;
    }
    costs_[key] = cost;
  }
}

void Controller::update_topology_weights() {
  for (Dpid dpid : topo_view_.switches()) {
    const NodeId node = NodeId::sw(dpid);
    for (const Neighbor& n : topo_view_.neighbors(node, false)) {
      if (!n.node.is_switch()) continue;
      topo_view_.set_edge_weight(node, n.node,
                                 cost_or_default(dpid, n.local_port));
    }
  }
}

double Controller::cost_or_default(Dpid dpid, PortIndex port) const {
  auto it = costs_.find({dpid, port});
  return it == costs_.end() ? config_.default_cost : it->second;
}

EdgeWeightFn Controller::dijkstra_weights() const {
  if (!config_.invert_dijkstra_weights) return {};
  const Topology* view = &topo_view_;
  return [view](NodeId from, NodeId to) {
    const double w = view->edge_weight(from, to);
    return w > 0 ? 1.0 / w : 1e9;
  };
}

std::vector<ControlMessage> Controller::install_paths(Dpid dpid,
                                                      PortIndex /*in_port*/,
                                                      MacAddress /*src*/,
                                                      MacAddress dst) {
  auto host_index = topo_view_.host_index_by_mac(dst);
  if (!host_index) return {};
  const NodeId dst_node = NodeId::host(*host_index);
  const NodeId src_node = NodeId::sw(dpid);

  auto paths = all_simple_paths(topo_view_, src_node, dst_node);
  if (paths.empty()) return {};

  // Traffic for a farm server must still miss at the last switch before
  // it, where the address rewrite is installed reactively.
  const FarmServer* dst_server = server_by_mac(dst);

  std::vector<ControlMessage> msgs;
  std::set<Dpid> touched;

  auto emit_rule = [&](Dpid u, std::vector<FlowAction> actions) {
    auto& sig = l2_rules_[u];
    auto it = sig.find(dst);
    if (it != sig.end() && it->second.actions == actions) return;
    sig[dst] = RuleSig{kPathRulePriority, actions};
    FlowRule rule;
    rule.match.eth_dst = dst;
    rule.priority = kPathRulePriority;
    rule.actions = std::move(actions);
    rule.installed_by = cont_id_;
    msgs.push_back(ControlMessage{FlowModMsg{u, FlowModAdd{std::move(rule)}}});
    touched.insert(u);
  };

  auto port_toward = [&](NodeId from, NodeId to) -> PortIndex {
    auto link_index = topo_view_.link_between(from, to);
    const Link& link = topo_view_.link(*link_index);
    return link.a.node == from ? link.a.port : link.b.port;
  };

  if (!config_.use_select_groups || paths.size() == 1) {
    // Single route: a plain next-hop rule at the asking switch. Later
    // switches install their own hops reactively from their Packet-Ins.
    std::vector<NodeId> path;
    if (paths.size() == 1) {
      path = paths[0];
    } else {
      auto sp = shortest_path(topo_view_, src_node, dst_node,
                              dijkstra_weights());
      if (!sp) return {};
      path = std::move(*sp);
    }
    const PortIndex port = port_toward(path[0], path[1]);
    emit_rule(dpid, {Output{port}});
    mac_to_port_[dpid][dst] = port;
  } else {
    // Hop counts to the destination for the downstream no-backtracking
    // filter: a relayed frame may only move strictly closer.
    std::map<NodeId, int> hops;
    {
      std::deque<NodeId> queue{dst_node};
      hops[dst_node] = 0;
      while (!queue.empty()) {
        const NodeId u = queue.front();
        queue.pop_front();
        for (const Neighbor& n : topo_view_.neighbors(u)) {
          if (hops.count(n.node)) continue;
          hops[n.node] = hops[u] + 1;
          queue.push_back(n.node);
        }
      }
    }

    std::vector<NodeId> visit_order;
    std::set<NodeId> seen;
    for (const auto& path : paths) {
      for (const NodeId& node : path) {
        if (node.is_switch() && seen.insert(node).second) {
          visit_order.push_back(node);
        }
      }
    }

    for (const NodeId& u : visit_order) {
      if (dst_server && u.id == dst_server->last_dpid) continue;
      std::vector<std::vector<NodeId>> suffixes;
      for (const auto& path : paths) {
        auto pos = std::find(path.begin(), path.end(), u);
        if (pos == path.end()) continue;
        std::vector<NodeId> suffix(pos, path.end());
        if (std::find(suffixes.begin(), suffixes.end(), suffix) ==
            suffixes.end()) {
          suffixes.push_back(std::move(suffix));
        }
      }
      if (u != src_node) {
        std::vector<std::vector<NodeId>> forward;
        for (auto& s : suffixes) {
          if (hops.count(s[1]) && hops.count(u) && hops[s[1]] < hops[u]) {
            forward.push_back(s);
          }
        }
        if (!forward.empty()) {
          suffixes = std::move(forward);
        } else {
          // Keep the cheapest suffix so forwarding still makes progress.
          auto best = std::min_element(
              suffixes.begin(), suffixes.end(),
              [&](const auto& x, const auto& y) {
                return path_cost(topo_view_, x) < path_cost(topo_view_, y);
              });
          suffixes = {*best};
        }
      }

      if (suffixes.size() == 1) {
        const PortIndex port = port_toward(u, suffixes[0][1]);
        emit_rule(u.id, {Output{port}});
        mac_to_port_[u.id][dst] = port;
        continue;
      }

      const uint32_t gid = group_id_for(*host_index, u.id);
      SelectGroup group;
      group.group_id = gid;
      std::vector<double> weights;
      for (const auto& suffix : suffixes) {
        Bucket bucket;
        bucket.weight = path_cost(topo_view_, suffix);
        bucket.actions = {Output{port_toward(u, suffix[1])}};
        weights.push_back(bucket.weight);
        group.buckets.push_back(std::move(bucket));
      }
      auto& cached = group_weights_[{u.id, gid}];
      if (cached != weights) {
        cached = weights;
        msgs.push_back(ControlMessage{GroupModMsg{u.id, group}});
        touched.insert(u.id);
      }
      emit_rule(u.id, {OutputGroup{gid}});
      mac_to_port_[u.id][dst] = port_toward(u, suffixes[0][1]);
    }
  }

  if (farm_ && is_farm_mac(dst)) {
    for (Dpid u : touched) farm_->rule_dpids.insert(u);
  }
  return msgs;
}

FlowRule Controller::default_rule() const {
  FlowRule rule;
  rule.priority = kDefaultRulePriority;
  rule.actions = {SendToControllers{}};
  rule.installed_by = cont_id_;
  return rule;
}

std::vector<Dpid> Controller::controlled_switches() const {
  std::vector<Dpid> result;
  switch (mode_) {
    case ControllerRole::Master:
      result.assign(datapaths_.begin(), datapaths_.end());
      break;
    case ControllerRole::Equal:
      for (Dpid dpid : datapaths_) {
        if (config_.scheme == ArbitrationScheme::ByCounter ||
            should_process(dpid)) {
          result.push_back(dpid);
        }
      }
      break;
    default:
      break;
  }
  return result;
}

std::vector<ControlMessage> Controller::role_monitor(
    const std::string& reply_line, double /*now_s*/) {
  auto reply = ManagerCore::parse(reply_line);
  if (!reply) {
    // Fail safe: keep the previous role.
    std::cerr << "controller " << index_ << ": malformed manager reply '"
              << reply_line << "'\n";
    return {};
  }
  num_serv_ = reply->count;
  order_ = reply->order;
  mode_ = reply->role;
  if (num_serv_ == 1) mode_ = ControllerRole::Master;

  std::vector<ControlMessage> msgs;
  if (mode_ != mode_prev_) {
    for (Dpid dpid : datapaths_) {
      msgs.push_back(ControlMessage{RoleSetMsg{dpid, mode_}});
    }
    // Replace whatever rules the previous owner left behind.
    for (Dpid dpid : controlled_switches()) {
      msgs.push_back(ControlMessage{FlowModMsg{dpid, FlowModDeleteAll{}}});
      msgs.push_back(
          ControlMessage{FlowModMsg{dpid, FlowModAdd{default_rule()}}});
      l2_rules_.erase(dpid);
      nat_rules_.erase(dpid);
      for (auto it = group_weights_.begin(); it != group_weights_.end();) {
        it = it->first.first == dpid ? group_weights_.erase(it)
                                     : std::next(it);
      }
    }
  }
  mode_prev_ = mode_;
  return msgs;
}

std::vector<ControlMessage> Controller::check_farm_idle(
    const PowerView& power, double now_s) {
  if (!farm_ || farm_->cfg.segment.empty()) return {};
  if (mode_ == ControllerRole::Slave || mode_ == ControllerRole::Unset) {
    return {};
  }
  if (mode_ == ControllerRole::Equal && order_ != 0) return {};

  bool any_on = false;
  for (const DeviceRef& dev : farm_->cfg.segment) {
    if (power.is_on(dev)) {
      any_on = true;
      break;
    }
  }
  if (!any_on) return {};
  if (now_s - farm_->last_activity < farm_->cfg.idle_timer_s) return {};
  if (power.farm_traffic_active && power.farm_traffic_active()) {
    farm_->last_activity = now_s;
    return {};
  }

  std::vector<ControlMessage> msgs;
  for (Dpid dpid : farm_->rule_dpids) {
    msgs.push_back(
        ControlMessage{FlowModMsg{dpid, FlowModDeleteFrom{cont_id_}}});
    msgs.push_back(
        ControlMessage{FlowModMsg{dpid, FlowModAdd{default_rule()}}});
    l2_rules_.erase(dpid);
    nat_rules_.erase(dpid);
    for (auto it = group_weights_.begin(); it != group_weights_.end();) {
      it = it->first.first == dpid ? group_weights_.erase(it) : std::next(it);
    }
  }
  msgs.push_back(ControlMessage{DeactivateMsg{farm_->cfg.segment}});
  farm_->rule_dpids.clear();
  farm_->active_flows.clear();
  farm_->n_active = farm_->cfg.initial_active > 0
                        ? farm_->cfg.initial_active
                        : static_cast<int>(farm_->cfg.servers.size());
  return msgs;
}

double Controller::port_cost(Dpid dpid, PortIndex port) const {
  return cost_or_default(dpid, port);
}

double Controller::port_rate(Dpid dpid, PortIndex port) const {
  auto it = rate_.find({dpid, port});
  return it == rate_.end() ? 0.0 : it->second;
}

double Controller::port_bandwidth(Dpid dpid, PortIndex port) const {
  auto it = bandwidths_.find({dpid, port});
  return it == bandwidths_.end() ? 0.0 : it->second;
}

int Controller::farm_n_active() const { return farm_ ? farm_->n_active : 0; }

const FarmServer* Controller::server_by_mac(MacAddress mac) const {
  if (!farm_) return nullptr;
  for (const FarmServer& s : farm_->cfg.servers) {
    if (s.mac == mac) return &s;
  }
  return nullptr;
}

std::vector<DeviceRef> Controller::farm_power_deficit(
    const PowerView& power) const {
  std::vector<DeviceRef> off;
  if (!farm_ || !power.is_on) return off;
  for (const DeviceRef& dev : farm_->cfg.segment) {
    if (!power.is_on(dev)) off.push_back(dev);
  }
  return off;
}

void Controller::note_farm_flow(const Frame& frame, double now_s) {
  if (!farm_ || !frame.ipv4) return;
  farm_->last_activity = now_s;
  farm_->active_flows.insert(flow_tuple(frame));
  const auto flows = static_cast<int>(farm_->active_flows.size());
  if (flows > farm_->cfg.flows_per_server * farm_->n_active &&
      farm_->n_active < static_cast<int>(farm_->cfg.servers.size())) {
    ++farm_->n_active;
  }
}

bool Controller::is_farm_mac(MacAddress mac) const {
  return server_by_mac(mac) != nullptr;
}

const std::vector<FlowAction>* Controller::cached_actions(
    Dpid dpid, MacAddress dst) const {
  auto sw = l2_rules_.find(dpid);
  if (sw == l2_rules_.end()) return nullptr;
  auto it = sw->second.find(dst);
  if (it == sw->second.end()) return nullptr;
  return &it->second.actions;
}

}  // namespace edgesim
