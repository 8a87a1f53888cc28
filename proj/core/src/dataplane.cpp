#include "edgesim/dataplane.hpp"

#include <algorithm>

namespace edgesim {

bool FlowMatch::matches(PortIndex port, const Frame& frame) const {
  if (in_port && *in_port != port) return false;
  if (eth_type && *eth_type != frame.eth.type) return false;
  if (eth_dst && *eth_dst != frame.eth.dst) return false;
  if (ipv4_src || ipv4_dst || proto) {
    if (!frame.ipv4) return false;
    if (ipv4_src && *ipv4_src != frame.ipv4->src) return false;
    if (ipv4_dst && *ipv4_dst != frame.ipv4->dst) return false;
    if (proto && *proto != frame.ipv4->proto) return false;
  }
  return true;
}

size_t select_bucket(const SelectGroup& group, const Frame& frame) {
  if (group.buckets.empty()) return 0;
  double total = 0;
  for (const Bucket& b : group.buckets) total += b.weight;
  if (total <= 0) return 0;
  const uint64_t h = fnv1a64(frame.flow_key_bytes());
  // Map the hash onto [0, total) and pick by cumulative weight.
  const double u = static_cast<double>(h) / 18446744073709551616.0;  // 2^64
  const double point = u * total;
  double cum = 0;
  for (size_t i = 0; i < group.buckets.size(); ++i) {
    cum += group.buckets[i].weight;
    if (point < cum && group.buckets[i].weight > 0) return i;
  }
  for (size_t i = group.buckets.size(); i-- > 0;) {
    if (group.buckets[i].weight > 0) return i;
  }
  return 0;
}

Switch::Switch(Dpid dpid, FailMode mode, std::vector<PortIndex> ports,
               Power power)
    : dpid_(dpid), fail_mode_(mode), power_(power), ports_(std::move(ports)) {
  std::sort(ports_.begin(), ports_.end());
  for (PortIndex p : ports_) port_stats_[p];
}

void Switch::set_power(Power power) {
  if (power_ == power) return;
  power_ = power;
  if (power_ == Power::Off) {
    // Cold shutdown loses all soft state.
    flow_table_.clear();
    group_table_.clear();
    l2_table_.clear();
    for (auto& [port, counters] : port_stats_) counters = PortCounters{};
    connected_.clear();
  }
}

void Switch::ensure_on() const {
  if (power_ != Power::On) throw PoweredOffError(dpid_);
}

void Switch::count_tx(PortIndex port, const Frame& frame) {
  auto& c = port_stats_[port];
  c.tx_bytes += frame.wire_size();
  c.tx_packets += 1;
}

void Switch::add_port_tx(PortIndex port, uint64_t bytes, uint64_t packets) {
  if (power_ != Power::On) return;
  auto& c = port_stats_[port];
  c.tx_bytes += bytes;
  c.tx_packets += packets;
}

const FlowRule* Switch::lookup(PortIndex in_port, const Frame& frame) const {
  // Table is kept sorted by (-priority, install_seq); first hit wins.
  for (const FlowRule& rule : flow_table_) {
    if (rule.match.matches(in_port, frame)) return &rule;
  }
  return nullptr;
}

std::vector<SwitchEffect> Switch::run_actions(
    const std::vector<FlowAction>& actions, PortIndex in_port, Frame frame,
    bool allow_groups, bool allow_packet_in) {
  std::vector<SwitchEffect> effects;
  for (const FlowAction& action : actions) {
    if (auto* set_dst = std::get_if<SetIpv4Dst>(&action)) {
      if (frame.ipv4) frame.ipv4->dst = set_dst->addr;
    } else if (auto* set_src = std::get_if<SetIpv4Src>(&action)) {
      if (frame.ipv4) frame.ipv4->src = set_src->addr;
    } else if (auto* out = std::get_if<Output>(&action)) {
      count_tx(out->port, frame);
      effects.push_back(ForwardOnPort{out->port, frame});
    } else if (auto* grp = std::get_if<OutputGroup>(&action)) {
      if (!allow_groups) continue;
      auto it = group_table_.find(grp->group_id);
      if (it == group_table_.end() || it->second.buckets.empty()) continue;
      const Bucket& bucket =
          it->second.buckets[select_bucket(it->second, frame)];
      auto nested = run_actions(bucket.actions, in_port, frame,
                                /*allow_groups=*/false, allow_packet_in);
      for (auto& e : nested) effects.push_back(std::move(e));
    } else if (std::holds_alternative<Flood>(action)) {
      for (PortIndex p : ports_) {
        if (p == in_port) continue;
        count_tx(p, frame);
        effects.push_back(ForwardOnPort{p, frame});
      }
    } else if (std::holds_alternative<Drop>(action)) {
      return effects;
    } else if (std::holds_alternative<SendToControllers>(action)) {
      if (!allow_packet_in) continue;
      if (!connected_.empty()) {
        effects.push_back(EmitPacketIn{
            in_port, frame,
            std::vector<size_t>(connected_.begin(), connected_.end())});
      } else if (fail_mode_ == FailMode::Standalone) {
        auto fallback = l2_learn_and_forward(in_port, frame);
        for (auto& e : fallback) effects.push_back(std::move(e));
      }
      // Secure with no controllers: drop.
    }
  }
  return effects;
}

std::vector<SwitchEffect> Switch::process_frame(PortIndex in_port,
                                                const Frame& frame) {
  ensure_on();
  auto& rx = port_stats_[in_port];
  rx.rx_bytes += frame.wire_size();
  rx.rx_packets += 1;

  // A disconnected secure switch discards everything.
  if (fail_mode_ == FailMode::Secure && connected_.empty()) return {};

  // Rule lookup needs mutable access for the counters.
  for (FlowRule& rule : flow_table_) {
    if (!rule.match.matches(in_port, frame)) continue;
    rule.packet_count += 1;
    rule.byte_count += frame.wire_size();
    return run_actions(rule.actions, in_port, frame, /*allow_groups=*/true,
                       /*allow_packet_in=*/true);
  }

  // Table miss.
  if (!connected_.empty()) {
    return {EmitPacketIn{
        in_port, frame,
        std::vector<size_t>(connected_.begin(), connected_.end())}};
  }
  if (fail_mode_ == FailMode::Standalone) {
    return l2_learn_and_forward(in_port, frame);
  }
  return {};
}

std::vector<SwitchEffect> Switch::l2_learn_and_forward(PortIndex in_port,
                                                       const Frame& frame) {
  l2_table_[frame.eth.src] = in_port;
  auto it = l2_table_.find(frame.eth.dst);
  if (it != l2_table_.end() && !frame.eth.dst.is_broadcast()) {
    count_tx(it->second, frame);
    return {ForwardOnPort{it->second, frame}};
  }
  std::vector<SwitchEffect> effects;
  for (PortIndex p : ports_) {
    if (p == in_port) continue;
    count_tx(p, frame);
    effects.push_back(ForwardOnPort{p, frame});
  }
  return effects;
}

std::vector<SwitchEffect> Switch::apply_packet_out(
    const std::vector<FlowAction>& actions, PortIndex in_port,
    const Frame& frame) {
  ensure_on();
  return run_actions(actions, in_port, frame, /*allow_groups=*/true,
                     /*allow_packet_in=*/false);
}

void Switch::apply_flow_mod(const FlowModOp& op) {
  ensure_on();
  if (auto* add = std::get_if<FlowModAdd>(&op)) {
    FlowRule rule = add->rule;
    std::erase_if(flow_table_, [&](const FlowRule& r) {
      return r.priority == rule.priority && r.match == rule.match;
    });
    rule.install_seq = next_install_seq_++;
    rule.packet_count = 0;
    rule.byte_count = 0;
    auto pos = std::find_if(
        flow_table_.begin(), flow_table_.end(), [&](const FlowRule& r) {
          return r.priority < rule.priority;
        });
    flow_table_.insert(pos, std::move(rule));
  } else if (auto* del = std::get_if<FlowModDeleteFrom>(&op)) {
    std::erase_if(flow_table_, [&](const FlowRule& r) {
      return r.installed_by == del->controller;
    });
  } else {
    flow_table_.clear();
  }
}

void Switch::apply_group_mod(SelectGroup group) {
  ensure_on();
  group_table_[group.group_id] = std::move(group);
}

PortStatsSnapshot Switch::read_port_stats() const {
  ensure_on();
  return port_stats_;
}

FlowStatsSnapshot Switch::read_flow_stats() const {
  ensure_on();
  FlowStatsSnapshot snapshot;
  snapshot.reserve(flow_table_.size());
  for (const FlowRule& r : flow_table_) {
    snapshot.push_back(
        FlowStatEntry{r.match, r.priority, r.packet_count, r.byte_count});
  }
  return snapshot;
}

}  // namespace edgesim
