#include "edgesim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <set>

#include "edgesim/cluster.hpp"
#include "edgesim/controller.hpp"
#include "edgesim/dataplane.hpp"
#include "edgesim/engine.hpp"
#include "edgesim/maxmin.hpp"

namespace edgesim {

namespace {

struct EvFrame {
  NodeId node;
  PortIndex port{0};
  Frame frame;
};
struct EvSwitchCmd {
  size_t ctrl{0};
  ControlMessage msg;
};
struct EvPacketIn {
  size_t ctrl{0};
  PacketInEvent event;
  uint64_t event_id{0};
};
struct EvStatsReply {
  size_t ctrl{0};
  Dpid dpid{0};
  StatsKind kind{StatsKind::Port};
  PortStatsSnapshot ports;
};
struct EvMgrRequest {
  size_t ctrl{0};
  uint32_t cont_id{0};
};
struct EvMgrReply {
  size_t ctrl{0};
  std::string line;
};
struct EvTick {
  size_t ctrl{0};
};
struct EvPowerOn {
  DeviceRef device;
};
struct EvDeferred {
  size_t ctrl{0};
  std::vector<ControlMessage> msgs;
};
struct EvFailure {
  size_t index{0};
};
struct EvPing {
  size_t demand{0};
  int try_index{0};
};
struct EvFlowStart {
  size_t flow{0};
};
struct EvFlowEnd {
  size_t flow{0};
};

using EventPayload =
    std::variant<EvFrame, EvSwitchCmd, EvPacketIn, EvStatsReply, EvMgrRequest,
                 EvMgrReply, EvTick, EvPowerOn, EvDeferred, EvFailure, EvPing,
                 EvFlowStart, EvFlowEnd>;

struct PendingSend {
  enum class Kind : uint8_t { Echo, Probe };
  Kind kind{Kind::Echo};
  size_t id{0};  // ping demand index or flow index
  Frame frame;
};

struct HostRuntime {
  size_t index{0};
  HostInfo info;
  bool on{true};
  std::map<Ipv4Address, MacAddress> arp_cache;
  std::map<Ipv4Address, std::vector<PendingSend>> pending;
  uint32_t next_seq{1};
  struct EchoMeta {
    size_t demand{0};
    int try_index{0};
    SimTime t0{0};
    Ipv4Address pinged;  // replies must come from this address
  };
  std::map<uint32_t, EchoMeta> echoes;
};

struct FlowRuntime {
  size_t demand_index{0};
  std::string id;
  bool elastic{true};
  double cap_bps{0};
  size_t src_host{0};
  Ipv4Address dst_ip;
  IpProto proto{IpProto::Tcp};
  uint16_t src_port{0};
  uint16_t dst_port{0};
  SimTime start{0};
  SimTime end{0};
  Frame probe;  // eth.dst resolved at emission
  bool probe_delivered{false};
  bool finished{false};
  double rate_bps{0};
  double delivered_bits{0};
  std::vector<size_t> dlinks;
};

struct PingMeta {
  SimTime t0{0};
  bool replied{false};
};

struct ControllerRuntime {
  std::unique_ptr<Controller> logic;
  bool alive{true};
  bool mgr_connected{false};
};

class Simulation {
 public:
  explicit Simulation(Scenario scenario) : scn_(std::move(scenario)) {}

  MetricsReport run();

 private:
  // --- setup -------------------------------------------------------------
  void build();
  std::unique_ptr<Controller> make_controller(size_t index, uint32_t cont_id);
  uint32_t draw_cont_id();
  std::optional<FarmConfig> farm_config() const;
  Topology logical_view() const;

  // --- event handling ----------------------------------------------------
  void dispatch(EventPayload&& payload);
  void on_frame(const EvFrame& ev);
  void handle_effects(Dpid dpid, std::vector<SwitchEffect>&& effects);
  void deliver_out(NodeId node, PortIndex port, const Frame& frame);
  void host_receive(HostRuntime& host, const Frame& frame);
  void host_emit(HostRuntime& host, const Frame& frame);
  void flush_pending(HostRuntime& host, Ipv4Address ip, MacAddress mac);
  void on_switch_cmd(const EvSwitchCmd& ev);
  void on_packet_in(const EvPacketIn& ev);
  void on_mgr_request(const EvMgrRequest& ev);
  void on_mgr_reply(const EvMgrReply& ev);
  void on_tick(const EvTick& ev);
  void on_failure(const FailureInjection& inj);
  void on_ping(const EvPing& ev);
  void on_flow_start(const EvFlowStart& ev);
  void on_flow_end(const EvFlowEnd& ev);

  void send_heartbeat(size_t ctrl);
  void dispatch_controller_msgs(size_t ctrl,
                                std::vector<ControlMessage>&& msgs);
  void handle_activation(size_t ctrl, ActivateMsg&& msg);

  // --- power -------------------------------------------------------------
  bool device_on(const DeviceRef& dev) const;
  void set_device_power(const DeviceRef& dev, Power power);
  std::string device_name(const DeviceRef& dev) const;
  PowerView power_view();

  // --- fluid flows ---------------------------------------------------------
  void integrate_flows();
  void retrace_and_reallocate();
  std::vector<size_t> trace_route(const FlowRuntime& flow);
  bool farm_traffic_active() const;

  // --- bookkeeping ---------------------------------------------------------
  void account(MsgClass cls, uint64_t bytes);
  void note_network_event();
  double now_s() const { return sim_to_seconds(q_.now()); }
  Switch& switch_at(Dpid dpid) { return switches_.at(dpid); }

  Scenario scn_;
  Topology topo_;
  std::map<Dpid, Switch> switches_;
  std::vector<HostRuntime> hosts_;
  std::vector<ControllerRuntime> ctrls_;
  ManagerCore mgr_core_{false};
  EventQueue<EventPayload> q_;
  std::mt19937_64 rng_{1};

  SimTime duration_{0};
  SimTime ctrl_latency_{0};
  SimTime mgr_latency_{0};
  SimTime activation_latency_{0};
  SimTime ping_timeout_{0};

  std::vector<FlowRuntime> flows_;
  std::map<std::string, std::vector<PingResult>> ping_results_;
  std::map<std::string, std::vector<PingMeta>> ping_meta_;

  std::map<DeviceRef, SimTime> powering_;
  std::map<std::pair<Dpid, PortIndex>, double> tx_remainder_;
  SimTime last_integrate_{0};
  bool fluid_dirty_{false};

  MetricsReport rpt_;
  std::map<uint64_t, int> packet_in_handlers_;
  uint64_t next_packet_in_event_{0};
  std::optional<size_t> killed_master_;
};

// ---------------------------------------------------------------------------
// setup

std::optional<FarmConfig> Simulation::farm_config() const {
  if (!scn_.farm) return std::nullopt;
  FarmConfig cfg;
  cfg.virtual_ip = scn_.farm->virtual_ip;
  cfg.initial_active = scn_.farm->initial_active;
  cfg.idle_timer_s = scn_.farm->idle_timer_s;
  cfg.flows_per_server = scn_.farm->flows_per_server;
  for (const std::string& name : scn_.farm->servers) {
    const size_t host = *topo_.host_index_by_name(name);
    const HostInfo& info = topo_.host(host);
    cfg.servers.push_back(FarmServer{info.mac, info.ip, info.attached_dpid,
                                     info.attached_port, host});
  }
  // The activation segment: configured switches and links plus every
  // server host and its access link.
  std::set<DeviceRef> segment;
  for (Dpid dpid : scn_.farm->segment_switches) {
    segment.insert(DeviceRef::sw(dpid));
  }
  for (const auto& pair : scn_.farm->segment_links) {
    auto a = scn_.node_by_name(topo_, pair[0]);
    auto b = scn_.node_by_name(topo_, pair[1]);
    if (a && b) {
      if (auto link = topo_.link_between(*a, *b)) {
        segment.insert(DeviceRef::link(*link));
      }
    }
  }
  for (const FarmServer& server : cfg.servers) {
    segment.insert(DeviceRef::host(server.host_index));
    if (auto link = topo_.link_at(
            PortRef{NodeId::sw(server.last_dpid), server.out_port})) {
      segment.insert(DeviceRef::link(*link));
    }
  }
  cfg.segment.assign(segment.begin(), segment.end());
  return cfg;
}

Topology Simulation::logical_view() const {
  // Controllers route over the configured topology regardless of elastic
  // power state; only explicit link failures remove edges from the view.
  Topology view = scn_.build_topology();
  for (size_t i = 0; i < view.links().size(); ++i) {
    view.set_link_power(i, Power::On);
  }
  return view;
}

std::unique_ptr<Controller> Simulation::make_controller(size_t index,
                                                        uint32_t cont_id) {
  ControllerConfig cfg;
  cfg.poll_period_s = scn_.controllers.poll_period_s;
  cfg.alfa = scn_.controllers.alfa;
  cfg.default_bw1 = scn_.default_bw1_bytes_per_interval();
  cfg.k = scn_.controllers.k;
  cfg.invert_dijkstra_weights = scn_.controllers.invert_dijkstra_weights;
  cfg.use_select_groups = scn_.controllers.use_select_groups;
  cfg.scheme = scn_.controllers.scheme;
  auto controller = std::make_unique<Controller>(index, cont_id,
                                                 logical_view(), cfg,
                                                 farm_config());
  for (auto& [dpid, sw] : switches_) {
    if (!sw.is_on()) controller->disconnect_switch(dpid);
  }
  return controller;
}

uint32_t Simulation::draw_cont_id() {
  while (true) {
    const auto id = static_cast<uint32_t>(rng_());
    if (id == 0) continue;
    bool taken = false;
    for (const auto& cr : ctrls_) {
      if (cr.logic && cr.logic->cont_id() == id) taken = true;
    }
    if (!taken) return id;
  }
}

void Simulation::build() {
  topo_ = scn_.build_topology();
  rng_.seed(scn_.seed);
  duration_ = seconds_to_sim(scn_.duration_s);
  ctrl_latency_ = seconds_to_sim(scn_.controllers.control_latency_ms / 1e3);
  mgr_latency_ = seconds_to_sim(scn_.manager.latency_ms / 1e3);
  activation_latency_ = seconds_to_sim(scn_.activation_latency_s);
  ping_timeout_ = seconds_to_sim(scn_.ping_timeout_s);
  mgr_core_ = ManagerCore(scn_.controllers.equal_mode);

  for (const ScenarioSwitch& sw : scn_.switches) {
    switches_.emplace(sw.dpid, Switch(sw.dpid, sw.fail_mode,
                                      topo_.switch_ports(sw.dpid), sw.power));
  }
  for (size_t i = 0; i < topo_.hosts().size(); ++i) {
    HostRuntime host;
    host.index = i;
    host.info = topo_.host(i);
    host.on = scn_.hosts[i].link_power == Power::On;
    hosts_.push_back(std::move(host));
  }

  ctrls_.resize(static_cast<size_t>(scn_.controllers.count));
  for (size_t i = 0; i < ctrls_.size(); ++i) {
    ctrls_[i].logic = make_controller(i, draw_cont_id());
    for (auto& [dpid, sw] : switches_) {
      if (sw.is_on()) sw.connect_controller(i);
    }
  }

  rpt_.scenario_name = scn_.name;
  rpt_.seed = scn_.seed;
  rpt_.duration_s = scn_.duration_s;
  rpt_.manager.conn_mode =
      scn_.manager.conn_mode == ConnMode::ConcurrentPersistent ? "concurrent"
                                                               : "serial";
  for (MsgClass cls :
       {MsgClass::ManageCluster, MsgClass::DataPathControl,
        MsgClass::StatsCollection, MsgClass::OtherControlMsg}) {
    rpt_.control_bytes_total[msg_class_name(cls)] = 0;
  }

  // Boot: every controller heartbeats immediately, then every T.
  const SimTime tick = seconds_to_sim(scn_.controllers.poll_period_s);
  for (size_t i = 0; i < ctrls_.size(); ++i) {
    send_heartbeat(i);
    q_.schedule(tick, EvTick{i});
  }

  for (size_t d = 0; d < scn_.demands.size(); ++d) {
    if (const auto* ping = std::get_if<PingDemand>(&scn_.demands[d])) {
      const std::string id = "ping" + std::to_string(d);
      ping_results_[id].assign(static_cast<size_t>(ping->count),
                               PingResult{});
      ping_meta_[id].assign(static_cast<size_t>(ping->count), PingMeta{});
      for (int k = 0; k < ping->count; ++k) {
        q_.schedule(seconds_to_sim(ping->start_s + k * ping->interval_s),
                    EvPing{d, k});
      }
    } else {
      FlowRuntime flow;
      flow.demand_index = d;
      if (const auto* tcp = std::get_if<TcpDemand>(&scn_.demands[d])) {
        flow.id = "tcp" + std::to_string(d);
        flow.elastic = true;
        flow.src_host = *topo_.host_index_by_name(tcp->src);
        flow.dst_ip = tcp->dst_ip;
        flow.proto = IpProto::Tcp;
        flow.dst_port = tcp->dst_port;
        flow.start = seconds_to_sim(tcp->start_s);
        flow.end = seconds_to_sim(tcp->start_s + tcp->duration_s);
      } else {
        const auto* udp = std::get_if<UdpDemand>(&scn_.demands[d]);
        flow.id = "udp" + std::to_string(d);
        flow.elastic = false;
        flow.cap_bps = udp->rate_mbps * 1e6;
        flow.src_host = *topo_.host_index_by_name(udp->src);
        flow.dst_ip = udp->dst_ip;
        flow.proto = IpProto::Udp;
        flow.dst_port = udp->dst_port;
        flow.start = seconds_to_sim(udp->start_s);
        flow.end = seconds_to_sim(udp->start_s + udp->duration_s);
      }
      // Flow keys (source ports) are the only seeded randomness besides
      // cont_id draws.
      while (true) {
        flow.src_port = static_cast<uint16_t>(20000 + rng_() % 40000);
        bool taken = false;
        for (const FlowRuntime& other : flows_) {
          if (other.src_port == flow.src_port) taken = true;
        }
        if (!taken) break;
      }
      const size_t index = flows_.size();
      flows_.push_back(std::move(flow));
      q_.schedule(flows_[index].start, EvFlowStart{index});
      q_.schedule(flows_[index].end, EvFlowEnd{index});
    }
  }

  for (size_t i = 0; i < scn_.failures.size(); ++i) {
    q_.schedule(seconds_to_sim(scn_.failures[i].at_s), EvFailure{i});
  }
}

// ---------------------------------------------------------------------------
// main loop

MetricsReport Simulation::run() {
  build();
  while (auto ev = q_.pop()) {
    if (ev->time > duration_) break;
    integrate_flows();
    ++rpt_.total_events;
    dispatch(std::move(ev->payload));
    if (fluid_dirty_) {
      retrace_and_reallocate();
      fluid_dirty_ = false;
    }
  }

  // Final integration up to the scenario end.
  last_integrate_ = std::min(last_integrate_, duration_);
  {
    const double dt = sim_to_seconds(duration_ - last_integrate_);
    if (dt > 0) {
      for (FlowRuntime& flow : flows_) {
        if (flow.probe_delivered && !flow.finished) {
          const SimTime active_until = std::min(duration_, flow.end);
          const double span =
              std::max(0.0, sim_to_seconds(active_until - last_integrate_));
          flow.delivered_bits += flow.rate_bps * span;
        }
      }
      last_integrate_ = duration_;
    }
  }

  for (const FlowRuntime& flow : flows_) {
    const double span_s =
        sim_to_seconds(std::min(flow.end, duration_) - flow.start);
    rpt_.flow_throughput_bps[flow.id] =
        span_s > 0 ? flow.delivered_bits / span_s : 0.0;
  }
  rpt_.rtt_series = ping_results_;

  for (size_t i = 0; i < ctrls_.size(); ++i) {
    ControllerStats stats;
    stats.cont_id = ctrls_[i].logic->cont_id();
    stats.packet_ins_received = ctrls_[i].logic->packet_in_count();
    stats.processed = ctrls_[i].logic->processed_count();
    rpt_.controllers.push_back(stats);
  }

  rpt_.arbitration.events = next_packet_in_event_;
  for (auto& [event, handlers] : packet_in_handlers_) {
    if (handlers == 0) ++rpt_.arbitration.unhandled_events;
  }

  if (rpt_.failover.master_kill_time_s) {
    const double lo = *rpt_.failover.master_kill_time_s;
    const double hi = rpt_.failover.new_master_time_s
                          ? *rpt_.failover.new_master_time_s
                          : scn_.duration_s;
    int losses = 0;
    for (auto& [id, metas] : ping_meta_) {
      const auto& results = ping_results_[id];
      for (size_t k = 0; k < metas.size(); ++k) {
        const double t = sim_to_seconds(metas[k].t0);
        if (t >= lo && t <= hi && metas[k].t0 > 0 && results[k].lost) {
          ++losses;
        }
      }
    }
    rpt_.failover.dataplane_loss_count = losses;
  }

  return rpt_;
}

void Simulation::dispatch(EventPayload&& payload) {
  std::visit(
      [this](auto&& ev) {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, EvFrame>) {
          note_network_event();
          on_frame(ev);
        } else if constexpr (std::is_same_v<T, EvSwitchCmd>) {
          // Periodic stats polling and role bookkeeping do not count
          // against data-plane quiescence.
          if (!std::holds_alternative<StatsRequestMsg>(ev.msg.v) &&
              !std::holds_alternative<RoleSetMsg>(ev.msg.v)) {
            note_network_event();
          }
          on_switch_cmd(ev);
        } else if constexpr (std::is_same_v<T, EvPacketIn>) {
          note_network_event();
          on_packet_in(ev);
        } else if constexpr (std::is_same_v<T, EvStatsReply>) {
          if (ctrls_[ev.ctrl].alive && ev.kind == StatsKind::Port) {
            ctrls_[ev.ctrl].logic->update_link_costs(ev.dpid, ev.ports);
          }
        } else if constexpr (std::is_same_v<T, EvMgrRequest>) {
          on_mgr_request(ev);
        } else if constexpr (std::is_same_v<T, EvMgrReply>) {
          on_mgr_reply(ev);
        } else if constexpr (std::is_same_v<T, EvTick>) {
          on_tick(ev);
        } else if constexpr (std::is_same_v<T, EvPowerOn>) {
          powering_.erase(ev.device);
          set_device_power(ev.device, Power::On);
        } else if constexpr (std::is_same_v<T, EvDeferred>) {
          dispatch_controller_msgs(ev.ctrl, std::move(ev.msgs));
        } else if constexpr (std::is_same_v<T, EvFailure>) {
          on_failure(scn_.failures[ev.index]);
        } else if constexpr (std::is_same_v<T, EvPing>) {
          on_ping(ev);
        } else if constexpr (std::is_same_v<T, EvFlowStart>) {
          on_flow_start(ev);
        } else if constexpr (std::is_same_v<T, EvFlowEnd>) {
          on_flow_end(ev);
        }
      },
      payload);
}

// ---------------------------------------------------------------------------
// frames

void Simulation::on_frame(const EvFrame& ev) {
  if (ev.node.is_switch()) {
    Switch& sw = switch_at(ev.node.id);
    if (!sw.is_on()) return;
    handle_effects(ev.node.id, sw.process_frame(ev.port, ev.frame));
    return;
  }
  HostRuntime& host = hosts_[ev.node.id];
  if (!host.on) return;
  host_receive(host, ev.frame);
}

void Simulation::handle_effects(Dpid dpid,
                                std::vector<SwitchEffect>&& effects) {
  for (SwitchEffect& effect : effects) {
    if (auto* fwd = std::get_if<ForwardOnPort>(&effect)) {
      deliver_out(NodeId::sw(dpid), fwd->port, fwd->frame);
    } else if (auto* pin = std::get_if<EmitPacketIn>(&effect)) {
      const uint64_t event_id = next_packet_in_event_++;
      packet_in_handlers_[event_id] = 0;
      for (size_t ctrl : pin->controllers) {
        if (ctrl >= ctrls_.size() || !ctrls_[ctrl].alive) continue;
        const auto [cls, bytes] =
            account_packet_in(pin->frame, scn_.manager.header_bytes);
        account(cls, bytes);
        ++rpt_.message_counts["packet_in"];
        q_.schedule(q_.now() + ctrl_latency_,
                    EvPacketIn{ctrl,
                               PacketInEvent{dpid, pin->in_port, pin->frame},
                               event_id});
      }
    }
  }
}

void Simulation::deliver_out(NodeId node, PortIndex port, const Frame& frame) {
  auto index = topo_.link_at(PortRef{node, port});
  if (!index) return;
  const Link& link = topo_.link(*index);
  if (link.power == Power::Off) return;
  const PortRef other = link.a.node == node ? link.b : link.a;
  q_.schedule(q_.now() + seconds_to_sim(link.delay_s),
              EvFrame{other.node, other.port, frame});
}

void Simulation::host_emit(HostRuntime& host, const Frame& frame) {
  if (!host.on) return;
  deliver_out(NodeId::host(host.index), 0, frame);
}

void Simulation::flush_pending(HostRuntime& host, Ipv4Address ip,
                               MacAddress mac) {
  auto it = host.pending.find(ip);
  if (it == host.pending.end()) return;
  std::vector<PendingSend> sends = std::move(it->second);
  host.pending.erase(it);
  for (PendingSend& send : sends) {
    send.frame.eth.dst = mac;
    if (send.kind == PendingSend::Kind::Probe) {
      flows_[send.id].probe = send.frame;
    }
    host_emit(host, send.frame);
  }
}

void Simulation::host_receive(HostRuntime& host, const Frame& frame) {
  if (frame.arp) {
    const ArpHeader& arp = *frame.arp;
    if (arp.opcode == ArpOp::Request && arp.dst_ip == host.info.ip) {
      host.arp_cache[arp.src_ip] = arp.src_mac;
      host_emit(host, Frame::make_arp_reply(host.info.mac, host.info.ip,
                                            arp.src_mac, arp.src_ip));
    } else if (arp.opcode == ArpOp::Reply && frame.eth.dst == host.info.mac) {
      host.arp_cache[arp.src_ip] = arp.src_mac;
      flush_pending(host, arp.src_ip, arp.src_mac);
    }
    return;
  }
  if (!frame.ipv4 || frame.ipv4->dst != host.info.ip) return;

  if (frame.icmp) {
    if (frame.icmp->kind == IcmpKind::EchoRequest) {
      Frame reply = Frame::make_icmp_echo(IcmpKind::EchoReply, host.info.mac,
                                          host.info.ip, frame.ipv4->src,
                                          frame.icmp->seq,
                                          frame.payload_bytes);
      reply.eth.dst = frame.eth.src;
      host_emit(host, reply);
      return;
    }
    auto it = host.echoes.find(frame.icmp->seq);
    if (it == host.echoes.end()) return;
    // Address transparency: the reply must appear to come from the pinged
    // address (the virtual IP for farm targets), or the client ignores it.
    if (frame.ipv4->src != it->second.pinged) return;
    const HostRuntime::EchoMeta meta = it->second;
    host.echoes.erase(it);
    const SimTime rtt = q_.now() - meta.t0;
    if (rtt <= ping_timeout_) {
      const std::string id = "ping" + std::to_string(meta.demand);
      auto& results = ping_results_[id];
      const auto k = static_cast<size_t>(meta.try_index);
      if (k < results.size()) {
        results[k] = PingResult{false, sim_to_seconds(rtt) * 1e3};
        ping_meta_[id][k].replied = true;
      }
    }
    return;
  }
  if (frame.l4) {
    for (FlowRuntime& flow : flows_) {
      if (flow.probe_delivered || flow.finished) continue;
      if (flow.proto == frame.ipv4->proto &&
          flow.src_port == frame.l4->src_port &&
          flow.dst_port == frame.l4->dst_port &&
          hosts_[flow.src_host].info.mac == frame.eth.src) {
        flow.probe_delivered = true;
        fluid_dirty_ = true;
        break;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// controller plumbing

void Simulation::on_packet_in(const EvPacketIn& ev) {
  ControllerRuntime& cr = ctrls_[ev.ctrl];
  if (!cr.alive) return;
  const uint64_t before = cr.logic->processed_count();
  auto msgs = cr.logic->handle_packet_in(ev.event, power_view(), now_s());
  if (cr.logic->processed_count() > before) {
    int& handlers = packet_in_handlers_[ev.event_id];
    ++handlers;
    if (handlers == 2) ++rpt_.arbitration.multi_handler_events;
    if (cr.logic->mode() == ControllerRole::Equal &&
        scn_.controllers.scheme == ArbitrationScheme::ByDpid) {
      const auto n = static_cast<uint64_t>(cr.logic->num_serv());
      if (n > 0 && ev.event.dpid % n !=
                       static_cast<uint64_t>(cr.logic->order())) {
        ++rpt_.arbitration.order_violations;
      }
    }
  }
  dispatch_controller_msgs(ev.ctrl, std::move(msgs));
}

void Simulation::dispatch_controller_msgs(size_t ctrl,
                                          std::vector<ControlMessage>&& msgs) {
  for (ControlMessage& msg : msgs) {
    if (auto* activate = std::get_if<ActivateMsg>(&msg.v)) {
      handle_activation(ctrl, std::move(*activate));
      continue;
    }
    if (auto* deactivate = std::get_if<DeactivateMsg>(&msg.v)) {
      for (const DeviceRef& dev : deactivate->targets) {
        if (device_on(dev)) set_device_power(dev, Power::Off);
      }
      continue;
    }
    const auto [cls, bytes] =
        account_control_bytes(msg, scn_.manager.header_bytes);
    account(cls, bytes);
    if (const auto* out = std::get_if<PacketOutMsg>(&msg.v)) {
      ++rpt_.message_counts["packet_out"];
      for (const FlowAction& action : out->actions) {
        if (std::holds_alternative<Flood>(action)) {
          ++rpt_.message_counts["packet_out_flood"];
        }
      }
    } else if (std::holds_alternative<FlowModMsg>(msg.v)) {
      ++rpt_.message_counts["flow_mod"];
    } else if (std::holds_alternative<GroupModMsg>(msg.v)) {
      ++rpt_.message_counts["group_mod"];
    } else if (std::holds_alternative<StatsRequestMsg>(msg.v)) {
      ++rpt_.message_counts["stats_request"];
    } else if (std::holds_alternative<RoleSetMsg>(msg.v)) {
      ++rpt_.message_counts["role_set"];
    }
    q_.schedule(q_.now() + ctrl_latency_, EvSwitchCmd{ctrl, std::move(msg)});
  }
}

void Simulation::handle_activation(size_t ctrl, ActivateMsg&& msg) {
  SimTime completion = q_.now();
  for (const DeviceRef& dev : msg.targets) {
    if (device_on(dev)) continue;
    auto it = powering_.find(dev);
    if (it != powering_.end()) {
      completion = std::max(completion, it->second);
      continue;
    }
    const SimTime done = q_.now() + activation_latency_;
    powering_[dev] = done;
    completion = std::max(completion, done);
    q_.schedule(done, EvPowerOn{dev});
  }
  if (!msg.deferred.empty()) {
    q_.schedule(completion, EvDeferred{ctrl, std::move(msg.deferred)});
  }
}

void Simulation::on_switch_cmd(const EvSwitchCmd& ev) {
  std::visit(
      [&](const auto& msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, PacketOutMsg>) {
          auto it = switches_.find(msg.dpid);
          if (it == switches_.end() || !it->second.is_on()) return;
          handle_effects(msg.dpid, it->second.apply_packet_out(
                                       msg.actions, msg.in_port, msg.frame));
        } else if constexpr (std::is_same_v<T, FlowModMsg>) {
          auto it = switches_.find(msg.dpid);
          if (it == switches_.end() || !it->second.is_on()) return;
          it->second.apply_flow_mod(msg.op);
          fluid_dirty_ = true;
        } else if constexpr (std::is_same_v<T, GroupModMsg>) {
          auto it = switches_.find(msg.dpid);
          if (it == switches_.end() || !it->second.is_on()) return;
          it->second.apply_group_mod(msg.group);
          fluid_dirty_ = true;
        } else if constexpr (std::is_same_v<T, StatsRequestMsg>) {
          auto it = switches_.find(msg.dpid);
          if (it == switches_.end() || !it->second.is_on()) return;
          EvStatsReply reply;
          reply.ctrl = ev.ctrl;
          reply.dpid = msg.dpid;
          reply.kind = msg.kind;
          if (msg.kind == StatsKind::Port) {
            reply.ports = it->second.read_port_stats();
          }
          account(MsgClass::StatsCollection, scn_.manager.header_bytes);
          ++rpt_.message_counts["stats_reply"];
          q_.schedule(q_.now() + ctrl_latency_, std::move(reply));
        }
        // RoleSetMsg only matters for the byte accounting done at send.
      },
      ev.msg.v);
}

// ---------------------------------------------------------------------------
// manager protocol

void Simulation::send_heartbeat(size_t ctrl) {
  ControllerRuntime& cr = ctrls_[ctrl];
  if (!cr.alive) return;
  const uint32_t id = cr.logic->cont_id();
  const std::string line = std::to_string(id) + "\n";
  if (scn_.manager.conn_mode == ConnMode::SerialPerRequest) {
    account(MsgClass::ManageCluster, scn_.manager.setup_bytes);
    ++rpt_.manager.connection_setups;
  } else if (!cr.mgr_connected) {
    account(MsgClass::ManageCluster, scn_.manager.setup_bytes);
    ++rpt_.manager.connection_setups;
    cr.mgr_connected = true;
  }
  const auto [cls, bytes] =
      account_manager_line(line, scn_.manager.header_bytes);
  account(cls, bytes);
  ++rpt_.manager.heartbeats;
  ++rpt_.message_counts["mgr_request"];
  q_.schedule(q_.now() + mgr_latency_, EvMgrRequest{ctrl, id});
}

void Simulation::on_mgr_request(const EvMgrRequest& ev) {
  const uint64_t conn =
      scn_.manager.conn_mode == ConnMode::SerialPerRequest ? 0 : ev.ctrl + 1;
  const auto result = mgr_core_.heartbeat(conn, ev.cont_id);
  std::string line;
  if (std::holds_alternative<ManagerCore::Redraw>(result)) {
    line = ManagerCore::redraw_line();
  } else {
    line = ManagerCore::encode(std::get<ManagerCore::Reply>(result));
  }
  const auto [cls, bytes] =
      account_manager_line(line, scn_.manager.header_bytes);
  account(cls, bytes);
  if (scn_.manager.conn_mode == ConnMode::SerialPerRequest) {
    account(MsgClass::ManageCluster, scn_.manager.teardown_bytes);
  }
  ++rpt_.message_counts["mgr_reply"];
  q_.schedule(q_.now() + mgr_latency_, EvMgrReply{ev.ctrl, std::move(line)});
}

void Simulation::on_mgr_reply(const EvMgrReply& ev) {
  ControllerRuntime& cr = ctrls_[ev.ctrl];
  if (!cr.alive) return;
  if (ev.line == ManagerCore::redraw_line()) {
    cr.logic->set_cont_id(draw_cont_id());
    send_heartbeat(ev.ctrl);
    return;
  }
  const ControllerRole before = cr.logic->mode();
  auto msgs = cr.logic->role_monitor(ev.line, now_s());
  const ControllerRole after = cr.logic->mode();
  if (after != before) {
    rpt_.role_events.push_back(
        RoleEvent{now_s(), ev.ctrl, cr.logic->cont_id(), after});
    if (after == ControllerRole::Master &&
        rpt_.failover.master_kill_time_s &&
        !rpt_.failover.new_master_time_s &&
        (!killed_master_ || *killed_master_ != ev.ctrl)) {
      rpt_.failover.new_master_time_s = now_s();
    }
  }
  dispatch_controller_msgs(ev.ctrl, std::move(msgs));
}

void Simulation::on_tick(const EvTick& ev) {
  ControllerRuntime& cr = ctrls_[ev.ctrl];
  if (!cr.alive) return;
  send_heartbeat(ev.ctrl);
  dispatch_controller_msgs(ev.ctrl, cr.logic->poll_stats(power_view()));
  dispatch_controller_msgs(ev.ctrl,
                           cr.logic->check_farm_idle(power_view(), now_s()));
  q_.schedule(q_.now() + seconds_to_sim(scn_.controllers.poll_period_s),
              EvTick{ev.ctrl});
}

// ---------------------------------------------------------------------------
// failures

void Simulation::on_failure(const FailureInjection& inj) {
  if (const auto* kill = std::get_if<KillController>(&inj.what)) {
    const auto idx = static_cast<size_t>(kill->index);
    ControllerRuntime& cr = ctrls_[idx];
    if (!cr.alive) return;
    if (cr.logic->mode() == ControllerRole::Master) {
      rpt_.failover.master_kill_time_s = now_s();
      killed_master_ = idx;
    }
    cr.alive = false;
    if (cr.mgr_connected) {
      mgr_core_.on_disconnect(idx + 1);
      cr.mgr_connected = false;
    }
    for (auto& [dpid, sw] : switches_) sw.disconnect_controller(idx);
    return;
  }
  if (std::holds_alternative<KillMaster>(inj.what)) {
    for (size_t i = 0; i < ctrls_.size(); ++i) {
      if (ctrls_[i].alive && ctrls_[i].logic->mode() == ControllerRole::Master) {
        on_failure(FailureInjection{inj.at_s,
                                    KillController{static_cast<int>(i)}});
        return;
      }
    }
    throw SimRuntimeError("kill_master: no live master controller");
  }
  if (const auto* cut = std::get_if<CutControlChannel>(&inj.what)) {
    auto it = switches_.find(cut->dpid);
    if (it == switches_.end()) {
      throw SimRuntimeError("cut_control_channel: unknown switch");
    }
    it->second.disconnect_all_controllers();
    for (auto& cr : ctrls_) {
      if (cr.alive) cr.logic->disconnect_switch(cut->dpid);
    }
    return;
  }
  if (const auto* cut = std::get_if<CutLink>(&inj.what)) {
    auto a = scn_.node_by_name(topo_, cut->a);
    auto b = scn_.node_by_name(topo_, cut->b);
    if (!a || !b) throw SimRuntimeError("cut_link: unknown node");
    auto index = topo_.link_between(*a, *b);
    if (!index) throw SimRuntimeError("cut_link: nodes not linked");
    set_device_power(DeviceRef::link(*index), Power::Off);
    for (auto& cr : ctrls_) {
      if (cr.alive) cr.logic->on_link_down(*a, *b);
    }
    return;
  }
  if (const auto* revive = std::get_if<ReviveController>(&inj.what)) {
    const auto idx = static_cast<size_t>(revive->index);
    ControllerRuntime& cr = ctrls_[idx];
    if (cr.alive) return;
    cr.alive = true;
    cr.mgr_connected = false;
    cr.logic = make_controller(idx, draw_cont_id());
    for (auto& [dpid, sw] : switches_) {
      if (sw.is_on()) sw.connect_controller(idx);
    }
    send_heartbeat(idx);
    q_.schedule(q_.now() + seconds_to_sim(scn_.controllers.poll_period_s),
                EvTick{idx});
  }
}

// ---------------------------------------------------------------------------
// traffic demands

void Simulation::on_ping(const EvPing& ev) {
  const auto& demand = std::get<PingDemand>(scn_.demands[ev.demand]);
  const size_t src = *topo_.host_index_by_name(demand.src);
  HostRuntime& host = hosts_[src];
  const std::string id = "ping" + std::to_string(ev.demand);
  ping_meta_[id][static_cast<size_t>(ev.try_index)].t0 = q_.now();
  if (!host.on) return;  // stays lost

  const uint32_t seq = host.next_seq++;
  Frame echo = Frame::make_icmp_echo(IcmpKind::EchoRequest, host.info.mac,
                                     host.info.ip, demand.dst_ip, seq);
  host.echoes[seq] =
      HostRuntime::EchoMeta{ev.demand, ev.try_index, q_.now(), demand.dst_ip};

  auto cached = host.arp_cache.find(demand.dst_ip);
  if (cached != host.arp_cache.end()) {
    echo.eth.dst = cached->second;
    host_emit(host, echo);
    return;
  }
  PendingSend send;
  send.kind = PendingSend::Kind::Echo;
  send.id = ev.demand;
  send.frame = std::move(echo);
  host.pending[demand.dst_ip].push_back(std::move(send));
  host_emit(host, Frame::make_arp_request(host.info.mac, host.info.ip,
                                          demand.dst_ip));
}

void Simulation::on_flow_start(const EvFlowStart& ev) {
  FlowRuntime& flow = flows_[ev.flow];
  HostRuntime& host = hosts_[flow.src_host];
  if (!host.on) return;

  Frame probe = Frame::make_l4(flow.proto, host.info.mac, host.info.ip,
                               flow.dst_ip, flow.src_port, flow.dst_port);
  auto cached = host.arp_cache.find(flow.dst_ip);
  if (cached != host.arp_cache.end()) {
    probe.eth.dst = cached->second;
    flow.probe = probe;
    host_emit(host, probe);
    return;
  }
  PendingSend send;
  send.kind = PendingSend::Kind::Probe;
  send.id = ev.flow;
  send.frame = std::move(probe);
  host.pending[flow.dst_ip].push_back(std::move(send));
  host_emit(host, Frame::make_arp_request(host.info.mac, host.info.ip,
                                          flow.dst_ip));
}

void Simulation::on_flow_end(const EvFlowEnd& ev) {
  FlowRuntime& flow = flows_[ev.flow];
  flow.finished = true;
  flow.rate_bps = 0;
  flow.dlinks.clear();
  fluid_dirty_ = true;
}

// ---------------------------------------------------------------------------
// power

bool Simulation::device_on(const DeviceRef& dev) const {
  switch (dev.kind) {
    case DeviceRef::Kind::Switch: {
      auto it = switches_.find(dev.id);
      return it != switches_.end() && it->second.is_on();
    }
    case DeviceRef::Kind::Link:
      return topo_.link(dev.id).power == Power::On;
    default:
      return hosts_[dev.id].on;
  }
}

void Simulation::set_device_power(const DeviceRef& dev, Power power) {
  const bool on = power == Power::On;
  switch (dev.kind) {
    case DeviceRef::Kind::Switch: {
      Switch& sw = switch_at(dev.id);
      if (sw.is_on() == on) return;
      sw.set_power(power);
      if (on) {
        for (size_t i = 0; i < ctrls_.size(); ++i) {
          if (ctrls_[i].alive) {
            sw.connect_controller(i);
            ctrls_[i].logic->connect_switch(dev.id);
          }
        }
      } else {
        for (auto& cr : ctrls_) {
          if (cr.alive) cr.logic->disconnect_switch(dev.id);
        }
      }
      break;
    }
    case DeviceRef::Kind::Link: {
      if ((topo_.link(dev.id).power == Power::On) == on) return;
      topo_.set_link_power(dev.id, power);
      break;
    }
    default: {
      if (hosts_[dev.id].on == on) return;
      hosts_[dev.id].on = on;
      break;
    }
  }
  rpt_.power_events.push_back(PowerEvent{now_s(), device_name(dev), on});
  fluid_dirty_ = true;
}

std::string Simulation::device_name(const DeviceRef& dev) const {
  switch (dev.kind) {
    case DeviceRef::Kind::Switch:
      return "s" + std::to_string(dev.id);
    case DeviceRef::Kind::Link: {
      const Link& link = topo_.link(dev.id);
      return "link:" + topo_.node_name(link.a.node) + "-" +
             topo_.node_name(link.b.node);
    }
    default:
      return hosts_[dev.id].info.name;
  }
}

PowerView Simulation::power_view() {
  PowerView view;
  view.is_on = [this](const DeviceRef& dev) { return device_on(dev); };
  view.farm_traffic_active = [this] { return farm_traffic_active(); };
  return view;
}

bool Simulation::farm_traffic_active() const {
  if (!scn_.farm) return false;
  for (const FlowRuntime& flow : flows_) {
    if (flow.probe_delivered && !flow.finished &&
        flow.dst_ip == scn_.farm->virtual_ip) {
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// fluid model

void Simulation::integrate_flows() {
  const SimTime now = q_.now();
  if (now <= last_integrate_) return;
  const double dt = sim_to_seconds(now - last_integrate_);
  for (FlowRuntime& flow : flows_) {
    if (!flow.probe_delivered || flow.finished || flow.rate_bps <= 0) {
      continue;
    }
    const double bits = flow.rate_bps * dt;
    flow.delivered_bits += bits;
    const double bytes = bits / 8.0;
    for (size_t dlink : flow.dlinks) {
      const size_t index = dlink / 2;
      const bool a_to_b = (dlink % 2) == 0;
      const Link& link = topo_.link(index);
      const PortRef sender = a_to_b ? link.a : link.b;
      if (!sender.node.is_switch()) continue;
      auto it = switches_.find(sender.node.id);
      if (it == switches_.end() || !it->second.is_on()) continue;
      auto key = std::make_pair(sender.node.id, sender.port);
      double& remainder = tx_remainder_[key];
      remainder += bytes;
      const auto whole = static_cast<uint64_t>(remainder);
      remainder -= static_cast<double>(whole);
      it->second.add_port_tx(sender.port, whole, 0);
    }
  }
  last_integrate_ = now;
}

std::vector<size_t> Simulation::trace_route(const FlowRuntime& flow) {
  const HostRuntime& src = hosts_[flow.src_host];
  if (!src.on) return {};
  Frame header = flow.probe;
  std::vector<size_t> dlinks;

  auto append = [&](NodeId node, PortIndex port) -> const Link* {
    auto index = topo_.link_at(PortRef{node, port});
    if (!index) return nullptr;
    const Link& link = topo_.link(*index);
    if (link.power == Power::Off) return nullptr;
    dlinks.push_back(*index * 2 + (link.a.node == node ? 0 : 1));
    return &link;
  };

  const Link* access = append(NodeId::host(src.index), 0);
  if (!access) return {};
  PortRef at = access->a.node == NodeId::host(src.index) ? access->b
                                                         : access->a;

  for (int hop = 0; hop < 64; ++hop) {
    if (!at.node.is_switch()) {
      const HostRuntime& host = hosts_[at.node.id];
      if (host.on && header.ipv4 && header.ipv4->dst == host.info.ip) {
        return dlinks;
      }
      return {};
    }
    auto it = switches_.find(at.node.id);
    if (it == switches_.end() || !it->second.is_on()) return {};
    const Switch& sw = it->second;
    const FlowRule* rule = sw.lookup(at.port, header);
    if (!rule) return {};

    std::optional<PortIndex> out;
    std::function<bool(const std::vector<FlowAction>&, bool)> interpret =
        [&](const std::vector<FlowAction>& actions,
            bool allow_groups) -> bool {
      for (const FlowAction& action : actions) {
        if (const auto* set_dst = std::get_if<SetIpv4Dst>(&action)) {
          if (header.ipv4) header.ipv4->dst = set_dst->addr;
        } else if (const auto* set_src = std::get_if<SetIpv4Src>(&action)) {
          if (header.ipv4) header.ipv4->src = set_src->addr;
        } else if (const auto* o = std::get_if<Output>(&action)) {
          out = o->port;
          return true;
        } else if (const auto* g = std::get_if<OutputGroup>(&action)) {
          if (!allow_groups) return false;
          auto git = sw.group_table().find(g->group_id);
          if (git == sw.group_table().end() || git->second.buckets.empty()) {
            return false;
          }
          const Bucket& bucket =
              git->second.buckets[select_bucket(git->second, header)];
          return interpret(bucket.actions, false);
        } else {
          return false;  // Flood/Drop/SendToControllers: no fluid path
        }
      }
      return false;
    };
    if (!interpret(rule->actions, true) || !out) return {};

    const Link* link = append(at.node, *out);
    if (!link) return {};
    at = link->a.node == at.node ? link->b : link->a;
  }
  return {};
}

void Simulation::retrace_and_reallocate() {
  std::vector<size_t> active;
  for (size_t f = 0; f < flows_.size(); ++f) {
    FlowRuntime& flow = flows_[f];
    if (!flow.probe_delivered || flow.finished) continue;
    flow.dlinks = trace_route(flow);
    active.push_back(f);
  }

  std::vector<MaxMinFlow> specs;
  std::vector<size_t> spec_to_flow;
  for (size_t f : active) {
    if (flows_[f].dlinks.empty()) {
      flows_[f].rate_bps = 0;
      continue;
    }
    MaxMinFlow spec;
    spec.elastic = flows_[f].elastic;
    spec.rate_cap_bps = flows_[f].cap_bps;
    spec.links = flows_[f].dlinks;
    specs.push_back(std::move(spec));
    spec_to_flow.push_back(f);
  }

  std::vector<double> capacity(topo_.links().size() * 2, 0.0);
  for (size_t i = 0; i < topo_.links().size(); ++i) {
    capacity[i * 2] = topo_.link(i).capacity_bps;
    capacity[i * 2 + 1] = topo_.link(i).capacity_bps;
  }

  const std::vector<double> rates = maxmin_allocate(specs, capacity);
  for (size_t i = 0; i < rates.size(); ++i) {
    flows_[spec_to_flow[i]].rate_bps = rates[i];
  }
}

// ---------------------------------------------------------------------------
// metrics

void Simulation::account(MsgClass cls, uint64_t bytes) {
  rpt_.control_bytes_total[msg_class_name(cls)] += bytes;
  const auto second = static_cast<int64_t>(now_s());
  rpt_.control_bytes_series[second][msg_class_name(cls)] += bytes;
}

void Simulation::note_network_event() {
  rpt_.last_network_event_s = std::max(rpt_.last_network_event_s, now_s());
}

}  // namespace

MetricsReport run_scenario(const Scenario& scenario) {
  auto issues = scenario.validate();
  if (!issues.empty()) throw ScenarioError(std::move(issues));
  Simulation sim(scenario);
  return sim.run();
}

}  // namespace edgesim
