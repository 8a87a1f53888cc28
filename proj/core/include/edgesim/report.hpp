#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgesim/messages.hpp"

namespace edgesim {

enum class MsgClass : uint8_t {
  ManageCluster,
  DataPathControl,
  StatsCollection,
  OtherControlMsg
};

std::string msg_class_name(MsgClass cls);

/// Byte model: fixed header plus the carried frame where applicable.
/// Flow/group/stats/role messages count as bare headers.
std::pair<MsgClass, uint64_t> account_control_bytes(const ControlMessage& msg,
                                                    uint32_t header_bytes);
/// Packet-In carrying a frame to one controller.
std::pair<MsgClass, uint64_t> account_packet_in(const Frame& frame,
                                                uint32_t header_bytes);
/// One manager-protocol line (request or reply), ASCII payload included.
std::pair<MsgClass, uint64_t> account_manager_line(const std::string& line,
                                                   uint32_t header_bytes);

struct PingResult {
  bool lost{true};
  double rtt_ms{0};
};

struct RoleEvent {
  double time_s{0};
  size_t controller_index{0};
  uint32_t cont_id{0};
  ControllerRole role{ControllerRole::Unset};
};

struct PowerEvent {
  double time_s{0};
  std::string device;
  bool on{false};
};

struct FailoverStats {
  std::optional<double> master_kill_time_s;
  std::optional<double> new_master_time_s;
  int dataplane_loss_count{0};
};

struct ControllerStats {
  uint32_t cont_id{0};
  uint64_t packet_ins_received{0};
  uint64_t processed{0};
};

struct ArbitrationStats {
  uint64_t events{0};            // distinct Packet-In events emitted
  uint64_t unhandled_events{0};  // no controller processed them
  uint64_t multi_handler_events{0};
  uint64_t order_violations{0};  // ByDpid: handler order != dpid mod n
};

struct ManagerStats {
  std::string conn_mode;
  uint64_t connection_setups{0};
  uint64_t heartbeats{0};
};

struct MetricsReport {
  int schema_version{1};
  std::string scenario_name;
  uint64_t seed{0};
  double duration_s{0};

  std::map<std::string, uint64_t> control_bytes_total;  // per class
  /// Per-second byte bins: second -> class -> bytes.
  std::map<int64_t, std::map<std::string, uint64_t>> control_bytes_series;
  /// Message counts by kind (packet_in, packet_out, flood packet-outs,
  /// flow_mod, group_mod, stats, role_set, manager lines).
  std::map<std::string, uint64_t> message_counts;

  std::vector<ControllerStats> controllers;
  ArbitrationStats arbitration;

  std::map<std::string, double> flow_throughput_bps;  // demand id -> bps
  std::map<std::string, std::vector<PingResult>> rtt_series;

  FailoverStats failover;
  std::vector<RoleEvent> role_events;
  std::vector<PowerEvent> power_events;
  ManagerStats manager;

  double last_network_event_s{0};
  uint64_t total_events{0};

  uint64_t total_control_bytes() const;
  std::string to_json_text() const;

  /// Writes control_bytes.csv, throughput.csv, rtt.csv and packet_in.csv.
  void write_csvs(const std::string& directory) const;
};

}  // namespace edgesim
