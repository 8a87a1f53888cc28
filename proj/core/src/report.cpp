#include "edgesim/report.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace edgesim {

using nlohmann::json;

std::string msg_class_name(MsgClass cls) {
  switch (cls) {
    case MsgClass::ManageCluster:
      return "ManageCluster";
    case MsgClass::DataPathControl:
      return "DataPathControl";
    case MsgClass::StatsCollection:
      return "StatsCollection";
    default:
      return "OtherControlMsg";
  }
}

std::pair<MsgClass, uint64_t> account_control_bytes(const ControlMessage& msg,
                                                    uint32_t header_bytes) {
  uint64_t bytes = header_bytes;
  MsgClass cls = MsgClass::DataPathControl;
  if (const auto* out = std::get_if<PacketOutMsg>(&msg.v)) {
    bytes += out->frame.wire_size();
  } else if (std::holds_alternative<StatsRequestMsg>(msg.v)) {
    cls = MsgClass::StatsCollection;
  } else if (std::holds_alternative<RoleSetMsg>(msg.v)) {
    cls = MsgClass::OtherControlMsg;
  }
  return {cls, bytes};
}

std::pair<MsgClass, uint64_t> account_packet_in(const Frame& frame,
                                                uint32_t header_bytes) {
  return {MsgClass::DataPathControl, header_bytes + frame.wire_size()};
}

std::pair<MsgClass, uint64_t> account_manager_line(const std::string& line,
                                                   uint32_t header_bytes) {
  return {MsgClass::ManageCluster, header_bytes + line.size()};
}

uint64_t MetricsReport::total_control_bytes() const {
  uint64_t total = 0;
  for (auto& [cls, bytes] : control_bytes_total) total += bytes;
  return total;
}

std::string MetricsReport::to_json_text() const {
  json root;
  root["schema_version"] = schema_version;
  root["scenario"] = scenario_name;
  root["seed"] = seed;
  root["duration_s"] = duration_s;

  root["control_bytes"]["total"] = total_control_bytes();
  for (auto& [cls, bytes] : control_bytes_total) {
    root["control_bytes"]["by_class"][cls] = bytes;
  }
  json series = json::array();
  for (auto& [second, classes] : control_bytes_series) {
    json row;
    row["second"] = second;
    for (auto& [cls, bytes] : classes) row[cls] = bytes;
    series.push_back(std::move(row));
  }
  root["control_bytes"]["per_second"] = std::move(series);

  root["message_counts"] = json::object();
  for (auto& [kind, count] : message_counts) {
    root["message_counts"][kind] = count;
  }

  json ctrls = json::array();
  for (size_t i = 0; i < controllers.size(); ++i) {
    ctrls.push_back({{"index", i},
                     {"cont_id", controllers[i].cont_id},
                     {"packet_ins_received", controllers[i].packet_ins_received},
                     {"processed", controllers[i].processed}});
  }
  root["controllers"] = std::move(ctrls);

  root["arbitration"] = {
      {"events", arbitration.events},
      {"unhandled_events", arbitration.unhandled_events},
      {"multi_handler_events", arbitration.multi_handler_events},
      {"order_violations", arbitration.order_violations}};

  for (auto& [flow, bps] : flow_throughput_bps) {
    root["flow_throughput_bps"][flow] = bps;
  }
  if (flow_throughput_bps.empty()) {
    root["flow_throughput_bps"] = json::object();
  }

  root["rtt_ms"] = json::object();
  for (auto& [ping, results] : rtt_series) {
    json tries = json::array();
    for (const PingResult& r : results) {
      if (r.lost) {
        tries.push_back(nullptr);
      } else {
        tries.push_back(r.rtt_ms);
      }
    }
    root["rtt_ms"][ping] = std::move(tries);
  }

  json fo;
  fo["master_kill_time_s"] = failover.master_kill_time_s
                                 ? json(*failover.master_kill_time_s)
                                 : json(nullptr);
  fo["new_master_time_s"] = failover.new_master_time_s
                                ? json(*failover.new_master_time_s)
                                : json(nullptr);
  fo["dataplane_loss_count"] = failover.dataplane_loss_count;
  root["failover"] = std::move(fo);

  json roles = json::array();
  for (const RoleEvent& e : role_events) {
    roles.push_back({{"time_s", e.time_s},
                     {"controller", e.controller_index},
                     {"cont_id", e.cont_id},
                     {"role", role_name(e.role)}});
  }
  root["role_events"] = std::move(roles);

  json powers = json::array();
  for (const PowerEvent& e : power_events) {
    powers.push_back(
        {{"time_s", e.time_s}, {"device", e.device}, {"on", e.on}});
  }
  root["power_events"] = std::move(powers);

  root["manager"] = {{"conn_mode", manager.conn_mode},
                     {"connection_setups", manager.connection_setups},
                     {"heartbeats", manager.heartbeats}};

  root["last_network_event_s"] = last_network_event_s;
  root["total_events"] = total_events;
  return root.dump(2) + "\n";
}

void MetricsReport::write_csvs(const std::string& directory) const {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  auto open = [&](const char* file) {
    std::ofstream out(fs::path(directory) / file);
    if (!out) throw std::runtime_error(std::string("cannot write ") + file);
    return out;
  };

  {
    auto out = open("control_bytes.csv");
    out << "second,class,bytes\n";
    for (auto& [second, classes] : control_bytes_series) {
      for (auto& [cls, bytes] : classes) {
        out << second << "," << cls << "," << bytes << "\n";
      }
    }
  }
  {
    auto out = open("throughput.csv");
    out << "flow,throughput_bps\n";
    for (auto& [flow, bps] : flow_throughput_bps) {
      out << flow << "," << bps << "\n";
    }
  }
  {
    auto out = open("rtt.csv");
    out << "ping,try,rtt_ms\n";
    for (auto& [ping, results] : rtt_series) {
      for (size_t i = 0; i < results.size(); ++i) {
        out << ping << "," << i << ",";
        if (results[i].lost) {
          out << "lost";
        } else {
          out << results[i].rtt_ms;
        }
        out << "\n";
      }
    }
  }
  {
    auto out = open("packet_in.csv");
    out << "controller,cont_id,packet_ins_received,processed\n";
    for (size_t i = 0; i < controllers.size(); ++i) {
      out << i << "," << controllers[i].cont_id << ","
          << controllers[i].packet_ins_received << ","
          << controllers[i].processed << "\n";
    }
  }
}

}  // namespace edgesim
