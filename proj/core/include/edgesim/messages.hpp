#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "edgesim/dataplane.hpp"

namespace edgesim {

enum class ControllerRole : uint8_t { Unset, Master, Slave, Equal };

std::string role_name(ControllerRole role);

/// Handle for a powered device: a switch, a link (by topology index) or a
/// host (servers are hosts).
struct DeviceRef {
  enum class Kind : uint8_t { Switch, Link, Host };
  Kind kind{Kind::Switch};
  uint64_t id{0};
  auto operator<=>(const DeviceRef&) const = default;

  static DeviceRef sw(Dpid dpid) { return {Kind::Switch, dpid}; }
  static DeviceRef link(size_t index) { return {Kind::Link, index}; }
  static DeviceRef host(size_t index) { return {Kind::Host, index}; }
};

struct PacketOutMsg {
  Dpid dpid{0};
  PortIndex in_port{0};  // excluded from floods
  std::vector<FlowAction> actions;
  Frame frame;
};

struct FlowModMsg {
  Dpid dpid{0};
  FlowModOp op;
};

struct GroupModMsg {
  Dpid dpid{0};
  SelectGroup group;
};

enum class StatsKind : uint8_t { Port, Flow };

struct StatsRequestMsg {
  Dpid dpid{0};
  StatsKind kind{StatsKind::Port};
};

struct RoleSetMsg {
  Dpid dpid{0};
  ControllerRole role{ControllerRole::Unset};
};

struct ControlMessage;

/// Power on the listed devices; the wrapped messages are released once
/// every target is up. Devices boot concurrently, so completion is the
/// max of the individual activation latencies.
struct ActivateMsg {
  std::vector<DeviceRef> targets;
  std::vector<ControlMessage> deferred;
};

struct DeactivateMsg {
  std::vector<DeviceRef> targets;
};

struct ControlMessage {
  std::variant<PacketOutMsg, FlowModMsg, GroupModMsg, StatsRequestMsg,
               RoleSetMsg, ActivateMsg, DeactivateMsg>
      v;
};

struct PacketInEvent {
  Dpid dpid{0};
  PortIndex in_port{0};
  Frame frame;
};

}  // namespace edgesim
