#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "edgesim/messages.hpp"

namespace edgesim {

enum class ConnMode : uint8_t { SerialPerRequest, ConcurrentPersistent };

/// Election and rank logic of the cluster manager, independent of any
/// transport. Registered controllers are ranked by ascending cont_id
/// (order 0 = smallest id); the highest id is the master.
class ManagerCore {
 public:
  struct Reply {
    ControllerRole role{ControllerRole::Unset};
    int count{0};
    int order{0};
    bool operator==(const Reply&) const = default;
  };
  struct Redraw {};  // cont_id collision: caller must pick a new id
  using Result = std::variant<Reply, Redraw>;

  explicit ManagerCore(bool equal_mode) : equal_mode_(equal_mode) {}

  /// Registers or refreshes cont_id for the given connection and computes
  /// (role, count, order). conn 0 means a connectionless (serial) caller;
  /// collisions can only be detected between distinct live connections.
  Result heartbeat(uint64_t conn, uint32_t cont_id);

  /// Any client disconnect clears the whole registry; survivors repopulate
  /// it on their next heartbeats, which re-runs the election.
  void on_disconnect(uint64_t conn);

  size_t registry_size() const { return registry_.size(); }
  bool equal_mode() const { return equal_mode_; }

  /// Wire encoding: "ROLE:count:order\n".
  static std::string encode(const Reply& reply);
  static std::string redraw_line() { return "REDRAW\n"; }
  static std::optional<Reply> parse(const std::string& line);

 private:
  bool equal_mode_;
  std::map<uint32_t, uint64_t> registry_;  // cont_id -> owning conn
};

}  // namespace edgesim
