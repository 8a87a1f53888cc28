#include "edgesim/cluster.hpp"

namespace edgesim {

std::string role_name(ControllerRole role) {
  switch (role) {
    case ControllerRole::Master:
      return "MASTER";
    case ControllerRole::Slave:
      return "SLAVE";
    case ControllerRole::Equal:
      return "EQUAL";
    default:
      return "UNSET";
  }
}

ManagerCore::Result ManagerCore::heartbeat(uint64_t conn, uint32_t cont_id) {
  auto it = registry_.find(cont_id);
  if (it != registry_.end() && conn != 0 && it->second != 0 &&
      it->second != conn) {
    return Redraw{};
  }
  registry_[cont_id] = conn;

  Reply reply;
  reply.count = static_cast<int>(registry_.size());
  // Ascending map order: rank = position of cont_id among sorted ids.
  int rank = 0;
  uint32_t max_id = 0;
  for (auto& [id, owner] : registry_) {
    if (id < cont_id) ++rank;
    if (id > max_id) max_id = id;
  }
  reply.order = rank;
  if (equal_mode_) {
    reply.role = ControllerRole::Equal;
  } else {
    reply.role =
        cont_id == max_id ? ControllerRole::Master : ControllerRole::Slave;
  }
  return reply;
}

void ManagerCore::on_disconnect(uint64_t /*conn*/) { registry_.clear(); }

std::string ManagerCore::encode(const Reply& reply) {
  return role_name(reply.role) + ":" + std::to_string(reply.count) + ":" +
         std::to_string(reply.order) + "\n";
}

std::optional<ManagerCore::Reply> ManagerCore::parse(const std::string& line) {
  std::string text = line;
  if (!text.empty() && text.back() == '\n') text.pop_back();
  const auto first = text.find(':');
  const auto second = text.find(':', first + 1);
  if (first == std::string::npos || second == std::string::npos) {
    return std::nullopt;
  }
  Reply reply;
  const std::string role = text.substr(0, first);
  if (role == "MASTER") {
    reply.role = ControllerRole::Master;
  } else if (role == "SLAVE") {
    reply.role = ControllerRole::Slave;
  } else if (role == "EQUAL") {
    reply.role = ControllerRole::Equal;
  } else {
    return std::nullopt;
  }
  try {
    reply.count = std::stoi(text.substr(first + 1, second - first - 1));
    reply.order = std::stoi(text.substr(second + 1));
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (reply.count <= 0 || reply.order < 0 || reply.order >= reply.count) {
    return std::nullopt;
  }
  return reply;
}

}  // namespace edgesim
