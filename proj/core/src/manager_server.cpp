#include "edgesim/manager_server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>
#include <string>

namespace edgesim {

namespace {

bool read_line(int fd, std::string& line) {
  line.clear();
  char c;
  while (true) {
    const ssize_t n = ::recv(fd, &c, 1, 0);
    if (n <= 0) return false;
    if (c == '\n') return true;
    line.push_back(c);
    if (line.size() > 64) return false;  // oversized request
  }
}

bool send_all(int fd, const std::string& data) {
  size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, 0);
    if (n <= 0) return false;
    sent += static_cast<size_t>(n);
  }
  return true;
}

std::optional<uint32_t> parse_cont_id(const std::string& line) {
  if (line.empty() || line.size() > 10) return std::nullopt;
  uint64_t value = 0;
  for (char c : line) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + static_cast<uint64_t>(c - '0');
    if (value > 0xffffffffull) return std::nullopt;
  }
  if (value == 0) return std::nullopt;
  return static_cast<uint32_t>(value);
}

}  // namespace

ManagerServer::ManagerServer(uint16_t port, ConnMode mode, bool equal_mode)
    : core_(equal_mode), mode_(mode) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) <
      0) {
    ::close(listen_fd_);
    throw std::runtime_error("bind() failed on port " + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (::listen(listen_fd_, 16) < 0) {
    ::close(listen_fd_);
    throw std::runtime_error("listen() failed");
  }
}

ManagerServer::~ManagerServer() { stop(); }

void ManagerServer::serve() {
  while (!stopping_) {
    const int client = ::accept(listen_fd_, nullptr, nullptr);
    if (client < 0) break;
    if (mode_ == ConnMode::ConcurrentPersistent) {
      {
        std::lock_guard<std::mutex> lock(mu_);
        client_fds_.push_back(client);
      }
      workers_.emplace_back(
          [this, client] { handle_client_persistent(client); });
    } else {
      handle_client_serial(client);
    }
  }
}

void ManagerServer::handle_client_persistent(int fd) {
  const auto conn = static_cast<uint64_t>(fd) + 1;
  std::string line;
  while (read_line(fd, line)) {
    const auto cont_id = parse_cont_id(line);
    if (!cont_id) break;  // malformed: fail safe below
    std::string reply;
    {
      std::lock_guard<std::mutex> lock(mu_);
      const auto result = core_.heartbeat(conn, *cont_id);
      reply = std::holds_alternative<ManagerCore::Redraw>(result)
                  ? ManagerCore::redraw_line()
                  : ManagerCore::encode(std::get<ManagerCore::Reply>(result));
    }
    if (!send_all(fd, reply)) break;
  }
  // Disconnect (or malformed input) clears the registry so survivors
  // re-elect on their next heartbeats.
  {
    std::lock_guard<std::mutex> lock(mu_);
    core_.on_disconnect(conn);
  }
  ::close(fd);
}

void ManagerServer::handle_client_serial(int fd) {
  std::string line;
  if (read_line(fd, line)) {
    if (const auto cont_id = parse_cont_id(line)) {
      std::string reply;
      {
        std::lock_guard<std::mutex> lock(mu_);
        const auto result = core_.heartbeat(0, *cont_id);
        reply =
            std::holds_alternative<ManagerCore::Redraw>(result)
                ? ManagerCore::redraw_line()
                : ManagerCore::encode(std::get<ManagerCore::Reply>(result));
      }
      send_all(fd, reply);
    } else {
      std::lock_guard<std::mutex> lock(mu_);
      core_.on_disconnect(0);
    }
  }
  ::close(fd);
}

void ManagerServer::start_background() {
  accept_thread_ = std::thread([this] { serve(); });
}

void ManagerServer::stop() {
  if (stopping_.exchange(true)) return;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  for (std::thread& worker : workers_) {
    if (worker.joinable()) worker.join();
  }
  workers_.clear();
}

}  // namespace edgesim
