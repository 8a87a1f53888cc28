#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <thread>
#include <vector>

#include "edgesim/cluster.hpp"

namespace edgesim {

/// TCP front end for ManagerCore. Concurrent mode keeps one thread per
/// long-lived client connection; serial mode answers one request per
/// accepted connection and closes it. Wire format: request is a decimal
/// cont_id plus "\n", reply is "ROLE:count:order\n" (or "REDRAW\n").
class ManagerServer {
 public:
  ManagerServer(uint16_t port, ConnMode mode, bool equal_mode);
  ~ManagerServer();

  ManagerServer(const ManagerServer&) = delete;
  ManagerServer& operator=(const ManagerServer&) = delete;

  /// Port actually bound (useful with port 0).
  uint16_t port() const { return port_; }

  /// Accept loop; blocks until stop() closes the listening socket.
  void serve();

  void start_background();
  void stop();

 private:
  void handle_client_persistent(int fd);
  void handle_client_serial(int fd);

  ManagerCore core_;
  ConnMode mode_;
  int listen_fd_{-1};
  uint16_t port_{0};
  std::mutex mu_;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::vector<std::thread> workers_;
  std::vector<int> client_fds_;
};

}  // namespace edgesim
