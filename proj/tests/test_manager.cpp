#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <random>
#include <set>
#include <thread>

#include "edgesim/cluster.hpp"
#include "edgesim/manager_server.hpp"

using namespace edgesim;

namespace {

ManagerCore::Reply reply_of(const ManagerCore::Result& result) {
  REQUIRE(std::holds_alternative<ManagerCore::Reply>(result));
  return std::get<ManagerCore::Reply>(result);
}

/// Minimal blocking line client for the manager wire protocol.
struct LineClient {
  int fd{-1};

  explicit LineClient(uint16_t port) {
    fd = ::socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(fd >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) ==
            0);
  }
  ~LineClient() { close(); }

  void close() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }

  std::string roundtrip(const std::string& line) {
    REQUIRE(::send(fd, line.data(), line.size(), 0) ==
            static_cast<ssize_t>(line.size()));
    std::string out;
    char c;
    while (::recv(fd, &c, 1, 0) == 1) {
      out.push_back(c);
      if (c == '\n') break;
    }
    return out;
  }
};

}  // namespace

TEST_CASE("election ranks ids ascending and crowns the max") {
  ManagerCore core(false);
  reply_of(core.heartbeat(1, 7));
  const auto r42 = reply_of(core.heartbeat(2, 42));
  CHECK(r42.role == ControllerRole::Master);
  CHECK(r42.count == 2);
  CHECK(r42.order == 1);
  const auto r7 = reply_of(core.heartbeat(1, 7));
  CHECK(r7.role == ControllerRole::Slave);
  CHECK(r7.count == 2);
  CHECK(r7.order == 0);
}

TEST_CASE("a lone controller is master with order zero") {
  ManagerCore core(false);
  const auto r = reply_of(core.heartbeat(1, 13));
  CHECK(r.role == ControllerRole::Master);
  CHECK(r.count == 1);
  CHECK(r.order == 0);
}

TEST_CASE("equal mode hands out EQUAL with ranks") {
  ManagerCore core(true);
  reply_of(core.heartbeat(1, 3));
  reply_of(core.heartbeat(2, 9));
  reply_of(core.heartbeat(3, 20));
  const auto r = reply_of(core.heartbeat(2, 9));
  CHECK(r.role == ControllerRole::Equal);
  CHECK(r.count == 3);
  CHECK(r.order == 1);
}

TEST_CASE("any disconnect clears the registry") {
  ManagerCore core(false);
  reply_of(core.heartbeat(1, 7));
  reply_of(core.heartbeat(2, 42));

  SUBCASE("master death") {
    core.on_disconnect(2);
    CHECK(core.registry_size() == 0);
    const auto r = reply_of(core.heartbeat(1, 7));
    CHECK(r.role == ControllerRole::Master);
    CHECK(r.count == 1);
    CHECK(r.order == 0);
  }
  SUBCASE("slave death also clears; master stays master on re-register") {
    core.on_disconnect(1);
    CHECK(core.registry_size() == 0);
    const auto r = reply_of(core.heartbeat(2, 42));
    CHECK(r.role == ControllerRole::Master);
    CHECK(r.count == 1);
  }
}

TEST_CASE("duplicate ids from distinct connections get REDRAW") {
  ManagerCore core(false);
  reply_of(core.heartbeat(1, 7));
  CHECK(std::holds_alternative<ManagerCore::Redraw>(core.heartbeat(2, 7)));
  // The same connection refreshing its own id is a heartbeat.
  CHECK(std::holds_alternative<ManagerCore::Reply>(core.heartbeat(1, 7)));
  // Connectionless (serial) callers cannot collide.
  CHECK(std::holds_alternative<ManagerCore::Reply>(core.heartbeat(0, 7)));
}

TEST_CASE("wire encoding round-trips and rejects junk") {
  const ManagerCore::Reply reply{ControllerRole::Slave, 2, 0};
  CHECK(ManagerCore::encode(reply) == "SLAVE:2:0\n");
  const auto parsed = ManagerCore::parse("SLAVE:2:0\n");
  REQUIRE(parsed.has_value());
  CHECK(*parsed == reply);

  CHECK_FALSE(ManagerCore::parse("").has_value());
  CHECK_FALSE(ManagerCore::parse("MASTER\n").has_value());
  CHECK_FALSE(ManagerCore::parse("BOSS:2:0\n").has_value());
  CHECK_FALSE(ManagerCore::parse("MASTER:x:y\n").has_value());
  CHECK_FALSE(ManagerCore::parse("MASTER:2:5\n").has_value());  // order>=count
}

TEST_CASE("orders are a permutation and the master is unique") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    ManagerCore core(false);
    std::set<uint32_t> ids;
    while (ids.size() < 5) ids.insert(static_cast<uint32_t>(rng()) | 1);
    uint64_t conn = 1;
    for (uint32_t id : ids) reply_of(core.heartbeat(conn++, id));

    std::set<int> orders;
    int masters = 0;
    conn = 1;
    for (uint32_t id : ids) {
      const auto r = reply_of(core.heartbeat(conn++, id));
      CHECK(r.count == 5);
      orders.insert(r.order);
      masters += r.role == ControllerRole::Master;
    }
    CHECK(orders == std::set<int>{0, 1, 2, 3, 4});
    CHECK(masters == 1);
  }
}

TEST_CASE("a higher id demotes the sitting master") {
  ManagerCore core(false);
  CHECK(reply_of(core.heartbeat(1, 100)).role == ControllerRole::Master);
  CHECK(reply_of(core.heartbeat(2, 200)).role == ControllerRole::Master);
  CHECK(reply_of(core.heartbeat(1, 100)).role == ControllerRole::Slave);
}

TEST_CASE("socket server, persistent mode") {
  ManagerServer server(0, ConnMode::ConcurrentPersistent, false);
  REQUIRE(server.port() != 0);
  server.start_background();

  {
    LineClient c1(server.port());
    CHECK(c1.roundtrip("7\n") == "MASTER:1:0\n");
    LineClient c2(server.port());
    CHECK(c2.roundtrip("42\n") == "MASTER:2:1\n");
    CHECK(c1.roundtrip("7\n") == "SLAVE:2:0\n");

    // Collision from a third live connection.
    LineClient c3(server.port());
    CHECK(c3.roundtrip("42\n") == "REDRAW\n");
    CHECK(c3.roundtrip("91\n") == "MASTER:3:2\n");
    c3.close();

    // Master (91) vanished: registry clears, survivors re-elect.
    std::string line;
    for (int attempt = 0; attempt < 100; ++attempt) {
      line = c1.roundtrip("7\n");
      if (line == "MASTER:1:0\n") break;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    CHECK(line == "MASTER:1:0\n");
    CHECK(c2.roundtrip("42\n") == "MASTER:2:1\n");
  }
  server.stop();
}

TEST_CASE("socket server, serial mode") {
  ManagerServer server(0, ConnMode::SerialPerRequest, false);
  server.start_background();

  // One connection per heartbeat; the registry persists across them.
  {
    LineClient c(server.port());
    CHECK(c.roundtrip("7\n") == "MASTER:1:0\n");
  }
  {
    LineClient c(server.port());
    CHECK(c.roundtrip("42\n") == "MASTER:2:1\n");
  }
  {
    LineClient c(server.port());
    CHECK(c.roundtrip("7\n") == "SLAVE:2:0\n");
  }
  server.stop();
}

TEST_CASE("socket server hands EQUAL roles when configured") {
  ManagerServer server(0, ConnMode::ConcurrentPersistent, true);
  server.start_background();
  {
    LineClient c1(server.port());
    LineClient c2(server.port());
    CHECK(c1.roundtrip("5\n") == "EQUAL:1:0\n");
    CHECK(c2.roundtrip("9\n") == "EQUAL:2:1\n");
  }
  server.stop();
}
