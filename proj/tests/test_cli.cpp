#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "edgesim/cli_app.hpp"
#include "edgesim/scenario.hpp"

using namespace edgesim;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args, std::string* err_out = nullptr) {
  std::vector<char*> argv;
  args.insert(args.begin(), "edgesim");
  for (std::string& a : args) argv.push_back(a.data());

  std::stringstream captured;
  std::streambuf* old = std::cerr.rdbuf(captured.rdbuf());
  const int rc = cli_main(static_cast<int>(argv.size()), argv.data());
  std::cerr.rdbuf(old);
  if (err_out) *err_out = captured.str();
  return rc;
}

fs::path write_temp(const std::string& name, const std::string& content) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

const char* kScenario = R"({
  "name": "cli_smoke",
  "seed": 3,
  "duration_s": 3.0,
  "topology": {
    "switches": [
      {"dpid": 1, "fail_mode": "standalone"},
      {"dpid": 2, "fail_mode": "standalone"}
    ],
    "hosts": [
      {"name": "h1", "mac": "00:00:00:00:00:01", "ip": "10.0.0.1",
       "switch": 1, "port": 1},
      {"name": "h2", "mac": "00:00:00:00:00:02", "ip": "10.0.0.2",
       "switch": 2, "port": 1}
    ],
    "links": [
      {"a": 1, "a_port": 2, "b": 2, "b_port": 2, "capacity_mbps": 10.0}
    ]
  },
  "controllers": {"count": 1},
  "demands": [
    {"type": "ping", "src": "h1", "dst_ip": "10.0.0.2",
     "count": 2, "interval_s": 0.5, "start_s": 0.2}
  ]
})";

}  // namespace

TEST_CASE("validate accepts a good scenario and rejects a broken one") {
  const auto good = write_temp("edgesim_good.json", kScenario);
  CHECK(run_cli({"validate", good.string()}) == 0);

  std::string broken = kScenario;
  const auto pos = broken.find("\"src\": \"h1\"");
  REQUIRE(pos != std::string::npos);
  broken.replace(pos, 11, "\"src\": \"h9\"");
  const auto bad = write_temp("edgesim_bad.json", broken);
  std::string err;
  CHECK(run_cli({"validate", bad.string()}, &err) == 1);
  CHECK(err.find("demands[0].src") != std::string::npos);

  CHECK(run_cli({"validate", "/nonexistent/file.json"}) == 1);
}

TEST_CASE("run writes the report files in the requested formats") {
  const auto good = write_temp("edgesim_run.json", kScenario);
  const fs::path out = fs::temp_directory_path() / "edgesim_out";
  fs::remove_all(out);

  CHECK(run_cli({"run", good.string(), "--out-dir", out.string(),
                 "--format", "both"}) == 0);
  CHECK(fs::exists(out / "report.json"));
  for (const char* file : {"control_bytes.csv", "throughput.csv", "rtt.csv",
                           "packet_in.csv"}) {
    CAPTURE(file);
    REQUIRE(fs::exists(out / file));
    std::ifstream in(out / file);
    std::string header;
    std::getline(in, header);
    CHECK(header.find(',') != std::string::npos);  // header row present
  }

  std::ifstream in(out / "rtt.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "ping,try,rtt_ms");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("json-only run omits the csv files") {
  const auto good = write_temp("edgesim_run2.json", kScenario);
  const fs::path out = fs::temp_directory_path() / "edgesim_out_json";
  fs::remove_all(out);
  CHECK(run_cli({"run", good.string(), "--out-dir", out.string(),
                 "--format", "json"}) == 0);
  CHECK(fs::exists(out / "report.json"));
  CHECK_FALSE(fs::exists(out / "rtt.csv"));
}

TEST_CASE("schema version is stamped into scenario and report") {
  Scenario scn = Scenario::from_json_text(kScenario);
  CHECK(scn.to_json_text().find("\"schema_version\": 1") != std::string::npos);
}
