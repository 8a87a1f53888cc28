#include "edgesim/cli_app.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "edgesim/manager_server.hpp"
#include "edgesim/report.hpp"
#include "edgesim/scenario.hpp"
#include "edgesim/sim.hpp"

namespace edgesim {

namespace {

int run_command(const std::string& path, const std::string& out_dir,
                const std::string& format) {
  Scenario scenario;
  try {
    scenario = Scenario::from_file(path);
    auto issues = scenario.validate();
    if (!issues.empty()) throw ScenarioError(std::move(issues));
  } catch (const ScenarioError& err) {
    for (const std::string& issue : err.issues) {
      std::cerr << "scenario error: " << issue << "\n";
    }
    return 1;
  }

  MetricsReport report;
  try {
    report = run_scenario(scenario);
  } catch (const std::exception& err) {
    std::cerr << "runtime error: " << err.what() << "\n";
    return 2;
  }

  try {
    std::filesystem::create_directories(out_dir);
    if (format == "json" || format == "both") {
      std::ofstream out(std::filesystem::path(out_dir) / "report.json");
      out << report.to_json_text();
    }
    if (format == "csv" || format == "both") {
      report.write_csvs(out_dir);
    }
  } catch (const std::exception& err) {
    std::cerr << "runtime error: " << err.what() << "\n";
    return 2;
  }
  std::cout << "ran '" << scenario.name << "': " << report.total_events
            << " events, " << report.total_control_bytes()
            << " control bytes -> " << out_dir << "\n";
  return 0;
}

int validate_command(const std::string& path) {
  try {
    Scenario scenario = Scenario::from_file(path);
    auto issues = scenario.validate();
    if (!issues.empty()) throw ScenarioError(std::move(issues));
    std::cout << "ok: " << scenario.name << "\n";
    return 0;
  } catch (const ScenarioError& err) {
    for (const std::string& issue : err.issues) {
      std::cerr << "scenario error: " << issue << "\n";
    }
    return 1;
  }
}

int manager_command(int port, const std::string& mode, bool equal) {
  try {
    ManagerServer server(static_cast<uint16_t>(port),
                         mode == "serial" ? ConnMode::SerialPerRequest
                                          : ConnMode::ConcurrentPersistent,
                         equal);
    std::cout << "manager listening on port " << server.port() << " ("
              << mode << (equal ? ", equal" : "") << ")" << std::endl;
    server.serve();
    return 0;
  } catch (const std::exception& err) {
    std::cerr << "runtime error: " << err.what() << "\n";
    return 2;
  }
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"deterministic edge-network resilience simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = ".";
  std::string format = "both";
  auto* run = app.add_subcommand("run", "run a scenario and write reports");
  run->add_option("scenario", scenario_path, "scenario JSON file")
      ->required();
  run->add_option("--out-dir", out_dir, "output directory");
  run->add_option("--format", format, "report format")
      ->check(CLI::IsMember({"csv", "json", "both"}));

  std::string validate_path;
  auto* validate =
      app.add_subcommand("validate", "check a scenario without running it");
  validate->add_option("scenario", validate_path, "scenario JSON file")
      ->required();

  int port = 0;
  std::string mode = "concurrent";
  bool equal = false;
  auto* manager =
      app.add_subcommand("manager", "run the cluster manager on real sockets");
  manager->add_option("--port", port, "TCP port (0 = ephemeral)")->required();
  manager->add_option("--mode", mode, "connection handling")
      ->check(CLI::IsMember({"serial", "concurrent"}));
  manager->add_flag("--equal", equal, "hand every controller the EQUAL role");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 1;
  }

  if (run->parsed()) return run_command(scenario_path, out_dir, format);
  if (validate->parsed()) return validate_command(validate_path);
  return manager_command(port, mode, equal);
}

}  // namespace edgesim
