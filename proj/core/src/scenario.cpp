#include "edgesim/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace edgesim {

using nlohmann::json;

namespace {

/// Collects parse issues as "path: problem" strings.
struct Parser {
  std::vector<std::string> issues;

  void fail(const std::string& path, const std::string& what) {
    issues.push_back(path + ": " + what);
  }

  const json* child(const json& j, const std::string& path,
                    const char* key, bool required) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return nullptr;
    }
    auto it = j.find(key);
    if (it == j.end()) {
      if (required) fail(path + "." + key, "missing required field");
      return nullptr;
    }
    return &*it;
  }

  double number(const json& j, const std::string& path, const char* key,
                double fallback, bool required = false) {
    const json* c = child(j, path, key, required);
    if (!c) return fallback;
    if (!c->is_number()) {
      fail(path + "." + key, "expected a number");
      return fallback;
    }
    return c->get<double>();
  }

  int64_t integer(const json& j, const std::string& path, const char* key,
                  int64_t fallback, bool required = false) {
    const json* c = child(j, path, key, required);
    if (!c) return fallback;
    if (!c->is_number_integer()) {
      fail(path + "." + key, "expected an integer");
      return fallback;
    }
    return c->get<int64_t>();
  }

  bool boolean(const json& j, const std::string& path, const char* key,
               bool fallback) {
    const json* c = child(j, path, key, false);
    if (!c) return fallback;
    if (!c->is_boolean()) {
      fail(path + "." + key, "expected a boolean");
      return fallback;
    }
    return c->get<bool>();
  }

  std::string text(const json& j, const std::string& path, const char* key,
                   const std::string& fallback, bool required = false) {
    const json* c = child(j, path, key, required);
    if (!c) return fallback;
    if (!c->is_string()) {
      fail(path + "." + key, "expected a string");
      return fallback;
    }
    return c->get<std::string>();
  }

  MacAddress mac(const json& j, const std::string& path, const char* key) {
    const std::string raw = text(j, path, key, "", true);
    if (auto parsed = MacAddress::parse(raw)) return *parsed;
    if (!raw.empty()) fail(path + "." + key, "invalid MAC '" + raw + "'");
    return {};
  }

  Ipv4Address ip(const json& j, const std::string& path, const char* key) {
    const std::string raw = text(j, path, key, "", true);
    if (auto parsed = Ipv4Address::parse(raw)) return *parsed;
    if (!raw.empty()) fail(path + "." + key, "invalid IPv4 '" + raw + "'");
    return {};
  }

  Power power(const json& j, const std::string& path, const char* key,
              Power fallback) {
    const std::string raw = text(j, path, key,
                                 fallback == Power::On ? "on" : "off");
    if (raw == "on") return Power::On;
    if (raw == "off") return Power::Off;
    fail(path + "." + key, "expected 'on' or 'off'");
    return fallback;
  }
};

std::string power_name(Power p) { return p == Power::On ? "on" : "off"; }

}  // namespace

Scenario Scenario::from_json_text(const std::string& content) {
  json root;
  try {
    root = json::parse(content);
  } catch (const json::parse_error& err) {
    throw ScenarioError({std::string("json: ") + err.what()});
  }

  Parser p;
  Scenario s;
  s.name = p.text(root, "scenario", "name", s.name);
  s.seed = static_cast<uint64_t>(p.integer(root, "scenario", "seed", 1));
  s.duration_s = p.number(root, "scenario", "duration_s", s.duration_s, true);
  s.activation_latency_s = p.number(root, "scenario", "activation_latency_s",
                                    s.activation_latency_s);
  s.ping_timeout_s =
      p.number(root, "scenario", "ping_timeout_s", s.ping_timeout_s);

  if (const json* topo = p.child(root, "scenario", "topology", true)) {
    if (const json* arr = p.child(*topo, "topology", "switches", true)) {
      if (!arr->is_array()) {
        p.fail("topology.switches", "expected an array");
      } else {
        size_t i = 0;
        for (const json& e : *arr) {
          const std::string path = "topology.switches[" + std::to_string(i++) +
                                   "]";
          ScenarioSwitch sw;
          sw.dpid = static_cast<Dpid>(p.integer(e, path, "dpid", 0, true));
          const std::string mode =
              p.text(e, path, "fail_mode", "standalone");
          if (mode == "standalone") {
            sw.fail_mode = FailMode::Standalone;
          } else if (mode == "secure") {
            sw.fail_mode = FailMode::Secure;
          } else {
            p.fail(path + ".fail_mode", "expected 'standalone' or 'secure'");
          }
          sw.power = p.power(e, path, "power", Power::On);
          s.switches.push_back(sw);
        }
      }
    }
    if (const json* arr = p.child(*topo, "topology", "hosts", true)) {
      if (!arr->is_array()) {
        p.fail("topology.hosts", "expected an array");
      } else {
        size_t i = 0;
        for (const json& e : *arr) {
          const std::string path = "topology.hosts[" + std::to_string(i++) +
                                   "]";
          ScenarioHost h;
          h.name = p.text(e, path, "name", "", true);
          h.mac = p.mac(e, path, "mac");
          h.ip = p.ip(e, path, "ip");
          h.attached_dpid =
              static_cast<Dpid>(p.integer(e, path, "switch", 0, true));
          h.attached_port =
              static_cast<PortIndex>(p.integer(e, path, "port", 0, true));
          h.capacity_mbps =
              p.number(e, path, "capacity_mbps", h.capacity_mbps);
          h.delay_ms = p.number(e, path, "delay_ms", h.delay_ms);
          h.link_power = p.power(e, path, "power", Power::On);
          s.hosts.push_back(std::move(h));
        }
      }
    }
    if (const json* arr = p.child(*topo, "topology", "links", false)) {
      if (!arr->is_array()) {
        p.fail("topology.links", "expected an array");
      } else {
        size_t i = 0;
        for (const json& e : *arr) {
          const std::string path = "topology.links[" + std::to_string(i++) +
                                   "]";
          ScenarioLink l;
          l.a = static_cast<Dpid>(p.integer(e, path, "a", 0, true));
          l.a_port =
              static_cast<PortIndex>(p.integer(e, path, "a_port", 0, true));
          l.b = static_cast<Dpid>(p.integer(e, path, "b", 0, true));
          l.b_port =
              static_cast<PortIndex>(p.integer(e, path, "b_port", 0, true));
          l.capacity_mbps = p.number(e, path, "capacity_mbps",
                                     l.capacity_mbps);
          l.delay_ms = p.number(e, path, "delay_ms", l.delay_ms);
          l.power = p.power(e, path, "power", Power::On);
          s.links.push_back(l);
        }
      }
    }
  }

  if (const json* farm = p.child(root, "scenario", "farm", false)) {
    ScenarioFarm f;
    f.virtual_ip = p.ip(*farm, "farm", "virtual_ip");
    if (const json* arr = p.child(*farm, "farm", "servers", true)) {
      if (!arr->is_array()) {
        p.fail("farm.servers", "expected an array of host names");
      } else {
        for (const json& e : *arr) {
          if (e.is_string()) {
            f.servers.push_back(e.get<std::string>());
          } else {
            p.fail("farm.servers", "expected host name strings");
          }
        }
      }
    }
    f.initial_active = static_cast<int>(
        p.integer(*farm, "farm", "initial_active", f.initial_active));
    f.idle_timer_s = p.number(*farm, "farm", "idle_timer_s", f.idle_timer_s);
    f.flows_per_server = static_cast<int>(
        p.integer(*farm, "farm", "flows_per_server", f.flows_per_server));
    if (const json* seg = p.child(*farm, "farm", "segment", false)) {
      if (const json* arr = p.child(*seg, "farm.segment", "switches", false)) {
        for (const json& e : *arr) {
          if (e.is_number_integer()) {
            f.segment_switches.push_back(e.get<Dpid>());
          } else {
            p.fail("farm.segment.switches", "expected dpid integers");
          }
        }
      }
      if (const json* arr = p.child(*seg, "farm.segment", "links", false)) {
        for (const json& e : *arr) {
          if (e.is_array() && e.size() == 2 && e[0].is_string() &&
              e[1].is_string()) {
            f.segment_links.push_back(
                {e[0].get<std::string>(), e[1].get<std::string>()});
          } else {
            p.fail("farm.segment.links", "expected [node, node] name pairs");
          }
        }
      }
    }
    s.farm = std::move(f);
  }

  if (const json* c = p.child(root, "scenario", "controllers", false)) {
    ScenarioControllers& sc = s.controllers;
    sc.count = static_cast<int>(p.integer(*c, "controllers", "count", 1));
    const std::string scheme = p.text(*c, "controllers", "scheme", "by_dpid");
    if (scheme == "by_dpid") {
      sc.scheme = ArbitrationScheme::ByDpid;
    } else if (scheme == "by_counter") {
      sc.scheme = ArbitrationScheme::ByCounter;
    } else {
      p.fail("controllers.scheme", "expected 'by_dpid' or 'by_counter'");
    }
    sc.equal_mode = p.boolean(*c, "controllers", "equal_mode", false);
    sc.poll_period_s =
        p.number(*c, "controllers", "poll_period_s", sc.poll_period_s);
    sc.alfa = p.number(*c, "controllers", "alfa", sc.alfa);
    if (const json* bw = p.child(*c, "controllers", "default_bw1", false)) {
      if (bw->is_number()) {
        sc.default_bw1 = bw->get<double>();
      } else if (!bw->is_null()) {
        p.fail("controllers.default_bw1", "expected a number or null");
      }
    }
    sc.k = p.number(*c, "controllers", "k", sc.k);
    sc.invert_dijkstra_weights = p.boolean(*c, "controllers",
                                           "invert_dijkstra_weights", false);
    sc.use_select_groups =
        p.boolean(*c, "controllers", "use_select_groups", true);
    sc.control_latency_ms =
        p.number(*c, "controllers", "control_latency_ms",
                 sc.control_latency_ms);
  }

  if (const json* m = p.child(root, "scenario", "manager", false)) {
    const std::string mode = p.text(*m, "manager", "conn_mode", "concurrent");
    if (mode == "concurrent") {
      s.manager.conn_mode = ConnMode::ConcurrentPersistent;
    } else if (mode == "serial") {
      s.manager.conn_mode = ConnMode::SerialPerRequest;
    } else {
      p.fail("manager.conn_mode", "expected 'concurrent' or 'serial'");
    }
    s.manager.header_bytes = static_cast<uint32_t>(
        p.integer(*m, "manager", "header_bytes", s.manager.header_bytes));
    s.manager.setup_bytes = static_cast<uint32_t>(
        p.integer(*m, "manager", "setup_bytes", s.manager.setup_bytes));
    s.manager.teardown_bytes = static_cast<uint32_t>(
        p.integer(*m, "manager", "teardown_bytes", s.manager.teardown_bytes));
    s.manager.latency_ms =
        p.number(*m, "manager", "latency_ms", s.manager.latency_ms);
  }

  if (const json* arr = p.child(root, "scenario", "demands", false)) {
    if (!arr->is_array()) {
      p.fail("demands", "expected an array");
    } else {
      size_t i = 0;
      for (const json& e : *arr) {
        const std::string path = "demands[" + std::to_string(i++) + "]";
        const std::string type = p.text(e, path, "type", "", true);
        if (type == "ping") {
          PingDemand d;
          d.src = p.text(e, path, "src", "", true);
          d.dst_ip = p.ip(e, path, "dst_ip");
          d.count = static_cast<int>(p.integer(e, path, "count", d.count));
          d.interval_s = p.number(e, path, "interval_s", d.interval_s);
          d.start_s = p.number(e, path, "start_s", d.start_s);
          s.demands.push_back(d);
        } else if (type == "tcp") {
          TcpDemand d;
          d.src = p.text(e, path, "src", "", true);
          d.dst_ip = p.ip(e, path, "dst_ip");
          d.dst_port = static_cast<uint16_t>(
              p.integer(e, path, "dst_port", d.dst_port));
          d.start_s = p.number(e, path, "start_s", d.start_s);
          d.duration_s = p.number(e, path, "duration_s", d.duration_s);
          s.demands.push_back(d);
        } else if (type == "udp") {
          UdpDemand d;
          d.src = p.text(e, path, "src", "", true);
          d.dst_ip = p.ip(e, path, "dst_ip");
          d.dst_port = static_cast<uint16_t>(
              p.integer(e, path, "dst_port", d.dst_port));
          d.rate_mbps = p.number(e, path, "rate_mbps", d.rate_mbps);
          d.start_s = p.number(e, path, "start_s", d.start_s);
          d.duration_s = p.number(e, path, "duration_s", d.duration_s);
          s.demands.push_back(d);
        } else if (!type.empty()) {
          p.fail(path + ".type", "unknown demand type '" + type + "'");
        }
      }
    }
  }

  if (const json* arr = p.child(root, "scenario", "failures", false)) {
    if (!arr->is_array()) {
      p.fail("failures", "expected an array");
    } else {
      size_t i = 0;
      for (const json& e : *arr) {
        const std::string path = "failures[" + std::to_string(i++) + "]";
        FailureInjection inj;
        inj.at_s = p.number(e, path, "at_s", 0.0, true);
        const std::string type = p.text(e, path, "type", "", true);
        if (type == "kill_controller") {
          inj.what = KillController{
              static_cast<int>(p.integer(e, path, "index", 0, true))};
        } else if (type == "kill_master") {
          inj.what = KillMaster{};
        } else if (type == "cut_control_channel") {
          inj.what = CutControlChannel{
              static_cast<Dpid>(p.integer(e, path, "dpid", 0, true))};
        } else if (type == "cut_link") {
          inj.what = CutLink{p.text(e, path, "a", "", true),
                             p.text(e, path, "b", "", true)};
        } else if (type == "revive_controller") {
          inj.what = ReviveController{
              static_cast<int>(p.integer(e, path, "index", 0, true))};
        } else {
          p.fail(path + ".type", "unknown failure type '" + type + "'");
          continue;
        }
        s.failures.push_back(std::move(inj));
      }
    }
  }

  if (!p.issues.empty()) throw ScenarioError(std::move(p.issues));
  return s;
}

Scenario Scenario::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError({path + ": cannot open file"});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

std::string Scenario::to_json_text() const {
  json root;
  root["schema_version"] = 1;
  root["name"] = name;
  root["seed"] = seed;
  root["duration_s"] = duration_s;
  root["activation_latency_s"] = activation_latency_s;
  root["ping_timeout_s"] = ping_timeout_s;

  json topo;
  topo["switches"] = json::array();
  for (const auto& sw : switches) {
    topo["switches"].push_back(
        {{"dpid", sw.dpid},
         {"fail_mode",
          sw.fail_mode == FailMode::Standalone ? "standalone" : "secure"},
         {"power", power_name(sw.power)}});
  }
  topo["hosts"] = json::array();
  for (const auto& h : hosts) {
    topo["hosts"].push_back({{"name", h.name},
                             {"mac", h.mac.to_string()},
                             {"ip", h.ip.to_string()},
                             {"switch", h.attached_dpid},
                             {"port", h.attached_port},
                             {"capacity_mbps", h.capacity_mbps},
                             {"delay_ms", h.delay_ms},
                             {"power", power_name(h.link_power)}});
  }
  topo["links"] = json::array();
  for (const auto& l : links) {
    topo["links"].push_back({{"a", l.a},
                             {"a_port", l.a_port},
                             {"b", l.b},
                             {"b_port", l.b_port},
                             {"capacity_mbps", l.capacity_mbps},
                             {"delay_ms", l.delay_ms},
                             {"power", power_name(l.power)}});
  }
  root["topology"] = std::move(topo);

  if (farm) {
    json f;
    f["virtual_ip"] = farm->virtual_ip.to_string();
    f["servers"] = farm->servers;
    f["initial_active"] = farm->initial_active;
    f["idle_timer_s"] = farm->idle_timer_s;
    f["flows_per_server"] = farm->flows_per_server;
    json seg;
    seg["switches"] = farm->segment_switches;
    seg["links"] = json::array();
    for (const auto& pair : farm->segment_links) {
      seg["links"].push_back({pair[0], pair[1]});
    }
    f["segment"] = std::move(seg);
    root["farm"] = std::move(f);
  }

  root["controllers"] = {
      {"count", controllers.count},
      {"scheme", controllers.scheme == ArbitrationScheme::ByDpid
                     ? "by_dpid"
                     : "by_counter"},
      {"equal_mode", controllers.equal_mode},
      {"poll_period_s", controllers.poll_period_s},
      {"alfa", controllers.alfa},
      {"k", controllers.k},
      {"invert_dijkstra_weights", controllers.invert_dijkstra_weights},
      {"use_select_groups", controllers.use_select_groups},
      {"control_latency_ms", controllers.control_latency_ms}};
  if (controllers.default_bw1) {
    root["controllers"]["default_bw1"] = *controllers.default_bw1;
  } else {
    root["controllers"]["default_bw1"] = nullptr;
  }

  root["manager"] = {
      {"conn_mode", manager.conn_mode == ConnMode::ConcurrentPersistent
                        ? "concurrent"
                        : "serial"},
      {"header_bytes", manager.header_bytes},
      {"setup_bytes", manager.setup_bytes},
      {"teardown_bytes", manager.teardown_bytes},
      {"latency_ms", manager.latency_ms}};

  root["demands"] = json::array();
  for (const auto& demand : demands) {
    if (const auto* d = std::get_if<PingDemand>(&demand)) {
      root["demands"].push_back({{"type", "ping"},
                                 {"src", d->src},
                                 {"dst_ip", d->dst_ip.to_string()},
                                 {"count", d->count},
                                 {"interval_s", d->interval_s},
                                 {"start_s", d->start_s}});
    } else if (const auto* d = std::get_if<TcpDemand>(&demand)) {
      root["demands"].push_back({{"type", "tcp"},
                                 {"src", d->src},
                                 {"dst_ip", d->dst_ip.to_string()},
                                 {"dst_port", d->dst_port},
                                 {"start_s", d->start_s},
                                 {"duration_s", d->duration_s}});
    } else if (const auto* d = std::get_if<UdpDemand>(&demand)) {
      root["demands"].push_back({{"type", "udp"},
                                 {"src", d->src},
                                 {"dst_ip", d->dst_ip.to_string()},
                                 {"dst_port", d->dst_port},
                                 {"rate_mbps", d->rate_mbps},
                                 {"start_s", d->start_s},
                                 {"duration_s", d->duration_s}});
    }
  }

  root["failures"] = json::array();
  for (const auto& inj : failures) {
    json e;
    e["at_s"] = inj.at_s;
    if (const auto* k = std::get_if<KillController>(&inj.what)) {
      e["type"] = "kill_controller";
      e["index"] = k->index;
    } else if (std::holds_alternative<KillMaster>(inj.what)) {
      e["type"] = "kill_master";
    } else if (const auto* c = std::get_if<CutControlChannel>(&inj.what)) {
      e["type"] = "cut_control_channel";
      e["dpid"] = c->dpid;
    } else if (const auto* c = std::get_if<CutLink>(&inj.what)) {
      e["type"] = "cut_link";
      e["a"] = c->a;
      e["b"] = c->b;
    } else if (const auto* r = std::get_if<ReviveController>(&inj.what)) {
      e["type"] = "revive_controller";
      e["index"] = r->index;
    }
    root["failures"].push_back(std::move(e));
  }

  return root.dump(2) + "\n";
}

std::vector<std::string> Scenario::validate() const {
  std::vector<std::string> issues;
  auto fail = [&](const std::string& path, const std::string& what) {
    issues.push_back(path + ": " + what);
  };

  if (duration_s <= 0) fail("duration_s", "must be > 0");
  if (activation_latency_s < 0) fail("activation_latency_s", "must be >= 0");
  if (controllers.count < 1) fail("controllers.count", "must be >= 1");
  if (controllers.alfa < 0 || controllers.alfa > 1) {
    fail("controllers.alfa", "must be within [0, 1]");
  }
  if (controllers.poll_period_s <= 0) {
    fail("controllers.poll_period_s", "must be > 0");
  }
  if (controllers.k <= 0) fail("controllers.k", "must be > 0");

  std::set<Dpid> dpids;
  for (size_t i = 0; i < switches.size(); ++i) {
    if (!dpids.insert(switches[i].dpid).second) {
      fail("topology.switches[" + std::to_string(i) + "].dpid",
           "duplicate dpid");
    }
  }

  std::set<std::string> names;
  std::set<MacAddress> macs;
  std::set<Ipv4Address> ips;
  std::set<std::pair<Dpid, PortIndex>> used_ports;
  for (size_t i = 0; i < hosts.size(); ++i) {
    const std::string path = "topology.hosts[" + std::to_string(i) + "]";
    const ScenarioHost& h = hosts[i];
    if (!names.insert(h.name).second) fail(path + ".name", "duplicate name");
    if (!macs.insert(h.mac).second) fail(path + ".mac", "duplicate MAC");
    if (!ips.insert(h.ip).second) fail(path + ".ip", "duplicate IP");
    if (!dpids.count(h.attached_dpid)) {
      fail(path + ".switch", "unknown switch " +
                                 std::to_string(h.attached_dpid));
    } else if (!used_ports.insert({h.attached_dpid, h.attached_port})
                    .second) {
      fail(path + ".port", "switch port already in use");
    }
    if (h.capacity_mbps <= 0) fail(path + ".capacity_mbps", "must be > 0");
    if (h.delay_ms < 0) fail(path + ".delay_ms", "must be >= 0");
  }

  std::set<std::pair<Dpid, Dpid>> pairs;
  for (size_t i = 0; i < links.size(); ++i) {
    const std::string path = "topology.links[" + std::to_string(i) + "]";
    const ScenarioLink& l = links[i];
    if (!dpids.count(l.a)) fail(path + ".a", "unknown switch");
    if (!dpids.count(l.b)) fail(path + ".b", "unknown switch");
    if (l.a == l.b) fail(path, "self links are not allowed");
    if (dpids.count(l.a) && !used_ports.insert({l.a, l.a_port}).second) {
      fail(path + ".a_port", "switch port already in use");
    }
    if (dpids.count(l.b) && !used_ports.insert({l.b, l.b_port}).second) {
      fail(path + ".b_port", "switch port already in use");
    }
    const auto pair = l.a < l.b ? std::make_pair(l.a, l.b)
                                : std::make_pair(l.b, l.a);
    if (!pairs.insert(pair).second) fail(path, "switches already linked");
    if (l.capacity_mbps <= 0) fail(path + ".capacity_mbps", "must be > 0");
    if (l.delay_ms < 0) fail(path + ".delay_ms", "must be >= 0");
  }

  if (farm) {
    if (ips.count(farm->virtual_ip)) {
      fail("farm.virtual_ip", "assigned to a real host interface");
    }
    if (farm->servers.empty()) fail("farm.servers", "must not be empty");
    for (size_t i = 0; i < farm->servers.size(); ++i) {
      if (!names.count(farm->servers[i])) {
        fail("farm.servers[" + std::to_string(i) + "]",
             "unknown host '" + farm->servers[i] + "'");
      }
    }
    if (farm->initial_active < 0 ||
        farm->initial_active > static_cast<int>(farm->servers.size())) {
      fail("farm.initial_active", "out of range");
    }
    if (farm->idle_timer_s <= 0) fail("farm.idle_timer_s", "must be > 0");
    if (farm->flows_per_server < 1) {
      fail("farm.flows_per_server", "must be >= 1");
    }
    for (size_t i = 0; i < farm->segment_switches.size(); ++i) {
      if (!dpids.count(farm->segment_switches[i])) {
        fail("farm.segment.switches[" + std::to_string(i) + "]",
             "unknown switch");
      }
    }
  }

  auto known_ip = [&](Ipv4Address ip_addr) {
    if (ips.count(ip_addr)) return true;
    return farm && farm->virtual_ip == ip_addr;
  };

  for (size_t i = 0; i < demands.size(); ++i) {
    const std::string path = "demands[" + std::to_string(i) + "]";
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if (!names.count(d.src)) {
            fail(path + ".src", "unknown host '" + d.src + "'");
          }
          if (!known_ip(d.dst_ip)) {
            fail(path + ".dst_ip",
                 "no host or virtual IP " + d.dst_ip.to_string());
          }
          if constexpr (std::is_same_v<T, PingDemand>) {
            if (d.count < 1) fail(path + ".count", "must be >= 1");
            if (d.interval_s <= 0) fail(path + ".interval_s", "must be > 0");
          } else if constexpr (std::is_same_v<T, UdpDemand>) {
            if (d.rate_mbps <= 0) fail(path + ".rate_mbps", "must be > 0");
            if (d.duration_s <= 0) fail(path + ".duration_s", "must be > 0");
          } else {
            if (d.duration_s <= 0) fail(path + ".duration_s", "must be > 0");
          }
          if (d.start_s < 0) fail(path + ".start_s", "must be >= 0");
        },
        demands[i]);
  }

  const bool persistent =
      manager.conn_mode == ConnMode::ConcurrentPersistent;
  for (size_t i = 0; i < failures.size(); ++i) {
    const std::string path = "failures[" + std::to_string(i) + "]";
    const FailureInjection& inj = failures[i];
    if (inj.at_s < 0) fail(path + ".at_s", "must be >= 0");
    if (const auto* k = std::get_if<KillController>(&inj.what)) {
      if (k->index < 0 || k->index >= controllers.count) {
        fail(path + ".index", "controller index out of range");
      }
      if (!persistent) {
        fail(path, "controller failures need manager.conn_mode=concurrent");
      }
    } else if (std::holds_alternative<KillMaster>(inj.what)) {
      if (controllers.equal_mode) {
        fail(path, "kill_master undefined with equal_mode controllers");
      }
      if (!persistent) {
        fail(path, "controller failures need manager.conn_mode=concurrent");
      }
    } else if (const auto* c = std::get_if<CutControlChannel>(&inj.what)) {
      if (!dpids.count(c->dpid)) fail(path + ".dpid", "unknown switch");
    } else if (const auto* r = std::get_if<ReviveController>(&inj.what)) {
      if (r->index < 0 || r->index >= controllers.count) {
        fail(path + ".index", "controller index out of range");
      }
    }
    // CutLink endpoints are checked against the built topology below.
  }

  if (issues.empty()) {
    // Structural checks passed; let the topology builder catch the rest
    // (segment link references, cut link references).
    try {
      Topology topo = build_topology();
      if (farm) {
        for (size_t i = 0; i < farm->segment_links.size(); ++i) {
          const auto& pair = farm->segment_links[i];
          auto a = node_by_name(topo, pair[0]);
          auto b = node_by_name(topo, pair[1]);
          if (!a || !b || !topo.link_between(*a, *b)) {
            fail("farm.segment.links[" + std::to_string(i) + "]",
                 "no link between '" + pair[0] + "' and '" + pair[1] + "'");
          }
        }
      }
      for (size_t i = 0; i < failures.size(); ++i) {
        if (const auto* c = std::get_if<CutLink>(&failures[i].what)) {
          auto a = node_by_name(topo, c->a);
          auto b = node_by_name(topo, c->b);
          if (!a || !b || !topo.link_between(*a, *b)) {
            fail("failures[" + std::to_string(i) + "]",
                 "no link between '" + c->a + "' and '" + c->b + "'");
          }
        }
      }
    } catch (const std::exception& err) {
      fail("topology", err.what());
    }
  }

  return issues;
}

Topology Scenario::build_topology() const {
  Topology topo;
  for (const auto& sw : switches) topo.add_switch(sw.dpid);
  for (const auto& h : hosts) {
    topo.add_host(HostInfo{h.name, h.mac, h.ip, h.attached_dpid,
                           h.attached_port},
                  h.capacity_mbps * 1e6, h.delay_ms / 1e3, h.link_power);
  }
  for (const auto& l : links) {
    topo.add_link(NodeId::sw(l.a), l.a_port, NodeId::sw(l.b), l.b_port,
                  l.capacity_mbps * 1e6, l.delay_ms / 1e3, l.power);
  }
  return topo;
}

std::optional<NodeId> Scenario::node_by_name(const Topology& topo,
                                             const std::string& node) const {
  if (auto host = topo.host_index_by_name(node)) return NodeId::host(*host);
  if (node.size() > 1 && node[0] == 's') {
    try {
      const Dpid dpid = std::stoull(node.substr(1));
      if (topo.has_switch(dpid)) return NodeId::sw(dpid);
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

double Scenario::default_bw1_bytes_per_interval() const {
  if (controllers.default_bw1) return *controllers.default_bw1;
  double max_capacity = 0;
  for (const auto& l : links) {
    max_capacity = std::max(max_capacity, l.capacity_mbps * 1e6);
  }
  for (const auto& h : hosts) {
    max_capacity = std::max(max_capacity, h.capacity_mbps * 1e6);
  }
  // One tenth of the fastest link, expressed in bytes per poll interval.
  return 0.1 * max_capacity / 8.0 * controllers.poll_period_s;
}

}  // namespace edgesim
