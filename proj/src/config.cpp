#include "qesp/config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

#include "qesp/error.hpp"

namespace qesp {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& why) {
  fail(Errc::ConfigError, path + ": " + why);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void expect_object(const json& j, const std::string& path,
                   std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) bad(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) bad(join(path, key), "unknown key");
  }
}

const json& require(const json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) bad(join(path, key), "missing required field");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  return j.get<double>();
}

std::uint64_t unsigned_int(const json& j, const std::string& path, std::uint64_t max) {
  if (!j.is_number_unsigned()) bad(path, "expected a non-negative integer");
  auto v = j.get<std::uint64_t>();
  if (v > max) bad(path, "value " + std::to_string(v) + " exceeds " + std::to_string(max));
  return v;
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) bad(path, "expected a string");
  return j.get<std::string>();
}

bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) bad(path, "expected a boolean");
  return j.get<bool>();
}

Ipv4Address address(const json& j, const std::string& path) {
  auto a = parse_ipv4_address(string(j, path));
  if (!a) bad(path, "invalid IPv4 address");
  return *a;
}

Bytes hex(const json& j, const std::string& path) {
  try {
    return from_hex(string(j, path));
  } catch (const Error& e) {
    bad(path, e.what());
  }
}

std::optional<PortRange> port_range(const json& j, const std::string& path) {
  if (j.is_string() && j.get<std::string>() == "any") return std::nullopt;
  if (j.is_number_unsigned()) {
    auto p = static_cast<std::uint16_t>(unsigned_int(j, path, 0xffff));
    return PortRange{p, p};
  }
  if (!j.is_array() || j.size() != 2) bad(path, "expected [lo, hi], a port, or \"any\"");
  PortRange r{static_cast<std::uint16_t>(unsigned_int(j[0], path + "[0]", 0xffff)),
              static_cast<std::uint16_t>(unsigned_int(j[1], path + "[1]", 0xffff))};
  if (r.lo > r.hi) bad(path, "range must satisfy lo <= hi");
  return r;
}

Selector selector(const json& j, const std::string& path) {
  expect_object(j, path, {"src", "dst", "protocol", "src_ports", "dst_ports"});
  Selector s;
  auto prefix = [&](const char* key) {
    if (!j.contains(key)) return Ipv4Prefix::any();
    auto p = Ipv4Prefix::parse(string(j[key], join(path, key)));
    if (!p) bad(join(path, key), "invalid prefix");
    return *p;
  };
  s.src_net = prefix("src");
  s.dst_net = prefix("dst");
  if (j.contains("protocol") && !(j["protocol"].is_string() && j["protocol"] == "any"))
    s.protocol = static_cast<std::uint8_t>(unsigned_int(j["protocol"], join(path, "protocol"), 255));
  if (j.contains("src_ports")) s.src_ports = port_range(j["src_ports"], join(path, "src_ports"));
  if (j.contains("dst_ports")) s.dst_ports = port_range(j["dst_ports"], join(path, "dst_ports"));
  return s;
}

SaConfig sa_config(const json& j, const std::string& path) {
  expect_object(j, path,
                {"spi", "variant", "mode", "cipher", "cipher_key_hex", "mac", "mac_key_hex",
                 "extended_auth", "selector", "tunnel", "iv_seed"});
  SaConfig sa;
  sa.spi = static_cast<std::uint32_t>(unsigned_int(require(j, path, "spi"), join(path, "spi"), 0xffffffffu));
  if (sa.spi == 0) bad(join(path, "spi"), "SPI 0 is reserved");

  auto variant = string(require(j, path, "variant"), join(path, "variant"));
  if (variant == "qesp") sa.variant = Variant::Qesp;
  else if (variant == "esp") sa.variant = Variant::Esp;
  else bad(join(path, "variant"), "expected \"qesp\" or \"esp\"");

  auto mode = j.contains("mode") ? string(j["mode"], join(path, "mode")) : "transport";
  if (mode == "transport") sa.mode = Mode::Transport;
  else if (mode == "tunnel") sa.mode = Mode::Tunnel;
  else bad(join(path, "mode"), "expected \"transport\" or \"tunnel\"");

  auto cipher = parse_cipher_alg(string(require(j, path, "cipher"), join(path, "cipher")));
  if (!cipher) bad(join(path, "cipher"), "unknown cipher");
  sa.cipher = *cipher;
  auto mac = parse_mac_alg(string(require(j, path, "mac"), join(path, "mac")));
  if (!mac) bad(join(path, "mac"), "unknown MAC");
  sa.mac = *mac;

  if (j.contains("cipher_key_hex")) sa.cipher_key = hex(j["cipher_key_hex"], join(path, "cipher_key_hex"));
  if (j.contains("mac_key_hex")) sa.mac_key = hex(j["mac_key_hex"], join(path, "mac_key_hex"));
  if (sa.cipher_key.size() != traits(sa.cipher).key_len)
    bad(join(path, "cipher_key_hex"), "expected " + std::to_string(traits(sa.cipher).key_len) + " bytes");
  if (sa.mac_key.size() != traits(sa.mac).key_len)
    bad(join(path, "mac_key_hex"), "expected " + std::to_string(traits(sa.mac).key_len) + " bytes");

  if (j.contains("extended_auth")) sa.extended_auth = boolean(j["extended_auth"], join(path, "extended_auth"));
  if (sa.variant == Variant::Esp && sa.extended_auth)
    bad(join(path, "extended_auth"), "only valid for qesp SAs");
  if (j.contains("selector")) sa.selector = selector(j["selector"], join(path, "selector"));

  if (j.contains("tunnel")) {
    std::string tp = join(path, "tunnel");
    expect_object(j["tunnel"], tp, {"src", "dst"});
    sa.tunnel_src = address(require(j["tunnel"], tp, "src"), join(tp, "src"));
    sa.tunnel_dst = address(require(j["tunnel"], tp, "dst"), join(tp, "dst"));
  } else if (sa.mode == Mode::Tunnel) {
    bad(join(path, "tunnel"), "required in tunnel mode");
  }
  if (j.contains("iv_seed"))
    sa.iv_seed = unsigned_int(j["iv_seed"], join(path, "iv_seed"), UINT64_MAX);
  return sa;
}

RuleTable rule_table(const json& j, const std::string& path) {
  expect_object(j, path, {"rules", "default_dscp"});
  std::vector<ClassifierRule> rules;
  if (j.contains("rules")) {
    const auto& arr = j["rules"];
    if (!arr.is_array()) bad(join(path, "rules"), "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      std::string rp = join(path, "rules") + "[" + std::to_string(i) + "]";
      expect_object(arr[i], rp, {"selector", "dscp"});
      ClassifierRule r;
      if (arr[i].contains("selector")) r.selector = selector(arr[i]["selector"], join(rp, "selector"));
      r.dscp = static_cast<std::uint8_t>(unsigned_int(require(arr[i], rp, "dscp"), join(rp, "dscp"), 63));
      rules.push_back(std::move(r));
    }
  }
  std::uint8_t def = 0;
  if (j.contains("default_dscp"))
    def = static_cast<std::uint8_t>(unsigned_int(j["default_dscp"], join(path, "default_dscp"), 63));
  return RuleTable(std::move(rules), def);
}

netsim::LinkConfig link_config(const json& j, const std::string& path) {
  expect_object(j, path, {"capacity", "queue_limit", "classes", "class_map"});
  netsim::LinkConfig link;
  link.capacity_bps = number(require(j, path, "capacity"), join(path, "capacity"));
  if (!(link.capacity_bps > 0)) bad(join(path, "capacity"), "must be positive");
  if (j.contains("queue_limit"))
    link.queue_limit = unsigned_int(j["queue_limit"], join(path, "queue_limit"), 1u << 20);
  if (j.contains("classes")) link.num_classes = unsigned_int(j["classes"], join(path, "classes"), 8);
  if (j.contains("class_map")) {
    const auto& m = j["class_map"];
    std::string mp = join(path, "class_map");
    if (!m.is_object()) bad(mp, "expected an object of \"dscp\": class");
    for (const auto& [key, value] : m.items()) {
      unsigned dscp = 0;
      try {
        std::size_t used = 0;
        dscp = static_cast<unsigned>(std::stoul(key, &used));
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        bad(join(mp, key), "key must be a decimal DSCP");
      }
      if (dscp > 63) bad(join(mp, key), "DSCP exceeds 63");
      link.class_map[static_cast<std::uint8_t>(dscp)] = unsigned_int(value, join(mp, key), 7);
    }
  }
  return link;
}

netsim::TrafficSource source(const json& j, const std::string& path) {
  expect_object(j, path, {"flow_id", "five_tuple", "rate", "packet_size", "start", "stop",
                          "arrival", "times", "sa"});
  netsim::TrafficSource s;
  s.flow_id = static_cast<std::uint32_t>(unsigned_int(require(j, path, "flow_id"), join(path, "flow_id"), 0xffffffffu));

  std::string tp = join(path, "five_tuple");
  const auto& t = require(j, path, "five_tuple");
  expect_object(t, tp, {"src", "dst", "protocol", "src_port", "dst_port"});
  s.five_tuple.src_addr = address(require(t, tp, "src"), join(tp, "src"));
  s.five_tuple.dst_addr = address(require(t, tp, "dst"), join(tp, "dst"));
  s.five_tuple.protocol = static_cast<std::uint8_t>(unsigned_int(require(t, tp, "protocol"), join(tp, "protocol"), 255));
  if (t.contains("src_port"))
    s.five_tuple.src_port = static_cast<std::uint16_t>(unsigned_int(t["src_port"], join(tp, "src_port"), 0xffff));
  if (t.contains("dst_port"))
    s.five_tuple.dst_port = static_cast<std::uint16_t>(unsigned_int(t["dst_port"], join(tp, "dst_port"), 0xffff));

  auto arrival = j.contains("arrival") ? string(j["arrival"], join(path, "arrival")) : "cbr";
  if (arrival == "cbr") s.arrival = netsim::Arrival::Cbr;
  else if (arrival == "poisson") s.arrival = netsim::Arrival::Poisson;
  else if (arrival == "trace") s.arrival = netsim::Arrival::Trace;
  else bad(join(path, "arrival"), "expected \"cbr\", \"poisson\" or \"trace\"");

  if (s.arrival == netsim::Arrival::Trace) {
    const auto& times = require(j, path, "times");
    if (!times.is_array()) bad(join(path, "times"), "expected an array");
    for (std::size_t i = 0; i < times.size(); ++i)
      s.times.push_back(number(times[i], join(path, "times") + "[" + std::to_string(i) + "]"));
  } else {
    s.rate = number(require(j, path, "rate"), join(path, "rate"));
  }
  s.packet_size = unsigned_int(require(j, path, "packet_size"), join(path, "packet_size"), 65000);
  if (j.contains("start")) s.start = number(j["start"], join(path, "start"));
  s.stop = j.contains("stop") ? number(j["stop"], join(path, "stop")) : 1e300;
  if (j.contains("sa"))
    s.sa_spi = static_cast<std::uint32_t>(unsigned_int(j["sa"], join(path, "sa"), 0xffffffffu));
  return s;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text, bool need_simulation) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(Errc::ConfigError, std::string("<json>: ") + e.what());
  }
  expect_object(root, "", {"sas", "rules", "classify", "sources", "link", "duration", "seed", "output"});

  ExperimentConfig cfg;
  auto& sim = cfg.sim;
  if (root.contains("sas")) {
    const auto& sas = root["sas"];
    if (!sas.is_array()) bad("sas", "expected an array");
    for (std::size_t i = 0; i < sas.size(); ++i)
      sim.sas.push_back(sa_config(sas[i], "sas[" + std::to_string(i) + "]"));
  }
  if (root.contains("rules")) sim.rules = rule_table(root["rules"], "rules");
  if (root.contains("classify")) sim.classify = boolean(root["classify"], "classify");

  if (need_simulation || root.contains("sources")) {
    const auto& sources = require(root, "", "sources");
    if (!sources.is_array()) bad("sources", "expected an array");
    for (std::size_t i = 0; i < sources.size(); ++i)
      sim.sources.push_back(source(sources[i], "sources[" + std::to_string(i) + "]"));
  }
  if (need_simulation || root.contains("link")) sim.link = link_config(require(root, "", "link"), "link");
  if (need_simulation || root.contains("duration"))
    sim.duration = number(require(root, "", "duration"), "duration");
  if (root.contains("seed")) sim.seed = unsigned_int(root["seed"], "seed", UINT64_MAX);
  if (root.contains("output")) cfg.output = string(root["output"], "output");

  if (need_simulation) netsim::validate(sim);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, bool need_simulation) {
  std::ifstream in(path);
  if (!in) fail(Errc::ConfigError, path.string() + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_experiment_config(ss.str(), need_simulation);
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t config_seed) {
  if (flag) return *flag;
  if (const char* env = std::getenv("QESP_LAB_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      auto v = std::stoull(env, &used);
      if (used == std::string_view(env).size()) return v;
    } catch (const std::exception&) {
    }
    fail(Errc::ConfigError, std::string("QESP_LAB_SEED: not an unsigned integer: ") + env);
  }
  return config_seed;
}

Selector parse_selector_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(Errc::ConfigError, std::string("<json>: ") + e.what());
  }
  return selector(j, "selector");
}

}  // namespace qesp
