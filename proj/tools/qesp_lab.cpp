// qesp-lab: experiment harness and one-shot packet utilities.
//
// Exit codes: 0 success, 2 bad flags, 3 ConfigError, 10+ engine/parse
// errors (see qesp::exit_code and README). Every failure prints exactly one
// line on stderr: "error: <Code>: <message>".

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qesp/classifier.hpp"
#include "qesp/config.hpp"
#include "qesp/engine.hpp"
#include "qesp/error.hpp"
#include "qesp/experiments.hpp"

namespace {

using namespace qesp;

constexpr int kExitUsage = 2;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

[[noreturn]] void usage_error(const std::string& what) {
  std::cerr << "error: Usage: " << what << "\n";
  std::exit(kExitUsage);
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> sizes;
  for (const auto& s : split(text, ',')) {
    try {
      std::size_t used = 0;
      auto v = std::stoul(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      sizes.push_back(v);
    } catch (const std::exception&) {
      usage_error("--sizes: '" + s + "' is not a size");
    }
  }
  if (sizes.empty()) usage_error("--sizes: empty list");
  return sizes;
}

std::vector<Variant> parse_variants(const std::string& text) {
  if (text == "both") return {Variant::Esp, Variant::Qesp};
  if (text == "qesp") return {Variant::Qesp};
  if (text == "esp") return {Variant::Esp};
  usage_error("--variant must be qesp, esp or both");
}

Bytes read_hex_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ConfigError, path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_hex(ss.str());
}

// Writes to --out when given, otherwise to stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) fail(Errc::ConfigError, path + ": cannot write");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  bool to_file() const { return file_.is_open(); }

 private:
  std::ofstream file_;
};

std::string port_text(const std::optional<std::uint16_t>& p) {
  return p ? std::to_string(*p) : std::string("unavailable");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Q-ESP lab: QoS-visible ESP encapsulation, classifier and network simulator"};
  app.require_subcommand(1);

  // throughput
  auto* throughput = app.add_subcommand("throughput", "single-flow goodput sweep over packet sizes");
  std::string tp_sizes = "64,128,256,512,1024,2048,4096";
  double tp_pps = 100;
  std::string tp_variant = "both";
  std::string tp_cipher = "aes-128-cbc";
  std::string tp_mac = "hmac-sha1-96";
  std::string tp_mode = "transport";
  double tp_duration = 10;
  std::optional<std::uint64_t> tp_seed;
  std::string tp_out;
  throughput->add_option("--sizes", tp_sizes, "comma-separated datagram sizes (bytes)");
  throughput->add_option("--pps", tp_pps, "packets per second")->check(CLI::PositiveNumber);
  throughput->add_option("--variant", tp_variant, "qesp, esp or both");
  throughput->add_option("--cipher", tp_cipher, "null, aes-128-cbc, 3des-cbc");
  throughput->add_option("--mac", tp_mac, "null, hmac-md5-96, hmac-sha1-96");
  throughput->add_option("--mode", tp_mode, "transport or tunnel");
  throughput->add_option("--duration", tp_duration, "simulated seconds")->check(CLI::PositiveNumber);
  throughput->add_option("--seed", tp_seed, "RNG seed (overrides QESP_LAB_SEED)");
  throughput->add_option("--out", tp_out, "CSV output path (default stdout)");

  // priority
  auto* priority = app.add_subcommand("priority", "congested-link priority control, Q-ESP vs ESP");
  std::string pr_config;
  std::string pr_out;
  std::optional<std::uint64_t> pr_seed;
  priority->add_option("--config", pr_config, "experiment JSON")->required();
  priority->add_option("--out", pr_out, "CSV output path (default: config 'output' or stdout)");
  priority->add_option("--seed", pr_seed, "RNG seed (overrides QESP_LAB_SEED and config)");

  // bench-crypto
  auto* bench = app.add_subcommand("bench-crypto", "encapsulation microbenchmark");
  std::string bc_sizes = "64,256,1024,4096";
  std::string bc_algs = "all";
  std::string bc_variant = "both";
  std::size_t bc_iters = 2000;
  std::string bc_out;
  bench->add_option("--sizes", bc_sizes, "comma-separated datagram sizes (bytes)");
  bench->add_option("--algs", bc_algs, "comma-separated cipher/mac pairs, or 'all'");
  bench->add_option("--variant", bc_variant, "qesp, esp or both");
  bench->add_option("--iters", bc_iters, "packets per trial")->check(CLI::PositiveNumber);
  bench->add_option("--out", bc_out, "CSV output path (default stdout)");

  // one-shot tools
  std::string one_config;
  std::string one_in;
  std::optional<std::uint32_t> encap_spi;
  auto* encap = app.add_subcommand("encap", "encapsulate one datagram (hex file) with the matching SA");
  encap->add_option("--config", one_config, "JSON with sas")->required();
  encap->add_option("--in", one_in, "hex file holding one IPv4 datagram")->required();
  encap->add_option("--spi", encap_spi, "use this SA instead of selector lookup");
  auto* decap = app.add_subcommand("decap", "decapsulate one Q-ESP/ESP datagram (hex file)");
  decap->add_option("--config", one_config, "JSON with sas")->required();
  decap->add_option("--in", one_in, "hex file holding one IPv4 datagram")->required();
  auto* classify_cmd = app.add_subcommand("classify", "run the multi-field classifier on one datagram");
  classify_cmd->add_option("--config", one_config, "JSON with rules")->required();
  classify_cmd->add_option("--in", one_in, "hex file holding one IPv4 datagram")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: Usage: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*throughput) {
      experiments::ThroughputOptions o;
      o.sizes = parse_sizes(tp_sizes);
      o.pps = tp_pps;
      o.variants = parse_variants(tp_variant);
      auto cipher = parse_cipher_alg(tp_cipher);
      auto mac = parse_mac_alg(tp_mac);
      if (!cipher) usage_error("--cipher: unknown algorithm '" + tp_cipher + "'");
      if (!mac) usage_error("--mac: unknown algorithm '" + tp_mac + "'");
      o.cipher = *cipher;
      o.mac = *mac;
      if (tp_mode != "transport" && tp_mode != "tunnel") usage_error("--mode must be transport or tunnel");
      o.mode = tp_mode == "tunnel" ? Mode::Tunnel : Mode::Transport;
      o.duration = tp_duration;
      o.seed = resolve_seed(tp_seed, 1);
      for (auto s : o.sizes)
        if (s < netsim::min_packet_size(kProtoUdp) || s > 65000)
          usage_error("--sizes: " + std::to_string(s) + " outside [28, 65000]");
      Output out(tp_out);
      experiments::write_throughput_csv(out.stream(), experiments::run_throughput(o));
      return 0;
    }

    if (*priority) {
      auto cfg = load_experiment_config(pr_config);
      cfg.sim.seed = resolve_seed(pr_seed, cfg.sim.seed);
      auto runs = experiments::run_priority(cfg.sim);
      Output out(!pr_out.empty() ? pr_out : cfg.output.value_or(""));
      experiments::write_flow_stats_csv_header(out.stream());
      for (const auto& r : runs)
        experiments::write_flow_stats_csv(out.stream(), std::string(to_string(r.variant)), r.result.flows);
      auto& summary = out.to_file() ? std::cout : std::cerr;
      for (const auto& r : runs) summary << experiments::summary_line(r) << "\n";
      return 0;
    }

    if (*bench) {
      experiments::BenchOptions o;
      o.sizes = parse_sizes(bc_sizes);
      o.variants = parse_variants(bc_variant);
      o.iters = bc_iters;
      for (auto s : o.sizes)
        if (s < netsim::min_packet_size(kProtoUdp) || s > 65000)
          usage_error("--sizes: " + std::to_string(s) + " outside [28, 65000]");
      if (bc_algs != "all") {
        // Pairs are benchmarked as the cross product of the named ciphers and macs.
        o.ciphers.clear();
        o.macs.clear();
        for (const auto& pair : split(bc_algs, ',')) {
          auto parts = split(pair, '/');
          if (parts.size() != 2) usage_error("--algs: expected cipher/mac, got '" + pair + "'");
          auto c = parse_cipher_alg(parts[0]);
          auto m = parse_mac_alg(parts[1]);
          if (!c || !m) usage_error("--algs: unknown algorithm in '" + pair + "'");
          if (std::find(o.ciphers.begin(), o.ciphers.end(), *c) == o.ciphers.end()) o.ciphers.push_back(*c);
          if (std::find(o.macs.begin(), o.macs.end(), *m) == o.macs.end()) o.macs.push_back(*m);
        }
      }
      Output out(bc_out);
      experiments::write_bench_csv(out.stream(), experiments::run_crypto_bench(o));
      return 0;
    }

    if (*encap) {
      auto cfg = load_experiment_config(one_config, false);
      Sadb sadb;
      for (const auto& sa : cfg.sim.sas) sadb.add_sa(sa);
      Bytes packet = read_hex_file(one_in);
      SecurityAssociation* sa = nullptr;
      if (encap_spi) {
        sa = sadb.lookup_by_spi(*encap_spi);
        if (sa == nullptr) fail(Errc::UnknownSpi, "no SA with SPI " + std::to_string(*encap_spi));
      } else {
        sa = sadb.lookup_outbound(five_tuple_of(packet));
      }
      if (sa == nullptr) {
        parse_ipv4(packet);
        std::cerr << "note: no SA selector matched; datagram bypasses protection\n";
        std::cout << to_hex(packet) << "\n";
        return 0;
      }
      std::cout << to_hex(outbound(*sa, packet)) << "\n";
      return 0;
    }

    if (*decap) {
      auto cfg = load_experiment_config(one_config, false);
      Sadb sadb;
      for (const auto& sa : cfg.sim.sas) sadb.add_sa(sa);
      std::cout << to_hex(inbound(sadb, read_hex_file(one_in))) << "\n";
      return 0;
    }

    if (*classify_cmd) {
      auto cfg = load_experiment_config(one_config, false);
      Bytes packet = read_hex_file(one_in);
      auto f = extract_fields(packet);
      std::cout << "src=" << format_ipv4_address(f.src_addr) << " dst=" << format_ipv4_address(f.dst_addr)
                << " protocol=" << int{f.protocol} << " src_port=" << port_text(f.src_port)
                << " dst_port=" << port_text(f.dst_port) << " dscp=" << int{cfg.sim.rules.lookup(f)}
                << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
