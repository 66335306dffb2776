#include "qesp/experiments.hpp"

#include <chrono>
#include <cstdio>
#include <limits>

#include "qesp/engine.hpp"

namespace qesp::experiments {

namespace {

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

constexpr Ipv4Address kHostA = 0x0a000001;  // 10.0.0.1
constexpr Ipv4Address kHostB = 0x0a000002;  // 10.0.0.2

SaConfig bench_sa(std::uint32_t spi, Variant variant, Mode mode, CipherAlg cipher, MacAlg mac) {
  SaConfig sa;
  sa.spi = spi;
  sa.variant = variant;
  sa.mode = mode;
  sa.cipher = cipher;
  sa.cipher_key = demo_key(traits(cipher).key_len, 0x10);
  sa.mac = mac;
  sa.mac_key = demo_key(traits(mac).key_len, 0x20);
  sa.tunnel_src = 0xc0000201;  // 192.0.2.1
  sa.tunnel_dst = 0xc0000202;
  sa.iv_seed = spi;
  return sa;
}

}  // namespace

Bytes demo_key(std::size_t len, std::uint8_t salt) {
  Bytes k(len);
  for (std::size_t i = 0; i < len; ++i) k[i] = static_cast<std::uint8_t>(salt + i + 1);
  return k;
}

// ---------------------------------------------------------------------------

std::vector<ThroughputRow> run_throughput(const ThroughputOptions& o) {
  std::vector<ThroughputRow> rows;
  for (auto size : o.sizes) {
    for (auto variant : o.variants) {
      netsim::SimConfig sim;
      sim.sas.push_back(bench_sa(0x100, variant, o.mode, o.cipher, o.mac));
      netsim::TrafficSource src;
      src.flow_id = 1;
      src.five_tuple = {kHostA, kHostB, kProtoUdp, 4000, 5060};
      src.rate = o.pps;
      src.packet_size = size;
      src.start = 0;
      src.stop = o.duration;
      src.sa_spi = 0x100;
      sim.sources.push_back(src);
      sim.link.capacity_bps = 100e6;
      sim.link.queue_limit = 1024;
      sim.duration = o.duration;
      sim.seed = o.seed;

      auto result = netsim::run_simulation(sim);
      const auto& f = result.flows.front();
      rows.push_back({size, variant, f.throughput_kbps, f.wire_kbps,
                      per_packet_overhead(variant, o.mode, o.cipher, o.mac, size - kIpv4HeaderLen)});
    }
  }
  return rows;
}

void write_throughput_csv(std::ostream& out, const std::vector<ThroughputRow>& rows) {
  out << "size,variant,goodput_kbps,wire_kbps,overhead_bytes\n";
  for (const auto& r : rows) {
    out << r.size << ',' << to_string(r.variant) << ',' << fixed(r.goodput_kbps) << ','
        << fixed(r.wire_kbps) << ',' << r.overhead_bytes << '\n';
  }
}

// ---------------------------------------------------------------------------

netsim::SimConfig with_variant(netsim::SimConfig sim, Variant variant) {
  for (auto& sa : sim.sas) {
    sa.variant = variant;
    if (variant == Variant::Esp) sa.extended_auth = false;
  }
  return sim;
}

std::vector<PriorityRun> run_priority(const netsim::SimConfig& sim) {
  std::vector<PriorityRun> runs;
  for (auto variant : {Variant::Qesp, Variant::Esp})
    runs.push_back({variant, netsim::run_simulation(with_variant(sim, variant))});
  return runs;
}

void write_flow_stats_csv_header(std::ostream& out) {
  out << "run,flow_id,offered_packets,offered_bytes,delivered_packets,delivered_bytes,"
         "dropped_packets,error_drops,mean_latency_s,goodput_kbps,wire_kbps\n";
}

void write_flow_stats_csv(std::ostream& out, const std::string& run,
                          const std::vector<netsim::FlowStats>& flows) {
  for (const auto& f : flows) {
    out << run << ',' << f.flow_id << ',' << f.offered_packets << ',' << f.offered_bytes << ','
        << f.delivered_packets << ',' << f.delivered_bytes << ',' << f.dropped_packets << ','
        << f.error_drops << ',' << fixed(f.mean_latency, 9) << ',' << fixed(f.throughput_kbps)
        << ',' << fixed(f.wire_kbps) << '\n';
  }
}

std::string summary_line(const PriorityRun& run) {
  double total = 0;
  std::string delivery;
  for (const auto& f : run.result.flows) {
    total += f.throughput_kbps;
    double ratio = f.offered_packets == 0 ? 0.0
                                          : static_cast<double>(f.delivered_packets) /
                                                static_cast<double>(f.offered_packets);
    if (!delivery.empty()) delivery += ';';
    delivery += std::to_string(f.flow_id) + ':' + fixed(ratio, 4);
  }
  return "summary,run=" + std::string(to_string(run.variant)) +
         ",flows=" + std::to_string(run.result.flows.size()) + ",goodput_kbps=" + fixed(total) +
         ",delivery=" + delivery;
}

// ---------------------------------------------------------------------------

std::vector<BenchRow> run_crypto_bench(const BenchOptions& o) {
  using Clock = std::chrono::steady_clock;
  std::vector<BenchRow> rows;
  for (auto variant : o.variants) {
    for (auto cipher : o.ciphers) {
      for (auto mac : o.macs) {
        for (auto size : o.sizes) {
          Bytes payload(size - kIpv4HeaderLen, 0xab);
          store_be16(payload, 0, 4000);
          store_be16(payload, 2, 5060);
          store_be16(payload, 4, static_cast<std::uint16_t>(payload.size()));
          Ipv4Header h;
          h.protocol = kProtoUdp;
          h.src_addr = kHostA;
          h.dst_addr = kHostB;
          Bytes datagram = encode_ipv4(h, payload);

          double best = std::numeric_limits<double>::infinity();
          for (std::size_t t = 0; t < o.trials; ++t) {
            SecurityAssociation sa(bench_sa(0x200, variant, Mode::Transport, cipher, mac));
            volatile std::size_t sink = 0;
            auto begin = Clock::now();
            for (std::size_t i = 0; i < o.iters; ++i) sink = sink + outbound(sa, datagram).size();
            auto elapsed = std::chrono::duration<double, std::nano>(Clock::now() - begin).count();
            best = std::min(best, elapsed / static_cast<double>(o.iters));
          }
          rows.push_back({variant, cipher, mac, size, best,
                          static_cast<double>(size) * 8.0 / best * 1000.0});
        }
      }
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "variant,cipher,mac,size,ns_per_packet,mbps\n";
  for (const auto& r : rows) {
    out << to_string(r.variant) << ',' << to_string(r.cipher) << ',' << to_string(r.mac) << ','
        << r.size << ',' << fixed(r.ns_per_packet, 1) << ',' << fixed(r.mbps, 2) << '\n';
  }
}

}  // namespace qesp::experiments
