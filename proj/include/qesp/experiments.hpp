#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "qesp/config.hpp"
#include "qesp/crypto.hpp"
#include "qesp/netsim.hpp"
#include "qesp/sadb.hpp"

namespace qesp::experiments {

// Throughput sweep: one flow per (size, variant) at a fixed packet rate on an
// uncongested link.

struct ThroughputOptions {
  std::vector<std::size_t> sizes{64, 128, 256, 512, 1024, 2048, 4096};
  double pps = 100;
  std::vector<Variant> variants{Variant::Esp, Variant::Qesp};
  CipherAlg cipher = CipherAlg::Aes128Cbc;
  MacAlg mac = MacAlg::HmacSha1_96;
  Mode mode = Mode::Transport;
  double duration = 10;
  std::uint64_t seed = 1;
};

struct ThroughputRow {
  std::size_t size = 0;
  Variant variant = Variant::Qesp;
  double goodput_kbps = 0;
  double wire_kbps = 0;
  std::size_t overhead_bytes = 0;
};

std::vector<ThroughputRow> run_throughput(const ThroughputOptions& options);
void write_throughput_csv(std::ostream& out, const std::vector<ThroughputRow>& rows);

// Priority control: the same congested scenario protected by Q-ESP and then
// by ESP.

// Copy of `sim` with every SA switched to `variant` (ESP drops extended_auth).
netsim::SimConfig with_variant(netsim::SimConfig sim, Variant variant);

struct PriorityRun {
  Variant variant = Variant::Qesp;
  netsim::SimResult result;
};

std::vector<PriorityRun> run_priority(const netsim::SimConfig& sim);

void write_flow_stats_csv_header(std::ostream& out);
void write_flow_stats_csv(std::ostream& out, const std::string& run,
                          const std::vector<netsim::FlowStats>& flows);
// "summary,run=qesp,flows=2,goodput_kbps=...,delivery=1:0.9990;2:0.6120"
std::string summary_line(const PriorityRun& run);

// Encapsulation microbenchmark.

struct BenchOptions {
  std::vector<std::size_t> sizes{64, 256, 1024, 4096};
  std::vector<CipherAlg> ciphers{std::begin(kAllCiphers), std::end(kAllCiphers)};
  std::vector<MacAlg> macs{std::begin(kAllMacs), std::end(kAllMacs)};
  std::vector<Variant> variants{Variant::Esp, Variant::Qesp};
  std::size_t iters = 2000;
  std::size_t trials = 5;  // best-of
};

struct BenchRow {
  Variant variant = Variant::Qesp;
  CipherAlg cipher = CipherAlg::Null;
  MacAlg mac = MacAlg::Null;
  std::size_t size = 0;
  double ns_per_packet = 0;
  double mbps = 0;
};

std::vector<BenchRow> run_crypto_bench(const BenchOptions& options);
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

// Deterministic test keys for an algorithm (bytes 0x01, 0x02, ...).
Bytes demo_key(std::size_t len, std::uint8_t salt = 0);

}  // namespace qesp::experiments
