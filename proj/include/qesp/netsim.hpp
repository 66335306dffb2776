#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qesp/bytes.hpp"
#include "qesp/classifier.hpp"
#include "qesp/sadb.hpp"
#include "qesp/wire.hpp"

namespace qesp::netsim {

enum class Arrival {
  Cbr,      // start + k / rate
  Poisson,  // exponential gaps, seeded per flow
  Trace,    // explicit emit times (tests, hand-built scenarios)
};

struct TrafficSource {
  std::uint32_t flow_id = 0;
  FiveTuple five_tuple;
  double rate = 0;               // packets per second
  std::size_t packet_size = 0;   // original IPv4 datagram bytes
  double start = 0;
  double stop = 0;
  Arrival arrival = Arrival::Cbr;
  std::vector<double> times;     // Arrival::Trace only
  std::optional<std::uint32_t> sa_spi;  // protection; nullopt sends plaintext
};

// Smallest datagram a source of `protocol` can emit (IP + transport header).
std::size_t min_packet_size(std::uint8_t protocol);

struct LinkConfig {
  double capacity_bps = 0;
  std::size_t queue_limit = 64;  // packets, per class
  std::size_t num_classes = 2;
  std::map<std::uint8_t, std::size_t> class_map;  // dscp -> class; unmapped -> 0
};

struct SimConfig {
  std::vector<SaConfig> sas;
  RuleTable rules;
  bool classify = true;  // run the edge classifier at link ingress
  std::vector<TrafficSource> sources;
  LinkConfig link;
  double duration = 0;
  std::uint64_t seed = 0;
  bool record_trace = false;
};

// Throws ConfigError naming the offending field.
void validate(const SimConfig& config);

struct FlowStats {
  std::uint32_t flow_id = 0;
  std::uint64_t offered_packets = 0;
  std::uint64_t offered_bytes = 0;
  std::uint64_t delivered_packets = 0;
  std::uint64_t delivered_bytes = 0;  // original datagram bytes (goodput)
  std::uint64_t wire_bytes = 0;       // encapsulated bytes of delivered packets
  std::uint64_t dropped_packets = 0;  // queue drops + pipeline errors
  std::uint64_t error_drops = 0;
  std::map<std::string, std::uint64_t> errors;  // error tag -> count
  double mean_latency = 0;            // seconds
  double throughput_kbps = 0;         // delivered_bytes * 8 / duration / 1000
  double wire_kbps = 0;

  friend bool operator==(const FlowStats&, const FlowStats&) = default;
};

enum class TraceKind { Emit, Enqueue, Drop, ServiceStart, Deliver, Error };

struct TraceEvent {
  double time = 0;
  std::uint32_t flow_id = 0;
  std::uint64_t packet = 0;  // per-flow emission index, from 0
  TraceKind kind = TraceKind::Emit;
  std::size_t link_class = 0;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct SimResult {
  std::vector<FlowStats> flows;  // in source order
  std::vector<TraceEvent> trace;
};

struct QueuedPacket {
  std::size_t source = 0;
  std::uint64_t packet = 0;
  double emit_time = 0;
  Bytes wire;
  std::uint8_t dscp = 0;
};

// Non-preemptive strict-priority link: higher class index is served first,
// FIFO within a class, tail drop at queue_limit.
class PriorityLink {
 public:
  explicit PriorityLink(LinkConfig config);

  std::size_t class_of(std::uint8_t dscp) const;
  double service_time(std::size_t wire_bytes) const;

  // False (packet dropped) when the class queue is full.
  bool enqueue(QueuedPacket packet);

  // Highest non-empty class first; nullopt if every queue is empty.
  std::optional<QueuedPacket> dequeue();

  bool busy() const { return busy_; }
  void set_busy(bool b) { busy_ = b; }
  std::size_t depth(std::size_t link_class) const { return queues_.at(link_class).size(); }

 private:
  LinkConfig config_;
  std::vector<std::deque<QueuedPacket>> queues_;
  bool busy_ = false;
};

SimResult run_simulation(const SimConfig& config);

}  // namespace qesp::netsim
