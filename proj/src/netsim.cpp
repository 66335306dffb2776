#include "qesp/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <set>

#include "qesp/engine.hpp"
#include "qesp/error.hpp"

namespace qesp::netsim {

std::size_t min_packet_size(std::uint8_t protocol) {
  switch (protocol) {
    case kProtoUdp: return kIpv4HeaderLen + 8;
    case kProtoTcp: return kIpv4HeaderLen + 20;
    default: return kIpv4HeaderLen;
  }
}

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& why) {
  fail(Errc::ConfigError, field + ": " + why);
}

}  // namespace

void validate(const SimConfig& config) {
  if (!(config.duration > 0)) config_error("duration", "must be positive");
  const auto& link = config.link;
  if (!(link.capacity_bps > 0)) config_error("link.capacity", "must be positive");
  if (link.queue_limit == 0) config_error("link.queue_limit", "must be at least 1");
  if (link.num_classes < 1 || link.num_classes > 8) config_error("link.classes", "must be in 1..8");
  for (auto [dscp, cls] : link.class_map) {
    if (dscp > 63) config_error("link.class_map", "dscp " + std::to_string(dscp) + " exceeds 63");
    if (cls >= link.num_classes)
      config_error("link.class_map", "class " + std::to_string(cls) + " out of range");
  }

  std::set<std::uint32_t> spis;
  for (const auto& sa : config.sas) spis.insert(sa.spi);
  std::set<std::uint32_t> flows;
  for (std::size_t i = 0; i < config.sources.size(); ++i) {
    const auto& s = config.sources[i];
    std::string at = "sources[" + std::to_string(i) + "]";
    if (!flows.insert(s.flow_id).second) config_error(at + ".flow_id", "duplicate flow id");
    if (s.arrival != Arrival::Trace && !(s.rate > 0)) config_error(at + ".rate", "must be positive");
    if (s.packet_size < min_packet_size(s.five_tuple.protocol) || s.packet_size > 65000)
      config_error(at + ".packet_size", "must be in [" +
                                            std::to_string(min_packet_size(s.five_tuple.protocol)) +
                                            ", 65000]");
    if (s.stop < s.start) config_error(at + ".stop", "must not precede start");
    if (s.sa_spi && !spis.contains(*s.sa_spi))
      config_error(at + ".sa", "references unknown SPI " + std::to_string(*s.sa_spi));
  }
}

// ---------------------------------------------------------------------------

PriorityLink::PriorityLink(LinkConfig config)
    : config_(std::move(config)), queues_(config_.num_classes) {}

std::size_t PriorityLink::class_of(std::uint8_t dscp) const {
  auto it = config_.class_map.find(dscp);
  return it == config_.class_map.end() ? 0 : it->second;
}

double PriorityLink::service_time(std::size_t wire_bytes) const {
  return static_cast<double>(wire_bytes) * 8.0 / config_.capacity_bps;
}

bool PriorityLink::enqueue(QueuedPacket packet) {
  auto& q = queues_.at(class_of(packet.dscp));
  if (q.size() >= config_.queue_limit) return false;
  q.push_back(std::move(packet));
  return true;
}

std::optional<QueuedPacket> PriorityLink::dequeue() {
  for (auto it = queues_.rbegin(); it != queues_.rend(); ++it) {
    if (!it->empty()) {
      QueuedPacket p = std::move(it->front());
      it->pop_front();
      return p;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

enum class EventType { Emit, ServiceDone };

struct Event {
  double time;
  std::uint64_t id;
  EventType type;
  std::size_t source;  // Emit only

  bool operator>(const Event& o) const { return time != o.time ? time > o.time : id > o.id; }
};

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementations.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

class SourceClock {
 public:
  SourceClock(const TrafficSource& src, double horizon, std::uint64_t seed, std::size_t index)
      : src_(src), end_(std::min(src.stop, horizon)) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), 0x51e5u};
    rng_.seed(seq);
  }

  // Emission time of packet k (called with k = 0, 1, 2, ...).
  std::optional<double> time_of(std::uint64_t k) {
    double t = 0;
    switch (src_.arrival) {
      case Arrival::Cbr:
        t = src_.start + static_cast<double>(k) / src_.rate;
        break;
      case Arrival::Poisson:
        last_ = (k == 0 ? src_.start : last_) - std::log1p(-unit_uniform(rng_)) / src_.rate;
        t = last_;
        break;
      case Arrival::Trace:
        if (k >= src_.times.size()) return std::nullopt;
        t = src_.times[k];
        break;
    }
    if (t >= end_ || t < src_.start) return std::nullopt;
    return t;
  }

 private:
  const TrafficSource& src_;
  double end_;
  std::mt19937_64 rng_;
  double last_ = 0;
};

Bytes build_datagram(const TrafficSource& src, std::uint64_t index) {
  const auto& t = src.five_tuple;
  std::size_t payload_len = src.packet_size - kIpv4HeaderLen;
  Bytes payload(payload_len);
  for (std::size_t i = 0; i < payload_len; ++i)
    payload[i] = static_cast<std::uint8_t>((i + index + src.flow_id) & 0xff);

  if (t.protocol == kProtoUdp) {
    store_be16(payload, 0, t.src_port);
    store_be16(payload, 2, t.dst_port);
    store_be16(payload, 4, static_cast<std::uint16_t>(payload_len));
    store_be16(payload, 6, 0);
  } else if (t.protocol == kProtoTcp) {
    store_be16(payload, 0, t.src_port);
    store_be16(payload, 2, t.dst_port);
    store_be32(payload, 4, static_cast<std::uint32_t>(index));
    store_be32(payload, 8, 0);
    payload[12] = 0x50;
    payload[13] = 0x18;  // PSH|ACK
    store_be16(payload, 14, 0xffff);
    store_be16(payload, 16, 0);
    store_be16(payload, 18, 0);
  }

  Ipv4Header h;
  h.identification = static_cast<std::uint16_t>(index);
  h.protocol = t.protocol;
  h.src_addr = t.src_addr;
  h.dst_addr = t.dst_addr;
  return encode_ipv4(h, payload);
}

struct FlowAccumulator {
  FlowStats stats;
  double latency_sum = 0;
};

}  // namespace

SimResult run_simulation(const SimConfig& config) {
  validate(config);

  Sadb sender;
  Sadb receiver;
  for (const auto& sa : config.sas) {
    sender.add_sa(sa);
    receiver.add_sa(sa);
  }

  const auto& sources = config.sources;
  std::vector<SourceClock> clocks;
  clocks.reserve(sources.size());
  std::vector<FlowAccumulator> acc(sources.size());
  std::vector<std::uint64_t> emitted(sources.size(), 0);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    clocks.emplace_back(sources[i], config.duration, config.seed, i);
    acc[i].stats.flow_id = sources[i].flow_id;
  }

  SimResult result;
  auto trace = [&](double time, std::size_t src, std::uint64_t pkt, TraceKind kind,
                   std::size_t cls = 0) {
    if (config.record_trace)
      result.trace.push_back({time, sources[src].flow_id, pkt, kind, cls});
  };

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::uint64_t next_id = 0;
  for (std::size_t i = 0; i < sources.size(); ++i)
    if (auto t = clocks[i].time_of(0)) events.push({*t, next_id++, EventType::Emit, i});

  PriorityLink link(config.link);
  std::optional<QueuedPacket> in_service;

  auto record_error = [&](std::size_t src, std::uint64_t pkt, double now, const Error& e) {
    auto& s = acc[src].stats;
    ++s.dropped_packets;
    ++s.error_drops;
    ++s.errors[std::string(to_string(e.code()))];
    trace(now, src, pkt, TraceKind::Error);
  };

  auto start_service = [&](double now) {
    in_service = link.dequeue();
    if (!in_service) {
      link.set_busy(false);
      return;
    }
    link.set_busy(true);
    trace(now, in_service->source, in_service->packet, TraceKind::ServiceStart,
          link.class_of(in_service->dscp));
    events.push({now + link.service_time(in_service->wire.size()), next_id++,
                 EventType::ServiceDone, 0});
  };

  while (!events.empty()) {
    Event ev = events.top();
    events.pop();
    double now = ev.time;

    if (ev.type == EventType::Emit) {
      std::size_t i = ev.source;
      const auto& src = sources[i];
      std::uint64_t k = emitted[i]++;
      if (auto t = clocks[i].time_of(k + 1)) events.push({*t, next_id++, EventType::Emit, i});

      auto& s = acc[i].stats;
      ++s.offered_packets;
      s.offered_bytes += src.packet_size;
      trace(now, i, k, TraceKind::Emit);

      QueuedPacket pkt{i, k, now, build_datagram(src, k), 0};
      try {
        if (src.sa_spi) pkt.wire = outbound(*sender.lookup_by_spi(*src.sa_spi), pkt.wire);
        pkt.dscp = config.classify ? classify_and_remark(config.rules, pkt.wire)
                                   : static_cast<std::uint8_t>(pkt.wire[1] >> 2);
      } catch (const Error& e) {
        record_error(i, k, now, e);
        continue;
      }

      std::size_t cls = link.class_of(pkt.dscp);
      if (!link.enqueue(std::move(pkt))) {
        ++s.dropped_packets;
        trace(now, i, k, TraceKind::Drop, cls);
        continue;
      }
      trace(now, i, k, TraceKind::Enqueue, cls);
      if (!link.busy()) start_service(now);
    } else {
      QueuedPacket done = std::move(*in_service);
      in_service.reset();
      std::size_t i = done.source;
      const auto& src = sources[i];
      auto& s = acc[i].stats;
      try {
        if (src.sa_spi) inbound(receiver, done.wire);
        ++s.delivered_packets;
        s.delivered_bytes += src.packet_size;
        s.wire_bytes += done.wire.size();
        acc[i].latency_sum += now - done.emit_time;
        trace(now, i, done.packet, TraceKind::Deliver, link.class_of(done.dscp));
      } catch (const Error& e) {
        record_error(i, done.packet, now, e);
      }
      start_service(now);
    }
  }

  for (auto& a : acc) {
    auto& s = a.stats;
    if (s.delivered_packets > 0) s.mean_latency = a.latency_sum / static_cast<double>(s.delivered_packets);
    s.throughput_kbps = static_cast<double>(s.delivered_bytes) * 8.0 / config.duration / 1000.0;
    s.wire_kbps = static_cast<double>(s.wire_bytes) * 8.0 / config.duration / 1000.0;
    result.flows.push_back(std::move(s));
  }
  return result;
}

}  // namespace qesp::netsim
