#include "qesp/classifier.hpp"

#include <string>

#include "qesp/error.hpp"

namespace qesp {

RuleTable::RuleTable(std::vector<ClassifierRule> rules, std::uint8_t default_dscp)
    : rules_(std::move(rules)), default_dscp_(default_dscp) {
  if (default_dscp_ > 63) fail(Errc::ConfigError, "default_dscp must be at most 63");
  for (const auto& r : rules_)
    if (r.dscp > 63) fail(Errc::ConfigError, "rule dscp " + std::to_string(r.dscp) + " exceeds 63");
}

std::uint8_t RuleTable::lookup(const ExtractedFields& f) const {
  for (const auto& r : rules_)
    if (r.selector.matches(f.src_addr, f.dst_addr, f.protocol, f.src_port, f.dst_port)) return r.dscp;
  return default_dscp_;
}

ExtractedFields extract_fields(ByteView wire_packet) {
  Ipv4Datagram d;
  try {
    d = parse_ipv4(wire_packet);
  } catch (const Error& e) {
    fail(Errc::MalformedPacket, std::string("not a valid IPv4 datagram: ") + e.what());
  }

  ExtractedFields f;
  f.src_addr = d.header.src_addr;
  f.dst_addr = d.header.dst_addr;
  f.protocol = d.header.protocol;

  switch (d.header.protocol) {
    case kProtoTcp:
    case kProtoUdp: {
      auto ports = transport_ports(d.header.protocol, d.payload);
      if (!ports) fail(Errc::MalformedPacket, "transport header too short for ports");
      f.src_port = ports->first;
      f.dst_port = ports->second;
      break;
    }
    case kProtoQesp: {
      // Only the fixed-offset clear fields are read; no SA is consulted.
      if (d.payload.size() < kQespHeaderLen) fail(Errc::MalformedPacket, "Q-ESP header truncated");
      f.protocol = d.payload[12];
      if (f.protocol == kProtoTcp || f.protocol == kProtoUdp) {
        f.src_port = load_be16(d.payload, 8);
        f.dst_port = load_be16(d.payload, 10);
      }
      break;
    }
    default:
      break;
  }
  return f;
}

std::uint8_t classify(const RuleTable& table, ByteView wire_packet) {
  return table.lookup(extract_fields(wire_packet));
}

std::uint8_t classify_and_remark(const RuleTable& table, std::span<std::uint8_t> wire_packet) {
  std::uint8_t dscp = classify(table, ByteView(wire_packet));
  wire_packet[1] = static_cast<std::uint8_t>((dscp << 2) | (wire_packet[1] & 0x03));
  store_be16(wire_packet, 10, 0);
  store_be16(wire_packet, 10, internet_checksum(ByteView(wire_packet).first(kIpv4HeaderLen)));
  return dscp;
}

}  // namespace qesp
