#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qesp/bytes.hpp"
#include "qesp/sadb.hpp"
#include "qesp/wire.hpp"

namespace qesp {

inline constexpr std::uint8_t kDscpBestEffort = 0;
inline constexpr std::uint8_t kDscpExpedited = 46;

// What an edge router can read from a datagram without any keys.
struct ExtractedFields {
  Ipv4Address src_addr = 0;
  Ipv4Address dst_addr = 0;
  std::uint8_t protocol = 0;  // inner protocol for Q-ESP, 50 for ESP
  std::optional<std::uint16_t> src_port;
  std::optional<std::uint16_t> dst_port;

  friend bool operator==(const ExtractedFields&, const ExtractedFields&) = default;
};

struct ClassifierRule {
  Selector selector;
  std::uint8_t dscp = 0;
};

// Ordered, first-match rule list.
class RuleTable {
 public:
  RuleTable() = default;
  // Throws ConfigError if any DSCP exceeds 63.
  explicit RuleTable(std::vector<ClassifierRule> rules, std::uint8_t default_dscp = kDscpBestEffort);

  const std::vector<ClassifierRule>& rules() const { return rules_; }
  std::uint8_t default_dscp() const { return default_dscp_; }

  std::uint8_t lookup(const ExtractedFields& f) const;

 private:
  std::vector<ClassifierRule> rules_;
  std::uint8_t default_dscp_ = kDscpBestEffort;
};

// Throws MalformedPacket for anything that is not a well-formed datagram.
ExtractedFields extract_fields(ByteView wire_packet);

// Classifies and remarks: the chosen DSCP is written into the packet's ToS
// byte (ECN bits kept) and the header checksum refreshed.
std::uint8_t classify_and_remark(const RuleTable& table, std::span<std::uint8_t> wire_packet);

// Classification without remarking.
std::uint8_t classify(const RuleTable& table, ByteView wire_packet);

}  // namespace qesp
