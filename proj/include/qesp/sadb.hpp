#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qesp/crypto.hpp"
#include "qesp/wire.hpp"

namespace qesp {

enum class Variant { Qesp, Esp };
enum class Mode { Transport, Tunnel };

std::string_view to_string(Variant v);
std::string_view to_string(Mode m);

struct Ipv4Prefix {
  Ipv4Address addr = 0;
  std::uint8_t length = 0;  // 0 matches everything

  bool contains(Ipv4Address a) const;
  static Ipv4Prefix any() { return {}; }
  // "a.b.c.d/len", "a.b.c.d" (/32) or "any".
  static std::optional<Ipv4Prefix> parse(std::string_view text);

  friend bool operator==(const Ipv4Prefix&, const Ipv4Prefix&) = default;
};

struct PortRange {
  std::uint16_t lo = 0;
  std::uint16_t hi = 0xffff;

  bool contains(std::uint16_t p) const { return lo <= p && p <= hi; }
  bool is_any() const { return lo == 0 && hi == 0xffff; }

  friend bool operator==(const PortRange&, const PortRange&) = default;
};

// Five-tuple pattern. An absent protocol or port range matches anything.
struct Selector {
  Ipv4Prefix src_net;
  Ipv4Prefix dst_net;
  std::optional<std::uint8_t> protocol;
  std::optional<PortRange> src_ports;
  std::optional<PortRange> dst_ports;

  bool constrains_ports() const { return src_ports.has_value() || dst_ports.has_value(); }

  // A port constraint never matches when the ports are unavailable.
  bool matches(Ipv4Address src, Ipv4Address dst, std::uint8_t proto,
               std::optional<std::uint16_t> src_port, std::optional<std::uint16_t> dst_port) const;
  bool matches(const FiveTuple& t) const {
    return matches(t.src_addr, t.dst_addr, t.protocol, t.src_port, t.dst_port);
  }
};

// 64-wide sliding anti-replay window.
class ReplayWindow {
 public:
  static constexpr std::uint32_t kWidth = 64;

  // Accepts and records `seq`, or rejects it as replayed / too old.
  // Sequence number 0 is never valid.
  bool check_and_update(std::uint32_t seq);

  std::uint32_t highest() const { return highest_; }
  std::uint64_t bitmap() const { return bitmap_; }

 private:
  std::uint32_t highest_ = 0;
  std::uint64_t bitmap_ = 0;  // bit i set <=> highest_ - i has been seen
};

struct SaConfig {
  std::uint32_t spi = 0;
  Variant variant = Variant::Qesp;
  Mode mode = Mode::Transport;
  CipherAlg cipher = CipherAlg::Null;
  Bytes cipher_key;
  MacAlg mac = MacAlg::Null;
  Bytes mac_key;
  bool extended_auth = false;
  Selector selector;
  Ipv4Address tunnel_src = 0;
  Ipv4Address tunnel_dst = 0;
  std::uint64_t iv_seed = 0;
};

// One direction of one tunnel. Mutable sequence / replay / IV state is
// guarded by an internal mutex so a shared SA can be used from several
// threads; distinct SAs never contend.
class SecurityAssociation {
 public:
  // Validates the configuration: nonzero SPI, key lengths, ESP SAs never
  // carry extended_auth.
  explicit SecurityAssociation(SaConfig config);

  const SaConfig& config() const { return config_; }
  std::uint32_t spi() const { return config_.spi; }

  // Returns the current sequence number and advances; the first call yields
  // 1. Throws SequenceExhausted once 0xFFFFFFFF would have to be reissued.
  std::uint32_t next_seq();
  std::uint32_t peek_next_seq() const;

  bool replay_check_and_update(std::uint32_t seq);
  ReplayWindow replay_window() const;

  Bytes next_iv();

  // Test hook: jump the send counter (e.g. to exercise exhaustion).
  void set_next_seq(std::uint64_t next);

 private:
  SaConfig config_;
  mutable std::mutex mutex_;
  std::uint64_t seq_next_ = 1;
  ReplayWindow replay_;
  IvGenerator iv_gen_;
};

// SPI-indexed store plus an ordered selector list for outbound lookup.
class Sadb {
 public:
  SecurityAssociation& add_sa(SaConfig config);

  SecurityAssociation* lookup_by_spi(std::uint32_t spi);
  const SecurityAssociation* lookup_by_spi(std::uint32_t spi) const;

  // First SA, in insertion order, whose selector matches.
  SecurityAssociation* lookup_outbound(const FiveTuple& t);

  std::size_t size() const { return ordered_.size(); }

 private:
  std::vector<std::unique_ptr<SecurityAssociation>> ordered_;
  std::unordered_map<std::uint32_t, SecurityAssociation*> by_spi_;
};

}  // namespace qesp
