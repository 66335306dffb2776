#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "qesp/bytes.hpp"

namespace qesp {

inline constexpr std::uint8_t kProtoIpInIp = 4;
inline constexpr std::uint8_t kProtoTcp = 6;
inline constexpr std::uint8_t kProtoUdp = 17;
inline constexpr std::uint8_t kProtoEsp = 50;
// RFC 3692 experimentation range.
inline constexpr std::uint8_t kProtoQesp = 253;

inline constexpr std::size_t kIpv4HeaderLen = 20;
inline constexpr std::size_t kQespHeaderLen = 16;
inline constexpr std::size_t kEspHeaderLen = 8;
inline constexpr std::size_t kMaxDatagram = 65535;

// Offsets into a Q-ESP IPv4 datagram where the clear five-tuple copies sit.
inline constexpr std::size_t kQespSrcPortOffset = kIpv4HeaderLen + 8;
inline constexpr std::size_t kQespDstPortOffset = kIpv4HeaderLen + 10;
inline constexpr std::size_t kQespProtocolOffset = kIpv4HeaderLen + 12;

inline constexpr std::uint8_t kQespFlagExtendedAuth = 0x01;

using Ipv4Address = std::uint32_t;

struct FiveTuple {
  Ipv4Address src_addr = 0;
  Ipv4Address dst_addr = 0;
  std::uint8_t protocol = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;

  friend bool operator==(const FiveTuple&, const FiveTuple&) = default;
};

// IPv4 header without options (ihl is always 5).
struct Ipv4Header {
  std::uint8_t tos = 0;  // DSCP in the high six bits, ECN in the low two
  std::uint16_t total_length = 0;
  std::uint16_t identification = 0;
  std::uint16_t flags_frag = 0;
  std::uint8_t ttl = 64;
  std::uint8_t protocol = 0;
  std::uint16_t checksum = 0;
  Ipv4Address src_addr = 0;
  Ipv4Address dst_addr = 0;

  std::uint8_t dscp() const { return tos >> 2; }
  void set_dscp(std::uint8_t dscp) {
    tos = static_cast<std::uint8_t>((dscp << 2) | (tos & 0x03));
  }

  friend bool operator==(const Ipv4Header&, const Ipv4Header&) = default;
};

struct QespHeader {
  std::uint32_t spi = 0;
  std::uint32_t seq = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t inner_protocol = 0;
  std::uint8_t flags = 0;
  std::uint16_t reserved = 0;

  bool extended_auth() const { return (flags & kQespFlagExtendedAuth) != 0; }

  friend bool operator==(const QespHeader&, const QespHeader&) = default;
};

// Classic ESP body (everything after the IP header). The trailer lives inside
// the ciphertext.
struct EspPacket {
  std::uint32_t spi = 0;
  std::uint32_t seq = 0;
  Bytes iv;
  Bytes ciphertext;
  Bytes icv;

  friend bool operator==(const EspPacket&, const EspPacket&) = default;
};

// Q-ESP body: clear header, then the same IV / ciphertext / ICV split as ESP.
struct QespPacket {
  QespHeader header;
  Bytes iv;
  Bytes ciphertext;
  Bytes icv;

  friend bool operator==(const QespPacket&, const QespPacket&) = default;
};

// Ones-complement sum over `data`, folded and inverted.
std::uint16_t internet_checksum(ByteView data);

std::array<std::uint8_t, kQespHeaderLen> encode_qesp_header(const QespHeader& h);
QespHeader parse_qesp_header(ByteView b);

Bytes encode_qesp(const QespPacket& p);
QespPacket parse_qesp(ByteView b, std::size_t iv_len, std::size_t icv_len);

Bytes encode_esp(const EspPacket& p);
// `min_cipher_len` is the cipher block the SA uses (at least one block of
// ciphertext must be present).
EspPacket parse_esp(ByteView b, std::size_t iv_len, std::size_t icv_len,
                    std::size_t min_cipher_len = 1);

// Serializes `h` followed by `payload`. total_length and checksum are
// recomputed; the values stored in `h` for those fields are ignored.
Bytes encode_ipv4(const Ipv4Header& h, ByteView payload);

// Header serialization alone, checksum taken verbatim from `h`.
std::array<std::uint8_t, kIpv4HeaderLen> encode_ipv4_header_raw(const Ipv4Header& h);

struct Ipv4Datagram {
  Ipv4Header header;
  ByteView payload;  // view into the parsed buffer
};

// Validates version, ihl, total_length and checksum. Trailing bytes beyond
// total_length are rejected as Truncated/MalformedPacket, not ignored.
Ipv4Datagram parse_ipv4(ByteView b);

// Source/destination ports of a TCP or UDP segment. nullopt for any other
// protocol or a segment too short to carry them.
std::optional<std::pair<std::uint16_t, std::uint16_t>> transport_ports(
    std::uint8_t protocol, ByteView segment);

// Five-tuple of a plain (unencapsulated) datagram; ports are 0 when the
// transport protocol carries none.
FiveTuple five_tuple_of(ByteView datagram);

// Packet dump files: records of `u32 big-endian length` + raw datagram.
std::vector<Bytes> read_packet_dump(const std::filesystem::path& path);
void write_packet_dump(const std::filesystem::path& path, const std::vector<Bytes>& packets);
std::vector<Bytes> decode_packet_dump(ByteView data);
Bytes encode_packet_dump(const std::vector<Bytes>& packets);

// Dotted-quad helpers.
std::optional<Ipv4Address> parse_ipv4_address(std::string_view text);
std::string format_ipv4_address(Ipv4Address addr);

}  // namespace qesp
