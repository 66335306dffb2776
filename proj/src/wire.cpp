#include "qesp/wire.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <string>

#include "qesp/error.hpp"

namespace qesp {

std::uint16_t internet_checksum(ByteView data) {
  std::uint32_t sum = 0;
  std::size_t i = 0;
  for (; i + 1 < data.size(); i += 2) sum += load_be16(data, i);
  if (i < data.size()) sum += std::uint32_t{data[i]} << 8;
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum);
}

// ---------------------------------------------------------------------------
// Q-ESP header
//
//    0                   1                   2                   3
//    0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1
//   +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//   |               Security Parameters Index (SPI)                 |
//   +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//   |                      Sequence Number                          |
//   +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//   |          Source Port          |       Destination Port        |
//   +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//   |   Protocol    |     Flags     |           Reserved            |
//   +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+

namespace {

void validate_qesp_header(const QespHeader& h) {
  if (h.spi == 0) fail(Errc::InvalidHeader, "Q-ESP SPI 0 is reserved");
  if (h.reserved != 0) fail(Errc::InvalidHeader, "Q-ESP reserved field must be zero");
  if ((h.flags & ~kQespFlagExtendedAuth) != 0)
    fail(Errc::InvalidHeader, "Q-ESP undefined flag bits set");
}

void require(ByteView b, std::size_t n, const char* what) {
  if (b.size() < n) {
    fail(Errc::Truncated, std::string(what) + ": need " + std::to_string(n) + " bytes, have " +
                              std::to_string(b.size()));
  }
}

}  // namespace

std::array<std::uint8_t, kQespHeaderLen> encode_qesp_header(const QespHeader& h) {
  validate_qesp_header(h);
  std::array<std::uint8_t, kQespHeaderLen> out{};
  store_be32(out, 0, h.spi);
  store_be32(out, 4, h.seq);
  store_be16(out, 8, h.src_port);
  store_be16(out, 10, h.dst_port);
  out[12] = h.inner_protocol;
  out[13] = h.flags;
  store_be16(out, 14, h.reserved);
  return out;
}

QespHeader parse_qesp_header(ByteView b) {
  require(b, kQespHeaderLen, "Q-ESP header");
  QespHeader h;
  h.spi = load_be32(b, 0);
  h.seq = load_be32(b, 4);
  h.src_port = load_be16(b, 8);
  h.dst_port = load_be16(b, 10);
  h.inner_protocol = b[12];
  h.flags = b[13];
  h.reserved = load_be16(b, 14);
  validate_qesp_header(h);
  return h;
}

Bytes encode_qesp(const QespPacket& p) {
  Bytes out;
  out.reserve(kQespHeaderLen + p.iv.size() + p.ciphertext.size() + p.icv.size());
  append(out, encode_qesp_header(p.header));
  append(out, p.iv);
  append(out, p.ciphertext);
  append(out, p.icv);
  return out;
}

QespPacket parse_qesp(ByteView b, std::size_t iv_len, std::size_t icv_len) {
  require(b, kQespHeaderLen + iv_len + icv_len + 1, "Q-ESP packet");
  QespPacket p;
  p.header = parse_qesp_header(b);
  auto rest = b.subspan(kQespHeaderLen);
  p.iv.assign(rest.begin(), rest.begin() + iv_len);
  p.ciphertext.assign(rest.begin() + iv_len, rest.end() - icv_len);
  p.icv.assign(rest.end() - icv_len, rest.end());
  return p;
}

Bytes encode_esp(const EspPacket& p) {
  Bytes out(kEspHeaderLen);
  out.reserve(kEspHeaderLen + p.iv.size() + p.ciphertext.size() + p.icv.size());
  store_be32(out, 0, p.spi);
  store_be32(out, 4, p.seq);
  append(out, p.iv);
  append(out, p.ciphertext);
  append(out, p.icv);
  return out;
}

EspPacket parse_esp(ByteView b, std::size_t iv_len, std::size_t icv_len,
                    std::size_t min_cipher_len) {
  require(b, kEspHeaderLen + iv_len + icv_len + min_cipher_len, "ESP packet");
  EspPacket p;
  p.spi = load_be32(b, 0);
  p.seq = load_be32(b, 4);
  auto rest = b.subspan(kEspHeaderLen);
  p.iv.assign(rest.begin(), rest.begin() + iv_len);
  p.ciphertext.assign(rest.begin() + iv_len, rest.end() - icv_len);
  p.icv.assign(rest.end() - icv_len, rest.end());
  return p;
}

// ---------------------------------------------------------------------------
// IPv4

std::array<std::uint8_t, kIpv4HeaderLen> encode_ipv4_header_raw(const Ipv4Header& h) {
  std::array<std::uint8_t, kIpv4HeaderLen> out{};
  out[0] = 0x45;
  out[1] = h.tos;
  store_be16(out, 2, h.total_length);
  store_be16(out, 4, h.identification);
  store_be16(out, 6, h.flags_frag);
  out[8] = h.ttl;
  out[9] = h.protocol;
  store_be16(out, 10, h.checksum);
  store_be32(out, 12, h.src_addr);
  store_be32(out, 16, h.dst_addr);
  return out;
}

Bytes encode_ipv4(const Ipv4Header& h, ByteView payload) {
  if (payload.size() > kMaxDatagram - kIpv4HeaderLen)
    fail(Errc::OversizePacket, "IPv4 payload exceeds 65515 bytes");
  Ipv4Header hdr = h;
  hdr.total_length = static_cast<std::uint16_t>(kIpv4HeaderLen + payload.size());
  hdr.checksum = 0;
  auto raw = encode_ipv4_header_raw(hdr);
  store_be16(raw, 10, internet_checksum(raw));

  Bytes out(hdr.total_length);
  std::copy(raw.begin(), raw.end(), out.begin());
  std::copy(payload.begin(), payload.end(), out.begin() + kIpv4HeaderLen);
  return out;
}

Ipv4Datagram parse_ipv4(ByteView b) {
  require(b, kIpv4HeaderLen, "IPv4 header");
  if ((b[0] >> 4) != 4) fail(Errc::MalformedPacket, "IP version is not 4");
  if ((b[0] & 0x0f) != 5) {
    if ((b[0] & 0x0f) < 5) fail(Errc::MalformedPacket, "IPv4 ihl below 5");
    fail(Errc::UnsupportedOptions, "IPv4 options are not supported");
  }
  if (internet_checksum(b.first(kIpv4HeaderLen)) != 0)
    fail(Errc::BadChecksum, "IPv4 header checksum mismatch");

  Ipv4Datagram d;
  auto& h = d.header;
  h.tos = b[1];
  h.total_length = load_be16(b, 2);
  h.identification = load_be16(b, 4);
  h.flags_frag = load_be16(b, 6);
  h.ttl = b[8];
  h.protocol = b[9];
  h.checksum = load_be16(b, 10);
  h.src_addr = load_be32(b, 12);
  h.dst_addr = load_be32(b, 16);

  if (h.total_length < kIpv4HeaderLen)
    fail(Errc::MalformedPacket, "IPv4 total_length below header size");
  require(b, h.total_length, "IPv4 datagram");
  if (b.size() != h.total_length)
    fail(Errc::MalformedPacket, "trailing bytes beyond IPv4 total_length");
  d.payload = b.subspan(kIpv4HeaderLen, h.total_length - kIpv4HeaderLen);
  return d;
}

std::optional<std::pair<std::uint16_t, std::uint16_t>> transport_ports(std::uint8_t protocol,
                                                                       ByteView segment) {
  if ((protocol != kProtoTcp && protocol != kProtoUdp) || segment.size() < 4) return std::nullopt;
  return std::pair{load_be16(segment, 0), load_be16(segment, 2)};
}

FiveTuple five_tuple_of(ByteView datagram) {
  auto d = parse_ipv4(datagram);
  FiveTuple t{d.header.src_addr, d.header.dst_addr, d.header.protocol, 0, 0};
  if (auto ports = transport_ports(d.header.protocol, d.payload)) {
    t.src_port = ports->first;
    t.dst_port = ports->second;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Packet dump files

std::vector<Bytes> decode_packet_dump(ByteView data) {
  std::vector<Bytes> packets;
  std::size_t off = 0;
  while (off < data.size()) {
    require(data.subspan(off), 4, "packet dump record length");
    std::uint32_t len = load_be32(data, off);
    off += 4;
    require(data.subspan(off), len, "packet dump record");
    packets.emplace_back(data.begin() + off, data.begin() + off + len);
    off += len;
  }
  return packets;
}

Bytes encode_packet_dump(const std::vector<Bytes>& packets) {
  Bytes out;
  for (const auto& p : packets) {
    std::array<std::uint8_t, 4> len{};
    store_be32(len, 0, static_cast<std::uint32_t>(p.size()));
    append(out, len);
    append(out, p);
  }
  return out;
}

std::vector<Bytes> read_packet_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::ConfigError, "cannot open packet dump " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_packet_dump(data);
}

void write_packet_dump(const std::filesystem::path& path, const std::vector<Bytes>& packets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::ConfigError, "cannot write packet dump " + path.string());
  auto data = encode_packet_dump(packets);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

// ---------------------------------------------------------------------------

std::optional<Ipv4Address> parse_ipv4_address(std::string_view text) {
  Ipv4Address addr = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int i = 0; i < 4; ++i) {
    unsigned octet = 0;
    auto [next, ec] = std::from_chars(p, end, octet);
    if (ec != std::errc{} || next == p || octet > 255 || next - p > 3) return std::nullopt;
    addr = (addr << 8) | octet;
    p = next;
    if (i < 3) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  return addr;
}

std::string format_ipv4_address(Ipv4Address addr) {
  return std::to_string(addr >> 24) + "." + std::to_string((addr >> 16) & 0xff) + "." +
         std::to_string((addr >> 8) & 0xff) + "." + std::to_string(addr & 0xff);
}

}  // namespace qesp
