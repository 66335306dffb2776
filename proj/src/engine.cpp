#include "qesp/engine.hpp"

#include <string>

#include "qesp/error.hpp"

namespace qesp {

namespace {

struct InnerInfo {
  Ipv4Datagram datagram;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
};

InnerInfo inspect_inner(ByteView ip_packet) {
  InnerInfo info{parse_ipv4(ip_packet)};
  if (auto ports = transport_ports(info.datagram.header.protocol, info.datagram.payload)) {
    info.src_port = ports->first;
    info.dst_port = ports->second;
  }
  return info;
}

// body || 1, 2, 3, ... || pad_len [|| next_header]
Bytes pad_plaintext(ByteView body, std::size_t block, std::size_t trailer_fixed,
                    std::optional<std::uint8_t> next_header) {
  std::size_t pad = compute_pad_len(body.size(), trailer_fixed, block);
  Bytes out;
  out.reserve(body.size() + pad + trailer_fixed);
  append(out, body);
  for (std::size_t i = 1; i <= pad; ++i) out.push_back(static_cast<std::uint8_t>(i));
  out.push_back(static_cast<std::uint8_t>(pad));
  if (next_header) out.push_back(*next_header);
  return out;
}

// Verifies the monotonic filler and returns the unpadded length.
std::size_t strip_padding(ByteView plaintext, std::size_t trailer_fixed) {
  if (plaintext.size() < trailer_fixed) fail(Errc::BadPadding, "plaintext shorter than trailer");
  std::size_t pad = plaintext[plaintext.size() - trailer_fixed];
  if (pad + trailer_fixed > plaintext.size()) fail(Errc::BadPadding, "pad length exceeds plaintext");
  std::size_t body_len = plaintext.size() - trailer_fixed - pad;
  for (std::size_t i = 0; i < pad; ++i) {
    if (plaintext[body_len + i] != static_cast<std::uint8_t>(i + 1))
      fail(Errc::BadPadding, "padding bytes are not the monotonic filler");
  }
  return body_len;
}

Ipv4Header zero_mutable(Ipv4Header h) {
  h.tos = 0;
  h.flags_frag = 0;
  h.ttl = 0;
  h.checksum = 0;
  return h;
}

Ipv4Header outer_header_for(const SecurityAssociation& sa, const Ipv4Header& inner,
                            std::uint8_t protocol, std::size_t total_length) {
  Ipv4Header outer;
  if (sa.config().mode == Mode::Transport) {
    outer = inner;
  } else {
    outer.tos = inner.tos;
    outer.identification = 0;
    outer.flags_frag = 0;
    outer.ttl = 64;
    outer.src_addr = sa.config().tunnel_src;
    outer.dst_addr = sa.config().tunnel_dst;
  }
  outer.protocol = protocol;
  outer.total_length = static_cast<std::uint16_t>(total_length);
  outer.checksum = 0;
  return outer;
}

struct OutboundPlan {
  InnerInfo inner;
  ByteView protected_bytes{};
  std::uint8_t wire_protocol = 0;
  std::size_t header_len = 0;
  std::size_t trailer_fixed = 0;
  std::optional<std::uint8_t> next_header{};
};

// Shared outbound path: pad, size-check, take seq + IV, encrypt, MAC.
template <typename WriteHeader>
Bytes encapsulate(SecurityAssociation& sa, const OutboundPlan& plan, bool extended,
                  WriteHeader&& write_header) {
  const auto& cfg = sa.config();
  auto ct = traits(cfg.cipher);
  auto mt = traits(cfg.mac);

  Bytes plaintext = pad_plaintext(plan.protected_bytes, effective_block(cfg.cipher),
                                  plan.trailer_fixed, plan.next_header);
  std::size_t total = kIpv4HeaderLen + plan.header_len + ct.iv_len + plaintext.size() + mt.icv_len;
  if (total > kMaxDatagram)
    fail(Errc::OversizePacket, "encapsulated datagram would be " + std::to_string(total) + " bytes");

  std::uint32_t seq = sa.next_seq();
  Bytes iv = sa.next_iv();

  Bytes body;
  body.reserve(total - kIpv4HeaderLen);
  write_header(body, seq);
  append(body, iv);
  append(body, encrypt(cfg.cipher, cfg.cipher_key, iv, plaintext));

  Ipv4Header outer = outer_header_for(sa, plan.inner.datagram.header, plan.wire_protocol, total);
  Bytes icv = compute_icv(cfg.mac, cfg.mac_key,
                          auth_coverage(extended ? AuthCoverage::Extended : AuthCoverage::EspLike,
                                        encode_ipv4_header_raw(zero_mutable(outer)), body));
  append(body, icv);
  return encode_ipv4(outer, body);
}

struct InboundSplit {
  Ipv4Header outer;
  SecurityAssociation* sa;
  ByteView protected_region;  // header || IV || ciphertext
  ByteView iv;
  ByteView ciphertext;
  ByteView icv;
};

// Parses the outer datagram, resolves the SA and checks the ICV. Nothing in
// the clear header beyond the SPI is trusted before this returns.
InboundSplit authenticate(Sadb& sadb, ByteView packet, std::uint8_t wire_protocol,
                          std::size_t header_len, Variant variant) {
  auto d = parse_ipv4(packet);
  if (d.header.protocol != wire_protocol)
    fail(Errc::MalformedPacket, "unexpected IP protocol " + std::to_string(d.header.protocol));
  auto body = d.payload;
  if (body.size() < header_len) fail(Errc::Truncated, "security header truncated");

  std::uint32_t spi = load_be32(body, 0);
  SecurityAssociation* sa = sadb.lookup_by_spi(spi);
  if (sa == nullptr || sa->config().variant != variant)
    fail(Errc::UnknownSpi, "no " + std::string(to_string(variant)) + " SA for SPI " +
                               std::to_string(spi));

  const auto& cfg = sa->config();
  auto ct = traits(cfg.cipher);
  auto mt = traits(cfg.mac);
  std::size_t block = effective_block(cfg.cipher);
  if (body.size() < header_len + ct.iv_len + mt.icv_len + block)
    fail(Errc::Truncated, "encapsulated payload shorter than one cipher block");
  std::size_t cipher_len = body.size() - header_len - ct.iv_len - mt.icv_len;
  if (cipher_len % block != 0)
    fail(Errc::BadBlockAlignment, "ciphertext length is not block aligned");

  InboundSplit s;
  s.outer = d.header;
  s.sa = sa;
  s.protected_region = body.first(body.size() - mt.icv_len);
  s.iv = body.subspan(header_len, ct.iv_len);
  s.ciphertext = body.subspan(header_len + ct.iv_len, cipher_len);
  s.icv = body.last(mt.icv_len);

  auto coverage = cfg.extended_auth ? AuthCoverage::Extended : AuthCoverage::EspLike;
  if (!verify_icv(cfg.mac, cfg.mac_key,
                  auth_coverage(coverage, encode_ipv4_header_raw(zero_mutable(s.outer)),
                                s.protected_region),
                  s.icv))
    fail(Errc::AuthFailure, "ICV mismatch for SPI " + std::to_string(spi));
  return s;
}

void check_replay(SecurityAssociation& sa, std::uint32_t seq) {
  if (!sa.replay_check_and_update(seq))
    fail(Errc::ReplayRejected, "sequence " + std::to_string(seq) + " replayed or outside window");
}

}  // namespace

Bytes auth_coverage(AuthCoverage coverage, ByteView outer_header, ByteView protected_region) {
  Bytes out;
  if (coverage == AuthCoverage::Extended) {
    out.reserve(outer_header.size() + protected_region.size());
    append(out, outer_header);
  }
  append(out, protected_region);
  return out;
}

// ---------------------------------------------------------------------------
// Q-ESP

Bytes outbound_qesp(SecurityAssociation& sa, ByteView ip_packet) {
  const auto& cfg = sa.config();
  if (cfg.variant != Variant::Qesp) fail(Errc::ConfigError, "outbound_qesp called with an ESP SA");

  OutboundPlan plan{inspect_inner(ip_packet)};
  plan.protected_bytes = cfg.mode == Mode::Transport ? plan.inner.datagram.payload : ip_packet;
  plan.wire_protocol = kProtoQesp;
  plan.header_len = kQespHeaderLen;
  plan.trailer_fixed = kQespTrailerFixed;

  return encapsulate(sa, plan, cfg.extended_auth, [&](Bytes& body, std::uint32_t seq) {
    QespHeader h;
    h.spi = cfg.spi;
    h.seq = seq;
    h.src_port = plan.inner.src_port;
    h.dst_port = plan.inner.dst_port;
    h.inner_protocol = plan.inner.datagram.header.protocol;
    h.flags = cfg.extended_auth ? kQespFlagExtendedAuth : 0;
    append(body, encode_qesp_header(h));
  });
}

Bytes inbound_qesp(Sadb& sadb, ByteView qesp_ip_packet) {
  auto s = authenticate(sadb, qesp_ip_packet, kProtoQesp, kQespHeaderLen, Variant::Qesp);
  auto& sa = *s.sa;
  const auto& cfg = sa.config();

  QespHeader h = parse_qesp_header(s.protected_region);
  if (h.extended_auth() != cfg.extended_auth)
    fail(Errc::InvalidHeader, "Q-ESP coverage flag disagrees with the SA");
  check_replay(sa, h.seq);

  Bytes plaintext = decrypt(cfg.cipher, cfg.cipher_key, s.iv, s.ciphertext);
  std::size_t body_len = strip_padding(plaintext, kQespTrailerFixed);
  ByteView body = ByteView(plaintext).first(body_len);

  auto check_tuple = [&](std::uint8_t proto, ByteView segment) {
    auto ports = transport_ports(proto, segment).value_or(std::pair<std::uint16_t, std::uint16_t>{0, 0});
    if (proto != h.inner_protocol || ports.first != h.src_port || ports.second != h.dst_port)
      fail(Errc::FiveTupleMismatch, "clear Q-ESP five-tuple copy disagrees with the inner packet");
  };

  if (cfg.mode == Mode::Tunnel) {
    auto inner = parse_ipv4(body);
    check_tuple(inner.header.protocol, inner.payload);
    return Bytes(body.begin(), body.end());
  }

  check_tuple(h.inner_protocol, body);
  Ipv4Header restored = s.outer;
  restored.protocol = h.inner_protocol;
  return encode_ipv4(restored, body);
}

// ---------------------------------------------------------------------------
// ESP baseline

Bytes outbound_esp(SecurityAssociation& sa, ByteView ip_packet) {
  const auto& cfg = sa.config();
  if (cfg.variant != Variant::Esp) fail(Errc::ConfigError, "outbound_esp called with a Q-ESP SA");

  OutboundPlan plan{inspect_inner(ip_packet)};
  bool tunnel = cfg.mode == Mode::Tunnel;
  plan.protected_bytes = tunnel ? ip_packet : plan.inner.datagram.payload;
  plan.wire_protocol = kProtoEsp;
  plan.header_len = kEspHeaderLen;
  plan.trailer_fixed = kEspTrailerFixed;
  plan.next_header = tunnel ? kProtoIpInIp : plan.inner.datagram.header.protocol;

  return encapsulate(sa, plan, false, [&](Bytes& body, std::uint32_t seq) {
    std::array<std::uint8_t, kEspHeaderLen> h{};
    store_be32(h, 0, cfg.spi);
    store_be32(h, 4, seq);
    append(body, h);
  });
}

Bytes inbound_esp(Sadb& sadb, ByteView esp_ip_packet) {
  auto s = authenticate(sadb, esp_ip_packet, kProtoEsp, kEspHeaderLen, Variant::Esp);
  auto& sa = *s.sa;
  const auto& cfg = sa.config();

  check_replay(sa, load_be32(s.protected_region, 4));

  Bytes plaintext = decrypt(cfg.cipher, cfg.cipher_key, s.iv, s.ciphertext);
  std::size_t body_len = strip_padding(plaintext, kEspTrailerFixed);
  std::uint8_t next_header = plaintext.back();
  ByteView body = ByteView(plaintext).first(body_len);

  if (cfg.mode == Mode::Tunnel) {
    if (next_header != kProtoIpInIp)
      fail(Errc::MalformedPacket, "tunnel-mode ESP next header is not IP-in-IP");
    parse_ipv4(body);
    return Bytes(body.begin(), body.end());
  }

  Ipv4Header restored = s.outer;
  restored.protocol = next_header;
  return encode_ipv4(restored, body);
}

// ---------------------------------------------------------------------------

Bytes outbound(SecurityAssociation& sa, ByteView ip_packet) {
  return sa.config().variant == Variant::Qesp ? outbound_qesp(sa, ip_packet)
                                              : outbound_esp(sa, ip_packet);
}

Bytes inbound(Sadb& sadb, ByteView ip_packet) {
  if (ip_packet.size() > 9 && ip_packet[9] == kProtoEsp) return inbound_esp(sadb, ip_packet);
  return inbound_qesp(sadb, ip_packet);
}

std::size_t per_packet_overhead(Variant variant, Mode mode, CipherAlg cipher, MacAlg mac,
                                std::size_t transport_payload_len) {
  bool qesp = variant == Variant::Qesp;
  std::size_t header = qesp ? kQespHeaderLen : kEspHeaderLen;
  std::size_t trailer = qesp ? kQespTrailerFixed : kEspTrailerFixed;
  std::size_t protected_len =
      mode == Mode::Tunnel ? transport_payload_len + kIpv4HeaderLen : transport_payload_len;
  std::size_t pad = compute_pad_len(protected_len, trailer, effective_block(cipher));
  std::size_t outer = mode == Mode::Tunnel ? kIpv4HeaderLen : 0;
  return header + traits(cipher).iv_len + pad + trailer + traits(mac).icv_len + outer;
}

}  // namespace qesp
