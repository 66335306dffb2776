#include <gtest/gtest.h>

#include <random>

#include "qesp/classifier.hpp"
#include "qesp/engine.hpp"
#include "qesp/error.hpp"
#include "test_util.hpp"

namespace qesp {
namespace {

using testing::make_datagram;
using testing::make_sa;

const FiveTuple kSip{0x0a000001, 0x0a000002, kProtoUdp, 4000, 5060};

RuleTable ef_for_sip() {
  ClassifierRule r;
  r.selector.protocol = kProtoUdp;
  r.selector.dst_ports = PortRange{5060, 5060};
  r.dscp = kDscpExpedited;
  return RuleTable({r});
}

Bytes encapsulate(Variant v, Mode m, ByteView plain, bool extended = false) {
  SecurityAssociation sa(make_sa(0x101, v, m, CipherAlg::Aes128Cbc, MacAlg::HmacSha1_96, extended));
  return outbound(sa, plain);
}

TEST(Extract, PlainUdp) {
  auto f = extract_fields(make_datagram(kSip, 20));
  EXPECT_EQ(f, (ExtractedFields{0x0a000001, 0x0a000002, kProtoUdp, 4000, 5060}));
}

TEST(Extract, QespMatchesPlain) {
  auto plain = make_datagram(kSip, 20);
  EXPECT_EQ(extract_fields(encapsulate(Variant::Qesp, Mode::Transport, plain)), extract_fields(plain));
}

TEST(Extract, EspHidesPorts) {
  auto f = extract_fields(encapsulate(Variant::Esp, Mode::Transport, make_datagram(kSip, 20)));
  EXPECT_EQ(f.protocol, kProtoEsp);
  EXPECT_FALSE(f.src_port);
  EXPECT_FALSE(f.dst_port);
}

TEST(Extract, OtherProtocolsHaveNoPorts) {
  auto f = extract_fields(make_datagram({1, 2, 1, 0, 0}, 8));
  EXPECT_EQ(f.protocol, 1);
  EXPECT_FALSE(f.src_port);
}

TEST(Extract, MalformedInput) {
  auto truncated_udp = make_datagram({1, 2, 47, 0, 0}, 3);
  truncated_udp[9] = kProtoUdp;
  store_be16(truncated_udp, 10, 0);
  store_be16(truncated_udp, 10, internet_checksum(ByteView(truncated_udp).first(20)));
  for (const Bytes& bad : {Bytes{0x45, 0}, Bytes(20, 0), truncated_udp}) {
    try {
      extract_fields(bad);
      ADD_FAILURE() << "accepted " << to_hex(bad);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::MalformedPacket);
    }
  }
}

TEST(Classify, ExpeditedForwardingForQespNotEsp) {
  auto table = ef_for_sip();
  auto plain = make_datagram(kSip, 20);
  EXPECT_EQ(classify(table, plain), kDscpExpedited);
  EXPECT_EQ(classify(table, encapsulate(Variant::Qesp, Mode::Transport, plain)), kDscpExpedited);
  EXPECT_EQ(classify(table, encapsulate(Variant::Qesp, Mode::Tunnel, plain)), kDscpExpedited);
  EXPECT_EQ(classify(table, encapsulate(Variant::Esp, Mode::Transport, plain)), kDscpBestEffort);
  EXPECT_EQ(classify(table, encapsulate(Variant::Esp, Mode::Tunnel, plain)), kDscpBestEffort);
}

TEST(Classify, EspProtocolNumberStillMatchable) {
  ClassifierRule r;
  r.selector.protocol = kProtoEsp;
  r.dscp = 10;
  RuleTable t({r});
  EXPECT_EQ(classify(t, encapsulate(Variant::Esp, Mode::Transport, make_datagram(kSip, 20))), 10);
}

TEST(Classify, EmptyTableGivesDefault) {
  std::mt19937_64 rng(31);
  RuleTable empty({}, 12);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(classify(empty, testing::random_flow_datagram(rng)), 12);
}

TEST(Classify, FirstMatchWins) {
  ClassifierRule a, b;
  a.selector.protocol = kProtoUdp;
  a.dscp = 10;
  b.selector.dst_ports = PortRange{5060, 5060};
  b.dscp = 46;
  EXPECT_EQ(classify(RuleTable({a, b}), make_datagram(kSip, 0)), 10);
  EXPECT_EQ(classify(RuleTable({b, a}), make_datagram(kSip, 0)), 46);
}

TEST(RuleTable, RejectsOutOfRangeDscp) {
  ClassifierRule r;
  r.dscp = 64;
  EXPECT_THROW(RuleTable({r}), Error);
  EXPECT_THROW(RuleTable({}, 64), Error);
}

TEST(Remark, WritesDscpKeepsEcnAndChecksum) {
  auto pkt = make_datagram(kSip, 20, 0x03);
  EXPECT_EQ(classify_and_remark(ef_for_sip(), pkt), kDscpExpedited);
  EXPECT_EQ(pkt[1], (46 << 2) | 0x03);
  EXPECT_NO_THROW(parse_ipv4(pkt));
}

TEST(Remark, ExtendedCoverageSurvivesRemarking) {
  SaConfig cfg = make_sa(0x101, Variant::Qesp, Mode::Transport, CipherAlg::Aes128Cbc,
                         MacAlg::HmacSha1_96, true);
  SecurityAssociation tx(cfg);
  Sadb rx;
  rx.add_sa(cfg);
  auto plain = make_datagram(kSip, 20);
  auto wire = outbound(tx, plain);
  classify_and_remark(ef_for_sip(), wire);
  auto out = inbound(rx, wire);
  EXPECT_EQ(out[1] >> 2, kDscpExpedited);
}

// Transport mode keeps addresses, so any five-tuple rule is fair game; tunnel
// mode replaces the addresses with the tunnel endpoints, so only protocol and
// port rules are compared there.
TEST(Property, QespClassifiesLikePlaintext) {
  std::mt19937_64 rng(32);
  for (int i = 0; i < 2000; ++i) {
    auto mode = i % 2 ? Mode::Tunnel : Mode::Transport;
    auto table = testing::random_rule_table(rng, mode == Mode::Transport);
    auto plain = testing::random_flow_datagram(rng);
    ASSERT_EQ(classify(table, encapsulate(Variant::Qesp, mode, plain, rng() % 2)), classify(table, plain))
        << to_hex(plain);
  }
}

TEST(Property, EspFallsToDefaultWhenRulesNeedPorts) {
  std::mt19937_64 rng(33);
  for (int i = 0; i < 2000; ++i) {
    auto table = testing::random_rule_table(rng, true, true);
    auto plain = testing::random_flow_datagram(rng);
    auto mode = i % 2 ? Mode::Tunnel : Mode::Transport;
    ASSERT_EQ(classify(table, encapsulate(Variant::Esp, mode, plain)), table.default_dscp());
  }
}

}  // namespace
}  // namespace qesp
