#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "qesp/error.hpp"
#include "qesp/wire.hpp"
#include "test_util.hpp"

namespace qesp {
namespace {

using testing::random_bytes;

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::ConfigError;
}

TEST(QespHeader, EncodesBigEndianInFieldOrder) {
  QespHeader h{0x00000101, 1, 5060, 5060, 17, 0x01, 0};
  auto b = encode_qesp_header(h);
  EXPECT_EQ(to_hex(b), "000001010000000113c413c411010000");
}

TEST(QespHeader, SaturatedFields) {
  QespHeader h{0xffffffff, 0xffffffff, 65535, 65535, 255, 0x01, 0};
  EXPECT_EQ(to_hex(encode_qesp_header(h)), "ffffffffffffffffffffffffff010000");
}

TEST(QespHeader, RejectsReservedSpiAndUndefinedBits) {
  EXPECT_EQ(error_of([] { encode_qesp_header({0, 1, 1, 1, 17, 0, 0}); }), Errc::InvalidHeader);
  EXPECT_EQ(error_of([] { encode_qesp_header({1, 1, 1, 1, 17, 0x02, 0}); }), Errc::InvalidHeader);
  EXPECT_EQ(error_of([] { encode_qesp_header({1, 1, 1, 1, 17, 0, 1}); }), Errc::InvalidHeader);
}

TEST(QespHeader, ParseRoundtripAndErrors) {
  auto bytes = from_hex("00000101 00000001 13C4 13C4 11 01 0000");
  QespHeader h = parse_qesp_header(bytes);
  EXPECT_EQ(h, (QespHeader{0x101, 1, 5060, 5060, 17, 1, 0}));

  EXPECT_EQ(error_of([&] { parse_qesp_header(ByteView(bytes).first(15)); }), Errc::Truncated);

  auto bad_flags = bytes;
  bad_flags[13] = 0x02;
  EXPECT_EQ(error_of([&] { parse_qesp_header(bad_flags); }), Errc::InvalidHeader);

  auto bad_reserved = bytes;
  bad_reserved[15] = 0x01;
  EXPECT_EQ(error_of([&] { parse_qesp_header(bad_reserved); }), Errc::InvalidHeader);
}

TEST(QespHeader, RoundtripProperty) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    QespHeader h;
    h.spi = static_cast<std::uint32_t>(rng()) | 1;
    h.seq = static_cast<std::uint32_t>(rng());
    h.src_port = static_cast<std::uint16_t>(rng());
    h.dst_port = static_cast<std::uint16_t>(rng());
    h.inner_protocol = static_cast<std::uint8_t>(rng());
    h.flags = static_cast<std::uint8_t>(rng() & 1);
    ASSERT_EQ(parse_qesp_header(encode_qesp_header(h)), h);
  }
}

TEST(QespPacket, RoundtripProperty) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 500; ++i) {
    QespPacket p;
    p.header = {static_cast<std::uint32_t>(rng()) | 1, static_cast<std::uint32_t>(rng()), 1, 2, 6, 0, 0};
    std::size_t iv = rng() % 17;
    std::size_t icv = rng() % 13;
    p.iv = random_bytes(rng, iv);
    p.ciphertext = random_bytes(rng, 1 + rng() % 300);
    p.icv = random_bytes(rng, icv);
    ASSERT_EQ(parse_qesp(encode_qesp(p), iv, icv), p);
  }
}

TEST(Esp, LengthArithmetic) {
  EspPacket p{0x200, 7, Bytes(16, 0), Bytes(32, 0xcc), Bytes(12, 0xdd)};
  auto b = encode_esp(p);
  EXPECT_EQ(b.size(), 68u);
  EXPECT_EQ(to_hex(ByteView(b).first(8)), "0000020000000007");
  EXPECT_EQ(parse_esp(b, 16, 12), p);
}

TEST(Esp, RoundtripProperty) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    EspPacket p;
    p.spi = static_cast<std::uint32_t>(rng());
    p.seq = static_cast<std::uint32_t>(rng());
    std::size_t iv = rng() % 17;
    std::size_t icv = rng() % 13;
    p.iv = random_bytes(rng, iv);
    p.ciphertext = random_bytes(rng, 16 * (1 + rng() % 20));
    p.icv = random_bytes(rng, icv);
    ASSERT_EQ(parse_esp(encode_esp(p), iv, icv, 16), p);
  }
}

TEST(Esp, TruncatedBuffer) {
  Bytes b(19, 0);
  EXPECT_EQ(error_of([&] { parse_esp(b, 16, 12); }), Errc::Truncated);
  Bytes one_short(8 + 16 + 12 + 15, 0);
  EXPECT_EQ(error_of([&] { parse_esp(one_short, 16, 12, 16); }), Errc::Truncated);
}

TEST(Ipv4, MinimalHeaderChecksumVerifies) {
  Ipv4Header h;
  h.protocol = 17;
  auto b = encode_ipv4(h, {});
  ASSERT_EQ(b.size(), 20u);
  EXPECT_EQ(internet_checksum(b), 0);
  auto d = parse_ipv4(b);
  EXPECT_EQ(d.header.total_length, 20);
  EXPECT_TRUE(d.payload.empty());
}

// Frozen from tests/oracles/golden.py (byte-wise ones-complement sum).
TEST(Ipv4, KnownDatagramChecksum) {
  Ipv4Header h;
  h.ttl = 64;
  h.protocol = 17;
  h.src_addr = 0x0a000001;
  h.dst_addr = 0x0a000002;
  Bytes payload(8, 0);
  auto b = encode_ipv4(h, payload);
  EXPECT_EQ(load_be16(b, 10), 0x66cf);
}

TEST(Ipv4, Errors) {
  Ipv4Header h;
  h.protocol = 6;
  auto good = encode_ipv4(h, Bytes(10, 1));

  auto flipped = good;
  flipped[11] ^= 0x01;
  EXPECT_EQ(error_of([&] { parse_ipv4(flipped); }), Errc::BadChecksum);

  EXPECT_EQ(error_of([&] { parse_ipv4(ByteView(good).first(19)); }), Errc::Truncated);
  EXPECT_EQ(error_of([&] { parse_ipv4(ByteView(good).first(25)); }), Errc::Truncated);

  auto options = good;
  options[0] = 0x46;
  EXPECT_EQ(error_of([&] { parse_ipv4(options); }), Errc::UnsupportedOptions);

  auto longer = good;
  longer.push_back(0);
  EXPECT_EQ(error_of([&] { parse_ipv4(longer); }), Errc::MalformedPacket);
}

TEST(Ipv4, RoundtripProperty) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    Ipv4Header h;
    h.tos = static_cast<std::uint8_t>(rng());
    h.identification = static_cast<std::uint16_t>(rng());
    h.flags_frag = static_cast<std::uint16_t>(rng());
    h.ttl = static_cast<std::uint8_t>(rng());
    h.protocol = static_cast<std::uint8_t>(rng());
    h.src_addr = static_cast<std::uint32_t>(rng());
    h.dst_addr = static_cast<std::uint32_t>(rng());
    auto payload = random_bytes(rng, rng() % 600);
    auto b = encode_ipv4(h, payload);
    auto d = parse_ipv4(b);
    h.total_length = static_cast<std::uint16_t>(20 + payload.size());
    h.checksum = d.header.checksum;
    ASSERT_EQ(d.header, h);
    ASSERT_TRUE(std::equal(d.payload.begin(), d.payload.end(), payload.begin(), payload.end()));
    ASSERT_EQ(encode_ipv4(d.header, d.payload), b);
  }
}

TEST(Ipv4, OversizePayloadRejected) {
  Bytes payload(65516, 0);
  EXPECT_EQ(error_of([&] { encode_ipv4(Ipv4Header{}, payload); }), Errc::OversizePacket);
  EXPECT_NO_THROW(encode_ipv4(Ipv4Header{}, ByteView(payload).first(65515)));
}

// Parsers either succeed or throw qesp::Error on arbitrary input.
TEST(Parsers, TotalOnArbitraryBytes) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 3000; ++i) {
    std::size_t len = i < 2900 ? rng() % 200 : rng() % 65536;
    auto b = random_bytes(rng, len);
    if (i % 3 == 0 && b.size() >= 20) {
      // Bias toward plausible headers so deeper branches run.
      b[0] = 0x45;
      store_be16(b, 2, static_cast<std::uint16_t>(b.size()));
      store_be16(b, 10, 0);
      store_be16(b, 10, internet_checksum(ByteView(b).first(20)));
    }
    auto attempt = [&](auto&& fn) {
      try {
        fn();
      } catch (const Error&) {
      }
    };
    attempt([&] { parse_ipv4(b); });
    attempt([&] { parse_qesp_header(b); });
    attempt([&] { parse_qesp(b, rng() % 20, rng() % 20); });
    attempt([&] { parse_esp(b, rng() % 20, rng() % 20, 1 + rng() % 16); });
    attempt([&] { decode_packet_dump(b); });
    attempt([&] { five_tuple_of(b); });
  }
}

TEST(FiveTupleReadability, FixedOffsetsInDatagram) {
  auto golden = testing::read_fixture_hex("qesp_transport_aes_sha1_ext.hex");
  EXPECT_EQ(load_be16(golden, kQespSrcPortOffset), 4000);
  EXPECT_EQ(load_be16(golden, kQespDstPortOffset), 5060);
  EXPECT_EQ(golden[kQespProtocolOffset], kProtoUdp);
}

TEST(PacketDump, FileRoundtrip) {
  std::mt19937_64 rng(6);
  std::vector<Bytes> packets;
  for (int i = 0; i < 5; ++i) packets.push_back(testing::random_datagram(rng));
  auto path = std::filesystem::temp_directory_path() / "qesp_dump_test.bin";
  write_packet_dump(path, packets);
  EXPECT_EQ(read_packet_dump(path), packets);
  std::filesystem::remove(path);

  auto encoded = encode_packet_dump(packets);
  encoded.pop_back();
  EXPECT_EQ(error_of([&] { decode_packet_dump(encoded); }), Errc::Truncated);
}

TEST(Addresses, ParseAndFormat) {
  EXPECT_EQ(parse_ipv4_address("10.1.2.3"), 0x0a010203u);
  EXPECT_EQ(format_ipv4_address(0xc0a80001), "192.168.0.1");
  EXPECT_FALSE(parse_ipv4_address("10.1.2"));
  EXPECT_FALSE(parse_ipv4_address("10.1.2.256"));
  EXPECT_FALSE(parse_ipv4_address("10.1.2.3 "));
}

TEST(Hex, WhitespaceInsensitive) {
  EXPECT_EQ(from_hex(" 0a\n0B  ff "), (Bytes{0x0a, 0x0b, 0xff}));
  EXPECT_EQ(error_of([] { from_hex("abc"); }), Errc::MalformedPacket);
  EXPECT_EQ(error_of([] { from_hex("zz"); }), Errc::MalformedPacket);
}

}  // namespace
}  // namespace qesp
