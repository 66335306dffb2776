#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qesp/bytes.hpp"
#include "qesp/error.hpp"
#include "test_util.hpp"

namespace qesp {
namespace {

namespace fs = std::filesystem;

struct Run {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "qesp_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

Run lab(const std::string& args, const std::string& env = "") {
  auto err_path = scratch("stderr.txt");
  std::string cmd = env + " '" + std::string(QESP_LAB_BIN) + "' " + args + " 2>'" + err_path.string() + "'";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_path);
  return r;
}

std::string fixture(const std::string& name) { return std::string(QESP_FIXTURE_DIR) + "/" + name; }
std::string sas() { return fixture("golden_sas.json"); }
std::string bundled() { return std::string(QESP_CONFIG_DIR) + "/priority.json"; }

std::string write_hex(const std::string& name, ByteView b) {
  auto p = scratch(name);
  std::ofstream(p) << to_hex(b) << "\n";
  return p.string();
}

std::string hex_line(ByteView b) { return to_hex(b) + "\n"; }

TEST(Cli, EncapSelectsSaAndMatchesGolden) {
  auto r = lab("encap --config " + sas() + " --in " + fixture("udp_plain.hex"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out, hex_line(testing::read_fixture_hex("qesp_transport_aes_sha1_ext.hex")));
}

TEST(Cli, EncapWithExplicitSpi) {
  auto r = lab("encap --config " + sas() + " --spi 513 --in " + fixture("udp_plain.hex"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out, hex_line(testing::read_fixture_hex("esp_transport_aes_sha1.hex")));
}

TEST(Cli, EncapThenDecapRoundtrips) {
  auto plain = testing::read_fixture_hex("udp_plain.hex");
  for (const char* spi : {"257", "513", "258"}) {
    auto enc = lab("encap --config " + sas() + " --spi " + spi + " --in " + fixture("udp_plain.hex"));
    ASSERT_EQ(enc.exit_code, 0) << enc.err;
    auto wire = write_hex("wire.hex", from_hex(enc.out));
    auto dec = lab("decap --config " + sas() + " --in " + wire);
    ASSERT_EQ(dec.exit_code, 0) << dec.err;
    EXPECT_EQ(dec.out, hex_line(plain)) << spi;
  }
}

TEST(Cli, DecapGoldenFixtures) {
  auto plain = hex_line(testing::read_fixture_hex("udp_plain.hex"));
  for (const char* f : {"qesp_transport_aes_sha1_ext.hex", "esp_transport_aes_sha1.hex", "qesp_tunnel_3des_md5.hex"}) {
    auto r = lab("decap --config " + sas() + " --in " + fixture(f));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(r.out, plain) << f;
  }
}

TEST(Cli, TamperedDecapExitsWithAuthFailure) {
  auto wire = testing::read_fixture_hex("qesp_transport_aes_sha1_ext.hex");
  auto bad = testing::flip_bit(wire, 60, 3);
  auto r = lab("decap --config " + sas() + " --in " + write_hex("bad.hex", bad));
  EXPECT_EQ(r.exit_code, exit_code(Errc::AuthFailure));
  EXPECT_EQ(r.exit_code, 40);
  EXPECT_EQ(r.err.rfind("error: AuthFailure: ", 0), 0u) << r.err;
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, ClassifyGoldenQespUnderBundledRules) {
  auto r = lab("classify --config " + bundled() + " --in " + fixture("qesp_transport_aes_sha1_ext.hex"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out, "src=10.0.0.1 dst=10.0.0.2 protocol=17 src_port=4000 dst_port=5060 dscp=46\n");
}

TEST(Cli, ClassifyEspHidesPorts) {
  auto r = lab("classify --config " + bundled() + " --in " + fixture("esp_transport_aes_sha1.hex"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out, "src=10.0.0.1 dst=10.0.0.2 protocol=50 src_port=unavailable dst_port=unavailable dscp=0\n");
}

TEST(Cli, ErrorExitCodes) {
  EXPECT_EQ(lab("").exit_code, 2);
  EXPECT_EQ(lab("frobnicate").exit_code, 2);
  EXPECT_EQ(lab("throughput --pps nope").exit_code, 2);
  EXPECT_EQ(lab("throughput --cipher rot13").exit_code, 2);
  EXPECT_EQ(lab("throughput --sizes 10").exit_code, 2);
  EXPECT_EQ(lab("priority").exit_code, 2);

  auto missing = lab("decap --config " + sas() + " --in /nonexistent.hex");
  EXPECT_EQ(missing.exit_code, 3);

  auto garbage = lab("decap --config " + sas() + " --in " + write_hex("junk.hex", Bytes{1, 2, 3}));
  EXPECT_EQ(garbage.exit_code, exit_code(Errc::Truncated));
  // One machine-parsable line per failure.
  EXPECT_EQ(std::count(garbage.err.begin(), garbage.err.end(), '\n'), 1);
  EXPECT_EQ(garbage.err.rfind("error: Truncated: ", 0), 0u) << garbage.err;
}

TEST(Cli, PriorityConfigErrorNamesField) {
  std::string text = slurp(bundled());
  auto pos = text.find("\"capacity\": 1000000,");
  ASSERT_NE(pos, std::string::npos);
  text.erase(pos, std::string("\"capacity\": 1000000,").size());
  auto p = scratch("no_capacity.json");
  std::ofstream(p) << text;
  auto r = lab("priority --config " + p.string());
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.err.find("link.capacity: missing required field"), std::string::npos) << r.err;
}

TEST(Cli, ThroughputCsv) {
  auto out = scratch("tp.csv");
  auto r = lab("throughput --sizes 64,1024 --variant both --out " + out.string());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(slurp(out),
            "size,variant,goodput_kbps,wire_kbps,overhead_bytes\n"
            "64,esp,51.200,83.200,40\n"
            "64,qesp,51.200,89.600,48\n"
            "1024,esp,819.200,851.200,40\n"
            "1024,qesp,819.200,857.600,48\n");
}

TEST(Cli, PriorityCsvIsByteStableAndSeedable) {
  auto a = lab("priority --config " + bundled());
  auto b = lab("priority --config " + bundled());
  ASSERT_EQ(a.exit_code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.rfind("run,flow_id,offered_packets,", 0), 0u);
  EXPECT_NE(a.err.find("summary,run=qesp,flows=2,"), std::string::npos);

  auto env = lab("priority --config " + bundled(), "QESP_LAB_SEED=123");
  auto flag = lab("priority --config " + bundled() + " --seed 123");
  auto both = lab("priority --config " + bundled() + " --seed 123", "QESP_LAB_SEED=999");
  EXPECT_NE(env.out, a.out);
  EXPECT_EQ(env.out, flag.out);
  EXPECT_EQ(both.out, flag.out);

  auto file = scratch("prio.csv");
  auto to_file = lab("priority --config " + bundled() + " --out " + file.string());
  EXPECT_EQ(slurp(file), a.out);
  EXPECT_NE(to_file.out.find("summary,run=esp,"), std::string::npos);
}

TEST(Cli, BenchCryptoCsv) {
  auto r = lab("bench-crypto --sizes 64 --algs null/null,aes-128-cbc/hmac-sha1-96 --variant qesp --iters 20");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "variant,cipher,mac,size,ns_per_packet,mbps");
  int rows = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(line.rfind("qesp,", 0), 0u) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 4);  // {null, aes} x {null, sha1}
  EXPECT_EQ(lab("bench-crypto --algs aes-128-cbc").exit_code, 2);
}

}  // namespace
}  // namespace qesp
