#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

#include "qesp/bytes.hpp"

namespace qesp {

enum class CipherAlg { Null, Aes128Cbc, TripleDesCbc };
enum class MacAlg { Null, HmacMd5_96, HmacSha1_96 };

struct CipherTraits {
  std::size_t block_size;
  std::size_t iv_len;
  std::size_t key_len;
};

struct MacTraits {
  std::size_t icv_len;
  std::size_t key_len;
  std::size_t full_len;  // untruncated MAC output
};

CipherTraits traits(CipherAlg alg);
MacTraits traits(MacAlg alg);

// Canonical names: "null", "aes-128-cbc", "3des-cbc" / "null",
// "hmac-md5-96", "hmac-sha1-96".
std::string_view to_string(CipherAlg alg);
std::string_view to_string(MacAlg alg);
std::optional<CipherAlg> parse_cipher_alg(std::string_view name);
std::optional<MacAlg> parse_mac_alg(std::string_view name);

inline constexpr CipherAlg kAllCiphers[] = {CipherAlg::Null, CipherAlg::Aes128Cbc,
                                            CipherAlg::TripleDesCbc};
inline constexpr MacAlg kAllMacs[] = {MacAlg::Null, MacAlg::HmacMd5_96, MacAlg::HmacSha1_96};

// lcm(block_size, 4): ciphertext stays 32-bit aligned even for the null cipher.
std::size_t effective_block(CipherAlg alg);

// Smallest pad with (payload_len + pad + trailer_fixed) % block == 0.
std::size_t compute_pad_len(std::size_t payload_len, std::size_t trailer_fixed,
                            std::size_t effective_block);

// CBC encryption over block-aligned input; the caller applies padding.
Bytes encrypt(CipherAlg alg, ByteView key, ByteView iv, ByteView plaintext);
Bytes decrypt(CipherAlg alg, ByteView key, ByteView iv, ByteView ciphertext);

// Truncated MAC. Empty for MacAlg::Null.
Bytes compute_icv(MacAlg alg, ByteView key, ByteView data);

// Untruncated MAC; exposed so tests can check the truncation prefix.
Bytes compute_full_mac(MacAlg alg, ByteView key, ByteView data);

// Constant-time over the ICV bytes.
bool verify_icv(MacAlg alg, ByteView key, ByteView data, ByteView icv);

// Deterministic per-SA IV source. Each call draws ceil(len / 8) fresh words
// from a 64-bit Mersenne twister and emits them least-significant byte first.
class IvGenerator {
 public:
  explicit IvGenerator(std::uint64_t seed) : engine_(seed) {}

  Bytes next(std::size_t len);

 private:
  std::mt19937_64 engine_;
};

}  // namespace qesp
