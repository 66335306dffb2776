#include "qesp/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/params.h>

#include <memory>
#include <numeric>
#include <string>

#include "qesp/error.hpp"

namespace qesp {

CipherTraits traits(CipherAlg alg) {
  switch (alg) {
    case CipherAlg::Null: return {1, 0, 0};
    case CipherAlg::Aes128Cbc: return {16, 16, 16};
    case CipherAlg::TripleDesCbc: return {8, 8, 24};
  }
  return {1, 0, 0};
}

MacTraits traits(MacAlg alg) {
  switch (alg) {
    case MacAlg::Null: return {0, 0, 0};
    case MacAlg::HmacMd5_96: return {12, 16, 16};
    case MacAlg::HmacSha1_96: return {12, 20, 20};
  }
  return {0, 0, 0};
}

std::string_view to_string(CipherAlg alg) {
  switch (alg) {
    case CipherAlg::Null: return "null";
    case CipherAlg::Aes128Cbc: return "aes-128-cbc";
    case CipherAlg::TripleDesCbc: return "3des-cbc";
  }
  return "?";
}

std::string_view to_string(MacAlg alg) {
  switch (alg) {
    case MacAlg::Null: return "null";
    case MacAlg::HmacMd5_96: return "hmac-md5-96";
    case MacAlg::HmacSha1_96: return "hmac-sha1-96";
  }
  return "?";
}

std::optional<CipherAlg> parse_cipher_alg(std::string_view name) {
  for (auto alg : kAllCiphers)
    if (to_string(alg) == name) return alg;
  return std::nullopt;
}

std::optional<MacAlg> parse_mac_alg(std::string_view name) {
  for (auto alg : kAllMacs)
    if (to_string(alg) == name) return alg;
  return std::nullopt;
}

std::size_t effective_block(CipherAlg alg) { return std::lcm(traits(alg).block_size, std::size_t{4}); }

std::size_t compute_pad_len(std::size_t payload_len, std::size_t trailer_fixed,
                            std::size_t effective_block) {
  std::size_t rem = (payload_len + trailer_fixed) % effective_block;
  return rem == 0 ? 0 : effective_block - rem;
}

namespace {

// Implementations are fetched once per process; contexts are reused per
// thread and re-keyed on every call.
const EVP_CIPHER* evp_cipher(CipherAlg alg) {
  static EVP_CIPHER* const aes = EVP_CIPHER_fetch(nullptr, "AES-128-CBC", nullptr);
  static EVP_CIPHER* const des3 = EVP_CIPHER_fetch(nullptr, "DES-EDE3-CBC", nullptr);
  switch (alg) {
    case CipherAlg::Aes128Cbc: return aes;
    case CipherAlg::TripleDesCbc: return des3;
    case CipherAlg::Null: break;
  }
  return nullptr;
}

const char* digest_name(MacAlg alg) { return alg == MacAlg::HmacMd5_96 ? "MD5" : "SHA1"; }

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
struct MacCtxDeleter {
  void operator()(EVP_MAC_CTX* ctx) const { EVP_MAC_CTX_free(ctx); }
};

EVP_CIPHER_CTX* cipher_ctx() {
  thread_local std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
  return ctx.get();
}

EVP_MAC_CTX* mac_ctx(MacAlg alg) {
  static EVP_MAC* const hmac = EVP_MAC_fetch(nullptr, "HMAC", nullptr);
  thread_local std::unique_ptr<EVP_MAC_CTX, MacCtxDeleter> ctxs[2];
  auto& slot = ctxs[alg == MacAlg::HmacMd5_96 ? 0 : 1];
  if (!slot && hmac != nullptr) {
    slot.reset(EVP_MAC_CTX_new(hmac));
    OSSL_PARAM params[] = {
        OSSL_PARAM_construct_utf8_string("digest", const_cast<char*>(digest_name(alg)), 0),
        OSSL_PARAM_construct_end()};
    if (slot && EVP_MAC_CTX_set_params(slot.get(), params) != 1) slot.reset();
  }
  if (!slot) throw std::runtime_error("OpenSSL HMAC unavailable");
  return slot.get();
}

void check_cipher_args(CipherAlg alg, ByteView key, ByteView iv, ByteView input) {
  auto t = traits(alg);
  if (key.size() != t.key_len)
    fail(Errc::BadKeyLength, std::string(to_string(alg)) + " needs a " +
                                 std::to_string(t.key_len) + "-byte key");
  if (iv.size() != t.iv_len)
    fail(Errc::BadIvLength, std::string(to_string(alg)) + " needs a " +
                                std::to_string(t.iv_len) + "-byte IV");
  if (input.size() % t.block_size != 0)
    fail(Errc::BadBlockAlignment, "input length " + std::to_string(input.size()) +
                                      " is not a multiple of " + std::to_string(t.block_size));
}

Bytes run_cbc(CipherAlg alg, ByteView key, ByteView iv, ByteView input, bool encrypting) {
  check_cipher_args(alg, key, iv, input);
  if (alg == CipherAlg::Null) return Bytes(input.begin(), input.end());

  EVP_CIPHER_CTX* ctx = cipher_ctx();
  if (ctx == nullptr || evp_cipher(alg) == nullptr ||
      EVP_CipherInit_ex2(ctx, evp_cipher(alg), key.data(), iv.data(), encrypting ? 1 : 0, nullptr) != 1 ||
      EVP_CIPHER_CTX_set_padding(ctx, 0) != 1)
    throw std::runtime_error("OpenSSL cipher initialisation failed");

  Bytes out(input.size());
  int len = 0;
  if (EVP_CipherUpdate(ctx, out.data(), &len, input.data(), static_cast<int>(input.size())) != 1)
    throw std::runtime_error("OpenSSL cipher update failed");
  int tail = 0;
  if (EVP_CipherFinal_ex(ctx, out.data() + len, &tail) != 1)
    throw std::runtime_error("OpenSSL cipher final failed");
  return out;
}

void check_mac_key(MacAlg alg, ByteView key) {
  auto t = traits(alg);
  if (key.size() != t.key_len)
    fail(Errc::BadKeyLength, std::string(to_string(alg)) + " needs a " +
                                 std::to_string(t.key_len) + "-byte key");
}

}  // namespace

Bytes encrypt(CipherAlg alg, ByteView key, ByteView iv, ByteView plaintext) {
  return run_cbc(alg, key, iv, plaintext, true);
}

Bytes decrypt(CipherAlg alg, ByteView key, ByteView iv, ByteView ciphertext) {
  return run_cbc(alg, key, iv, ciphertext, false);
}

Bytes compute_full_mac(MacAlg alg, ByteView key, ByteView data) {
  check_mac_key(alg, key);
  if (alg == MacAlg::Null) return {};
  EVP_MAC_CTX* ctx = mac_ctx(alg);
  Bytes out(traits(alg).full_len);
  std::size_t len = 0;
  if (EVP_MAC_init(ctx, key.data(), key.size(), nullptr) != 1 ||
      EVP_MAC_update(ctx, data.data(), data.size()) != 1 ||
      EVP_MAC_final(ctx, out.data(), &len, out.size()) != 1 || len != out.size())
    throw std::runtime_error("OpenSSL HMAC failed");
  return out;
}

Bytes compute_icv(MacAlg alg, ByteView key, ByteView data) {
  Bytes mac = compute_full_mac(alg, key, data);
  mac.resize(traits(alg).icv_len);
  return mac;
}

bool verify_icv(MacAlg alg, ByteView key, ByteView data, ByteView icv) {
  Bytes expected = compute_icv(alg, key, data);
  if (icv.size() != expected.size()) return false;
  if (expected.empty()) return true;
  return CRYPTO_memcmp(expected.data(), icv.data(), expected.size()) == 0;
}

Bytes IvGenerator::next(std::size_t len) {
  Bytes out;
  out.reserve(len);
  while (out.size() < len) {
    std::uint64_t word = engine_();
    for (int i = 0; i < 8 && out.size() < len; ++i) out.push_back(static_cast<std::uint8_t>(word >> (8 * i)));
  }
  return out;
}

}  // namespace qesp
