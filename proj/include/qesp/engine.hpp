#pragma once

#include <cstddef>

#include "qesp/bytes.hpp"
#include "qesp/crypto.hpp"
#include "qesp/sadb.hpp"
#include "qesp/wire.hpp"

namespace qesp {

enum class AuthCoverage { EspLike, Extended };

// Bytes the ICV is computed over.
//   EspLike:  protocol header || IV || ciphertext
//   Extended: outer IPv4 header with tos, flags_frag, ttl and checksum
//             zeroed || Q-ESP header || IV || ciphertext
// `outer_header` is ignored for EspLike.
Bytes auth_coverage(AuthCoverage coverage, ByteView outer_header, ByteView protected_region);

// Transport mode protects the IP payload in place; tunnel mode wraps the
// whole datagram under a new tunnel_src -> tunnel_dst header. Both consume
// one sequence number and one IV from `sa`.
Bytes outbound_qesp(SecurityAssociation& sa, ByteView ip_packet);
Bytes inbound_qesp(Sadb& sadb, ByteView qesp_ip_packet);

Bytes outbound_esp(SecurityAssociation& sa, ByteView ip_packet);
Bytes inbound_esp(Sadb& sadb, ByteView esp_ip_packet);

// Dispatch on sa.config().variant / the outer protocol number.
Bytes outbound(SecurityAssociation& sa, ByteView ip_packet);
Bytes inbound(Sadb& sadb, ByteView ip_packet);

// Bytes encapsulation adds to a datagram whose IP payload is
// `transport_payload_len` bytes long.
std::size_t per_packet_overhead(Variant variant, Mode mode, CipherAlg cipher, MacAlg mac,
                                std::size_t transport_payload_len);

inline constexpr std::size_t kQespTrailerFixed = 1;  // pad_length
inline constexpr std::size_t kEspTrailerFixed = 2;   // pad_length, next_header

}  // namespace qesp
