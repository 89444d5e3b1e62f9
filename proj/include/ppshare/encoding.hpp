#pragma once

#include <stdexcept>

#include "ppshare/bigint.hpp"
#include "ppshare/paillier.hpp"

namespace ppshare::paillier {

struct EncodingOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Signed fixed-point plaintext encoding. A rational x becomes the ring
/// element floor(S*x) mod n; negatives occupy the upper half of [0, n).
/// The representable range is (-n/2, (n-1)/2] in the scaled domain.

inline Bigint encode_signed_int(const Bigint& v, const PublicKey& pk) {
  if (2 * abs(v) >= pk.n)
    throw EncodingOverflow("encode: scaled value outside the signed range");
  Bigint raw = v % pk.n;
  if (raw < 0) raw += pk.n;
  return raw;
}

inline Bigint encode_signed(const Rat& x, const Bigint& scale, const PublicKey& pk) {
  if (scale <= 0) throw std::invalid_argument("encode_signed: scale must be positive");
  Bigint v = fdiv(x.get_num() * scale, x.get_den());  // floor(S*x)
  return encode_signed_int(v, pk);
}

inline Bigint decode_signed_int(const Bigint& raw, const PublicKey& pk) {
  if (raw < 0 || raw >= pk.n)
    throw std::invalid_argument("decode: raw value outside [0, n)");
  Bigint v = raw;
  if (2 * v > pk.n) v -= pk.n;
  return v;
}

inline Rat decode_signed(const Bigint& raw, const Bigint& scale, const PublicKey& pk) {
  if (scale <= 0) throw std::invalid_argument("decode_signed: scale must be positive");
  Rat r(decode_signed_int(raw, pk), scale);
  r.canonicalize();
  return r;
}

/// Headroom guard used by the protocols: masked payloads must stay at or
/// below n/4 in magnitude so sums of masks cannot wrap the signed range.
inline void check_mask_headroom(const Bigint& v, const PublicKey& pk) {
  if (4 * abs(v) > pk.n)
    throw EncodingOverflow("masked payload exceeds n/4 headroom");
}

}  // namespace ppshare::paillier
