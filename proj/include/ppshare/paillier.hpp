#pragma once

#include <stdexcept>
#include <utility>

#include "ppshare/bigint.hpp"
#include "ppshare/rng.hpp"

namespace ppshare::paillier {

struct CorruptCiphertext : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PublicKey {
  Bigint n;       // modulus, product of two primes
  Bigint g;       // generator mod n^2 (n + 1 by default)
  Bigint nsq;     // cached n^2
  unsigned bits = 0;

  PublicKey() = default;
  PublicKey(Bigint n_, Bigint g_, unsigned bits_)
      : n(std::move(n_)), g(std::move(g_)), bits(bits_) {
    nsq = n * n;
  }

  Bigint half_n() const { return n / 2; }
};

struct PrivateKey {
  Bigint lambda;  // Carmichael function of n
  Bigint mu;      // decryption coefficient
  PublicKey pub;
};

struct Ciphertext {
  Bigint value;  // element of Z*_{n^2}

  friend bool operator==(const Ciphertext&, const Ciphertext&) = default;
};

namespace detail {

inline Bigint random_prime(unsigned nbits, Rng& rng) {
  if (nbits < 8) throw std::invalid_argument("random_prime: too few bits");
  for (;;) {
    Bigint c = rng.bits(nbits);
    // Top two bits set so products of two such primes keep full width.
    mpz_setbit(c.get_mpz_t(), nbits - 1);
    mpz_setbit(c.get_mpz_t(), nbits - 2);
    mpz_setbit(c.get_mpz_t(), 0);
    if (is_probable_prime(c, 64)) return c;
  }
}

// L(x) = (x - 1) / n, defined on x = 1 mod n.
inline Bigint ell(const Bigint& x, const Bigint& n) {
  Bigint num = x - 1;
  if (num % n != 0) throw CorruptCiphertext("decryption residue not congruent to 1 mod n");
  return num / n;
}

}  // namespace detail

/// Generates a key pair with an n of exactly `bit_length` bits. The generator
/// is fixed to n + 1. Keeps gcd(lambda, n) = 1 so the same keys can back the
/// threshold variant.
inline std::pair<PublicKey, PrivateKey> keygen(unsigned bit_length, Rng& rng) {
  if (bit_length < 64 || bit_length % 2 != 0)
    throw std::invalid_argument("keygen: bit_length must be even and >= 64");
  const unsigned half = bit_length / 2;
  for (;;) {
    Bigint p = detail::random_prime(half, rng);
    Bigint q = detail::random_prime(half, rng);
    if (p == q) continue;
    Bigint n = p * q;
    if (ppshare::bit_length(n) != bit_length) continue;
    Bigint lambda = lcm(p - 1, q - 1);
    if (gcd(lambda, n) != 1) continue;
    PublicKey pk(n, n + 1, bit_length);
    Bigint mu = invmod(detail::ell(powm(pk.g, lambda, pk.nsq), n) % n, n);
    return {pk, PrivateKey{std::move(lambda), std::move(mu), pk}};
  }
}

/// Uniform unit mod n, usable as encryption randomness.
inline Bigint random_unit(const PublicKey& pk, Rng& rng) {
  for (;;) {
    Bigint r = rng.range(1, pk.n);
    if (gcd(r, pk.n) == 1) return r;
  }
}

inline Ciphertext encrypt(const PublicKey& pk, const Bigint& m, const Bigint& r) {
  if (m < 0 || m >= pk.n) throw std::invalid_argument("encrypt: message out of range");
  if (r < 1 || r >= pk.n || gcd(r, pk.n) != 1)
    throw std::invalid_argument("encrypt: randomness must be a unit in [1, n)");
  Bigint gm;
  if (pk.g == pk.n + 1)
    gm = (1 + m * pk.n) % pk.nsq;
  else
    gm = powm(pk.g, m, pk.nsq);
  return Ciphertext{gm * powm(r, pk.n, pk.nsq) % pk.nsq};
}

inline Ciphertext encrypt(const PublicKey& pk, const Bigint& m, Rng& rng) {
  return encrypt(pk, m, random_unit(pk, rng));
}

inline Bigint decrypt(const PrivateKey& sk, const Ciphertext& c) {
  const PublicKey& pk = sk.pub;
  if (c.value <= 0 || c.value >= pk.nsq || gcd(c.value, pk.n) != 1)
    throw CorruptCiphertext("decrypt: ciphertext outside the valid group");
  Bigint l = detail::ell(powm(c.value, sk.lambda, pk.nsq), pk.n);
  return l * sk.mu % pk.n;
}

/// Ciphertext of m_a + m_b (mod n).
inline Ciphertext hom_add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  return Ciphertext{a.value * b.value % pk.nsq};
}

/// Ciphertext of m_a * k (mod n). Negative k goes through the modular
/// inverse of the ciphertext.
inline Ciphertext hom_scale(const PublicKey& pk, const Ciphertext& a, const Bigint& k) {
  if (k >= 0) return Ciphertext{powm(a.value, k, pk.nsq)};
  return Ciphertext{invmod(powm(a.value, -k, pk.nsq), pk.nsq)};
}

}  // namespace ppshare::paillier
