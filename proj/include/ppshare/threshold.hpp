#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ppshare/bigint.hpp"
#include "ppshare/paillier.hpp"
#include "ppshare/rng.hpp"

namespace ppshare::paillier {

/// (N, t)-threshold decryption: the decryption exponent d (d = 0 mod lambda,
/// d = 1 mod n) is shared with a degree-(t-1) polynomial over Z_{n*lambda}.
/// Partial decryptions are c^{2*delta*s_i} with delta = N!, and any t of them
/// recombine through integer Lagrange coefficients cleared by delta.
/// Honest-but-curious setting: no share verification keys.

struct KeyShare {
  unsigned index = 0;      // 1..parties
  Bigint value;            // polynomial evaluation at `index`
  unsigned threshold = 0;  // t
  unsigned parties = 0;    // N
  PublicKey pub;
  std::optional<Bigint> verification_base;  // unused in the semi-honest model
};

struct DecryptionShare {
  unsigned index = 0;
  Bigint value;  // c^{2*delta*s_i} mod n^2
  unsigned parties = 0;

  friend bool operator==(const DecryptionShare&, const DecryptionShare&) = default;
};

struct ThresholdKeyMaterial {
  PublicKey pub;
  std::vector<KeyShare> shares;
  // Master key retained simulation-side only, as the oracle for tests and
  // harness measurements; protocol parties never hold it in threshold mode.
  PrivateKey master;
};

inline void validate_threshold_params(unsigned parties, unsigned threshold) {
  if (parties < 1 || threshold < 1 || threshold > parties)
    throw std::invalid_argument("threshold: need 1 <= t <= N");
  if (parties <= 3 && threshold != parties)
    throw std::invalid_argument("threshold: N <= 3 requires t = N");
}

inline ThresholdKeyMaterial threshold_keygen(unsigned bit_length, unsigned parties,
                                             unsigned threshold, Rng& rng) {
  validate_threshold_params(parties, threshold);
  auto [pk, sk] = keygen(bit_length, rng);

  // d = 0 mod lambda, d = 1 mod n; gcd(lambda, n) = 1 is enforced by keygen.
  Bigint d = sk.lambda * invmod(sk.lambda % pk.n, pk.n);
  Bigint modulus = pk.n * sk.lambda;

  std::vector<Bigint> coeff{d % modulus};
  for (unsigned i = 1; i < threshold; ++i) coeff.push_back(rng.below(modulus));

  std::vector<KeyShare> shares;
  shares.reserve(parties);
  for (unsigned i = 1; i <= parties; ++i) {
    Bigint x(i), acc(0), xp(1);
    for (const Bigint& c : coeff) {
      acc = (acc + c * xp) % modulus;
      xp = xp * x % modulus;
    }
    shares.push_back(KeyShare{i, acc, threshold, parties, pk, std::nullopt});
  }
  return ThresholdKeyMaterial{pk, std::move(shares), std::move(sk)};
}

inline DecryptionShare partial_decrypt(const KeyShare& share, const Ciphertext& c) {
  const PublicKey& pk = share.pub;
  if (c.value <= 0 || c.value >= pk.nsq)
    throw CorruptCiphertext("partial_decrypt: ciphertext out of range");
  Bigint delta = factorial(share.parties);
  Bigint exp = 2 * delta * share.value;
  return DecryptionShare{share.index, powm(c.value, exp, pk.nsq), share.parties};
}

/// Recombines decryption shares. All supplied shares are used (passing more
/// than t is fine and lands on the same plaintext); fewer than t distinct
/// shares is an error. A caller lying about t gets garbage, not the message.
inline Bigint combine_shares(const PublicKey& pk, const std::vector<DecryptionShare>& shares,
                             unsigned threshold) {
  if (shares.size() < threshold || threshold == 0)
    throw std::invalid_argument("combine_shares: fewer shares than the threshold");
  std::set<unsigned> seen;
  for (const auto& s : shares)
    if (!seen.insert(s.index).second)
      throw std::invalid_argument("combine_shares: duplicate share index");

  Bigint delta = factorial(shares.front().parties);
  Bigint w(1);
  for (const auto& si : shares) {
    // Integer Lagrange coefficient at zero, cleared by delta.
    Bigint num = delta, den(1);
    for (const auto& sj : shares) {
      if (sj.index == si.index) continue;
      num *= static_cast<long>(sj.index);
      den *= static_cast<long>(sj.index) - static_cast<long>(si.index);
    }
    Bigint mu = num / den;  // exact by construction of delta = N!
    w = w * powm(si.value, 2 * mu, pk.nsq) % pk.nsq;
  }
  // w = c^{4 * delta^2 * d}; recover m = L(w) / (4 * delta^2) mod n.
  Bigint l = fdiv(w - 1, pk.n);
  return l * invmod(4 * delta * delta % pk.n, pk.n) % pk.n;
}

}  // namespace ppshare::paillier
