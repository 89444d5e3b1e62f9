#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include "ppshare/bigint.hpp"

namespace ppshare {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Seedable random stream. Every random draw in the library flows through a
/// handle like this one; equal seeds give equal draw sequences, which is what
/// makes whole protocol runs replayable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(new State), seed_(seed) {
    gmp_randinit_mt(state_->st);
    gmp_randseed_ui(state_->st, static_cast<unsigned long>(seed));
  }

  Rng(Rng&&) noexcept = default;
  Rng& operator=(Rng&&) noexcept = default;
  Rng(const Rng&) = delete;
  Rng& operator=(const Rng&) = delete;

  std::uint64_t seed() const { return seed_; }

  /// Independent stream derived from this one's seed and a label. Derivation
  /// depends only on (seed, tag), not on how much this stream has been used.
  Rng derive(const std::string& tag) const {
    return Rng(detail::splitmix64(seed_ ^ detail::fnv1a64(tag)));
  }

  /// Uniform in [0, 2^nbits).
  Bigint bits(mp_bitcnt_t nbits) {
    Bigint r;
    mpz_urandomb(r.get_mpz_t(), state_->st, nbits);
    return r;
  }

  /// Uniform in [0, bound).
  Bigint below(const Bigint& bound) {
    if (bound <= 0) throw std::invalid_argument("Rng::below: bound must be positive");
    Bigint r;
    mpz_urandomm(r.get_mpz_t(), state_->st, bound.get_mpz_t());
    return r;
  }

  /// Uniform in [lo, hi).
  Bigint range(const Bigint& lo, const Bigint& hi) {
    if (hi <= lo) throw std::invalid_argument("Rng::range: empty range");
    return lo + below(hi - lo);
  }

  std::uint64_t u64() {
    static_assert(sizeof(unsigned long) == 8, "expects 64-bit unsigned long");
    return static_cast<std::uint64_t>(bits(64).get_ui());
  }

 private:
  struct State {
    gmp_randstate_t st;
    ~State() { gmp_randclear(st); }
  };
  std::unique_ptr<State> state_;
  std::uint64_t seed_;
};

}  // namespace ppshare
