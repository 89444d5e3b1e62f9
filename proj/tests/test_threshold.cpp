#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "ppshare/threshold.hpp"

using namespace ppshare;
using namespace ppshare::paillier;

namespace {
std::vector<DecryptionShare> partials(const ThresholdKeyMaterial& mat,
                                      const std::vector<unsigned>& idx, const Ciphertext& c) {
  std::vector<DecryptionShare> out;
  for (unsigned i : idx) out.push_back(partial_decrypt(mat.shares[i - 1], c));
  return out;
}
}  // namespace

TEST_CASE("parameter validation, including the small-N rule") {
  CHECK_THROWS_AS(validate_threshold_params(2, 1), std::invalid_argument);
  CHECK_THROWS_AS(validate_threshold_params(3, 2), std::invalid_argument);
  CHECK_NOTHROW(validate_threshold_params(3, 3));
  CHECK_NOTHROW(validate_threshold_params(2, 2));
  CHECK_THROWS_AS(validate_threshold_params(5, 0), std::invalid_argument);
  CHECK_THROWS_AS(validate_threshold_params(5, 6), std::invalid_argument);
  Rng rng(5);
  CHECK_THROWS_AS(threshold_keygen(128, 2, 1, rng), std::invalid_argument);
}

TEST_CASE("every t-subset of a (5,3) instance matches plain decryption") {
  Rng rng(11);
  auto mat = threshold_keygen(128, 5, 3, rng);
  Bigint m(424242);
  Ciphertext c = encrypt(mat.pub, m, rng);
  CHECK(decrypt(mat.master, c) == m);

  for (unsigned a = 1; a <= 5; ++a)
    for (unsigned b = a + 1; b <= 5; ++b)
      for (unsigned d = b + 1; d <= 5; ++d)
        CHECK(combine_shares(mat.pub, partials(mat, {a, b, d}, c), 3) == m);
}

TEST_CASE("share-set independence and full-set redundancy") {
  Rng rng(12);
  auto mat = threshold_keygen(128, 5, 3, rng);
  Bigint m(99991);
  Ciphertext c = encrypt(mat.pub, m, rng);
  CHECK(combine_shares(mat.pub, partials(mat, {1, 2, 3}, c), 3) ==
        combine_shares(mat.pub, partials(mat, {2, 4, 5}, c), 3));
  CHECK(combine_shares(mat.pub, partials(mat, {1, 2, 3, 4, 5}, c), 3) == m);
}

TEST_CASE("below-threshold combinations do not recover the plaintext") {
  Rng rng(13);
  auto mat = threshold_keygen(128, 5, 3, rng);
  for (int trial = 0; trial < 10; ++trial) {
    Bigint m = rng.below(mat.pub.n / 4);
    Ciphertext c = encrypt(mat.pub, m, rng);
    // two shares, force-combined as if the threshold were 2
    CHECK(combine_shares(mat.pub, partials(mat, {1, 2}, c), 2) != m);
    // and an honest call with too few shares refuses outright
    CHECK_THROWS_AS(combine_shares(mat.pub, partials(mat, {1, 2}, c), 3), std::invalid_argument);
  }
}

TEST_CASE("partial decryption tags the share index") {
  Rng rng(14);
  auto mat = threshold_keygen(128, 4, 4, rng);
  Ciphertext c = encrypt(mat.pub, Bigint(5), rng);
  for (unsigned i = 1; i <= 4; ++i) {
    auto ds = partial_decrypt(mat.shares[i - 1], c);
    CHECK(ds.index == i);
    CHECK(ds.parties == 4);
  }
}

TEST_CASE("partial shares of E(0) combine to 0 and E(42) to 42") {
  Rng rng(15);
  auto mat = threshold_keygen(128, 5, 3, rng);
  CHECK(combine_shares(mat.pub, partials(mat, {1, 2, 3}, encrypt(mat.pub, Bigint(0), rng)), 3) ==
        0);
  CHECK(combine_shares(mat.pub, partials(mat, {3, 4, 5}, encrypt(mat.pub, Bigint(42), rng)), 3) ==
        42);
}

TEST_CASE("duplicate share indices are rejected") {
  Rng rng(16);
  auto mat = threshold_keygen(128, 5, 3, rng);
  Ciphertext c = encrypt(mat.pub, Bigint(1), rng);
  auto ps = partials(mat, {1, 2}, c);
  ps.push_back(partial_decrypt(mat.shares[0], c));
  CHECK_THROWS_AS(combine_shares(mat.pub, ps, 3), std::invalid_argument);
}

TEST_CASE("threshold decryption preserves homomorphic sums") {
  Rng rng(17);
  auto mat = threshold_keygen(128, 5, 3, rng);
  Ciphertext c =
      hom_add(mat.pub, encrypt(mat.pub, Bigint(20), rng), encrypt(mat.pub, Bigint(22), rng));
  CHECK(combine_shares(mat.pub, partials(mat, {2, 3, 4}, c), 3) == 42);
}
