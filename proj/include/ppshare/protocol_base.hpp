#pragma once

#include <time.h>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppshare/bigint.hpp"
#include "ppshare/encoding.hpp"
#include "ppshare/paillier.hpp"
#include "ppshare/rng.hpp"
#include "ppshare/threshold.hpp"

namespace ppshare::proto {

enum class KeyMode { Common, Threshold };

struct ProtocolAbort : std::runtime_error {
  std::string stage;
  ProtocolAbort(std::string stage_, const std::string& what)
      : std::runtime_error("protocol abort at stage " + stage_ + ": " + what),
        stage(std::move(stage_)) {}
};

/// Mask magnitude configuration. Defaults keep sums of N masks plus payloads
/// far below n/2 for every supported key size, so additive masking never
/// wraps the plaintext ring.
struct MaskConfig {
  unsigned additive_bits = 64;  // R^j, R_i^j, R^k drawn from [1, 2^bits)
  unsigned probe_bits = 32;     // R^t drawn from [1, 2^bits), strictly positive
};

/// Operator-private randomness, retained so the harness can verify mask
/// cancellation and user blindness after a run. Protocol messages never
/// carry this state.
struct MaskState {
  std::vector<Bigint> slot_masks;                    // R^j per slot
  std::vector<paillier::Ciphertext> slot_mask_cts;   // E[R^j], encrypted by the operator
  std::vector<std::vector<Bigint>> user_slot_masks;  // R_i^j, [user-1][slot-1]
  std::vector<Bigint> probe_masks;                   // R^t per probed slot (CSS)
  std::vector<Bigint> action_masks;                  // R^k per service action (CSS)
  std::map<int, Bigint> access_keys;                 // kappa^j per occupied slot
};

/// What a user holds for decryption: the full private key in common-key mode,
/// one key share in threshold mode.
struct UserKeyMaterial {
  paillier::PublicKey pk;
  std::optional<paillier::PrivateKey> sk;
  std::optional<paillier::KeyShare> share;

  KeyMode mode() const { return sk ? KeyMode::Common : KeyMode::Threshold; }

  /// Decrypts a delivered ciphertext, combining the attached helper partials
  /// with this user's own in threshold mode.
  Bigint open(const paillier::Ciphertext& c,
              const std::vector<paillier::DecryptionShare>& partials) const {
    if (sk) return paillier::decrypt(*sk, c);
    if (!share) throw std::logic_error("user holds no key material");
    std::vector<paillier::DecryptionShare> all = partials;
    all.push_back(paillier::partial_decrypt(*share, c));
    return paillier::combine_shares(pk, all, share->threshold);
  }

  paillier::DecryptionShare help_decrypt(const paillier::Ciphertext& c) const {
    if (!share) throw std::logic_error("help_decrypt requires a key share");
    return paillier::partial_decrypt(*share, c);
  }
};

inline Bigint draw_mask(Rng& rng, unsigned bits) {
  return rng.range(1, Bigint(1) << bits);
}

/// Per-thread CPU time, for the stage timing reports.
inline double cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return double(ts.tv_sec) + double(ts.tv_nsec) * 1e-9;
}

struct TimingReport {
  std::map<std::string, double> seconds;  // e.g. "user.stage1" -> averaged seconds

  void add(const std::string& key, double dt) { seconds[key] += dt; }
  double get(const std::string& key) const {
    auto it = seconds.find(key);
    return it == seconds.end() ? 0.0 : it->second;
  }
  double total() const {
    double t = 0;
    for (const auto& [k, v] : seconds) t += v;
    return t;
  }
};

class StageTimer {
 public:
  StageTimer(TimingReport& report, std::string key)
      : report_(report), key_(std::move(key)), t0_(cpu_seconds()) {}
  ~StageTimer() { report_.add(key_, cpu_seconds() - t0_); }

 private:
  TimingReport& report_;
  std::string key_;
  double t0_;
};

}  // namespace ppshare::proto
