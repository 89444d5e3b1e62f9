#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ppshare/bigint.hpp"
#include "ppshare/encoding.hpp"
#include "ppshare/paillier.hpp"
#include "ppshare/protocol_base.hpp"
#include "ppshare/schedule.hpp"

// Facility-sharing state machines. One engine covers both protocols: the
// uncapacitated variant is the capacity ladder (N), whose single tier makes
// f(N^j) = 1 on every occupied slot.

namespace ppshare::proto {

// ---- pure per-step functions ----

/// Stage 1 step 2, one (user, slot) output:
/// (prod_i' E[b_i'^j]) * E[R^j] * E[b_i^j]^{-R^j},
/// a ciphertext of sum(b) + R^j * (1 - b_i^j).
inline paillier::Ciphertext facility_stage1_product(const paillier::PublicKey& pk,
                                                    const paillier::Ciphertext& slot_product,
                                                    const paillier::Ciphertext& masked_slot_random,
                                                    const paillier::Ciphertext& own_submission,
                                                    const Bigint& slot_random) {
  paillier::Ciphertext out = paillier::hom_add(pk, slot_product, masked_slot_random);
  return paillier::hom_add(pk, out, paillier::hom_scale(pk, own_submission, -slot_random));
}

/// Stage 1 step 3: a requesting user reads the concurrent-user count, anyone
/// else keeps an opaque masked value.
inline FacilitySlotResult facility_interpret_stage1(bool requested, const Bigint& value,
                                                    long user_count) {
  if (!requested) return Masked{value};
  if (value < 1 || value > user_count)
    throw ProtocolAbort("1.3", "requesting user decrypted a count outside [1, N]");
  return KnownCount{static_cast<long>(value.get_si())};
}

/// Stage 2 step 2 plaintext: floor(S * f(N^j) / N^j) + R_i^j for requesting
/// users, the bare mask otherwise. Payload and mask share one scaled integer
/// domain; the operator unscales only after removing the mask sum.
inline Bigint facility_stage2_value(bool requested, long user_count_j, int tier,
                                    const Bigint& scale, const Bigint& mask) {
  if (!requested) return mask;
  if (user_count_j < 1) throw std::invalid_argument("stage2 value needs N^j >= 1");
  return fdiv(scale * tier, Bigint(user_count_j)) + mask;
}

struct SlotFinal {
  Bigint unmasked;  // u = D^j - sum_i R_i^j, still scaled
  long coarse = 0;  // round(u / S), clamped to the tier range
};

/// Stage 2 step 5. Rounding (rather than exact comparison) absorbs the
/// floor-division shortfall N^j * floor(S/N^j) <= S.
inline SlotFinal facility_finalize_slot(const Bigint& joint_decrypted, const Bigint& mask_sum,
                                        const Bigint& scale, int max_tier, long user_count) {
  Bigint u = joint_decrypted - mask_sum;
  if (u < 0 || u > scale * max_tier + user_count)
    throw ProtocolAbort("2.5", "unmasked aggregate out of range; run corrupted");
  long c = static_cast<long>(round_div(u, scale).get_si());
  if (c < 0) c = 0;
  if (c > max_tier)
    throw ProtocolAbort("2.5", "coarse value exceeds the capacity ladder");
  return SlotFinal{std::move(u), c};
}

/// Stage 3: E[b]^kappa decrypts to kappa for requesting users and 0 for
/// everyone else.
inline paillier::Ciphertext access_key_ciphertext(const paillier::PublicKey& pk,
                                                  const paillier::Ciphertext& submission,
                                                  const Bigint& kappa) {
  return paillier::hom_scale(pk, submission, kappa);
}

// ---- user party ----

class FacilityUser {
 public:
  FacilityUser(int id, UsageSchedule schedule, UserKeyMaterial keys, Bigint scale,
               EstimationFunction estimator, int user_count, Rat fee_rate, Rng rng)
      : id_(id),
        schedule_(std::move(schedule)),
        keys_(std::move(keys)),
        scale_(std::move(scale)),
        estimator_(std::move(estimator)),
        user_count_(user_count),
        fee_rate_(std::move(fee_rate)),
        rng_(std::move(rng)) {
    slots_.resize(static_cast<std::size_t>(schedule_.slots()));
    counts_.resize(slots_.size(), 0);
  }

  int id() const { return id_; }
  int slots() const { return schedule_.slots(); }
  bool requested(int slot) const { return schedule_.bits[static_cast<std::size_t>(slot - 1)] == 1; }

  /// Stage 1 step 1: fresh encryption of every b_i^j.
  std::vector<paillier::Ciphertext> submit() {
    std::vector<paillier::Ciphertext> out;
    out.reserve(slots_.size());
    for (int j = 1; j <= slots(); ++j)
      out.push_back(paillier::encrypt(keys_.pk, Bigint(requested(j) ? 1 : 0), rng_));
    return out;
  }

  /// Stage 1 step 3.
  void receive_stage1(int slot, const paillier::Ciphertext& ct,
                      const std::vector<paillier::DecryptionShare>& partials) {
    Bigint value = keys_.open(ct, partials);
    auto res = facility_interpret_stage1(requested(slot), value, user_count_);
    if (auto* known = std::get_if<KnownCount>(&res))
      counts_[static_cast<std::size_t>(slot - 1)] = known->count;
    slots_[static_cast<std::size_t>(slot - 1)] = std::move(res);
  }

  /// Stage 2 step 2.
  paillier::Ciphertext stage2_contribution(int slot, const Bigint& mask) {
    long nj = counts_[static_cast<std::size_t>(slot - 1)];
    if (requested(slot) && nj < 1)
      throw ProtocolAbort("2.2", "requesting user lacks N^j from stage 1");
    int tier = requested(slot) ? estimator_.apply(nj) : 0;
    Bigint v = facility_stage2_value(requested(slot), nj, tier, scale_, mask);
    paillier::check_mask_headroom(v, keys_.pk);
    return paillier::encrypt(keys_.pk, v, rng_);
  }

  /// Stage 2 step 4: joint decryption of the slot broadcast.
  Bigint stage2_open(const paillier::Ciphertext& ct,
                     const std::vector<paillier::DecryptionShare>& partials) {
    return keys_.open(ct, partials);
  }

  /// Stage 3: recover the slot access key (0 means not entitled).
  void receive_access_key(int slot, const paillier::Ciphertext& ct,
                          const std::vector<paillier::DecryptionShare>& partials) {
    Bigint kappa = keys_.open(ct, partials);
    if (kappa != 0) access_keys_[slot] = std::move(kappa);
  }

  paillier::DecryptionShare help_decrypt(const paillier::Ciphertext& ct) const {
    return keys_.help_decrypt(ct);
  }

  FacilityUserResult result() const {
    FacilityUserResult r;
    r.user_id = id_;
    r.slots = slots_;
    r.access_keys = access_keys_;
    Rat fee(0);
    for (int j = 1; j <= slots(); ++j) {
      if (!requested(j)) continue;
      long nj = counts_[static_cast<std::size_t>(j - 1)];
      fee += fee_rate_ * Rat(estimator_.apply(nj), nj);
    }
    fee.canonicalize();
    r.fee = fee;
    return r;
  }

 private:
  int id_;
  UsageSchedule schedule_;
  UserKeyMaterial keys_;
  Bigint scale_;
  EstimationFunction estimator_;
  int user_count_;
  Rat fee_rate_;
  Rng rng_;
  std::vector<FacilitySlotResult> slots_;
  std::vector<long> counts_;
  std::map<int, Bigint> access_keys_;
};

// ---- operator party ----

/// The operator's inbound surface takes ciphertexts and jointly decrypted
/// masked values only; no interface exists through which a caller could hand
/// it a plaintext schedule.
class FacilityOperator {
 public:
  FacilityOperator(int users, int slots, Bigint scale, EstimationFunction estimator,
                   paillier::PublicKey pk, MaskConfig mask_cfg, Rng rng)
      : users_(users),
        slots_(slots),
        scale_(std::move(scale)),
        estimator_(std::move(estimator)),
        pk_(std::move(pk)),
        mask_cfg_(mask_cfg),
        rng_(std::move(rng)) {
    submissions_.assign(static_cast<std::size_t>(users_),
                        std::vector<std::optional<paillier::Ciphertext>>(
                            static_cast<std::size_t>(slots_)));
    contributions_ = submissions_;
    joint_values_.assign(static_cast<std::size_t>(users_),
                         std::vector<std::optional<Bigint>>(static_cast<std::size_t>(slots_)));
  }

  /// Stage 0: draw R^j and encrypt it under the group public key.
  void stage0() {
    for (int j = 0; j < slots_; ++j) {
      masks_.slot_masks.push_back(draw_mask(rng_, mask_cfg_.additive_bits));
      masks_.slot_mask_cts.push_back(paillier::encrypt(pk_, masks_.slot_masks.back(), rng_));
    }
  }

  void stage1_receive(int user, int slot, const paillier::Ciphertext& ct) {
    cell(submissions_, user, slot) = ct;
  }

  /// Ensures all N submissions arrived for all m slots.
  void stage1_check_complete() const {
    for (int i = 1; i <= users_; ++i)
      for (int j = 1; j <= slots_; ++j)
        if (!cell(submissions_, i, j))
          throw ProtocolAbort("1.1", "missing submission from user " + std::to_string(i) +
                                         " slot " + std::to_string(j));
  }

  /// Stage 1 step 2 for one (user, slot).
  paillier::Ciphertext stage1_product(int user, int slot) {
    const std::size_t sj = static_cast<std::size_t>(slot - 1);
    if (slot_products_.size() != static_cast<std::size_t>(slots_)) {
      slot_products_.assign(static_cast<std::size_t>(slots_), paillier::Ciphertext{Bigint(1)});
      for (int j = 1; j <= slots_; ++j) {
        paillier::Ciphertext prod{Bigint(1)};
        for (int i = 1; i <= users_; ++i)
          prod = paillier::hom_add(pk_, prod, *cell(submissions_, i, j));
        slot_products_[static_cast<std::size_t>(j - 1)] = prod;
      }
    }
    return facility_stage1_product(pk_, slot_products_[sj], masks_.slot_mask_cts[sj],
                                   *cell(submissions_, user, slot), masks_.slot_masks[sj]);
  }

  /// Stage 2 step 1: per-user per-slot additive masks.
  void stage2_init() {
    masks_.user_slot_masks.assign(static_cast<std::size_t>(users_), {});
    for (int i = 0; i < users_; ++i)
      for (int j = 0; j < slots_; ++j)
        masks_.user_slot_masks[static_cast<std::size_t>(i)].push_back(
            draw_mask(rng_, mask_cfg_.additive_bits));
  }

  const Bigint& stage2_mask(int user, int slot) const {
    return masks_.user_slot_masks[static_cast<std::size_t>(user - 1)]
                                 [static_cast<std::size_t>(slot - 1)];
  }

  Bigint stage2_mask_sum(int slot) const {
    Bigint s(0);
    for (int i = 1; i <= users_; ++i) s += stage2_mask(i, slot);
    return s;
  }

  void stage2_receive_contribution(int user, int slot, const paillier::Ciphertext& ct) {
    cell(contributions_, user, slot) = ct;
  }

  /// Stage 2 step 3: homomorphic product of all contributions for a slot.
  paillier::Ciphertext stage2_aggregate(int slot) {
    for (int i = 1; i <= users_; ++i)
      if (!cell(contributions_, i, slot))
        throw ProtocolAbort("2.2", "missing stage-2 contribution from user " + std::to_string(i) +
                                       " slot " + std::to_string(slot));
    paillier::Ciphertext prod{Bigint(1)};
    for (int i = 1; i <= users_; ++i)
      prod = paillier::hom_add(pk_, prod, *cell(contributions_, i, slot));
    return prod;
  }

  void stage2_receive_decrypted(int user, int slot, const Bigint& joint_value) {
    joint_values_[static_cast<std::size_t>(user - 1)][static_cast<std::size_t>(slot - 1)] =
        joint_value;
  }

  /// Stage 2 step 5 over all slots: unanimity check, unmask, unscale.
  void finalize() {
    coarse_.values.clear();
    recovered_.clear();
    for (int j = 1; j <= slots_; ++j) {
      std::optional<Bigint> agreed;
      for (int i = 1; i <= users_; ++i) {
        const auto& v = joint_values_[static_cast<std::size_t>(i - 1)]
                                     [static_cast<std::size_t>(j - 1)];
        if (!v)
          throw ProtocolAbort("2.4", "missing decrypted value from user " + std::to_string(i));
        if (!agreed)
          agreed = *v;
        else if (*agreed != *v)
          throw ProtocolAbort("2.4", "users returned conflicting decrypted values");
      }
      auto fin = facility_finalize_slot(*agreed, stage2_mask_sum(j), scale_,
                                        estimator_.tiers(), users_);
      coarse_.values.push_back(fin.coarse);
      recovered_.push_back(std::move(fin.unmasked));
    }
  }

  /// Stage 3: draw per-slot access keys for occupied slots.
  void stage3_init() {
    for (int j = 1; j <= slots_; ++j)
      if (coarse_.values[static_cast<std::size_t>(j - 1)] > 0)
        masks_.access_keys[j] = rng_.range(1, pk_.half_n());
  }

  /// Key ciphertext for one user and occupied slot.
  std::optional<paillier::Ciphertext> stage3_key_ciphertext(int user, int slot) {
    auto it = masks_.access_keys.find(slot);
    if (it == masks_.access_keys.end()) return std::nullopt;
    return access_key_ciphertext(pk_, *cell(submissions_, user, slot), it->second);
  }

  const CoarseSchedule& coarse() const { return coarse_; }
  const std::vector<Bigint>& recovered_scaled() const { return recovered_; }
  const Bigint& scale() const { return scale_; }
  /// Simulation-side audit access; not part of any message flow.
  const MaskState& mask_state() const { return masks_; }

 private:
  template <typename T>
  static std::optional<T>& cell(std::vector<std::vector<std::optional<T>>>& grid, int user,
                                int slot) {
    return grid[static_cast<std::size_t>(user - 1)][static_cast<std::size_t>(slot - 1)];
  }
  template <typename T>
  static const std::optional<T>& cell(const std::vector<std::vector<std::optional<T>>>& grid,
                                      int user, int slot) {
    return grid[static_cast<std::size_t>(user - 1)][static_cast<std::size_t>(slot - 1)];
  }

  int users_, slots_;
  Bigint scale_;
  EstimationFunction estimator_;
  paillier::PublicKey pk_;
  MaskConfig mask_cfg_;
  Rng rng_;
  MaskState masks_;
  std::vector<std::vector<std::optional<paillier::Ciphertext>>> submissions_;
  std::vector<std::vector<std::optional<paillier::Ciphertext>>> contributions_;
  std::vector<paillier::Ciphertext> slot_products_;
  std::vector<std::vector<std::optional<Bigint>>> joint_values_;
  CoarseSchedule coarse_;
  std::vector<Bigint> recovered_;
};

}  // namespace ppshare::proto
