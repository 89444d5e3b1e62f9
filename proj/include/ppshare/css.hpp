#pragma once

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ppshare/bigint.hpp"
#include "ppshare/encoding.hpp"
#include "ppshare/paillier.hpp"
#include "ppshare/protocol_base.hpp"
#include "ppshare/schedule.hpp"

// Communal-service-sharing state machines. Stage 1 walks the timeslots with
// sign probes: users encrypt window demand minus C/N, the operator blinds the
// aggregate with a positive factor, and unanimous sign votes fix the service
// actions. Stage 2 lets every active user privately recover the action's
// total demand and with it their own cost fraction.

namespace ppshare::proto {

// ---- pure per-step functions ----

/// Probe plaintext for window (l, t]: sum of the user's scaled demands in the
/// window minus floor(S*C/N), signed.
inline Bigint css_probe_value(const std::vector<Bigint>& scaled_demands, int window_start, int t,
                              const Bigint& scaled_share_of_threshold) {
  if (window_start < 0 || t <= window_start ||
      t > static_cast<int>(scaled_demands.size()))
    throw std::invalid_argument("css_probe_value: window out of range");
  Bigint acc(0);
  for (int j = window_start + 1; j <= t; ++j) acc += scaled_demands[static_cast<std::size_t>(j - 1)];
  return acc - scaled_share_of_threshold;
}

/// (prod_i E_i)^{R^t}: multiplies the aggregate by a strictly positive blind,
/// preserving its sign.
inline paillier::Ciphertext css_probe_aggregate(const paillier::PublicKey& pk,
                                                const std::vector<paillier::Ciphertext>& probes,
                                                const Bigint& positive_blind) {
  if (positive_blind <= 0)
    throw std::invalid_argument("probe blind must be strictly positive");
  paillier::Ciphertext prod{Bigint(1)};
  for (const auto& c : probes) prod = paillier::hom_add(pk, prod, c);
  return paillier::hom_scale(pk, prod, positive_blind);
}

/// 1(D >= 0) after signed decoding.
inline int css_sign_indicator(const Bigint& signed_value) { return signed_value >= 0 ? 1 : 0; }

// ---- user party ----

class CssUser {
 public:
  CssUser(int id, DemandSchedule demands, UserKeyMaterial keys, Bigint scale, Rat threshold_C,
          int user_count, Rat fee_rate, Rng rng)
      : id_(id),
        keys_(std::move(keys)),
        scale_(std::move(scale)),
        fee_rate_(std::move(fee_rate)),
        rng_(std::move(rng)) {
    for (const Rat& p : demands.demands) scaled_.push_back(floor_rat(scale_ * p));
    // floor(S * C / N), each user's encoded share of the service threshold
    Rat share = threshold_C / user_count;
    scaled_threshold_share_ = floor_rat(scale_ * share);
  }

  int id() const { return id_; }
  int slots() const { return static_cast<int>(scaled_.size()); }
  const std::vector<Bigint>& scaled_demands() const { return scaled_; }

  /// Stage 1 step 1: probe for the current window (l, t].
  paillier::Ciphertext probe(int t) {
    Bigint v = css_probe_value(scaled_, window_start_, t, scaled_threshold_share_);
    paillier::check_mask_headroom(v, keys_.pk);
    return paillier::encrypt(keys_.pk, paillier::encode_signed_int(v, keys_.pk), rng_);
  }

  /// Stage 1 step 3: decode the blinded aggregate, vote on its sign, and
  /// advance the window when the action fires.
  int sign_vote(int t, const paillier::Ciphertext& ct,
                const std::vector<paillier::DecryptionShare>& partials) {
    Bigint v = paillier::decode_signed_int(keys_.open(ct, partials), keys_.pk);
    int ind = css_sign_indicator(v);
    if (ind == 1) {
      actions_.push_back(t);
      window_start_ = t;
    }
    return ind;
  }

  const std::vector<int>& actions() const { return actions_; }

  /// P_i^k in the scaled domain.
  Bigint action_total(int k) const {
    int l = k == 1 ? 0 : actions_[static_cast<std::size_t>(k - 2)];
    int r = actions_[static_cast<std::size_t>(k - 1)];
    Bigint acc(0);
    for (int j = l + 1; j <= r; ++j) acc += scaled_[static_cast<std::size_t>(j - 1)];
    return acc;
  }

  /// Stage 2 step 1.
  paillier::Ciphertext stage2_submit(int k) {
    Bigint p = action_total(k);
    paillier::check_mask_headroom(p, keys_.pk);
    return paillier::encrypt(keys_.pk, p, rng_);
  }

  /// Stage 2 step 3: broadcast^{P_i^k} * E[0]. The fresh zero encryption
  /// re-randomizes, so the operator cannot recognize P_i^k = 1.
  paillier::Ciphertext stage2_power(int k, const paillier::Ciphertext& broadcast) {
    paillier::Ciphertext powered = paillier::hom_scale(keys_.pk, broadcast, action_total(k));
    return paillier::hom_add(keys_.pk, powered, paillier::encrypt(keys_.pk, Bigint(0), rng_));
  }

  /// Stage 2 step 5: decrypt P_i^k * sum(P), divide out own total, unscale.
  void stage2_finish(int k, const paillier::Ciphertext& ct,
                     const std::vector<paillier::DecryptionShare>& partials) {
    Bigint v = keys_.open(ct, partials);
    Bigint p = action_total(k);
    if (fractions_.size() < static_cast<std::size_t>(k)) {
      fractions_.resize(static_cast<std::size_t>(k), Rat(0));
      totals_.resize(static_cast<std::size_t>(k), Bigint(0));
    }
    totals_[static_cast<std::size_t>(k - 1)] = p;
    if (p == 0) {
      if (v != 0)
        throw ProtocolAbort("2.5", "inactive user decrypted a nonzero stage-2 value");
      fractions_[static_cast<std::size_t>(k - 1)] = Rat(0);
      return;
    }
    if (v % p != 0)
      throw ProtocolAbort("2.5", "stage-2 value not divisible by the user's demand total");
    Bigint sum = v / p;
    Rat q(p, sum);
    q.canonicalize();
    fractions_[static_cast<std::size_t>(k - 1)] = q;
  }

  paillier::DecryptionShare help_decrypt(const paillier::Ciphertext& ct) const {
    return keys_.help_decrypt(ct);
  }

  CssUserResult result() const {
    CssUserResult r;
    r.user_id = id_;
    r.fractions = fractions_;
    r.scaled_totals = totals_;
    Rat fee(0);
    for (const Rat& q : fractions_) fee += fee_rate_ * q;
    fee.canonicalize();
    r.fee = fee;
    return r;
  }

 private:
  int id_;
  UserKeyMaterial keys_;
  Bigint scale_;
  Rat fee_rate_;
  Rng rng_;
  std::vector<Bigint> scaled_;
  Bigint scaled_threshold_share_;
  int window_start_ = 0;
  std::vector<int> actions_;
  std::vector<Rat> fractions_;
  std::vector<Bigint> totals_;
};

// ---- operator party ----

/// Inbound surface: probe ciphertexts, indicator bits, stage-2 ciphertexts.
/// The schedule is all the operator ever learns.
class CssOperator {
 public:
  CssOperator(int users, int slots, paillier::PublicKey pk, MaskConfig mask_cfg, Rng rng)
      : users_(users), slots_(slots), pk_(std::move(pk)), mask_cfg_(mask_cfg), rng_(std::move(rng)) {}

  /// Stage 1 step 2: blind and broadcast the probe aggregate for slot t.
  paillier::Ciphertext probe_aggregate(int t, const std::vector<paillier::Ciphertext>& probes) {
    if (static_cast<int>(probes.size()) != users_)
      throw ProtocolAbort("1.1", "missing probe ciphertexts at slot " + std::to_string(t));
    Bigint blind = draw_mask(rng_, mask_cfg_.probe_bits);
    masks_.probe_masks.push_back(blind);
    return css_probe_aggregate(pk_, probes, blind);
  }

  void receive_vote(int user, int t, int indicator) {
    if (indicator != 0 && indicator != 1)
      throw ProtocolAbort("1.3", "indicator bit must be 0 or 1");
    votes_[static_cast<std::size_t>(user - 1)] = indicator;
  }

  void reset_votes() { votes_.assign(static_cast<std::size_t>(users_), -1); }

  /// Stage 1 step 4: unanimity check; records the action when votes say the
  /// accumulated demand reached the threshold.
  bool conclude_probe(int t) {
    int first = -1;
    for (int i = 1; i <= users_; ++i) {
      int v = votes_[static_cast<std::size_t>(i - 1)];
      if (v < 0)
        throw ProtocolAbort("1.3", "missing sign vote from user " + std::to_string(i));
      if (first < 0) first = v;
      if (v != first)
        throw ProtocolAbort("1.3", "users disagree on the probe sign; run corrupted");
    }
    last_vote_ = first;
    if (first == 1) schedule_.action_slots.push_back(t);
    if (t == slots_) schedule_.residual_unserved = first == 0;
    return first == 1;
  }

  const ServiceActionSchedule& schedule() const { return schedule_; }
  int actions() const { return static_cast<int>(schedule_.action_slots.size()); }

  /// Stage 2 step 1 intake.
  void stage2_receive_submit(int user, int k, const paillier::Ciphertext& ct) {
    grid(submissions_, user, k) = ct;
  }

  /// Stage 2 step 2: (prod E[P_i'^k]) * E[R^k], one broadcast per action.
  paillier::Ciphertext stage2_broadcast(int k) {
    paillier::Ciphertext prod{Bigint(1)};
    for (int i = 1; i <= users_; ++i) {
      const auto& c = grid(submissions_, i, k);
      if (!c)
        throw ProtocolAbort("2.1", "missing stage-2 submission from user " + std::to_string(i));
      prod = paillier::hom_add(pk_, prod, *c);
    }
    Bigint rk = draw_mask(rng_, mask_cfg_.additive_bits);
    masks_.action_masks.push_back(rk);
    return paillier::hom_add(pk_, prod, paillier::encrypt(pk_, rk, rng_));
  }

  void stage2_receive_power(int user, int k, const paillier::Ciphertext& ct) {
    grid(powered_, user, k) = ct;
  }

  /// Stage 2 step 4: multiply by E[P_i^k]^{-R^k} to cancel the blind.
  paillier::Ciphertext stage2_response(int user, int k) {
    const auto& pw = grid(powered_, user, k);
    if (!pw)
      throw ProtocolAbort("2.3", "missing powered ciphertext from user " + std::to_string(user));
    const Bigint& rk = masks_.action_masks[static_cast<std::size_t>(k - 1)];
    paillier::Ciphertext cancel =
        paillier::hom_scale(pk_, *grid(submissions_, user, k), -rk);
    return paillier::hom_add(pk_, *pw, cancel);
  }

  /// Simulation-side audit access; not part of any message flow.
  const MaskState& mask_state() const { return masks_; }

 private:
  std::optional<paillier::Ciphertext>& grid(
      std::vector<std::vector<std::optional<paillier::Ciphertext>>>& g, int user, int k) {
    if (g.size() < static_cast<std::size_t>(users_))
      g.assign(static_cast<std::size_t>(users_), {});
    auto& row = g[static_cast<std::size_t>(user - 1)];
    if (row.size() < static_cast<std::size_t>(k)) row.resize(static_cast<std::size_t>(k));
    return row[static_cast<std::size_t>(k - 1)];
  }

  int users_, slots_;
  paillier::PublicKey pk_;
  MaskConfig mask_cfg_;
  Rng rng_;
  MaskState masks_;
  std::vector<int> votes_;
  int last_vote_ = -1;
  ServiceActionSchedule schedule_;
  std::vector<std::vector<std::optional<paillier::Ciphertext>>> submissions_;
  std::vector<std::vector<std::optional<paillier::Ciphertext>>> powered_;
};

}  // namespace ppshare::proto
