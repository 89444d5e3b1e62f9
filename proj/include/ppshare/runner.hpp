#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ppshare/css.hpp"
#include "ppshare/facility.hpp"
#include "ppshare/threshold.hpp"
#include "ppshare/transport.hpp"

// Drives complete protocol runs over a transport in synchronous rounds. Every
// value that moves between parties moves as a StageMessage, so the ledger and
// trace reflect the full exchange, including threshold-decryption helper
// traffic.

namespace ppshare::net {

struct RunConfig {
  proto::Protocol protocol = proto::Protocol::UFS;
  int users = 0;
  int slots = 0;
  Bigint scale = 100;
  Rat threshold_C = Rat(100);      // CSS service threshold
  std::vector<long> capacities;    // CFS capacity ladder
  proto::KeyMode key_mode = proto::KeyMode::Common;
  unsigned threshold_t = 0;        // t for threshold key mode
  unsigned key_bits = 1024;
  std::uint64_t seed = 1;
  Rat fee_rate = Rat(1);
  std::vector<bool> paid;          // empty means everyone paid
  proto::MaskConfig mask_cfg;

  proto::EstimationFunction estimator() const {
    proto::EstimationFunction f;
    if (protocol == proto::Protocol::CFS)
      f.capacities = capacities;
    else
      f.capacities = {users};  // single tier: f = 1 on occupied slots
    return f;
  }

  bool user_paid(int i) const {
    return paid.empty() || (i >= 1 && i <= static_cast<int>(paid.size()) &&
                            paid[static_cast<std::size_t>(i - 1)]);
  }
};

struct KeyProvision {
  paillier::PublicKey pk;
  std::optional<paillier::PrivateKey> common;
  std::vector<paillier::KeyShare> shares;
  std::optional<paillier::PrivateKey> master;  // harness-side oracle only
  unsigned threshold_t = 0;

  proto::KeyMode mode() const {
    return common ? proto::KeyMode::Common : proto::KeyMode::Threshold;
  }

  proto::UserKeyMaterial user_material(int i) const {
    proto::UserKeyMaterial m;
    m.pk = pk;
    if (common)
      m.sk = *common;
    else
      m.share = shares.at(static_cast<std::size_t>(i - 1));
    return m;
  }
};

/// Keys come from the harness; the seed pins them. The keygen stream is
/// separate from the party streams so key mode never shifts protocol masks.
inline KeyProvision provision_keys(const RunConfig& cfg) {
  Rng kr = Rng(cfg.seed).derive("keygen");
  KeyProvision out;
  if (cfg.key_mode == proto::KeyMode::Common) {
    auto [pk, sk] = paillier::keygen(cfg.key_bits, kr);
    out.pk = pk;
    out.common = sk;
    out.master = std::move(sk);
  } else {
    auto mat = paillier::threshold_keygen(cfg.key_bits, static_cast<unsigned>(cfg.users),
                                          cfg.threshold_t, kr);
    out.pk = mat.pub;
    out.shares = std::move(mat.shares);
    out.master = std::move(mat.master);
    out.threshold_t = cfg.threshold_t;
  }
  return out;
}

/// Test hook: a drop makes the named party skip its sends at one stage, which
/// must surface as a ProtocolAbort naming the blocking stage.
struct FaultInjection {
  int drop_user = 0;
  std::string drop_stage;

  bool drops(int user, const std::string& stage) const {
    return drop_user == user && drop_stage == stage;
  }
};

struct FacilityRunResult {
  proto::CoarseSchedule coarse;
  std::vector<Bigint> recovered_scaled;  // u^j per slot, before unscaling
  Bigint scale;
  std::vector<proto::FacilityUserResult> users;
  proto::MaskState masks;
  proto::TimingReport timing;
  int rounds = 0;
};

struct CssRunResult {
  proto::ServiceActionSchedule schedule;
  std::vector<proto::CssUserResult> users;
  proto::MaskState masks;
  proto::TimingReport timing;
  int rounds = 0;
};

namespace detail {

using proto::PartyId;
using proto::StageMessage;

inline const paillier::Ciphertext& expect_ct(const Delivery& d) {
  if (const auto* p = std::get_if<proto::CtPayload>(&d.message.payload)) return p->ct;
  throw proto::ProtocolAbort(d.message.stage, "expected a ciphertext payload");
}

inline std::pair<paillier::Ciphertext, std::vector<paillier::DecryptionShare>> expect_openable(
    const Delivery& d) {
  if (const auto* p = std::get_if<proto::CtPayload>(&d.message.payload)) return {p->ct, {}};
  if (const auto* p = std::get_if<proto::CtBundlePayload>(&d.message.payload))
    return {p->ct, p->partials};
  throw proto::ProtocolAbort(d.message.stage, "expected a decryptable ciphertext payload");
}

struct PlannedDelivery {
  int recipient = 0;
  int slot = 0;
  paillier::Ciphertext ct;
};

/// Sends operator ciphertexts to users. In threshold mode this first runs the
/// helper exchange: the operator hands the ciphertext to the t-1 lowest-index
/// users other than the recipient, collects their partial decryptions, and
/// attaches them so the recipient can complete the combination with its own
/// share.
template <typename UserParty>
void deliver_ciphertexts(Network& net, proto::Protocol pr, const std::string& stage,
                         std::vector<UserParty>& users, proto::KeyMode mode, unsigned t,
                         const std::vector<PlannedDelivery>& items, proto::TimingReport& timing,
                         int& rounds) {
  const PartyId op = PartyId::operator_id();
  if (mode == proto::KeyMode::Common) {
    for (const auto& it : items)
      net.send(op, PartyId::user(it.recipient),
               StageMessage{pr, stage, it.slot, op, proto::CtPayload{it.ct}});
    ++rounds;
    return;
  }

  const int n = static_cast<int>(users.size());
  std::vector<std::vector<std::size_t>> requested(static_cast<std::size_t>(n) + 1);
  for (std::size_t idx = 0; idx < items.size(); ++idx) {
    unsigned needed = t - 1;
    for (int h = 1; h <= n && needed > 0; ++h) {
      if (h == items[idx].recipient) continue;
      requested[static_cast<std::size_t>(h)].push_back(idx);
      net.send(op, PartyId::user(h),
               StageMessage{pr, "thr.req", items[idx].slot, op, proto::CtPayload{items[idx].ct}});
      --needed;
    }
  }
  ++rounds;

  for (int h = 1; h <= n; ++h) {
    if (requested[static_cast<std::size_t>(h)].empty()) continue;
    auto batch = net.fetch(PartyId::user(h));
    proto::StageTimer timer(timing, "user.threshold_help");
    for (const auto& d : batch) {
      if (d.message.stage != "thr.req")
        throw proto::ProtocolAbort(d.message.stage, "unexpected message during helper round");
      auto share = users[static_cast<std::size_t>(h - 1)].help_decrypt(expect_ct(d));
      net.send(PartyId::user(h), op,
               StageMessage{pr, "thr.part", d.message.slot, PartyId::user(h),
                            proto::PartialSharePayload{share}});
    }
  }
  ++rounds;

  // FIFO per pair lets responses line up with the request order.
  std::vector<std::vector<paillier::DecryptionShare>> per_item(items.size());
  std::vector<std::size_t> cursor(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& d : net.fetch(op)) {
    if (d.message.stage != "thr.part")
      throw proto::ProtocolAbort(d.message.stage, "unexpected message during helper round");
    const auto* p = std::get_if<proto::PartialSharePayload>(&d.message.payload);
    if (!p) throw proto::ProtocolAbort("thr.part", "expected a partial decryption payload");
    const auto h = static_cast<std::size_t>(d.message.sender.index);
    per_item[requested[h][cursor[h]++]].push_back(p->share);
  }

  for (std::size_t idx = 0; idx < items.size(); ++idx) {
    auto partials = per_item[idx];
    std::sort(partials.begin(), partials.end(),
              [](const auto& a, const auto& b) { return a.index < b.index; });
    net.send(op, PartyId::user(items[idx].recipient),
             StageMessage{pr, stage, items[idx].slot, op,
                          proto::CtBundlePayload{items[idx].ct, std::move(partials)}});
  }
  ++rounds;
}

inline void finish_user_timing(proto::TimingReport& timing, int users) {
  for (auto& [key, secs] : timing.seconds)
    if (key.rfind("user.", 0) == 0) secs /= users;
}

}  // namespace detail

inline FacilityRunResult run_facility(const RunConfig& cfg,
                                      const std::vector<proto::UsageSchedule>& schedules,
                                      Network& net, const KeyProvision& keys,
                                      const FaultInjection* fault = nullptr) {
  using detail::PlannedDelivery;
  using proto::PartyId;
  using proto::StageMessage;

  if (cfg.protocol != proto::Protocol::UFS && cfg.protocol != proto::Protocol::CFS)
    throw std::invalid_argument("run_facility expects the ufs or cfs protocol");
  if (static_cast<int>(schedules.size()) != cfg.users)
    throw proto::ScheduleError("schedule row count does not match the user count");
  for (const auto& s : schedules) s.validate(cfg.slots);
  proto::EstimationFunction f = cfg.estimator();
  f.validate(cfg.users);

  const proto::Protocol pr = cfg.protocol;
  const PartyId op_id = PartyId::operator_id();
  Rng master(cfg.seed);

  net.register_party(op_id);
  for (int i = 1; i <= cfg.users; ++i) net.register_party(PartyId::user(i));

  proto::TimingReport timing;
  int rounds = 0;

  proto::FacilityOperator op(cfg.users, cfg.slots, cfg.scale, f, keys.pk, cfg.mask_cfg,
                             master.derive("operator"));
  std::vector<proto::FacilityUser> users;
  users.reserve(static_cast<std::size_t>(cfg.users));
  for (int i = 1; i <= cfg.users; ++i)
    users.emplace_back(i, schedules[static_cast<std::size_t>(i - 1)], keys.user_material(i),
                       cfg.scale, f, cfg.users, cfg.fee_rate,
                       master.derive("user:" + std::to_string(i)));

  {
    proto::StageTimer timer(timing, "operator.stage0");
    op.stage0();
  }

  // Stage 1 (1): every user submits encrypted bits.
  for (int i = 1; i <= cfg.users; ++i) {
    proto::StageTimer timer(timing, "user.stage1");
    auto cts = users[static_cast<std::size_t>(i - 1)].submit();
    if (fault && fault->drops(i, "1.1")) continue;
    for (int j = 1; j <= cfg.slots; ++j)
      net.send(PartyId::user(i), op_id,
               StageMessage{pr, "1.1", j, PartyId::user(i),
                            proto::CtPayload{cts[static_cast<std::size_t>(j - 1)]}});
  }
  ++rounds;

  // Stage 1 (2): masked products back to each user.
  std::vector<PlannedDelivery> stage1_items;
  {
    auto batch = net.fetch(op_id);
    proto::StageTimer timer(timing, "operator.stage1");
    for (const auto& d : batch)
      op.stage1_receive(d.message.sender.index, d.message.slot, detail::expect_ct(d));
    op.stage1_check_complete();
    for (int i = 1; i <= cfg.users; ++i)
      for (int j = 1; j <= cfg.slots; ++j)
        stage1_items.push_back(PlannedDelivery{i, j, op.stage1_product(i, j)});
  }
  detail::deliver_ciphertexts(net, pr, "1.2", users, keys.mode(), keys.threshold_t, stage1_items,
                              timing, rounds);

  // Stage 1 (3): users decrypt their per-slot values.
  for (int i = 1; i <= cfg.users; ++i) {
    auto batch = net.fetch(PartyId::user(i));
    proto::StageTimer timer(timing, "user.stage1");
    for (const auto& d : batch) {
      auto [ct, partials] = detail::expect_openable(d);
      users[static_cast<std::size_t>(i - 1)].receive_stage1(d.message.slot, ct, partials);
    }
  }

  // Stage 2 (1): plaintext masks out to users.
  {
    proto::StageTimer timer(timing, "operator.stage2");
    op.stage2_init();
  }
  for (int i = 1; i <= cfg.users; ++i)
    for (int j = 1; j <= cfg.slots; ++j)
      net.send(op_id, PartyId::user(i),
               StageMessage{pr, "2.1", j, op_id, proto::MaskPayload{op.stage2_mask(i, j)}});
  ++rounds;

  // Stage 2 (2): masked fractional contributions.
  for (int i = 1; i <= cfg.users; ++i) {
    auto batch = net.fetch(PartyId::user(i));
    proto::StageTimer timer(timing, "user.stage2");
    for (const auto& d : batch) {
      const auto* mask = std::get_if<proto::MaskPayload>(&d.message.payload);
      if (!mask) throw proto::ProtocolAbort("2.1", "expected a mask payload");
      auto ct = users[static_cast<std::size_t>(i - 1)].stage2_contribution(d.message.slot,
                                                                           mask->value);
      if (fault && fault->drops(i, "2.2")) continue;
      net.send(PartyId::user(i), op_id,
               StageMessage{pr, "2.2", d.message.slot, PartyId::user(i), proto::CtPayload{ct}});
    }
  }
  ++rounds;

  // Stage 2 (3): per-slot homomorphic product to every user.
  std::vector<PlannedDelivery> stage2_items;
  {
    auto batch = net.fetch(op_id);
    proto::StageTimer timer(timing, "operator.stage2");
    for (const auto& d : batch)
      op.stage2_receive_contribution(d.message.sender.index, d.message.slot,
                                     detail::expect_ct(d));
    for (int j = 1; j <= cfg.slots; ++j) {
      paillier::Ciphertext agg = op.stage2_aggregate(j);
      for (int i = 1; i <= cfg.users; ++i) stage2_items.push_back(PlannedDelivery{i, j, agg});
    }
  }
  detail::deliver_ciphertexts(net, pr, "2.3", users, keys.mode(), keys.threshold_t, stage2_items,
                              timing, rounds);

  // Stage 2 (4): everyone returns the same decrypted value.
  for (int i = 1; i <= cfg.users; ++i) {
    auto batch = net.fetch(PartyId::user(i));
    proto::StageTimer timer(timing, "user.stage2");
    for (const auto& d : batch) {
      auto [ct, partials] = detail::expect_openable(d);
      Bigint joint = users[static_cast<std::size_t>(i - 1)].stage2_open(ct, partials);
      net.send(PartyId::user(i), op_id,
               StageMessage{pr, "2.4", d.message.slot, PartyId::user(i),
                            proto::DecValuePayload{joint}});
    }
  }
  ++rounds;

  // Stage 2 (5): unmask and unscale.
  {
    auto batch = net.fetch(op_id);
    proto::StageTimer timer(timing, "operator.stage2");
    for (const auto& d : batch) {
      const auto* v = std::get_if<proto::DecValuePayload>(&d.message.payload);
      if (!v) throw proto::ProtocolAbort("2.4", "expected a decrypted-value payload");
      op.stage2_receive_decrypted(d.message.sender.index, d.message.slot, v->value);
    }
    op.finalize();
  }

  // Stage 3: access keys for paid users on occupied slots.
  std::vector<PlannedDelivery> stage3_items;
  {
    proto::StageTimer timer(timing, "operator.stage3");
    op.stage3_init();
    for (int j = 1; j <= cfg.slots; ++j)
      for (int i = 1; i <= cfg.users; ++i) {
        if (!cfg.user_paid(i)) continue;
        if (auto ct = op.stage3_key_ciphertext(i, j))
          stage3_items.push_back(PlannedDelivery{i, j, *ct});
      }
  }
  detail::deliver_ciphertexts(net, pr, "3.1", users, keys.mode(), keys.threshold_t, stage3_items,
                              timing, rounds);
  for (int i = 1; i <= cfg.users; ++i) {
    auto batch = net.fetch(PartyId::user(i));
    for (const auto& d : batch) {
      auto [ct, partials] = detail::expect_openable(d);
      users[static_cast<std::size_t>(i - 1)].receive_access_key(d.message.slot, ct, partials);
    }
  }

  if (!net.all_drained())
    throw proto::ProtocolAbort("end", "undelivered messages at protocol completion");

  detail::finish_user_timing(timing, cfg.users);
  FacilityRunResult out;
  out.coarse = op.coarse();
  out.recovered_scaled = op.recovered_scaled();
  out.scale = cfg.scale;
  for (auto& u : users) out.users.push_back(u.result());
  out.masks = op.mask_state();
  out.timing = std::move(timing);
  out.rounds = rounds;
  return out;
}

inline CssRunResult run_css(const RunConfig& cfg, const std::vector<proto::DemandSchedule>& demands,
                            Network& net, const KeyProvision& keys,
                            const FaultInjection* fault = nullptr) {
  using detail::PlannedDelivery;
  using proto::PartyId;
  using proto::StageMessage;

  if (cfg.protocol != proto::Protocol::CSS)
    throw std::invalid_argument("run_css expects the css protocol");
  if (static_cast<int>(demands.size()) != cfg.users)
    throw proto::ScheduleError("demand row count does not match the user count");
  for (const auto& d : demands) d.validate(cfg.slots);
  if (cfg.threshold_C <= 0) throw std::invalid_argument("service threshold must be positive");

  const proto::Protocol pr = proto::Protocol::CSS;
  const PartyId op_id = PartyId::operator_id();
  Rng master(cfg.seed);

  net.register_party(op_id);
  for (int i = 1; i <= cfg.users; ++i) net.register_party(PartyId::user(i));

  proto::TimingReport timing;
  int rounds = 0;

  proto::CssOperator op(cfg.users, cfg.slots, keys.pk, cfg.mask_cfg, master.derive("operator"));
  std::vector<proto::CssUser> users;
  users.reserve(static_cast<std::size_t>(cfg.users));
  for (int i = 1; i <= cfg.users; ++i)
    users.emplace_back(i, demands[static_cast<std::size_t>(i - 1)], keys.user_material(i),
                       cfg.scale, cfg.threshold_C, cfg.users, cfg.fee_rate,
                       master.derive("user:" + std::to_string(i)));

  // Stage 1: one sign probe per timeslot.
  for (int t = 1; t <= cfg.slots; ++t) {
    for (int i = 1; i <= cfg.users; ++i) {
      proto::StageTimer timer(timing, "user.stage1");
      auto ct = users[static_cast<std::size_t>(i - 1)].probe(t);
      if (fault && fault->drops(i, "1.1")) continue;
      net.send(PartyId::user(i), op_id,
               StageMessage{pr, "1.1", t, PartyId::user(i), proto::CtPayload{ct}});
    }
    ++rounds;

    std::vector<PlannedDelivery> probe_items;
    {
      auto batch = net.fetch(op_id);
      proto::StageTimer timer(timing, "operator.stage1");
      std::vector<std::optional<paillier::Ciphertext>> probes(
          static_cast<std::size_t>(cfg.users));
      for (const auto& d : batch)
        probes[static_cast<std::size_t>(d.message.sender.index - 1)] = detail::expect_ct(d);
      std::vector<paillier::Ciphertext> ordered;
      for (int i = 1; i <= cfg.users; ++i) {
        if (!probes[static_cast<std::size_t>(i - 1)])
          throw proto::ProtocolAbort("1.1", "missing probe from user " + std::to_string(i) +
                                                " at slot " + std::to_string(t));
        ordered.push_back(*probes[static_cast<std::size_t>(i - 1)]);
      }
      paillier::Ciphertext bcast = op.probe_aggregate(t, ordered);
      for (int i = 1; i <= cfg.users; ++i) probe_items.push_back(PlannedDelivery{i, t, bcast});
    }
    detail::deliver_ciphertexts(net, pr, "1.2", users, keys.mode(), keys.threshold_t, probe_items,
                                timing, rounds);

    for (int i = 1; i <= cfg.users; ++i) {
      auto batch = net.fetch(PartyId::user(i));
      proto::StageTimer timer(timing, "user.stage1");
      for (const auto& d : batch) {
        auto [ct, partials] = detail::expect_openable(d);
        int ind = users[static_cast<std::size_t>(i - 1)].sign_vote(t, ct, partials);
        net.send(PartyId::user(i), op_id,
                 StageMessage{pr, "1.3", t, PartyId::user(i), proto::IndicatorPayload{ind}});
      }
    }
    ++rounds;

    {
      auto batch = net.fetch(op_id);
      proto::StageTimer timer(timing, "operator.stage1");
      op.reset_votes();
      for (const auto& d : batch) {
        const auto* ind = std::get_if<proto::IndicatorPayload>(&d.message.payload);
        if (!ind) throw proto::ProtocolAbort("1.3", "expected an indicator payload");
        op.receive_vote(d.message.sender.index, t, ind->value);
      }
      op.conclude_probe(t);
    }
  }

  // Stage 2: per-action share exchange.
  const int actions = op.actions();
  for (int k = 1; k <= actions; ++k) {
    for (int i = 1; i <= cfg.users; ++i) {
      proto::StageTimer timer(timing, "user.stage2");
      auto ct = users[static_cast<std::size_t>(i - 1)].stage2_submit(k);
      if (fault && fault->drops(i, "2.1")) continue;
      net.send(PartyId::user(i), op_id,
               StageMessage{pr, "2.1", k, PartyId::user(i), proto::CtPayload{ct}});
    }
    ++rounds;

    paillier::Ciphertext bcast;
    {
      auto batch = net.fetch(op_id);
      proto::StageTimer timer(timing, "operator.stage2");
      for (const auto& d : batch)
        op.stage2_receive_submit(d.message.sender.index, d.message.slot, detail::expect_ct(d));
      bcast = op.stage2_broadcast(k);
    }
    for (int i = 1; i <= cfg.users; ++i)
      net.send(op_id, PartyId::user(i),
               StageMessage{pr, "2.2", k, op_id, proto::CtPayload{bcast}});
    ++rounds;

    for (int i = 1; i <= cfg.users; ++i) {
      auto batch = net.fetch(PartyId::user(i));
      proto::StageTimer timer(timing, "user.stage2");
      for (const auto& d : batch) {
        auto ct = users[static_cast<std::size_t>(i - 1)].stage2_power(k, detail::expect_ct(d));
        net.send(PartyId::user(i), op_id,
                 StageMessage{pr, "2.3", k, PartyId::user(i), proto::CtPayload{ct}});
      }
    }
    ++rounds;

    std::vector<PlannedDelivery> response_items;
    {
      auto batch = net.fetch(op_id);
      proto::StageTimer timer(timing, "operator.stage2");
      for (const auto& d : batch)
        op.stage2_receive_power(d.message.sender.index, d.message.slot, detail::expect_ct(d));
      for (int i = 1; i <= cfg.users; ++i)
        response_items.push_back(PlannedDelivery{i, k, op.stage2_response(i, k)});
    }
    detail::deliver_ciphertexts(net, pr, "2.4", users, keys.mode(), keys.threshold_t,
                                response_items, timing, rounds);

    for (int i = 1; i <= cfg.users; ++i) {
      auto batch = net.fetch(PartyId::user(i));
      proto::StageTimer timer(timing, "user.stage2");
      for (const auto& d : batch) {
        auto [ct, partials] = detail::expect_openable(d);
        users[static_cast<std::size_t>(i - 1)].stage2_finish(k, ct, partials);
      }
    }
  }

  if (!net.all_drained())
    throw proto::ProtocolAbort("end", "undelivered messages at protocol completion");

  detail::finish_user_timing(timing, cfg.users);
  CssRunResult out;
  out.schedule = op.schedule();
  for (auto& u : users) out.users.push_back(u.result());
  out.masks = op.mask_state();
  out.timing = std::move(timing);
  out.rounds = rounds;
  return out;
}

/// One-call entry point: provisions keys from the config seed and runs the
/// configured protocol to its terminal state.
struct RunOutputs {
  std::optional<FacilityRunResult> facility;
  std::optional<CssRunResult> css;
  KeyProvision keys;
};

inline RunOutputs run_to_completion(const RunConfig& cfg,
                                    const std::vector<proto::UsageSchedule>& schedules,
                                    const std::vector<proto::DemandSchedule>& demands,
                                    Network& net) {
  RunOutputs out;
  out.keys = provision_keys(cfg);
  if (cfg.protocol == proto::Protocol::CSS)
    out.css = run_css(cfg, demands, net, out.keys);
  else
    out.facility = run_facility(cfg, schedules, net, out.keys);
  return out;
}

}  // namespace ppshare::net
