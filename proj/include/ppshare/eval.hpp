#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ppshare/oracle.hpp"
#include "ppshare/runner.hpp"

// Accuracy, timing, and communication-cost experiments. Ground truth always
// comes from the plaintext oracles over harness-held inputs; the measured
// side always comes from live encrypted computation.

namespace ppshare::eval {

struct MreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mean relative error between recovered and true per-slot aggregates:
/// mean over slots of |recovered - true| / true. Slots whose true aggregate
/// is zero are excluded (the relative error is undefined there).
inline Rat compute_mre(const std::vector<Rat>& recovered, const std::vector<Rat>& truth) {
  if (recovered.size() != truth.size())
    throw MreError("compute_mre: vector lengths differ");
  Rat acc(0);
  long measured = 0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    if (truth[j] == 0) continue;
    Rat diff = recovered[j] - truth[j];
    if (diff < 0) diff = -diff;
    acc += diff / truth[j];
    ++measured;
  }
  if (measured == 0) throw MreError("compute_mre: no slot has a nonzero true aggregate");
  Rat out = acc / measured;
  out.canonicalize();
  return out;
}

struct ExperimentConfig {
  proto::Protocol protocol = proto::Protocol::UFS;
  int users = 20;
  int slots = 48;  // six days of eight timeslots
  Bigint scale = 100;
  Rat threshold_C = Rat(100);
  Rat demand_lo = Rat(10);
  Rat demand_hi = Rat(20);
  unsigned key_bits = 128;
  std::uint64_t seed = 1;
  int repetitions = 20;
  bool measure_traffic = true;  // drive the full protocol for ledger/timing columns
};

struct ExperimentReport {
  proto::Protocol protocol = proto::Protocol::UFS;
  int users = 0;
  int slots = 0;
  Bigint scale;
  Rat threshold_C;
  Rat mre;                       // averaged over repetitions
  std::vector<Rat> mre_per_rep;  // per-seed values
  proto::TimingReport timing;    // averaged over repetitions
  std::size_t total_bytes = 0;   // per single run
  std::size_t total_messages = 0;
};

// ---- random instances (harness-side inputs) ----

inline std::vector<proto::UsageSchedule> random_usage(int users, int slots, Rng& rng) {
  std::vector<proto::UsageSchedule> out;
  for (int i = 1; i <= users; ++i) {
    proto::UsageSchedule s;
    s.user_id = i;
    for (;;) {
      s.bits.clear();
      bool any = false;
      for (int j = 0; j < slots; ++j) {
        auto b = static_cast<std::uint8_t>(rng.below(2).get_ui());
        s.bits.push_back(b);
        any = any || b;
      }
      if (any) break;  // every user requests at least one slot
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Demands are drawn on a 0.1 grid inside [lo, hi], so scales of 10 and
/// above represent them exactly and the zero-error regime is reachable.
inline std::vector<proto::DemandSchedule> random_demands(int users, int slots, const Rat& lo,
                                                         const Rat& hi, Rng& rng) {
  Bigint steps = floor_rat((hi - lo) * 10);
  if (steps < 1) throw std::invalid_argument("random_demands: empty range");
  std::vector<proto::DemandSchedule> out;
  for (int i = 1; i <= users; ++i) {
    proto::DemandSchedule d;
    d.user_id = i;
    for (int j = 0; j < slots; ++j) {
      Rat p = lo + Rat(rng.below(steps + 1), 10);
      p.canonicalize();
      d.demands.push_back(p);
    }
    out.push_back(std::move(d));
  }
  return out;
}

// ---- single-seed measurements ----

struct RunStats {
  proto::TimingReport timing;
  std::size_t bytes = 0;
  std::size_t messages = 0;
};

/// PP-UFS accuracy for one seeded instance: the live run's recovered
/// occupancy (u/S, unscaled with rounding) against the plaintext disjunction.
inline Rat ufs_mre_once(const ExperimentConfig& cfg, std::uint64_t seed, RunStats* stats) {
  net::RunConfig rc;
  rc.protocol = proto::Protocol::UFS;
  rc.users = cfg.users;
  rc.slots = cfg.slots;
  rc.scale = cfg.scale;
  rc.key_bits = cfg.key_bits;
  rc.seed = seed;
  Rng inst = Rng(seed).derive("instance");
  auto schedules = random_usage(cfg.users, cfg.slots, inst);

  net::InProcNetwork netw;
  auto keys = net::provision_keys(rc);
  auto res = net::run_facility(rc, schedules, netw, keys);
  if (stats) {
    stats->timing = res.timing;
    stats->bytes = netw.ledger().total_bytes();
    stats->messages = netw.ledger().total_messages();
  }

  auto truth_c = oracle_or_schedule(schedules);
  std::vector<Rat> recovered, truth;
  for (int j = 0; j < cfg.slots; ++j) {
    recovered.emplace_back(round_div(res.recovered_scaled[static_cast<std::size_t>(j)], cfg.scale));
    truth.emplace_back(truth_c.values[static_cast<std::size_t>(j)]);
  }
  return compute_mre(recovered, truth);
}

/// PP-CSS accuracy for one seeded instance: per-slot aggregate demand
/// recovered through live encryption (encrypt each user's scaled demand,
/// multiply, decrypt, unscale) against the exact plaintext total. When
/// `stats` is requested, the full protocol also runs for traffic and timing.
inline Rat css_mre_once(const ExperimentConfig& cfg, std::uint64_t seed, RunStats* stats) {
  net::RunConfig rc;
  rc.protocol = proto::Protocol::CSS;
  rc.users = cfg.users;
  rc.slots = cfg.slots;
  rc.scale = cfg.scale;
  rc.threshold_C = cfg.threshold_C;
  rc.key_bits = cfg.key_bits;
  rc.seed = seed;
  Rng inst = Rng(seed).derive("instance");
  auto demands = random_demands(cfg.users, cfg.slots, cfg.demand_lo, cfg.demand_hi, inst);

  auto keys = net::provision_keys(rc);
  if (stats) {
    net::InProcNetwork netw;
    auto res = net::run_css(rc, demands, netw, keys);
    stats->timing = res.timing;
    stats->bytes = netw.ledger().total_bytes();
    stats->messages = netw.ledger().total_messages();
  }

  Rng enc = Rng(seed).derive("mre-encrypt");
  const auto truth_demand = oracle_slot_demand(demands);
  std::vector<Rat> recovered, truth;
  for (int j = 0; j < cfg.slots; ++j) {
    paillier::Ciphertext agg{Bigint(1)};
    for (const auto& d : demands) {
      Bigint scaled = floor_rat(cfg.scale * d.demands[static_cast<std::size_t>(j)]);
      agg = paillier::hom_add(keys.pk, agg, paillier::encrypt(keys.pk, scaled, enc));
    }
    Bigint sum = keys.master ? paillier::decrypt(*keys.master, agg) : Bigint(0);
    Rat r(sum, cfg.scale);
    r.canonicalize();
    recovered.push_back(std::move(r));
    truth.push_back(truth_demand[static_cast<std::size_t>(j)]);
  }
  return compute_mre(recovered, truth);
}

/// One grid point, averaged over `repetitions` derived seeds.
inline ExperimentReport run_mre_point(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.protocol = cfg.protocol;
  rep.users = cfg.users;
  rep.slots = cfg.slots;
  rep.scale = cfg.scale;
  rep.threshold_C = cfg.threshold_C;

  Rat acc(0);
  for (int r = 0; r < cfg.repetitions; ++r) {
    const std::uint64_t seed = detail::splitmix64(cfg.seed + static_cast<std::uint64_t>(r));
    RunStats stats;
    RunStats* sp = cfg.measure_traffic && r == 0 ? &stats : nullptr;
    Rat m = cfg.protocol == proto::Protocol::CSS ? css_mre_once(cfg, seed, sp)
                                                 : ufs_mre_once(cfg, seed, sp);
    if (sp) {
      rep.timing = stats.timing;
      rep.total_bytes = stats.bytes;
      rep.total_messages = stats.messages;
    }
    rep.mre_per_rep.push_back(m);
    acc += m;
  }
  rep.mre = acc / cfg.repetitions;
  rep.mre.canonicalize();
  return rep;
}

/// Sweep over scaling factors at fixed N.
inline std::vector<ExperimentReport> run_scale_sweep(const ExperimentConfig& base,
                                                     const std::vector<Bigint>& scales) {
  std::vector<ExperimentReport> out;
  for (const Bigint& s : scales) {
    ExperimentConfig cfg = base;
    cfg.scale = s;
    out.push_back(run_mre_point(cfg));
  }
  return out;
}

/// Sweep over user counts at fixed S.
inline std::vector<ExperimentReport> run_user_sweep(const ExperimentConfig& base,
                                                    const std::vector<int>& user_counts) {
  std::vector<ExperimentReport> out;
  for (int n : user_counts) {
    ExperimentConfig cfg = base;
    cfg.users = n;
    out.push_back(run_mre_point(cfg));
  }
  return out;
}

/// Per-stage timing for one configuration; repeated runs keep the minimum
/// per stage to suppress scheduler noise. MRE is not measured here.
inline ExperimentReport bench_timing(const ExperimentConfig& cfg, int runs = 3) {
  ExperimentReport rep;
  rep.protocol = cfg.protocol;
  rep.users = cfg.users;
  rep.slots = cfg.slots;
  rep.scale = cfg.scale;
  rep.threshold_C = cfg.threshold_C;
  rep.mre = Rat(0);

  for (int r = 0; r < runs; ++r) {
    RunStats stats;
    const std::uint64_t seed = detail::splitmix64(cfg.seed + static_cast<std::uint64_t>(r));
    if (cfg.protocol == proto::Protocol::CSS)
      css_mre_once(cfg, seed, &stats);
    else
      ufs_mre_once(cfg, seed, &stats);
    rep.total_bytes = stats.bytes;
    rep.total_messages = stats.messages;
    for (const auto& [key, secs] : stats.timing.seconds) {
      auto it = rep.timing.seconds.find(key);
      if (it == rep.timing.seconds.end() || secs < it->second) rep.timing.seconds[key] = secs;
    }
  }
  return rep;
}

inline std::string reports_to_csv(const std::vector<ExperimentReport>& reports) {
  std::ostringstream out;
  out << "protocol,N,m,S,C,mre,user_stage1_s,user_stage2_s,operator_stage1_s,"
         "operator_stage2_s,messages,bytes\n";
  for (const auto& r : reports) {
    out << proto::protocol_name(r.protocol) << ',' << r.users << ',' << r.slots << ','
        << r.scale.get_str(10) << ',' << decimal_from_rat(r.threshold_C) << ','
        << decimal_from_rat(r.mre) << ',' << r.timing.get("user.stage1") << ','
        << r.timing.get("user.stage2") << ',' << r.timing.get("operator.stage1") << ','
        << r.timing.get("operator.stage2") << ',' << r.total_messages << ',' << r.total_bytes
        << "\n";
  }
  return out.str();
}

/// Paper-style per-user communication estimate for the first two stages,
/// using the actual key size: UFS/CFS exchange four ciphertexts and two
/// plaintext ring elements per slot, CSS six ciphertexts and one indicator.
inline std::size_t estimate_bytes_per_user(proto::Protocol p, int slots, unsigned key_bits) {
  const std::size_t ct_bits = 2UL * key_bits;
  const std::size_t pt_bits = key_bits;
  std::size_t per_slot_bits = p == proto::Protocol::CSS ? 6 * ct_bits + pt_bits
                                                        : 4 * ct_bits + 2 * pt_bits;
  return static_cast<std::size_t>(slots) * per_slot_bits / 8;
}

}  // namespace ppshare::eval
