#pragma once

#include <stdexcept>
#include <vector>

#include "ppshare/bigint.hpp"
#include "ppshare/schedule.hpp"

namespace ppshare::eval {

// Plaintext brute-force ground truth. These functions read only harness-held
// inputs and never touch protocol state; every derived expectation in the
// test suites comes from here.

/// N^j = sum_i b_i^j per slot.
inline std::vector<long> oracle_counts(const std::vector<proto::UsageSchedule>& schedules) {
  if (schedules.empty()) throw std::invalid_argument("oracle_counts: no schedules");
  std::vector<long> counts(schedules.front().bits.size(), 0);
  for (const auto& s : schedules) {
    if (s.bits.size() != counts.size())
      throw std::invalid_argument("oracle_counts: ragged schedules");
    for (std::size_t j = 0; j < counts.size(); ++j) counts[j] += s.bits[j];
  }
  return counts;
}

/// c^j = OR_i b_i^j.
inline proto::CoarseSchedule oracle_or_schedule(const std::vector<proto::UsageSchedule>& schedules) {
  proto::CoarseSchedule out;
  for (long c : oracle_counts(schedules)) out.values.push_back(c > 0 ? 1 : 0);
  return out;
}

/// c~^j = f(N^j), with 0 on empty slots.
inline proto::CoarseSchedule oracle_tier_schedule(const std::vector<proto::UsageSchedule>& schedules,
                                                  const proto::EstimationFunction& f) {
  proto::CoarseSchedule out;
  for (long c : oracle_counts(schedules)) out.values.push_back(f.apply(c));
  return out;
}

/// Total demand per slot across users, exact.
inline std::vector<Rat> oracle_slot_demand(const std::vector<proto::DemandSchedule>& demands) {
  if (demands.empty()) throw std::invalid_argument("oracle_slot_demand: no demands");
  std::vector<Rat> total(demands.front().demands.size(), Rat(0));
  for (const auto& d : demands) {
    if (d.demands.size() != total.size())
      throw std::invalid_argument("oracle_slot_demand: ragged demands");
    for (std::size_t j = 0; j < total.size(); ++j) total[j] += d.demands[j];
  }
  return total;
}

/// Service-action sweep: walk slots accumulating total demand since the last
/// action; an action fires as soon as the accumulation reaches C (boundary
/// inclusive). Residual demand after the final action schedules nothing.
inline proto::ServiceActionSchedule oracle_service_schedule(
    const std::vector<proto::DemandSchedule>& demands, const Rat& threshold_C) {
  proto::ServiceActionSchedule out;
  const auto slot_total = oracle_slot_demand(demands);
  Rat acc(0);
  for (std::size_t t = 0; t < slot_total.size(); ++t) {
    acc += slot_total[t];
    if (acc >= threshold_C) {
      out.action_slots.push_back(static_cast<int>(t) + 1);
      acc = 0;
    }
  }
  out.residual_unserved = acc > 0;
  return out;
}

/// P_i^k = user i's demand inside the k-th action window.
inline std::vector<std::vector<Rat>> oracle_action_demand(
    const std::vector<proto::DemandSchedule>& demands,
    const proto::ServiceActionSchedule& schedule) {
  std::vector<std::vector<Rat>> per_user(demands.size());
  for (std::size_t i = 0; i < demands.size(); ++i) {
    int prev = 0;
    for (int sk : schedule.action_slots) {
      Rat acc(0);
      for (int j = prev + 1; j <= sk; ++j) acc += demands[i].demands[static_cast<std::size_t>(j - 1)];
      per_user[i].push_back(acc);
      prev = sk;
    }
  }
  return per_user;
}

/// q_i^k = P_i^k / sum_i' P_i'^k, zero when the user sat out the action.
inline std::vector<std::vector<Rat>> oracle_fractions(
    const std::vector<proto::DemandSchedule>& demands,
    const proto::ServiceActionSchedule& schedule) {
  const auto per_user = oracle_action_demand(demands, schedule);
  const std::size_t actions = schedule.action_slots.size();
  std::vector<Rat> totals(actions, Rat(0));
  for (const auto& row : per_user)
    for (std::size_t k = 0; k < actions; ++k) totals[k] += row[k];
  std::vector<std::vector<Rat>> q(demands.size(), std::vector<Rat>(actions, Rat(0)));
  for (std::size_t i = 0; i < per_user.size(); ++i)
    for (std::size_t k = 0; k < actions; ++k)
      if (per_user[i][k] > 0) q[i][k] = per_user[i][k] / totals[k];
  return q;
}

}  // namespace ppshare::eval
