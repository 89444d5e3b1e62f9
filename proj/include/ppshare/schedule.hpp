#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ppshare/bigint.hpp"

namespace ppshare::proto {

struct ScheduleError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CapacityExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Binary usage schedule of one user (facility sharing).
struct UsageSchedule {
  int user_id = 0;
  std::vector<std::uint8_t> bits;

  int slots() const { return static_cast<int>(bits.size()); }

  void validate(int expected_slots) const {
    if (slots() != expected_slots)
      throw ScheduleError("usage schedule has wrong slot count");
    bool any = false;
    for (auto b : bits) {
      if (b > 1) throw ScheduleError("usage schedule entries must be 0 or 1");
      any = any || b == 1;
    }
    if (!any) throw ScheduleError("usage schedule must request at least one slot");
  }
};

/// Real-valued demand schedule of one user (communal service sharing).
/// Demands are exact rationals so scaled arithmetic stays reproducible.
struct DemandSchedule {
  int user_id = 0;
  std::vector<Rat> demands;

  int slots() const { return static_cast<int>(demands.size()); }

  void validate(int expected_slots) const {
    if (slots() != expected_slots)
      throw ScheduleError("demand schedule has wrong slot count");
    bool any = false;
    for (const Rat& p : demands) {
      if (p < 0) throw ScheduleError("demands must be non-negative");
      any = any || p > 0;
    }
    if (!any) throw ScheduleError("demand schedule must have a positive entry");
  }
};

/// Capacity ladder C_1 < C_2 < ... < C_r with implicit C_0 = 0. Maps an
/// occupant count to the smallest tier that covers it; 0 means empty.
struct EstimationFunction {
  std::vector<long> capacities;

  void validate(long user_count) const {
    if (capacities.empty()) throw ScheduleError("capacity ladder must be non-empty");
    long prev = 0;
    for (long c : capacities) {
      if (c <= prev) throw ScheduleError("capacities must be strictly increasing and positive");
      prev = c;
    }
    if (capacities.back() > user_count)
      throw ScheduleError("largest capacity exceeds the user count");
  }

  int tiers() const { return static_cast<int>(capacities.size()); }

  int apply(long x) const {
    if (x == 0) return 0;  // empty slot: no facility required
    long prev = 0;
    for (int r = 0; r < tiers(); ++r) {
      if (prev < x && x <= capacities[r]) return r + 1;
      prev = capacities[r];
    }
    throw CapacityExceeded("occupant count " + std::to_string(x) +
                           " exceeds the largest capacity");
  }
};

/// Per-slot result delivered to one facility-sharing user: the concurrent
/// user count for requested slots, an opaque masked value otherwise.
struct KnownCount {
  long count = 0;
  friend bool operator==(const KnownCount&, const KnownCount&) = default;
};
struct Masked {
  Bigint raw;
  friend bool operator==(const Masked&, const Masked&) = default;
};
using FacilitySlotResult = std::variant<KnownCount, Masked>;

struct FacilityUserResult {
  int user_id = 0;
  std::vector<FacilitySlotResult> slots;
  Rat fee;                            // sum over requested slots of rate * f(N^j)/N^j
  std::map<int, Bigint> access_keys;  // slot -> recovered key (requested slots only)
};

struct CoarseSchedule {
  std::vector<long> values;  // c^j in {0,1} for UFS, tiers {0..r} for CFS
  friend bool operator==(const CoarseSchedule&, const CoarseSchedule&) = default;
};

struct ServiceActionSchedule {
  std::vector<int> action_slots;  // strictly increasing timeslots s^k
  bool residual_unserved = false; // demand left after the last action
  friend bool operator==(const ServiceActionSchedule&, const ServiceActionSchedule&) = default;
};

struct CssUserResult {
  int user_id = 0;
  std::vector<Rat> fractions;       // q_i^k per service action
  std::vector<Bigint> scaled_totals;  // P_i^k in the scaled domain
  Rat fee;                          // rate * sum_k q_i^k
};

// ---- CSV input (one row per user, m columns) ----

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r' && c != ' ') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}
}  // namespace detail

inline std::vector<UsageSchedule> parse_usage_csv(std::istream& in) {
  std::vector<UsageSchedule> rows;
  std::string line;
  int uid = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    UsageSchedule s;
    s.user_id = uid++;
    for (const auto& cell : detail::split_csv_line(line)) {
      if (cell != "0" && cell != "1") throw ScheduleError("usage CSV cells must be 0 or 1");
      s.bits.push_back(cell == "1" ? 1 : 0);
    }
    rows.push_back(std::move(s));
  }
  return rows;
}

inline std::vector<DemandSchedule> parse_demand_csv(std::istream& in) {
  std::vector<DemandSchedule> rows;
  std::string line;
  int uid = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    DemandSchedule s;
    s.user_id = uid++;
    for (const auto& cell : detail::split_csv_line(line))
      s.demands.push_back(rat_from_decimal(cell));
    rows.push_back(std::move(s));
  }
  return rows;
}

inline void write_usage_csv(std::ostream& out, const std::vector<UsageSchedule>& rows) {
  for (const auto& r : rows) {
    for (int j = 0; j < r.slots(); ++j) out << (j ? "," : "") << int(r.bits[j]);
    out << "\n";
  }
}

inline void write_demand_csv(std::ostream& out, const std::vector<DemandSchedule>& rows) {
  for (const auto& r : rows) {
    for (int j = 0; j < r.slots(); ++j) out << (j ? "," : "") << decimal_from_rat(r.demands[j]);
    out << "\n";
  }
}

}  // namespace ppshare::proto
