#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "ppshare/eval.hpp"
#include "ppshare/facility.hpp"
#include "ppshare/oracle.hpp"
#include "ppshare/runner.hpp"

using namespace ppshare;
using namespace ppshare::proto;

namespace {

struct Keys {
  Rng rng{4040};
  paillier::PublicKey pk;
  paillier::PrivateKey sk;
  Keys() {
    auto kp = paillier::keygen(128, rng);
    pk = kp.first;
    sk = kp.second;
  }
};

net::RunConfig base_config(Protocol p, int users, int slots, std::uint64_t seed) {
  net::RunConfig cfg;
  cfg.protocol = p;
  cfg.users = users;
  cfg.slots = slots;
  cfg.scale = 100;
  cfg.key_bits = 128;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("user submission encrypts each slot bit freshly") {
  Keys k;
  UsageSchedule sched{1, {1, 0}};
  UserKeyMaterial mat{k.pk, k.sk, std::nullopt};
  EstimationFunction f{{1}};
  FacilityUser u(1, sched, mat, 100, f, 1, Rat(1), Rng(9));
  auto a = u.submit();
  REQUIRE(a.size() == 2);
  CHECK(paillier::decrypt(k.sk, a[0]) == 1);
  CHECK(paillier::decrypt(k.sk, a[1]) == 0);
  auto b = u.submit();
  CHECK(a[0] != b[0]);  // fresh randomness
  CHECK(a[1] != b[1]);

  UsageSchedule wide{1, std::vector<std::uint8_t>(48, 0)};
  wide.bits[3] = 1;
  FacilityUser u48(1, wide, mat, 100, f, 1, Rat(1), Rng(10));
  CHECK(u48.submit().size() == 48);
}

TEST_CASE("stage-1 product reveals the count only to requesting users") {
  Keys k;
  // N=3, b^j = [1,1,0]
  std::vector<int> bits{1, 1, 0};
  std::vector<paillier::Ciphertext> subs;
  for (int b : bits) subs.push_back(paillier::encrypt(k.pk, Bigint(b), k.rng));
  Bigint R = k.rng.range(1, Bigint(1) << 64);
  paillier::Ciphertext encR = paillier::encrypt(k.pk, R, k.rng);

  paillier::Ciphertext prod{Bigint(1)};
  for (const auto& c : subs) prod = paillier::hom_add(k.pk, prod, c);

  auto for_user = [&](int i) {
    return paillier::decrypt(
        k.sk, facility_stage1_product(k.pk, prod, encR, subs[static_cast<std::size_t>(i)], R));
  };
  CHECK(for_user(0) == 2);      // requester sees sum(b) = 2
  CHECK(for_user(2) == 2 + R);  // non-requester sees sum(b) + R

  // all-zero slot: everyone sees R
  std::vector<paillier::Ciphertext> zeros;
  for (int i = 0; i < 3; ++i) zeros.push_back(paillier::encrypt(k.pk, Bigint(0), k.rng));
  paillier::Ciphertext zprod{Bigint(1)};
  for (const auto& c : zeros) zprod = paillier::hom_add(k.pk, zprod, c);
  CHECK(paillier::decrypt(k.sk, facility_stage1_product(k.pk, zprod, encR, zeros[0], R)) == R);

  // single participant
  paillier::Ciphertext alone = paillier::encrypt(k.pk, Bigint(1), k.rng);
  CHECK(paillier::decrypt(k.sk, facility_stage1_product(k.pk, alone, encR, alone, R)) == 1);
}

TEST_CASE("stage-1 interpretation") {
  CHECK(facility_interpret_stage1(true, Bigint(2), 3) == FacilitySlotResult{KnownCount{2}});
  CHECK(facility_interpret_stage1(false, Bigint(77), 3) == FacilitySlotResult{Masked{Bigint(77)}});
  CHECK_THROWS_AS(facility_interpret_stage1(true, Bigint(0), 3), ProtocolAbort);
  CHECK_THROWS_AS(facility_interpret_stage1(true, Bigint(4), 3), ProtocolAbort);
}

TEST_CASE("stage-2 contribution values") {
  CHECK(facility_stage2_value(true, 2, 1, 100, Bigint(7)) == 57);   // floor(100/2) + 7
  CHECK(facility_stage2_value(false, 0, 0, 100, Bigint(7)) == 7);   // mask only
  CHECK(facility_stage2_value(true, 3, 1, 1, Bigint(5)) == 5);      // floor(1/3) = 0, the S=1 loss
  CHECK(facility_stage2_value(true, 7, 1, 100, Bigint(0)) == 14);   // floor(100/7)
  CHECK(facility_stage2_value(true, 15, 2, 100, Bigint(3)) == 16);  // floor(200/15) + 3
}

TEST_CASE("stage-2 aggregation and finalization") {
  Keys k;
  auto enc = [&](long v) { return paillier::encrypt(k.pk, Bigint(v), k.rng); };
  paillier::Ciphertext prod = paillier::hom_add(k.pk, enc(57), paillier::hom_add(k.pk, enc(57), enc(7)));
  CHECK(paillier::decrypt(k.sk, prod) == 121);

  auto fin = facility_finalize_slot(Bigint(121), Bigint(21), 100, 1, 3);
  CHECK(fin.unmasked == 100);
  CHECK(fin.coarse == 1);

  CHECK(facility_finalize_slot(Bigint(0), Bigint(0), 100, 1, 3).coarse == 0);

  // S=100, N^j=3: u = 3 * 33 = 99, rounds to occupied with 0.01 residual error
  auto lossy = facility_finalize_slot(Bigint(99), Bigint(0), 100, 1, 3);
  CHECK(lossy.coarse == 1);
  CHECK(lossy.unmasked == 99);

  CHECK_THROWS_AS(facility_finalize_slot(Bigint(1000), Bigint(0), 100, 1, 3), ProtocolAbort);
  CHECK_THROWS_AS(facility_finalize_slot(Bigint(0), Bigint(5), 100, 1, 3), ProtocolAbort);
}

TEST_CASE("access keys decrypt to kappa exactly for requesting users") {
  Keys k;
  Bigint kappa(99);
  auto e1 = paillier::encrypt(k.pk, Bigint(1), k.rng);
  auto e0 = paillier::encrypt(k.pk, Bigint(0), k.rng);
  CHECK(paillier::decrypt(k.sk, access_key_ciphertext(k.pk, e1, kappa)) == 99);
  CHECK(paillier::decrypt(k.sk, access_key_ciphertext(k.pk, e0, kappa)) == 0);

  Bigint k2(555);
  CHECK(paillier::decrypt(k.sk, access_key_ciphertext(k.pk, e1, k2)) == 555);
}

TEST_CASE("full PP-UFS runs agree with the plaintext oracles") {
  for (std::uint64_t seed : {61u, 62u, 63u}) {
    auto cfg = base_config(Protocol::UFS, 6, 8, seed);
    Rng inst = Rng(seed).derive("instance");
    auto schedules = eval::random_usage(cfg.users, cfg.slots, inst);

    net::InProcNetwork n;
    auto keys = net::provision_keys(cfg);
    auto res = net::run_facility(cfg, schedules, n, keys);

    auto counts = eval::oracle_counts(schedules);
    CHECK(res.coarse == eval::oracle_or_schedule(schedules));

    for (int i = 1; i <= cfg.users; ++i) {
      const auto& u = res.users[static_cast<std::size_t>(i - 1)];
      for (int j = 1; j <= cfg.slots; ++j) {
        const auto& entry = u.slots[static_cast<std::size_t>(j - 1)];
        long truth = counts[static_cast<std::size_t>(j - 1)];
        if (schedules[static_cast<std::size_t>(i - 1)].bits[static_cast<std::size_t>(j - 1)]) {
          REQUIRE(std::holds_alternative<KnownCount>(entry));
          CHECK(std::get<KnownCount>(entry).count == truth);
        } else {
          REQUIRE(std::holds_alternative<Masked>(entry));
          // masked value carries exactly sum(b) + R^j, a live mask term
          CHECK(std::get<Masked>(entry).raw ==
                truth + res.masks.slot_masks[static_cast<std::size_t>(j - 1)]);
          CHECK(res.masks.slot_masks[static_cast<std::size_t>(j - 1)] != 0);
        }
      }
    }
  }
}

TEST_CASE("the broadcast value always contains the full mask sum") {
  auto cfg = base_config(Protocol::UFS, 4, 5, 99);
  Rng inst = Rng(99).derive("instance");
  auto schedules = eval::random_usage(cfg.users, cfg.slots, inst);
  net::InProcNetwork n;
  auto keys = net::provision_keys(cfg);
  auto res = net::run_facility(cfg, schedules, n, keys);

  auto counts = eval::oracle_counts(schedules);
  for (int j = 1; j <= cfg.slots; ++j) {
    Bigint mask_sum(0);
    for (int i = 1; i <= cfg.users; ++i)
      mask_sum += res.masks.user_slot_masks[static_cast<std::size_t>(i - 1)]
                                           [static_cast<std::size_t>(j - 1)];
    Bigint payload(0);
    long nj = counts[static_cast<std::size_t>(j - 1)];
    if (nj > 0) payload = nj * fdiv(Bigint(100), Bigint(nj));
    // recovered u = D - sum(R); so D = payload + mask sum
    CHECK(res.recovered_scaled[static_cast<std::size_t>(j - 1)] == payload);
    CHECK(mask_sum != 0);
  }
}

TEST_CASE("user fees follow rate / N^j over requested slots") {
  auto cfg = base_config(Protocol::UFS, 3, 2, 77);
  std::vector<UsageSchedule> schedules{{1, {1, 1}}, {2, {1, 0}}, {3, {0, 1}}};
  net::InProcNetwork n;
  auto keys = net::provision_keys(cfg);
  auto res = net::run_facility(cfg, schedules, n, keys);
  // N^1 = 2, N^2 = 2
  CHECK(res.users[0].fee == Rat(1, 2) + Rat(1, 2));
  CHECK(res.users[1].fee == Rat(1, 2));
  CHECK(res.users[2].fee == Rat(1, 2));
}

TEST_CASE("access keys reach exactly the paid requesting users") {
  auto cfg = base_config(Protocol::UFS, 3, 2, 78);
  cfg.paid = {true, false, true};
  std::vector<UsageSchedule> schedules{{1, {1, 1}}, {2, {1, 0}}, {3, {0, 1}}};
  net::InProcNetwork n;
  auto keys = net::provision_keys(cfg);
  auto res = net::run_facility(cfg, schedules, n, keys);

  CHECK(res.users[0].access_keys.size() == 2);
  CHECK(res.users[1].access_keys.empty());  // unpaid
  CHECK(res.users[2].access_keys.size() == 1);
  CHECK(res.users[0].access_keys.at(1) == res.masks.access_keys.at(1));
  CHECK(res.users[2].access_keys.at(2) == res.masks.access_keys.at(2));
}

// ---- CFS ----

TEST_CASE("estimation function boundaries") {
  EstimationFunction f{{10, 20}};
  f.validate(20);
  CHECK(f.apply(0) == 0);
  CHECK(f.apply(7) == 1);
  CHECK(f.apply(10) == 1);  // inclusive upper bound
  CHECK(f.apply(11) == 2);
  CHECK(f.apply(15) == 2);
  CHECK(f.apply(20) == 2);
  CHECK_THROWS_AS(f.apply(25), CapacityExceeded);

  EstimationFunction bad{{10, 10}};
  CHECK_THROWS_AS(bad.validate(20), ScheduleError);
  EstimationFunction bad2{{0, 5}};
  CHECK_THROWS_AS(bad2.validate(20), ScheduleError);
  EstimationFunction bad3{{}};
  CHECK_THROWS_AS(bad3.validate(20), ScheduleError);
}

TEST_CASE("CFS finalization lands on the tier exactly at S=100") {
  // N^j = 15, capacities (10, 20): u = 15 * floor(200/15) = 195 -> 2
  auto fin = facility_finalize_slot(Bigint(195), Bigint(0), 100, 2, 15);
  CHECK(fin.coarse == 2);
  CHECK(facility_finalize_slot(Bigint(0), Bigint(0), 100, 2, 15).coarse == 0);
}

TEST_CASE("full PP-CFS runs recover f(N^j) on every slot") {
  for (std::uint64_t seed : {71u, 72u}) {
    auto cfg = base_config(Protocol::CFS, 8, 6, seed);
    cfg.capacities = {3, 6, 8};
    Rng inst = Rng(seed).derive("instance");
    auto schedules = eval::random_usage(cfg.users, cfg.slots, inst);
    net::InProcNetwork n;
    auto keys = net::provision_keys(cfg);
    auto res = net::run_facility(cfg, schedules, n, keys);
    CHECK(res.coarse == eval::oracle_tier_schedule(schedules, cfg.estimator()));
  }
}

TEST_CASE("PP-UFS is PP-CFS with the single capacity N, bit for bit") {
  const std::uint64_t seed = 81;
  auto ufs_cfg = base_config(Protocol::UFS, 5, 6, seed);
  auto cfs_cfg = base_config(Protocol::CFS, 5, 6, seed);
  cfs_cfg.capacities = {5};
  Rng inst = Rng(seed).derive("instance");
  auto schedules = eval::random_usage(5, 6, inst);

  net::InProcNetwork n1, n2;
  auto k1 = net::provision_keys(ufs_cfg);
  auto k2 = net::provision_keys(cfs_cfg);
  auto r1 = net::run_facility(ufs_cfg, schedules, n1, k1);
  auto r2 = net::run_facility(cfs_cfg, schedules, n2, k2);

  CHECK(r1.coarse == r2.coarse);
  CHECK(r1.recovered_scaled == r2.recovered_scaled);
  for (std::size_t i = 0; i < r1.users.size(); ++i) {
    CHECK(r1.users[i].slots == r2.users[i].slots);
    CHECK(r1.users[i].fee == r2.users[i].fee);
    CHECK(r1.users[i].access_keys == r2.users[i].access_keys);
  }
}

TEST_CASE("exhausted capacity aborts with a distinct error") {
  auto cfg = base_config(Protocol::CFS, 4, 2, 82);
  cfg.capacities = {2, 3};  // N^j can reach 4 > C_r
  std::vector<UsageSchedule> schedules{{1, {1, 1}}, {2, {1, 0}}, {3, {1, 1}}, {4, {1, 1}}};
  net::InProcNetwork n;
  auto keys = net::provision_keys(cfg);
  CHECK_THROWS_AS(net::run_facility(cfg, schedules, n, keys), CapacityExceeded);
}

TEST_CASE("schedule validation catches dimension and content errors") {
  auto cfg = base_config(Protocol::UFS, 2, 3, 83);
  net::InProcNetwork n;
  auto keys = net::provision_keys(cfg);
  std::vector<UsageSchedule> wrong_len{{1, {1, 0}}, {2, {1, 1}}};
  CHECK_THROWS_AS(net::run_facility(cfg, wrong_len, n, keys), ScheduleError);
  std::vector<UsageSchedule> all_zero{{1, {0, 0, 0}}, {2, {1, 1, 0}}};
  CHECK_THROWS_AS(net::run_facility(cfg, all_zero, n, keys), ScheduleError);
  std::vector<UsageSchedule> too_few{{1, {1, 0, 1}}};
  CHECK_THROWS_AS(net::run_facility(cfg, too_few, n, keys), ScheduleError);
}
