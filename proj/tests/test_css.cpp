#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "ppshare/css.hpp"
#include "ppshare/eval.hpp"
#include "ppshare/oracle.hpp"
#include "ppshare/runner.hpp"

using namespace ppshare;
using namespace ppshare::proto;

namespace {

struct Keys {
  Rng rng{5050};
  paillier::PublicKey pk;
  paillier::PrivateKey sk;
  Keys() {
    auto kp = paillier::keygen(128, rng);
    pk = kp.first;
    sk = kp.second;
  }
};

std::vector<Rat> rats(std::initializer_list<const char*> vals) {
  std::vector<Rat> out;
  for (const char* v : vals) out.push_back(rat_from_decimal(v));
  return out;
}

net::RunConfig css_config(int users, int slots, const Rat& threshold, std::uint64_t seed,
                          long scale = 10) {
  net::RunConfig cfg;
  cfg.protocol = Protocol::CSS;
  cfg.users = users;
  cfg.slots = slots;
  cfg.scale = scale;
  cfg.threshold_C = threshold;
  cfg.key_bits = 128;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("probe values encode window demand minus the threshold share") {
  // p_i = [30], C = 100, N = 2, S = 1: encodes 30 - 50 = -20
  CHECK(css_probe_value({Bigint(30)}, 0, 1, Bigint(50)) == -20);
  // p_i = [60, 60], window (0, 2]: 120 - 50 = 70
  CHECK(css_probe_value({Bigint(60), Bigint(60)}, 0, 2, Bigint(50)) == 70);
  CHECK_THROWS_AS(css_probe_value({Bigint(1)}, 0, 2, Bigint(0)), std::invalid_argument);
  CHECK_THROWS_AS(css_probe_value({Bigint(1)}, 1, 1, Bigint(0)), std::invalid_argument);
}

TEST_CASE("probe plaintexts telescope to total demand minus C") {
  // N = 2 users, each holding floor(S*C/N) = 50: sum of probe values = total - 100
  std::vector<std::vector<Bigint>> demands{{Bigint(30), Bigint(40)}, {Bigint(20), Bigint(25)}};
  Bigint sum(0);
  for (const auto& d : demands) sum += css_probe_value(d, 0, 2, Bigint(50));
  CHECK(sum == (30 + 40 + 20 + 25) - 100);
}

TEST_CASE("blinded probe aggregate preserves sign and magnitude structure") {
  Keys k;
  auto probe_ct = [&](long v) {
    return paillier::encrypt(k.pk, paillier::encode_signed_int(Bigint(v), k.pk), k.rng);
  };
  // totals 60+60 = 120, C = 100 at S=1 with N=2: each user sends p_sum - 50
  std::vector<paillier::Ciphertext> probes{probe_ct(60 - 50), probe_ct(60 - 50)};
  auto bcast = css_probe_aggregate(k.pk, probes, Bigint(3));
  CHECK(paillier::decode_signed_int(paillier::decrypt(k.sk, bcast), k.pk) == 60);  // 3 * 20

  std::vector<paillier::Ciphertext> low{probe_ct(30 - 50), probe_ct(50 - 50)};
  auto neg = css_probe_aggregate(k.pk, low, Bigint(3));
  CHECK(paillier::decode_signed_int(paillier::decrypt(k.sk, neg), k.pk) == -60);

  std::vector<paillier::Ciphertext> exact{probe_ct(0), probe_ct(0)};
  auto zero = css_probe_aggregate(k.pk, exact, Bigint(7));
  Bigint z = paillier::decode_signed_int(paillier::decrypt(k.sk, zero), k.pk);
  CHECK(z == 0);
  CHECK(css_sign_indicator(z) == 1);  // boundary fires the action

  CHECK_THROWS_AS(css_probe_aggregate(k.pk, probes, Bigint(0)), std::invalid_argument);
  CHECK_THROWS_AS(css_probe_aggregate(k.pk, probes, Bigint(-2)), std::invalid_argument);
}

TEST_CASE("sign votes") {
  CHECK(css_sign_indicator(Bigint(60)) == 1);
  CHECK(css_sign_indicator(Bigint(-60)) == 0);
  CHECK(css_sign_indicator(Bigint(0)) == 1);
}

TEST_CASE("service schedule oracle cases") {
  std::vector<DemandSchedule> d{{1, rats({"30", "30", "30"})}, {2, rats({"30", "30", "30"})}};
  auto s = eval::oracle_service_schedule(d, Rat(100));
  CHECK(s.action_slots == std::vector<int>{2});
  CHECK(s.residual_unserved);  // 60 left at t = 3

  std::vector<DemandSchedule> zero{{1, rats({"0", "0"})}};
  auto sz = eval::oracle_service_schedule(zero, Rat(5));
  CHECK(sz.action_slots.empty());
  CHECK_FALSE(sz.residual_unserved);

  // tiny C: every slot fires and the accumulation restarts each time
  std::vector<DemandSchedule> tiny{{1, rats({"10", "10", "10", "10"})}};
  auto st = eval::oracle_service_schedule(tiny, Rat(1));
  CHECK(st.action_slots == std::vector<int>{1, 2, 3, 4});
}

TEST_CASE("protocol schedule equals the oracle sweep") {
  auto cfg = css_config(2, 3, Rat(100), 910);
  std::vector<DemandSchedule> demands{{1, rats({"30", "30", "30"})},
                                      {2, rats({"30", "30", "30"})}};
  net::InProcNetwork n;
  auto keys = net::provision_keys(cfg);
  auto res = net::run_css(cfg, demands, n, keys);
  auto oracle = eval::oracle_service_schedule(demands, cfg.threshold_C);
  CHECK(res.schedule.action_slots == oracle.action_slots);
  CHECK(res.schedule.residual_unserved == oracle.residual_unserved);
}

TEST_CASE("share exchange recovers equal fractions for equal demands") {
  auto cfg = css_config(2, 2, Rat(100), 911);
  std::vector<DemandSchedule> demands{{1, rats({"30", "30"})}, {2, rats({"30", "30"})}};
  net::InProcNetwork n;
  auto keys = net::provision_keys(cfg);
  auto res = net::run_css(cfg, demands, n, keys);
  REQUIRE(res.schedule.action_slots == std::vector<int>{2});
  CHECK(res.users[0].fractions == std::vector<Rat>{Rat(1, 2)});
  CHECK(res.users[1].fractions == std::vector<Rat>{Rat(1, 2)});
  CHECK(res.users[0].scaled_totals[0] == 600);  // 60 at S=10
}

TEST_CASE("a user with no demand inside an action window gets q = 0") {
  auto cfg = css_config(2, 3, Rat(60), 912);
  std::vector<DemandSchedule> demands{{1, rats({"30", "30", "0"})},
                                      {2, rats({"0", "0", "30"})}};
  net::InProcNetwork n;
  auto keys = net::provision_keys(cfg);
  auto res = net::run_css(cfg, demands, n, keys);
  REQUIRE(res.schedule.action_slots == std::vector<int>{2});
  CHECK(res.users[0].fractions[0] == Rat(1));
  CHECK(res.users[1].fractions[0] == Rat(0));
  CHECK(res.users[1].scaled_totals[0] == 0);

  // fractions over every action sum to one
  Rat total = res.users[0].fractions[0] + res.users[1].fractions[0];
  CHECK(total == Rat(1));
}

TEST_CASE("fractions match the oracle and sum to one on random instances") {
  for (std::uint64_t seed : {913u, 914u}) {
    auto cfg = css_config(6, 8, Rat(100), seed);
    Rng inst = Rng(seed).derive("instance");
    auto demands = eval::random_demands(cfg.users, cfg.slots, Rat(10), Rat(20), inst);
    net::InProcNetwork n;
    auto keys = net::provision_keys(cfg);
    auto res = net::run_css(cfg, demands, n, keys);

    auto oracle_sched = eval::oracle_service_schedule(demands, cfg.threshold_C);
    REQUIRE(res.schedule.action_slots == oracle_sched.action_slots);
    auto oracle_q = eval::oracle_fractions(demands, oracle_sched);

    const std::size_t actions = oracle_sched.action_slots.size();
    for (std::size_t k = 0; k < actions; ++k) {
      Rat sum(0);
      for (int i = 0; i < cfg.users; ++i) {
        // demands sit on the 0.1 grid, so S = 10 recovers them exactly
        CHECK(res.users[static_cast<std::size_t>(i)].fractions[k] ==
              oracle_q[static_cast<std::size_t>(i)][k]);
        sum += res.users[static_cast<std::size_t>(i)].fractions[k];
      }
      CHECK(sum == Rat(1));
    }
  }
}

TEST_CASE("css fee is the fee rate times the fraction sum") {
  auto cfg = css_config(2, 2, Rat(100), 915);
  cfg.fee_rate = rat_from_decimal("2.5");
  std::vector<DemandSchedule> demands{{1, rats({"40", "40"})}, {2, rats({"20", "20"})}};
  net::InProcNetwork n;
  auto keys = net::provision_keys(cfg);
  auto res = net::run_css(cfg, demands, n, keys);
  REQUIRE(res.schedule.action_slots == std::vector<int>{2});
  CHECK(res.users[0].fee == rat_from_decimal("2.5") * Rat(2, 3));
  CHECK(res.users[1].fee == rat_from_decimal("2.5") * Rat(1, 3));
}

TEST_CASE("demand validation") {
  auto cfg = css_config(2, 2, Rat(100), 916);
  net::InProcNetwork n;
  auto keys = net::provision_keys(cfg);
  std::vector<DemandSchedule> negative{{1, rats({"10", "10"})}, {2, {Rat(-1), Rat(5)}}};
  CHECK_THROWS_AS(net::run_css(cfg, negative, n, keys), ScheduleError);
  std::vector<DemandSchedule> zero{{1, rats({"10", "10"})}, {2, rats({"0", "0"})}};
  CHECK_THROWS_AS(net::run_css(cfg, zero, n, keys), ScheduleError);
  auto bad = css_config(2, 2, Rat(0), 917);
  std::vector<DemandSchedule> ok{{1, rats({"10", "10"})}, {2, rats({"10", "10"})}};
  CHECK_THROWS_AS(net::run_css(bad, ok, n, keys), std::invalid_argument);
}

TEST_CASE("probe drop aborts with the blocking stage") {
  auto cfg = css_config(2, 2, Rat(100), 918);
  std::vector<DemandSchedule> demands{{1, rats({"60", "60"})}, {2, rats({"60", "60"})}};
  net::InProcNetwork n;
  auto keys = net::provision_keys(cfg);
  net::FaultInjection fault{2, "1.1"};
  try {
    net::run_css(cfg, demands, n, keys, &fault);
    FAIL("expected ProtocolAbort");
  } catch (const ProtocolAbort& e) {
    CHECK(e.stage == "1.1");
  }
}
