#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "ppshare/serial.hpp"
#include "ppshare/threshold.hpp"

using namespace ppshare;
using json = nlohmann::json;

TEST_CASE("hex helpers are lowercase and strict") {
  CHECK(to_hex(Bigint(255)) == "ff");
  CHECK(from_hex("ff") == 255);
  CHECK_THROWS_AS(from_hex("FF"), std::invalid_argument);
  CHECK_THROWS_AS(from_hex(""), std::invalid_argument);
  CHECK_THROWS_AS(from_hex("xyz"), std::invalid_argument);
  CHECK_THROWS_AS(to_hex(Bigint(-1)), std::invalid_argument);
}

TEST_CASE("key material roundtrips through the canonical format") {
  Rng rng(21);
  auto [pk, sk] = paillier::keygen(128, rng);

  std::string pk_text = serial::to_canonical(pk);
  auto pk2 = serial::public_key_from_json(json::parse(pk_text));
  CHECK(pk2.n == pk.n);
  CHECK(pk2.g == pk.g);
  CHECK(pk2.bits == pk.bits);
  CHECK(pk2.nsq == pk.nsq);
  CHECK(serial::to_canonical(pk2) == pk_text);  // canonical: stable bytes

  std::string sk_text = serial::to_canonical(sk);
  auto sk2 = serial::private_key_from_json(json::parse(sk_text));
  CHECK(sk2.lambda == sk.lambda);
  CHECK(sk2.mu == sk.mu);
  CHECK(serial::to_canonical(sk2) == sk_text);

  // fixed field names
  auto j = json::parse(pk_text);
  CHECK(j.contains("n"));
  CHECK(j.contains("g"));
  CHECK(j.contains("bits"));
}

TEST_CASE("key shares keep their index, threshold, and party count") {
  Rng rng(22);
  auto mat = paillier::threshold_keygen(128, 5, 3, rng);
  for (const auto& s : mat.shares) {
    auto j = json::parse(serial::to_canonical(s));
    CHECK(j.at("index").get<unsigned>() == s.index);
    CHECK(j.contains("share"));
    auto s2 = serial::key_share_from_json(j, mat.pub);
    CHECK(s2.value == s.value);
    CHECK(s2.threshold == 3);
    CHECK(s2.parties == 5);
  }
}

TEST_CASE("every payload kind survives a message roundtrip") {
  Rng rng(23);
  auto [pk, sk] = paillier::keygen(128, rng);
  paillier::Ciphertext ct = paillier::encrypt(pk, Bigint(9), rng);
  paillier::DecryptionShare ds{2, Bigint(12345), 5};

  std::vector<proto::Payload> payloads = {
      proto::CtPayload{ct},
      proto::CtBundlePayload{ct, {ds, {3, Bigint(777), 5}}},
      proto::MaskPayload{Bigint(424242)},
      proto::DecValuePayload{Bigint(31337)},
      proto::IndicatorPayload{1},
      proto::PartialSharePayload{ds},
  };
  int slot = 1;
  for (const auto& p : payloads) {
    proto::StageMessage m{proto::Protocol::CFS, "2.3", slot++, proto::PartyId::user(4), p};
    std::string text = serial::to_canonical(m);
    proto::StageMessage back = serial::message_from_canonical(text);
    CHECK(back == m);
    CHECK(serial::to_canonical(back) == text);
  }
}

TEST_CASE("unknown payload kinds and parties are rejected") {
  CHECK_THROWS_AS(serial::payload_from_json(json{{"kind", "mystery"}, {"value", "aa"}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(proto::party_from_string("nobody"), std::invalid_argument);
  CHECK_THROWS_AS(proto::protocol_from_name("tls"), std::invalid_argument);
}

TEST_CASE("wire frames carry a big-endian length prefix") {
  std::string frame = serial::encode_frame("hello");
  REQUIRE(frame.size() == 9);
  CHECK(frame[0] == 0);
  CHECK(frame[3] == 5);

  std::string buffer = frame + serial::encode_frame("");
  std::string body;
  CHECK(serial::decode_frame(buffer, body));
  CHECK(body == "hello");
  CHECK(serial::decode_frame(buffer, body));
  CHECK(body.empty());
  CHECK_FALSE(serial::decode_frame(buffer, body));

  // partial frames wait for more bytes
  std::string partial = frame.substr(0, 6);
  CHECK_FALSE(serial::decode_frame(partial, body));
}
