#pragma once

#include <string>

#include <json.hpp>

#include "ppshare/bigint.hpp"
#include "ppshare/message.hpp"
#include "ppshare/paillier.hpp"
#include "ppshare/threshold.hpp"

// Canonical textual object format: single-line JSON with keys in fixed
// lexicographic order and big integers as lowercase hexadecimal strings.
// Serialization is byte-exact, which the traffic ledger relies on.

namespace ppshare::serial {

using json = nlohmann::json;

inline json to_json(const paillier::PublicKey& pk) {
  return json{{"bits", pk.bits}, {"g", to_hex(pk.g)}, {"n", to_hex(pk.n)}};
}

inline paillier::PublicKey public_key_from_json(const json& j) {
  return paillier::PublicKey(from_hex(j.at("n").get<std::string>()),
                             from_hex(j.at("g").get<std::string>()),
                             j.at("bits").get<unsigned>());
}

inline json to_json(const paillier::PrivateKey& sk) {
  return json{{"lambda", to_hex(sk.lambda)}, {"mu", to_hex(sk.mu)}, {"public", to_json(sk.pub)}};
}

inline paillier::PrivateKey private_key_from_json(const json& j) {
  return paillier::PrivateKey{from_hex(j.at("lambda").get<std::string>()),
                              from_hex(j.at("mu").get<std::string>()),
                              public_key_from_json(j.at("public"))};
}

inline json to_json(const paillier::Ciphertext& c) {
  return json{{"value", to_hex(c.value)}};
}

inline paillier::Ciphertext ciphertext_from_json(const json& j) {
  return paillier::Ciphertext{from_hex(j.at("value").get<std::string>())};
}

/// Key shares serialize without the public part; the loader reattaches it
/// from the public key file.
inline json to_json(const paillier::KeyShare& s) {
  return json{{"index", s.index},
              {"parties", s.parties},
              {"share", to_hex(s.value)},
              {"threshold", s.threshold}};
}

inline paillier::KeyShare key_share_from_json(const json& j, const paillier::PublicKey& pk) {
  paillier::KeyShare s;
  s.index = j.at("index").get<unsigned>();
  s.value = from_hex(j.at("share").get<std::string>());
  s.threshold = j.at("threshold").get<unsigned>();
  s.parties = j.at("parties").get<unsigned>();
  s.pub = pk;
  return s;
}

inline json to_json(const paillier::DecryptionShare& s) {
  return json{{"index", s.index}, {"parties", s.parties}, {"value", to_hex(s.value)}};
}

inline paillier::DecryptionShare decryption_share_from_json(const json& j) {
  return paillier::DecryptionShare{j.at("index").get<unsigned>(),
                                   from_hex(j.at("value").get<std::string>()),
                                   j.at("parties").get<unsigned>()};
}

inline json to_json(const proto::Payload& payload) {
  using namespace proto;
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CtPayload>) {
          return json{{"kind", "ct"}, {"value", to_hex(p.ct.value)}};
        } else if constexpr (std::is_same_v<T, CtBundlePayload>) {
          json parts = json::array();
          for (const auto& s : p.partials) parts.push_back(to_json(s));
          return json{{"kind", "ctb"}, {"partials", parts}, {"value", to_hex(p.ct.value)}};
        } else if constexpr (std::is_same_v<T, MaskPayload>) {
          return json{{"kind", "mask"}, {"value", to_hex(p.value)}};
        } else if constexpr (std::is_same_v<T, DecValuePayload>) {
          return json{{"kind", "dec"}, {"value", to_hex(p.value)}};
        } else if constexpr (std::is_same_v<T, IndicatorPayload>) {
          return json{{"kind", "ind"}, {"value", p.value}};
        } else {
          static_assert(std::is_same_v<T, PartialSharePayload>);
          json j = to_json(p.share);
          j["kind"] = "pshare";
          return j;
        }
      },
      payload);
}

inline proto::Payload payload_from_json(const json& j) {
  using namespace proto;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ct") return CtPayload{paillier::Ciphertext{from_hex(j.at("value").get<std::string>())}};
  if (kind == "ctb") {
    CtBundlePayload p;
    p.ct.value = from_hex(j.at("value").get<std::string>());
    for (const auto& s : j.at("partials")) p.partials.push_back(decryption_share_from_json(s));
    return p;
  }
  if (kind == "mask") return MaskPayload{from_hex(j.at("value").get<std::string>())};
  if (kind == "dec") return DecValuePayload{from_hex(j.at("value").get<std::string>())};
  if (kind == "ind") return IndicatorPayload{j.at("value").get<int>()};
  if (kind == "pshare") return PartialSharePayload{decryption_share_from_json(j)};
  throw std::invalid_argument("unknown payload kind: " + kind);
}

inline json to_json(const proto::StageMessage& m) {
  return json{{"payload", to_json(m.payload)},
              {"protocol", proto::protocol_name(m.protocol)},
              {"sender", proto::to_string(m.sender)},
              {"slot", m.slot},
              {"stage", m.stage}};
}

inline proto::StageMessage message_from_json(const json& j) {
  proto::StageMessage m;
  m.protocol = proto::protocol_from_name(j.at("protocol").get<std::string>());
  m.sender = proto::party_from_string(j.at("sender").get<std::string>());
  m.slot = j.at("slot").get<int>();
  m.stage = j.at("stage").get<std::string>();
  m.payload = payload_from_json(j.at("payload"));
  return m;
}

template <typename T>
std::string to_canonical(const T& value) {
  return to_json(value).dump();
}

inline proto::StageMessage message_from_canonical(const std::string& text) {
  return message_from_json(json::parse(text));
}

/// Wire frame for the stream-socket mode: 4-byte big-endian length prefix
/// followed by the canonical message text.
inline std::string encode_frame(const std::string& body) {
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(body.size() + 4);
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out += body;
  return out;
}

/// Extracts one frame from the head of `buffer`, erasing consumed bytes.
/// Returns false when the buffer does not yet hold a complete frame.
inline bool decode_frame(std::string& buffer, std::string& body) {
  if (buffer.size() < 4) return false;
  const auto b = [&](int i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(buffer[i])); };
  const std::uint32_t n = (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
  if (buffer.size() < 4 + static_cast<std::size_t>(n)) return false;
  body = buffer.substr(4, n);
  buffer.erase(0, 4 + static_cast<std::size_t>(n));
  return true;
}

}  // namespace ppshare::serial
