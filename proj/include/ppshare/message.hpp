#pragma once

#include <compare>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ppshare/bigint.hpp"
#include "ppshare/paillier.hpp"
#include "ppshare/threshold.hpp"

namespace ppshare::proto {

enum class Protocol { UFS, CFS, CSS };

inline std::string protocol_name(Protocol p) {
  switch (p) {
    case Protocol::UFS: return "ufs";
    case Protocol::CFS: return "cfs";
    case Protocol::CSS: return "css";
  }
  throw std::logic_error("unknown protocol");
}

inline Protocol protocol_from_name(const std::string& s) {
  if (s == "ufs") return Protocol::UFS;
  if (s == "cfs") return Protocol::CFS;
  if (s == "css") return Protocol::CSS;
  throw std::invalid_argument("unknown protocol name: " + s);
}

struct PartyId {
  enum class Kind { Operator, User };
  Kind kind = Kind::Operator;
  int index = 0;  // user index (1-based); 0 for the operator

  static PartyId operator_id() { return PartyId{Kind::Operator, 0}; }
  static PartyId user(int i) { return PartyId{Kind::User, i}; }
  bool is_operator() const { return kind == Kind::Operator; }

  friend auto operator<=>(const PartyId&, const PartyId&) = default;
};

inline std::string to_string(const PartyId& p) {
  return p.is_operator() ? "operator" : "user:" + std::to_string(p.index);
}

inline PartyId party_from_string(const std::string& s) {
  if (s == "operator") return PartyId::operator_id();
  if (s.rfind("user:", 0) == 0) return PartyId::user(std::stoi(s.substr(5)));
  throw std::invalid_argument("bad party id: " + s);
}

// Message payloads. The operator's inbound surface is ciphertexts, jointly
// decrypted masked values, indicator bits, and decryption shares; there is no
// payload type that could carry a user's raw schedule or demand.

struct CtPayload {
  paillier::Ciphertext ct;
  friend bool operator==(const CtPayload&, const CtPayload&) = default;
};

/// Ciphertext delivered together with helper partial decryptions
/// (threshold key mode).
struct CtBundlePayload {
  paillier::Ciphertext ct;
  std::vector<paillier::DecryptionShare> partials;
  friend bool operator==(const CtBundlePayload&, const CtBundlePayload&) = default;
};

/// Plaintext additive mask handed from the operator to one user.
struct MaskPayload {
  Bigint value;
  friend bool operator==(const MaskPayload&, const MaskPayload&) = default;
};

/// Jointly decrypted ring element a user returns to the operator.
struct DecValuePayload {
  Bigint value;
  friend bool operator==(const DecValuePayload&, const DecValuePayload&) = default;
};

/// Sign vote 1(D >= 0).
struct IndicatorPayload {
  int value = 0;
  friend bool operator==(const IndicatorPayload&, const IndicatorPayload&) = default;
};

/// Helper partial decryption on its way back to the operator.
struct PartialSharePayload {
  paillier::DecryptionShare share;
  friend bool operator==(const PartialSharePayload&, const PartialSharePayload&) = default;
};

using Payload = std::variant<CtPayload, CtBundlePayload, MaskPayload, DecValuePayload,
                             IndicatorPayload, PartialSharePayload>;

struct StageMessage {
  Protocol protocol = Protocol::UFS;
  std::string stage;  // "1.1".."3.1" per the stage diagrams, "thr.*" for key shares
  int slot = 0;       // timeslot (or action index in CSS stage 2)
  PartyId sender;
  Payload payload;

  friend bool operator==(const StageMessage&, const StageMessage&) = default;
};

}  // namespace ppshare::proto
