#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppshare/serial.hpp"
#include "ppshare/transport.hpp"

namespace ppshare::eval {

struct AuditViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TraceAudit {
  std::size_t inbound_to_operator = 0;
  std::map<std::string, std::size_t> operator_inbound_kinds;
  std::size_t ciphertext_bearing = 0;  // messages carrying ciphertext payloads
  std::size_t plaintext_bearing = 0;   // masks, decrypted values, indicators
};

/// Walks a full message trace and verifies the operator's inbound surface:
/// only ciphertexts, jointly decrypted values, indicator bits, and partial
/// decryption shares ever reach it. There is no payload type for a raw
/// schedule or demand, and this confirms none was smuggled through another
/// kind. Throws AuditViolation otherwise.
inline TraceAudit audit_trace(const std::vector<net::TraceEntry>& trace) {
  TraceAudit out;
  for (const auto& e : trace) {
    const auto msg = serial::message_from_canonical(e.text);
    const std::string kind = serial::to_json(msg.payload).at("kind").get<std::string>();

    if (kind == "ct" || kind == "ctb")
      ++out.ciphertext_bearing;
    else if (kind == "mask" || kind == "dec" || kind == "ind")
      ++out.plaintext_bearing;

    if (e.to.is_operator()) {
      ++out.inbound_to_operator;
      ++out.operator_inbound_kinds[kind];
      if (kind != "ct" && kind != "dec" && kind != "ind" && kind != "pshare")
        throw AuditViolation("operator received a non-blind payload of kind '" + kind +
                             "' at stage " + msg.stage);
      if (!e.from.is_operator() && msg.sender != e.from)
        throw AuditViolation("sender field does not match the sending endpoint");
    }
  }
  return out;
}

}  // namespace ppshare::eval
