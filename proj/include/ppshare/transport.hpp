#pragma once

#include <deque>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ppshare/message.hpp"
#include "ppshare/serial.hpp"

namespace ppshare::net {

using proto::PartyId;
using proto::StageMessage;

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per (sender, receiver, protocol, stage) message and byte accounting.
/// Bytes are the exact serialized lengths of delivered messages.
class TrafficLedger {
 public:
  struct Key {
    std::string sender, receiver, protocol, stage;
    friend auto operator<=>(const Key&, const Key&) = default;
  };
  struct Row {
    std::size_t messages = 0;
    std::size_t bytes = 0;
  };

  void record(const PartyId& from, const PartyId& to, const StageMessage& m,
              std::size_t serialized_bytes) {
    Row& row = rows_[Key{proto::to_string(from), proto::to_string(to),
                         proto::protocol_name(m.protocol), m.stage}];
    row.messages += 1;
    row.bytes += serialized_bytes;
  }

  const std::map<Key, Row>& rows() const { return rows_; }

  std::size_t total_bytes() const {
    std::size_t n = 0;
    for (const auto& [k, r] : rows_) n += r.bytes;
    return n;
  }

  std::size_t total_messages() const {
    std::size_t n = 0;
    for (const auto& [k, r] : rows_) n += r.messages;
    return n;
  }

  /// Messages touching one user (either direction) whose stage starts with
  /// one of the given prefixes.
  std::size_t user_messages(int user, std::initializer_list<std::string> stage_prefixes) const {
    const std::string uid = proto::to_string(PartyId::user(user));
    std::size_t n = 0;
    for (const auto& [k, r] : rows_) {
      if (k.sender != uid && k.receiver != uid) continue;
      for (const auto& p : stage_prefixes)
        if (k.stage.rfind(p, 0) == 0) {
          n += r.messages;
          break;
        }
    }
    return n;
  }

  std::string to_csv() const {
    std::ostringstream out;
    out << "sender,receiver,protocol,stage,messages,bytes\n";
    for (const auto& [k, r] : rows_)
      out << k.sender << ',' << k.receiver << ',' << k.protocol << ',' << k.stage << ','
          << r.messages << ',' << r.bytes << "\n";
    return out.str();
  }

  friend bool operator==(const TrafficLedger& a, const TrafficLedger& b) {
    if (a.rows_.size() != b.rows_.size()) return false;
    auto ia = a.rows_.begin();
    for (auto ib = b.rows_.begin(); ib != b.rows_.end(); ++ia, ++ib) {
      if (ia->first != ib->first) return false;
      if (ia->second.messages != ib->second.messages) return false;
      if (ia->second.bytes != ib->second.bytes) return false;
    }
    return true;
  }

 private:
  std::map<Key, Row> rows_;
};

struct TraceEntry {
  PartyId from, to;
  std::string text;  // canonical serialized message
};

struct Delivery {
  PartyId from;
  StageMessage message;
};

/// Message delivery between parties: FIFO per sender-receiver pair, no loss,
/// no duplication. Every message crosses the wire as canonical text, so what
/// a receiver fetches has really been through serialization.
class Network {
 public:
  virtual ~Network() = default;

  virtual void register_party(const PartyId& id) = 0;
  virtual void send(const PartyId& from, const PartyId& to, const StageMessage& msg) = 0;
  virtual std::vector<Delivery> fetch(const PartyId& to) = 0;
  virtual bool all_drained() const = 0;

  const TrafficLedger& ledger() const { return ledger_; }
  const std::vector<TraceEntry>& trace() const { return trace_; }

  std::string trace_text() const {
    std::ostringstream out;
    for (const auto& e : trace_)
      out << proto::to_string(e.from) << '>' << proto::to_string(e.to) << '|' << e.text << "\n";
    return out.str();
  }

 protected:
  void account(const PartyId& from, const PartyId& to, const StageMessage& msg,
               const std::string& text) {
    ledger_.record(from, to, msg, text.size());
    trace_.push_back(TraceEntry{from, to, text});
  }

  TrafficLedger ledger_;
  std::vector<TraceEntry> trace_;
};

/// Default deterministic in-process transport.
class InProcNetwork : public Network {
 public:
  void register_party(const PartyId& id) override { inboxes_[id]; }

  void send(const PartyId& from, const PartyId& to, const StageMessage& msg) override {
    auto it = inboxes_.find(to);
    if (it == inboxes_.end())
      throw TransportError("send to unknown endpoint " + proto::to_string(to));
    if (!inboxes_.count(from))
      throw TransportError("send from unknown endpoint " + proto::to_string(from));
    std::string text = serial::to_canonical(msg);
    account(from, to, msg, text);
    it->second.push_back({from, std::move(text)});
  }

  std::vector<Delivery> fetch(const PartyId& to) override {
    auto it = inboxes_.find(to);
    if (it == inboxes_.end())
      throw TransportError("fetch for unknown endpoint " + proto::to_string(to));
    std::vector<Delivery> out;
    for (auto& [from, text] : it->second)
      out.push_back(Delivery{from, serial::message_from_canonical(text)});
    it->second.clear();
    return out;
  }

  bool all_drained() const override {
    for (const auto& [id, q] : inboxes_)
      if (!q.empty()) return false;
    return true;
  }

 private:
  std::map<PartyId, std::deque<std::pair<PartyId, std::string>>> inboxes_;
};

}  // namespace ppshare::net
