#pragma once

#include <fcntl.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <map>
#include <set>
#include <utility>

#include "ppshare/transport.hpp"

namespace ppshare::net {

/// Stream-socket transport: every sender-receiver pair gets its own
/// SOCK_STREAM socketpair and messages travel as length-prefixed frames.
/// Demonstration mode only; the in-process transport is the default and the
/// one the acceptance runs use.
class SocketNetwork : public Network {
 public:
  ~SocketNetwork() override {
    for (auto& [key, fds] : pipes_) {
      ::close(fds.first);
      ::close(fds.second);
    }
  }

  void register_party(const PartyId& id) override { parties_.insert(id); }

  void send(const PartyId& from, const PartyId& to, const StageMessage& msg) override {
    if (!parties_.count(from) || !parties_.count(to))
      throw TransportError("send between unregistered endpoints");
    std::string text = serial::to_canonical(msg);
    account(from, to, msg, text);
    const std::string frame = serial::encode_frame(text);
    int fd = writer_fd(from, to);
    std::size_t off = 0;
    while (off < frame.size()) {
      ssize_t n = ::write(fd, frame.data() + off, frame.size() - off);
      if (n < 0) throw TransportError(std::string("socket write: ") + std::strerror(errno));
      off += static_cast<std::size_t>(n);
    }
  }

  std::vector<Delivery> fetch(const PartyId& to) override {
    std::vector<Delivery> out;
    // Fixed peer order keeps fetch results deterministic.
    for (const PartyId& from : parties_) {
      if (from == to) continue;
      auto it = pipes_.find({from, to});
      if (it == pipes_.end()) continue;
      std::string& buf = rxbuf_[{from, to}];
      char chunk[4096];
      for (;;) {
        ssize_t n = ::read(it->second.second, chunk, sizeof chunk);
        if (n > 0) {
          buf.append(chunk, static_cast<std::size_t>(n));
        } else if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
          break;
        } else if (n == 0) {
          break;
        } else {
          throw TransportError(std::string("socket read: ") + std::strerror(errno));
        }
      }
      std::string body;
      while (serial::decode_frame(buf, body))
        out.push_back(Delivery{from, serial::message_from_canonical(body)});
    }
    return out;
  }

  bool all_drained() const override {
    for (const auto& [key, buf] : rxbuf_)
      if (!buf.empty()) return false;
    return true;
  }

 private:
  int writer_fd(const PartyId& from, const PartyId& to) {
    auto key = std::make_pair(from, to);
    auto it = pipes_.find(key);
    if (it == pipes_.end()) {
      int fds[2];
      if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0)
        throw TransportError(std::string("socketpair: ") + std::strerror(errno));
      // Reads must not block: a fetch happens only after the round's sends.
      int fl = ::fcntl(fds[1], F_GETFL, 0);
      ::fcntl(fds[1], F_SETFL, fl | O_NONBLOCK);
      it = pipes_.emplace(key, std::make_pair(fds[0], fds[1])).first;
    }
    return it->second.first;
  }

  std::set<PartyId> parties_;
  std::map<std::pair<PartyId, PartyId>, std::pair<int, int>> pipes_;  // (write fd, read fd)
  std::map<std::pair<PartyId, PartyId>, std::string> rxbuf_;
};

}  // namespace ppshare::net
