#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ppshare/runner.hpp"
#include "ppshare/serial.hpp"

// Run-configuration file and key-material file handling for the CLI.

namespace ppshare::net {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j{{"protocol", proto::protocol_name(c.protocol)},
                   {"users", c.users},
                   {"slots", c.slots},
                   {"scale", c.scale.get_str(10)},
                   {"threshold_C", decimal_from_rat(c.threshold_C)},
                   {"capacities", c.capacities},
                   {"key_mode", c.key_mode == proto::KeyMode::Common ? "common" : "threshold"},
                   {"threshold_t", c.threshold_t},
                   {"key_bits", c.key_bits},
                   {"seed", c.seed},
                   {"fee_rate", decimal_from_rat(c.fee_rate)}};
  return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (j.contains("protocol")) c.protocol = proto::protocol_from_name(j.at("protocol"));
    if (j.contains("users")) c.users = j.at("users").get<int>();
    if (j.contains("slots")) c.slots = j.at("slots").get<int>();
    if (j.contains("scale")) c.scale = Bigint(j.at("scale").get<std::string>());
    if (j.contains("threshold_C"))
      c.threshold_C = rat_from_decimal(j.at("threshold_C").get<std::string>());
    if (j.contains("capacities")) c.capacities = j.at("capacities").get<std::vector<long>>();
    if (j.contains("key_mode")) {
      const std::string m = j.at("key_mode").get<std::string>();
      if (m == "common")
        c.key_mode = proto::KeyMode::Common;
      else if (m == "threshold")
        c.key_mode = proto::KeyMode::Threshold;
      else
        throw ConfigError("key_mode must be 'common' or 'threshold'");
    }
    if (j.contains("threshold_t")) c.threshold_t = j.at("threshold_t").get<unsigned>();
    if (j.contains("key_bits")) c.key_bits = j.at("key_bits").get<unsigned>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("fee_rate")) c.fee_rate = rat_from_decimal(j.at("fee_rate").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config file: ") + e.what());
  }
  return c;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

// ---- key material files (canonical textual format) ----

inline void save_key_provision(const std::filesystem::path& dir, const KeyProvision& keys) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_text_file(dir / "public.key", serial::to_canonical(keys.pk) + "\n");
  if (keys.common) {
    write_text_file(dir / "private.key", serial::to_canonical(*keys.common) + "\n");
  } else {
    for (const auto& s : keys.shares)
      write_text_file(dir / ("share_" + std::to_string(s.index) + ".key"),
                      serial::to_canonical(s) + "\n");
  }
}

inline KeyProvision load_key_provision(const std::filesystem::path& dir, int users) {
  namespace fs = std::filesystem;
  KeyProvision keys;
  keys.pk = serial::public_key_from_json(
      nlohmann::json::parse(read_text_file(dir / "public.key")));
  if (fs::exists(dir / "private.key")) {
    keys.common = serial::private_key_from_json(
        nlohmann::json::parse(read_text_file(dir / "private.key")));
    keys.master = keys.common;
    return keys;
  }
  for (int i = 1; i <= users; ++i) {
    auto path = dir / ("share_" + std::to_string(i) + ".key");
    if (!fs::exists(path)) throw ConfigError("missing key share file " + path.string());
    keys.shares.push_back(serial::key_share_from_json(
        nlohmann::json::parse(read_text_file(path)), keys.pk));
  }
  if (keys.shares.empty()) throw ConfigError("no usable key material in " + dir.string());
  keys.threshold_t = keys.shares.front().threshold;
  return keys;
}

}  // namespace ppshare::net
