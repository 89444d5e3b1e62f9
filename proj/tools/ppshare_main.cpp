// Command-line front end: key generation, end-to-end protocol runs from CSV
// inputs, and evaluation sweeps.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ppshare/audit.hpp"
#include "ppshare/config.hpp"
#include "ppshare/eval.hpp"
#include "ppshare/oracle.hpp"
#include "ppshare/runner.hpp"

namespace fs = std::filesystem;
using namespace ppshare;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitProtocol = 3;
constexpr int kExitInternal = 4;

std::uint64_t pick_seed(std::optional<std::uint64_t> seed_flag) {
  if (seed_flag) return *seed_flag;
  std::random_device rd;
  std::uint64_t s = (std::uint64_t(rd()) << 32) ^ rd();
  std::cout << "seed (chosen from entropy): " << s << "\n";
  return s;
}

std::vector<long> parse_capacities(const std::string& text) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    out.push_back(std::stol(cell));
  }
  return out;
}

struct SweepSpec {
  char variable = 0;  // 'S' or 'N'
  std::vector<long> values;
};

SweepSpec parse_sweep(const std::string& text) {
  SweepSpec spec;
  auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw net::ConfigError("sweep must look like S=1,10,100 or N=4..20[:step]");
  spec.variable = static_cast<char>(std::toupper(text[0]));
  if (spec.variable != 'S' && spec.variable != 'N')
    throw net::ConfigError("sweep variable must be S or N");
  std::string rhs = text.substr(eq + 1);
  auto dots = rhs.find("..");
  if (dots != std::string::npos) {
    long lo = std::stol(rhs.substr(0, dots));
    std::string rest = rhs.substr(dots + 2);
    long step = 1;
    if (auto colon = rest.find(':'); colon != std::string::npos) {
      step = std::stol(rest.substr(colon + 1));
      rest = rest.substr(0, colon);
    }
    long hi = std::stol(rest);
    if (step <= 0 || hi < lo) throw net::ConfigError("bad sweep range");
    for (long v = lo; v <= hi; v += step) spec.values.push_back(v);
  } else {
    for (long v : parse_capacities(rhs)) spec.values.push_back(v);
  }
  if (spec.values.empty()) throw net::ConfigError("empty sweep");
  return spec;
}

// ---- run output writers (all deterministic for a fixed seed) ----

void write_facility_outputs(const fs::path& dir, const net::RunConfig& cfg,
                            const net::FacilityRunResult& res, const net::Network& netw) {
  std::ostringstream coarse;
  coarse << "slot,value\n";
  for (std::size_t j = 0; j < res.coarse.values.size(); ++j)
    coarse << (j + 1) << ',' << res.coarse.values[j] << "\n";
  net::write_text_file(dir / "coarse.csv", coarse.str());

  std::ostringstream fees;
  fees << "user,fee\n";
  for (const auto& u : res.users) {
    std::ostringstream row;
    row << "slot,status,value\n";
    for (std::size_t j = 0; j < u.slots.size(); ++j) {
      row << (j + 1) << ',';
      if (const auto* known = std::get_if<proto::KnownCount>(&u.slots[j]))
        row << "count," << known->count << "\n";
      else
        row << "masked," << to_hex(std::get<proto::Masked>(u.slots[j]).raw) << "\n";
    }
    net::write_text_file(dir / ("user_" + std::to_string(u.user_id) + ".csv"), row.str());

    std::ostringstream keysiv;
    keysiv << "slot,key\n";
    for (const auto& [slot, key] : u.access_keys) keysiv << slot << ',' << to_hex(key) << "\n";
    net::write_text_file(dir / ("keys_user_" + std::to_string(u.user_id) + ".csv"), keysiv.str());

    fees << u.user_id << ',' << decimal_from_rat(u.fee) << "\n";
  }
  net::write_text_file(dir / "fees.csv", fees.str());
  net::write_text_file(dir / "traffic.csv", netw.ledger().to_csv());

  nlohmann::json summary{
      {"protocol", proto::protocol_name(cfg.protocol)},
      {"users", cfg.users},
      {"slots", cfg.slots},
      {"seed", cfg.seed},
      {"measured_bytes", netw.ledger().total_bytes()},
      {"estimated_bytes_per_user_stages12",
       eval::estimate_bytes_per_user(cfg.protocol, cfg.slots, cfg.key_bits)}};
  net::write_text_file(dir / "summary.json", summary.dump(2) + "\n");
}

void write_css_outputs(const fs::path& dir, const net::RunConfig& cfg,
                       const net::CssRunResult& res, const net::Network& netw) {
  std::ostringstream actions;
  actions << "action,slot\n";
  for (std::size_t k = 0; k < res.schedule.action_slots.size(); ++k)
    actions << (k + 1) << ',' << res.schedule.action_slots[k] << "\n";
  net::write_text_file(dir / "actions.csv", actions.str());

  std::ostringstream fees;
  fees << "user,fee\n";
  for (const auto& u : res.users) {
    std::ostringstream row;
    row << "action,q,P_scaled\n";
    for (std::size_t k = 0; k < u.fractions.size(); ++k)
      row << (k + 1) << ',' << decimal_from_rat(u.fractions[k]) << ','
          << u.scaled_totals[k].get_str(10) << "\n";
    net::write_text_file(dir / ("user_" + std::to_string(u.user_id) + ".csv"), row.str());
    fees << u.user_id << ',' << decimal_from_rat(u.fee) << "\n";
  }
  net::write_text_file(dir / "fees.csv", fees.str());
  net::write_text_file(dir / "traffic.csv", netw.ledger().to_csv());

  nlohmann::json summary{
      {"protocol", "css"},
      {"users", cfg.users},
      {"slots", cfg.slots},
      {"seed", cfg.seed},
      {"actions", res.schedule.action_slots.size()},
      {"residual_unserved", res.schedule.residual_unserved},
      {"measured_bytes", netw.ledger().total_bytes()},
      {"estimated_bytes_per_user_stages12",
       eval::estimate_bytes_per_user(cfg.protocol, cfg.slots, cfg.key_bits)}};
  net::write_text_file(dir / "summary.json", summary.dump(2) + "\n");
}

void print_timing(const proto::TimingReport& t) {
  std::cout << "timing (CPU seconds):\n";
  for (const auto& [key, secs] : t.seconds) std::cout << "  " << key << ": " << secs << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privacy-preserving facility and communal-service cost sharing"};
  app.require_subcommand(1);

  // ---- keygen ----
  auto* keygen = app.add_subcommand("keygen", "generate Paillier key material");
  unsigned kg_bits = 1024;
  std::string kg_mode = "common";
  int kg_parties = 0;
  unsigned kg_threshold = 0;
  std::string kg_out = "keys";
  std::optional<std::uint64_t> kg_seed;
  keygen->add_option("--bits", kg_bits, "modulus size in bits")->envname("PPSHARE_BITS");
  keygen->add_option("--key-mode", kg_mode, "common | threshold")->envname("PPSHARE_KEY_MODE");
  keygen->add_option("--parties", kg_parties, "N for threshold mode");
  keygen->add_option("--threshold-t", kg_threshold, "t for threshold mode");
  keygen->add_option("--out-dir", kg_out, "output directory")->envname("PPSHARE_OUT_DIR");
  keygen->add_option("--seed", kg_seed, "PRNG seed (entropy when omitted)")
      ->envname("PPSHARE_SEED");

  // ---- run ----
  auto* run = app.add_subcommand("run", "run a protocol end to end");
  std::string run_protocol = "ufs";
  std::string run_schedules, run_config_path, run_capacities, run_key_dir;
  std::string run_key_mode = "common";
  std::string run_out = "out";
  int run_users = 0, run_slots = 0;
  std::string run_scale = "100";
  std::string run_threshold_C = "100";
  unsigned run_threshold_t = 0, run_bits = 1024;
  std::optional<std::uint64_t> run_seed;
  std::string run_fee_rate = "1";
  bool run_random = false;
  run->add_option("--protocol", run_protocol, "ufs | cfs | css")->envname("PPSHARE_PROTOCOL");
  run->add_option("--schedules", run_schedules, "CSV input, one row per user");
  run->add_option("--config", run_config_path, "JSON run configuration file");
  run->add_option("--users", run_users, "number of users")->envname("PPSHARE_USERS");
  run->add_option("--slots", run_slots, "number of timeslots")->envname("PPSHARE_SLOTS");
  run->add_option("--scale", run_scale, "SRU scaling factor")->envname("PPSHARE_SCALE");
  run->add_option("--threshold-C", run_threshold_C, "service threshold (css)")
      ->envname("PPSHARE_THRESHOLD_C");
  run->add_option("--capacities", run_capacities, "capacity ladder, e.g. 10,20 (cfs)")
      ->envname("PPSHARE_CAPACITIES");
  run->add_option("--key-mode", run_key_mode, "common | threshold")->envname("PPSHARE_KEY_MODE");
  run->add_option("--threshold-t", run_threshold_t, "t for threshold mode");
  run->add_option("--key-dir", run_key_dir, "load key material instead of generating");
  run->add_option("--key-bits", run_bits, "modulus size when generating keys");
  run->add_option("--seed", run_seed, "PRNG seed (entropy when omitted)")
      ->envname("PPSHARE_SEED");
  run->add_option("--fee-rate", run_fee_rate, "published fee rate");
  run->add_flag("--random", run_random, "generate a random instance instead of --schedules");
  run->add_option("--out-dir", run_out, "output directory")->envname("PPSHARE_OUT_DIR");

  // ---- eval ----
  auto* ev = app.add_subcommand("eval", "accuracy / timing / traffic experiments");
  std::string ev_protocol = "both";
  std::string ev_sweep;
  int ev_users = 20, ev_slots = 48, ev_reps = 20;
  std::string ev_scale = "100", ev_threshold_C = "100";
  unsigned ev_bits = 128;
  std::optional<std::uint64_t> ev_seed;
  bool ev_bench = false;
  std::string ev_out = "report.csv";
  ev->add_option("--protocol", ev_protocol, "ufs | css | both")->envname("PPSHARE_PROTOCOL");
  ev->add_option("--sweep", ev_sweep, "S=1,10,100 or N=4..20[:step]");
  ev->add_option("--users", ev_users, "users when not swept")->envname("PPSHARE_USERS");
  ev->add_option("--slots", ev_slots, "timeslots")->envname("PPSHARE_SLOTS");
  ev->add_option("--scale", ev_scale, "scale when not swept")->envname("PPSHARE_SCALE");
  ev->add_option("--threshold-C", ev_threshold_C, "service threshold (css)")
      ->envname("PPSHARE_THRESHOLD_C");
  ev->add_option("--reps", ev_reps, "repetitions per grid point");
  ev->add_option("--key-bits", ev_bits, "modulus size for experiment keys");
  ev->add_option("--seed", ev_seed, "base PRNG seed")->envname("PPSHARE_SEED");
  ev->add_flag("--bench", ev_bench, "measure per-stage times instead of MRE");
  ev->add_option("--out", ev_out, "report CSV path")->envname("PPSHARE_REPORT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*keygen) {
      const std::uint64_t seed = pick_seed(kg_seed);
      net::RunConfig cfg;
      cfg.key_bits = kg_bits;
      cfg.seed = seed;
      if (kg_mode == "common") {
        cfg.key_mode = proto::KeyMode::Common;
      } else if (kg_mode == "threshold") {
        cfg.key_mode = proto::KeyMode::Threshold;
        cfg.users = kg_parties;
        cfg.threshold_t = kg_threshold;
        paillier::validate_threshold_params(static_cast<unsigned>(kg_parties), kg_threshold);
      } else {
        throw net::ConfigError("key-mode must be common or threshold");
      }
      auto keys = net::provision_keys(cfg);
      net::save_key_provision(kg_out, keys);
      std::cout << "wrote key material to " << kg_out << "\n";
      return kExitOk;
    }

    if (*run) {
      net::RunConfig cfg;
      if (!run_config_path.empty())
        cfg = net::run_config_from_json(
            nlohmann::json::parse(net::read_text_file(run_config_path)));
      if (run->count("--protocol") || run_config_path.empty())
        cfg.protocol = proto::protocol_from_name(run_protocol);
      if (run->count("--users")) cfg.users = run_users;
      if (run->count("--slots")) cfg.slots = run_slots;
      if (run->count("--scale") || run_config_path.empty()) cfg.scale = Bigint(run_scale);
      if (run->count("--threshold-C") || run_config_path.empty())
        cfg.threshold_C = rat_from_decimal(run_threshold_C);
      if (!run_capacities.empty()) cfg.capacities = parse_capacities(run_capacities);
      if (run->count("--key-mode") || run_config_path.empty())
        cfg.key_mode = run_key_mode == "threshold" ? proto::KeyMode::Threshold
                                                   : proto::KeyMode::Common;
      if (run->count("--threshold-t")) cfg.threshold_t = run_threshold_t;
      if (run->count("--key-bits") || run_config_path.empty()) cfg.key_bits = run_bits;
      if (run_seed)
        cfg.seed = *run_seed;
      else if (run_config_path.empty())
        cfg.seed = pick_seed(std::nullopt);
      if (run->count("--fee-rate") || run_config_path.empty())
        cfg.fee_rate = rat_from_decimal(run_fee_rate);

      std::vector<proto::UsageSchedule> schedules;
      std::vector<proto::DemandSchedule> demands;
      const bool is_css = cfg.protocol == proto::Protocol::CSS;
      if (run_random) {
        if (cfg.users <= 0) cfg.users = 20;
        if (cfg.slots <= 0) cfg.slots = 48;
        Rng inst = Rng(cfg.seed).derive("instance");
        if (is_css)
          demands = eval::random_demands(cfg.users, cfg.slots, Rat(10), Rat(20), inst);
        else
          schedules = eval::random_usage(cfg.users, cfg.slots, inst);
      } else {
        if (run_schedules.empty())
          throw net::ConfigError("either --schedules or --random is required");
        std::ifstream in(run_schedules);
        if (!in) throw net::ConfigError("cannot open " + run_schedules);
        if (is_css)
          demands = proto::parse_demand_csv(in);
        else
          schedules = proto::parse_usage_csv(in);
        const int rows = is_css ? static_cast<int>(demands.size())
                                : static_cast<int>(schedules.size());
        const int cols = is_css ? (demands.empty() ? 0 : demands.front().slots())
                                : (schedules.empty() ? 0 : schedules.front().slots());
        if (cfg.users == 0) cfg.users = rows;
        if (cfg.slots == 0) cfg.slots = cols;
        if (cfg.users != rows)
          throw net::ConfigError("schedules file has " + std::to_string(rows) +
                                 " rows but --users is " + std::to_string(cfg.users));
        if (cfg.slots != cols)
          throw net::ConfigError("schedules file has " + std::to_string(cols) +
                                 " columns but --slots is " + std::to_string(cfg.slots));
      }

      net::KeyProvision keys = run_key_dir.empty()
                                   ? net::provision_keys(cfg)
                                   : net::load_key_provision(run_key_dir, cfg.users);
      if (!run_key_dir.empty()) {
        cfg.key_mode = keys.common ? proto::KeyMode::Common : proto::KeyMode::Threshold;
        cfg.threshold_t = keys.threshold_t;
      }

      fs::create_directories(run_out);
      net::InProcNetwork netw;
      if (is_css) {
        auto res = net::run_css(cfg, demands, netw, keys);
        if (run_random) {
          std::ostringstream gen;
          proto::write_demand_csv(gen, demands);
          net::write_text_file(fs::path(run_out) / "demands_generated.csv", gen.str());
        }
        write_css_outputs(run_out, cfg, res, netw);
        eval::audit_trace(netw.trace());
        std::cout << "css run complete: " << res.schedule.action_slots.size()
                  << " service actions, outputs in " << run_out << "\n";
        print_timing(res.timing);
      } else {
        auto res = net::run_facility(cfg, schedules, netw, keys);
        if (run_random) {
          std::ostringstream gen;
          proto::write_usage_csv(gen, schedules);
          net::write_text_file(fs::path(run_out) / "schedules_generated.csv", gen.str());
        }
        write_facility_outputs(run_out, cfg, res, netw);
        eval::audit_trace(netw.trace());
        std::cout << proto::protocol_name(cfg.protocol) << " run complete, outputs in "
                  << run_out << "\n";
        print_timing(res.timing);
      }
      return kExitOk;
    }

    if (*ev) {
      const std::uint64_t seed = pick_seed(ev_seed);
      eval::ExperimentConfig base;
      base.users = ev_users;
      base.slots = ev_slots;
      base.scale = Bigint(ev_scale);
      base.threshold_C = rat_from_decimal(ev_threshold_C);
      base.key_bits = ev_bits;
      base.seed = seed;
      base.repetitions = ev_reps;

      std::vector<proto::Protocol> protocols;
      if (ev_protocol == "both") {
        protocols = {proto::Protocol::UFS, proto::Protocol::CSS};
      } else {
        protocols = {proto::protocol_from_name(ev_protocol)};
      }

      std::vector<eval::ExperimentReport> reports;
      for (proto::Protocol p : protocols) {
        eval::ExperimentConfig cfg = base;
        cfg.protocol = p;
        if (ev_bench) {
          std::vector<int> grid{4, 8, 12, 16, 20};
          if (!ev_sweep.empty()) {
            auto spec = parse_sweep(ev_sweep);
            if (spec.variable != 'N') throw net::ConfigError("--bench sweeps N only");
            grid.assign(spec.values.begin(), spec.values.end());
          }
          for (int n : grid) {
            eval::ExperimentConfig c2 = cfg;
            c2.users = n;
            reports.push_back(eval::bench_timing(c2));
          }
        } else if (!ev_sweep.empty()) {
          auto spec = parse_sweep(ev_sweep);
          if (spec.variable == 'S') {
            std::vector<Bigint> scales(spec.values.begin(), spec.values.end());
            auto rs = eval::run_scale_sweep(cfg, scales);
            reports.insert(reports.end(), rs.begin(), rs.end());
          } else {
            std::vector<int> ns(spec.values.begin(), spec.values.end());
            auto rs = eval::run_user_sweep(cfg, ns);
            reports.insert(reports.end(), rs.begin(), rs.end());
          }
        } else {
          reports.push_back(eval::run_mre_point(cfg));
        }
      }

      net::write_text_file(ev_out, eval::reports_to_csv(reports));
      std::cout << "wrote " << reports.size() << " report rows to " << ev_out << "\n";
      return kExitOk;
    }
  } catch (const net::ConfigError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const proto::ScheduleError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const proto::ProtocolAbort& e) {
    std::cerr << "protocol abort: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const proto::CapacityExceeded& e) {
    std::cerr << "protocol abort: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const paillier::CorruptCiphertext& e) {
    std::cerr << "protocol abort: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
