#pragma once

// Flat-section config files ([section] headers, key = value lines, '#'
// comments) mapping onto the run configuration, plus rendering back to text
// so a run's provenance can be re-executed verbatim.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "synthcast/csv.hpp"
#include "synthcast/sim.hpp"

namespace synthcast {

struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(const std::string& field_, const std::string& message)
      : std::runtime_error("config error in `" + field_ + "`: " + message),
        field(field_) {}
};

struct RunConfig {
  std::uint64_t master_seed = 20240101;
  int replications = 100;
  std::string output_dir = "out";
  int threads = 1;
  ReplicationConfig rep;

  Protocol protocol() const { return rep.protocol; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& field, const std::string& v) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected a number, got `" + v + "`");
  }
}

inline long long parse_int(const std::string& field, const std::string& v) {
  try {
    size_t pos = 0;
    long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected an integer, got `" + v + "`");
  }
}

}  // namespace detail

inline void apply_config_entry(RunConfig& cfg, const std::string& section,
                               const std::string& key, const std::string& value) {
  const std::string field = section.empty() ? key : section + "." + key;
  using detail::parse_double;
  using detail::parse_int;
  if (section == "run") {
    if (key == "master_seed")
      cfg.master_seed = static_cast<std::uint64_t>(parse_int(field, value));
    else if (key == "replications")
      cfg.replications = static_cast<int>(parse_int(field, value));
    else if (key == "output_dir")
      cfg.output_dir = value;
    else if (key == "threads")
      cfg.threads = static_cast<int>(parse_int(field, value));
    else if (key == "protocol") {
      if (value == "full")
        cfg.rep.protocol = Protocol::full_rerun;
      else if (value == "warm")
        cfg.rep.protocol = Protocol::warm_start;
      else
        throw ConfigError(field, "expected `full` or `warm`");
    } else
      throw ConfigError(field, "unknown key");
  } else if (section == "dgp") {
    DgpConfig& d = cfg.rep.dgp;
    if (key == "noise_var") d.noise_var = parse_double(field, value);
    else if (key == "coef13") d.coef13 = parse_double(field, value);
    else if (key == "coef23") d.coef23 = parse_double(field, value);
    else if (key == "var1") d.var1 = parse_double(field, value);
    else if (key == "var2") d.var2 = parse_double(field, value);
    else if (key == "theta_init") d.theta_init = parse_double(field, value);
    else if (key == "a_init") d.a_init = parse_double(field, value);
    else if (key == "burn") d.burn = static_cast<int>(parse_int(field, value));
    else if (key == "total_after_burn")
      d.total_after_burn = static_cast<int>(parse_int(field, value));
    else throw ConfigError(field, "unknown key");
  } else if (section == "agents") {
    AgentConfig& a = cfg.rep.agent;
    if (key == "n0") a.n0 = parse_double(field, value);
    else if (key == "s0") a.s0 = parse_double(field, value);
    else if (key == "delta") a.discounts.delta = parse_double(field, value);
    else if (key == "beta") a.discounts.beta = parse_double(field, value);
    else throw ConfigError(field, "unknown key");
  } else if (section == "bps") {
    BpsConfig& b = cfg.rep.bps;
    if (key == "n0") b.n0 = parse_double(field, value);
    else if (key == "s0") b.s0 = parse_double(field, value);
    else if (key == "c0") b.c0 = parse_double(field, value);
    else if (key == "delta") b.discounts.delta = parse_double(field, value);
    else if (key == "beta") b.discounts.beta = parse_double(field, value);
    else if (key == "burn_in") b.burn_in = static_cast<int>(parse_int(field, value));
    else if (key == "kept_draws")
      b.kept_draws = static_cast<int>(parse_int(field, value));
    else if (key == "warm_start_burn")
      b.warm_start_burn = static_cast<int>(parse_int(field, value));
    else if (key == "training")
      cfg.rep.bps_training = static_cast<int>(parse_int(field, value));
    else throw ConfigError(field, "unknown key");
  } else {
    throw ConfigError(field, "unknown section");
  }
}

inline RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("line " + std::to_string(line_no), "malformed section header");
      section = detail::trim(t.substr(1, t.size() - 2));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    apply_config_entry(cfg, section, key, value);
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open file `" + path + "`");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline void validate(const RunConfig& cfg) {
  if (cfg.replications < 1)
    throw ConfigError("replications", "must be >= 1");
  if (cfg.threads < 1) throw ConfigError("threads", "must be >= 1");
  cfg.rep.dgp.validate();
  cfg.rep.bps.validate();
  cfg.rep.agent.discounts.validate();
}

inline std::string render_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[run]\n";
  out << "master_seed = " << cfg.master_seed << "\n";
  out << "replications = " << cfg.replications << "\n";
  out << "output_dir = " << cfg.output_dir << "\n";
  out << "threads = " << cfg.threads << "\n";
  out << "protocol = "
      << (cfg.rep.protocol == Protocol::warm_start ? "warm" : "full") << "\n";
  const DgpConfig& d = cfg.rep.dgp;
  out << "\n[dgp]\n";
  out << "noise_var = " << format_double(d.noise_var) << "\n";
  out << "coef13 = " << format_double(d.coef13) << "\n";
  out << "coef23 = " << format_double(d.coef23) << "\n";
  out << "var1 = " << format_double(d.var1) << "\n";
  out << "var2 = " << format_double(d.var2) << "\n";
  out << "theta_init = " << format_double(d.theta_init) << "\n";
  out << "a_init = " << format_double(d.a_init) << "\n";
  out << "burn = " << d.burn << "\n";
  out << "total_after_burn = " << d.total_after_burn << "\n";
  const AgentConfig& a = cfg.rep.agent;
  out << "\n[agents]\n";
  out << "n0 = " << format_double(a.n0) << "\n";
  out << "s0 = " << format_double(a.s0) << "\n";
  out << "delta = " << format_double(a.discounts.delta) << "\n";
  out << "beta = " << format_double(a.discounts.beta) << "\n";
  const BpsConfig& b = cfg.rep.bps;
  out << "\n[bps]\n";
  out << "n0 = " << format_double(b.n0) << "\n";
  out << "s0 = " << format_double(b.s0) << "\n";
  out << "c0 = " << format_double(b.c0) << "\n";
  out << "delta = " << format_double(b.discounts.delta) << "\n";
  out << "beta = " << format_double(b.discounts.beta) << "\n";
  out << "burn_in = " << b.burn_in << "\n";
  out << "kept_draws = " << b.kept_draws << "\n";
  out << "warm_start_burn = " << b.warm_start_burn << "\n";
  out << "training = " << cfg.rep.bps_training << "\n";
  return out.str();
}

}  // namespace synthcast
