#include "noma/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace noma {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_number(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse number '" + v + "'");
  }
  if (pos != v.size())
    throw ConfigError("config key '" + key + "': trailing junk in '" + v + "'");
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  cfg.scenario = Scenario::with_uniform_energy(4, 0.2);

  std::vector<std::pair<std::string, std::string>> entries;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }

  // n_devices first so energy lists can be validated against it.
  std::vector<double> e_max_raw;
  bool have_emax = false;
  for (const auto& [key, value] : entries) {
    if (key == "n_devices")
      cfg.scenario.n_devices = static_cast<int>(parse_number(key, value));
  }
  for (const auto& [key, value] : entries) {
    if (key == "n_devices") {
    } else if (key == "bandwidth_hz") {
      cfg.scenario.bandwidth_hz = parse_number(key, value);
    } else if (key == "noise_psd_dbm_hz") {
      cfg.scenario.noise_psd_dbm_hz = parse_number(key, value);
    } else if (key == "pathloss_exp") {
      cfg.scenario.pathloss_exp = parse_number(key, value);
    } else if (key == "t_max_s") {
      cfg.scenario.t_max_s = parse_number(key, value);
    } else if (key == "k_common_bits") {
      cfg.scenario.k_common_bits = parse_number(key, value);
    } else if (key == "e_max_j") {
      have_emax = true;
      e_max_raw.clear();
      for (const auto& item : split_list(value))
        e_max_raw.push_back(parse_number(key, item));
      if (e_max_raw.empty())
        throw ConfigError("config key 'e_max_j': empty list");
    } else if (key == "cell_radius_m") {
      cfg.scenario.cell_radius_m = parse_number(key, value);
    } else if (key == "min_dist_m") {
      cfg.scenario.min_dist_m = parse_number(key, value);
    } else if (key == "n_trials") {
      cfg.n_trials = static_cast<int>(parse_number(key, value));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_number(key, value));
    } else if (key == "schemes") {
      cfg.schemes.clear();
      for (const auto& item : split_list(value))
        cfg.schemes.push_back(scheme_from_name(item));
      if (cfg.schemes.empty())
        throw ConfigError("config key 'schemes': empty list");
    } else if (key == "eps") {
      cfg.eps = parse_number(key, value);
    } else if (key == "n_max") {
      cfg.n_max = static_cast<int>(parse_number(key, value));
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_number(key, value));
    } else if (key == "oracle_resolution") {
      cfg.oracle_resolution = static_cast<int>(parse_number(key, value));
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  if (have_emax) {
    if (e_max_raw.size() == 1)
      cfg.scenario.e_max_j.assign(
          static_cast<std::size_t>(cfg.scenario.n_devices), e_max_raw[0]);
    else if (static_cast<int>(e_max_raw.size()) == cfg.scenario.n_devices)
      cfg.scenario.e_max_j = e_max_raw;
    else
      throw ConfigError("config key 'e_max_j': list length must be 1 or n_devices");
  } else {
    cfg.scenario.e_max_j.assign(static_cast<std::size_t>(cfg.scenario.n_devices),
                                0.2);
  }

  cfg.scenario.validate();
  cfg.echo = std::move(entries);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string render_run_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "n_devices = " << cfg.scenario.n_devices << "\n";
  out << "bandwidth_hz = " << format_double(cfg.scenario.bandwidth_hz) << "\n";
  out << "noise_psd_dbm_hz = " << format_double(cfg.scenario.noise_psd_dbm_hz)
      << "\n";
  out << "pathloss_exp = " << format_double(cfg.scenario.pathloss_exp) << "\n";
  out << "t_max_s = " << format_double(cfg.scenario.t_max_s) << "\n";
  out << "k_common_bits = " << format_double(cfg.scenario.k_common_bits) << "\n";
  out << "e_max_j = ";
  for (std::size_t i = 0; i < cfg.scenario.e_max_j.size(); ++i)
    out << (i ? "," : "") << format_double(cfg.scenario.e_max_j[i]);
  out << "\n";
  out << "cell_radius_m = " << format_double(cfg.scenario.cell_radius_m) << "\n";
  out << "min_dist_m = " << format_double(cfg.scenario.min_dist_m) << "\n";
  out << "n_trials = " << cfg.n_trials << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "schemes = ";
  for (std::size_t i = 0; i < cfg.schemes.size(); ++i)
    out << (i ? "," : "") << scheme_name(cfg.schemes[i]);
  out << "\n";
  out << "eps = " << format_double(cfg.eps) << "\n";
  out << "n_max = " << cfg.n_max << "\n";
  out << "threads = " << cfg.threads << "\n";
  out << "oracle_resolution = " << cfg.oracle_resolution << "\n";
  return out.str();
}

}  // namespace noma
