#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace swn {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key = value run configuration ('#' comments). Unknown keys are errors:
// configs are contracts, not suggestions.
struct RunConfig {
  std::string mode = "verify-identities";  // solve | continue | diagnose | fueter
  int N = 12;
  double L = 1.0;
  int n = 2;
  double alpha = M_PI / 4;
  std::vector<double> schedule;            // for mode = continue
  std::string b_background = "trivial";    // trivial | random
  double b_max_angle = 0.2;
  int flux_units = 0;                      // flux sector of the initial A
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string input;                       // snapshot path for mode = diagnose
  int max_iters = 4000;
  double tol = 1e-6;
  int base_points = 20;
  int threads = 1;
  bool reference = false;                  // single-threaded deterministic mode

  std::string canonical_text() const {
    std::ostringstream ss;
    ss.precision(17);
    ss << "mode=" << mode << "\nN=" << N << "\nL=" << L << "\nn=" << n << "\nalpha=" << alpha
       << "\nschedule=";
    for (size_t i = 0; i < schedule.size(); ++i) ss << (i ? "," : "") << schedule[i];
    ss << "\nb_background=" << b_background << "\nb_max_angle=" << b_max_angle
       << "\nflux_units=" << flux_units << "\nseed=" << seed << "\ninput=" << input
       << "\nmax_iters=" << max_iters << "\ntol=" << tol << "\nbase_points=" << base_points
       << "\nreference=" << (reference ? 1 : 0) << "\n";
    return ss.str();
  }
};

inline std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> errors;
  auto bad = [&](const std::string& field, const std::string& why) {
    errors.push_back(field + ": " + why);
  };
  if (c.mode != "verify-identities" && c.mode != "solve" && c.mode != "continue" &&
      c.mode != "diagnose" && c.mode != "fueter")
    bad("mode", "must be one of verify-identities|solve|continue|diagnose|fueter");
  if (c.N < 4) bad("N", "must be >= 4");
  if (!(c.L > 0.0)) bad("L", "must be positive");
  if (c.n < 1 || c.n > 4) bad("n", "must lie in 1..4");
  if (c.mode == "solve" && !(c.alpha > 0.0 && c.alpha <= M_PI / 2 + 1e-15))
    bad("alpha", "must lie in (0, pi/2]");
  if (c.mode == "continue") {
    if (c.schedule.empty()) bad("schedule", "required for mode=continue");
    for (size_t i = 0; i < c.schedule.size(); ++i) {
      if (!(c.schedule[i] > 0.0 && c.schedule[i] <= M_PI / 2 + 1e-15))
        bad("schedule", "entries must lie in (0, pi/2]");
      if (i > 0 && !(c.schedule[i] < c.schedule[i - 1]))
        bad("schedule", "must be strictly decreasing");
    }
  }
  if (c.b_background != "trivial" && c.b_background != "random")
    bad("b_background", "must be trivial or random");
  if (c.mode == "diagnose" && c.input.empty()) bad("input", "snapshot path required for diagnose");
  if (c.max_iters < 1) bad("max_iters", "must be positive");
  if (!(c.tol > 0.0)) bad("tol", "must be positive");
  if (c.threads < 1) bad("threads", "must be >= 1");
  if (c.base_points < 1) bad("base_points", "must be >= 1");
  return errors;
}

inline std::vector<double> parse_schedule(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

inline void apply_key(RunConfig& c, const std::string& key, const std::string& value) {
  try {
    if (key == "mode") c.mode = value;
    else if (key == "N") c.N = std::stoi(value);
    else if (key == "L") c.L = std::stod(value);
    else if (key == "n") c.n = std::stoi(value);
    else if (key == "alpha") c.alpha = std::stod(value);
    else if (key == "schedule") c.schedule = parse_schedule(value);
    else if (key == "b_background") c.b_background = value;
    else if (key == "b_max_angle") c.b_max_angle = std::stod(value);
    else if (key == "flux_units") c.flux_units = std::stoi(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "input") c.input = value;
    else if (key == "max_iters") c.max_iters = std::stoi(value);
    else if (key == "tol") c.tol = std::stod(value);
    else if (key == "base_points") c.base_points = std::stoi(value);
    else if (key == "threads") c.threads = std::stoi(value);
    else if (key == "reference") c.reference = (value == "1" || value == "true");
    else throw ConfigError("unknown key '" + key + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse value '" + value + "'");
  }
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  RunConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    size_t eq = line.find('=');
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      size_t b = s.find_first_not_of(" \t\r\n");
      size_t e = s.find_last_not_of(" \t\r\n");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_key(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

}  // namespace swn
