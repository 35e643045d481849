#include "logdiff/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "logdiff/barenblatt.hpp"

namespace logdiff {

const char* command_name(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::barenblatt_table: return "barenblatt-table";
    case Command::match_k0: return "match-k0";
    case Command::verify: return "verify";
    case Command::theorem1: return "theorem1";
    case Command::theorem2: return "theorem2";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double x = std::stod(value, &used);
    if (used != value.size()) throw ConfigError("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse number from '" + value + "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  const double x = parse_number(key, value);
  if (x != std::floor(x)) throw ConfigError("key '" + key + "' must be an integer");
  return static_cast<int>(x);
}

Command parse_command_name(const std::string& name) {
  for (Command c : {Command::simulate, Command::barenblatt_table, Command::match_k0,
                    Command::verify, Command::theorem1, Command::theorem2})
    if (name == command_name(c)) return c;
  throw ConfigError("unknown command '" + name + "'");
}

// descriptor forms: barenblatt(k) | mean-of-barenblatts(k1,k2,w) |
// barenblatt-plus-bump(k0,amplitude,lo,hi)
InitialData parse_initial(const std::string& value) {
  const auto open = value.find('(');
  const auto close = value.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw ConfigError("key 'initial': expected descriptor(name(args)), got '" + value + "'");
  const std::string name = trim(value.substr(0, open));
  std::vector<double> args;
  std::stringstream ss(value.substr(open + 1, close - open - 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) args.push_back(parse_number("initial", item));
  }
  InitialData init;
  if (name == "barenblatt") {
    if (args.size() != 1) throw ConfigError("initial barenblatt(k) takes 1 argument");
    init.kind = InitialKind::barenblatt;
    init.k = args[0];
  } else if (name == "mean-of-barenblatts") {
    if (args.size() != 3)
      throw ConfigError("initial mean-of-barenblatts(k1,k2,weight) takes 3 arguments");
    init.kind = InitialKind::mean_of_barenblatts;
    init.k1 = args[0];
    init.k2 = args[1];
    init.weight = args[2];
  } else if (name == "barenblatt-plus-bump") {
    if (args.size() != 4)
      throw ConfigError("initial barenblatt-plus-bump(k0,amplitude,lo,hi) takes 4 arguments");
    init.kind = InitialKind::barenblatt_plus_bump;
    init.k0 = args[0];
    init.amplitude = args[1];
    init.support_lo = args[2];
    init.support_hi = args[3];
  } else {
    throw ConfigError("key 'initial': unknown descriptor '" + name + "'");
  }
  return init;
}

void apply_command_defaults(RunConfig& cfg) {
  switch (cfg.command) {
    case Command::match_k0:
      cfg.r_max = 300.0;
      cfg.m_nodes = 4000;
      cfg.stretch = 1.0025;
      cfg.initial.kind = InitialKind::mean_of_barenblatts;
      break;
    case Command::theorem1:
      cfg.k1 = 4.0;
      cfg.k2 = 1.0;
      cfg.initial.kind = InitialKind::mean_of_barenblatts;
      cfg.horizon = 10.0;
      break;
    case Command::theorem2:
      cfg.dimension = 5;
      cfg.r_max = 20.0;
      cfg.m_nodes = 400;
      cfg.horizon = 5.0;
      cfg.initial.kind = InitialKind::barenblatt_plus_bump;
      break;
    case Command::simulate:
    case Command::verify:
    case Command::barenblatt_table:
      break;
  }
}

void validate(RunConfig& cfg) {
  if (cfg.dimension < 3) throw ConfigError("dimension must be >= 3");
  if (!(cfg.t_extinction > 0.0)) throw ConfigError("t_extinction must be > 0");
  if (!(cfg.r_max > 0.0) || cfg.m_nodes < 16 || !(cfg.stretch >= 1.0))
    throw ConfigError("grid parameters out of range (r_max > 0, m_nodes >= 16, stretch >= 1)");
  if (!(cfg.dt > 0.0) || !(cfg.newton_tol > 0.0) || cfg.newton_max_iter < 1)
    throw ConfigError("solver parameters out of range");
  if (cfg.k1 != 0.0 && cfg.k2 != 0.0) {
    if (cfg.k1 == cfg.k2)
      throw ConfigError("k1 = k2: the sandwich requires strict k1 > k2 > 0");
    if (!(cfg.k1 > cfg.k2) || !(cfg.k2 > 0.0))
      throw ConfigError("sandwich parameters require k1 > k2 > 0");
  }
  switch (cfg.command) {
    case Command::theorem1:
      if (cfg.dimension != 3)
        throw ConfigError("theorem1 requires dimension = 3 (mass matching needs an "
                          "integrable difference)");
      if (cfg.k1 == 0.0 || cfg.k2 == 0.0)
        throw ConfigError("theorem1 requires the sandwich parameters k1 and k2");
      break;
    case Command::theorem2:
      if (cfg.dimension == 4)
        throw ConfigError("theorem2 refused for N = 4: the theory covers N = 3 or N >= 5");
      if (cfg.dimension < 5)
        throw ConfigError("theorem2 requires dimension >= 5 (weighted space needs "
                          "alpha = (N-4)/2 > 0)");
      break;
    case Command::match_k0:
      if (cfg.dimension != 3)
        throw ConfigError("match-k0 requires dimension = 3");
      break;
    default:
      break;
  }
  if (cfg.initial.kind == InitialKind::mean_of_barenblatts) {
    if (cfg.initial.weight < 0.0 || cfg.initial.weight > 1.0)
      throw ConfigError("mean-of-barenblatts weight must lie in [0, 1]");
    if (!(cfg.initial.k1 > 0.0) || !(cfg.initial.k2 > 0.0))
      throw ConfigError("mean-of-barenblatts parameters must be positive");
  }
  if (cfg.initial.kind == InitialKind::barenblatt_plus_bump) {
    if (!(cfg.initial.k0 > 0.0)) throw ConfigError("bump initial data needs k0 > 0");
    if (!(cfg.initial.support_hi > cfg.initial.support_lo) || cfg.initial.support_lo < 0.0)
      throw ConfigError("bump support must satisfy 0 <= lo < hi");
    if (std::abs(cfg.initial.amplitude) >= 1.0)
      throw ConfigError("bump amplitude must stay below 1 in magnitude");
  }
}

}  // namespace

RunConfig parse_config(const std::string& text, Command command) {
  RunConfig cfg;
  cfg.command = command;
  apply_command_defaults(cfg);

  bool initial_given = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");

    if (key == "command") {
      if (parse_command_name(value) != command)
        throw ConfigError("config 'command = " + value + "' does not match subcommand '" +
                          command_name(command) + "'");
    } else if (key == "dimension") {
      cfg.dimension = parse_int(key, value);
    } else if (key == "t_extinction") {
      cfg.t_extinction = parse_number(key, value);
    } else if (key == "k1") {
      cfg.k1 = parse_number(key, value);
    } else if (key == "k2") {
      cfg.k2 = parse_number(key, value);
    } else if (key == "k0") {
      cfg.k0 = parse_number(key, value);
    } else if (key == "r_max") {
      cfg.r_max = parse_number(key, value);
    } else if (key == "m_nodes") {
      cfg.m_nodes = parse_int(key, value);
    } else if (key == "stretch") {
      cfg.stretch = parse_number(key, value);
    } else if (key == "dt") {
      cfg.dt = parse_number(key, value);
    } else if (key == "newton_tol") {
      cfg.newton_tol = parse_number(key, value);
    } else if (key == "newton_max_iter") {
      cfg.newton_max_iter = parse_int(key, value);
    } else if (key == "boundary") {
      if (value == "pinned")
        cfg.boundary = BoundaryMode::pinned_barenblatt;
      else if (value == "fitted_tail")
        cfg.boundary = BoundaryMode::fitted_tail;
      else
        throw ConfigError("key 'boundary': expected pinned | fitted_tail");
    } else if (key == "boundary_k") {
      cfg.boundary_k = parse_number(key, value);
    } else if (key == "frame") {
      if (value == "physical")
        cfg.frame = FrameKind::physical;
      else if (value == "selfsimilar")
        cfg.frame = FrameKind::selfsimilar;
      else
        throw ConfigError("key 'frame': expected physical | selfsimilar");
    } else if (key == "horizon") {
      cfg.horizon = parse_number(key, value);
    } else if (key == "initial") {
      cfg.initial = parse_initial(value);
      initial_given = true;
    } else if (key == "snapshots") {
      std::stringstream ss(value);
      std::string item;
      cfg.snapshots.clear();
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) cfg.snapshots.push_back(parse_number(key, item));
      }
    } else if (key == "positivity_floor") {
      cfg.positivity_floor = parse_number(key, value);
    } else if (key == "time_scheme") {
      if (value == "backward_euler")
        cfg.scheme = TimeScheme::backward_euler;
      else if (value == "trbdf2")
        cfg.scheme = TimeScheme::trbdf2;
      else
        throw ConfigError("key 'time_scheme': expected backward_euler | trbdf2");
    } else if (key == "bracket_lo") {
      cfg.bracket_lo = parse_number(key, value);
    } else if (key == "bracket_hi") {
      cfg.bracket_hi = parse_number(key, value);
    } else if (key == "seed") {
      cfg.seed = static_cast<unsigned>(parse_int(key, value));
    } else {
      throw ConfigError("unknown key '" + key + "' (line " + std::to_string(lineno) + ")");
    }
  }

  // Sandwich keys and mean-of-barenblatts descriptors keep each other in
  // sync when only one of them was given.
  if (initial_given && cfg.initial.kind == InitialKind::mean_of_barenblatts &&
      cfg.k1 == 0.0 && cfg.k2 == 0.0) {
    cfg.k1 = std::max(cfg.initial.k1, cfg.initial.k2);
    cfg.k2 = std::min(cfg.initial.k1, cfg.initial.k2);
  }
  if (!initial_given && cfg.initial.kind == InitialKind::mean_of_barenblatts &&
      cfg.k1 != 0.0 && cfg.k2 != 0.0) {
    cfg.initial.k1 = cfg.k1;
    cfg.initial.k2 = cfg.k2;
  }
  validate(cfg);
  return cfg;
}

double bump_profile(double r, double lo, double hi) {
  if (r <= lo || r >= hi) return 0.0;
  const double y = (2.0 * r - lo - hi) / (hi - lo);
  return std::exp(1.0 - 1.0 / (1.0 - y * y));
}

RadialProfile build_initial_data(const RunConfig& config, GridPtr grid, bool selfsimilar,
                                 double pin_k) {
  const int n = grid->dimension();
  const double T = config.t_extinction;
  const InitialData& init = config.initial;

  auto rescaled_of = [&](double r, double k) {
    return selfsimilar ? rescaled_barenblatt_value(r, k, n)
                       : barenblatt_value(r, 0.0, {k, T, n});
  };
  std::vector<double> vals(grid->node_count());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double r = grid->node(i);
    switch (init.kind) {
      case InitialKind::barenblatt:
        vals[i] = rescaled_of(r, init.k);
        break;
      case InitialKind::mean_of_barenblatts:
        vals[i] = init.weight * rescaled_of(r, init.k1) +
                  (1.0 - init.weight) * rescaled_of(r, init.k2);
        break;
      case InitialKind::barenblatt_plus_bump:
        vals[i] = rescaled_of(r, init.k0) *
                  (1.0 + init.amplitude * bump_profile(r, init.support_lo, init.support_hi));
        break;
    }
  }

  // Tail law and boundary node. Pinned runs take both from the pin; the
  // generic case fits the descriptor's own far field.
  double c, ktail;
  if (selfsimilar) {
    c = 2.0 * (n - 2);
    ktail = pin_k;
  } else {
    c = 2.0 * (n - 2) * T;
    const double scale = std::exp(-2.0 * std::log(T) / (n - 2));
    ktail = pin_k * scale;
  }
  if (pin_k <= 0.0) {
    // No pin: effective far-field parameter of the descriptor itself.
    double keff = 0.0;
    switch (init.kind) {
      case InitialKind::barenblatt: keff = init.k; break;
      case InitialKind::mean_of_barenblatts:
        keff = init.weight * init.k1 + (1.0 - init.weight) * init.k2;
        break;
      case InitialKind::barenblatt_plus_bump: keff = init.k0; break;
    }
    ktail = selfsimilar ? keff : keff * std::exp(-2.0 * std::log(T) / (n - 2));
  }
  vals.back() = c / (ktail + grid->r_max() * grid->r_max());
  return RadialProfile(std::move(grid), std::move(vals), TailLaw{c, ktail});
}

}  // namespace logdiff
