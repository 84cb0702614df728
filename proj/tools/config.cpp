#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>

#include "ergodeq/errors.hpp"
#include "ergodeq/lyapunov.hpp"
#include "ergodeq/operator.hpp"

namespace ergodeq::cli {

using nlohmann::json;

namespace {

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <class T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null())
    out.reset();
  else
    out = j.at(key).get<T>();
}

bool starts_with(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

}  // namespace

void to_json(json& j, const ExperimentConfig& c) {
  json alpha = c.system.alpha == "golden" ? json("golden") : json(c.system.alpha_cf);
  j = json{
      {"command", c.command},
      {"mode", c.mode},
      {"system", {{"alpha", alpha}, {"u0", c.system.u0}, {"K", c.system.K}, {"bit_cap", c.system.bit_cap}}},
      {"schedule", {{"s_max", c.schedule.s_max}, {"N", c.schedule.N}}},
      {"mc", {{"samples", c.mc.samples}, {"seed", opt_json(c.mc.seed)}}},
      {"tolerances", {{"eigen", opt_json(c.tol.eigen)}, {"threshold", c.tol.threshold}, {"eps", c.tol.eps}}},
      {"C1", c.C1},
      {"out", c.out},
      {"params",
       {{"potential", c.params.potential},
        {"compare", c.params.compare},
        {"side", c.params.side},
        {"degree", c.params.degree},
        {"N", c.params.N},
        {"bins", c.params.bins},
        {"k_max", c.params.k_max},
        {"depth", c.params.depth},
        {"E", c.params.E},
        {"E_lo", c.params.E_lo},
        {"E_hi", c.params.E_hi},
        {"E_step", c.params.E_step},
        {"delta", opt_json(c.params.delta)},
        {"gap_variant", c.params.gap_variant},
        {"trials", c.params.trials},
        {"mu", c.params.mu},
        {"m_hi", c.params.m_hi}}},
  };
}

void from_json(const json& j, ExperimentConfig& c) {
  read(j, "command", c.command);
  read(j, "mode", c.mode);
  if (j.contains("system")) {
    const auto& s = j.at("system");
    if (s.contains("alpha")) {
      const auto& a = s.at("alpha");
      if (a.is_string()) {
        if (a.get<std::string>() != "golden") throw ConfigError("alpha must be \"golden\" or a list of partial quotients");
        c.system.alpha = "golden";
        c.system.alpha_cf.clear();
      } else {
        c.system.alpha = "cf";
        c.system.alpha_cf = a.get<std::vector<long>>();
      }
    }
    if (s.contains("u0")) c.system.u0 = s.at("u0").is_string() ? s.at("u0").get<std::string>() : s.at("u0").dump();
    read(s, "K", c.system.K);
    read(s, "bit_cap", c.system.bit_cap);
  }
  if (j.contains("schedule")) {
    read(j.at("schedule"), "s_max", c.schedule.s_max);
    read(j.at("schedule"), "N", c.schedule.N);
  }
  if (j.contains("mc")) {
    read(j.at("mc"), "samples", c.mc.samples);
    read_opt(j.at("mc"), "seed", c.mc.seed);
  }
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    read_opt(t, "eigen", c.tol.eigen);
    read(t, "threshold", c.tol.threshold);
    read(t, "eps", c.tol.eps);
  }
  read(j, "C1", c.C1);
  read(j, "out", c.out);
  if (j.contains("params")) {
    const auto& p = j.at("params");
    read(p, "potential", c.params.potential);
    read(p, "compare", c.params.compare);
    read(p, "side", c.params.side);
    read(p, "degree", c.params.degree);
    read(p, "N", c.params.N);
    read(p, "bins", c.params.bins);
    read(p, "k_max", c.params.k_max);
    read(p, "depth", c.params.depth);
    read(p, "E", c.params.E);
    read(p, "E_lo", c.params.E_lo);
    read(p, "E_hi", c.params.E_hi);
    read(p, "E_step", c.params.E_step);
    read_opt(p, "delta", c.params.delta);
    read(p, "gap_variant", c.params.gap_variant);
    read(p, "trials", c.params.trials);
    read(p, "mu", c.params.mu);
    read(p, "m_hi", c.params.m_hi);
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    json j = json::parse(in);
    ExperimentConfig c;
    from_json(j, c);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
}

const std::vector<std::string>& modes(const std::string& command) {
  static const std::vector<std::string> none;
  static const std::vector<std::string> blocks = {"export"};
  static const std::vector<std::string> birkhoff = {"forward", "backward", "cesaro", "hopf", "oscillation"};
  static const std::vector<std::string> construct = {"shells"};
  static const std::vector<std::string> dos = {"gap", "truncation", "spatial", "counterexample", "limit"};
  static const std::vector<std::string> lyapunov = {"scan", "gap", "avalanche", "calibrate", "ac", "simon"};
  static const std::vector<std::string> probe = {"spectrum"};
  if (command == "blocks") return blocks;
  if (command == "birkhoff") return birkhoff;
  if (command == "construct") return construct;
  if (command == "dos") return dos;
  if (command == "lyapunov") return lyapunov;
  if (command == "probe") return probe;
  return none;
}

std::string default_mode(const std::string& command) {
  const auto& m = modes(command);
  return m.empty() ? "" : m.front();
}

namespace {

bool random_potential(const std::string& s) {
  return starts_with(s, "random:") || starts_with(s, "uniform:") || s == "thm2";
}

bool uses_source(const ExperimentConfig& c) {
  if (c.command == "probe") return true;
  if (c.command == "dos") return c.mode == "gap" || c.mode == "truncation" || c.mode == "limit";
  if (c.command == "lyapunov") return c.mode == "scan" || c.mode == "ac" || c.mode == "simon" || c.mode == "gap";
  return false;
}

void check_potential(const std::string& s) {
  if (s == "zero" || s == "thm2" || s == "tower") return;
  auto tail = [&](const std::string& p) { return s.substr(p.size()); };
  try {
    if (starts_with(s, "constant:")) {
      parse_rational(tail("constant:"));
      return;
    }
    if (starts_with(s, "random:")) {
      if (std::stol(tail("random:")) < 1) throw ConfigError("random:<den> needs den >= 1");
      return;
    }
    if (starts_with(s, "uniform:")) {
      if (!(std::stod(tail("uniform:")) >= 0)) throw ConfigError("uniform:<bound> needs bound >= 0");
      return;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse potential '" + s + "'");
  }
  throw ConfigError("unknown potential '" + s + "'");
}

}  // namespace

bool uses_monte_carlo(const ExperimentConfig& c) {
  if (c.command == "construct") return true;
  if (c.command == "birkhoff" && (c.mode == "hopf" || c.mode == "oscillation")) return true;
  if (c.command == "dos" && c.mode == "spatial") return true;
  if (c.command == "lyapunov" && (c.mode == "calibrate" || c.mode == "avalanche")) return true;
  if (c.command == "lyapunov" && c.mode == "gap" && c.params.gap_variant == "upper_vs_lower") return true;
  if (uses_source(c)) {
    if (random_potential(c.params.potential)) return true;
    if (c.command == "probe")
      for (const auto& s : c.params.compare)
        if (random_potential(s)) return true;
  }
  return false;
}

void validate(const ExperimentConfig& c) {
  const auto& m = modes(c.command);
  if (m.empty()) throw ConfigError("unknown command '" + c.command + "'");
  if (std::find(m.begin(), m.end(), c.mode) == m.end())
    throw ConfigError("command '" + c.command + "' has no mode '" + c.mode + "'");

  if (c.system.alpha != "golden") {
    if (c.system.alpha_cf.empty()) throw ConfigError("alpha continued fraction is empty");
    for (long a : c.system.alpha_cf)
      if (a < 1) throw ConfigError("partial quotients must be >= 1");
  }
  mpq_class u0;
  try {
    u0 = parse_rational(c.system.u0);
  } catch (const std::exception&) {
    throw ConfigError("cannot parse u0 '" + c.system.u0 + "'");
  }
  if (u0 <= 0 || u0 > 1) throw ConfigError("u0 must lie in (0, 1]");
  if (c.system.K < 1) throw ConfigError("K must be >= 1");
  if (c.system.bit_cap < 64) throw ConfigError("bit_cap must be >= 64");
  if (c.schedule.s_max < 1) throw ConfigError("s_max must be >= 1");
  if (c.command == "lyapunov" && (c.mode == "scan" || c.mode == "gap" || c.mode == "ac") &&
      (c.schedule.s_max < 4 || c.schedule.s_max > 20))
    throw ConfigError("exponent schedules need 4 <= s_max <= 20");
  if (c.command == "lyapunov" && c.mode == "calibrate" && c.schedule.s_max > 9)
    throw ConfigError("calibrate needs s_max <= 9");
  if (c.command == "lyapunov" && c.mode == "avalanche" && c.schedule.s_max > 12)
    throw ConfigError("avalanche needs s_max <= 12");
  for (std::size_t i = 0; i < c.schedule.N.size(); ++i) {
    if (c.schedule.N[i] < 1) throw ConfigError("schedule N entries must be >= 1");
    if (i > 0 && c.schedule.N[i] <= c.schedule.N[i - 1]) throw ConfigError("schedule N must be increasing");
  }
  if (c.mc.samples < 1) throw ConfigError("mc.samples must be >= 1");
  if (uses_monte_carlo(c) && !c.mc.seed) throw ConfigError("a seed is required for this experiment (--seed)");
  if (c.tol.eigen && !(*c.tol.eigen > 0)) throw ConfigError("eigen tolerance must be positive");
  if (!(c.tol.threshold > 0)) throw ConfigError("threshold must be positive");
  if (!(c.tol.eps > 0)) throw ConfigError("eps must be positive");
  if (!(c.C1 > 0)) throw ConfigError("C1 must be positive");

  const auto& p = c.params;
  parse_side(p.side);
  check_potential(p.potential);
  for (const auto& s : p.compare) check_potential(s);
  if (c.command == "probe" && p.compare.empty()) throw ConfigError("probe needs at least one --compare potential");
  if (p.degree < 0) throw ConfigError("degree must be >= 0");
  if (c.command == "dos" && c.mode == "gap" && p.degree < 1) throw ConfigError("gap needs degree >= 1");
  if (p.N < 1) throw ConfigError("N must be >= 1");
  if (p.bins < 1) throw ConfigError("bins must be >= 1");
  if (p.k_max < 1 || p.k_max > 6) throw ConfigError("k_max must be in 1..6");
  if (p.depth < 1 || p.depth > 60) throw ConfigError("depth must be in 1..60");
  if (c.command == "dos" && c.mode == "counterexample" && p.depth > 16)
    throw ConfigError("counterexample writes 2^depth rows; depth must be <= 16");
  if (!(p.E_step > 0) || p.E_hi < p.E_lo) throw ConfigError("energy grid needs E_step > 0 and E_lo <= E_hi");
  if (p.delta && !(*p.delta > 0)) throw ConfigError("delta must be positive");
  GapVariant gv = parse_gap_variant(p.gap_variant);
  if (c.command == "lyapunov" && c.mode == "gap") {
    double d = p.delta ? *p.delta : (gv == GapVariant::upper_vs_lower ? 2.0 : 6.0) * c.C1;
    if (std::fabs(p.E) <= d + 2) throw ConfigError("gap demo needs |E| > delta + 2");
  }
  if (c.command == "lyapunov" && c.mode == "simon" && p.N < 8) throw ConfigError("simon needs N >= 8");
  if (p.trials < 1) throw ConfigError("trials must be >= 1");
  if (!(p.mu > 1)) throw ConfigError("mu must exceed 1");
  if (p.m_hi < 1) throw ConfigError("m_hi must be >= 1");
}

RotationSystem make_system(const ExperimentConfig& c) {
  std::vector<long> period = c.system.alpha == "golden" ? std::vector<long>{1} : c.system.alpha_cf;
  return RotationSystem::make(period, parse_rational(c.system.u0));
}

MonteCarloConfig make_mc(const ExperimentConfig& c) {
  MonteCarloConfig mc;
  mc.samples = c.mc.samples;
  mc.seed = c.mc.seed;
  return mc;
}

PotentialSource make_source(const ExperimentConfig& c, const std::string& pot) {
  check_potential(pot);
  std::uint64_t seed = c.mc.seed.value_or(0);
  if (pot == "zero") return PotentialSource::constant(mpq_class(0));
  if (starts_with(pot, "constant:")) return PotentialSource::constant(parse_rational(pot.substr(9)));
  if (starts_with(pot, "random:")) return PotentialSource::random_rational(seed, std::stol(pot.substr(7)), 1);
  if (starts_with(pot, "uniform:")) return PotentialSource::random_uniform(seed, std::stod(pot.substr(8)));
  if (pot == "thm2") {
    FlatTower tower(make_system(c).alpha.approx());
    auto con = construct_thm2_potential(tower, c.params.k_max, make_mc(c));
    return thm2_potential(con, tower, {0.1, 1});
  }
  auto blocks = std::make_shared<BlockDecomposition>(build_blocks(make_system(c), c.system.K, c.system.bit_cap));
  return tower_potential(blocks);
}

}  // namespace ergodeq::cli
