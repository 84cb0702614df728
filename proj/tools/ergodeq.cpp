// ergodeq command-line driver: config -> experiment -> CSV/JSON artifacts.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "config.hpp"
#include "json.hpp"

#include "ergodeq/birkhoff.hpp"
#include "ergodeq/csv.hpp"
#include "ergodeq/dos.hpp"
#include "ergodeq/errors.hpp"
#include "ergodeq/lyapunov.hpp"
#include "ergodeq/operator.hpp"
#include "ergodeq/parallel.hpp"

using namespace ergodeq;
using ergodeq::cli::ExperimentConfig;
using nlohmann::json;

namespace {

// Schemas written by the driver itself; the rest live in csv.hpp.
constexpr const char* kWitnesses = "n,log2_index,average_lo,average_hi,lower_bound_lo,log2_t_over_q_lo,log2_t_over_q_hi";
constexpr const char* kBackward = "k,average_lo,average_hi,certificate,log2_bound_hi";
constexpr const char* kTruncMoments = "degree,dk,dktilde";

const char* kFooter = R"(Output files (CSV columns; JSON reports carry "config" and "seed" keys):
  blocks.csv             k,beta,log2_p,p,q,q_mode,t,t_mode
  averages.csv           index,lo,hi,direction,tag
  witnesses.csv          n,log2_index,average_lo,average_hi,lower_bound_lo,log2_t_over_q_lo,log2_t_over_q_hi
  backward.csv           k,average_lo,average_hi,certificate,log2_bound_hi
  hopf.csv               N,epsilon,exceed_fraction,mean_average
  shells.csv             k,N_k,epsilon,parity
  oscillation.csv        k,N_k,samples,violations,fraction,wilson_upper,threshold,pass
  spatial_moments.csv    degree,estimate,std_error
  truncation_moments.csv degree,dk,dktilde
  histogram_dktilde.csv  bin_lo,bin_hi,mass
  moments.csv            N,degree,dk,dktilde,gap
  counterexample.csv     l,measure,a_l,s_l
  limit_scan.csv         N,value,tail_min,tail_max
  exponents.csv          E,Lbar_plus,Lunder_plus,Lbar_minus,Lunder_minus,s_max
  spectrum.csv           j,eigenvalue
  gap.json, avalanche.json, calibration.json, ac.json, simon.json, probe.json
Every CSV starts with '# config: <json>' and '# seed: <seed>' lines.
Potentials: zero | constant:<q> | random:<den> | uniform:<bound> | thm2 | tower
Exit codes: 0 ok, 2 invalid config, 3 precision or budget exhausted, 1 other errors.)";

class Writer {
 public:
  explicit Writer(const ExperimentConfig& c) : cfg_(c), dir_(c.out) {
    std::filesystem::create_directories(dir_);
    json j = c;
    config_line_ = j.dump();
    seed_line_ = c.mc.seed ? std::to_string(*c.mc.seed) : "none";
  }

  void csv(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream os = open(name);
    csv::metadata(os, {"config: " + config_line_, "seed: " + seed_line_});
    body(os);
  }

  void report(const std::string& name, json j) {
    j["config"] = json(cfg_);
    j["seed"] = cfg_.mc.seed ? json(*cfg_.mc.seed) : json(nullptr);
    std::ofstream os = open(name);
    os << j.dump(2) << '\n';
  }

 private:
  std::ofstream open(const std::string& name) {
    auto path = dir_ / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + path.string());
    std::cout << path.string() << '\n';
    return os;
  }

  const ExperimentConfig& cfg_;
  std::filesystem::path dir_;
  std::string config_line_, seed_line_;
};

std::string height_text(const HeightValue& h) {
  if (h.is_exact()) return h.value().get_str();
  return "2^" + csv::num(h.log2_approx());
}

// JSON numbers cannot be inf or nan.
json jnum(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::shared_ptr<BlockDecomposition> blocks_of(const ExperimentConfig& c) {
  return std::make_shared<BlockDecomposition>(build_blocks(cli::make_system(c), c.system.K, c.system.bit_cap));
}

FlatTower flat_tower(const ExperimentConfig& c) { return FlatTower(cli::make_system(c).alpha.approx()); }

void write_shells(Writer& w, const Thm2Construction& con) {
  w.csv("shells.csv", [&](std::ostream& os) {
    os << csv::kShells << '\n';
    for (std::size_t k = 0; k < con.N.size(); ++k)
      os << k << ',' << con.N[k] << ',' << csv::num(con.epsilon[k]) << ','
         << Thm2Construction::parity(static_cast<int>(k)) << '\n';
  });
}

void run_blocks(const ExperimentConfig& c, Writer& w) {
  auto b = blocks_of(c);
  w.csv("blocks.csv", [&](std::ostream& os) { write_blocks_csv(os, *b); });
}

void run_birkhoff(const ExperimentConfig& c, Writer& w) {
  const auto& m = c.mode;
  if (m == "forward") {
    auto b = blocks_of(c);
    std::vector<ForwardWitness> ws;
    for (long n = 1; n <= b->K; ++n)
      if (is_new_minimum(*b, n)) ws.push_back(block_average_forward(*b, n));
    w.csv("averages.csv", [&](std::ostream& os) {
      os << csv::kAverages << '\n';
      for (const auto& x : ws)
        os << height_text(x.index) << ',' << csv::num(x.average.lo_d()) << ',' << csv::num(x.average.hi_d())
           << ",forward,witness\n";
    });
    w.csv("witnesses.csv", [&](std::ostream& os) {
      os << kWitnesses << '\n';
      for (const auto& x : ws)
        os << x.n << ',' << csv::num(x.index.log2_approx()) << ',' << csv::num(x.average.lo_d()) << ','
           << csv::num(x.average.hi_d()) << ',' << csv::num(x.lower_bound.lo_d()) << ','
           << csv::num(x.log2_t_over_q.lo_d()) << ',' << csv::num(x.log2_t_over_q.hi_d()) << '\n';
    });
  } else if (m == "backward") {
    auto b = blocks_of(c);
    std::vector<BackwardAverage> rows;
    for (long k = 1; k <= b->K; ++k) rows.push_back(block_average_backward(*b, k));
    w.csv("averages.csv", [&](std::ostream& os) {
      os << csv::kAverages << '\n';
      for (const auto& r : rows)
        os << height_text(b->t_prime(r.k)) << ',' << csv::num(r.average.lo_d()) << ','
           << csv::num(r.average.hi_d()) << ",backward,block_end\n";
    });
    w.csv("backward.csv", [&](std::ostream& os) {
      os << kBackward << '\n';
      for (const auto& r : rows)
        os << r.k << ',' << csv::num(r.average.lo_d()) << ',' << csv::num(r.average.hi_d()) << ','
           << to_string(r.certificate) << ',' << csv::num(r.log2_bound.hi_d()) << '\n';
    });
  } else if (m == "cesaro") {
    auto s = cesaro_sequence(doubling_lengths(c.params.depth), alternating_values(c.params.depth));
    w.csv("averages.csv", [&](std::ostream& os) { write_average_series_csv(os, s); });
  } else if (m == "hopf") {
    std::vector<std::uint64_t> schedule(c.schedule.N.begin(), c.schedule.N.end());
    auto rows = hopf_decay_check(LevelFunction::threshold(1), flat_tower(c), schedule, {c.tol.eps}, cli::make_mc(c));
    w.csv("hopf.csv", [&](std::ostream& os) {
      os << csv::kHopf << '\n';
      for (const auto& r : rows)
        for (std::size_t e = 0; e < r.epsilon.size(); ++e)
          os << r.N << ',' << csv::num(r.epsilon[e]) << ',' << csv::num(r.exceed_fraction[e]) << ','
             << csv::num(r.mean) << '\n';
    });
  } else {  // oscillation
    auto tower = flat_tower(c);
    auto mc = cli::make_mc(c);
    auto con = construct_thm2_potential(tower, c.params.k_max, mc);
    auto rows = oscillation_check(con, tower, mc);
    write_shells(w, con);
    w.csv("oscillation.csv", [&](std::ostream& os) {
      os << csv::kOscillation << '\n';
      for (const auto& r : rows)
        os << r.k << ',' << r.N_k << ',' << r.samples << ',' << r.violations << ',' << csv::num(r.fraction) << ','
           << csv::num(r.fraction + r.margin) << ',' << csv::num(r.threshold) << ',' << (r.pass ? 1 : 0) << '\n';
    });
  }
}

void run_construct(const ExperimentConfig& c, Writer& w) {
  write_shells(w, construct_thm2_potential(flat_tower(c), c.params.k_max, cli::make_mc(c)));
}

void run_dos(const ExperimentConfig& c, Writer& w) {
  const auto& p = c.params;
  const auto& m = c.mode;
  Side side = parse_side(p.side);
  if (m == "spatial") {
    auto tower = flat_tower(c);
    auto mc = cli::make_mc(c);
    auto con = construct_thm2_potential(tower, p.k_max, mc);
    TowerRegion F{0.0, 1.0, 1, static_cast<std::uint64_t>(p.m_hi)};
    auto est = dos_spatial(tower, con.level_function(), F, p.degree, mc);
    w.csv("spatial_moments.csv", [&](std::ostream& os) {
      os << csv::kSpatialMoments << '\n';
      for (std::size_t j = 0; j < est.moments.size(); ++j)
        os << j << ',' << csv::num(est.moments[j]) << ',' << csv::num(est.std_errors[j]) << '\n';
    });
  } else if (m == "truncation") {
    auto src = cli::make_source(c, p.potential);
    auto dk = dos_truncation(src, p.N, side, DosVariant::dk, p.degree, p.bins);
    auto dt = dos_truncation(src, p.N, side, DosVariant::dktilde, p.degree, p.bins);
    w.csv("truncation_moments.csv", [&](std::ostream& os) {
      os << kTruncMoments << '\n';
      for (std::size_t j = 0; j < dk.moments.size(); ++j)
        os << j << ',' << csv::num(dk.moments[j]) << ',' << csv::num(dt.moments[j]) << '\n';
    });
    // only the eigenvalue measure has a histogram
    w.csv("histogram_dktilde.csv", [&](std::ostream& os) { write_histogram_csv(os, *dt.histogram); });
  } else if (m == "gap") {
    auto src = cli::make_source(c, p.potential);
    std::vector<int> degrees;
    for (int d = 1; d <= p.degree; ++d) degrees.push_back(d);
    auto rows = moment_gap(src, c.schedule.N, degrees, side);
    w.csv("moments.csv", [&](std::ostream& os) { write_moments_csv(os, rows); });
  } else if (m == "counterexample") {
    auto lengths = doubling_lengths(p.depth);
    auto vals = alternating_values(p.depth);
    std::vector<int> a;
    for (std::size_t i = 0; i < lengths.size(); ++i)
      for (long j = 0; j < lengths[i].get_si(); ++j) a.push_back(vals[i]);
    auto fam = build_spatial_counterexample(a, std::vector<mpq_class>(a.size(), 1));
    w.csv("counterexample.csv", [&](std::ostream& os) { write_counterexample_csv(os, fam); });
  } else {  // limit
    auto src = cli::make_source(c, p.potential);
    std::vector<double> coeffs(static_cast<std::size_t>(p.degree) + 1, 0.0);
    coeffs.back() = 1.0;
    auto scan = dos_limit_scan(src, coeffs, c.schedule.N, side);
    w.csv("limit_scan.csv", [&](std::ostream& os) { write_limit_scan_csv(os, scan); });
  }
}

json estimates_json(const ExponentEstimates& e) {
  return {{"E", e.E},
          {"s_max", e.s_max},
          {"Lbar_plus", jnum(e.Lbar_plus)},
          {"Lunder_plus", jnum(e.Lunder_plus)},
          {"Lbar_minus", jnum(e.Lbar_minus)},
          {"Lunder_minus", jnum(e.Lunder_minus)},
          {"schedule", e.schedule},
          {"series_plus", e.series_plus},
          {"series_minus", e.series_minus},
          {"tail_begin", e.tail_begin},
          {"finite_scale", true}};
}

json avalanche_json(const AvalancheReport& r) {
  return {{"N", r.N},
          {"mu", r.mu},
          {"gamma", r.gamma},
          {"C1", r.C1},
          {"min_log_norm", r.min_log_norm},
          {"max_defect", r.max_defect},
          {"log_product", r.log_product},
          {"rhs", r.rhs},
          {"slack", r.slack},
          {"lemma_lhs", r.lemma_lhs},
          {"lemma_bound", r.lemma_bound},
          {"holds", r.holds},
          {"lemma_holds", r.lemma_holds},
          {"hypotheses",
           {{"mu_floor", true}, {"unimodular", true}, {"norm_ge_mu", true}, {"pairwise_defect_lt_gamma", true}}}};
}

void run_lyapunov(const ExperimentConfig& c, Writer& w) {
  const auto& p = c.params;
  const auto& m = c.mode;
  int s_max = c.schedule.s_max;
  if (m == "scan") {
    auto src = cli::make_source(c, p.potential);
    auto rows = exponent_scan(src, uniform_grid(p.E_lo, p.E_hi, p.E_step), s_max);
    w.csv("exponents.csv", [&](std::ostream& os) { write_exponents_csv(os, rows); });
  } else if (m == "gap") {
    GapDemoConfig g;
    g.variant = parse_gap_variant(p.gap_variant);
    g.E = p.E;
    g.C1 = c.C1;
    g.delta = p.delta;
    g.s_max = s_max;
    std::string pot = p.potential;
    if (pot == "zero") pot = g.variant == GapVariant::upper_vs_lower ? "thm2" : "tower";
    auto r = gap_demo(g, cli::make_source(c, pot));
    w.report("gap.json", {{"variant", to_string(g.variant)},
                          {"indicator", pot},
                          {"E", g.E},
                          {"delta", r.delta},
                          {"mu", r.mu},
                          {"gamma", r.gamma},
                          {"g_plus", r.g_plus},
                          {"g_minus", r.g_minus},
                          {"gamma_ok", r.gamma_ok},
                          {"separation_ok", r.separation_ok},
                          {"pairwise_ok", r.pairwise_ok},
                          {"theoretical_floor", r.theoretical_floor},
                          {"empirical_gap", r.empirical_gap},
                          {"density_plus", r.density_plus},
                          {"density_minus", r.density_minus},
                          {"estimates", estimates_json(r.estimates)}});
  } else if (m == "avalanche") {
    std::size_t N = 1;
    for (int s = 0; s < s_max; ++s) N *= 3;
    auto seq = random_avalanche_sequence(N, p.mu, *c.mc.seed);
    AvalancheOptions opt;
    auto r = avalanche_check(seq, p.mu, 0.5 * std::log(p.mu), c.C1, opt);
    w.report("avalanche.json", avalanche_json(r));
  } else if (m == "calibrate") {
    auto r = calibrate_c1(p.trials, p.mu, c.C1, s_max, *c.mc.seed);
    w.report("calibration.json", {{"trials", r.trials},
                                  {"mu", r.mu},
                                  {"C1", r.C1},
                                  {"max_ratio", r.max_ratio},
                                  {"lemma_violations", r.lemma_violations},
                                  {"ml60_violations", r.ml60_violations}});
  } else if (m == "ac") {
    auto src = cli::make_source(c, p.potential);
    auto scan = ac_support_scan(src, uniform_grid(p.E_lo, p.E_hi, p.E_step), s_max, c.tol.threshold);
    json iv = json::array();
    for (const auto& [lo, hi] : scan.intervals) iv.push_back({lo, hi});
    w.report("ac.json", {{"threshold", c.tol.threshold},
                         {"s_max", s_max},
                         {"grid_points", scan.grid.size()},
                         {"candidates", std::count(scan.candidate.begin(), scan.candidate.end(), true)},
                         {"intervals", iv},
                         {"measure", scan.measure()},
                         {"finite_scale", true}});
  } else {  // simon
    auto src = cli::make_source(c, p.potential);
    auto r = last_simon_diagnostic(p.E, src, p.N, parse_side(p.side));
    w.report("simon.json", {{"E", p.E},
                            {"N", p.N},
                            {"side", p.side},
                            {"value", jnum(r.value)},
                            {"log_value", r.log_value},
                            {"overflow", r.overflow}});
  }
}

void run_probe(const ExperimentConfig& c, Writer& w) {
  const auto& p = c.params;
  std::vector<std::string> names{p.potential};
  names.insert(names.end(), p.compare.begin(), p.compare.end());
  std::vector<PotentialSource> sources;
  for (const auto& s : names) sources.push_back(cli::make_source(c, s));
  double bound = 0.0;
  for (const auto& s : sources) bound = std::max(bound, s.bound);
  double tol = c.tol.eigen ? *c.tol.eigen : default_tolerance(bound);
  auto probe = spectrum_probe(sources, p.N, tol, c.tol.eps);
  auto t = truncate(sources.front(), p.N, parse_side(p.side));
  auto ev = eigenvalues(t, tol);
  w.csv("spectrum.csv", [&](std::ostream& os) { write_spectrum_csv(os, t, ev, tol); });
  w.report("probe.json", {{"sources", names},
                          {"N", p.N},
                          {"eps", probe.eps},
                          {"tolerance", tol},
                          {"distances", probe.distances},
                          {"finite_scale", true}});
}

void run(const ExperimentConfig& c) {
  Writer w(c);
  if (c.command == "blocks") run_blocks(c, w);
  else if (c.command == "birkhoff") run_birkhoff(c, w);
  else if (c.command == "construct") run_construct(c, w);
  else if (c.command == "dos") run_dos(c, w);
  else if (c.command == "lyapunov") run_lyapunov(c, w);
  else run_probe(c, w);
}

int fail(int code, const std::string& kind, const std::string& message, json extra = json::object()) {
  json j = {{"error", kind}, {"message", message}};
  j.update(extra);
  std::cerr << j.dump() << '\n';
  return code;
}

// Records a CLI override and applies it on top of the config file later.
struct Overrides {
  std::vector<std::function<void(ExperimentConfig&)>> apply;

  template <class T>
  void add(CLI::App* sub, const std::string& flag, const std::string& desc,
           std::function<void(ExperimentConfig&, const T&)> set) {
    auto v = std::make_shared<T>();
    CLI::Option* o = sub->add_option(flag, *v, desc);
    apply.push_back([o, v, set](ExperimentConfig& c) {
      if (o->count() > 0) set(c, *v);
    });
  }
};

std::vector<long> parse_alpha(const std::string& s) {
  std::vector<long> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stol(tok));
    } catch (const std::exception&) {
      throw ConfigError("bad partial quotient '" + tok + "'");
    }
  }
  return out;
}

void add_system_flags(CLI::App* sub, Overrides& ov) {
  ov.add<std::string>(sub, "--alpha", "\"golden\" or comma-separated period of partial quotients",
                      [](ExperimentConfig& c, const std::string& s) {
                        if (s == "golden") {
                          c.system.alpha = "golden";
                          c.system.alpha_cf.clear();
                        } else {
                          c.system.alpha = "cf";
                          c.system.alpha_cf = parse_alpha(s);
                        }
                      });
  ov.add<std::string>(sub, "--u0", "base point, decimal or p/q", [](auto& c, const auto& v) { c.system.u0 = v; });
  ov.add<long>(sub, "--K", "block range [-K, K]", [](auto& c, const auto& v) { c.system.K = v; });
  ov.add<long>(sub, "--bit-cap", "bits before heights switch to log2 brackets",
               [](auto& c, const auto& v) { c.system.bit_cap = v; });
}

void add_source_flags(CLI::App* sub, Overrides& ov) {
  ov.add<std::string>(sub, "--potential", "potential: zero, constant:<q>, random:<den>, uniform:<b>, thm2, tower", [](auto& c, const auto& v) { c.params.potential = v; });
  ov.add<std::string>(sub, "--side", "+ or -", [](auto& c, const auto& v) { c.params.side = v; });
  ov.add<long>(sub, "--N", "truncation size", [](auto& c, const auto& v) { c.params.N = v; });
}

void add_mc_flags(CLI::App* sub, Overrides& ov) {
  ov.add<std::size_t>(sub, "--samples", "Monte Carlo samples", [](auto& c, const auto& v) { c.mc.samples = v; });
  ov.add<int>(sub, "--k-max", "constructed shells", [](auto& c, const auto& v) { c.params.k_max = v; });
}

void add_schedule_flags(CLI::App* sub, Overrides& ov) {
  ov.add<std::vector<long>>(sub, "--schedule", "N schedule", [](auto& c, const auto& v) { c.schedule.N = v; });
  ov.add<int>(sub, "--s-max", "exponent schedule 3^1..3^s_max", [](auto& c, const auto& v) { c.schedule.s_max = v; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ergodeq: experiments on ergodic Schroedinger operators over skyscraper towers"};
  app.footer(kFooter);
  app.require_subcommand(1);

  std::string config_path, out;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool dump = false;
  auto* o_config = app.add_option("--config", config_path, "JSON config file");
  auto* o_seed = app.add_option("--seed", seed, "master seed for Monte Carlo and random potentials");
  auto* o_threads = app.add_option("--threads", threads, "worker thread limit")->check(CLI::PositiveNumber);
  auto* o_out = app.add_option("--out", out, "output directory");
  app.add_flag("--dump-config", dump, "print the resolved config and exit");
  (void)o_config;

  Overrides ov;
  std::string mode;
  std::vector<CLI::App*> subs;
  auto sub = [&](const char* name, const char* desc) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->fallthrough();
    s->add_option("--mode", mode, "one of: " + CLI::detail::join(cli::modes(name), ", "));
    subs.push_back(s);
    return s;
  };

  auto* blocks = sub("blocks", "export the block decomposition");
  add_system_flags(blocks, ov);

  auto* birkhoff = sub("birkhoff", "Birkhoff averages: forward, backward, cesaro, hopf, oscillation");
  add_system_flags(birkhoff, ov);
  add_mc_flags(birkhoff, ov);
  add_schedule_flags(birkhoff, ov);
  ov.add<int>(birkhoff, "--depth", "doubling blocks for cesaro", [](auto& c, const auto& v) { c.params.depth = v; });
  ov.add<double>(birkhoff, "--eps", "hopf epsilon", [](auto& c, const auto& v) { c.tol.eps = v; });

  auto* construct = sub("construct", "build the oscillating potential and its shells");
  add_system_flags(construct, ov);
  add_mc_flags(construct, ov);

  auto* dos = sub("dos", "density of states: spatial, truncation, gap, counterexample, limit");
  dos->add_option("--variant", mode, "alias of --mode");
  add_system_flags(dos, ov);
  add_source_flags(dos, ov);
  add_mc_flags(dos, ov);
  add_schedule_flags(dos, ov);
  ov.add<int>(dos, "--degree", "moment degree", [](auto& c, const auto& v) { c.params.degree = v; });
  ov.add<int>(dos, "--bins", "histogram bins", [](auto& c, const auto& v) { c.params.bins = v; });
  ov.add<int>(dos, "--depth", "doubling blocks", [](auto& c, const auto& v) { c.params.depth = v; });
  ov.add<long>(dos, "--m-hi", "spatial region levels 1..m_hi", [](auto& c, const auto& v) { c.params.m_hi = v; });

  auto* lyap = sub("lyapunov", "exponents: scan, gap, avalanche, calibrate, ac, simon");
  add_system_flags(lyap, ov);
  add_source_flags(lyap, ov);
  add_mc_flags(lyap, ov);
  add_schedule_flags(lyap, ov);
  ov.add<double>(lyap, "--E", "energy", [](auto& c, const auto& v) { c.params.E = v; });
  ov.add<double>(lyap, "--E-lo", "grid start", [](auto& c, const auto& v) { c.params.E_lo = v; });
  ov.add<double>(lyap, "--E-hi", "grid end", [](auto& c, const auto& v) { c.params.E_hi = v; });
  ov.add<double>(lyap, "--E-step", "grid step", [](auto& c, const auto& v) { c.params.E_step = v; });
  ov.add<double>(lyap, "--delta", "gap demo offset", [](auto& c, const auto& v) { c.params.delta = v; });
  ov.add<std::string>(lyap, "--gap-variant", "upper_vs_lower or forward_vs_backward",
                      [](auto& c, const auto& v) { c.params.gap_variant = v; });
  ov.add<std::size_t>(lyap, "--trials", "calibration trials", [](auto& c, const auto& v) { c.params.trials = v; });
  ov.add<double>(lyap, "--mu", "avalanche norm floor", [](auto& c, const auto& v) { c.params.mu = v; });
  ov.add<double>(lyap, "--C1", "avalanche constant", [](auto& c, const auto& v) { c.C1 = v; });
  ov.add<double>(lyap, "--threshold", "ac threshold", [](auto& c, const auto& v) { c.tol.threshold = v; });

  auto* probe = sub("probe", "compare truncated spectra of several potentials");
  add_system_flags(probe, ov);
  add_source_flags(probe, ov);
  add_mc_flags(probe, ov);
  ov.add<std::vector<std::string>>(probe, "--compare", "further potentials",
                                   [](auto& c, const auto& v) { c.params.compare = v; });
  ov.add<double>(probe, "--eps", "fattening radius", [](auto& c, const auto& v) { c.tol.eps = v; });
  ov.add<double>(probe, "--tol", "eigenvalue tolerance", [](auto& c, const auto& v) { c.tol.eigen = v; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "ConfigError", e.what());
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = cli::load_config(config_path);
    for (auto* s : subs)
      if (s->parsed()) cfg.command = s->get_name();
    if (!mode.empty()) cfg.mode = mode;
    if (cfg.mode.empty()) cfg.mode = cli::default_mode(cfg.command);
    if (o_seed->count() > 0) cfg.mc.seed = seed;
    if (o_out->count() > 0) cfg.out = out;
    for (auto& f : ov.apply) f(cfg);
    cli::validate(cfg);
    if (dump) {
      std::cout << json(cfg).dump(2) << '\n';
      return 0;
    }
    if (o_threads->count() > 0) set_max_threads(threads);
    run(cfg);
  } catch (const HypothesisViolated& e) {
    return fail(1, e.kind(), e.what(), {{"index", e.index}, {"which", e.which}});
  } catch (const ConfigError& e) {
    return fail(2, e.kind(), e.what());
  } catch (const DomainError& e) {
    return fail(2, e.kind(), e.what());
  } catch (const PrecisionExhausted& e) {
    return fail(3, e.kind(), e.what());
  } catch (const BudgetExhausted& e) {
    return fail(3, e.kind(), e.what());
  } catch (const ToleranceUnreachable& e) {
    return fail(3, e.kind(), e.what());
  } catch (const Error& e) {
    return fail(1, e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail(1, "Exception", e.what());
  }
  return 0;
}
