#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ergodeq/dynamics.hpp"
#include "ergodeq/flat_tower.hpp"
#include "ergodeq/potential.hpp"

namespace ergodeq::cli {

struct SystemConfig {
  // "golden" or the period of the continued fraction of alpha
  std::string alpha = "golden";
  std::vector<long> alpha_cf;
  std::string u0 = "0.3";  // decimal or p/q, parsed exactly
  long K = 40;
  long bit_cap = 1L << 24;
};

struct ScheduleConfig {
  int s_max = 10;
  std::vector<long> N = {64, 256, 1024, 4096};
};

struct McSettings {
  std::size_t samples = 400;
  std::optional<std::uint64_t> seed;
};

struct Tolerances {
  std::optional<double> eigen;  // default_tolerance(bound) when unset
  double threshold = 0.05;      // ac scan
  double eps = 0.05;            // hopf epsilon, spectrum fattening
};

struct Params {
  std::string potential = "zero";     // zero | constant:<q> | random:<den> | uniform:<b> | thm2 | tower
  std::vector<std::string> compare;   // extra sources for probe
  std::string side = "+";
  int degree = 2;
  long N = 256;
  int bins = 64;
  int k_max = 3;
  int depth = 16;                     // doubling blocks (cesaro, counterexample)
  double E = 20.0;
  double E_lo = -3.0, E_hi = 3.0, E_step = 0.01;
  std::optional<double> delta = 2.0;  // null: the library default 2 C1 or 6 C1
  std::string gap_variant = "upper_vs_lower";
  std::size_t trials = 1000;
  double mu = 1000.0;
  long m_hi = 8;                      // spatial region levels 1..m_hi
};

struct ExperimentConfig {
  std::string command;
  std::string mode;
  SystemConfig system;
  ScheduleConfig schedule;
  McSettings mc;
  Tolerances tol;
  double C1 = 10.0;
  std::string out = ".";
  Params params;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_config(const std::string& path);

// Default mode of each command; empty when the command is unknown.
std::string default_mode(const std::string& command);
const std::vector<std::string>& modes(const std::string& command);
bool uses_monte_carlo(const ExperimentConfig& c);

// Throws ConfigError on the first invalid field.
void validate(const ExperimentConfig& c);

RotationSystem make_system(const ExperimentConfig& c);
MonteCarloConfig make_mc(const ExperimentConfig& c);
// Builds one source from a potential string such as "constant:1/2".
PotentialSource make_source(const ExperimentConfig& c, const std::string& pot);

}  // namespace ergodeq::cli
