#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ergodeq/dynamics.hpp"
#include "ergodeq/flat_tower.hpp"
#include "ergodeq/numerics.hpp"
#include "ergodeq/potential.hpp"

namespace ergodeq {

enum class Direction { forward, backward };

std::string to_string(Direction d);

struct AverageSeries {
  Direction direction = Direction::forward;
  std::vector<BigCount> indices;
  std::vector<Interval> values;
  std::vector<std::string> tags;
};

void write_average_series_csv(std::ostream& os, const AverageSeries& s);

// (1/N) sum_{n<N} V(n): exact when the source is rational-valued.
Interval birkhoff_forward(const PotentialSource& f, long long N);
// Same for the tower f, summed block by block from `start`.
Interval birkhoff_forward(const BlockDecomposition& blocks, const TowerPoint& start, const BigCount& N);

struct ForwardWitness {
  long n = 0;
  HeightValue index;              // t_n + q_n
  Interval average;               // A_{t_n + q_n}
  LogMagnitude log2_t_over_q;
  Interval lower_bound;           // 1 / (1 + t_n / q_n)
  Interval excess;                // (sum_{k<n} q_k) / (t_n + q_n) = average - lower_bound >= 0
};

ForwardWitness block_average_forward(const BlockDecomposition& blocks, long n);

enum class Certificate { holds, violated, undecided };

std::string to_string(Certificate c);

struct BackwardAverage {
  long k = 0;
  Interval average;          // a_{t'_k}
  Certificate certificate;   // (a_{t'_k})^2 * sum p'_j <= k
  LogMagnitude log2_bound;   // log2 sqrt(k / sum p'_j)
};

BackwardAverage block_average_backward(const BlockDecomposition& blocks, long k);

struct EnvelopeReport {
  long k = 0;
  BigCount block_start;   // t'_{k-1}
  BigCount block_end;     // t'_k
  BigCount run_boundary;  // t'_k - q'_k
  std::vector<BigCount> probes;
  std::vector<mpq_class> values;
  mpq_class envelope;     // max(a_{t'_{k-1}}, a_{t'_k})
  std::size_t envelope_violations = 0;
  bool pattern_ok = false;
};

// Direct backward summation over block k (small-height regime only).
EnvelopeReport backward_envelope_check(const BlockDecomposition& blocks, long k, int probes);

AverageSeries cesaro_sequence(const std::vector<BigCount>& lengths, const std::vector<int>& values);
std::vector<BigCount> doubling_lengths(int blocks);
std::vector<int> alternating_values(int blocks);

struct HopfRow {
  std::uint64_t N = 0;
  double mean = 0.0;
  double max = 0.0;
  std::vector<double> epsilon;
  std::vector<double> exceed_fraction;
};

// Distribution of A_N(omega, g) over sampled omega in the base level.
std::vector<HopfRow> hopf_decay_check(const LevelFunction& g, const FlatTower& tower,
                                      const std::vector<std::uint64_t>& schedule, const std::vector<double>& eps,
                                      const MonteCarloConfig& mc);

struct OscillationRow {
  int k = 0;
  std::uint64_t N_k = 0;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double fraction = 0.0;
  double margin = 0.0;     // Wilson 95% upper bound minus the fraction
  double threshold = 0.0;  // 2^-k
  bool pass = false;
};

// A_{N_k} >= 1 - 2^-k (k even) or <= 2^-k (k odd) on fresh samples of the base level.
std::vector<OscillationRow> oscillation_check(const Thm2Construction& c, const FlatTower& tower,
                                              const MonteCarloConfig& mc);

}  // namespace ergodeq
