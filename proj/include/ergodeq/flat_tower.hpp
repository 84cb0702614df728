#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ergodeq/potential.hpp"

namespace ergodeq {

struct MonteCarloConfig {
  std::size_t samples = 10000;
  std::optional<std::uint64_t> seed;
  double z = 1.96;  // Wilson interval quantile

  std::uint64_t require_seed() const;
};

// Upper end of the Wilson score interval for k successes out of n.
double wilson_upper(std::size_t k, std::size_t n, double z = 1.96);

// Deterministic per-chunk generator: chunk c of stream s under a master seed.
std::mt19937_64 chunk_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk);
inline constexpr std::size_t kChunk = 1024;

// Uniform draw in (0,1].
inline double unit_open_closed(std::mt19937_64& g) {
  return static_cast<double>((g() >> 11) + 1) * 0x1p-53;
}

// Skyscraper over the rotation u -> u + alpha on (0,1] in double precision.
// Column heights floor(2^(2^(1+1/u))) saturate at `cap`; used for Monte
// Carlo paths whose length stays far below the saturated heights.
class FlatTower {
 public:
  struct Site {
    double u = 1.0;
    std::uint64_t m = 1;  // level, 1 <= m <= height(u)
  };

  explicit FlatTower(double alpha = 0.6180339887498949, std::uint64_t cap = 1ULL << 62);

  double alpha() const { return alpha_; }
  std::uint64_t cap() const { return cap_; }
  std::uint64_t height(double u) const;
  double forward(double u) const;
  double backward(double u) const;
  Site advance(Site s, long long n) const;

 private:
  double alpha_;
  std::uint64_t cap_;
};

// Function of (column height p, level m); prefix(p, m) = sum_{i=1}^m value(p, i).
class LevelFunction {
 public:
  using Fn = std::function<double(std::uint64_t, std::uint64_t)>;

  LevelFunction(Fn value, Fn prefix, double lo, double hi, std::string name);

  static LevelFunction zero();
  static LevelFunction constant(double c);
  // Indicator of {m <= N}: the union Y_N of the first N iterates of the base level.
  static LevelFunction threshold(std::uint64_t N);
  // Indicator of {m <= floor(sqrt(p))}.
  static LevelFunction lower_root();

  double value(std::uint64_t p, std::uint64_t m) const { return value_(p, m); }
  double prefix(std::uint64_t p, std::uint64_t m) const { return m == 0 ? 0.0 : prefix_(p, m); }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::string& name() const { return name_; }

 private:
  Fn value_;
  Fn prefix_;
  double lo_, hi_;
  std::string name_;
};

// A_N(omega, g, T) walked column by column.
double flat_average(const FlatTower& tower, const LevelFunction& g, FlatTower::Site start, std::uint64_t N);
std::vector<double> flat_window(const FlatTower& tower, const LevelFunction& g, FlatTower::Site origin,
                                long long from, long long to);

enum class ScanGrid { powers_of_3, linear };

struct PhiSearchOptions {
  ScanGrid grid = ScanGrid::powers_of_3;
  std::size_t max_candidates = 40;
};

// Smallest tested N > M whose Monte Carlo failure fraction on the base level,
// |A_N(omega, g)| > eps, has a Wilson upper bound below eps.
std::uint64_t phi_search(double eps, const LevelFunction& g, std::uint64_t M, const FlatTower& tower,
                         const MonteCarloConfig& mc, const PhiSearchOptions& opt = {}, std::uint64_t stream = 0);

struct Thm2Construction {
  std::vector<std::uint64_t> N;  // N[0] = 1, then N_1 < N_2 < ...
  std::vector<double> epsilon;   // epsilon[k] = 2^-k for k >= 1

  int k_max() const { return static_cast<int>(N.size()) - 1; }
  // Least k with m <= N_k (0 on the base level); levels above N_kmax get k_max + 1.
  int shell_index(std::uint64_t m) const;
  static int parity(int k) { return k % 2 == 0 ? 1 : 0; }
  double f(std::uint64_t m) const;
  LevelFunction level_function() const;
};

Thm2Construction construct_thm2_potential(const FlatTower& tower, int k_max, const MonteCarloConfig& mc,
                                          const PhiSearchOptions& opt = {});

// V(n) = f(T^n omega) for the constructed f; values 0/1.
PotentialSource thm2_potential(const Thm2Construction& c, const FlatTower& tower, FlatTower::Site omega);

// Shell index by explicit backward iteration to the base level (test oracle scale).
int shell_index_by_backward_orbit(const Thm2Construction& c, const FlatTower& tower, FlatTower::Site omega);

}  // namespace ergodeq
