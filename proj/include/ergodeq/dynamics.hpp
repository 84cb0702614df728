#pragma once

#include <gmpxx.h>

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ergodeq/numerics.hpp"
#include "ergodeq/potential.hpp"

namespace ergodeq {

// Rotation by alpha = [0; a1, a2, ...] (periodic partial quotients) on the
// circle K = (0,1], with base point u0.
struct RotationSystem {
  std::vector<long> partial_quotients;
  Real alpha;
  mpq_class u0;

  static RotationSystem make(std::vector<long> period = {1}, const mpq_class& u0 = mpq_class(3, 10));
};

// {u0 + k alpha} in (0,1]; an exact 0 maps to 1.
Real rotate(const RotationSystem& sys, long long k);

// beta, p, q over [-K, K] and partial sums t_n (forward) and t'_n = -t_{-n}.
struct BlockDecomposition {
  long K = 0;
  long bit_cap = 0;
  std::vector<Real> betas;         // index k + K
  std::vector<Interval> beta_iv;   // 160-bit enclosures, index k + K
  std::vector<HeightValue> ps;     // index k + K
  std::vector<HeightValue> qs;     // index k + K
  std::vector<HeightValue> t_fwd;  // t_0 .. t_{K+1}
  std::vector<HeightValue> t_bwd;  // t'_0 .. t'_K

  const Real& beta(long k) const { return betas.at(static_cast<std::size_t>(k + K)); }
  const Interval& beta_interval(long k) const { return beta_iv.at(static_cast<std::size_t>(k + K)); }
  const HeightValue& p(long k) const { return ps.at(static_cast<std::size_t>(k + K)); }
  const HeightValue& q(long k) const { return qs.at(static_cast<std::size_t>(k + K)); }
  const HeightValue& p_prime(long k) const { return p(-k); }
  const HeightValue& q_prime(long k) const { return q(-k); }
  const HeightValue& t(long n) const { return t_fwd.at(static_cast<std::size_t>(n)); }
  const HeightValue& t_prime(long n) const { return t_bwd.at(static_cast<std::size_t>(n)); }
};

BlockDecomposition build_blocks(const RotationSystem& sys, long K, long bit_cap = 1L << 24,
                                long precision_ceiling = default_precision_ceiling());

void write_blocks_csv(std::ostream& os, const BlockDecomposition& blocks);

// Orbit position in block coordinates: level offset above the base of block k.
struct TowerPoint {
  long k = 0;
  BigCount offset = 0;

  friend bool operator==(const TowerPoint& a, const TowerPoint& b) { return a.k == b.k && a.offset == b.offset; }
};

TowerPoint tower_step(const TowerPoint& pt, const BlockDecomposition& blocks, int direction);

// f = 1 on the lowest q_k levels of each block.
int sample_f(const TowerPoint& pt, const BlockDecomposition& blocks);

struct MinimaReport {
  std::vector<long> S;
  std::vector<double> mu;  // mu_n for n = 0..n_max
  // Largest ratio of two subinterval lengths of the partition by beta_0..beta_n.
  double c1_witness = 0.0;
  double c2 = 0.0;
  double n_mu_max = 0.0;  // max over n of n * mu_n
};

MinimaReport minima_subsequence(const RotationSystem& sys, long n_max);

// Whether beta_n < beta_k for all 0 <= k < n, certified from enclosures.
bool is_new_minimum(const BlockDecomposition& blocks, long n);

// V(n) = f(T^n omega_0) with omega_0 the base of block 0; values 0/1.
PotentialSource tower_potential(std::shared_ptr<const BlockDecomposition> blocks);

}  // namespace ergodeq
