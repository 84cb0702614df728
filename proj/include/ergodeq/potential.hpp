#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ergodeq {

enum class Provenance { thm2, tower, synthetic, constant };

std::string to_string(Provenance p);

// n -> V(n) = f(T^n omega) along a fixed orbit.
struct PotentialSource {
  std::function<double(long long)> value;
  // Exact rational values when the underlying f is rational-valued.
  std::function<mpq_class(long long)> exact;
  // Optional bulk evaluation of [from, to]; defaults to pointwise calls.
  std::function<std::vector<double>(long long, long long)> window;
  double bound = 0.0;
  Provenance provenance = Provenance::synthetic;
  std::string label;
  std::optional<double> constant_value;

  double operator()(long long n) const { return value(n); }
  bool has_exact() const { return static_cast<bool>(exact); }

  static PotentialSource constant(const mpq_class& c);
  static PotentialSource constant(double c);
  // Uniform values k/den, k in [-bound*den, bound*den], hashed from (seed, n).
  static PotentialSource random_rational(std::uint64_t seed, long den, long bound_num = 1);
  // Uniform doubles in [-bound, bound] hashed from (seed, n).
  static PotentialSource random_uniform(std::uint64_t seed, double bound);
  static PotentialSource from_function(std::function<double(long long)> f, double bound, std::string label);
};

// Values V(n) for n in [from, to].
std::vector<double> potential_window(const PotentialSource& src, long long from, long long to);
std::vector<mpq_class> potential_window_exact(const PotentialSource& src, long long from, long long to);

// Relabels a {0,1}-valued source: 1 -> if_one, 0 -> if_zero.
PotentialSource two_valued(const PotentialSource& indicator, const mpq_class& if_one, const mpq_class& if_zero,
                           Provenance tag);

// Counter-based hash used for random access potentials and Monte Carlo seeding.
std::uint64_t mix64(std::uint64_t x);

}  // namespace ergodeq
