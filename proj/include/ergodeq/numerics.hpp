#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ergodeq/errors.hpp"

namespace ergodeq {

enum class Rounding { down, up, nearest };

mpfr_rnd_t mpfr_mode(Rounding r);

// MPFR value that remembers its precision and the rounding direction it was
// produced with.
class ExtScalar {
 public:
  explicit ExtScalar(long bits = 64, Rounding r = Rounding::nearest);
  ExtScalar(double v, long bits, Rounding r);
  ExtScalar(const mpz_class& z, long bits, Rounding r);
  ExtScalar(const mpq_class& q, long bits, Rounding r);
  ExtScalar(const ExtScalar& o);
  ExtScalar(ExtScalar&& o) noexcept;
  ExtScalar& operator=(const ExtScalar& o);
  ExtScalar& operator=(ExtScalar&& o) noexcept;
  ~ExtScalar();

  long precision() const { return mpfr_get_prec(v_); }
  Rounding rounding() const { return rnd_; }
  void set_rounding(Rounding r) { rnd_ = r; }

  mpfr_srcptr get() const { return v_; }
  mpfr_ptr get() { return v_; }

  double to_double() const;
  double to_double(Rounding r) const;
  std::string to_string(int digits = 20) const;
  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  bool is_finite() const { return mpfr_number_p(v_) != 0; }

  friend bool operator<(const ExtScalar& a, const ExtScalar& b) { return mpfr_less_p(a.v_, b.v_); }
  friend bool operator<=(const ExtScalar& a, const ExtScalar& b) { return mpfr_lessequal_p(a.v_, b.v_); }
  friend bool operator==(const ExtScalar& a, const ExtScalar& b) { return mpfr_equal_p(a.v_, b.v_); }

 private:
  mpfr_t v_;
  Rounding rnd_;
};

// Closed interval [lo, hi] with lo rounded down and hi rounded up. Carries
// the exact rational when the enclosed quantity is known exactly.
struct Interval {
  ExtScalar lo;
  ExtScalar hi;
  std::optional<mpq_class> exact;

  Interval();
  Interval(ExtScalar lo, ExtScalar hi);
  static Interval from_rational(const mpq_class& q, long bits = 128);

  long precision() const;
  double lo_d() const { return lo.to_double(Rounding::down); }
  double hi_d() const { return hi.to_double(Rounding::up); }
  double mid() const;
  double width() const;
  bool contains(const mpq_class& q) const;
  bool contains(double x) const;
};

// Computable real: yields certified enclosures at any requested precision.
class Real {
 public:
  using Encloser = std::function<Interval(long)>;

  Real();
  Real(Encloser fn, std::optional<mpq_class> exact = std::nullopt);

  static Real rational(const mpq_class& q);
  // Exact parse of "0.3", "-1.25e-3" or "3/10".
  static Real decimal(const std::string& text);
  static Real dyadic(const ExtScalar& x);
  // Purely periodic continued fraction [0; a1, ..., an, a1, ...].
  static Real periodic_cf(const std::vector<long>& period);
  static Real golden();

  // Enclosure whose width is at most about 2^-bits times max(1, |x|).
  Interval enclose(long bits) const;
  const std::optional<mpq_class>& exact() const { return exact_; }
  double approx() const;

 private:
  std::shared_ptr<const Encloser> fn_;
  std::optional<mpq_class> exact_;
};

mpq_class parse_rational(const std::string& text);

struct LogMagnitude {
  ExtScalar lo;
  ExtScalar hi;

  double lo_d() const { return lo.to_double(Rounding::down); }
  double hi_d() const { return hi.to_double(Rounding::up); }
  double width() const;
};

using BigCount = mpz_class;

class HeightValue {
 public:
  HeightValue() : v_(mpz_class(0)) {}
  static HeightValue exact(mpz_class v);
  static HeightValue bracket(LogMagnitude m);

  bool is_exact() const { return std::holds_alternative<mpz_class>(v_); }
  const mpz_class& value() const;
  const LogMagnitude& magnitude() const;
  // log2 bracket in either representation; the value must be positive.
  LogMagnitude log2_bounds(long bits = 128) const;
  double log2_approx() const;
  std::string mode() const { return is_exact() ? "exact" : "bracket"; }
  bool is_zero() const { return is_exact() && std::get<mpz_class>(v_) == 0; }

 private:
  explicit HeightValue(std::variant<mpz_class, LogMagnitude> v) : v_(std::move(v)) {}
  std::variant<mpz_class, LogMagnitude> v_;
};

long default_precision_ceiling();

struct NumericsConfig {
  long bit_cap = 1L << 24;
  long precision_ceiling = default_precision_ceiling();
  double ratio_rel_tol = 0x1p-20;
};

// floor(2^(2^(1+1/u))): exact while 2^(1+1/u) <= bit_cap, else a log2 bracket
// of width <= 2^-32.
HeightValue eval_height(const Real& u, long bit_cap = 1L << 24,
                        long precision_ceiling = default_precision_ceiling());
HeightValue eval_height(const ExtScalar& u, long bit_cap = 1L << 24,
                        long precision_ceiling = default_precision_ceiling());
// Bracket of log2 h(u) = 2^(1+1/u) regardless of size.
LogMagnitude log2_height(const Real& u, long precision_ceiling = default_precision_ceiling());

BigCount int_sqrt(const BigCount& p);
// q = floor(sqrt(p)) for either representation of p.
HeightValue sqrt_height(const HeightValue& p);
HeightValue sum_heights(const std::vector<HeightValue>& terms);

enum class Certainty { yes, no, unknown };

// a < h, decided from the certified representation of h.
Certainty certainly_less(const BigCount& a, const HeightValue& h);
Certainty certainly_less(const HeightValue& a, const HeightValue& b);

// log2 of a sum of positive terms; nullopt when all terms are zero.
std::optional<LogMagnitude> log2_sum(const std::vector<HeightValue>& terms);

struct Ratio {
  Interval value;
  std::optional<LogMagnitude> log2;
  double relative_width = 0.0;
};

Ratio big_ratio(const std::vector<HeightValue>& numerators,
                const std::vector<HeightValue>& denominators, double rel_tol = 0x1p-20);

std::string to_string(const mpz_class& z);
std::string to_string(const mpq_class& q);

}  // namespace ergodeq
