#include "ergodeq/numerics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <mutex>

namespace ergodeq {

namespace {

void widen_exponent_range() {
  static std::once_flag once;
  std::call_once(once, [] {
    mpfr_set_emin(mpfr_get_emin_min());
    mpfr_set_emax(mpfr_get_emax_max());
  });
}

long clamp_prec(long bits) {
  return std::clamp<long>(bits, MPFR_PREC_MIN, MPFR_PREC_MAX);
}

long bit_length(unsigned long x) {
  long n = 0;
  while (x) {
    ++n;
    x >>= 1;
  }
  return n;
}

}  // namespace

mpfr_rnd_t mpfr_mode(Rounding r) {
  switch (r) {
    case Rounding::down:
      return MPFR_RNDD;
    case Rounding::up:
      return MPFR_RNDU;
    default:
      return MPFR_RNDN;
  }
}

ExtScalar::ExtScalar(long bits, Rounding r) : rnd_(r) {
  widen_exponent_range();
  mpfr_init2(v_, clamp_prec(bits));
  mpfr_set_zero(v_, 1);
}

ExtScalar::ExtScalar(double v, long bits, Rounding r) : ExtScalar(bits, r) {
  mpfr_set_d(v_, v, mpfr_mode(r));
}

ExtScalar::ExtScalar(const mpz_class& z, long bits, Rounding r) : ExtScalar(bits, r) {
  mpfr_set_z(v_, z.get_mpz_t(), mpfr_mode(r));
}

ExtScalar::ExtScalar(const mpq_class& q, long bits, Rounding r) : ExtScalar(bits, r) {
  mpfr_set_q(v_, q.get_mpq_t(), mpfr_mode(r));
}

ExtScalar::ExtScalar(const ExtScalar& o) : rnd_(o.rnd_) {
  mpfr_init2(v_, mpfr_get_prec(o.v_));
  mpfr_set(v_, o.v_, MPFR_RNDN);
}

ExtScalar::ExtScalar(ExtScalar&& o) noexcept : rnd_(o.rnd_) {
  mpfr_init2(v_, MPFR_PREC_MIN);
  mpfr_swap(v_, o.v_);
}

ExtScalar& ExtScalar::operator=(const ExtScalar& o) {
  if (this != &o) {
    mpfr_set_prec(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
    rnd_ = o.rnd_;
  }
  return *this;
}

ExtScalar& ExtScalar::operator=(ExtScalar&& o) noexcept {
  mpfr_swap(v_, o.v_);
  rnd_ = o.rnd_;
  return *this;
}

ExtScalar::~ExtScalar() { mpfr_clear(v_); }

double ExtScalar::to_double() const { return mpfr_get_d(v_, mpfr_mode(rnd_)); }

double ExtScalar::to_double(Rounding r) const { return mpfr_get_d(v_, mpfr_mode(r)); }

std::string ExtScalar::to_string(int digits) const {
  char* s = nullptr;
  mpfr_asprintf(&s, "%.*Rg", digits, v_);
  std::string out(s);
  mpfr_free_str(s);
  return out;
}

Interval::Interval() : lo(64, Rounding::down), hi(64, Rounding::up) {}

Interval::Interval(ExtScalar l, ExtScalar h) : lo(std::move(l)), hi(std::move(h)) {
  lo.set_rounding(Rounding::down);
  hi.set_rounding(Rounding::up);
}

Interval Interval::from_rational(const mpq_class& q, long bits) {
  Interval out(ExtScalar(q, bits, Rounding::down), ExtScalar(q, bits, Rounding::up));
  out.exact = q;
  return out;
}

long Interval::precision() const { return std::min(lo.precision(), hi.precision()); }

double Interval::mid() const {
  if (exact) return exact->get_d();
  return 0.5 * (lo.to_double(Rounding::nearest) + hi.to_double(Rounding::nearest));
}

double Interval::width() const {
  ExtScalar w(std::max(lo.precision(), hi.precision()), Rounding::up);
  mpfr_sub(w.get(), hi.get(), lo.get(), MPFR_RNDU);
  return w.to_double(Rounding::up);
}

bool Interval::contains(const mpq_class& q) const {
  return mpfr_cmp_q(lo.get(), q.get_mpq_t()) <= 0 && mpfr_cmp_q(hi.get(), q.get_mpq_t()) >= 0;
}

bool Interval::contains(double x) const {
  return mpfr_cmp_d(lo.get(), x) <= 0 && mpfr_cmp_d(hi.get(), x) >= 0;
}

mpq_class parse_rational(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) throw DomainError("empty number");
  if (s.find('/') != std::string::npos) {
    mpq_class q;
    if (q.set_str(s, 10) != 0 || q.get_den() == 0) throw DomainError("bad rational: " + text);
    q.canonicalize();
    return q;
  }
  bool neg = false;
  std::size_t i = 0;
  if (s[i] == '+' || s[i] == '-') neg = s[i++] == '-';
  std::string digits;
  long frac_digits = 0;
  bool dot = false;
  for (; i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.'); ++i) {
    if (s[i] == '.') {
      if (dot) throw DomainError("bad decimal: " + text);
      dot = true;
    } else {
      digits.push_back(s[i]);
      if (dot) ++frac_digits;
    }
  }
  if (digits.empty()) throw DomainError("bad decimal: " + text);
  long exponent = 0;
  if (i < s.size()) {
    if (s[i] != 'e' && s[i] != 'E') throw DomainError("bad decimal: " + text);
    std::size_t used = 0;
    try {
      exponent = std::stol(s.substr(i + 1), &used);
    } catch (const std::exception&) {
      throw DomainError("bad decimal: " + text);
    }
    if (i + 1 + used != s.size()) throw DomainError("bad decimal: " + text);
  }
  mpq_class q(mpz_class(digits, 10));
  long shift = exponent - frac_digits;
  mpz_class ten;
  mpz_ui_pow_ui(ten.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(shift)));
  if (shift >= 0)
    q *= ten;
  else
    q /= ten;
  q.canonicalize();
  return neg ? mpq_class(-q) : q;
}

Real::Real() : Real(rational(0)) {}

Real::Real(Encloser fn, std::optional<mpq_class> exact)
    : fn_(std::make_shared<const Encloser>(std::move(fn))), exact_(std::move(exact)) {}

Real Real::rational(const mpq_class& q) {
  mpq_class c = q;
  c.canonicalize();
  return Real([c](long bits) { return Interval::from_rational(c, bits); }, c);
}

Real Real::decimal(const std::string& text) { return rational(parse_rational(text)); }

Real Real::dyadic(const ExtScalar& x) {
  if (!x.is_finite()) throw DomainError("non-finite dyadic");
  mpz_class m;
  mpfr_exp_t e = mpfr_get_z_2exp(m.get_mpz_t(), x.get());
  mpq_class q(m);
  if (e >= 0)
    mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
  else
    mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(-e));
  return rational(q);
}

Real Real::periodic_cf(const std::vector<long>& period) {
  if (period.empty()) throw DomainError("empty continued-fraction period");
  mpz_class m00 = 1, m01 = 0, m10 = 0, m11 = 1;
  for (long a : period) {
    if (a < 1) throw DomainError("partial quotients must be >= 1");
    mpz_class n00 = m00 * a + m01, n10 = m10 * a + m11;
    m01 = m00;
    m11 = m10;
    m00 = n00;
    m10 = n10;
  }
  // The tail y = [a1; a2, ...] solves q_n y^2 + (q_{n-1} - p_n) y - p_{n-1} = 0.
  mpz_class b = m00 - m11;
  mpz_class disc = b * b + 4 * m10 * m01;
  mpz_class two_q = 2 * m10;
  return Real([b, disc, two_q](long bits) {
    long wp = clamp_prec(bits + 32);
    ExtScalar s_lo(wp, Rounding::down), s_hi(wp, Rounding::up);
    mpfr_set_z(s_lo.get(), disc.get_mpz_t(), MPFR_RNDD);
    mpfr_sqrt(s_lo.get(), s_lo.get(), MPFR_RNDD);
    mpfr_set_z(s_hi.get(), disc.get_mpz_t(), MPFR_RNDU);
    mpfr_sqrt(s_hi.get(), s_hi.get(), MPFR_RNDU);
    mpfr_add_z(s_lo.get(), s_lo.get(), b.get_mpz_t(), MPFR_RNDD);
    mpfr_add_z(s_hi.get(), s_hi.get(), b.get_mpz_t(), MPFR_RNDU);
    mpfr_div_z(s_lo.get(), s_lo.get(), two_q.get_mpz_t(), MPFR_RNDD);
    mpfr_div_z(s_hi.get(), s_hi.get(), two_q.get_mpz_t(), MPFR_RNDU);
    ExtScalar lo(wp), hi(wp);
    mpfr_ui_div(lo.get(), 1, s_hi.get(), MPFR_RNDD);
    mpfr_ui_div(hi.get(), 1, s_lo.get(), MPFR_RNDU);
    return Interval(std::move(lo), std::move(hi));
  });
}

Real Real::golden() { return periodic_cf({1}); }

Interval Real::enclose(long bits) const { return (*fn_)(bits); }

double Real::approx() const {
  if (exact_) return exact_->get_d();
  return enclose(64).mid();
}

double LogMagnitude::width() const {
  ExtScalar w(std::max(lo.precision(), hi.precision()), Rounding::up);
  mpfr_sub(w.get(), hi.get(), lo.get(), MPFR_RNDU);
  return w.to_double(Rounding::up);
}

HeightValue HeightValue::exact(mpz_class v) {
  if (v < 0) throw DomainError("heights are nonnegative");
  return HeightValue(std::move(v));
}

HeightValue HeightValue::bracket(LogMagnitude m) {
  if (!(m.lo <= m.hi)) throw DomainError("inverted log bracket");
  return HeightValue(std::move(m));
}

const mpz_class& HeightValue::value() const {
  if (!is_exact()) throw InexactHeights("height is bracketed");
  return std::get<mpz_class>(v_);
}

const LogMagnitude& HeightValue::magnitude() const {
  if (is_exact()) throw DomainError("height is exact");
  return std::get<LogMagnitude>(v_);
}

namespace {

LogMagnitude log2_of_integer(const mpz_class& z, long bits) {
  if (z <= 0) throw DomainError("log2 of a nonpositive integer");
  long wp = clamp_prec(std::max<long>(bits, 64));
  ExtScalar lo(wp, Rounding::down), hi(wp, Rounding::up);
  mpfr_set_z(lo.get(), z.get_mpz_t(), MPFR_RNDD);
  mpfr_log2(lo.get(), lo.get(), MPFR_RNDD);
  mpfr_set_z(hi.get(), z.get_mpz_t(), MPFR_RNDU);
  mpfr_log2(hi.get(), hi.get(), MPFR_RNDU);
  return {std::move(lo), std::move(hi)};
}

// Precision that resolves a log value of magnitude |x| to about 2^-extra.
long log_precision(const ExtScalar& x, long extra) {
  long e = x.is_zero() ? 0 : std::max<long>(0, mpfr_get_exp(x.get()));
  return clamp_prec(e + extra);
}

}  // namespace

LogMagnitude HeightValue::log2_bounds(long bits) const {
  if (is_exact()) return log2_of_integer(std::get<mpz_class>(v_), bits);
  return std::get<LogMagnitude>(v_);
}

double HeightValue::log2_approx() const {
  if (is_exact()) {
    const mpz_class& z = std::get<mpz_class>(v_);
    if (z == 0) return -HUGE_VAL;
    long e = 0;
    double d = mpz_get_d_2exp(&e, z.get_mpz_t());
    return std::log2(d) + static_cast<double>(e);
  }
  const auto& m = std::get<LogMagnitude>(v_);
  return 0.5 * (m.lo.to_double(Rounding::nearest) + m.hi.to_double(Rounding::nearest));
}

long default_precision_ceiling() {
  const char* env = std::getenv("ERGODEQ_PRECISION_CEILING");
  if (!env || !*env) return 4096;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 64) throw ConfigError("ERGODEQ_PRECISION_CEILING must be an integer >= 64");
  return v;
}

namespace {

struct UDomain {
  std::optional<mpq_class> exact;
  double e_approx;  // 1 + 1/u
};

UDomain check_domain(const Real& u, long ceiling) {
  if (const auto& q = u.exact()) {
    if (*q <= 0 || *q > 1) throw DomainError("u must lie in (0,1]");
    mpq_class e = 1 + 1 / *q;
    return {*q, e.get_d()};
  }
  for (long bits = 64; bits <= 64 + ceiling; bits *= 2) {
    Interval iv = u.enclose(bits);
    if (mpfr_sgn(iv.hi.get()) <= 0 || mpfr_cmp_ui(iv.lo.get(), 1) > 0)
      throw DomainError("u must lie in (0,1]");
    if (mpfr_sgn(iv.lo.get()) > 0 && mpfr_cmp_ui(iv.hi.get(), 1) <= 0)
      return {std::nullopt, 1.0 + 1.0 / iv.hi.to_double(Rounding::up)};
  }
  throw PrecisionExhausted("cannot certify 0 < u <= 1");
}

struct YBounds {
  ExtScalar lo;
  ExtScalar hi;
};

// y = 2^(1+1/u) with u enclosed to about wp bits of relative precision.
YBounds y_bounds(const Real& u, double e_approx, long wp) {
  long rel = static_cast<long>(std::ceil(std::log2(std::max(e_approx, 2.0)))) + 8;
  Interval iv = u.enclose(wp + rel);
  if (mpfr_sgn(iv.lo.get()) <= 0) iv = u.enclose(2 * (wp + rel));
  if (mpfr_sgn(iv.lo.get()) <= 0) throw PrecisionExhausted("u enclosure touches 0");
  ExtScalar lo(wp, Rounding::down), hi(wp, Rounding::up);
  mpfr_ui_div(lo.get(), 1, iv.hi.get(), MPFR_RNDD);
  mpfr_ui_div(hi.get(), 1, iv.lo.get(), MPFR_RNDU);
  mpfr_add_ui(lo.get(), lo.get(), 1, MPFR_RNDD);
  mpfr_add_ui(hi.get(), hi.get(), 1, MPFR_RNDU);
  mpfr_exp2(lo.get(), lo.get(), MPFR_RNDD);
  mpfr_exp2(hi.get(), hi.get(), MPFR_RNDU);
  return {std::move(lo), std::move(hi)};
}

std::optional<mpz_class> integer_exponent(const std::optional<mpq_class>& q) {
  if (!q) return std::nullopt;
  mpq_class e = 1 + 1 / *q;
  e.canonicalize();
  if (e.get_den() != 1) return std::nullopt;
  return e.get_num();
}

LogMagnitude exact_power_bracket(const mpz_class& e) {
  if (!e.fits_slong_p() || e.get_si() >= mpfr_get_emax()) throw HeightOverflow("log2 height exceeds exponent range");
  ExtScalar y(64, Rounding::down);
  mpfr_set_ui_2exp(y.get(), 1, e.get_si(), MPFR_RNDN);
  ExtScalar yh = y;
  yh.set_rounding(Rounding::up);
  return {std::move(y), std::move(yh)};
}

constexpr double kBracketWidth = 0x1p-32;

}  // namespace

LogMagnitude log2_height(const Real& u, long ceiling) {
  UDomain d = check_domain(u, ceiling);
  if (auto e = integer_exponent(d.exact)) return exact_power_bracket(*e);
  if (d.e_approx > 0x1p30) throw HeightOverflow("log2 height exceeds exponent range");
  long e_bits = static_cast<long>(std::ceil(d.e_approx));
  for (long guard = 64; guard <= ceiling; guard *= 2) {
    long wp = e_bits + bit_length(static_cast<unsigned long>(e_bits)) + 48 + guard;
    YBounds y = y_bounds(u, d.e_approx, wp);
    LogMagnitude m{std::move(y.lo), std::move(y.hi)};
    if (m.width() <= kBracketWidth) return m;
  }
  throw PrecisionExhausted("log2 height bracket too wide at precision ceiling");
}

HeightValue eval_height(const Real& u, long bit_cap, long ceiling) {
  if (bit_cap < 64) throw DomainError("bit_cap must be >= 64");
  UDomain d = check_domain(u, ceiling);
  if (auto e = integer_exponent(d.exact)) {
    if (*e <= 62) {
      unsigned long y = 1UL << e->get_ui();
      if (y <= static_cast<unsigned long>(bit_cap)) {
        mpz_class h;
        mpz_setbit(h.get_mpz_t(), y);
        return HeightValue::exact(h);
      }
    }
    // h = 2^y is an integer, so the bracket needs no floor correction.
    return HeightValue::bracket(exact_power_bracket(*e));
  }
  if (d.e_approx > 0x1p30) throw HeightOverflow("log2 height exceeds exponent range");
  long e_bits = static_cast<long>(std::ceil(d.e_approx));
  long e_len = bit_length(static_cast<unsigned long>(e_bits));
  for (long guard = 64; guard <= ceiling; guard *= 2) {
    long wp = e_bits + e_len + 48 + guard;
    YBounds y = y_bounds(u, d.e_approx, wp);
    if (mpfr_cmp_si(y.hi.get(), bit_cap) <= 0) {
      long ybits = mpfr_get_si(y.hi.get(), MPFR_RNDU);
      long wp2 = ybits + e_bits + e_len + 32 + guard;
      YBounds y2 = y_bounds(u, d.e_approx, wp2);
      long hp = ybits + guard + 8;
      ExtScalar h_lo(hp, Rounding::down), h_hi(hp, Rounding::up);
      mpfr_exp2(h_lo.get(), y2.lo.get(), MPFR_RNDD);
      mpfr_exp2(h_hi.get(), y2.hi.get(), MPFR_RNDU);
      mpz_class f_lo, f_hi;
      mpfr_get_z(f_lo.get_mpz_t(), h_lo.get(), MPFR_RNDD);
      mpfr_get_z(f_hi.get_mpz_t(), h_hi.get(), MPFR_RNDD);
      if (f_lo == f_hi) return HeightValue::exact(f_lo);
      continue;
    }
    if (mpfr_cmp_si(y.lo.get(), bit_cap) > 0) {
      LogMagnitude m{std::move(y.lo), std::move(y.hi)};
      if (m.width() > kBracketWidth) continue;
      // floor(h) >= h - 1, so log2 floor(h) >= log2 h - 3 * 2^-log2(h).
      ExtScalar tiny(64, Rounding::up);
      mpfr_neg(tiny.get(), m.lo.get(), MPFR_RNDU);
      mpfr_exp2(tiny.get(), tiny.get(), MPFR_RNDU);
      mpfr_mul_ui(tiny.get(), tiny.get(), 3, MPFR_RNDU);
      mpfr_sub(m.lo.get(), m.lo.get(), tiny.get(), MPFR_RNDD);
      return HeightValue::bracket(std::move(m));
    }
  }
  throw PrecisionExhausted("floor of h(u) not certified within the precision ceiling");
}

HeightValue eval_height(const ExtScalar& u, long bit_cap, long ceiling) {
  return eval_height(Real::dyadic(u), bit_cap, ceiling);
}

BigCount int_sqrt(const BigCount& p) {
  if (p < 0) throw DomainError("int_sqrt of a negative number");
  mpz_class r;
  mpz_sqrt(r.get_mpz_t(), p.get_mpz_t());
  return r;
}

HeightValue sqrt_height(const HeightValue& p) {
  if (p.is_exact()) return HeightValue::exact(int_sqrt(p.value()));
  const LogMagnitude& m = p.magnitude();
  long wp = std::max(m.lo.precision(), m.hi.precision());
  ExtScalar lo(wp, Rounding::down), hi(wp, Rounding::up);
  mpfr_div_2ui(lo.get(), m.lo.get(), 1, MPFR_RNDD);
  mpfr_div_2ui(hi.get(), m.hi.get(), 1, MPFR_RNDU);
  // q > sqrt(p) - 1 >= 2^(L/2) (1 - 2^(-L/2)), and log2(1 - x) >= -3x for x <= 1/2.
  ExtScalar tiny(64, Rounding::up);
  mpfr_neg(tiny.get(), lo.get(), MPFR_RNDU);
  mpfr_exp2(tiny.get(), tiny.get(), MPFR_RNDU);
  mpfr_mul_ui(tiny.get(), tiny.get(), 3, MPFR_RNDU);
  mpfr_sub(lo.get(), lo.get(), tiny.get(), MPFR_RNDD);
  return HeightValue::bracket({std::move(lo), std::move(hi)});
}

std::optional<LogMagnitude> log2_sum(const std::vector<HeightValue>& terms) {
  mpz_class exact_sum = 0;
  std::vector<LogMagnitude> logs;
  for (const auto& t : terms) {
    if (t.is_exact())
      exact_sum += t.value();
    else
      logs.push_back(t.magnitude());
  }
  if (logs.empty()) {
    if (exact_sum == 0) return std::nullopt;
    return log2_of_integer(exact_sum, 128);
  }
  if (exact_sum > 0) logs.push_back(log2_of_integer(exact_sum, 128));

  long wp = 128;
  for (const auto& m : logs) wp = std::max({wp, log_precision(m.hi, 96), log_precision(m.lo, 96)});
  const ExtScalar* max_lo = &logs[0].lo;
  const ExtScalar* max_hi = &logs[0].hi;
  for (const auto& m : logs) {
    if (*max_lo < m.lo) max_lo = &m.lo;
    if (*max_hi < m.hi) max_hi = &m.hi;
  }
  ExtScalar s_lo(96, Rounding::down), s_hi(96, Rounding::up), d(wp), e(96);
  for (const auto& m : logs) {
    mpfr_sub(d.get(), m.lo.get(), max_lo->get(), MPFR_RNDD);
    mpfr_exp2(e.get(), d.get(), MPFR_RNDD);
    mpfr_add(s_lo.get(), s_lo.get(), e.get(), MPFR_RNDD);
    mpfr_sub(d.get(), m.hi.get(), max_hi->get(), MPFR_RNDU);
    mpfr_exp2(e.get(), d.get(), MPFR_RNDU);
    mpfr_add(s_hi.get(), s_hi.get(), e.get(), MPFR_RNDU);
  }
  mpfr_log2(s_lo.get(), s_lo.get(), MPFR_RNDD);
  mpfr_log2(s_hi.get(), s_hi.get(), MPFR_RNDU);
  ExtScalar lo(wp, Rounding::down), hi(wp, Rounding::up);
  mpfr_add(lo.get(), max_lo->get(), s_lo.get(), MPFR_RNDD);
  mpfr_add(hi.get(), max_hi->get(), s_hi.get(), MPFR_RNDU);
  return LogMagnitude{std::move(lo), std::move(hi)};
}

HeightValue sum_heights(const std::vector<HeightValue>& terms) {
  bool all_exact = std::all_of(terms.begin(), terms.end(), [](const HeightValue& t) { return t.is_exact(); });
  if (all_exact) {
    mpz_class s = 0;
    for (const auto& t : terms) s += t.value();
    return HeightValue::exact(s);
  }
  return HeightValue::bracket(*log2_sum(terms));
}

Certainty certainly_less(const BigCount& a, const HeightValue& h) {
  if (h.is_exact()) return a < h.value() ? Certainty::yes : Certainty::no;
  if (a < 0) return Certainty::yes;
  const LogMagnitude& m = h.magnitude();
  // a + 1 < 2^bitlen(a+1) <= 2^lo <= h  ==>  a < floor(h).
  mpz_class a1 = a + 1;
  long len1 = static_cast<long>(mpz_sizeinbase(a1.get_mpz_t(), 2));
  if (mpfr_cmp_si(m.lo.get(), len1) >= 0) return Certainty::yes;
  // a >= 2^(bitlen(a)-1) >= 2^hi >= h  ==>  a >= floor(h).
  if (a > 0) {
    long len = static_cast<long>(mpz_sizeinbase(a.get_mpz_t(), 2));
    if (mpfr_cmp_si(m.hi.get(), len - 1) <= 0) return Certainty::no;
  }
  return Certainty::unknown;
}

Certainty certainly_less(const HeightValue& a, const HeightValue& b) {
  if (a.is_exact()) return certainly_less(a.value(), b);
  if (b.is_exact()) {
    // a < b  <=>  not (b <= a)  <=>  not (b - 1 < a)
    Certainty c = certainly_less(b.value() - 1, a);
    if (c == Certainty::yes) return Certainty::no;
    if (c == Certainty::no) return Certainty::yes;
    return Certainty::unknown;
  }
  const auto& ma = a.magnitude();
  const auto& mb = b.magnitude();
  if (ma.hi < mb.lo) return Certainty::yes;
  if (mb.hi <= ma.lo) return Certainty::no;
  return Certainty::unknown;
}

Ratio big_ratio(const std::vector<HeightValue>& nums, const std::vector<HeightValue>& dens, double rel_tol) {
  if (nums.empty() || dens.empty()) throw DomainError("big_ratio needs nonempty lists");
  for (const auto& d : dens)
    if (d.is_exact() && d.value() <= 0) throw DomainError("denominators must be positive");

  bool all_exact = std::all_of(nums.begin(), nums.end(), [](const HeightValue& t) { return t.is_exact(); }) &&
                   std::all_of(dens.begin(), dens.end(), [](const HeightValue& t) { return t.is_exact(); });
  Ratio r;
  if (all_exact) {
    mpz_class n = 0, d = 0;
    for (const auto& t : nums) n += t.value();
    for (const auto& t : dens) d += t.value();
    mpq_class q(n, d);
    q.canonicalize();
    r.value = Interval::from_rational(q);
    if (n > 0) {
      LogMagnitude ln = log2_of_integer(n, 128), ld = log2_of_integer(d, 128);
      ExtScalar lo(128, Rounding::down), hi(128, Rounding::up);
      mpfr_sub(lo.get(), ln.lo.get(), ld.hi.get(), MPFR_RNDD);
      mpfr_sub(hi.get(), ln.hi.get(), ld.lo.get(), MPFR_RNDU);
      r.log2 = LogMagnitude{std::move(lo), std::move(hi)};
    }
    return r;
  }

  auto ln = log2_sum(nums);
  if (!ln) {
    r.value = Interval::from_rational(0);
    return r;
  }
  auto ld = log2_sum(dens);
  long wp = std::max({ln->lo.precision(), ln->hi.precision(), ld->lo.precision(), ld->hi.precision()});
  ExtScalar lo(wp, Rounding::down), hi(wp, Rounding::up);
  mpfr_sub(lo.get(), ln->lo.get(), ld->hi.get(), MPFR_RNDD);
  mpfr_sub(hi.get(), ln->hi.get(), ld->lo.get(), MPFR_RNDU);
  ExtScalar span(wp, Rounding::up);
  mpfr_sub(span.get(), hi.get(), lo.get(), MPFR_RNDU);
  r.relative_width = std::expm1(span.to_double(Rounding::up) * M_LN2);
  if (!(r.relative_width <= rel_tol))
    throw MixedPrecisionLoss("ratio bracket relative width " + std::to_string(r.relative_width) +
                             " exceeds tolerance");
  ExtScalar v_lo(64, Rounding::down), v_hi(64, Rounding::up);
  mpfr_exp2(v_lo.get(), lo.get(), MPFR_RNDD);
  mpfr_exp2(v_hi.get(), hi.get(), MPFR_RNDU);
  r.value = Interval(std::move(v_lo), std::move(v_hi));
  r.log2 = LogMagnitude{std::move(lo), std::move(hi)};
  return r;
}

std::string to_string(const mpz_class& z) { return z.get_str(); }

std::string to_string(const mpq_class& q) { return q.get_str(); }

}  // namespace ergodeq
