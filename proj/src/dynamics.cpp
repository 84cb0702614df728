#include "ergodeq/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "ergodeq/csv.hpp"
#include "ergodeq/parallel.hpp"

namespace ergodeq {

namespace {

long bit_length_ull(unsigned long long x) {
  long n = 0;
  while (x) {
    ++n;
    x >>= 1;
  }
  return n;
}

constexpr long kBetaBits = 160;

}  // namespace

RotationSystem RotationSystem::make(std::vector<long> period, const mpq_class& u0) {
  if (u0 <= 0 || u0 > 1) throw DomainError("u0 must lie in (0,1]");
  RotationSystem s;
  s.alpha = Real::periodic_cf(period);
  s.partial_quotients = std::move(period);
  s.u0 = u0;
  return s;
}

Real rotate(const RotationSystem& sys, long long k) {
  if (k == 0) return Real::rational(sys.u0);
  Real alpha = sys.alpha;
  mpq_class u0 = sys.u0;
  long klen = bit_length_ull(k < 0 ? 0ULL - static_cast<unsigned long long>(k) : static_cast<unsigned long long>(k));
  mpz_class kz(std::to_string(k));
  return Real([alpha, u0, k, kz, klen](long bits) {
    long start = bits + klen + 32;
    for (long wp = start; wp <= 64 * start; wp *= 2) {
      Interval a = alpha.enclose(wp);
      ExtScalar lo(wp, Rounding::down), hi(wp, Rounding::up);
      if (k > 0) {
        mpfr_mul_z(lo.get(), a.lo.get(), kz.get_mpz_t(), MPFR_RNDD);
        mpfr_mul_z(hi.get(), a.hi.get(), kz.get_mpz_t(), MPFR_RNDU);
      } else {
        mpfr_mul_z(lo.get(), a.hi.get(), kz.get_mpz_t(), MPFR_RNDD);
        mpfr_mul_z(hi.get(), a.lo.get(), kz.get_mpz_t(), MPFR_RNDU);
      }
      mpfr_add_q(lo.get(), lo.get(), u0.get_mpq_t(), MPFR_RNDD);
      mpfr_add_q(hi.get(), hi.get(), u0.get_mpq_t(), MPFR_RNDU);
      mpz_class f_lo, f_hi;
      mpfr_get_z(f_lo.get_mpz_t(), lo.get(), MPFR_RNDD);
      mpfr_get_z(f_hi.get_mpz_t(), hi.get(), MPFR_RNDD);
      if (f_lo != f_hi) continue;
      mpfr_sub_z(lo.get(), lo.get(), f_lo.get_mpz_t(), MPFR_RNDD);
      mpfr_sub_z(hi.get(), hi.get(), f_lo.get_mpz_t(), MPFR_RNDU);
      return Interval(std::move(lo), std::move(hi));
    }
    throw PrecisionExhausted("rotation iterate sits too close to an integer");
  });
}

BlockDecomposition build_blocks(const RotationSystem& sys, long K, long bit_cap, long ceiling) {
  if (K < 1) throw DomainError("K must be >= 1");
  BlockDecomposition b;
  b.K = K;
  b.bit_cap = bit_cap;
  std::size_t n = static_cast<std::size_t>(2 * K + 1);
  b.betas.resize(n);
  b.beta_iv.resize(n);
  b.ps.resize(n);
  b.qs.resize(n);
  parallel_for(n, [&](std::size_t i) {
    long k = static_cast<long>(i) - K;
    b.betas[i] = rotate(sys, k);
    b.beta_iv[i] = b.betas[i].enclose(kBetaBits);
    b.ps[i] = eval_height(b.betas[i], bit_cap, ceiling);
    b.qs[i] = sqrt_height(b.ps[i]);
  });
  b.t_fwd.push_back(HeightValue::exact(0));
  for (long k = 0; k <= K; ++k) b.t_fwd.push_back(sum_heights({b.t_fwd.back(), b.p(k)}));
  b.t_bwd.push_back(HeightValue::exact(0));
  for (long k = 1; k <= K; ++k) b.t_bwd.push_back(sum_heights({b.t_bwd.back(), b.p_prime(k)}));
  return b;
}

namespace {

std::string exact_if_small(const HeightValue& h, bool negate = false) {
  if (!h.is_exact() || mpz_sizeinbase(h.value().get_mpz_t(), 2) > 63) return "";
  mpz_class v = h.value();
  if (negate) v = -v;
  return v.get_str();
}

std::string log2_text(const HeightValue& h) {
  if (h.is_exact()) return csv::num(h.log2_approx());
  const LogMagnitude& m = h.magnitude();
  if (m.hi_d() < 1e300) return csv::num(0.5 * (m.lo_d() + m.hi_d()));
  return m.lo.to_string(17);
}

}  // namespace

void write_blocks_csv(std::ostream& os, const BlockDecomposition& b) {
  os << csv::kBlocks << '\n';
  for (long k = -b.K; k <= b.K; ++k) {
    const HeightValue& t = k >= 0 ? b.t(k) : b.t_prime(-k);
    os << k << ',' << b.beta_interval(k).lo.to_string(20) << ',' << log2_text(b.p(k)) << ','
       << exact_if_small(b.p(k)) << ',' << exact_if_small(b.q(k)) << ',' << b.q(k).mode() << ','
       << exact_if_small(t, k < 0) << ',' << t.mode() << '\n';
  }
}

TowerPoint tower_step(const TowerPoint& pt, const BlockDecomposition& b, int direction) {
  if (pt.k < -b.K || pt.k > b.K) throw RangeExceeded("tower point outside the computed block range");
  if (direction == 1) {
    mpz_class next = pt.offset + 1;
    switch (certainly_less(next, b.p(pt.k))) {
      case Certainty::yes:
        return {pt.k, next};
      case Certainty::no:
        if (pt.k + 1 > b.K) throw RangeExceeded("stepped past block index K");
        return {pt.k + 1, 0};
      default:
        throw UnresolvableComparison("cannot decide whether the block top is reached");
    }
  }
  if (direction == -1) {
    if (pt.offset > 0) return {pt.k, pt.offset - 1};
    if (pt.k - 1 < -b.K) throw RangeExceeded("stepped past block index -K");
    const HeightValue& p = b.p(pt.k - 1);
    if (!p.is_exact()) throw UnresolvableComparison("top of a bracketed block has no exact offset");
    return {pt.k - 1, p.value() - 1};
  }
  throw DomainError("direction must be +1 or -1");
}

int sample_f(const TowerPoint& pt, const BlockDecomposition& b) {
  if (pt.k < -b.K || pt.k > b.K) throw RangeExceeded("tower point outside the computed block range");
  switch (certainly_less(pt.offset, b.q(pt.k))) {
    case Certainty::yes:
      return 1;
    case Certainty::no:
      return 0;
    default:
      throw UnresolvableComparison("offset against a bracketed q_k");
  }
}

namespace {

// -1: a < b, +1: a > b. Refines the enclosures until they separate.
int compare_reals(const Real& a, const Real& b, long bits) {
  for (long wp = bits; wp <= 1L << 16; wp *= 2) {
    Interval ia = a.enclose(wp), ib = b.enclose(wp);
    if (ia.hi < ib.lo) return -1;
    if (ib.hi < ia.lo) return 1;
    if (ia.exact && ib.exact && *ia.exact == *ib.exact) return 0;
  }
  throw PrecisionExhausted("cannot separate two rotation iterates");
}

int compare_intervals_or_refine(const Interval& ia, const Interval& ib, const Real& a, const Real& b) {
  if (ia.hi < ib.lo) return -1;
  if (ib.hi < ia.lo) return 1;
  return compare_reals(a, b, 2 * kBetaBits);
}

double circle_gap(double a, double b) { return b > a ? b - a : b - a + 1.0; }

}  // namespace

MinimaReport minima_subsequence(const RotationSystem& sys, long n_max) {
  if (n_max < 2) throw DomainError("n_max must be >= 2");
  std::size_t n = static_cast<std::size_t>(n_max + 1);
  std::vector<Real> betas(n);
  std::vector<Interval> ivs(n);
  parallel_for(n, [&](std::size_t i) {
    betas[i] = rotate(sys, static_cast<long long>(i));
    ivs[i] = betas[i].enclose(kBetaBits);
  });

  MinimaReport r;
  std::size_t arg_min = 0;
  r.mu.push_back(ivs[0].mid());
  for (std::size_t i = 1; i < n; ++i) {
    if (compare_intervals_or_refine(ivs[i], ivs[arg_min], betas[i], betas[arg_min]) < 0) {
      arg_min = i;
      if (i >= 2) r.S.push_back(static_cast<long>(i));
    }
    r.mu.push_back(ivs[arg_min].mid());
  }

  std::set<double> pts;
  std::multiset<double> gaps;
  pts.insert(ivs[0].mid());
  gaps.insert(1.0);
  double c1 = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    double x = ivs[i].mid();
    auto succ = pts.upper_bound(x);
    double hi = succ == pts.end() ? *pts.begin() : *succ;
    double lo = succ == pts.begin() ? *pts.rbegin() : *std::prev(succ);
    gaps.erase(gaps.find(circle_gap(lo, hi)));
    gaps.insert(circle_gap(lo, x));
    gaps.insert(circle_gap(x, hi));
    pts.insert(x);
    c1 = std::max(c1, *gaps.rbegin() / *gaps.begin());
  }
  r.c1_witness = c1;
  r.c2 = (1.0 + c1) / c1;
  for (std::size_t i = 1; i < n; ++i) r.n_mu_max = std::max(r.n_mu_max, static_cast<double>(i) * r.mu[i]);
  return r;
}

bool is_new_minimum(const BlockDecomposition& b, long n) {
  if (n < 2 || n > b.K) return false;
  for (long k = 0; k < n; ++k)
    if (compare_intervals_or_refine(b.beta_interval(n), b.beta_interval(k), b.beta(n), b.beta(k)) > 0) return false;
  return true;
}

PotentialSource tower_potential(std::shared_ptr<const BlockDecomposition> blocks) {
  const long K = blocks->K;
  constexpr long long kNegInf = std::numeric_limits<long long>::min();
  constexpr long long kPosInf = std::numeric_limits<long long>::max();
  // starts[i] = t_k for k = i - K, i in [0, 2K+1].
  auto starts = std::make_shared<std::vector<long long>>();
  for (long k = -K; k <= K + 1; ++k) {
    const HeightValue& t = k >= 0 ? blocks->t(k) : blocks->t_prime(-k);
    bool fits = t.is_exact() && mpz_sizeinbase(t.value().get_mpz_t(), 2) <= 62;
    if (fits)
      starts->push_back(k >= 0 ? t.value().get_si() : -t.value().get_si());
    else
      starts->push_back(k > 0 ? kPosInf : kNegInf);
  }
  auto eval = [blocks, starts, K](long long n) -> int {
    const auto& s = *starts;
    auto it = std::upper_bound(s.begin(), s.end(), n);
    if (it == s.begin()) throw RangeExceeded("orbit index below the computed block range");
    std::size_t i = static_cast<std::size_t>(it - s.begin()) - 1;
    if (i == s.size() - 1) throw RangeExceeded("orbit index beyond the computed block range");
    long k = static_cast<long>(i) - K;
    if (s[i] == kNegInf) {
      // Huge block entered from below: offset = p_k - d with d = t_{k+1} - n < 2^64.
      const HeightValue& p = blocks->p(k);
      long long next = s[i + 1];
      if (p.is_exact() && next != kNegInf && next != kPosInf)
        return sample_f({k, p.value() - mpz_class(std::to_string(next - n))}, *blocks);
      if (!p.is_exact() && p.magnitude().lo_d() >= 66.0) return 0;
      throw UnresolvableComparison("orbit index inside a block with unknown start");
    }
    return sample_f({k, mpz_class(std::to_string(n - s[i]))}, *blocks);
  };
  PotentialSource src;
  src.value = [eval](long long n) { return static_cast<double>(eval(n)); };
  src.exact = [eval](long long n) { return mpq_class(eval(n)); };
  src.bound = 1.0;
  src.provenance = Provenance::tower;
  src.label = "tower indicator";
  return src;
}

}  // namespace ergodeq
