#include "ergodeq/birkhoff.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ergodeq/csv.hpp"
#include "ergodeq/errors.hpp"
#include "ergodeq/parallel.hpp"

namespace ergodeq {

std::string to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }

std::string to_string(Certificate c) {
  switch (c) {
    case Certificate::holds:
      return "holds";
    case Certificate::violated:
      return "violated";
    default:
      return "undecided";
  }
}

void write_average_series_csv(std::ostream& os, const AverageSeries& s) {
  os << csv::kAverages << '\n';
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    os << s.indices[i].get_str() << ',' << csv::num(s.values[i].lo_d()) << ',' << csv::num(s.values[i].hi_d())
       << ',' << to_string(s.direction) << ',' << (i < s.tags.size() ? s.tags[i] : "") << '\n';
  }
}

namespace {

constexpr long kSumBits = 128;
constexpr long long kExactTerms = 1LL << 17;
constexpr long long kWindow = 1LL << 16;

Interval exact_interval(const mpq_class& q) { return Interval::from_rational(q); }

}  // namespace

Interval birkhoff_forward(const PotentialSource& f, long long N) {
  if (N < 1) throw DomainError("N must be >= 1");
  if (f.constant_value) {
    if (f.has_exact()) return exact_interval(f.exact(0));
    return exact_interval(mpq_class(*f.constant_value));
  }
  if (f.has_exact() && N <= kExactTerms) {
    mpq_class s = 0;
    for (long long n = 0; n < N; ++n) s += f.exact(n);
    return exact_interval(s / static_cast<long>(N));
  }
  // Directed sums; exact for integer-valued windows.
  ExtScalar lo(0.0, kSumBits, Rounding::down), hi(0.0, kSumBits, Rounding::up);
  for (long long a = 0; a < N; a += kWindow) {
    long long b = std::min(N, a + kWindow) - 1;
    for (double v : potential_window(f, a, b)) {
      mpfr_add_d(lo.get(), lo.get(), v, MPFR_RNDD);
      mpfr_add_d(hi.get(), hi.get(), v, MPFR_RNDU);
    }
  }
  mpfr_div_si(lo.get(), lo.get(), static_cast<long>(N), MPFR_RNDD);
  mpfr_div_si(hi.get(), hi.get(), static_cast<long>(N), MPFR_RNDU);
  return Interval(std::move(lo), std::move(hi));
}

Interval birkhoff_forward(const BlockDecomposition& b, const TowerPoint& start, const BigCount& N) {
  if (N < 1) throw DomainError("N must be >= 1");
  if (start.k < -b.K || start.k > b.K) throw RangeExceeded("start outside the computed block range");
  mpz_class ones = 0, remaining = N, offset = start.offset;
  long k = start.k;
  for (;;) {
    if (k > b.K) throw RangeExceeded("orbit leaves the computed block range");
    const HeightValue& p = b.p(k);
    const HeightValue& q = b.q(k);
    if (p.is_exact()) {
      if (offset >= p.value()) throw DomainError("offset above the block top");
      mpz_class room = p.value() - offset;
      mpz_class len = remaining < room ? remaining : room;
      mpz_class top = offset + len;  // exclusive
      mpz_class qv = q.value();
      if (qv > offset) ones += (top < qv ? top : qv) - offset;
      remaining -= len;
      if (remaining == 0) break;
      ++k;
      offset = 0;
      continue;
    }
    // Bracketed block: the remaining steps stay inside it unless p is tiny.
    mpz_class last = offset + remaining - 1;
    if (certainly_less(last, p) != Certainty::yes)
      throw UnresolvableComparison("cannot tell whether the orbit leaves a bracketed block");
    if (certainly_less(last, q) == Certainty::yes) {
      ones += remaining;
    } else if (certainly_less(offset, q) == Certainty::no) {
      // all zeros
    } else {
      throw UnresolvableComparison("orbit segment straddles a bracketed q_k");
    }
    break;
  }
  mpq_class a(ones, N);
  a.canonicalize();
  return exact_interval(a);
}

namespace {

LogMagnitude log_difference(const LogMagnitude& a, const LogMagnitude& b) {
  long wp = std::max(a.lo.precision(), b.lo.precision());
  ExtScalar lo(wp, Rounding::down), hi(wp, Rounding::up);
  mpfr_sub(lo.get(), a.lo.get(), b.hi.get(), MPFR_RNDD);
  mpfr_sub(hi.get(), a.hi.get(), b.lo.get(), MPFR_RNDU);
  return {std::move(lo), std::move(hi)};
}

LogMagnitude log2_of(const HeightValue& h) { return h.log2_bounds(kSumBits); }

}  // namespace

ForwardWitness block_average_forward(const BlockDecomposition& b, long n) {
  if (!is_new_minimum(b, n)) throw NotInS("n = " + std::to_string(n) + " is not a new minimum");
  ForwardWitness w;
  w.n = n;
  w.index = sum_heights({b.t(n), b.q(n)});
  std::vector<HeightValue> before;
  for (long k = 0; k < n; ++k) before.push_back(b.q(k));
  std::vector<HeightValue> all = before;
  all.push_back(b.q(n));
  std::vector<HeightValue> den{b.t(n), b.q(n)};
  w.average = big_ratio(all, den).value;
  w.lower_bound = big_ratio({b.q(n)}, den).value;
  w.excess = big_ratio(before, den).value;
  w.log2_t_over_q = log_difference(log2_of(b.t(n)), log2_of(b.q(n)));
  return w;
}

BackwardAverage block_average_backward(const BlockDecomposition& b, long k) {
  if (k < 1 || k > b.K) throw RangeExceeded("k outside 1..K");
  std::vector<HeightValue> ps, qs;
  for (long j = 1; j <= k; ++j) {
    ps.push_back(b.p_prime(j));
    qs.push_back(b.q_prime(j));
  }
  BackwardAverage r;
  r.k = k;
  r.average = big_ratio(qs, ps).value;

  bool exact = std::all_of(ps.begin(), ps.end(), [](const HeightValue& h) { return h.is_exact(); });
  LogMagnitude lp = *log2_sum(ps);
  ExtScalar lk_lo(kSumBits, Rounding::down), lk_hi(kSumBits, Rounding::up);
  mpfr_set_si(lk_lo.get(), k, MPFR_RNDD);
  mpfr_set_si(lk_hi.get(), k, MPFR_RNDU);
  mpfr_log2(lk_lo.get(), lk_lo.get(), MPFR_RNDD);
  mpfr_log2(lk_hi.get(), lk_hi.get(), MPFR_RNDU);

  if (exact) {
    mpz_class sp = 0, sq = 0;
    for (long j = 0; j < k; ++j) {
      sp += ps[static_cast<std::size_t>(j)].value();
      sq += qs[static_cast<std::size_t>(j)].value();
    }
    r.certificate = sq * sq <= sp * k ? Certificate::holds : Certificate::violated;
  } else {
    // 2 log2 sum q' against log2 k + log2 sum p'.
    LogMagnitude lq = *log2_sum(qs);
    long wp = std::max(lp.lo.precision(), lq.lo.precision()) + 8;
    ExtScalar lhs_lo(wp, Rounding::down), lhs_hi(wp, Rounding::up), rhs_lo(wp, Rounding::down),
        rhs_hi(wp, Rounding::up);
    mpfr_mul_2ui(lhs_lo.get(), lq.lo.get(), 1, MPFR_RNDD);
    mpfr_mul_2ui(lhs_hi.get(), lq.hi.get(), 1, MPFR_RNDU);
    mpfr_add(rhs_lo.get(), lp.lo.get(), lk_lo.get(), MPFR_RNDD);
    mpfr_add(rhs_hi.get(), lp.hi.get(), lk_hi.get(), MPFR_RNDU);
    if (lhs_hi <= rhs_lo)
      r.certificate = Certificate::holds;
    else if (rhs_hi < lhs_lo)
      r.certificate = Certificate::violated;
    else
      r.certificate = Certificate::undecided;
  }

  long wp = std::max(lp.lo.precision(), kSumBits) + 8;
  ExtScalar lo(wp, Rounding::down), hi(wp, Rounding::up);
  mpfr_sub(lo.get(), lk_lo.get(), lp.hi.get(), MPFR_RNDD);
  mpfr_sub(hi.get(), lk_hi.get(), lp.lo.get(), MPFR_RNDU);
  mpfr_div_2ui(lo.get(), lo.get(), 1, MPFR_RNDD);
  mpfr_div_2ui(hi.get(), hi.get(), 1, MPFR_RNDU);
  r.log2_bound = {std::move(lo), std::move(hi)};
  return r;
}

namespace {

constexpr long kDirectLimit = 50'000'000;

}  // namespace

EnvelopeReport backward_envelope_check(const BlockDecomposition& b, long k, int probes) {
  if (k < 2) throw DomainError("envelope check needs k >= 2");
  if (k > b.K) throw RangeExceeded("k outside 1..K");
  if (probes < 2) throw DomainError("need at least 2 probes");
  std::vector<long> p(static_cast<std::size_t>(k + 1)), q(static_cast<std::size_t>(k + 1));
  long total = 0;
  for (long j = 1; j <= k; ++j) {
    const HeightValue& hp = b.p_prime(j);
    if (!hp.is_exact()) throw InexactHeights("block -" + std::to_string(j) + " is bracketed");
    if (hp.value() > kDirectLimit || total + hp.value().get_si() > kDirectLimit)
      throw BudgetExhausted("block sums exceed the direct summation limit");
    p[static_cast<std::size_t>(j)] = hp.value().get_si();
    q[static_cast<std::size_t>(j)] = b.q_prime(j).value().get_si();
    total += p[static_cast<std::size_t>(j)];
  }
  const long start = total - p[static_cast<std::size_t>(k)];  // t'_{k-1}
  const long qk = q[static_cast<std::size_t>(k)];

  // Ones count S_n = sum_{i=1}^n f(omega_{-i}); block -j is read top down.
  std::vector<long> S(static_cast<std::size_t>(total - start + 1));
  long ones = 0;
  for (long j = 1; j < k; ++j) ones += q[static_cast<std::size_t>(j)];
  S[0] = ones;
  for (long i = 1; i <= total - start; ++i) {
    long offset = p[static_cast<std::size_t>(k)] - i;
    if (offset < qk) ++ones;
    S[static_cast<std::size_t>(i)] = ones;
  }
  auto a = [&](long n) {
    mpq_class v(S[static_cast<std::size_t>(n - start)], n);
    v.canonicalize();
    return v;
  };

  EnvelopeReport r;
  r.k = k;
  r.block_start = start;
  r.block_end = total;
  r.run_boundary = total - qk;
  r.envelope = std::max(a(start), a(total));

  // a_n falls on the zero run, then rises on the one run.
  bool ok = true;
  for (long n = start + 1; n <= total && ok; ++n) {
    __int128 lhs = static_cast<__int128>(S[static_cast<std::size_t>(n - start)]) * (n - 1);
    __int128 rhs = static_cast<__int128>(S[static_cast<std::size_t>(n - 1 - start)]) * n;
    ok = n <= total - qk ? lhs < rhs : lhs > rhs;
  }
  r.pattern_ok = ok;

  std::vector<long> at{start + 1, total - qk, total};
  double len = static_cast<double>(total - start);
  for (int i = 0; i < probes; ++i) {
    double d = std::exp(std::log(len) * i / (probes - 1));
    at.push_back(start + std::clamp<long>(std::lround(d), 1, total - start));
  }
  std::sort(at.begin(), at.end());
  at.erase(std::unique(at.begin(), at.end()), at.end());
  for (long n : at) {
    if (n <= start) continue;
    mpq_class v = a(n);
    r.probes.emplace_back(n);
    if (v > r.envelope) ++r.envelope_violations;
    r.values.push_back(std::move(v));
  }
  return r;
}

AverageSeries cesaro_sequence(const std::vector<BigCount>& lengths, const std::vector<int>& values) {
  if (lengths.size() != values.size()) throw DomainError("lengths and values differ in size");
  AverageSeries s;
  s.direction = Direction::forward;
  mpz_class pos = 0, ones = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] <= 0) throw DomainError("block lengths must be positive");
    if (values[i] != 0 && values[i] != 1) throw DomainError("block values must be 0 or 1");
    pos += lengths[i];
    if (values[i]) ones += lengths[i];
    mpq_class v(ones, pos);
    v.canonicalize();
    s.indices.push_back(pos);
    s.values.push_back(Interval::from_rational(v));
    s.tags.push_back("block_end");
  }
  return s;
}

std::vector<BigCount> doubling_lengths(int blocks) {
  std::vector<BigCount> out;
  mpz_class len = 1;
  for (int i = 0; i < blocks; ++i, len *= 2) out.push_back(len);
  return out;
}

std::vector<int> alternating_values(int blocks) {
  std::vector<int> out;
  for (int i = 0; i < blocks; ++i) out.push_back(i % 2 == 0 ? 1 : 0);
  return out;
}

namespace {

constexpr std::uint64_t kHopfStream = 0x484f5046;
constexpr std::uint64_t kOscillationStream = 0x4f534300;

std::vector<double> base_samples(const MonteCarloConfig& mc, std::uint64_t stream) {
  std::uint64_t seed = mc.require_seed();
  std::size_t chunks = (mc.samples + kChunk - 1) / kChunk;
  std::vector<double> us(mc.samples);
  parallel_for(chunks, [&](std::size_t c) {
    auto eng = chunk_engine(seed, stream, c);
    for (std::size_t i = c * kChunk; i < std::min(mc.samples, (c + 1) * kChunk); ++i) us[i] = unit_open_closed(eng);
  });
  return us;
}

std::vector<double> averages(const FlatTower& tower, const LevelFunction& g, const std::vector<double>& us,
                             std::uint64_t N) {
  std::vector<double> out(us.size());
  std::size_t chunks = (us.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    for (std::size_t i = c * kChunk; i < std::min(us.size(), (c + 1) * kChunk); ++i)
      out[i] = flat_average(tower, g, {us[i], 1}, N);
  });
  return out;
}

}  // namespace

std::vector<HopfRow> hopf_decay_check(const LevelFunction& g, const FlatTower& tower,
                                      const std::vector<std::uint64_t>& schedule, const std::vector<double>& eps,
                                      const MonteCarloConfig& mc) {
  auto us = base_samples(mc, kHopfStream);
  std::vector<HopfRow> rows;
  for (std::uint64_t N : schedule) {
    auto A = averages(tower, g, us, N);
    HopfRow row;
    row.N = N;
    double sum = 0.0;
    for (double x : A) {
      sum += x;
      row.max = std::max(row.max, std::fabs(x));
    }
    row.mean = sum / static_cast<double>(A.size());
    row.epsilon = eps;
    for (double e : eps) {
      auto over = std::count_if(A.begin(), A.end(), [e](double x) { return std::fabs(x) > e; });
      row.exceed_fraction.push_back(static_cast<double>(over) / static_cast<double>(A.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<OscillationRow> oscillation_check(const Thm2Construction& c, const FlatTower& tower,
                                              const MonteCarloConfig& mc) {
  LevelFunction f = c.level_function();
  std::vector<OscillationRow> rows;
  for (int k = 1; k <= c.k_max(); ++k) {
    auto us = base_samples(mc, kOscillationStream + static_cast<std::uint64_t>(k));
    OscillationRow row;
    row.k = k;
    row.N_k = c.N[static_cast<std::size_t>(k)];
    row.samples = us.size();
    row.threshold = std::ldexp(1.0, -k);
    for (double A : averages(tower, f, us, row.N_k)) {
      bool bad = k % 2 == 0 ? A < 1.0 - row.threshold : A > row.threshold;
      if (bad) ++row.violations;
    }
    row.fraction = static_cast<double>(row.violations) / static_cast<double>(row.samples);
    row.margin = wilson_upper(row.violations, row.samples, mc.z) - row.fraction;
    row.pass = row.fraction < row.threshold + row.margin;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ergodeq
