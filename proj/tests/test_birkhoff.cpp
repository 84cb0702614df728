#include "doctest.h"

#include <cmath>
#include <memory>
#include <sstream>

#include "ergodeq/birkhoff.hpp"

using namespace ergodeq;

namespace {

const BlockDecomposition& default_blocks() {
  static const BlockDecomposition b = build_blocks(RotationSystem::make({1}, mpq_class(3, 10)), 64, 1L << 20);
  return b;
}

const BlockDecomposition& unit_blocks() {
  static const BlockDecomposition b = build_blocks(RotationSystem::make({1}, 1), 3);
  return b;
}

// Hand-made decomposition with p'_1 = 16.
BlockDecomposition toy_blocks() {
  BlockDecomposition b;
  b.K = 1;
  b.ps = {HeightValue::exact(16), HeightValue::exact(16), HeightValue::exact(70)};
  b.qs = {HeightValue::exact(4), HeightValue::exact(4), HeightValue::exact(8)};
  b.t_fwd = {HeightValue::exact(0), HeightValue::exact(16), HeightValue::exact(86)};
  b.t_bwd = {HeightValue::exact(0), HeightValue::exact(16)};
  return b;
}

}  // namespace

TEST_CASE("birkhoff_forward on simple sources") {
  auto c = PotentialSource::constant(mpq_class(2, 7));
  for (long long N : {1LL, 7LL, 1000LL, 1LL << 20}) CHECK(*birkhoff_forward(c, N).exact == mpq_class(2, 7));

  auto r = PotentialSource::random_rational(11, 97);
  CHECK(*birkhoff_forward(r, 1).exact == r.exact(0));
  mpq_class s = 0;
  for (int n = 0; n < 50; ++n) s += r.exact(n);
  CHECK(*birkhoff_forward(r, 50).exact == s / 50);

  // Large N goes through directed double sums; the enclosure must hold the exact value.
  auto ones = PotentialSource::from_function([](long long n) { return n % 3 == 0 ? 1.0 : 0.0; }, 1.0, "every third");
  Interval big = birkhoff_forward(ones, 300001);
  CHECK(big.contains(mpq_class(100001, 300001)));
  CHECK(big.width() < 1e-30);
  CHECK_THROWS_AS(birkhoff_forward(c, 0), DomainError);
}

TEST_CASE("tower averages: block pattern and flat iteration agree") {
  const auto& b = unit_blocks();
  CHECK(*birkhoff_forward(b, {0, 0}, 16).exact == mpq_class(1, 4));
  // (1)^4 (0)^12 then (1)^8 (0)^62.
  auto f = tower_potential(std::make_shared<BlockDecomposition>(b));
  for (long N : {1L, 3L, 4L, 5L, 16L, 20L, 24L, 25L, 86L}) {
    CHECK(*birkhoff_forward(b, {0, 0}, N).exact == *birkhoff_forward(f, N).exact);
  }
  // At N = t_n the average is sum_{k<n} q_k / t_n.
  for (long n = 1; n <= 3; ++n) {
    mpz_class sq = 0;
    for (long k = 0; k < n; ++k) sq += b.q(k).value();
    mpq_class want(sq, b.t(n).value());
    want.canonicalize();
    CHECK(*birkhoff_forward(b, {0, 0}, b.t(n).value()).exact == want);
  }
  CHECK(*birkhoff_forward(b, {1, 5}, 3).exact == 1);
  CHECK(*birkhoff_forward(b, {1, 60}, 10).exact == 0);
}

TEST_CASE("forward witness along S on the default tower") {
  const auto& b = default_blocks();
  auto sys = RotationSystem::make({1}, mpq_class(3, 10));
  auto minima = minima_subsequence(sys, 64);
  REQUIRE(minima.S == std::vector<long>{3, 6, 61});

  std::vector<ForwardWitness> ws;
  for (long n : minima.S) ws.push_back(block_average_forward(b, n));
  for (const auto& w : ws) {
    // A >= q/(t+q) since the excess S_1/(t+q) is nonnegative.
    CHECK(w.excess.lo_d() >= 0.0);
    CHECK(w.lower_bound.lo <= w.average.hi);
    CHECK(w.average.lo_d() <= 1.0);
    CHECK(w.average.lo_d() > 0.0);
  }
  for (std::size_t i = 1; i < ws.size(); ++i) CHECK(ws[i].log2_t_over_q.hi < ws[i - 1].log2_t_over_q.lo);
  CHECK(ws.back().average.lo_d() > 0.9);
  CHECK(ws.front().log2_t_over_q.hi_d() < std::log2(0.1));

  // t_n <= n h(c2 beta_n), checked in log2.
  for (long n : minima.S) {
    const Real beta = b.beta(n);
    double c2 = minima.c2;
    Real scaled([beta, c2](long bits) {
      Interval iv = beta.enclose(bits + 8);
      ExtScalar lo(bits + 8, Rounding::down), hi(bits + 8, Rounding::up);
      mpfr_mul_d(lo.get(), iv.lo.get(), c2, MPFR_RNDD);
      mpfr_mul_d(hi.get(), iv.hi.get(), c2, MPFR_RNDU);
      return Interval(std::move(lo), std::move(hi));
    });
    LogMagnitude lh = log2_height(scaled);
    LogMagnitude lt = b.t(n).log2_bounds();
    ExtScalar rhs(lh.lo.precision() + 8, Rounding::down);
    mpfr_add_d(rhs.get(), lh.lo.get(), std::log2(static_cast<double>(n)) - 1e-9, MPFR_RNDD);
    CHECK(lt.hi <= rhs);
  }

  CHECK_THROWS_AS(block_average_forward(b, 4), NotInS);
  CHECK_THROWS_AS(block_average_forward(b, 1), NotInS);
}

TEST_CASE("backward block averages and the Cauchy-Schwarz certificate") {
  auto toy = toy_blocks();
  auto r1 = block_average_backward(toy, 1);
  CHECK(*r1.average.exact == mpq_class(1, 4));
  CHECK(r1.certificate == Certificate::holds);

  const auto& b = default_blocks();
  bool below = false;
  for (long k = 1; k <= b.K; ++k) {
    auto r = block_average_backward(b, k);
    CHECK(r.certificate == Certificate::holds);
    CHECK(r.average.hi_d() < 1.0);
    CHECK(r.average.hi_d() > 0.0);
    if (r.log2_bound.hi_d() < std::log2(0.05)) below = true;
  }
  CHECK(below);
  CHECK_THROWS_AS(block_average_backward(b, 0), RangeExceeded);
  CHECK_THROWS_AS(block_average_backward(b, 65), RangeExceeded);
}

TEST_CASE("backward envelope in the small-height regime") {
  const auto& b = unit_blocks();
  auto rep = backward_envelope_check(b, 2, 12);
  CHECK(rep.pattern_ok);
  CHECK(rep.envelope_violations == 0);
  CHECK(rep.block_start == b.t_prime(1).value());
  CHECK(rep.block_end == b.t_prime(2).value());
  CHECK(rep.run_boundary == rep.block_end - b.q_prime(2).value());

  // Oracle: walk the backward orbit one step at a time.
  std::vector<mpq_class> a(static_cast<std::size_t>(rep.block_end.get_si() + 1));
  TowerPoint pt{0, 0};
  long ones = 0;
  for (long n = 1; n <= rep.block_end.get_si(); ++n) {
    pt = tower_step(pt, b, -1);
    ones += sample_f(pt, b);
    a[static_cast<std::size_t>(n)] = mpq_class(ones, n);
    a[static_cast<std::size_t>(n)].canonicalize();
  }
  for (std::size_t i = 0; i < rep.probes.size(); ++i)
    CHECK(rep.values[i] == a[static_cast<std::size_t>(rep.probes[i].get_si())]);
  long start = rep.block_start.get_si(), end = rep.block_end.get_si(), rb = rep.run_boundary.get_si();
  CHECK(rep.envelope == std::max(a[static_cast<std::size_t>(start)], a[static_cast<std::size_t>(end)]));
  // Zero run: strictly decreasing down to the minimum at the run boundary.
  for (long n = start + 1; n <= rb; ++n) CHECK(a[static_cast<std::size_t>(n)] < a[static_cast<std::size_t>(n - 1)]);
  // One run: strictly increasing up to t'_k.
  for (long n = rb + 1; n <= end; ++n) CHECK(a[static_cast<std::size_t>(n)] > a[static_cast<std::size_t>(n - 1)]);

  CHECK_THROWS_AS(backward_envelope_check(b, 1, 12), DomainError);
  CHECK_THROWS_AS(backward_envelope_check(b, 3, 12), BudgetExhausted);
  auto coarse = build_blocks(RotationSystem::make({1}, mpq_class(7, 10)), 2, 64);
  CHECK_THROWS_AS(backward_envelope_check(coarse, 2, 12), InexactHeights);
}

TEST_CASE("Cesaro averages of block sequences") {
  std::vector<BigCount> lengths{1, 2, 4, 8, 16};
  auto s = cesaro_sequence(lengths, {1, 0, 1, 0, 1});
  std::vector<mpq_class> want{1, mpq_class(1, 3), mpq_class(5, 7), mpq_class(1, 3), mpq_class(21, 31)};
  REQUIRE(s.values.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(*s.values[i].exact == want[i]);
  CHECK(s.indices.back() == 31);

  auto all = cesaro_sequence(lengths, {1, 1, 1, 1, 1});
  for (const auto& v : all.values) CHECK(*v.exact == 1);

  auto d = cesaro_sequence(doubling_lengths(20), alternating_values(20));
  mpq_class hi = 0, lo = 1;
  for (std::size_t i = 10; i < d.values.size(); ++i) {
    hi = std::max(hi, *d.values[i].exact);
    lo = std::min(lo, *d.values[i].exact);
  }
  CHECK(hi >= mpq_class(2, 3));
  CHECK(lo <= mpq_class(1, 3));

  CHECK_THROWS_AS(cesaro_sequence({1, 0}, {1, 0}), DomainError);
  std::ostringstream os;
  write_average_series_csv(os, s);
  CHECK(os.str().rfind("index,lo,hi,direction,tag\n1,1,1,forward,block_end\n", 0) == 0);
}

TEST_CASE("Hopf decay diagnostics on the flat tower") {
  FlatTower tower;
  MonteCarloConfig mc;
  mc.samples = 2000;
  mc.seed = 99;
  std::vector<std::uint64_t> schedule{3, 27, 243, 2187};
  auto zero = hopf_decay_check(LevelFunction::zero(), tower, schedule, {0.1}, mc);
  for (const auto& r : zero) {
    CHECK(r.max == 0.0);
    CHECK(r.exceed_fraction[0] == 0.0);
  }

  auto rows = hopf_decay_check(LevelFunction::threshold(1), tower, schedule, {0.05, 0.25}, mc);
  for (const auto& r : rows) CHECK(r.max <= 1.0);
  for (std::size_t e = 0; e < 2; ++e) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      double f = rows[i - 1].exceed_fraction[e];
      double sigma = std::sqrt(std::max(f * (1 - f), 1.0 / static_cast<double>(mc.samples)) /
                               static_cast<double>(mc.samples));
      CHECK(rows[i].exceed_fraction[e] <= f + 4 * sigma);
    }
  }
  CHECK(rows.back().mean < rows.front().mean);
  mc.seed.reset();
  CHECK_THROWS_AS(hopf_decay_check(LevelFunction::zero(), tower, schedule, {0.1}, mc), ConfigError);
}

TEST_CASE("oscillation of the constructed potential") {
  FlatTower tower;
  MonteCarloConfig mc;
  mc.samples = 400;
  mc.seed = 2024;
  auto c = construct_thm2_potential(tower, 3, mc);
  auto rows = oscillation_check(c, tower, mc);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.samples == 400);
    CHECK(r.margin >= 0.0);
    CHECK(r.pass);
  }
}
