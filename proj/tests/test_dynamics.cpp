#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "ergodeq/dynamics.hpp"
#include "ergodeq/flat_tower.hpp"
#include "ergodeq/parallel.hpp"

using namespace ergodeq;

namespace {

const RotationSystem& golden_03() {
  static const RotationSystem sys = RotationSystem::make({1}, mpq_class(3, 10));
  return sys;
}

const BlockDecomposition& small_blocks() {
  static const BlockDecomposition b = build_blocks(RotationSystem::make({1}, 1), 3);
  return b;
}

}  // namespace

TEST_CASE("rotate examples") {
  const auto& sys = golden_03();
  CHECK(*rotate(sys, 0).exact() == mpq_class(3, 10));
  Interval b1 = rotate(sys, 1).enclose(128);
  Interval b2 = rotate(sys, 2).enclose(128);
  CHECK(b1.mid() == doctest::Approx(0.9180339887498948).epsilon(1e-15));
  CHECK(b2.mid() == doctest::Approx(0.5360679774997897).epsilon(1e-15));
  CHECK(b1.width() <= 0x1p-128);

  Interval far = rotate(sys, 1000000000).enclose(128);
  CHECK(far.width() <= 0x1p-128);
  CHECK(far.mid() == doctest::Approx(0.0498948482045868343656).epsilon(1e-15));
  Interval back = rotate(sys, -1000000000).enclose(128);
  CHECK(back.mid() == doctest::Approx(0.55010515179541316563).epsilon(1e-15));

  auto one = RotationSystem::make({1}, 1);
  CHECK(*rotate(one, 0).exact() == 1);
  CHECK_THROWS_AS(RotationSystem::make({1}, 0), DomainError);
  CHECK_THROWS_AS(RotationSystem::make({0}, 1), DomainError);
}

TEST_CASE("build_blocks in the small-height regime") {
  const auto& b = small_blocks();
  CHECK(b.p(0).value() == 16);
  CHECK(b.q(0).value() == 4);
  CHECK(b.t(0).value() == 0);
  CHECK(b.t(1).value() == 16);
  CHECK(b.p(1).value() == 70);
  CHECK(b.t(2).value() == 86);
}

TEST_CASE("default blocks: heights, sums and monotonicity") {
  auto b = build_blocks(golden_03(), 8);
  REQUIRE(b.p(0).is_exact());
  CHECK(b.p(0).value() == 1170535);
  CHECK(b.p(0).log2_approx() == doctest::Approx(std::exp2(1.0 + 10.0 / 3.0)).epsilon(1e-6));
  CHECK(b.q(0).value() == 1081);
  mpz_class sum = 0;
  for (long n = 0; n <= b.K; ++n) {
    if (!b.t(n).is_exact()) break;
    CHECK(b.t(n).value() == sum);
    sum += b.p(n).is_exact() ? b.p(n).value() : mpz_class(0);
  }
  sum = 0;
  for (long n = 0; n <= b.K; ++n) {
    if (!b.t_prime(n).is_exact()) break;
    CHECK(b.t_prime(n).value() == sum);
    if (n + 1 <= b.K && b.p_prime(n + 1).is_exact()) sum += b.p_prime(n + 1).value();
  }
  for (long k = -b.K; k <= b.K; ++k) {
    if (b.p(k).is_exact()) CHECK(b.p(k).value() >= 16);
  }
  // Strict increase is certified between exact sums; bracketed sums carry
  // nondecreasing lower endpoints.
  auto increasing = [](const HeightValue& a, const HeightValue& c) {
    if (a.is_exact() && c.is_exact()) return a.value() < c.value();
    return a.log2_bounds().lo <= c.log2_bounds().lo;
  };
  for (long n = 0; n <= b.K; ++n) CHECK(increasing(b.t(n), b.t(n + 1)));
  for (long n = 0; n < b.K; ++n) CHECK(increasing(b.t_prime(n), b.t_prime(n + 1)));
}

TEST_CASE("primed partial sums diverge on the default tower") {
  auto b = build_blocks(golden_03(), 40);
  double prev = -1.0;
  for (long k = 1; k <= b.K; ++k) {
    double l = b.t_prime(k).log2_bounds().lo_d();
    CHECK(l >= prev);
    prev = l;
  }
  // (1/K) sum p'_j, in log2
  CHECK(prev - std::log2(40.0) > 1e6);
}

TEST_CASE("blocks CSV") {
  std::ostringstream os;
  write_blocks_csv(os, small_blocks());
  std::string s = os.str();
  CHECK(s.rfind("k,beta,log2_p,p,q,q_mode,t,t_mode\n", 0) == 0);
  CHECK(s.find("\n0,1,4,16,4,exact,0,exact\n") != std::string::npos);
}

TEST_CASE("tower_step examples and invertibility") {
  const auto& b = small_blocks();
  CHECK(tower_step({0, 14}, b, 1) == TowerPoint{0, 15});
  CHECK(tower_step({0, 15}, b, 1) == TowerPoint{1, 0});
  CHECK(tower_step({1, 0}, b, -1) == TowerPoint{0, 15});
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    long k = static_cast<long>(rng() % 5) - 2;
    if (!b.p(k).is_exact()) continue;
    mpz_class off = mpz_class(static_cast<unsigned long>(rng() % b.p(k).value().get_ui()));
    TowerPoint pt{k, off};
    CHECK(tower_step(tower_step(pt, b, 1), b, -1) == pt);
    CHECK(tower_step(tower_step(pt, b, -1), b, 1) == pt);
  }
  CHECK_THROWS_AS(tower_step({3, b.p(3).is_exact() ? b.p(3).value() - 1 : mpz_class(0)}, b, 1), Error);
  CHECK_THROWS_AS(tower_step({-3, 0}, b, -1), RangeExceeded);
}

TEST_CASE("sample_f examples") {
  const auto& b = small_blocks();
  CHECK(sample_f({0, 3}, b) == 1);
  CHECK(sample_f({0, 4}, b) == 0);
  auto half = build_blocks(RotationSystem::make({1}, mpq_class(1, 2)), 1);
  CHECK(half.p(0).value() == 256);
  CHECK(sample_f({0, 15}, half) == 1);
  CHECK(sample_f({0, 16}, half) == 0);
}

TEST_CASE("block iteration reproduces the (1)^q (0)^(p-q) pattern") {
  auto b = build_blocks(RotationSystem::make({1}, 1), 4);
  TowerPoint pt{0, 0};
  long k = 0;
  mpz_class within = 0;
  for (int j = 0; j < 10000; ++j) {
    int expected = within < b.q(k).value() ? 1 : 0;
    CHECK(sample_f(pt, b) == expected);
    pt = tower_step(pt, b, 1);
    ++within;
    if (within == b.p(k).value()) {
      ++k;
      within = 0;
    }
    CHECK(pt.k == k);
  }
}

TEST_CASE("minima subsequence") {
  MinimaReport r = minima_subsequence(golden_03(), 2000);
  CHECK(r.S == std::vector<long>{3, 6, 61});
  for (std::size_t n = 1; n < r.mu.size(); ++n) CHECK(r.mu[n] <= r.mu[n - 1]);
  for (long n : r.S) {
    CHECK(r.mu[static_cast<std::size_t>(n)] == doctest::Approx(rotate(golden_03(), n).approx()));
    CHECK(r.mu[static_cast<std::size_t>(n)] < r.c1_witness / static_cast<double>(n));
    for (long k = 0; k < n; ++k)
      CHECK(rotate(golden_03(), k).approx() / rotate(golden_03(), n).approx() >= r.c2);
  }
  CHECK(r.c1_witness > 1.0);
  CHECK(r.c1_witness < 3.0);
  CHECK(r.c2 > 1.0);

  auto b = build_blocks(golden_03(), 64, 1L << 20);
  for (long n = 0; n <= 64; ++n) CHECK(is_new_minimum(b, n) == (n == 3 || n == 6 || n == 61));
}

TEST_CASE("tower potential window") {
  auto b = std::make_shared<const BlockDecomposition>(build_blocks(RotationSystem::make({1}, 1), 3));
  PotentialSource src = tower_potential(b);
  auto w = potential_window(src, 0, 15);
  std::vector<double> expect(16, 0.0);
  for (int i = 0; i < 4; ++i) expect[static_cast<std::size_t>(i)] = 1.0;
  CHECK(w == expect);
  CHECK(potential_window(src, 0, 15) == w);
  CHECK(src(-1) == 0.0);
  CHECK(src.exact(2) == 1);
}

TEST_CASE("flat tower heights and orbits") {
  FlatTower tower;
  CHECK(tower.height(1.0) == 16);
  CHECK(tower.height(0.5) == 256);
  CHECK(tower.height(1.0 / 3.0) == 65536);
  CHECK(tower.height(0.01) == tower.cap());
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    double u = unit_open_closed(rng);
    std::uint64_t m = 1 + rng() % std::min<std::uint64_t>(tower.height(u), 1000);
    long long n = static_cast<long long>(rng() % 5000) - 2500;
    FlatTower::Site s{u, m};
    FlatTower::Site t = tower.advance(tower.advance(s, n), -n);
    CHECK(t.u == doctest::Approx(u).epsilon(1e-12));
    CHECK(t.m == m);
  }
}

TEST_CASE("flat average matches step-by-step summation") {
  FlatTower tower;
  LevelFunction g = LevelFunction::lower_root();
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    double u = 0.35 + 0.65 * unit_open_closed(rng);
    std::uint64_t N = 1 + rng() % 3000;
    FlatTower::Site s{u, 1};
    double sum = 0;
    for (std::uint64_t j = 0; j < N; ++j) {
      sum += g.value(tower.height(s.u), s.m);
      s = tower.advance(s, 1);
    }
    CHECK(flat_average(tower, g, {u, 1}, N) == doctest::Approx(sum / static_cast<double>(N)));
  }
}

TEST_CASE("phi_search grid contracts") {
  FlatTower tower;
  MonteCarloConfig mc;
  mc.samples = 2000;
  mc.seed = 17;
  CHECK(phi_search(0.1, LevelFunction::zero(), 1, tower, mc) == 3);
  CHECK(phi_search(0.1, LevelFunction::zero(), 9, tower, mc) == 27);
  PhiSearchOptions lin;
  lin.grid = ScanGrid::linear;
  CHECK(phi_search(0.1, LevelFunction::zero(), 5, tower, mc, lin) == 6);
  MonteCarloConfig unseeded;
  CHECK_THROWS_AS(phi_search(0.1, LevelFunction::zero(), 1, tower, unseeded), ConfigError);
  PhiSearchOptions tiny;
  tiny.max_candidates = 1;
  CHECK_THROWS_AS(phi_search(0.01, LevelFunction::constant(1.0), 1, tower, mc, tiny), BudgetExhausted);
}

TEST_CASE("phi_search result survives an independent 4x rerun") {
  FlatTower tower;
  MonteCarloConfig mc;
  mc.samples = 2000;
  mc.seed = 23;
  LevelFunction theta = LevelFunction::threshold(1);
  std::uint64_t N = phi_search(0.5, theta, 1, tower, mc);
  std::mt19937_64 rng(99991);
  std::size_t fails = 0, n = 4 * mc.samples;
  for (std::size_t i = 0; i < n; ++i)
    if (flat_average(tower, theta, {unit_open_closed(rng), 1}, N) > 0.5) ++fails;
  CHECK(static_cast<double>(fails) / static_cast<double>(n) < 0.5);
}

TEST_CASE("oscillating potential construction shells") {
  FlatTower tower;
  MonteCarloConfig mc;
  mc.samples = 4000;
  mc.seed = 1;
  Thm2Construction c = construct_thm2_potential(tower, 3, mc);
  REQUIRE(c.N.size() == 4);
  CHECK(c.N[0] == 1);
  for (std::size_t k = 1; k < c.N.size(); ++k) {
    CHECK(c.N[k] > c.N[k - 1]);
    std::uint64_t p = c.N[k];
    while (p % 3 == 0) p /= 3;
    CHECK(p == 1);
  }
  CHECK(c.f(1) == 0.0);
  CHECK(c.shell_index(1) == 0);
  CHECK(c.f(2) == 0.0);
  CHECK(c.f(c.N[1] + 1) == 1.0);
  CHECK(c.f(c.N[2] + 1) == 0.0);

  std::mt19937_64 rng(4);
  for (int i = 0; i < 300; ++i) {
    double u = unit_open_closed(rng) * 0.3;
    std::uint64_t m = 1 + rng() % (c.N.back() + 50);
    CHECK(shell_index_by_backward_orbit(c, tower, {u, m}) == c.shell_index(m));
  }

  LevelFunction lf = c.level_function();
  double acc = 0;
  for (std::uint64_t m = 1; m <= c.N.back() + 20; ++m) {
    acc += lf.value(0, m);
    CHECK(lf.prefix(0, m) == acc);
  }

  set_max_threads(3);
  Thm2Construction again = construct_thm2_potential(tower, 3, mc);
  set_max_threads(1);
  CHECK(again.N == c.N);
}

TEST_CASE("wilson upper bound") {
  CHECK(wilson_upper(0, 100) == doctest::Approx(0.0370).epsilon(0.01));
  CHECK(wilson_upper(50, 100) == doctest::Approx(0.5962).epsilon(0.001));
  CHECK(wilson_upper(100, 100) == doctest::Approx(1.0));
}
