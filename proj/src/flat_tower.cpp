#include "ergodeq/flat_tower.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ergodeq/errors.hpp"
#include "ergodeq/parallel.hpp"

namespace ergodeq {

std::uint64_t MonteCarloConfig::require_seed() const {
  if (!seed) throw ConfigError("a seed is required for Monte Carlo runs");
  if (samples == 0) throw ConfigError("Monte Carlo sample count must be positive");
  return *seed;
}

double wilson_upper(std::size_t k, std::size_t n, double z) {
  if (n == 0) return 1.0;
  double nn = static_cast<double>(n);
  double p = static_cast<double>(k) / nn;
  double z2 = z * z;
  double centre = p + z2 / (2 * nn);
  double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
  return std::min(1.0, (centre + half) / (1 + z2 / nn));
}

std::mt19937_64 chunk_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
  return std::mt19937_64(seq);
}

FlatTower::FlatTower(double alpha, std::uint64_t cap) : alpha_(alpha), cap_(cap) {
  if (!(alpha > 0 && alpha < 1)) throw DomainError("alpha must lie in (0,1)");
  if (cap < 16) throw DomainError("height cap must be >= 16");
}

std::uint64_t FlatTower::height(double u) const {
  if (!(u > 0 && u <= 1)) throw DomainError("u must lie in (0,1]");
  double e = 1.0 + 1.0 / u;
  if (e >= 6.0) return cap_;
  double y = std::exp2(e);
  if (y >= 62.0) return cap_;
  double h = std::floor(std::exp2(y));
  return std::min<std::uint64_t>(cap_, static_cast<std::uint64_t>(h));
}

double FlatTower::forward(double u) const {
  double v = u + alpha_;
  return v > 1.0 ? v - 1.0 : v;
}

double FlatTower::backward(double u) const {
  double v = u - alpha_;
  return v <= 0.0 ? v + 1.0 : v;
}

FlatTower::Site FlatTower::advance(Site s, long long n) const {
  while (n > 0) {
    std::uint64_t room = height(s.u) - s.m;
    if (static_cast<std::uint64_t>(n) <= room) {
      s.m += static_cast<std::uint64_t>(n);
      return s;
    }
    n -= static_cast<long long>(room) + 1;
    s.u = forward(s.u);
    s.m = 1;
  }
  while (n < 0) {
    std::uint64_t back = static_cast<std::uint64_t>(-n);
    if (back <= s.m - 1) {
      s.m -= back;
      return s;
    }
    n += static_cast<long long>(s.m);
    s.u = backward(s.u);
    s.m = height(s.u);
  }
  return s;
}

LevelFunction::LevelFunction(Fn value, Fn prefix, double lo, double hi, std::string name)
    : value_(std::move(value)), prefix_(std::move(prefix)), lo_(lo), hi_(hi), name_(std::move(name)) {}

LevelFunction LevelFunction::zero() { return constant(0.0); }

LevelFunction LevelFunction::constant(double c) {
  return LevelFunction([c](std::uint64_t, std::uint64_t) { return c; },
                       [c](std::uint64_t, std::uint64_t m) { return c * static_cast<double>(m); }, c, c,
                       "constant");
}

LevelFunction LevelFunction::threshold(std::uint64_t N) {
  return LevelFunction([N](std::uint64_t, std::uint64_t m) { return m <= N ? 1.0 : 0.0; },
                       [N](std::uint64_t, std::uint64_t m) { return static_cast<double>(std::min(m, N)); }, 0.0,
                       1.0, "threshold " + std::to_string(N));
}

namespace {

std::uint64_t isqrt64(std::uint64_t p) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(p)));
  while (r > 0 && r > p / r) --r;
  while ((r + 1) <= p / (r + 1)) ++r;
  return r;
}

}  // namespace

LevelFunction LevelFunction::lower_root() {
  return LevelFunction([](std::uint64_t p, std::uint64_t m) { return m <= isqrt64(p) ? 1.0 : 0.0; },
                       [](std::uint64_t p, std::uint64_t m) { return static_cast<double>(std::min(m, isqrt64(p))); },
                       0.0, 1.0, "lower root");
}

double flat_average(const FlatTower& tower, const LevelFunction& g, FlatTower::Site s, std::uint64_t N) {
  if (N == 0) throw DomainError("average length must be >= 1");
  double sum = 0.0;
  std::uint64_t remaining = N;
  for (;;) {
    std::uint64_t p = tower.height(s.u);
    std::uint64_t len = std::min(remaining, p - s.m + 1);
    sum += g.prefix(p, s.m + len - 1) - g.prefix(p, s.m - 1);
    remaining -= len;
    if (remaining == 0) break;
    s.u = tower.forward(s.u);
    s.m = 1;
  }
  return sum / static_cast<double>(N);
}

std::vector<double> flat_window(const FlatTower& tower, const LevelFunction& g, FlatTower::Site origin,
                                long long from, long long to) {
  if (from > to) throw DomainError("window needs from <= to");
  FlatTower::Site s = tower.advance(origin, from);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(to - from + 1));
  std::uint64_t p = tower.height(s.u);
  for (long long n = from; n <= to; ++n) {
    out.push_back(g.value(p, s.m));
    if (s.m < p) {
      ++s.m;
    } else {
      s.u = tower.forward(s.u);
      s.m = 1;
      p = tower.height(s.u);
    }
  }
  return out;
}

std::uint64_t phi_search(double eps, const LevelFunction& g, std::uint64_t M, const FlatTower& tower,
                         const MonteCarloConfig& mc, const PhiSearchOptions& opt, std::uint64_t stream) {
  if (!(eps > 0 && eps < 1)) throw DomainError("epsilon must lie in (0,1)");
  std::uint64_t seed = mc.require_seed();
  std::size_t chunks = (mc.samples + kChunk - 1) / kChunk;
  std::vector<double> us(mc.samples);
  parallel_for(chunks, [&](std::size_t c) {
    auto eng = chunk_engine(seed, stream, c);
    for (std::size_t i = c * kChunk; i < std::min(mc.samples, (c + 1) * kChunk); ++i) us[i] = unit_open_closed(eng);
  });

  std::uint64_t N = M + 1;
  if (opt.grid == ScanGrid::powers_of_3) {
    N = 3;
    while (N <= M) {
      if (N > UINT64_MAX / 3) throw BudgetExhausted("no power of 3 above M fits in 64 bits");
      N *= 3;
    }
  }
  for (std::size_t tried = 0; tried < opt.max_candidates; ++tried) {
    std::vector<std::size_t> fails(chunks, 0);
    parallel_for(chunks, [&](std::size_t c) {
      for (std::size_t i = c * kChunk; i < std::min(mc.samples, (c + 1) * kChunk); ++i)
        if (std::fabs(flat_average(tower, g, {us[i], 1}, N)) > eps) ++fails[c];
    });
    std::size_t total = 0;
    for (auto f : fails) total += f;
    if (wilson_upper(total, mc.samples, mc.z) < eps) return N;
    if (opt.grid == ScanGrid::powers_of_3) {
      if (N > UINT64_MAX / 3) break;
      N *= 3;
    } else {
      ++N;
    }
  }
  throw BudgetExhausted("phi_search: no candidate N passed within the scan budget");
}

int Thm2Construction::shell_index(std::uint64_t m) const {
  for (std::size_t k = 0; k < N.size(); ++k)
    if (m <= N[k]) return static_cast<int>(k);
  return k_max() + 1;
}

double Thm2Construction::f(std::uint64_t m) const {
  int k = shell_index(m);
  return k == 0 ? 0.0 : parity(k);
}

LevelFunction Thm2Construction::level_function() const {
  auto self = std::make_shared<Thm2Construction>(*this);
  auto prefix = [self](std::uint64_t, std::uint64_t m) {
    double total = 0.0;
    const auto& N = self->N;
    for (std::size_t k = 1; k < N.size() && N[k - 1] < m; ++k)
      if (parity(static_cast<int>(k)) == 1) total += static_cast<double>(std::min(m, N[k]) - N[k - 1]);
    if (m > N.back() && parity(self->k_max() + 1) == 1) total += static_cast<double>(m - N.back());
    return total;
  };
  return LevelFunction([self](std::uint64_t, std::uint64_t m) { return self->f(m); }, prefix, 0.0, 1.0,
                       "parity shells");
}

Thm2Construction construct_thm2_potential(const FlatTower& tower, int k_max, const MonteCarloConfig& mc,
                                          const PhiSearchOptions& opt) {
  if (k_max < 1) throw DomainError("k_max must be >= 1");
  Thm2Construction c;
  c.N.push_back(1);
  c.epsilon.push_back(1.0);
  for (int k = 1; k <= k_max; ++k) {
    double eps = std::ldexp(1.0, -k);
    c.N.push_back(phi_search(eps, LevelFunction::threshold(c.N.back()), c.N.back(), tower, mc, opt,
                             static_cast<std::uint64_t>(k)));
    c.epsilon.push_back(eps);
  }
  return c;
}

PotentialSource thm2_potential(const Thm2Construction& c, const FlatTower& tower, FlatTower::Site omega) {
  auto f = std::make_shared<LevelFunction>(c.level_function());
  PotentialSource src;
  src.value = [f, tower, omega](long long n) {
    FlatTower::Site s = tower.advance(omega, n);
    return f->value(tower.height(s.u), s.m);
  };
  src.exact = [f, tower, omega](long long n) {
    FlatTower::Site s = tower.advance(omega, n);
    return mpq_class(static_cast<long>(f->value(tower.height(s.u), s.m)));
  };
  src.window = [f, tower, omega](long long a, long long b) { return flat_window(tower, *f, omega, a, b); };
  src.bound = 1.0;
  src.provenance = Provenance::thm2;
  src.label = "parity shells";
  return src;
}

int shell_index_by_backward_orbit(const Thm2Construction& c, const FlatTower& tower, FlatTower::Site omega) {
  FlatTower::Site s = omega;
  for (std::uint64_t i = 0; i < c.N.back(); ++i) {
    if (s.m == 1) {
      for (std::size_t k = 0; k < c.N.size(); ++k)
        if (i < c.N[k]) return static_cast<int>(k);
    }
    s = tower.advance(s, -1);
  }
  return c.k_max() + 1;
}

}  // namespace ergodeq
