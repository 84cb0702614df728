#include "ergodeq/lyapunov.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#include "ergodeq/csv.hpp"
#include "ergodeq/errors.hpp"
#include "ergodeq/parallel.hpp"

namespace ergodeq {

TransferMatrix one_step(double E, double v) {
  TransferMatrix A;
  A << E - v, -1.0, 1.0, 0.0;
  return A;
}

TransferMatrix one_step_inverse(double E, double v) {
  TransferMatrix A;
  A << 0.0, 1.0, -1.0, E - v;
  return A;
}

double log_norm(const TransferMatrix& A) {
  double a = A(0, 0), b = A(0, 1), c = A(1, 0), d = A(1, 1);
  return std::log(0.5 * (std::hypot(a + d, b - c) + std::hypot(a - d, b + c)));
}

double g_closed_form(double x) {
  if (x < 0) throw DomainError("g needs x >= 0");
  // 1 + x^2/2 + x sqrt(1 + x^2/4): log1p keeps small x accurate
  return 0.5 * std::log1p(0.5 * x * x + x * std::sqrt(1.0 + 0.25 * x * x));
}

double pair_norm(double x, double y) { return g_closed_form(std::hypot(x * y, x - y)); }

void CocycleProduct::apply(const TransferMatrix& A) {
  TransferMatrix M = A * q_;
  double r11 = std::hypot(M(0, 0), M(1, 0));
  if (!(r11 > 0.0) || !std::isfinite(r11)) throw DomainError("singular or non-finite factor in cocycle");
  double c = M(0, 0) / r11, s = M(1, 0) / r11;
  double r12 = c * M(0, 1) + s * M(1, 1);
  // r22 from det M = det A det Q rather than -s M01 + c M11, which cancels
  // down to 1/r11 and loses ~|M|^2 ulps per step. Q is rebuilt orthogonal
  // each step, so log|det P| is the sum of log|det A|.
  double det_a = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
  if (det_a == 0.0) throw DomainError("singular factor in cocycle");
  double r22 = det_a * (q_(0, 0) * q_(1, 1) - q_(0, 1) * q_(1, 0)) / r11;
  s_ += (r12 / r11) * sign_ * std::exp(ld_ - 2.0 * l1_);
  l1_ += std::log(r11);
  ld_ += std::log(std::fabs(det_a));
  if (r22 < 0) sign_ = -sign_;
  q_ << c, -s, s, c;
  ++steps_;
}

double CocycleProduct::log_norm() const {
  double w = sign_ * std::exp(ld_ - 2.0 * l1_);
  return l1_ + std::log(0.5 * (std::hypot(1.0 + w, s_) + std::hypot(1.0 - w, s_)));
}

double CocycleProduct::det() const { return q_.determinant() * sign_ * std::exp(ld_); }

TransferMatrix CocycleProduct::renormalized() const {
  TransferMatrix R;
  R << 1.0, s_, 0.0, sign_ * std::exp(ld_ - 2.0 * l1_);
  return q_ * R;
}

TransferMatrix CocycleProduct::matrix() const { return std::exp(l1_) * renormalized(); }

namespace {

constexpr long long kWindow = 1LL << 14;

// Applies the factors for sites [done, target) forward, or the inverse factors
// for sites -(done+1) .. -target backward.
void advance(CocycleProduct& P, double E, const PotentialSource& src, long long done, long long target, int dir) {
  while (done < target) {
    long long len = std::min(kWindow, target - done);
    if (dir > 0) {
      auto v = potential_window(src, done, done + len - 1);
      for (double x : v) P.apply(one_step(E, x));
    } else {
      auto v = potential_window(src, -(done + len), -(done + 1));
      for (auto it = v.rbegin(); it != v.rend(); ++it) P.apply(one_step_inverse(E, *it));
    }
    done += len;
  }
}

long long pow3(int s) {
  long long n = 1;
  for (int i = 0; i < s; ++i) n *= 3;
  return n;
}

// log ||B^(3^s)|| for s = 1..s_max by repeated cubing of a norm-1 representative.
std::vector<double> cubing_log_norms(const TransferMatrix& B, int s_max) {
  std::vector<double> out;
  double scale = log_norm(B);
  TransferMatrix M = B / std::exp(scale);
  for (int s = 1; s <= s_max; ++s) {
    TransferMatrix C = M * M * M;
    double l = log_norm(C);
    scale = 3.0 * scale + l;
    M = C / std::exp(l);
    out.push_back(scale);
  }
  return out;
}

}  // namespace

CocycleProduct cocycle(double E, const PotentialSource& src, long long n) {
  if (n == 0) throw DomainError("cocycle needs |n| >= 1");
  CocycleProduct P;
  advance(P, E, src, 0, n > 0 ? n : -n, n > 0 ? 1 : -1);
  return P;
}

PotentialSource shifted(const PotentialSource& src, long long m) {
  PotentialSource s = src;
  s.value = [src, m](long long n) { return src.value(n + m); };
  if (src.exact) s.exact = [src, m](long long n) { return src.exact(n + m); };
  if (src.window) s.window = [src, m](long long a, long long b) { return src.window(a + m, b + m); };
  return s;
}

bool ExponentEstimates::ordering_ok(double slack) const {
  return Lunder_plus <= Lbar_plus + slack && Lunder_minus <= Lbar_minus + slack &&
         Lunder_minus <= Lbar_plus + slack && Lunder_plus <= Lbar_minus + slack;
}

ExponentEstimates exponents(double E, const PotentialSource& src, int s_max) {
  if (s_max < 4) throw DomainError("exponents needs s_max >= 4");
  if (src.constant_value ? s_max > 39 : s_max > 20) throw RangeExceeded("s_max too large for this source");
  ExponentEstimates est;
  est.E = E;
  est.s_max = s_max;
  for (int s = 1; s <= s_max; ++s) est.schedule.push_back(pow3(s));

  if (src.constant_value) {
    auto fwd = cubing_log_norms(one_step(E, *src.constant_value), s_max);
    auto bwd = cubing_log_norms(one_step_inverse(E, *src.constant_value), s_max);
    for (int i = 0; i < s_max; ++i) {
      est.series_plus.push_back(fwd[i] / static_cast<double>(est.schedule[i]));
      est.series_minus.push_back(bwd[i] / static_cast<double>(est.schedule[i]));
    }
  } else {
    for (int dir : {1, -1}) {
      CocycleProduct P;
      long long done = 0;
      for (long long n : est.schedule) {
        advance(P, E, src, done, n, dir);
        done = n;
        (dir > 0 ? est.series_plus : est.series_minus).push_back(P.log_norm() / static_cast<double>(n));
      }
    }
  }

  est.tail_begin = static_cast<std::size_t>((s_max + 1) / 2);
  auto tail = [&](const std::vector<double>& v) {
    auto [lo, hi] = std::minmax_element(v.begin() + static_cast<long>(est.tail_begin), v.end());
    return std::pair{*lo, *hi};
  };
  std::tie(est.Lunder_plus, est.Lbar_plus) = tail(est.series_plus);
  std::tie(est.Lunder_minus, est.Lbar_minus) = tail(est.series_minus);
  return est;
}

std::vector<ExponentEstimates> exponent_scan(const PotentialSource& src, const std::vector<double>& grid, int s_max) {
  std::vector<ExponentEstimates> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { out[i] = exponents(grid[i], src, s_max); });
  return out;
}

void write_exponents_csv(std::ostream& os, const std::vector<ExponentEstimates>& rows) {
  os << csv::kExponents << '\n';
  for (const auto& r : rows)
    os << csv::num(r.E) << ',' << csv::num(r.Lbar_plus) << ',' << csv::num(r.Lunder_plus) << ','
       << csv::num(r.Lbar_minus) << ',' << csv::num(r.Lunder_minus) << ',' << r.s_max << '\n';
}

AvalancheReport avalanche_check(const std::vector<TransferMatrix>& matrices, double mu, double gamma, double C1,
                                const AvalancheOptions& opt) {
  std::size_t N = matrices.size();
  std::size_t p = 1;
  while (p < N) p *= 3;
  if (N < 3 || p != N) throw DomainError("avalanche_check needs N = 3^s matrices, s >= 1");
  if (!(mu > 1.0)) throw DomainError("avalanche_check needs mu > 1");
  if (mu < opt.mu_floor) throw HypothesisViolated(0, "mu >= floor");
  if (gamma > 0.5 * std::log(mu)) throw HypothesisViolated(0, "gamma <= ln(mu)/2");

  AvalancheReport r;
  r.N = N;
  r.mu = mu;
  r.gamma = gamma;
  r.C1 = C1;
  std::vector<double> ln(N);
  for (std::size_t j = 0; j < N; ++j) {
    const auto& A = matrices[j];
    if (std::fabs(A.determinant() - 1.0) > opt.det_tolerance * std::max(1.0, A.squaredNorm()))
      throw HypothesisViolated(j + 1, "unimodular");
    ln[j] = log_norm(A);
    if (ln[j] < std::log(mu)) throw HypothesisViolated(j + 1, "norm >= mu");
  }
  r.min_log_norm = *std::min_element(ln.begin(), ln.end());

  // pair[j] = log ||A_{j+1} A_j|| in 0-based indexing
  std::vector<double> pair(N - 1);
  for (std::size_t j = 0; j + 1 < N; ++j) {
    pair[j] = log_norm(matrices[j + 1] * matrices[j]);
    double defect = std::fabs(ln[j] + ln[j + 1] - pair[j]);
    r.max_defect = std::max(r.max_defect, defect);
    if (defect >= gamma) throw HypothesisViolated(j + 1, "pairwise defect < gamma");
  }

  CocycleProduct P;
  for (const auto& A : matrices) P.apply(A);
  r.log_product = P.log_norm();

  // 1-based j = 2..N-1 is 0-based 1..N-2. The pair sum runs over every
  // adjacent pair (j = 1..N-1); starting it at j = 2 leaves log||A_2 A_1||
  // unmatched and the difference is of order log mu, not N/mu.
  double sum_next = 0.0, sum_mid = 0.0, sum_pair = 0.0;
  for (std::size_t j = 1; j + 1 < N; ++j) {
    sum_next += ln[j + 1];
    sum_mid += ln[j];
  }
  for (double v : pair) sum_pair += v;
  double n = static_cast<double>(N);
  r.rhs = sum_next - (n - 2.0) * gamma - C1 * n / mu;
  r.slack = r.log_product - r.rhs;
  r.holds = r.slack >= 0.0;
  r.lemma_lhs = std::fabs(r.log_product + sum_mid - sum_pair);
  r.lemma_bound = C1 * n / mu;
  r.lemma_holds = r.lemma_lhs < r.lemma_bound;
  return r;
}

std::vector<TransferMatrix> random_avalanche_sequence(std::size_t N, double mu, std::uint64_t seed) {
  if (!(mu > 1.0)) throw DomainError("mu must exceed 1");
  std::mt19937_64 rng(mix64(seed));
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi), expo(0.0, 1.0);
  auto rot = [](double t) {
    TransferMatrix R;
    R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    return R;
  };
  const double limit = 0.45 * std::log(mu);
  std::vector<TransferMatrix> out;
  out.reserve(N);
  while (out.size() < N) {
    double lambda = mu * (1.0 + 1e-9) * std::pow(10.0, expo(rng));
    TransferMatrix D = TransferMatrix::Zero();
    D(0, 0) = lambda;
    D(1, 1) = 1.0 / lambda;
    TransferMatrix A = rot(angle(rng)) * D * rot(angle(rng));
    if (!out.empty()) {
      const auto& B = out.back();
      if (std::fabs(log_norm(A) + log_norm(B) - log_norm(A * B)) >= limit) continue;  // redraw
    }
    out.push_back(A);
  }
  return out;
}

CalibrationReport calibrate_c1(std::size_t trials, double mu, double C1, int s_max, std::uint64_t seed) {
  if (s_max < 1 || s_max > 9) throw DomainError("calibrate_c1 needs 1 <= s_max <= 9");
  CalibrationReport rep;
  rep.trials = trials;
  rep.mu = mu;
  rep.C1 = C1;
  std::vector<AvalancheReport> rows(trials);
  parallel_for(trials, [&](std::size_t t) {
    std::uint64_t h = mix64(seed ^ mix64(t + 1));
    int s = 1 + static_cast<int>(h % static_cast<std::uint64_t>(s_max));
    std::size_t N = static_cast<std::size_t>(pow3(s));
    AvalancheOptions opt;
    opt.mu_floor = 0.0;
    rows[t] = avalanche_check(random_avalanche_sequence(N, mu, h), mu, 0.5 * std::log(mu), C1, opt);
  });
  for (const auto& r : rows) {
    rep.max_ratio = std::max(rep.max_ratio, r.lemma_lhs * mu / static_cast<double>(r.N));
    if (!r.lemma_holds) ++rep.lemma_violations;
    if (!r.holds) ++rep.ml60_violations;
  }
  return rep;
}

std::string to_string(GapVariant v) {
  return v == GapVariant::upper_vs_lower ? "upper_vs_lower" : "forward_vs_backward";
}

GapVariant parse_gap_variant(const std::string& text) {
  if (text == "upper_vs_lower") return GapVariant::upper_vs_lower;
  if (text == "forward_vs_backward") return GapVariant::forward_vs_backward;
  throw ConfigError("gap variant must be upper_vs_lower or forward_vs_backward");
}

GapDemoReport gap_demo(const GapDemoConfig& cfg, const PotentialSource& indicator) {
  const bool first = cfg.variant == GapVariant::upper_vs_lower;
  GapDemoReport r;
  r.config = cfg;
  r.delta = cfg.delta ? *cfg.delta : (first ? 2.0 : 6.0) * cfg.C1;
  const double E = std::fabs(cfg.E), d = r.delta;
  if (!(d > 0)) throw DomainError("delta must be positive");
  if (E <= d + 2.0) throw DomainError("gap_demo needs |E| > delta + 2");
  r.mu = E - d;
  r.gamma = 4.0 / (r.mu * r.mu);
  r.g_plus = g_closed_form(E + d);
  r.g_minus = g_closed_form(E - d);
  r.gamma_ok = r.gamma < 0.5 * std::log(r.mu);
  r.separation_ok = d / (1.0 + E + d) > (first ? 1.0 : 3.0) * (cfg.C1 / r.mu + r.gamma);
  double worst = 0.0;
  for (double x : {E - d, E + d})
    for (double y : {E - d, E + d})
      worst = std::max(worst, std::fabs(g_closed_form(x) + g_closed_form(y) - pair_norm(x, y)));
  r.pairwise_ok = worst < r.gamma;
  r.theoretical_floor = first ? r.g_plus - r.g_minus - cfg.C1 / r.mu - r.gamma
                              : r.g_plus / 3.0 + 2.0 * r.g_minus / 3.0 - cfg.C1 / r.mu - r.gamma - r.g_minus;

  mpq_class dq(d);
  mpq_class one = first ? mpq_class(dq) : mpq_class(-dq), zero = first ? mpq_class(-dq) : mpq_class(dq);
  PotentialSource src = two_valued(indicator, one, zero, indicator.provenance);
  r.estimates = exponents(cfg.E, src, cfg.s_max);

  long long n_max = r.estimates.schedule.back();
  auto fwd = potential_window(indicator, 0, n_max - 1);
  auto bwd = potential_window(indicator, -n_max, -1);
  double cf = 0.0, cb = 0.0;
  long long done = 0;
  for (long long n : r.estimates.schedule) {
    for (long long i = done; i < n; ++i) {
      cf += fwd[static_cast<std::size_t>(i)] != 0.0 ? 1.0 : 0.0;
      cb += bwd[static_cast<std::size_t>(n_max - 1 - i)] != 0.0 ? 1.0 : 0.0;
    }
    done = n;
    r.density_plus.push_back(cf / static_cast<double>(n));
    r.density_minus.push_back(cb / static_cast<double>(n));
  }

  auto b = r.density_plus.begin() + static_cast<long>(r.estimates.tail_begin);
  auto bm = r.density_minus.begin() + static_cast<long>(r.estimates.tail_begin);
  double fmax = *std::max_element(b, r.density_plus.end());
  double fmin = *std::min_element(b, r.density_plus.end());
  double bmax = *std::max_element(bm, r.density_minus.end());
  if (first) {
    if (fmax < 2.0 / 3.0 || fmin > 1.0 / 3.0)
      throw InsufficientScale("forward densities in the tail do not reach both 2/3 and 1/3");
    r.empirical_gap = r.estimates.Lbar_plus - r.estimates.Lunder_plus;
  } else {
    if (fmax < 1.0 / 3.0 || bmax >= 1.0 / 3.0)
      throw InsufficientScale("tail needs forward density >= 1/3 and backward density < 1/3");
    r.empirical_gap = r.estimates.Lbar_plus - r.estimates.Lbar_minus;
  }
  return r;
}

LastSimon last_simon_diagnostic(double E, const PotentialSource& src, long long N, Side side) {
  if (N < 8) throw DomainError("last_simon_diagnostic needs N >= 8");
  CocycleProduct P;
  double m = -std::numeric_limits<double>::infinity(), acc = 0.0;
  int dir = side == Side::plus ? 1 : -1;
  for (long long done = 0; done < N;) {
    long long len = std::min(kWindow, N - done);
    auto v = dir > 0 ? potential_window(src, done, done + len - 1) : potential_window(src, -(done + len), -(done + 1));
    for (long long i = 0; i < len; ++i) {
      double x = dir > 0 ? v[static_cast<std::size_t>(i)] : v[static_cast<std::size_t>(len - 1 - i)];
      P.apply(dir > 0 ? one_step(E, x) : one_step_inverse(E, x));
      double t = 2.0 * P.log_norm();
      if (t > m) {
        acc = acc * std::exp(m - t) + 1.0;
        m = t;
      } else {
        acc += std::exp(t - m);
      }
    }
    done += len;
  }
  double ln = std::log(static_cast<double>(N));
  LastSimon r;
  r.log_value = m + std::log(acc) - ln - 2.0 * std::log(ln);
  r.overflow = r.log_value > std::log(std::numeric_limits<double>::max());
  r.value = r.overflow ? std::numeric_limits<double>::infinity() : std::exp(r.log_value);
  return r;
}

double AcScan::measure() const {
  double total = 0.0;
  for (auto [a, b] : intervals) total += b - a;
  return total;
}

AcScan ac_support_scan(const PotentialSource& src, const std::vector<double>& grid, int s_max, double threshold) {
  if (!(threshold > 0)) throw DomainError("threshold must be positive");
  if (grid.empty()) throw DomainError("empty energy grid");
  AcScan scan;
  scan.grid = grid;
  auto est = exponent_scan(src, grid, s_max);
  double half = grid.size() > 1 ? 0.5 * (grid[1] - grid[0]) : 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double v = std::min(est[i].Lbar_plus, est[i].Lbar_minus);
    scan.min_upper.push_back(v);
    bool c = v < threshold;
    scan.candidate.push_back(c);
    if (!c) continue;
    double a = grid[i] - half, b = grid[i] + half;
    if (i > 0 && scan.candidate[i - 1])
      scan.intervals.back().second = b;
    else
      scan.intervals.emplace_back(a, b);
  }
  return scan;
}

std::vector<double> uniform_grid(double lo, double hi, double step) {
  if (!(step > 0) || hi < lo) throw DomainError("uniform_grid needs step > 0 and lo <= hi");
  long n = std::lround((hi - lo) / step);
  std::vector<double> g;
  for (long i = 0; i <= n; ++i) g.push_back(lo + static_cast<double>(i) * step);
  return g;
}

}  // namespace ergodeq
