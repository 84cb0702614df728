#include "ergodeq/dos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ergodeq/csv.hpp"
#include "ergodeq/errors.hpp"
#include "ergodeq/parallel.hpp"

namespace ergodeq {

std::string to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::dk_spatial:
      return "dk_spatial";
    case MeasureKind::dk_trunc:
      return "dk_trunc";
    default:
      return "dktilde_trunc";
  }
}

MeasureEstimate dos_spatial(const FlatTower& tower, const LevelFunction& f, const TowerRegion& F, int degree,
                            const MonteCarloConfig& mc, std::uint64_t stream) {
  if (degree < 0) throw DomainError("degree must be >= 0");
  if (!(F.u_lo >= 0 && F.u_lo < F.u_hi && F.u_hi <= 1)) throw DomainError("region needs 0 <= u_lo < u_hi <= 1");
  if (F.m_lo < 1 || F.m_lo > F.m_hi) throw DomainError("region needs 1 <= m_lo <= m_hi");
  const std::uint64_t seed = mc.require_seed();
  const std::size_t chunks = (mc.samples + kChunk - 1) / kChunk;
  const std::size_t D = static_cast<std::size_t>(degree) + 1;
  const double rows = static_cast<double>(F.m_hi - F.m_lo + 1);

  std::vector<std::vector<double>> sum(chunks, std::vector<double>(D, 0.0)), sum2 = sum;
  std::vector<std::size_t> attempts(chunks, 0);
  parallel_for(chunks, [&](std::size_t c) {
    auto eng = chunk_engine(seed, stream, c);
    std::size_t quota = std::min(mc.samples, (c + 1) * kChunk) - c * kChunk;
    std::size_t got = 0;
    while (got < quota) {
      if (++attempts[c] > 1000 * quota) throw BudgetExhausted("region F is too thin for rejection sampling");
      double u = F.u_lo + (F.u_hi - F.u_lo) * unit_open_closed(eng);
      auto m = F.m_lo + std::min<std::uint64_t>(F.m_hi - F.m_lo,
                                                static_cast<std::uint64_t>(rows * (1.0 - unit_open_closed(eng))));
      if (m > tower.height(u)) continue;
      ++got;
      auto V = flat_window(tower, f, {u, m}, -degree, degree);
      for (int j = 0; j <= degree; ++j) {
        double x = j == 0 ? 1.0 : band_trace_power(V, -degree, 0, 0, -degree, degree, j);
        sum[c][static_cast<std::size_t>(j)] += x;
        sum2[c][static_cast<std::size_t>(j)] += x * x;
      }
    }
  });

  MeasureEstimate est;
  est.kind = MeasureKind::dk_spatial;
  const double n = static_cast<double>(mc.samples);
  std::size_t tries = 0;
  for (auto a : attempts) tries += a;
  est.region_measure = (F.u_hi - F.u_lo) * rows * n / static_cast<double>(tries);
  for (std::size_t j = 0; j < D; ++j) {
    double s = 0, s2 = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
      s += sum[c][j];
      s2 += sum2[c][j];
    }
    double mean = s / n;
    double var = std::max(0.0, s2 / n - mean * mean);
    est.moments.push_back(mean);
    est.std_errors.push_back(n > 1 ? std::sqrt(var / (n - 1)) : 0.0);
    est.exact_moments.emplace_back(j == 0 ? std::optional<mpq_class>(1) : std::nullopt);
  }
  return est;
}

MeasureEstimate dos_truncation(const PotentialSource& src, long N, Side side, DosVariant variant, int degree,
                               int bins) {
  if (N < 1) throw DomainError("N must be >= 1");
  if (degree < 0) throw DomainError("degree must be >= 0");
  MeasureEstimate est;
  const mpq_class n(N);
  if (variant == DosVariant::dk) {
    est.kind = MeasureKind::dk_trunc;
    for (int j = 0; j <= degree; ++j) {
      TraceMoment t = trace_moment(src, N, side, j);
      est.moments.push_back(t.value / static_cast<double>(N));
      est.exact_moments.emplace_back(t.exact ? std::optional<mpq_class>(*t.exact / n) : std::nullopt);
    }
    return est;
  }
  est.kind = MeasureKind::dktilde_trunc;
  auto T = truncate(src, N, side);
  for (int j = 0; j <= degree; ++j) {
    TraceMoment t = truncated_trace_moment(T, j);
    est.moments.push_back(t.value / static_cast<double>(N));
    est.exact_moments.emplace_back(t.exact ? std::optional<mpq_class>(*t.exact / n) : std::nullopt);
  }
  if (bins < 1) throw DomainError("bins must be >= 1");
  auto ev = eigenvalues(T);
  Histogram h;
  const double lo = -2.0 - src.bound, hi = 2.0 + src.bound;
  for (int i = 0; i <= bins; ++i) h.edges.push_back(lo + (hi - lo) * i / bins);
  h.mass.assign(static_cast<std::size_t>(bins), 0.0);
  for (double x : ev) {
    auto i = static_cast<long>(std::floor((x - lo) / (hi - lo) * bins));
    h.mass[static_cast<std::size_t>(std::clamp<long>(i, 0, bins - 1))] += 1.0;
  }
  double total = 0;
  for (auto& m : h.mass) {
    m /= static_cast<double>(N);
    total += m;
  }
  est.normalization = total;
  est.histogram = std::move(h);
  return est;
}

void write_histogram_csv(std::ostream& os, const Histogram& h) {
  os << csv::kHistogram << '\n';
  for (std::size_t i = 0; i < h.mass.size(); ++i)
    os << csv::num(h.edges[i]) << ',' << csv::num(h.edges[i + 1]) << ',' << csv::num(h.mass[i]) << '\n';
}

std::vector<MomentGapRow> moment_gap(const PotentialSource& src, const std::vector<long>& schedule,
                                     const std::vector<int>& degrees, Side side, bool spectral_check) {
  for (int p : degrees)
    if (p < 0) throw DomainError("degrees must be >= 0");
  std::vector<std::vector<MomentGapRow>> per_N(schedule.size());
  parallel_for(schedule.size(), [&](std::size_t i) {
    long N = schedule[i];
    auto T = truncate(src, N, side);
    std::vector<double> ev;
    if (spectral_check) ev = eigenvalues(T, 1e-13 * (2.0 + src.bound));
    for (int p : degrees) {
      MomentGapRow r;
      r.N = N;
      r.degree = p;
      TraceMoment full = trace_moment(src, N, side, p);
      TraceMoment trunc = truncated_trace_moment(T, p);
      r.dk = full.value / static_cast<double>(N);
      r.dktilde = trunc.value / static_cast<double>(N);
      if (full.exact && trunc.exact) {
        mpq_class g = (*full.exact - *trunc.exact) / N;
        r.exact_gap = abs(g);
        r.gap = r.exact_gap->get_d();
      } else {
        r.gap = std::fabs((full.value - trunc.value) / static_cast<double>(N));
      }
      if (spectral_check) {
        double s = 0;
        for (double x : ev) s += std::pow(x, p);
        r.spectral_dktilde = s / static_cast<double>(N);
      } else {
        r.spectral_dktilde = std::numeric_limits<double>::quiet_NaN();
      }
      per_N[i].push_back(std::move(r));
    }
  });
  std::vector<MomentGapRow> out;
  for (auto& v : per_N)
    for (auto& r : v) out.push_back(std::move(r));
  return out;
}

void write_moments_csv(std::ostream& os, const std::vector<MomentGapRow>& rows) {
  os << csv::kMoments << '\n';
  for (const auto& r : rows)
    os << r.N << ',' << r.degree << ',' << csv::num(r.dk) << ',' << csv::num(r.dktilde) << ',' << csv::num(r.gap)
       << '\n';
}

LimitScan dos_limit_scan(const PotentialSource& src, const std::vector<double>& coeffs,
                         const std::vector<long>& schedule, Side side) {
  if (schedule.empty()) throw DomainError("empty schedule");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (schedule[i] <= schedule[i - 1]) throw MonotonicityError("schedule must be increasing");
  LimitScan scan;
  scan.rows.resize(schedule.size());
  parallel_for(schedule.size(), [&](std::size_t i) {
    long N = schedule[i];
    double v = 0;
    for (std::size_t j = 0; j < coeffs.size(); ++j)
      if (coeffs[j] != 0.0)
        v += coeffs[j] * trace_moment(src, N, side, static_cast<int>(j)).value / static_cast<double>(N);
    scan.rows[i].N = N;
    scan.rows[i].value = v;
  });
  // Tails are the last half of the rows seen so far.
  for (std::size_t i = 0; i < scan.rows.size(); ++i) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t j = i / 2; j <= i; ++j) {
      lo = std::min(lo, scan.rows[j].value);
      hi = std::max(hi, scan.rows[j].value);
    }
    scan.rows[i].tail_min = lo;
    scan.rows[i].tail_max = hi;
  }
  scan.liminf_est = scan.rows.back().tail_min;
  scan.limsup_est = scan.rows.back().tail_max;
  return scan;
}

void write_limit_scan_csv(std::ostream& os, const LimitScan& scan) {
  os << csv::kLimitScan << '\n';
  for (const auto& r : scan.rows)
    os << r.N << ',' << csv::num(r.value) << ',' << csv::num(r.tail_min) << ',' << csv::num(r.tail_max) << '\n';
}

SpatialFamily build_spatial_counterexample(const std::vector<int>& a, const std::vector<mpq_class>& shell_measures) {
  if (a.size() != shell_measures.size()) throw DomainError("coefficients and shells differ in size");
  SpatialFamily fam;
  mpq_class mu = 0, num = 0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (shell_measures[l] <= 0) throw MonotonicityError("shell measures must be positive");
    if (a[l] != 0 && a[l] != 1) throw DomainError("coefficients must be 0 or 1");
    mu += shell_measures[l];
    num += a[l];
    fam.measures.push_back(mu);
    fam.a.push_back(a[l]);
    fam.s.push_back(num / mu);
  }
  return fam;
}

void write_counterexample_csv(std::ostream& os, const SpatialFamily& fam) {
  os << csv::kCounterexample << '\n';
  for (std::size_t l = 0; l < fam.s.size(); ++l)
    os << l + 1 << ',' << fam.measures[l].get_str() << ',' << fam.a[l] << ',' << csv::num(fam.s[l].get_d()) << '\n';
}

IntervalSet fatten(const std::vector<double>& points, double eps) {
  std::vector<double> p = points;
  std::sort(p.begin(), p.end());
  IntervalSet out;
  for (double x : p) {
    if (!out.empty() && x - eps <= out.back().second)
      out.back().second = std::max(out.back().second, x + eps);
    else
      out.emplace_back(x - eps, x + eps);
  }
  return out;
}

namespace {

double dist_to(const IntervalSet& s, double x) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [l, r] : s) {
    if (x >= l && x <= r) return 0.0;
    best = std::min(best, x < l ? l - x : x - r);
  }
  return best;
}

// sup over x in a of dist(x, b); the sup sits at an endpoint of a or at a gap midpoint of b.
double directed(const IntervalSet& a, const IntervalSet& b) {
  double worst = 0.0;
  for (const auto& [l, r] : a) {
    worst = std::max({worst, dist_to(b, l), dist_to(b, r)});
    for (std::size_t i = 1; i < b.size(); ++i) {
      double mid = 0.5 * (b[i - 1].second + b[i].first);
      if (mid >= l && mid <= r) worst = std::max(worst, dist_to(b, mid));
    }
  }
  return worst;
}

}  // namespace

double hausdorff(const IntervalSet& a, const IntervalSet& b) {
  if (a.empty() || b.empty()) throw DomainError("Hausdorff distance of an empty set");
  return std::max(directed(a, b), directed(b, a));
}

SpectrumProbe spectrum_probe(const std::vector<PotentialSource>& sources, long N, double tol, double eps) {
  if (sources.size() < 2) throw DomainError("spectrum probe needs at least 2 sources");
  if (!(eps >= 0)) throw DomainError("fattening must be >= 0");
  SpectrumProbe r;
  r.eps = eps;
  r.spectra.resize(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    auto plus = eigenvalues(truncate(sources[i], N, Side::plus), tol);
    auto minus = eigenvalues(truncate(sources[i], N, Side::minus), tol);
    plus.insert(plus.end(), minus.begin(), minus.end());
    std::sort(plus.begin(), plus.end());
    r.spectra[i] = std::move(plus);
  }
  std::vector<IntervalSet> fat;
  for (const auto& s : r.spectra) fat.push_back(fatten(s, eps));
  r.distances.assign(sources.size(), std::vector<double>(sources.size(), 0.0));
  for (std::size_t i = 0; i < sources.size(); ++i)
    for (std::size_t j = i + 1; j < sources.size(); ++j) r.distances[i][j] = r.distances[j][i] = hausdorff(fat[i], fat[j]);
  return r;
}

}  // namespace ergodeq
