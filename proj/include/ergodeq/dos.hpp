#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ergodeq/flat_tower.hpp"
#include "ergodeq/operator.hpp"
#include "ergodeq/potential.hpp"

namespace ergodeq {

enum class MeasureKind { dk_spatial, dk_trunc, dktilde_trunc };

std::string to_string(MeasureKind k);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<double> mass;
};

struct MeasureEstimate {
  MeasureKind kind = MeasureKind::dk_trunc;
  std::vector<double> moments;  // degrees 0..m_max
  std::vector<std::optional<mpq_class>> exact_moments;
  std::vector<double> std_errors;  // Monte Carlo only
  std::optional<Histogram> histogram;
  double normalization = 1.0;
  double region_measure = 0.0;  // mu(F), spatial only
};

// F = {(u, m) : u_lo < u <= u_hi, m_lo <= m <= min(m_hi, h(u))} in the flat tower.
struct TowerRegion {
  double u_lo = 0.0, u_hi = 1.0;
  std::uint64_t m_lo = 1, m_hi = 1;
};

// Moments of dk^F via <delta_0, H_omega^j delta_0> at omega sampled uniformly in F.
MeasureEstimate dos_spatial(const FlatTower& tower, const LevelFunction& f, const TowerRegion& F, int degree,
                            const MonteCarloConfig& mc, std::uint64_t stream = 0x444f53);

enum class DosVariant { dk, dktilde };

MeasureEstimate dos_truncation(const PotentialSource& src, long N, Side side, DosVariant variant, int degree,
                               int bins = 64);

void write_histogram_csv(std::ostream& os, const Histogram& h);

struct MomentGapRow {
  long N = 0;
  int degree = 0;
  double dk = 0.0;
  double dktilde = 0.0;
  double gap = 0.0;                 // |dk - dktilde|
  std::optional<mpq_class> exact_gap;
  double spectral_dktilde = 0.0;    // eigenvalue power sum / N, NaN when skipped
};

std::vector<MomentGapRow> moment_gap(const PotentialSource& src, const std::vector<long>& schedule,
                                     const std::vector<int>& degrees, Side side = Side::plus,
                                     bool spectral_check = false);

void write_moments_csv(std::ostream& os, const std::vector<MomentGapRow>& rows);

struct LimitScanRow {
  long N = 0;
  double value = 0.0;
  double tail_min = 0.0;
  double tail_max = 0.0;
};

struct LimitScan {
  std::vector<LimitScanRow> rows;
  double liminf_est = 0.0;  // min over the last half of the schedule
  double limsup_est = 0.0;
};

// int g dk_N for g(E) = sum_j coeffs[j] E^j along the schedule.
LimitScan dos_limit_scan(const PotentialSource& src, const std::vector<double>& coeffs,
                         const std::vector<long>& schedule, Side side);

void write_limit_scan_csv(std::ostream& os, const LimitScan& scan);

struct SpatialFamily {
  std::vector<mpq_class> measures;  // mu(F_l), cumulative
  std::vector<int> a;
  std::vector<mpq_class> s;         // first moments s_l = (a_1 + ... + a_l) / mu(F_l)
};

SpatialFamily build_spatial_counterexample(const std::vector<int>& a, const std::vector<mpq_class>& shell_measures);

void write_counterexample_csv(std::ostream& os, const SpatialFamily& fam);

using IntervalSet = std::vector<std::pair<double, double>>;

// Union of [x - eps, x + eps], merged and sorted.
IntervalSet fatten(const std::vector<double>& points, double eps);
double hausdorff(const IntervalSet& a, const IntervalSet& b);

struct SpectrumProbe {
  double eps = 0.0;
  std::vector<std::vector<double>> spectra;     // both truncation sides, sorted
  std::vector<std::vector<double>> distances;   // pairwise Hausdorff distance of fattened spectra
};

SpectrumProbe spectrum_probe(const std::vector<PotentialSource>& sources, long N, double tol, double eps);

}  // namespace ergodeq
