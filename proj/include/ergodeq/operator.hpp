#pragma once

#include <gmpxx.h>

#include <Eigen/Core>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ergodeq/potential.hpp"

namespace ergodeq {

enum class Side { plus, minus };

std::string to_string(Side s);
Side parse_side(const std::string& text);

// P H P* on {0..N-1} (plus) or {-N..-1} (minus); off-diagonal entries are 1.
struct TridiagonalTruncation {
  Side side = Side::plus;
  long N = 0;
  Eigen::VectorXd diagonal;
  std::optional<std::vector<mpq_class>> exact_diagonal;
  double bound = 0.0;

  long first_index() const { return side == Side::plus ? 0 : -N; }
};

TridiagonalTruncation truncate(const PotentialSource& src, long N, Side side);
TridiagonalTruncation truncate_values(const std::vector<double>& diagonal, Side side = Side::plus);

// Number of eigenvalues strictly below x (Sturm sequence with pivot guard).
long sturm_count(const TridiagonalTruncation& t, double x);

double default_tolerance(double bound);

// All eigenvalues, ascending, each to within tol.
std::vector<double> eigenvalues(const TridiagonalTruncation& t, double tol);
std::vector<double> eigenvalues(const TridiagonalTruncation& t);

struct TraceMoment {
  double value = 0.0;
  std::optional<mpq_class> exact;
};

// tr(P H^m P*) on the full operator; needs V on [first - m, last + m].
TraceMoment trace_moment(const PotentialSource& src, long N, Side side, int m);
// tr((P H P*)^m) for the truncation itself.
TraceMoment truncated_trace_moment(const TridiagonalTruncation& t, int m);

// Sum over n in [wlo, whi] of <delta_n, H_R^m delta_n>, where H_R is the
// discrete Laplacian plus V restricted to [lo, hi]; V[i] is the value at site first + i.
template <class Scalar>
Scalar band_trace_power(const std::vector<Scalar>& V, long first, long wlo, long whi, long lo, long hi, int m) {
  Scalar total(0);
  const int a = m / 2, b = m - a;
  std::vector<Scalar> u, w, tmp;
  for (long n = wlo; n <= whi; ++n) {
    // Vectors live on [n - b, n + b]; index shift s = n - b.
    const long s = n - b;
    const std::size_t len = static_cast<std::size_t>(2 * b + 1);
    u.assign(len, Scalar(0));
    u[static_cast<std::size_t>(n - s)] = Scalar(1);
    auto apply = [&](std::vector<Scalar>& x) {
      tmp.assign(len, Scalar(0));
      for (std::size_t i = 0; i < len; ++i) {
        long site = s + static_cast<long>(i);
        if (site < lo || site > hi || x[i] == 0) continue;
        tmp[i] += V[static_cast<std::size_t>(site - first)] * x[i];
        if (i > 0 && site - 1 >= lo) tmp[i - 1] += x[i];
        if (i + 1 < len && site + 1 <= hi) tmp[i + 1] += x[i];
      }
      x.swap(tmp);
    };
    for (int k = 0; k < a; ++k) apply(u);
    w = u;
    for (int k = a; k < b; ++k) apply(w);
    for (std::size_t i = 0; i < len; ++i) total += u[i] * w[i];
  }
  return total;
}

void write_spectrum_csv(std::ostream& os, const TridiagonalTruncation& t, const std::vector<double>& values,
                        double tol);

}  // namespace ergodeq
