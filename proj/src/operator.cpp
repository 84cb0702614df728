#include "ergodeq/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ergodeq/csv.hpp"
#include "ergodeq/errors.hpp"
#include "ergodeq/parallel.hpp"

namespace ergodeq {

std::string to_string(Side s) { return s == Side::plus ? "+" : "-"; }

Side parse_side(const std::string& text) {
  if (text == "+" || text == "plus") return Side::plus;
  if (text == "-" || text == "minus") return Side::minus;
  throw ConfigError("side must be + or -");
}

TridiagonalTruncation truncate(const PotentialSource& src, long N, Side side) {
  if (N < 1) throw DomainError("N must be >= 1");
  TridiagonalTruncation t;
  t.side = side;
  t.N = N;
  t.bound = src.bound;
  long first = t.first_index();
  auto v = potential_window(src, first, first + N - 1);
  t.diagonal = Eigen::Map<const Eigen::VectorXd>(v.data(), N);
  if (src.has_exact()) t.exact_diagonal = potential_window_exact(src, first, first + N - 1);
  return t;
}

TridiagonalTruncation truncate_values(const std::vector<double>& diagonal, Side side) {
  if (diagonal.empty()) throw DomainError("empty diagonal");
  TridiagonalTruncation t;
  t.side = side;
  t.N = static_cast<long>(diagonal.size());
  t.diagonal = Eigen::Map<const Eigen::VectorXd>(diagonal.data(), t.N);
  for (double d : diagonal) t.bound = std::max(t.bound, std::fabs(d));
  return t;
}

long sturm_count(const TridiagonalTruncation& t, double x) {
  const double pivmin = std::numeric_limits<double>::min() * std::max(1.0, t.bound + 2.0) * 4.0;
  long count = 0;
  double d = 1.0;
  for (long i = 0; i < t.N; ++i) {
    d = t.diagonal[i] - x - (i > 0 ? 1.0 / d : 0.0);
    if (std::fabs(d) < pivmin) d = -pivmin;
    if (d < 0) ++count;
  }
  return count;
}

double default_tolerance(double bound) { return 1e-10 * (2.0 + bound); }

std::vector<double> eigenvalues(const TridiagonalTruncation& t) { return eigenvalues(t, default_tolerance(t.bound)); }

std::vector<double> eigenvalues(const TridiagonalTruncation& t, double tol) {
  if (!(tol > 0)) throw DomainError("tol must be positive");
  // Gershgorin: off-diagonal row sums are at most 2.
  double lo = t.diagonal.minCoeff() - 2.0 - tol, hi = t.diagonal.maxCoeff() + 2.0 + tol;
  std::vector<double> out(static_cast<std::size_t>(t.N));
  parallel_for(out.size(), [&](std::size_t j) {
    // Smallest x with more than j eigenvalues below it.
    double a = lo, b = hi;
    while (b - a > tol) {
      double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) throw ToleranceUnreachable("bisection interval stopped shrinking");
      if (sturm_count(t, mid) > static_cast<long>(j))
        b = mid;
      else
        a = mid;
    }
    out[j] = 0.5 * (a + b);
  });
  return out;
}

namespace {

template <class Scalar>
std::vector<Scalar> padded_values(const PotentialSource& src, long from, long to);

template <>
std::vector<double> padded_values<double>(const PotentialSource& src, long from, long to) {
  return potential_window(src, from, to);
}

template <>
std::vector<mpq_class> padded_values<mpq_class>(const PotentialSource& src, long from, long to) {
  return potential_window_exact(src, from, to);
}

}  // namespace

TraceMoment trace_moment(const PotentialSource& src, long N, Side side, int m) {
  if (N < 1) throw DomainError("N must be >= 1");
  if (m < 0) throw DomainError("moment degree must be >= 0");
  long first = side == Side::plus ? 0 : -N;
  long last = first + N - 1;
  TraceMoment r;
  if (m == 0) {
    r.exact = mpq_class(N);
    r.value = static_cast<double>(N);
    return r;
  }
  long lo = first - m, hi = last + m;
  if (src.has_exact()) {
    auto V = padded_values<mpq_class>(src, lo, hi);
    r.exact = band_trace_power(V, lo, first, last, lo, hi, m);
    r.value = r.exact->get_d();
  } else {
    auto V = padded_values<double>(src, lo, hi);
    r.value = band_trace_power(V, lo, first, last, lo, hi, m);
  }
  return r;
}

TraceMoment truncated_trace_moment(const TridiagonalTruncation& t, int m) {
  if (m < 0) throw DomainError("moment degree must be >= 0");
  long first = t.first_index(), last = first + t.N - 1;
  TraceMoment r;
  if (t.exact_diagonal) {
    r.exact = m == 0 ? mpq_class(t.N) : band_trace_power(*t.exact_diagonal, first, first, last, first, last, m);
    r.value = r.exact->get_d();
  } else {
    std::vector<double> V(t.diagonal.data(), t.diagonal.data() + t.N);
    r.value = m == 0 ? static_cast<double>(t.N) : band_trace_power(V, first, first, last, first, last, m);
  }
  return r;
}

void write_spectrum_csv(std::ostream& os, const TridiagonalTruncation& t, const std::vector<double>& values,
                        double tol) {
  csv::metadata(os, {"N=" + std::to_string(t.N), "side=" + to_string(t.side), "bound=" + csv::num(t.bound),
                     "tol=" + csv::num(tol)});
  os << csv::kSpectrum << '\n';
  for (std::size_t j = 0; j < values.size(); ++j) os << j << ',' << csv::num(values[j]) << '\n';
}

}  // namespace ergodeq
