#include "ergodeq/potential.hpp"

#include <cmath>
#include <memory>

#include "ergodeq/errors.hpp"

namespace ergodeq {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::thm2:
      return "thm2";
    case Provenance::tower:
      return "tower";
    case Provenance::constant:
      return "constant";
    default:
      return "synthetic";
  }
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t hash_index(std::uint64_t seed, long long n) {
  return mix64(mix64(seed) ^ static_cast<std::uint64_t>(n));
}

}  // namespace

PotentialSource PotentialSource::constant(const mpq_class& value) {
  mpq_class c = value;
  c.canonicalize();
  PotentialSource s;
  double d = c.get_d();
  s.value = [d](long long) { return d; };
  s.exact = [c](long long) { return c; };
  s.bound = std::fabs(d);
  s.provenance = Provenance::constant;
  s.label = "constant " + c.get_str();
  s.constant_value = d;
  return s;
}

PotentialSource PotentialSource::constant(double c) {
  PotentialSource s = constant(mpq_class(c));
  s.label = "constant";
  return s;
}

PotentialSource PotentialSource::random_rational(std::uint64_t seed, long den, long bound_num) {
  if (den < 1 || bound_num < 0) throw DomainError("random_rational needs den >= 1, bound >= 0");
  std::uint64_t span = 2 * static_cast<std::uint64_t>(den) * static_cast<std::uint64_t>(bound_num) + 1;
  auto numer = [seed, span, den, bound_num](long long n) {
    return static_cast<long>(hash_index(seed, n) % span) - den * bound_num;
  };
  PotentialSource s;
  s.value = [numer, den](long long n) { return static_cast<double>(numer(n)) / static_cast<double>(den); };
  s.exact = [numer, den](long long n) {
    mpq_class q(numer(n), den);
    q.canonicalize();
    return q;
  };
  s.bound = static_cast<double>(bound_num);
  s.provenance = Provenance::synthetic;
  s.label = "random rational";
  return s;
}

PotentialSource PotentialSource::random_uniform(std::uint64_t seed, double bound) {
  PotentialSource s;
  s.value = [seed, bound](long long n) {
    double u = static_cast<double>(hash_index(seed, n) >> 11) * 0x1p-53;
    return bound * (2.0 * u - 1.0);
  };
  s.bound = bound;
  s.provenance = Provenance::synthetic;
  s.label = "random uniform";
  return s;
}

PotentialSource PotentialSource::from_function(std::function<double(long long)> f, double bound,
                                               std::string label) {
  PotentialSource s;
  s.value = std::move(f);
  s.bound = bound;
  s.provenance = Provenance::synthetic;
  s.label = std::move(label);
  return s;
}

std::vector<double> potential_window(const PotentialSource& src, long long from, long long to) {
  if (from > to) throw DomainError("potential_window needs from <= to");
  if (src.window) return src.window(from, to);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(to - from + 1));
  for (long long n = from; n <= to; ++n) out.push_back(src.value(n));
  return out;
}

std::vector<mpq_class> potential_window_exact(const PotentialSource& src, long long from, long long to) {
  if (!src.exact) throw DomainError("source has no exact values");
  if (from > to) throw DomainError("potential_window needs from <= to");
  std::vector<mpq_class> out;
  out.reserve(static_cast<std::size_t>(to - from + 1));
  for (long long n = from; n <= to; ++n) out.push_back(src.exact(n));
  return out;
}

PotentialSource two_valued(const PotentialSource& indicator, const mpq_class& if_one, const mpq_class& if_zero,
                           Provenance tag) {
  auto ind = std::make_shared<PotentialSource>(indicator);
  double one = if_one.get_d(), zero = if_zero.get_d();
  PotentialSource s;
  s.value = [ind, one, zero](long long n) { return ind->value(n) != 0.0 ? one : zero; };
  s.exact = [ind, if_one, if_zero](long long n) { return ind->value(n) != 0.0 ? if_one : if_zero; };
  s.window = [ind, one, zero](long long a, long long b) {
    std::vector<double> v = potential_window(*ind, a, b);
    for (double& x : v) x = x != 0.0 ? one : zero;
    return v;
  };
  s.bound = std::max(std::fabs(one), std::fabs(zero));
  s.provenance = tag;
  s.label = indicator.label + " scaled";
  return s;
}

}  // namespace ergodeq
