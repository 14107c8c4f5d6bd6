#pragma once

// Internal numeric helpers shared by the model and calibration code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace percomatch::detail {

struct Quad {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive Gauss-Kronrod over [a, b], split at the given interior kinks.
template <class F, unsigned Points = 31>
Quad integrate(F&& f, double a, double b, std::vector<double> kinks = {}, double rel_tol = 1e-10,
               unsigned max_depth = 12) {
  Quad q;
  if (!(b > a)) return q;
  kinks.push_back(a);
  kinks.push_back(b);
  std::sort(kinks.begin(), kinks.end());
  double lo = a;
  for (double x : kinks) {
    if (x <= lo) continue;
    if (x > b) break;
    double err = 0.0;
    q.value += boost::math::quadrature::gauss_kronrod<double, Points>::integrate(f, lo, x, max_depth,
                                                                             rel_tol, &err);
    q.error += std::abs(err);
    lo = x;
  }
  return q;
}

/// Radical inverse of `index` in `base` (Halton coordinate).
inline double radical_inverse(std::uint64_t index, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

inline unsigned nth_prime(int i) {
  static const unsigned primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                    43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
  return primes[static_cast<std::size_t>(i) % std::size(primes)];
}

}  // namespace percomatch::detail
