#include "percomatch/bounds.hpp"

#include <cmath>
#include <numbers>

#include "percomatch/errors.hpp"

namespace percomatch {

double rate_function(double b) {
  if (!(b >= 0.0)) throw DomainError("rate_function: b must be >= 0");
  if (b == 0.0) return 1.0;
  return 1.0 - b + b * std::log(b);
}

TailBounds tail_bounds(std::uint64_t n_trials, double p, double x) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("tail_bounds: p must lie in (0,1)");
  if (!(x >= 0.0)) throw DomainError("tail_bounds: x must be >= 0");
  if (n_trials == 0) throw DomainError("tail_bounds: n must be >= 1");
  TailBounds tb;
  tb.mu = static_cast<double>(n_trials) * p;
  const double h = rate_function(x / tb.mu);
  if (x <= tb.mu)
    tb.lower = std::exp(-tb.mu * h);
  else
    tb.upper = std::exp(-tb.mu * h);
  if (x > std::numbers::e * std::numbers::e * tb.mu)
    tb.far_upper = std::exp(-0.5 * x * std::log(x / tb.mu));
  return tb;
}

}  // namespace percomatch
