#pragma once

#include <cstdint>
#include <optional>

namespace percomatch {

/// H(b) = 1 - b + b ln b, with H(0) = 1.
double rate_function(double b);

/// Chernoff-type bounds on Bin(n, p) tails around x. Each bound is present
/// only when its side condition holds:
///   lower:     P(Bin <= x) <= exp(-mu H(x/mu))        for x <= mu
///   upper:     P(Bin >= x) <= exp(-mu H(x/mu))        for x >  mu
///   far_upper: P(Bin >= x) <= exp(-(x/2) ln(x/mu))    for x >  e^2 mu
struct TailBounds {
  double mu = 0.0;
  std::optional<double> lower;
  std::optional<double> upper;
  std::optional<double> far_upper;
};

TailBounds tail_bounds(std::uint64_t n_trials, double p, double x);

}  // namespace percomatch
