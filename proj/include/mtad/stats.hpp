#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "mtad/errors.hpp"

namespace mtad {

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) throw ConfigError("mean_of: empty input");
  double s = 0;
  for (double x : xs) s += x;
  return s / double(xs.size());
}

// Population standard deviation (divides by n, not n-1).
inline double pop_std(std::span<const double> xs) {
  const double m = mean_of(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / double(xs.size()));
}

// Percentile with linear interpolation between order statistics: the value
// at fractional rank pct/100 * (n-1) of the sorted sample.
inline double percentile(std::vector<double> xs, double pct) {
  if (xs.empty()) throw ConfigError("percentile: empty input");
  if (pct < 0 || pct > 100) throw ConfigError("percentile: pct out of [0, 100]");
  std::sort(xs.begin(), xs.end());
  const double pos = pct / 100.0 * double(xs.size() - 1);
  const auto lo = std::size_t(pos);
  if (lo + 1 >= xs.size()) return xs.back();
  const double frac = pos - double(lo);
  return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

}  // namespace mtad
