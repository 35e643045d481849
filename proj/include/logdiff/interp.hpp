// Monotone cubic (Fritsch-Carlson) interpolation of radial profiles.
// Preserves positivity and the sandwich property when resampling between
// frames; radii beyond the grid are evaluated through the tail law.
#pragma once

#include <span>
#include <vector>

#include "logdiff/grid.hpp"

namespace logdiff {

class PchipInterpolant {
 public:
  PchipInterpolant(std::span<const double> x, std::span<const double> y);
  double operator()(double xq) const;

 private:
  std::vector<double> x_, y_, slope_;
};

// Profile value at arbitrary radius: PCHIP inside the grid, tail law beyond
// (error if no tail and r exceeds r_max).
class ProfileEvaluator {
 public:
  explicit ProfileEvaluator(const RadialProfile& f);
  double operator()(double r) const;

 private:
  PchipInterpolant interp_;
  std::optional<TailLaw> tail_;
  double r_max_;
};

// Resample onto another grid of the same dimension; tail carried over.
RadialProfile resample(const RadialProfile& f, GridPtr target);

}  // namespace logdiff
