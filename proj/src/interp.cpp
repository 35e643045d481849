#include "logdiff/interp.hpp"

#include <algorithm>
#include <cmath>

namespace logdiff {

PchipInterpolant::PchipInterpolant(std::span<const double> x, std::span<const double> y)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw GridError("interpolant needs matching x/y, n >= 2");
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    if (!(h[i] > 0.0)) throw GridError("interpolation abscissae must increase");
    delta[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  slope_.assign(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      slope_[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      slope_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  auto endpoint = [](double h0, double h1, double d0, double d1) {
    double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (m * d0 <= 0.0)
      m = 0.0;
    else if (d0 * d1 < 0.0 && std::abs(m) > 3.0 * std::abs(d0))
      m = 3.0 * d0;
    return m;
  };
  if (n == 2) {
    slope_[0] = slope_[1] = delta[0];
  } else {
    slope_[0] = endpoint(h[0], h[1], delta[0], delta[1]);
    slope_[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }
}

double PchipInterpolant::operator()(double xq) const {
  if (xq <= x_.front()) return y_.front() + slope_.front() * (xq - x_.front());
  if (xq >= x_.back()) return y_.back() + slope_.back() * (xq - x_.back());
  const std::size_t i =
      std::upper_bound(x_.begin(), x_.end(), xq) - x_.begin() - 1;
  const double h = x_[i + 1] - x_[i];
  const double t = (xq - x_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * y_[i] + h * h10 * slope_[i] + h01 * y_[i + 1] + h * h11 * slope_[i + 1];
}

ProfileEvaluator::ProfileEvaluator(const RadialProfile& f)
    : interp_(f.grid().nodes(), f.values()), tail_(f.tail()), r_max_(f.grid().r_max()) {}

double ProfileEvaluator::operator()(double r) const {
  if (r <= r_max_) return interp_(r);
  if (!tail_) throw GridError("radius beyond grid and no tail law present");
  return tail_->value(r);
}

RadialProfile resample(const RadialProfile& f, GridPtr target) {
  if (target->dimension() != f.grid().dimension())
    throw GridError("resample requires matching dimension");
  ProfileEvaluator eval(f);
  std::vector<double> vals(target->node_count());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = eval(target->node(i));
  std::optional<TailLaw> tail = f.tail();
  if (tail) {
    // keep the boundary node consistent with the carried law
    vals.back() = tail->value(target->r_max());
  }
  return RadialProfile(std::move(target), std::move(vals), tail);
}

}  // namespace logdiff
