#include "logdiff/transform.hpp"

#include <cmath>

#include "logdiff/interp.hpp"

namespace logdiff {

void Frame::validate() const {
  if (!(T > 0.0)) throw FrameError("frame requires T > 0");
  if (dimension < 3) throw FrameError("frame requires N >= 3");
}

double selfsimilar_time(double t, double T) {
  if (!(t < T)) throw FrameError("t must be below the extinction time");
  return -std::log(T - t);
}

double physical_time(double s, double T) { return T - std::exp(-s); }

SelfSimilarView to_selfsimilar(const RadialProfile& u, double t, const Frame& frame) {
  frame.validate();
  const int n = frame.dimension;
  const double tau = frame.T - t;
  if (!(tau > 0.0)) throw FrameError("t must be below the extinction time");
  const double lambda = std::exp(std::log(tau) / (n - 2));          // (T-t)^{1/(N-2)}
  const double amp = std::exp(-std::log(tau) * n / (n - 2.0));      // (T-t)^{-N/(N-2)}

  const auto& r = u.grid().nodes();
  std::vector<double> nodes(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) nodes[i] = r[i] * lambda;
  nodes[0] = 0.0;
  auto grid = std::make_shared<RadialGrid>(std::move(nodes), n, u.grid().stretch());

  std::vector<double> vals(u.size());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = u.value(i) * amp;

  std::optional<TailLaw> tail;
  if (u.tail()) tail = TailLaw{u.tail()->c / tau, u.tail()->k * lambda * lambda};
  return SelfSimilarView{RadialProfile(std::move(grid), std::move(vals), tail),
                         selfsimilar_time(t, frame.T)};
}

PhysicalView from_selfsimilar(const RadialProfile& u_tilde, double s, const Frame& frame) {
  frame.validate();
  const int n = frame.dimension;
  const double tau = std::exp(-s);
  const double lambda = std::exp(std::log(tau) / (n - 2));
  const double amp = std::exp(std::log(tau) * n / (n - 2.0));

  const auto& y = u_tilde.grid().nodes();
  std::vector<double> nodes(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) nodes[i] = y[i] / lambda;
  nodes[0] = 0.0;
  auto grid = std::make_shared<RadialGrid>(std::move(nodes), n, u_tilde.grid().stretch());

  std::vector<double> vals(u_tilde.size());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = u_tilde.value(i) * amp;

  std::optional<TailLaw> tail;
  if (u_tilde.tail())
    tail = TailLaw{u_tilde.tail()->c * tau, u_tilde.tail()->k / (lambda * lambda)};
  return PhysicalView{RadialProfile(std::move(grid), std::move(vals), tail),
                      physical_time(s, frame.T)};
}

SelfSimilarView to_selfsimilar_on(const RadialProfile& u, double t, const Frame& frame,
                                  GridPtr target) {
  SelfSimilarView exact = to_selfsimilar(u, t, frame);
  return SelfSimilarView{resample(exact.profile, std::move(target)), exact.s};
}

PhysicalView from_selfsimilar_on(const RadialProfile& u_tilde, double s, const Frame& frame,
                                 GridPtr target) {
  PhysicalView exact = from_selfsimilar(u_tilde, s, frame);
  return PhysicalView{resample(exact.profile, std::move(target)), exact.t};
}

}  // namespace logdiff
