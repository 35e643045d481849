// Exact coordinate changes between the physical frame (x, t, u) and the
// self-similar frame (y, s, u~):
//
//   u~(y, s) = (T-t)^{-N/(N-2)} u(y / (T-t)^{1/(N-2)}, t),   s = -log(T-t),
//
// so self-similar radii are physical radii scaled by (T-t)^{1/(N-2)} and the
// tail law c/(k+r^2) transforms covariantly (c -> c/(T-t),
// k -> k (T-t)^{2/(N-2)}).
#pragma once

#include "logdiff/grid.hpp"

namespace logdiff {

enum class FrameKind { physical, selfsimilar };

struct Frame {
  FrameKind kind = FrameKind::physical;
  double T = 1.0;      // extinction time of the reference rescaling, > 0
  int dimension = 3;   // N >= 3

  void validate() const;
};

struct SelfSimilarView {
  RadialProfile profile;
  double s;
};

struct PhysicalView {
  RadialProfile profile;
  double t;
};

double selfsimilar_time(double t, double T);  // s = -log(T-t), requires t < T
double physical_time(double s, double T);     // t = T - exp(-s)

// Exact node-for-node change of variables: the returned profile lives on the
// scaled grid (nodes multiplied by (T-t)^{1/(N-2)}), no interpolation.
SelfSimilarView to_selfsimilar(const RadialProfile& u, double t, const Frame& frame);
PhysicalView from_selfsimilar(const RadialProfile& u_tilde, double s, const Frame& frame);

// Same change of variables followed by monotone-cubic resampling onto the
// canonical fixed grid of a run.
SelfSimilarView to_selfsimilar_on(const RadialProfile& u, double t, const Frame& frame,
                                  GridPtr target);
PhysicalView from_selfsimilar_on(const RadialProfile& u_tilde, double s, const Frame& frame,
                                 GridPtr target);

}  // namespace logdiff
