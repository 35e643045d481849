// Closed-form Barenblatt solutions of u_t = Delta log u, their rescaled
// stationary profiles B~_k(x) = 2(N-2)/(k+|x|^2), and the exact differential
// identities they satisfy:
//
//   B_k(x,t) = 2(N-2)(T-t)_+^{N/(N-2)} / (k + (T-t)_+^{2/(N-2)} |x|^2)
//
// together with the weight B~^alpha (alpha = (N-4)/2), its Laplacian in
// closed form, and the drift-diffusion bound used by the weighted-L1
// arguments for N >= 5.
#pragma once

#include "logdiff/grid.hpp"

namespace logdiff {

struct BarenblattSpec {
  double k = 1.0;        // profile parameter, > 0
  double T = 1.0;        // extinction time, > 0
  int dimension = 3;     // N >= 3

  void validate() const;
};

// Exact evaluation; returns 0 for t >= T through the (T-t)_+ convention.
double barenblatt_value(double r, double t, const BarenblattSpec& spec);

// B~_k(r) = 2(N-2)/(k+r^2).
double rescaled_barenblatt_value(double r, double k, int dimension);

// Weight B~^alpha with parameter k2.
double weight_value(double r, double alpha, double k2, int dimension);

// The natural exponent alpha = (N-4)/2 of the weighted space.
double weight_alpha(int dimension);

// Closed form of Delta B~^alpha with alpha = (N-4)/2:
//   -(N-4)(2 r^2 + k2 N)/(k2+r^2)^2 * B~^alpha   (< 0 everywhere, N >= 5).
double laplacian_weight_identity(double r, double k2, int dimension);

// Closed form of ((k2+r^2)/(2(N-2))) Delta B~^alpha - (1/(N-2)) r d_r B~^alpha
//   = -k2 (N-4) N / (2(N-2)(k2+r^2)) * B~^alpha   (< 0 everywhere, N >= 5).
double drift_diffusion_bound(double r, double k2, int dimension);

// Closed form of r d_r B~^alpha (the gradient term of the bound above).
double radial_gradient_weight(double r, double k2, int dimension);

// Samples B_k(.,t) on a grid, with the exact transformed tail law.
RadialProfile sample_barenblatt(GridPtr grid, const BarenblattSpec& spec, double t);

// Samples B~_k on a grid with its exact tail law (c = 2(N-2), k_tail = k).
RadialProfile sample_rescaled_barenblatt(GridPtr grid, double k);

// Applies the self-similar change of variables to the sampled B_k(.,t) and
// returns the sup-distance to B~_k on the given self-similar grid. Pure
// algebra: contract <= 1e-12 for any t < T.
double rescale_identity_check(const BarenblattSpec& spec, double t, const RadialGrid& grid);

// Discrete residual of the rescaled equation at f:
//   Delta log f + (1/(N-2)) r^{1-N} d_r(r^N f).
// Vanishes at the discretization order when f samples any B~_k.
RadialProfile residual_rescaled_pde(const RadialProfile& f);

}  // namespace logdiff
