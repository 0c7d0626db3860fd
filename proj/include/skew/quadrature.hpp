#pragma once

#include <functional>

#include "skew/extended.hpp"

namespace skew {

struct QuadResult {
    double value = 0;
    double error = 0;     // estimated absolute error
    bool converged = false;
    int evaluations = 0;
};

using Integrand = std::function<double(double)>;

/// Adaptive Gauss-Kronrod (7-15) on a finite interval. Endpoints are never
/// evaluated, so integrable endpoint singularities are fine.
QuadResult integrate(const Integrand& f, double a, double b,
                     double abs_tol = 1e-9, double rel_tol = 1e-9,
                     int max_depth = 48);

/// Integral over (a, +inf) or (-inf, b) via the substitution x = c +/- t/(1-t).
QuadResult integrate_right_tail(const Integrand& f, double a,
                                double abs_tol = 1e-9, double rel_tol = 1e-9);
QuadResult integrate_left_tail(const Integrand& f, double b,
                               double abs_tol = 1e-9, double rel_tol = 1e-9);

/// Improper integral of a nonnegative integrand over (a,b) where either end
/// may be infinite or a singularity. Declares divergence (numeric flag) when
/// expanding truncations exceed `blow_up`; otherwise reports the converged
/// truncation limit. This is the divergence heuristic for monotone tails.
ExtendedReal improper_nonnegative(const Integrand& f, double a, double b,
                                  double abs_tol = 1e-9,
                                  double blow_up = 1e12);

/// Monotone root bracketing: find x in [lo,hi] with g(x) = y for increasing g,
/// bisected to `tol` (used to invert scale functions).
double invert_increasing(const std::function<double(double)>& g, double y,
                         double lo, double hi, double tol = 1e-12);

} // namespace skew
