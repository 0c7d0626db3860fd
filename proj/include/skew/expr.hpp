#pragma once

#include <string>

#include "skew/extended.hpp"

namespace skew {

/// Open interval with extended endpoints; (lo, hi), lo < hi.
struct Interval {
    double lo;
    double hi;
    bool contains(double x) const { return x > lo && x < hi; }
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
    double length() const { return hi - lo; }
};

/// Closed-form expression family for measure densities and raw density
/// functions:
///   constant     c
///   power_law    c * |x - x0|^p
///   exponential  c * exp(q * x^k), integer k >= 1
struct Expr {
    enum class Kind { constant, power_law, exponential };
    Kind kind = Kind::constant;
    double c = 1.0;
    double x0 = 0.0; // power_law center
    double p = 0.0;  // power_law exponent
    double q = 0.0;  // exponential rate
    int k = 1;       // exponential inner power

    static Expr constant(double c);
    static Expr power_law(double c, double x0, double p);
    static Expr exponential(double c, double q, int k = 1);

    double eval(double x) const;
    double log_abs_eval(double x) const; // log|expr(x)|, overflow-safe

    /// True when an elementary antiderivative exists (constant, power_law,
    /// exponential with k = 1).
    bool has_antiderivative() const;

    /// Antiderivative at x (defined up to a constant); requires
    /// has_antiderivative() and, for power_law, x != x0.
    double antiderivative(double x) const;

    /// Integral of |expr| over the open interval (lo, hi), with certified
    /// finite/infinite classification for endpoint singularities and
    /// unbounded ranges; falls back to numeric quadrature for exponential
    /// k >= 2 on finite ranges.
    ExtendedReal integral_abs(double lo, double hi) const;

    /// Signed integral over a finite interval strictly avoiding
    /// singularities; exact via antiderivatives where available.
    double integral_signed_finite(double lo, double hi) const;

    /// d(expr)/dx at x (away from the power_law center).
    double derivative(double x) const;

    std::string describe() const;
};

} // namespace skew
