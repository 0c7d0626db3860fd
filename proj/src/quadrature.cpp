#include "skew/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace skew {

namespace {

// Gauss-Kronrod 7-15 nodes/weights on [-1,1].
const double kron_x[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
const double kron_w[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
const double gauss_w[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct GK {
    double integral;
    double error;
};

GK gk15(const Integrand& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; i++) {
        fv[i] = f(c - h * kron_x[i]);
        fv[14 - i] = f(c + h * kron_x[i]);
    }
    fv[7] = f(c);
    double kron = 0, gauss = 0;
    for (int i = 0; i < 7; i++) kron += kron_w[i] * (fv[i] + fv[14 - i]);
    kron += kron_w[7] * fv[7];
    // Gauss nodes are the odd Kronrod nodes
    for (int i = 0; i < 3; i++) gauss += gauss_w[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
    gauss += gauss_w[3] * fv[7];
    kron *= h;
    gauss *= h;
    double err = std::abs(kron - gauss);
    // standard QUADPACK-style error sharpening
    err = std::pow(200.0 * err, 1.5);
    double scale = std::abs(kron);
    if (scale > 0 && err > scale) err = scale;
    return {kron, std::max(err, std::abs(kron - gauss))};
}

void adapt(const Integrand& f, double a, double b, double tol, int depth,
           int max_depth, QuadResult& out) {
    GK r = gk15(f, a, b);
    out.evaluations += 15;
    if (!std::isfinite(r.integral)) {
        // singular subinterval: shrink away from it instead of giving up
        if (depth < max_depth) {
            double m = 0.5 * (a + b);
            adapt(f, a, m, tol * 0.5, depth + 1, max_depth, out);
            adapt(f, m, b, tol * 0.5, depth + 1, max_depth, out);
            return;
        }
        out.converged = false;
        return;
    }
    if (r.error <= tol || depth >= max_depth) {
        out.value += r.integral;
        out.error += r.error;
        if (depth >= max_depth && r.error > tol) out.converged = false;
        return;
    }
    double m = 0.5 * (a + b);
    adapt(f, a, m, tol * 0.5, depth + 1, max_depth, out);
    adapt(f, m, b, tol * 0.5, depth + 1, max_depth, out);
}

} // namespace

QuadResult integrate(const Integrand& f, double a, double b, double abs_tol,
                     double rel_tol, int max_depth) {
    QuadResult out;
    out.converged = true;
    if (a == b) return out;
    double sign = 1;
    if (a > b) {
        std::swap(a, b);
        sign = -1;
    }
    GK first = gk15(f, a, b);
    double tol = std::max(abs_tol, rel_tol * std::abs(first.integral));
    adapt(f, a, b, tol, 0, max_depth, out);
    out.value *= sign;
    return out;
}

QuadResult integrate_right_tail(const Integrand& f, double a, double abs_tol,
                                double rel_tol) {
    // x = a + t/(1-t), dx = dt/(1-t)^2, t in (0,1)
    auto g = [&](double t) {
        double u = 1.0 - t;
        double x = a + t / u;
        if (!std::isfinite(x)) return 0.0; // u rounded to 0: negligible sliver
        return f(x) / (u * u);
    };
    return integrate(g, 0.0, 1.0, abs_tol, rel_tol);
}

QuadResult integrate_left_tail(const Integrand& f, double b, double abs_tol,
                               double rel_tol) {
    auto g = [&](double t) {
        double u = 1.0 - t;
        double x = b - t / u;
        if (!std::isfinite(x)) return 0.0;
        return f(x) / (u * u);
    };
    return integrate(g, 0.0, 1.0, abs_tol, rel_tol);
}

ExtendedReal improper_nonnegative(const Integrand& f, double a, double b,
                                  double abs_tol, double blow_up) {
    const bool left_inf = std::isinf(a);
    const bool right_inf = std::isinf(b);
    if (!left_inf && !right_inf) {
        // possible endpoint singularities: approach both ends geometrically
        double len = b - a;
        double total = 0;
        double prev = 0;
        for (int k = 2; k <= 40; k++) {
            double d = len * std::pow(2.0, -k);
            QuadResult r = integrate(f, a + d, b - d, abs_tol, 1e-10);
            total = r.value;
            if (total > blow_up)
                return ExtendedReal::infinite(Confidence::numeric);
            if (k > 4 && std::abs(total - prev) <= std::max(abs_tol, 1e-12 * std::abs(total)))
                return ExtendedReal::finite(total, Confidence::numeric);
            prev = total;
        }
        return ExtendedReal::finite(total, Confidence::numeric);
    }
    // expand truncations toward the infinite end(s)
    double lo = left_inf ? std::min(b, 0.0) - 1.0 : a;
    double hi = right_inf ? std::max(a, 0.0) + 1.0 : b;
    double inner = integrate(f, lo, hi, abs_tol, 1e-10).value;
    double total = inner;
    double prev = -1;
    for (int k = 0; k < 40; k++) {
        double step_made = 0;
        if (right_inf) {
            double next = hi * 2 + 1;
            total += integrate(f, hi, next, abs_tol, 1e-10).value;
            hi = next;
            step_made = 1;
        }
        if (left_inf) {
            double next = lo * 2 - 1;
            total += integrate(f, next, lo, abs_tol, 1e-10).value;
            lo = next;
            step_made = 1;
        }
        if (total > blow_up) return ExtendedReal::infinite(Confidence::numeric);
        if (step_made && prev >= 0 &&
            std::abs(total - prev) <= std::max(abs_tol, 1e-12 * std::abs(total)))
            return ExtendedReal::finite(total, Confidence::numeric);
        prev = total;
    }
    return ExtendedReal::unknown();
}

double invert_increasing(const std::function<double(double)>& g, double y,
                         double lo, double hi, double tol) {
    double flo = g(lo) - y;
    double fhi = g(hi) - y;
    if (flo > 0) return lo;
    if (fhi < 0) return hi;
    for (int i = 0; i < 200 && hi - lo > tol; i++) {
        double mid = 0.5 * (lo + hi);
        double fm = g(mid) - y;
        if (fm < 0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace skew
