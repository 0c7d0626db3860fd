#include "skew/expr.hpp"

#include <cmath>
#include <sstream>

#include "skew/quadrature.hpp"

namespace skew {

Expr Expr::constant(double c) {
    Expr e;
    e.kind = Kind::constant;
    e.c = c;
    return e;
}

Expr Expr::power_law(double c, double x0, double p) {
    Expr e;
    e.kind = Kind::power_law;
    e.c = c;
    e.x0 = x0;
    e.p = p;
    return e;
}

Expr Expr::exponential(double c, double q, int k) {
    Expr e;
    e.kind = Kind::exponential;
    e.c = c;
    e.q = q;
    e.k = k;
    return e;
}

namespace {
double ipow(double x, int k) {
    double r = 1;
    for (int i = 0; i < k; i++) r *= x;
    return r;
}
} // namespace

double Expr::eval(double x) const {
    switch (kind) {
    case Kind::constant: return c;
    case Kind::power_law: return c * std::pow(std::abs(x - x0), p);
    case Kind::exponential: return c * std::exp(q * ipow(x, k));
    }
    return 0;
}

double Expr::log_abs_eval(double x) const {
    switch (kind) {
    case Kind::constant: return std::log(std::abs(c));
    case Kind::power_law: return std::log(std::abs(c)) + p * std::log(std::abs(x - x0));
    case Kind::exponential: return std::log(std::abs(c)) + q * ipow(x, k);
    }
    return 0;
}

bool Expr::has_antiderivative() const {
    return kind != Kind::exponential || k == 1;
}

double Expr::antiderivative(double x) const {
    switch (kind) {
    case Kind::constant:
        return c * x;
    case Kind::power_law: {
        double s = (x >= x0) ? 1.0 : -1.0;
        double r = std::abs(x - x0);
        if (p == -1.0) return c * s * std::log(r);
        return c * s * std::pow(r, p + 1) / (p + 1);
    }
    case Kind::exponential:
        if (k == 1) {
            if (q == 0) return c * x;
            return (c / q) * std::exp(q * x);
        }
        throw Error("no elementary antiderivative for exponential with k >= 2");
    }
    return 0;
}

double Expr::integral_signed_finite(double lo, double hi) const {
    if (has_antiderivative()) return antiderivative(hi) - antiderivative(lo);
    QuadResult r = integrate([this](double x) { return eval(x); }, lo, hi);
    return r.value;
}

double Expr::derivative(double x) const {
    switch (kind) {
    case Kind::constant: return 0;
    case Kind::power_law: {
        double s = (x >= x0) ? 1.0 : -1.0;
        return c * p * s * std::pow(std::abs(x - x0), p - 1);
    }
    case Kind::exponential:
        return c * q * k * ipow(x, k - 1) * std::exp(q * ipow(x, k));
    }
    return 0;
}

ExtendedReal Expr::integral_abs(double lo, double hi) const {
    const double ac = std::abs(c);
    if (ac == 0) return ExtendedReal::finite(0.0);
    const bool lo_inf = std::isinf(lo), hi_inf = std::isinf(hi);

    switch (kind) {
    case Kind::constant:
        if (lo_inf || hi_inf) return ExtendedReal::infinite();
        return ExtendedReal::finite(ac * (hi - lo));

    case Kind::power_law: {
        // tail test at infinity: |x|^p integrable iff p < -1
        if ((lo_inf || hi_inf) && p >= -1.0) return ExtendedReal::infinite();
        // singularity at x0 inside the closure: integrable iff p > -1
        bool touches_x0 = (x0 >= lo && x0 <= hi);
        if (touches_x0 && p <= -1.0) return ExtendedReal::infinite();
        double total = 0;
        auto piece = [&](double a, double b) {
            // |expr| has antiderivative of the same shape with |c|
            Expr e = *this;
            e.c = ac;
            if (std::isinf(b)) return ac * 0.0 - e.antiderivative(a); // p < -1, limit 0
            if (std::isinf(a)) return e.antiderivative(b) - 0.0;
            return e.antiderivative(b) - e.antiderivative(a);
        };
        if (touches_x0 && x0 > lo && x0 < hi) {
            // antiderivative limit at x0 is 0 for p > -1
            Expr e = *this;
            e.c = ac;
            double left = (std::isinf(lo) ? 0.0 : -e.antiderivative(lo));
            double right = (std::isinf(hi) ? 0.0 : e.antiderivative(hi));
            total = left + right;
        } else {
            total = piece(lo, hi);
        }
        return ExtendedReal::finite(std::abs(total));
    }

    case Kind::exponential: {
        // tails: q * x^k -> +inf means non-integrable
        if (hi_inf) {
            if (q > 0) return ExtendedReal::infinite();
            if (q == 0) return ExtendedReal::infinite();
        }
        if (lo_inf) {
            const bool to_plus_inf = (k % 2 == 0) ? (q > 0) : (q < 0);
            if (q == 0 || to_plus_inf) return ExtendedReal::infinite();
        }
        if (k == 1) {
            Expr e = *this;
            e.c = ac;
            double right = hi_inf ? 0.0 : e.antiderivative(hi);
            double left = lo_inf ? 0.0 : e.antiderivative(lo);
            return ExtendedReal::finite(std::abs(right - left));
        }
        // k >= 2: decaying tails dominated by exp(-|q| |x|); integrate numerically
        auto f = [&](double x) { return std::abs(eval(x)); };
        ExtendedReal r = improper_nonnegative(f, lo, hi);
        return r.with_confidence(Confidence::numeric);
    }
    }
    return ExtendedReal::unknown();
}

std::string Expr::describe() const {
    std::ostringstream os;
    switch (kind) {
    case Kind::constant: os << c; break;
    case Kind::power_law: os << c << "*|x-" << x0 << "|^" << p; break;
    case Kind::exponential:
        os << c << "*exp(" << q << "*x";
        if (k != 1) os << "^" << k;
        os << ")";
        break;
    }
    return os.str();
}

} // namespace skew
