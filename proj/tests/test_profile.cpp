#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "skew/measure.hpp"
#include "skew/profile.hpp"

using namespace skew;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

CheckedMeasure alpha_skew(double alpha) {
    SignedMeasureSpec s;
    s.atoms.push_back({0.0, 2 * alpha - 1});
    return validate_measure(s);
}

CheckedMeasure exa13(double alpha) {
    SignedMeasureSpec s;
    s.density_pieces.push_back({{-kInf, 0.0}, Expr::power_law(-alpha / 2, 0.0, -1.0)});
    s.atoms.push_back({0.0, 1.0});
    return validate_measure(s);
}

CheckedMeasure exa14_power(double alpha) {
    SignedMeasureSpec s;
    s.atom_rules.push_back(make_cluster_power(alpha));
    s.atoms.push_back({0.0, 1.0});
    return validate_measure(s);
}

// independent quadrature oracle: composite Simpson with one refinement check
double simpson_oracle(const std::function<double(double)>& f, double a, double b, int n) {
    double h = (b - a) / n, s = 0;
    for (int i = 0; i < n; i++) {
        double x0 = a + i * h;
        s += (f(x0) + 4 * f(x0 + h / 2) + f(x0 + h)) * h / 6;
    }
    return s;
}

} // namespace

TEST_CASE("alpha-skew profile reproduces the two-level step exactly") {
    for (double alpha : {0.25, 0.5, 0.75}) {
        CheckedMeasure m = alpha_skew(alpha);
        GInterval g{-kInf, kInf, 0.0};
        DensityProfile p = build_profile(m, g);
        double below = (1 - alpha) / alpha;
        CHECK(p.eval(0.0) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(p.eval(1.7) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(p.eval(-0.3) == doctest::Approx(below).epsilon(1e-14));
        CHECK(p.eval(0.0, Side::left) == doctest::Approx(below).epsilon(1e-14));
        // any reference point gives the same values (only normalization moves)
        DensityProfile p1 = build_profile(m, {-kInf, kInf, 1.0});
        CHECK(p1.eval(-2.0) == doctest::Approx(below).epsilon(1e-14));
    }
}

TEST_CASE("atom-free profile is the exponential of twice the antiderivative") {
    SignedMeasureSpec s;
    s.density_pieces.push_back({{-kInf, kInf}, Expr::exponential(0.4, -1.0)});
    CheckedMeasure m = validate_measure(s);
    DensityProfile p = build_profile(m, {-kInf, kInf, 0.0});
    for (double z : {-1.2, -0.1, 0.7, 2.0}) {
        double expected = std::exp(2 * (0.4 / -1.0) * (std::exp(-z) - 1.0));
        CHECK(p.eval(z) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(p.eval(z, Side::left) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("EXA13-style profile is |z|^alpha on the negative interval") {
    for (double alpha : {0.5, 1.5}) {
        CheckedMeasure m = exa13(alpha);
        DensityProfile p = build_profile(m, {-kInf, 0.0, -1.0});
        for (double z : {-2.0, -1.0, -0.5, -0.01}) {
            CHECK(p.eval(z) == doctest::Approx(std::pow(std::abs(z), alpha)).epsilon(1e-12));
        }
        CHECK(p.endpoint_limit(true).cls == LimitClass::zero);
        CHECK(p.endpoint_limit(false).cls == LimitClass::diverges);
    }
}

TEST_CASE("interleaved power family step values") {
    double alpha = 0.5;
    CheckedMeasure m = exa14_power(alpha);
    DensityProfile p = build_profile(m, {-kInf, 0.0, -1.0});
    for (long k = 1; k <= 6; k++) {
        double mid1 = -0.5 * (1.0 / (2 * k) + 1.0 / (2 * k + 1));
        double expect1 = std::pow((k + 1.0) / (k * k), alpha);
        CHECK(p.eval(mid1) == doctest::Approx(expect1).epsilon(1e-12));
        double mid2 = -0.5 * (1.0 / (2 * k + 1) + 1.0 / (2 * k + 2));
        double expect2 = std::pow(k + 1.0, -alpha);
        CHECK(p.eval(mid2) == doctest::Approx(expect2).epsilon(1e-12));
    }
    // deep into the truncated tail the slow path still answers
    double deep = -1e-7;
    CHECK(p.eval(deep) > 0);
    CHECK(p.endpoint_limit(true).cls == LimitClass::zero);
    CHECK(p.bv_certificate(true).cls == BvClass::bv);
}

TEST_CASE("oscillating family has no one-sided limit and unbounded variation") {
    SignedMeasureSpec s;
    s.atom_rules.push_back(make_cluster_harmonic());
    s.atoms.push_back({0.0, 1.0});
    CheckedMeasure m = validate_measure(s);
    DensityProfile p = build_profile(m, {-kInf, 0.0, -1.0});
    // rho = k+1 on (-1/2k, -1/(2k+1)), 1 on the complementary piece
    CHECK(p.eval(-0.5 * (1.0 / 4 + 1.0 / 5)) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(p.eval(-0.5 * (1.0 / 5 + 1.0 / 6)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.endpoint_limit(true).cls == LimitClass::oscillates);
    CHECK(p.bv_certificate(true).cls == BvClass::not_bv);
    // 1/rho <= 1 so the inverse half-integral is finite, rho itself diverges
    CHECK(p.half_integral(true, true).is_finite());
    CHECK(p.half_integral(true, false).is_infinite());
}

TEST_CASE("interior atoms of unit magnitude are rejected") {
    SignedMeasureSpec s;
    s.atoms.push_back({0.5, 1.0});
    CheckedMeasure m = validate_measure(s);
    CHECK_THROWS_AS(build_profile(m, {-kInf, kInf, 0.0}), AtomOnBoundary);
}

TEST_CASE("out-of-interval evaluation throws") {
    CheckedMeasure m = alpha_skew(0.6);
    DensityProfile p = build_profile(m, {-kInf, kInf, 0.0});
    CHECK_THROWS_AS(p.eval(kInf), OutOfInterval);
}

TEST_CASE("profile invariants on randomized measures") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 25; trial++) {
        SignedMeasureSpec s;
        int n_atoms = 1 + static_cast<int>(U(rng) * 20);
        double budget = 4.5;
        for (int i = 0; i < n_atoms; i++) {
            double w = (U(rng) * 2 - 1) * 0.9;
            if (std::abs(w) > budget) break;
            budget -= std::abs(w);
            s.atoms.push_back({(U(rng) * 2 - 1) * 3.0, w});
        }
        if (U(rng) < 0.5)
            s.density_pieces.push_back({{-2.0, -1.0}, Expr::constant(U(rng) + 0.1)});
        if (U(rng) < 0.5)
            s.density_pieces.push_back({{1.0, 2.5}, Expr::exponential(-(U(rng) + 0.1), 0.5)});
        CheckedMeasure m;
        try {
            m = validate_measure(s);
        } catch (const DuplicateAtomError&) {
            continue;
        }
        DensityProfile p = build_profile(m, {-kInf, kInf, 0.0});

        CHECK(p.eval(0.0) == doctest::Approx(1.0).epsilon(1e-12)); // rho(e) = 1

        double prev_plus = 0, prev_minus = 0;
        for (int j = 0; j < 60; j++) {
            double z = -4.0 + 8.0 * j / 59.0;
            double r = p.eval(z);
            double rp = p.eval_part(z, true);
            double rm = p.eval_part(z, false);
            CHECK(r == doctest::Approx(rp / rm).epsilon(1e-10)); // rho = rho+/rho-
            CHECK(r > 0);
            if (j > 0) {
                CHECK(rp >= prev_plus * (1 - 1e-12)); // monotone parts
                CHECK(rm >= prev_minus * (1 - 1e-12));
            }
            prev_plus = rp;
            prev_minus = rm;
        }
        for (const Atom& atom : p.interior_atoms()) {
            double r = p.eval(atom.pos);
            double l = p.eval(atom.pos, Side::left);
            CHECK((r - l) / (r + l) == doctest::Approx(atom.weight).epsilon(1e-10));
        }
    }
}

TEST_CASE("integral stats") {
    SUBCASE("flat unit profile on a bounded interval: A = B = length, V = 2") {
        SignedMeasureSpec s;
        CheckedMeasure m = validate_measure(s);
        DensityProfile p = build_profile(m, {1.0 / 3, 2.0 / 3, 0.5});
        IntervalStats st = p.integral_stats();
        CHECK(st.A.value() == doctest::Approx(1.0 / 3).epsilon(1e-12));
        CHECK(st.B.value() == doctest::Approx(1.0 / 3).epsilon(1e-12));
        CHECK(st.V.value() == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("|z|^alpha on (-1, 0): closed forms against an independent oracle") {
        // emulate the profile by a density c|z|^-1 with c = -alpha/2 on (-1,0)
        double alpha = 0.5;
        SignedMeasureSpec s;
        s.density_pieces.push_back({{-1.0, 0.0}, Expr::power_law(-alpha / 2, 0.0, -1.0)});
        s.atoms.push_back({0.0, 1.0});
        CheckedMeasure m = validate_measure(s);
        IntervalDecomposition d = locally_finite_decomposition(m);
        REQUIRE(d.intervals.size() >= 2);
        // interval (-1 ... ), the decomposition splits only at 0; use (-inf,0)
        DensityProfile p = build_profile(m, {-kInf, 0.0, -1.0});
        // right-half integral of rho over (-1,0) is 1/(alpha+1) + tail on (-inf,-1)
        ExtendedReal Ar = p.half_integral(true, false);
        REQUIRE(Ar.is_finite());
        CHECK(Ar.value() == doctest::Approx(1.0 / (alpha + 1)).epsilon(1e-9));
        ExtendedReal Br = p.half_integral(true, true);
        REQUIRE(Br.is_finite());
        CHECK(Br.value() == doctest::Approx(1.0 / (1 - alpha)).epsilon(1e-9));
        // independent Simpson oracle on a compact away from the singularity
        double oracle = simpson_oracle(
            [&](double z) { return std::pow(std::abs(z), -alpha); }, -0.9, -0.1, 20000);
        CHECK(p.integral_inside(-0.9, -0.1, true) == doctest::Approx(oracle).epsilon(1e-9));
        // both |z|^alpha and |z|^-alpha are non-integrable toward -inf
        CHECK(p.half_integral(false, true).is_infinite());
        CHECK(p.half_integral(false, false).is_infinite());
    }
}
