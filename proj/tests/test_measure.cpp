#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "skew/measure.hpp"

using namespace skew;

namespace {

SignedMeasureSpec alpha_skew(double alpha) {
    SignedMeasureSpec s;
    s.atoms.push_back({0.0, 2 * alpha - 1});
    return s;
}

SignedMeasureSpec exa13(double alpha) {
    // density -(alpha/2)|z|^-1 on (-inf,0) plus a unit atom at 0
    SignedMeasureSpec s;
    double inf = std::numeric_limits<double>::infinity();
    s.density_pieces.push_back({{-inf, 0.0}, Expr::power_law(-alpha / 2, 0.0, -1.0)});
    s.atoms.push_back({0.0, 1.0});
    return s;
}

} // namespace

TEST_CASE("validate_measure enforces the unit-magnitude bound") {
    CHECK_NOTHROW(validate_measure(alpha_skew(0.75)));

    CheckedMeasure sub = validate_measure(alpha_skew(0.75)); // weight 0.5
    CHECK(sub.xi_plus().empty());
    CHECK(sub.xi_minus().empty());

    SignedMeasureSpec unit;
    unit.atoms.push_back({0.0, 1.0});
    CheckedMeasure m = validate_measure(unit);
    REQUIRE(m.xi_plus().size() == 1);
    CHECK(m.xi_plus()[0] == 0.0);

    SignedMeasureSpec bad;
    bad.atoms.push_back({0.0, 1.2});
    CHECK_THROWS_AS(validate_measure(bad), AtomMagnitudeError);

    SignedMeasureSpec dup;
    dup.atoms.push_back({1.0, 0.3});
    dup.atoms.push_back({1.0, 0.4});
    CHECK_THROWS_AS(validate_measure(dup), DuplicateAtomError);
}

TEST_CASE("opposite-signed density pieces must not overlap") {
    SignedMeasureSpec s;
    s.density_pieces.push_back({{0.0, 2.0}, Expr::constant(1.0)});
    s.density_pieces.push_back({{1.0, 3.0}, Expr::constant(-1.0)});
    CHECK_THROWS_AS(validate_measure(s), Error);

    SignedMeasureSpec ok;
    ok.density_pieces.push_back({{0.0, 1.0}, Expr::constant(1.0)});
    ok.density_pieces.push_back({{1.0, 3.0}, Expr::constant(-1.0)});
    CHECK_NOTHROW(validate_measure(ok));
}

TEST_CASE("atom_at") {
    CheckedMeasure m = validate_measure(alpha_skew(0.75));
    CHECK(m.atom_at(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.atom_at(1.0) == 0.0);
}

TEST_CASE("mass_on_interval: single atom and certified divergence") {
    CheckedMeasure m = validate_measure(alpha_skew(0.2));
    ExtendedReal t = mass_on_interval(m, -1, 1, MassKind::total);
    REQUIRE(t.is_finite());
    CHECK(t.value() == doctest::Approx(std::abs(2 * 0.2 - 1)));

    CheckedMeasure e13 = validate_measure(exa13(0.5));
    ExtendedReal d = mass_on_interval(e13, -1, 0, MassKind::total);
    CHECK(d.is_infinite());
    CHECK(d.confidence() == Confidence::certified);
    // away from the singular point the mass is finite: -(1/4)ln(1/2)
    ExtendedReal f = mass_on_interval(e13, -1, -0.5, MassKind::total);
    REQUIRE(f.is_finite());
    CHECK(f.value() == doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-12));

    SignedMeasureSpec cl;
    cl.atom_rules.push_back(make_cluster_harmonic());
    CheckedMeasure mc = validate_measure(cl);
    CHECK(mass_on_interval(mc, -1, 0, MassKind::plus).is_infinite());
    CHECK(mass_on_interval(mc, -1, 0, MassKind::minus).is_infinite());
    // finitely many atoms away from the accumulation point
    ExtendedReal part = mass_on_interval(mc, -1, -0.3, MassKind::plus);
    REQUIRE(part.is_finite());
    CHECK(part.value() == doctest::Approx(1.0 / 3.0)); // only -1/2 with w=1/3
}

TEST_CASE("mass additivity over adjacent half-open intervals") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    SignedMeasureSpec s;
    for (int i = 0; i < 25; i++) s.atoms.push_back({U(rng), 0.9 * (U(rng) / 2)});
    s.density_pieces.push_back({{-1.5, 0.25}, Expr::exponential(0.7, 0.3)});
    s.density_pieces.push_back({{0.25, 1.75}, Expr::constant(-0.4)});
    CheckedMeasure m = validate_measure(s);
    for (int trial = 0; trial < 50; trial++) {
        double a = U(rng), b = U(rng), c = U(rng);
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        for (MassKind k : {MassKind::total, MassKind::plus, MassKind::minus}) {
            double whole = mass_on_interval(m, a, c, k).value();
            double parts = mass_on_interval(m, a, b, k).value() +
                           mass_on_interval(m, b, c, k).value();
            CHECK(whole == doctest::Approx(parts).epsilon(1e-10));
        }
    }
}

TEST_CASE("locally_finite_decomposition") {
    SUBCASE("alpha-skew: G = R") {
        CheckedMeasure m = validate_measure(alpha_skew(0.3));
        IntervalDecomposition d = locally_finite_decomposition(m);
        REQUIRE(d.intervals.size() == 1);
        CHECK(std::isinf(d.intervals[0].lo));
        CHECK(std::isinf(d.intervals[0].hi));
        CHECK(d.intervals[0].ref == 0.0);
    }
    SUBCASE("non-integrable density splits at its center") {
        CheckedMeasure m = validate_measure(exa13(0.5));
        IntervalDecomposition d = locally_finite_decomposition(m);
        REQUIRE(d.intervals.size() == 2);
        CHECK(d.intervals[0].hi == 0.0);
        CHECK(d.intervals[0].ref == -1.0);
        CHECK(d.intervals[1].lo == 0.0);
        CHECK(d.intervals[1].ref == 1.0);
    }
    SUBCASE("divergent atom family splits at its accumulation point") {
        SignedMeasureSpec s;
        s.atom_rules.push_back(make_cluster_power(0.5));
        s.atoms.push_back({0.0, 1.0});
        CheckedMeasure m = validate_measure(s);
        IntervalDecomposition d = locally_finite_decomposition(m);
        REQUIRE(d.intervals.size() == 2);
        CHECK(d.intervals[0].hi == 0.0);
        CHECK(d.intervals[1].lo == 0.0);
    }
    SUBCASE("declared infinite region removes its closure") {
        SignedMeasureSpec s;
        s.declared_infinite_regions.push_back({2.0, 3.0});
        CheckedMeasure m = validate_measure(s);
        IntervalDecomposition d = locally_finite_decomposition(m);
        REQUIRE(d.intervals.size() == 2);
        CHECK(d.intervals[0].hi == 2.0);
        CHECK(d.intervals[1].lo == 3.0);
        CHECK(d.intervals[1].ref == 4.0);
    }
    SUBCASE("zero weights give a single interval") {
        SignedMeasureSpec s;
        for (double p : {-1.0, 0.0, 2.5}) s.atoms.push_back({p, 0.0});
        CheckedMeasure m = validate_measure(s);
        CHECK(locally_finite_decomposition(m).intervals.size() == 1);
    }
}

TEST_CASE("G membership agrees with the definition on sampled points") {
    CheckedMeasure m = validate_measure(exa13(1.5));
    IntervalDecomposition d = locally_finite_decomposition(m);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (int i = 0; i < 40; i++) {
        double z = U(rng);
        bool in_G = false;
        for (const auto& iv : d.intervals)
            if (z > iv.lo && z < iv.hi) in_G = true;
        ExtendedReal local = mass_on_interval(m, z - 1e-3, z + 1e-3);
        CHECK(in_G == local.is_finite());
    }
}

TEST_CASE("tail certificate consistency is checked") {
    SignedMeasureSpec s;
    s.atom_rules.push_back(make_dense_rational(0.5));
    CHECK_NOTHROW(validate_measure(s)); // summable and declared summable
}
