#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "skew/structure.hpp"

using namespace skew;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

CheckedMeasure alpha_skew(double alpha) {
    SignedMeasureSpec s;
    s.atoms.push_back({0.0, 2 * alpha - 1});
    return validate_measure(s);
}

// density -(alpha/2)|z|^-1 on (-inf,0) plus a unit atom at 0; the sign of the
// density flips with alpha
CheckedMeasure one_sided_power(double alpha) {
    SignedMeasureSpec s;
    s.density_pieces.push_back({{-kInf, 0.0}, Expr::power_law(-alpha / 2, 0.0, -1.0)});
    s.atoms.push_back({0.0, 1.0});
    return validate_measure(s);
}

CheckedMeasure interleaved_harmonic() {
    SignedMeasureSpec s;
    s.atom_rules.push_back(make_cluster_harmonic());
    s.atoms.push_back({0.0, 1.0});
    return validate_measure(s);
}

CheckedMeasure interleaved_power(double alpha) {
    SignedMeasureSpec s;
    s.atom_rules.push_back(make_cluster_power(alpha));
    s.atoms.push_back({0.0, 1.0});
    return validate_measure(s);
}

// unit atoms at 0 and 1 shielded by one-sided power densities so that [0,1]
// becomes a doubly closed effective interval (real barriers at both ends when
// the exponents are >= 1)
CheckedMeasure two_barriers(double alpha, double gamma) {
    SignedMeasureSpec s;
    s.density_pieces.push_back({{-kInf, 0.0}, Expr::power_law(-alpha / 2, 0.0, -1.0)});
    s.density_pieces.push_back({{1.0, kInf}, Expr::power_law(gamma / 2, 1.0, -1.0)});
    s.atoms.push_back({0.0, 1.0});
    s.atoms.push_back({1.0, -1.0});
    return validate_measure(s);
}

} // namespace

TEST_CASE("barrier taxonomy on the one-sided power measure") {
    // alpha = -1 -> nonsensical, 0.5 -> pseudo, 1.5 -> real
    StructureEngine e1(one_sided_power(-1.0));
    CHECK(e1.classify_barrier(0.0).label == BarrierLabel::nonsensical);
    StructureEngine e2(one_sided_power(0.5));
    CHECK(e2.classify_barrier(0.0).label == BarrierLabel::pseudo);
    StructureEngine e3(one_sided_power(1.5));
    CHECK(e3.classify_barrier(0.0).label == BarrierLabel::real);
    CHECK(e3.classify_barrier(0.0).confidence == Confidence::certified);
    // boundary case alpha = 1 is real (integral of 1/|z| diverges)
    StructureEngine e4(one_sided_power(1.0));
    CHECK(e4.classify_barrier(0.0).label == BarrierLabel::real);

    CHECK_THROWS_AS(e2.classify_barrier(0.5), NotABarrier);
}

TEST_CASE("barrier taxonomy on the interleaved families") {
    StructureEngine osc(interleaved_harmonic());
    CHECK(osc.classify_barrier(0.0).label == BarrierLabel::nonsensical);

    StructureEngine real1(interleaved_power(1.0));
    CHECK(real1.classify_barrier(0.0).label == BarrierLabel::real);

    StructureEngine pseudo05(interleaved_power(0.5));
    CHECK(pseudo05.classify_barrier(0.0).label == BarrierLabel::pseudo);
}

TEST_CASE("a bare unit atom is a nonsensical barrier") {
    SignedMeasureSpec s;
    s.atoms.push_back({0.0, 1.0});
    StructureEngine eng(validate_measure(s));
    CHECK(eng.classify_barrier(0.0).label == BarrierLabel::nonsensical);
}

TEST_CASE("existence verdicts") {
    SUBCASE("sub-unit atom: exists, unique, irreducible") {
        StructureEngine eng(alpha_skew(0.75));
        ExistenceReport rep = eng.check_existence();
        CHECK(rep.exists.is_yes());
        CHECK(rep.unique.is_yes());
        CHECK(rep.irreducible_possible.is_yes());
        CHECK(rep.confidence == Confidence::certified);
    }
    SUBCASE("bare unit atom: the endpoint condition fails") {
        SignedMeasureSpec s;
        s.atoms.push_back({0.0, 1.0});
        StructureEngine eng(validate_measure(s));
        ExistenceReport rep = eng.check_existence();
        CHECK(rep.barrier_endpoints.verdict.is_no());
        CHECK(rep.exists.is_no());
    }
    SUBCASE("pseudo barrier: exists but not unique") {
        StructureEngine eng(one_sided_power(0.5));
        ExistenceReport rep = eng.check_existence();
        CHECK(rep.exists.is_yes());
        CHECK(rep.unique.is_no());
        CHECK(rep.irreducible_possible.is_yes());
    }
    SUBCASE("oscillating inner profile: no existence") {
        StructureEngine eng(interleaved_harmonic());
        ExistenceReport rep = eng.check_existence();
        CHECK(rep.exists.is_no());
    }
    SUBCASE("real barriers at 0 and 1: exists and unique") {
        StructureEngine eng(two_barriers(1.5, 1.5));
        ExistenceReport rep = eng.check_existence();
        CHECK(rep.exists.is_yes());
        CHECK(rep.unique.is_yes());
        CHECK(rep.irreducible_possible.is_no());
    }
    SUBCASE("sub-unit atom at a removed point breaks the support condition") {
        SignedMeasureSpec s;
        s.density_pieces.push_back({{-kInf, 0.0}, Expr::power_law(-0.25, 0.0, -1.0)});
        s.atoms.push_back({0.0, 0.5});
        StructureEngine eng(validate_measure(s));
        ExistenceReport rep = eng.check_existence();
        CHECK(rep.no_mass_outside.verdict.is_no());
        CHECK(rep.exists.is_no());
    }
}

TEST_CASE("scale connectability") {
    StructureEngine eng(one_sided_power(0.5));
    REQUIRE(eng.interval_count() == 2);
    // int_{-1}^{0} |z|^{-1/2} dz = 2 and the flat side contributes 1
    CHECK(eng.stats(0).Br.value() == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(eng.stats(1).Bl.value() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eng.adjacent_connectable(0) == Connectable::yes);

    StructureEngine real_eng(one_sided_power(1.5));
    CHECK(real_eng.adjacent_connectable(0) == Connectable::no);

    // the free-function decision rule with an infinite between-B
    IntervalStats a, b, mid;
    a.Br = ExtendedReal::finite(1);
    b.Bl = ExtendedReal::finite(1);
    a.Bl = b.Br = a.A = b.A = a.B = b.B = a.V = b.V = ExtendedReal::finite(1);
    mid.A = ExtendedReal::finite(1);
    mid.V = ExtendedReal::finite(2);
    mid.B = ExtendedReal::infinite();
    CHECK(decide_scale_connectable(a, b, {mid}, true) == Connectable::no);
    mid.B = ExtendedReal::finite(0.5);
    CHECK(decide_scale_connectable(a, b, {mid}, true) == Connectable::yes);
    CHECK(decide_scale_connectable(a, b, {}, false) == Connectable::no);
}

TEST_CASE("constructed constants satisfy the admissibility series") {
    StructureEngine eng(two_barriers(1.5, 1.5));
    for (ConstantsTarget target : {ConstantsTarget::any_valid, ConstantsTarget::maximally_glued}) {
        std::vector<double> c = eng.construct_constants(target);
        REQUIRE(c.size() == eng.interval_count());
        double sum_cA = 0, sum_cV = 0;
        for (size_t i = 0; i < c.size(); i++) {
            CHECK(c[i] > 0);
            const IntervalStats& st = eng.stats(i);
            const GInterval& iv = eng.decomposition().intervals[i];
            if (std::isfinite(iv.lo) && std::isfinite(iv.hi)) {
                sum_cA += c[i] * st.A.value();
                sum_cV += c[i] * st.V.value();
            }
        }
        CHECK(std::isfinite(sum_cA));
        CHECK(std::isfinite(sum_cV));
    }

    SignedMeasureSpec bad;
    bad.atoms.push_back({0.0, 1.0});
    StructureEngine none(validate_measure(bad));
    CHECK_THROWS_AS(none.construct_constants(ConstantsTarget::any_valid), ConditionsNotMet);
}

TEST_CASE("gluing effective intervals") {
    SUBCASE("pseudo barrier glues into one open line") {
        StructureEngine eng(one_sided_power(0.5));
        SkewDensity rho = eng.skew_density(std::vector<double>{1.0, 1.0});
        EffectiveIntervalSet es = glue_effective_intervals(rho);
        REQUIRE(es.intervals.size() == 1);
        CHECK(es.intervals[0].lo == -kInf);
        CHECK(es.intervals[0].hi == kInf);
        CHECK_FALSE(es.intervals[0].closed_lo);
        CHECK_FALSE(es.intervals[0].closed_hi);
        CHECK(es.intervals[0].image_lo == -kInf);
        CHECK(es.intervals[0].image_hi == kInf);
    }
    SUBCASE("real barriers give a doubly closed middle interval") {
        StructureEngine eng(two_barriers(1.5, 1.5));
        SkewDensity rho = eng.skew_density(ConstantsTarget::any_valid);
        EffectiveIntervalSet es = glue_effective_intervals(rho);
        REQUIRE(es.intervals.size() == 3);
        CHECK(es.intervals[1].lo == 0.0);
        CHECK(es.intervals[1].hi == 1.0);
        CHECK(es.intervals[1].closed_lo);
        CHECK(es.intervals[1].closed_hi);
        CHECK_FALSE(es.intervals[0].closed_hi); // (-inf, 0): 1/rho not integrable at 0-
        CHECK_FALSE(es.intervals[2].closed_lo);
    }
}

TEST_CASE("scale function matches the closed form for the glued power case") {
    StructureEngine eng(one_sided_power(0.5));
    SkewDensity rho = eng.skew_density(std::vector<double>{1.0, 1.0});
    EffectiveIntervalSet es = glue_effective_intervals(rho);
    REQUIRE(es.intervals.size() == 1);
    ScaleFunction s(rho, es.intervals[0]);
    CHECK(s.eval(0.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.eval(2.0) == doctest::Approx(2.0).epsilon(1e-9));
    // s(x) = -2 |x|^{1/2} below 0 for the |z|^{1/2} profile
    CHECK(s.eval(-1.0) == doctest::Approx(-2.0).epsilon(1e-8));
    CHECK(s.eval(-0.25) == doctest::Approx(-1.0).epsilon(1e-8));
    for (double x : {-1.5, -0.3, 0.4, 3.0}) {
        CHECK(s.inverse(s.eval(x)) == doctest::Approx(x).epsilon(1e-9));
    }
}

TEST_CASE("conservativeness") {
    SUBCASE("flat tails are conservative") {
        StructureEngine eng(alpha_skew(0.75));
        SkewDensity rho = eng.skew_density(ConstantsTarget::any_valid);
        EffectiveIntervalSet es = glue_effective_intervals(rho);
        ConservativenessReport rep = check_conservative(es, rho);
        CHECK(rep.overall == Conservativeness::conservative);
        CHECK(rep.confidence == Confidence::certified);
    }
    SUBCASE("bounded effective intervals are conservative") {
        StructureEngine eng(two_barriers(1.5, 1.5));
        SkewDensity rho = eng.skew_density(ConstantsTarget::any_valid);
        EffectiveIntervalSet es = glue_effective_intervals(rho);
        // the middle interval is bounded; the outer tails have infinite scale
        ConservativenessReport rep = check_conservative(es, rho);
        CHECK(rep.overall == Conservativeness::conservative);
    }
    SUBCASE("cubic-exponential tail explodes, detected numerically") {
        // mu with density (3/2) z^2 on (1, inf) produces rho ~ exp(z^3) there
        SignedMeasureSpec s;
        s.density_pieces.push_back({{1.0, kInf}, Expr::power_law(1.5, 0.0, 2.0)});
        StructureEngine eng(validate_measure(s));
        REQUIRE(eng.interval_count() == 1);
        // the tail condition of the existence theorem fails on this measure
        ExistenceReport rep = eng.check_existence();
        CHECK(rep.nonexplosive_tails.verdict.is_no());
        CHECK(rep.exists.is_no());
    }
}

TEST_CASE("round trip: measure -> density -> measure") {
    SUBCASE("atoms come back from evaluated jumps") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        SignedMeasureSpec s;
        for (int i = 0; i < 12; i++) s.atoms.push_back({2.5 * U(rng), 0.85 * U(rng)});
        s.density_pieces.push_back({{-0.5, 0.75}, Expr::exponential(0.6, -0.4)});
        CheckedMeasure m = validate_measure(s);
        StructureEngine eng(m);
        SkewDensity rho = eng.skew_density(ConstantsTarget::any_valid);
        CheckedMeasure back = measure_density_roundtrip(rho);
        REQUIRE(back.atoms().size() == m.atoms().size());
        for (size_t i = 0; i < m.atoms().size(); i++) {
            CHECK(back.atoms()[i].pos == m.atoms()[i].pos);
            CHECK(back.atoms()[i].weight ==
                  doctest::Approx(m.atoms()[i].weight).epsilon(1e-10));
        }
        // continuous part: central log-difference recovers the density
        for (double z : {-0.3, 0.2, 0.6}) {
            double expect = 0.6 * std::exp(-0.4 * z);
            CHECK(recovered_density_at(rho, z) == doctest::Approx(expect).epsilon(1e-5));
        }
    }
    SUBCASE("alpha-skew jump ratio") {
        StructureEngine eng(alpha_skew(0.75));
        SkewDensity rho = eng.skew_density(std::vector<double>{1.0});
        CheckedMeasure back = measure_density_roundtrip(rho);
        REQUIRE(back.atoms().size() == 1);
        CHECK(back.atoms()[0].weight == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("unit atoms at removed points come back as +/-1") {
        StructureEngine eng(two_barriers(1.5, 1.5));
        SkewDensity rho = eng.skew_density(ConstantsTarget::any_valid);
        CheckedMeasure back = measure_density_roundtrip(rho);
        REQUIRE(back.xi_plus().size() == 1);
        REQUIRE(back.xi_minus().size() == 1);
        CHECK(back.xi_plus()[0] == 0.0);
        CHECK(back.xi_minus()[0] == 1.0);
    }
    SUBCASE("constant density recovers the zero measure") {
        SignedMeasureSpec s;
        StructureEngine eng(validate_measure(s));
        SkewDensity rho = eng.skew_density(std::vector<double>{2.0});
        CheckedMeasure back = measure_density_roundtrip(rho);
        CHECK(back.atoms().empty());
        CHECK(recovered_density_at(rho, 0.7) == doctest::Approx(0.0));
    }
}

TEST_CASE("density-side effective intervals") {
    SUBCASE("|x|^alpha with alpha in (0,1): no singular set") {
        RawDensity rho;
        rho.pieces.push_back({{-kInf, kInf}, Expr::power_law(1.0, 0.0, 0.5)});
        RawEffective re = density_to_effective_intervals(rho);
        CHECK(re.singular_points.empty());
        REQUIRE(re.set.intervals.size() == 1);
    }
    SUBCASE("|x|^1.5: singular point at 0, two open intervals") {
        RawDensity rho;
        rho.pieces.push_back({{-kInf, kInf}, Expr::power_law(1.0, 0.0, 1.5)});
        RawEffective re = density_to_effective_intervals(rho);
        REQUIRE(re.singular_points.size() == 1);
        CHECK(re.singular_points[0] == 0.0);
        REQUIRE(re.set.intervals.size() == 2);
        CHECK_FALSE(re.set.intervals[0].closed_hi);
        CHECK_FALSE(re.set.intervals[1].closed_lo);
    }
    SUBCASE("two-level oscillating step: irreducible") {
        RawDensity rho;
        rho.pieces.push_back({{-kInf, kInf}, Expr::constant(1.0)});
        rho.oscillating_factor = 2.0;
        RawEffective re = density_to_effective_intervals(rho);
        CHECK(re.singular_points.empty());
        CHECK(re.set.intervals.size() == 1);
    }
    SUBCASE("negative coefficient violates positivity") {
        RawDensity rho;
        rho.pieces.push_back({{0.0, 1.0}, Expr::constant(-1.0)});
        CHECK_THROWS_AS(density_to_effective_intervals(rho), AssumptionAViolated);
    }
}

TEST_CASE("semimartingale verdicts") {
    SUBCASE("|x|^alpha is a semimartingale with a power derivative") {
        RawDensity rho;
        rho.pieces.push_back({{-kInf, kInf}, Expr::power_law(1.0, 0.0, 0.5)});
        RawEffective re = density_to_effective_intervals(rho);
        SemimartingaleReport rep = semimartingale_verdict(rho, re);
        CHECK(rep.verdict == SemimartingaleVerdict::semimartingale);
        REQUIRE(rep.nu.ac_density.size() == 2);
        // alpha sgn(x) |x|^{alpha-1}: coefficient 0.5 above, -0.5 below
        CHECK(rep.nu.ac_density[0].expr.c == doctest::Approx(0.5));
        CHECK(rep.nu.ac_density[0].expr.p == doctest::Approx(-0.5));
    }
    SUBCASE("oscillating step is not a semimartingale") {
        RawDensity rho;
        rho.pieces.push_back({{-kInf, kInf}, Expr::constant(1.0)});
        rho.oscillating_factor = 2.0;
        RawEffective re = density_to_effective_intervals(rho);
        SemimartingaleReport rep = semimartingale_verdict(rho, re);
        CHECK(rep.verdict == SemimartingaleVerdict::not_semimartingale);
    }
    SUBCASE("summable jumps at dense points stay a semimartingale") {
        RawDensity rho;
        rho.pieces.push_back({{-kInf, kInf}, Expr::constant(1.0)});
        rho.jump_field = make_dense_rational(0.5);
        RawEffective re = density_to_effective_intervals(rho);
        SemimartingaleReport rep = semimartingale_verdict(rho, re);
        CHECK(rep.verdict == SemimartingaleVerdict::semimartingale);
        CHECK(rep.nu.jump_atoms.size() > 50);
    }
    SUBCASE("skew densities built from valid constants are semimartingales") {
        StructureEngine eng(one_sided_power(0.5));
        SkewDensity rho = eng.skew_density(std::vector<double>{1.0, 1.0});
        EffectiveIntervalSet es = glue_effective_intervals(rho);
        SemimartingaleReport rep = semimartingale_verdict(rho, es);
        CHECK(rep.verdict == SemimartingaleVerdict::semimartingale);
    }
}

TEST_CASE("scale invariance of verdicts and flags") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 10; trial++) {
        SignedMeasureSpec s;
        int n_atoms = 1 + static_cast<int>(U(rng) * 10);
        for (int i = 0; i < n_atoms; i++)
            s.atoms.push_back({(U(rng) * 2 - 1) * 2.0, (U(rng) * 2 - 1) * 0.9});
        CheckedMeasure m;
        try {
            m = validate_measure(s);
        } catch (const DuplicateAtomError&) {
            continue;
        }
        StructureEngine eng(m);
        std::vector<double> c = eng.construct_constants(ConstantsTarget::any_valid);
        SkewDensity rho = eng.skew_density(c);
        EffectiveIntervalSet base = glue_effective_intervals(rho);
        ConservativenessReport cons = check_conservative(base, rho);
        CheckedMeasure back = measure_density_roundtrip(rho);
        for (double lambda : {1e-3, 1e3}) {
            SkewDensity scaled = rho.with_constants_scaled(lambda);
            EffectiveIntervalSet es = glue_effective_intervals(scaled);
            REQUIRE(es.intervals.size() == base.intervals.size());
            for (size_t i = 0; i < es.intervals.size(); i++) {
                CHECK(es.intervals[i].closed_lo == base.intervals[i].closed_lo);
                CHECK(es.intervals[i].closed_hi == base.intervals[i].closed_hi);
                CHECK(es.intervals[i].lo == base.intervals[i].lo);
                CHECK(es.intervals[i].hi == base.intervals[i].hi);
            }
            ConservativenessReport cons2 = check_conservative(es, scaled);
            CHECK(cons2.overall == cons.overall);
            CheckedMeasure back2 = measure_density_roundtrip(scaled);
            REQUIRE(back2.atoms().size() == back.atoms().size());
            for (size_t i = 0; i < back.atoms().size(); i++)
                CHECK(back2.atoms()[i].weight ==
                      doctest::Approx(back.atoms()[i].weight).epsilon(1e-12));
        }
    }
}
