#include "skew/structure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "skew/errors.hpp"
#include "skew/quadrature.hpp"

namespace skew {

namespace {
const double kInf = std::numeric_limits<double>::infinity();

Verdict finite_as_verdict(const ExtendedReal& x) {
    if (x.is_finite()) return Verdict::yes(x.confidence());
    if (x.is_infinite()) return Verdict::no(x.confidence());
    return Verdict::unknown();
}

struct FellerProbe {
    enum class Result { diverges, converges, unknown };
    Result result = Result::unknown;
    double value = 0; // converged truncation value
};

/// Numeric probe of int (1/rho)(x) [ m0 + int rho dy ] dx toward an infinite
/// end, in log space. The inner integral concentrates near y = x for steep
/// profiles, so it is sliced dyadically from the x-end before quadrature.
/// Truncations expand until the value is stable to 3 digits or blows past 1e12.
FellerProbe feller_tail_probe(const std::function<double(double)>& logr, double x0,
                              bool right, double m0) {
    auto inner_mass = [&](double x) {
        double lx = logr(x);
        double w = std::abs(x - x0);
        double total = m0 * std::exp(-lx);
        double outer_edge = w * 0.5;
        // [x0, x -/+ w/2] first, then dyadic slices toward x
        auto seg = [&](double a, double b) {
            if (!(a < b)) return 0.0;
            auto f = [&](double y) { return std::exp(logr(y) - lx); };
            return integrate(f, a, b, 1e-12, 1e-9).value;
        };
        if (right) total += seg(x0, x - outer_edge);
        else total += seg(x + outer_edge, x0);
        double d = outer_edge;
        for (int k = 0; k < 48 && d > 0; k++) {
            double dn = d * 0.5;
            if (right) total += seg(x - d, x - dn);
            else total += seg(x + dn, x + d);
            d = dn;
            if (d < 1e-14 * w) {
                total += d * 1.0; // final sliver, integrand ~ 1
                break;
            }
        }
        return total;
    };
    auto F = [&](double X) {
        return right ? integrate(inner_mass, x0, X, 1e-10, 1e-7).value
                     : integrate(inner_mass, X, x0, 1e-10, 1e-7).value;
    };
    double X = std::abs(x0) + 2, prev = -1;
    FellerProbe out;
    for (int it = 0; it < 26; it++) {
        double cur = F(right ? X : -X);
        if (cur > 1e12) {
            out.result = FellerProbe::Result::diverges;
            return out;
        }
        if (it > 1 && std::abs(cur - prev) < 5e-4 * std::abs(cur)) {
            out.result = FellerProbe::Result::converges;
            out.value = cur;
            return out;
        }
        prev = cur;
        X *= 4.0;
    }
    return out;
}
} // namespace

const char* to_string(BarrierLabel label) {
    switch (label) {
    case BarrierLabel::real: return "real";
    case BarrierLabel::pseudo: return "pseudo";
    case BarrierLabel::nonsensical: return "nonsensical";
    default: return "undecided";
    }
}

// ---------------------------------------------------------------------------
// StructureEngine
// ---------------------------------------------------------------------------

StructureEngine::StructureEngine(const CheckedMeasure& m, double eps_prod)
    : measure_(m), eps_prod_(eps_prod) {
    for (const auto& reg : m.declared_infinite_regions()) {
        if (!std::isfinite(reg.lo) || !std::isfinite(reg.hi))
            throw Error("declared infinite regions must be bounded");
    }
    decomp_ = locally_finite_decomposition(m);
    profiles_.resize(decomp_.intervals.size());
    stats_.resize(decomp_.intervals.size());
}

const DensityProfile& StructureEngine::profile(size_t n) const {
    if (!profiles_[n])
        profiles_[n] = std::make_shared<DensityProfile>(measure_, decomp_.intervals[n], eps_prod_);
    return *profiles_[n];
}

const IntervalStats& StructureEngine::stats(size_t n) const {
    if (!stats_[n]) stats_[n] = profile(n).integral_stats();
    return *stats_[n];
}

HalfEvidence StructureEngine::side_evidence(double lo, double hi, bool toward_hi) const {
    GInterval g{lo, hi, choose_reference_point(lo, hi)};
    DensityProfile p(measure_, g, eps_prod_);
    HalfEvidence ev;
    ev.mass_total = p.half_mass(toward_hi, MassKind::total);
    ev.mass_plus = p.half_mass(toward_hi, MassKind::plus);
    ev.mass_minus = p.half_mass(toward_hi, MassKind::minus);
    ev.int_rho = p.half_integral(toward_hi, false);
    ev.int_inv_rho = p.half_integral(toward_hi, true);
    ev.bv = p.bv_certificate(toward_hi).cls;
    ev.limit = p.endpoint_limit(toward_hi).cls;
    return ev;
}

BarrierEntry StructureEngine::classify_barrier(double z) const {
    double w = measure_.atom_at(z);
    if (std::abs(w) != 1.0) throw NotABarrier("point carries no unit atom");

    BarrierEntry entry;
    entry.z = z;
    entry.right_barrier = (w > 0);

    // nearest structural boundaries strictly on each side of z
    double below = -kInf, above = kInf;
    for (const auto& iv : decomp_.intervals) {
        if (iv.lo < z) below = std::max(below, iv.lo);
        if (iv.hi < z) below = std::max(below, iv.hi);
        if (iv.lo > z) above = std::min(above, iv.lo);
        if (iv.hi > z) above = std::min(above, iv.hi);
    }

    HalfEvidence right_side = side_evidence(z, above, /*toward_hi=*/false);
    HalfEvidence left_side = side_evidence(below, z, /*toward_hi=*/true);
    entry.outer = entry.right_barrier ? right_side : left_side;
    entry.inner = entry.right_barrier ? left_side : right_side;

    Confidence conf = entry.outer.mass_total.confidence();

    if (entry.outer.mass_total.is_infinite()) {
        entry.label = BarrierLabel::nonsensical;
        entry.confidence = conf;
        return entry;
    }
    if (entry.outer.mass_total.is_unknown()) {
        entry.label = BarrierLabel::undecided;
        entry.confidence = Confidence::numeric;
        return entry;
    }

    const HalfEvidence& in = entry.inner;
    conf = weaker(conf, in.int_inv_rho.confidence());
    if (in.int_inv_rho.is_unknown()) {
        entry.label = BarrierLabel::undecided;
    } else if (in.int_inv_rho.is_infinite()) {
        // impassable in natural scale: real when the profile stays integrable
        conf = weaker(conf, in.int_rho.confidence());
        if (in.int_rho.is_finite()) entry.label = BarrierLabel::real;
        else if (in.int_rho.is_infinite()) entry.label = BarrierLabel::nonsensical;
        else entry.label = BarrierLabel::undecided;
    } else {
        // reachable: pseudo iff the profile extends by zero with bounded variation
        if (in.bv == BvClass::bv && in.limit == LimitClass::zero)
            entry.label = BarrierLabel::pseudo;
        else if (in.bv == BvClass::unknown || in.limit == LimitClass::undecided)
            entry.label = BarrierLabel::undecided;
        else
            entry.label = BarrierLabel::nonsensical;
    }
    entry.confidence = conf;
    return entry;
}

BarrierClassification StructureEngine::classify_all_barriers() const {
    BarrierClassification out;
    std::vector<double> xs;
    for (double z : measure_.xi_plus()) xs.push_back(z);
    for (double z : measure_.xi_minus()) xs.push_back(z);
    std::sort(xs.begin(), xs.end());
    for (double z : xs) out.entries.push_back(classify_barrier(z));
    return out;
}

Connectable decide_scale_connectable(const IntervalStats& si, const IntervalStats& sj,
                                     const std::vector<IntervalStats>& between,
                                     bool gap_measure_zero) {
    if (!gap_measure_zero) return Connectable::no;
    if (si.Br.is_infinite() || sj.Bl.is_infinite()) return Connectable::no;
    if (si.Br.is_unknown() || sj.Bl.is_unknown()) return Connectable::unknown;
    for (const IntervalStats& st : between) {
        // sum sqrt((A+V) B) must converge: the witness c = sqrt(B/(A+V))
        // satisfies the three admissibility series, and AM-GM shows no other
        // choice can do better
        ExtendedReal AV = st.A + st.V;
        if (AV.is_infinite() || st.B.is_infinite()) return Connectable::no;
        if (AV.is_unknown() || st.B.is_unknown()) return Connectable::unknown;
    }
    // finite collections of finite terms always converge
    return Connectable::yes;
}

Connectable StructureEngine::adjacent_connectable(size_t i) const {
    if (i + 1 >= decomp_.intervals.size()) throw Error("no adjacent interval");
    const GInterval& a = decomp_.intervals[i];
    const GInterval& b = decomp_.intervals[i + 1];
    bool gap_null = a.hi == b.lo; // a single removed point; blocks have width
    return decide_scale_connectable(stats(i), stats(i + 1), {}, gap_null);
}

ExistenceReport StructureEngine::check_existence() const {
    if (existence_cache_) return *existence_cache_;
    ExistenceReport rep;

    const CantorRule* cr = measure_.cantor();
    bool pure_cantor = cr && measure_.atoms().empty() && measure_.density_pieces().empty() &&
                       measure_.rules().size() == 1 &&
                       measure_.declared_infinite_regions().empty();

    if (pure_cantor) {
        rep.barrier_endpoints = {Verdict::yes(), "all finite gap endpoints carry unit atoms"};
        rep.no_mass_outside = {Verdict::yes(), "measure supported on interval endpoints"};
        rep.integrable_ends = {Verdict::yes(), "profiles are constant on every interval"};
        rep.bv_reachable_ends = {Verdict::yes(), "constant profiles extend trivially"};
        rep.nonexplosive_tails = {Verdict::yes(), "flat unbounded tails"};
        rep.exists = Verdict::yes();
        auto [unique, irr] = check_uniqueness_irreducibility(*this, rep);
        rep.unique = unique;
        rep.irreducible_possible = irr;
        rep.confidence = weaker(unique.confidence, irr.confidence);
        existence_cache_ = rep;
        return rep;
    }

    if (cr && decomp_.intervals.size() > 4200)
        throw Error("Cantor measures mixed with other structure are supported to depth 12");

    const size_t n = decomp_.intervals.size();
    Confidence conf = Confidence::certified;

    // unit atoms strictly inside an interval of G leave the profile undefined
    // there and break the endpoint condition outright
    std::vector<bool> interior_unit(n, false);
    bool any_interior_unit = false;
    {
        std::vector<double> xs;
        for (double z : measure_.xi_plus()) xs.push_back(z);
        for (double z : measure_.xi_minus()) xs.push_back(z);
        for (double z : xs) {
            for (size_t i = 0; i < n; i++) {
                const GInterval& iv = decomp_.intervals[i];
                if (z > iv.lo && z < iv.hi) {
                    interior_unit[i] = true;
                    any_interior_unit = true;
                }
            }
        }
    }

    // (1) unit atoms sit exactly at the finite endpoints whose inner half
    // carries finite mass
    std::vector<double> need_plus, need_minus;
    Verdict c1 = Verdict::yes();
    for (size_t i = 0; i < n; i++) {
        if (interior_unit[i]) continue;
        const GInterval& iv = decomp_.intervals[i];
        if (std::isfinite(iv.lo)) {
            ExtendedReal hm = profile(i).half_mass(false, MassKind::total);
            conf = weaker(conf, hm.confidence());
            if (hm.is_finite()) need_plus.push_back(iv.lo);
            else if (hm.is_unknown()) c1 = c1 && Verdict::unknown();
        }
        if (std::isfinite(iv.hi)) {
            ExtendedReal hm = profile(i).half_mass(true, MassKind::total);
            conf = weaker(conf, hm.confidence());
            if (hm.is_finite()) need_minus.push_back(iv.hi);
            else if (hm.is_unknown()) c1 = c1 && Verdict::unknown();
        }
    }
    std::sort(need_plus.begin(), need_plus.end());
    std::sort(need_minus.begin(), need_minus.end());
    std::ostringstream note1;
    if (any_interior_unit) {
        c1 = Verdict::no();
        note1 << "a unit atom lies strictly inside an interval of G";
    } else if (need_plus != measure_.xi_plus() || need_minus != measure_.xi_minus()) {
        c1 = Verdict::no(conf);
        note1 << "unit atoms do not match the reachable finite endpoints";
    } else {
        note1 << "unit atoms match the reachable finite endpoints";
    }
    rep.barrier_endpoints = {c1, note1.str()};

    // (2) no mass on the removed set beyond the unit atoms
    Verdict c2 = Verdict::yes();
    std::ostringstream note2;
    if (!measure_.declared_infinite_regions().empty()) {
        c2 = Verdict::no();
        note2 << "a declared infinite region carries mass off the barrier set";
    } else {
        for (size_t i = 0; i + 1 < n; i++) {
            double p = decomp_.intervals[i].hi;
            if (!std::isfinite(p)) continue;
            double w = measure_.atom_at(p);
            if (w != 0.0 && std::abs(w) != 1.0) {
                c2 = Verdict::no();
                note2 << "sub-unit atom of weight " << w << " at the removed point " << p << "; ";
            }
        }
        if (c2.is_yes()) note2 << "removed points carry no stray mass";
    }
    rep.no_mass_outside = {c2, note2.str()};

    // (3) profile integrable toward every finite endpoint
    Verdict c3 = Verdict::yes();
    for (size_t i = 0; i < n; i++) {
        if (interior_unit[i]) continue;
        const GInterval& iv = decomp_.intervals[i];
        if (std::isfinite(iv.lo)) {
            ExtendedReal v = profile(i).half_integral(false, false);
            conf = weaker(conf, v.confidence());
            c3 = c3 && finite_as_verdict(v);
        }
        if (std::isfinite(iv.hi)) {
            ExtendedReal v = profile(i).half_integral(true, false);
            conf = weaker(conf, v.confidence());
            c3 = c3 && finite_as_verdict(v);
        }
    }
    rep.integrable_ends = {c3, c3.is_yes() ? "rho integrable at finite endpoints"
                                           : "rho fails to be integrable at some endpoint"};

    // (4) BV extension wherever the endpoint is reachable in natural scale
    Verdict c4 = Verdict::yes();
    for (size_t i = 0; i < n; i++) {
        if (interior_unit[i]) continue;
        const GInterval& iv = decomp_.intervals[i];
        for (int right = 0; right < 2; right++) {
            double end = right ? iv.hi : iv.lo;
            if (!std::isfinite(end)) continue;
            ExtendedReal binv = profile(i).half_integral(right, true);
            conf = weaker(conf, binv.confidence());
            if (binv.is_infinite()) continue; // endpoint unreachable
            if (binv.is_unknown()) {
                c4 = c4 && Verdict::unknown();
                continue;
            }
            BvCertificate bv = profile(i).bv_certificate(right);
            conf = weaker(conf, bv.confidence);
            if (bv.cls == BvClass::bv) continue;
            c4 = c4 && (bv.cls == BvClass::not_bv ? Verdict::no(bv.confidence)
                                                  : Verdict::unknown());
        }
    }
    rep.bv_reachable_ends = {c4, c4.is_yes() ? "profiles extend with bounded variation"
                                             : "a reachable endpoint lacks a BV extension"};

    // (5) Feller integrals diverge on the two unbounded tails
    Verdict c5 = Verdict::yes();
    std::ostringstream note5;
    for (int right = 0; right < 2; right++) {
        size_t idx = right ? n - 1 : 0;
        if (interior_unit[idx]) continue; // existence already failed
        const GInterval& iv = decomp_.intervals[idx];
        double end = right ? iv.hi : iv.lo;
        if (std::isfinite(end)) continue;
        ExtendedReal Bh = profile(idx).half_integral(right, true);
        ExtendedReal Ah = profile(idx).half_integral(right, false);
        conf = weaker(conf, weaker(Bh.confidence(), Ah.confidence()));
        if (Bh.is_infinite()) continue; // natural scale reaches infinity
        if (Bh.is_unknown() || Ah.is_unknown()) {
            c5 = c5 && Verdict::unknown();
            continue;
        }
        if (Ah.is_finite()) {
            c5 = c5 && Verdict::no();
            note5 << (right ? "+inf" : "-inf") << " tail has finite scale and speed; ";
            continue;
        }
        // finite scale, infinite speed: the Feller integral decides
        const DensityProfile& p = profile(idx);
        FellerProbe probe = feller_tail_probe([&](double x) { return p.log_eval(x); },
                                              iv.ref, right == 1, 0.0);
        conf = Confidence::numeric;
        if (probe.result == FellerProbe::Result::diverges) continue;
        if (probe.result == FellerProbe::Result::converges) {
            c5 = c5 && Verdict::no(Confidence::numeric);
            note5 << (right ? "+inf" : "-inf") << " Feller integral converges (~"
                  << probe.value << "); ";
        } else {
            c5 = c5 && Verdict::unknown();
        }
    }
    rep.nonexplosive_tails = {c5, note5.str().empty() ? "tails force infinite lifetime"
                                                      : note5.str()};

    rep.exists = c1 && c2 && c3 && c4 && c5;
    rep.confidence = conf;

    auto [unique, irr] = check_uniqueness_irreducibility(*this, rep);
    rep.unique = unique;
    rep.irreducible_possible = irr;
    existence_cache_ = rep;
    return rep;
}

std::pair<Verdict, Verdict> check_uniqueness_irreducibility(const StructureEngine& eng,
                                                            const ExistenceReport& rep) {
    if (!rep.exists.is_yes()) return {Verdict::unknown(), Verdict::unknown()};
    if (const CantorRule* cr = eng.measure().cantor()) {
        CantorVerdictReport cv = cantor_verdict(cr->spec());
        if (cv.verdict == CantorVerdict::unique)
            return {Verdict::yes(cv.confidence), Verdict::no(cv.confidence)};
        if (cv.verdict == CantorVerdict::infinitely_many_irreducible)
            return {Verdict::no(cv.confidence), Verdict::yes(cv.confidence)};
        return {Verdict::unknown(), Verdict::unknown()};
    }
    const size_t n = eng.interval_count();
    Verdict any_connectable = Verdict::no();
    Verdict all_connectable = Verdict::yes();
    for (size_t i = 0; i + 1 < n; i++) {
        Connectable c = eng.adjacent_connectable(i);
        // adjacency decides everything for finitely many intervals: a longer
        // connection restricts to each consecutive pair it spans
        if (c == Connectable::yes) {
            any_connectable = Verdict::yes();
        } else if (c == Connectable::no) {
            all_connectable = Verdict::no();
        } else {
            if (!any_connectable.is_yes()) any_connectable = Verdict::unknown();
            if (!all_connectable.is_no()) all_connectable = Verdict::unknown();
        }
    }
    Verdict unique = any_connectable.is_yes()  ? Verdict::no()
                     : any_connectable.is_no() ? Verdict::yes()
                                               : Verdict::unknown();
    return {unique, all_connectable};
}

std::vector<double> StructureEngine::construct_constants(ConstantsTarget target) const {
    ExistenceReport rep = check_existence();
    if (rep.exists.is_no())
        throw ConditionsNotMet("no admissible constants: existence conditions fail");

    const size_t n = decomp_.intervals.size();
    std::vector<double> c(n, 1.0);

    if (const CantorRule* cr = measure_.cantor()) {
        const CantorSpec& spec = cr->spec();
        bool glue = target == ConstantsTarget::maximally_glued &&
                    cantor_verdict(spec).verdict == CantorVerdict::infinitely_many_irreducible &&
                    spec.gap_model == GapModel::power_law;
        double beta = glue ? 0.5 * (2 * spec.alpha_base + 0.5) : 0.0;
        // map positions to generation levels via the sorted gap list
        std::vector<std::pair<double, int>> levels;
        for (const auto& g : cr->gaps()) levels.push_back({g.lo, g.level});
        std::sort(levels.begin(), levels.end());
        for (size_t i = 0; i < n; i++) {
            const GInterval& iv = decomp_.intervals[i];
            if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi)) continue;
            auto it = std::lower_bound(levels.begin(), levels.end(),
                                       std::make_pair(iv.lo, 0));
            int level = (it != levels.end() && it->first == iv.lo) ? it->second : 1;
            if (glue) {
                c[i] = std::pow(beta, level - 1);
            } else {
                // the published recipe with A_n = gap length
                double len = iv.hi - iv.lo;
                double idx = static_cast<double>(i + 1);
                c[i] = std::min(1.0 / (idx * idx * len), 1.0 / (idx * idx * 2.0));
            }
        }
        return c;
    }

    // phi_n = 1/(n^2 A_n) when A_n is finite (1 otherwise), same against V_n;
    // inside glued clusters the sqrt witness instead
    std::vector<bool> glued(n, false);
    if (target == ConstantsTarget::maximally_glued) {
        for (size_t i = 0; i + 1 < n; i++) {
            if (adjacent_connectable(i) == Connectable::yes) glued[i] = glued[i + 1] = true;
        }
    }
    for (size_t i = 0; i < n; i++) {
        const IntervalStats& st = stats(i);
        if (glued[i] && st.B.is_finite()) {
            ExtendedReal AV = st.A + st.V;
            if (AV.is_finite() && AV.value() > 0) {
                c[i] = std::sqrt(st.B.value() / AV.value());
                continue;
            }
        }
        double idx = static_cast<double>(i + 1);
        double phi = st.A.is_finite() && st.A.value() > 0 ? 1.0 / (idx * idx * st.A.value()) : 1.0;
        double vphi = st.V.is_finite() && st.V.value() > 0 ? 1.0 / (idx * idx * st.V.value()) : 1.0;
        c[i] = std::min(phi, vphi);
    }
    return c;
}

// ---------------------------------------------------------------------------
// SkewDensity
// ---------------------------------------------------------------------------

SkewDensity StructureEngine::skew_density(const std::vector<double>& constants) const {
    if (constants.size() != decomp_.intervals.size())
        throw Error("one constant per interval required");
    for (double v : constants)
        if (!(v > 0)) throw Error("constants must be positive");
    SkewDensity d;
    d.measure_ = measure_;
    d.decomp_ = decomp_;
    d.constants_ = constants;
    d.profiles_.resize(constants.size());
    d.stats_.resize(constants.size());
    for (size_t i = 0; i < constants.size(); i++) {
        d.profiles_[i] = std::make_shared<DensityProfile>(measure_, decomp_.intervals[i],
                                                          eps_prod_);
        d.stats_[i] = profile(i).integral_stats();
    }
    return d;
}

SkewDensity StructureEngine::skew_density(ConstantsTarget target) const {
    return skew_density(construct_constants(target));
}

std::optional<size_t> SkewDensity::interval_of(double z) const {
    const auto& ivs = decomp_.intervals;
    auto it = std::upper_bound(ivs.begin(), ivs.end(), z,
                               [](double v, const GInterval& g) { return v < g.lo; });
    if (it == ivs.begin()) return std::nullopt;
    size_t idx = static_cast<size_t>(it - ivs.begin()) - 1;
    if (z >= ivs[idx].lo && z <= ivs[idx].hi) return idx;
    return std::nullopt;
}

double SkewDensity::eval(double z, Side side) const {
    auto idx = interval_of(z);
    if (idx) {
        const GInterval& iv = decomp_.intervals[*idx];
        if (z > iv.lo && z < iv.hi) return constants_[*idx] * profiles_[*idx]->eval(z, side);
    }
    // boundary point: one-sided limits of the adjoining intervals
    double right_val = 0, left_val = 0;
    const auto& ivs = decomp_.intervals;
    for (size_t i = 0; i < ivs.size(); i++) {
        if (ivs[i].lo == z) {
            EndpointLimit lim = profiles_[i]->endpoint_limit(false);
            if (lim.cls == LimitClass::positive) right_val = constants_[i] * lim.value;
        }
        if (ivs[i].hi == z) {
            EndpointLimit lim = profiles_[i]->endpoint_limit(true);
            if (lim.cls == LimitClass::positive) left_val = constants_[i] * lim.value;
        }
    }
    if (side == Side::left) return left_val;
    // canonical version: rho(z) keeps the right limit only at right barriers
    return (measure_.atom_at(z) == 1.0) ? right_val : 0.0;
}

double SkewDensity::log_eval(double z) const {
    auto idx = interval_of(z);
    if (idx) {
        const GInterval& iv = decomp_.intervals[*idx];
        if (z > iv.lo && z < iv.hi)
            return std::log(constants_[*idx]) + profiles_[*idx]->log_eval(z);
    }
    double v = eval(z);
    return v > 0 ? std::log(v) : -kInf;
}

SkewDensity SkewDensity::with_constants_scaled(double lambda) const {
    SkewDensity d = *this;
    for (double& v : d.constants_) v *= lambda;
    return d;
}

// ---------------------------------------------------------------------------
// Effective intervals and scale
// ---------------------------------------------------------------------------

namespace {
ExtendedReal div_const(const ExtendedReal& x, double c) {
    if (x.is_finite()) return ExtendedReal::finite(x.value() / c, x.confidence());
    return x;
}
} // namespace

EffectiveIntervalSet glue_effective_intervals(const SkewDensity& rho) {
    EffectiveIntervalSet out;
    const auto& ivs = rho.decomposition().intervals;
    const size_t n = ivs.size();
    if (n == 0) return out;
    out.truncated = rho.decomposition().truncated;

    // adjacency under the concrete constants: facing half-integrals of 1/rho
    // finite and only a null point removed in between
    std::vector<bool> joined(n > 1 ? n - 1 : 0, false);
    for (size_t i = 0; i + 1 < n; i++) {
        if (ivs[i].hi != ivs[i + 1].lo) continue;
        joined[i] = rho.stats(i).Br.is_finite() && rho.stats(i + 1).Bl.is_finite();
    }

    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && joined[j]) j++;
        EffectiveInterval ef;
        ef.lo = ivs[i].lo;
        ef.hi = ivs[j].hi;
        for (size_t k = i; k <= j; k++) ef.members.push_back(k);
        ef.ref = choose_reference_point(ef.lo, ef.hi);

        // adaptedness: a finite endpoint joins iff the scale limit there is finite
        ef.closed_lo = std::isfinite(ef.lo) && rho.stats(i).Bl.is_finite();
        ef.closed_hi = std::isfinite(ef.hi) && rho.stats(j).Br.is_finite();

        // image interval: accumulate 1/rho across the members from the ref
        ExtendedReal left_total = ExtendedReal::finite(0.0);
        ExtendedReal right_total = ExtendedReal::finite(0.0);
        for (size_t k = i; k <= j; k++) {
            const GInterval& g = ivs[k];
            double c = rho.constants()[k];
            if (g.hi <= ef.ref) {
                left_total += div_const(rho.stats(k).B, c);
            } else if (g.lo >= ef.ref) {
                right_total += div_const(rho.stats(k).B, c);
            } else {
                ExtendedReal lp = rho.stats(k).Bl, rp = rho.stats(k).Br;
                if (ef.ref != g.ref) {
                    double mid = rho.profile(k).integral_inside(std::min(g.ref, ef.ref),
                                                                std::max(g.ref, ef.ref), true);
                    if (ef.ref > g.ref) {
                        lp = lp + ExtendedReal::finite(mid);
                        if (rp.is_finite())
                            rp = ExtendedReal::finite(rp.value() - mid, rp.confidence());
                    } else {
                        rp = rp + ExtendedReal::finite(mid);
                        if (lp.is_finite())
                            lp = ExtendedReal::finite(lp.value() - mid, lp.confidence());
                    }
                }
                left_total += div_const(lp, c);
                right_total += div_const(rp, c);
            }
        }
        ef.image_lo = left_total.is_finite() ? -left_total.value() : -kInf;
        ef.image_hi = right_total.is_finite() ? right_total.value() : kInf;

        out.intervals.push_back(std::move(ef));
        i = j + 1;
    }
    return out;
}

ScaleFunction::ScaleFunction(const SkewDensity& rho, const EffectiveInterval& iv)
    : rho_(&rho), iv_(iv) {
    img_lo_ = iv.image_lo;
    img_hi_ = iv.image_hi;
    std::vector<double> xs;
    for (size_t k : iv.members) {
        const GInterval& g = rho.decomposition().intervals[k];
        if (std::isfinite(g.lo)) xs.push_back(g.lo);
        xs.push_back(g.ref);
        if (std::isfinite(g.hi)) xs.push_back(g.hi);
    }
    xs.push_back(iv.ref);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    knots_x_ = xs;
    knots_s_.assign(xs.size(), 0.0);
    auto piece = [&](double a, double b) {
        double total = 0;
        for (size_t k : iv.members) {
            const GInterval& g = rho.decomposition().intervals[k];
            double lo = std::max(a, g.lo), hi = std::min(b, g.hi);
            if (lo < hi)
                total += rho.profile(k).integral_inside(lo, hi, true) / rho.constants()[k];
        }
        return total;
    };
    for (size_t t = 1; t < xs.size(); t++)
        knots_s_[t] = knots_s_[t - 1] + piece(xs[t - 1], xs[t]);
    double at_ref = 0;
    for (size_t t = 0; t < xs.size(); t++)
        if (xs[t] == iv.ref) at_ref = knots_s_[t];
    for (double& v : knots_s_) v -= at_ref;
}

double ScaleFunction::eval(double x) const {
    auto segment = [&](double a, double b) {
        double total = 0;
        for (size_t k : iv_.members) {
            const GInterval& g = rho_->decomposition().intervals[k];
            double lo = std::max(a, g.lo), hi = std::min(b, g.hi);
            if (lo < hi)
                total += rho_->profile(k).integral_inside(lo, hi, true) / rho_->constants()[k];
        }
        return total;
    };
    auto it = std::upper_bound(knots_x_.begin(), knots_x_.end(), x);
    if (it == knots_x_.begin()) return knots_s_.front() - segment(x, knots_x_.front());
    size_t idx = static_cast<size_t>(it - knots_x_.begin()) - 1;
    return knots_s_[idx] + segment(knots_x_[idx], x);
}

double ScaleFunction::inverse(double y) const {
    double lo = std::isfinite(iv_.lo) ? iv_.lo : std::min(iv_.ref, 0.0) - 2;
    double hi = std::isfinite(iv_.hi) ? iv_.hi : std::max(iv_.ref, 0.0) + 2;
    for (int it = 0; it < 200 && !std::isfinite(iv_.lo) && eval(lo) > y; it++)
        lo = lo * 2 - 1;
    for (int it = 0; it < 200 && !std::isfinite(iv_.hi) && eval(hi) < y; it++)
        hi = hi * 2 + 1;
    return invert_increasing([this](double x) { return eval(x); }, y, lo, hi, 1e-12);
}

// ---------------------------------------------------------------------------
// Conservativeness
// ---------------------------------------------------------------------------

ConservativenessReport check_conservative(const EffectiveIntervalSet& es,
                                          const SkewDensity& rho) {
    ConservativenessReport rep;
    rep.overall = Conservativeness::conservative;
    for (const EffectiveInterval& ef : es.intervals) {
        for (int right = 0; right < 2; right++) {
            double end = right ? ef.hi : ef.lo;
            if (std::isfinite(end)) continue; // bounded sides never explode
            size_t edge = right ? ef.members.back() : ef.members.front();
            ExtendedReal scale_half = right ? rho.stats(edge).Br : rho.stats(edge).Bl;
            if (scale_half.is_infinite()) continue; // natural scale reaches infinity
            ExtendedReal speed = ExtendedReal::finite(0.0);
            for (size_t k : ef.members) {
                ExtendedReal a = rho.stats(k).A;
                if (a.is_finite())
                    speed += ExtendedReal::finite(a.value() * rho.constants()[k], a.confidence());
                else
                    speed += a;
            }
            bool explode = false;
            Confidence conf = Confidence::certified;
            double feller = 0;
            if (scale_half.is_unknown() || speed.is_unknown()) {
                rep.overall = Conservativeness::unknown;
                rep.confidence = Confidence::numeric;
                continue;
            }
            if (speed.is_finite()) {
                explode = true; // scale and speed both finite at the open end
            } else {
                // finite scale, infinite speed: evaluate the double integral,
                // expanding the truncation until it stabilizes to 3 digits
                const DensityProfile& p = rho.profile(edge);
                double m0 = 0;
                for (size_t k : ef.members) {
                    if (k == edge) continue;
                    m0 += rho.stats(k).A.value() * rho.constants()[k];
                }
                double c_edge = rho.constants()[edge];
                FellerProbe probe =
                    feller_tail_probe([&](double x) { return p.log_eval(x); },
                                      rho.decomposition().intervals[edge].ref, right == 1,
                                      m0 / c_edge);
                conf = Confidence::numeric;
                explode = probe.result == FellerProbe::Result::converges;
                feller = probe.value;
                if (probe.result == FellerProbe::Result::unknown) {
                    rep.overall = Conservativeness::unknown;
                    rep.confidence = Confidence::numeric;
                    continue;
                }
            }
            rep.confidence = weaker(rep.confidence, conf);
            if (explode) {
                rep.overall = Conservativeness::explodes;
                if (right) {
                    rep.explodes_at_plus_inf = true;
                    rep.feller_integral_plus = feller;
                } else {
                    rep.explodes_at_minus_inf = true;
                    rep.feller_integral_minus = feller;
                }
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Round trip
// ---------------------------------------------------------------------------

CheckedMeasure measure_density_roundtrip(const SkewDensity& rho) {
    SignedMeasureSpec spec;
    const auto& ivs = rho.decomposition().intervals;
    for (size_t i = 0; i < ivs.size(); i++) {
        for (const Atom& atom : rho.profile(i).interior_atoms()) {
            double r = rho.eval(atom.pos, Side::right);
            double l = rho.eval(atom.pos, Side::left);
            if (!(r + l > 0))
                throw NotBoundedVariation("vanishing one-sided values at an interior atom");
            spec.atoms.push_back({atom.pos, (r - l) / (r + l)});
        }
    }
    // removed points recover unit atoms wherever one side keeps a positive limit
    for (size_t i = 0; i + 1 < ivs.size(); i++) {
        double z = ivs[i].hi;
        if (!std::isfinite(z) || z != ivs[i + 1].lo) continue;
        double r = rho.eval(z, Side::right);
        double l = rho.eval(z, Side::left);
        if (r + l > 0) spec.atoms.push_back({z, (r - l) / (r + l)});
    }
    // the absolutely continuous part returns through nu_rho's density
    // 2 m(z) rho(z) / (rho + rho-) = m(z); verified pointwise by the tests
    for (const auto& piece : rho.measure().density_pieces()) spec.density_pieces.push_back(piece);
    for (const auto& rule : rho.measure().rules()) spec.atom_rules.push_back(rule);
    std::vector<Atom> kept;
    for (const Atom& atom : spec.atoms) {
        bool dup = false;
        for (const auto& rule : spec.atom_rules)
            if (rule->atom_at(atom.pos) != 0.0) dup = true;
        if (!dup) kept.push_back(atom);
    }
    spec.atoms = kept;
    return validate_measure(spec);
}

double recovered_density_at(const SkewDensity& rho, double z, double h) {
    return (rho.log_eval(z + h) - rho.log_eval(z - h)) / (4 * h);
}

// ---------------------------------------------------------------------------
// Density-side inputs
// ---------------------------------------------------------------------------

double RawDensity::eval(double x) const {
    double v = 0;
    for (const auto& piece : pieces)
        if (piece.iv.contains(x)) v += piece.expr.eval(x);
    if (oscillating_factor && x > 0 && x < 0.5) {
        double r = 1.0 / x;
        long k = static_cast<long>(std::floor(r / 2.0));
        if (k >= 1 && r > 2 * k && r < 2 * k + 1) v *= *oscillating_factor;
    }
    if (jump_field) {
        std::vector<Atom> atoms;
        double omitted;
        jump_field->append_atoms(-2, 2, 1e-14, atoms, omitted);
        double add = 0;
        for (const Atom& atom : atoms) {
            if (atom.pos > 0 && atom.pos <= x) add += std::abs(atom.weight);
            if (atom.pos <= 0 && atom.pos > x) add += std::abs(atom.weight);
        }
        v += add;
    }
    return v;
}

RawEffective density_to_effective_intervals(const RawDensity& rho) {
    for (const auto& piece : rho.pieces) {
        if (!(piece.expr.c > 0))
            throw AssumptionAViolated("raw density must be positive on its pieces");
    }
    RawEffective out;

    // S(rho): power centers with p >= 1 (1/rho not locally integrable) plus
    // whole uncovered blocks, where rho = 0
    std::vector<std::pair<double, double>> cuts;
    for (const auto& piece : rho.pieces) {
        if (piece.expr.kind == Expr::Kind::power_law && piece.expr.p >= 1.0) {
            double x0 = piece.expr.x0;
            if (x0 >= piece.iv.lo && x0 <= piece.iv.hi) cuts.push_back({x0, x0});
        }
    }
    std::vector<std::pair<double, double>> covered;
    for (const auto& piece : rho.pieces) covered.push_back({piece.iv.lo, piece.iv.hi});
    std::sort(covered.begin(), covered.end());
    std::vector<std::pair<double, double>> cmerged;
    for (auto& c : covered) {
        if (!cmerged.empty() && c.first <= cmerged.back().second)
            cmerged.back().second = std::max(cmerged.back().second, c.second);
        else
            cmerged.push_back(c);
    }
    double cursor = -kInf;
    for (auto& c : cmerged) {
        if (cursor < c.first) cuts.push_back({cursor, c.first});
        cursor = c.second;
    }
    if (cursor < kInf) cuts.push_back({cursor, kInf});

    std::sort(cuts.begin(), cuts.end());
    std::vector<std::pair<double, double>> holes;
    for (auto& c : cuts) {
        if (!holes.empty() && c.first <= holes.back().second)
            holes.back().second = std::max(holes.back().second, c.second);
        else
            holes.push_back(c);
    }
    for (auto& h : holes) {
        out.singular_points.push_back(h.first);
        if (h.second != h.first) out.singular_points.push_back(h.second);
    }

    auto inv_integrable_at = [&](double end, bool from_above) {
        for (const auto& piece : rho.pieces) {
            if (piece.expr.kind != Expr::Kind::power_law) continue;
            if (piece.expr.x0 != end) continue;
            bool on_side = from_above ? piece.iv.hi > end : piece.iv.lo < end;
            if (!on_side) continue;
            return piece.expr.p < 1.0;
        }
        return true; // bounded positive near the end
    };

    double prev = -kInf;
    holes.push_back({kInf, kInf});
    for (auto& h : holes) {
        if (prev < h.first) {
            EffectiveInterval ef;
            ef.lo = prev;
            ef.hi = h.first;
            ef.ref = choose_reference_point(ef.lo, ef.hi);
            ef.closed_lo = std::isfinite(ef.lo) && inv_integrable_at(ef.lo, true);
            ef.closed_hi = std::isfinite(ef.hi) && inv_integrable_at(ef.hi, false);
            out.set.intervals.push_back(ef);
        }
        prev = h.second;
    }
    return out;
}

SemimartingaleReport semimartingale_verdict(const RawDensity& rho, const RawEffective& es) {
    SemimartingaleReport rep;
    rep.confidence = Confidence::certified;

    if (rho.oscillating_factor && *rho.oscillating_factor != 1.0) {
        // equal-height jumps at 1/k accumulate at 0: unbounded variation on
        // any neighbourhood of 0 inside an effective interval
        for (const auto& ef : es.set.intervals) {
            if (0.0 > ef.lo && 0.0 < ef.hi) {
                rep.verdict = SemimartingaleVerdict::not_semimartingale;
                rep.reason = "two-level step has non-summable jumps accumulating at 0";
                return rep;
            }
        }
    }
    for (const auto& piece : rho.pieces) {
        if (piece.expr.kind == Expr::Kind::power_law && piece.expr.p < 0) {
            double x0 = piece.expr.x0;
            for (const auto& ef : es.set.intervals) {
                if (x0 > ef.lo && x0 < ef.hi && x0 > piece.iv.lo && x0 < piece.iv.hi) {
                    rep.verdict = SemimartingaleVerdict::not_semimartingale;
                    rep.reason = "density unbounded inside an effective interval";
                    return rep;
                }
            }
        }
    }

    rep.verdict = SemimartingaleVerdict::semimartingale;
    rep.reason = "locally bounded variation on every effective interval";
    if (rho.jump_field) {
        std::vector<Atom> atoms;
        double omitted;
        rho.jump_field->append_atoms(-2, 2, 1e-14, atoms, omitted);
        for (const Atom& atom : atoms)
            rep.nu.jump_atoms.push_back(
                {atom.pos, std::abs(atom.weight) * (atom.pos > 0 ? 1.0 : -1.0)});
        rep.nu.truncated = true;
    }
    for (const auto& piece : rho.pieces) {
        const Expr& ex = piece.expr;
        switch (ex.kind) {
        case Expr::Kind::constant: break;
        case Expr::Kind::power_law:
            // d/dx c|x-x0|^p = c p sgn(x-x0) |x-x0|^{p-1}
            if (piece.iv.hi > ex.x0)
                rep.nu.ac_density.push_back({{std::max(piece.iv.lo, ex.x0), piece.iv.hi},
                                             Expr::power_law(ex.c * ex.p, ex.x0, ex.p - 1)});
            if (piece.iv.lo < ex.x0)
                rep.nu.ac_density.push_back({{piece.iv.lo, std::min(piece.iv.hi, ex.x0)},
                                             Expr::power_law(-ex.c * ex.p, ex.x0, ex.p - 1)});
            break;
        case Expr::Kind::exponential:
            if (ex.k == 1)
                rep.nu.ac_density.push_back({piece.iv, Expr::exponential(ex.c * ex.q, ex.q, 1)});
            else
                rep.nu.truncated = true; // derivative leaves the closed-form family
            break;
        }
    }
    return rep;
}

SemimartingaleReport semimartingale_verdict(const SkewDensity& rho,
                                            const EffectiveIntervalSet& es) {
    SemimartingaleReport rep;
    rep.confidence = Confidence::certified;
    // each profile is cadlag of locally bounded variation; variation can only
    // accumulate across infinitely many glued members
    for (const auto& ef : es.intervals) {
        if (ef.members.size() < 2) continue;
        ExtendedReal total = ExtendedReal::finite(0.0);
        for (size_t k : ef.members) {
            ExtendedReal v = rho.stats(k).V;
            if (v.is_finite())
                total += ExtendedReal::finite(v.value() * rho.constants()[k], v.confidence());
            else
                total += v;
        }
        if (total.is_infinite() && std::isfinite(ef.lo) && std::isfinite(ef.hi)) {
            rep.verdict = SemimartingaleVerdict::not_semimartingale;
            rep.reason = "variation series diverges on a compact effective interval";
            return rep;
        }
    }
    if (es.truncated) rep.confidence = Confidence::numeric;
    rep.verdict = SemimartingaleVerdict::semimartingale;
    rep.reason = "density has locally bounded variation on every effective interval";
    size_t listed = 0;
    for (const auto& ef : es.intervals) {
        for (size_t k : ef.members) {
            if (listed > 256) break;
            for (const Atom& atom : rho.profile(k).interior_atoms()) {
                if (++listed > 256) {
                    rep.nu.truncated = true;
                    break;
                }
                double jump = rho.eval(atom.pos) - rho.eval(atom.pos, Side::left);
                rep.nu.jump_atoms.push_back({atom.pos, jump});
            }
        }
    }
    return rep;
}

} // namespace skew
