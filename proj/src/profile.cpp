#include "skew/profile.hpp"

#include <algorithm>
#include <cmath>

#include "skew/errors.hpp"
#include "skew/quadrature.hpp"

namespace skew {

namespace {

constexpr size_t kMaxMaterialized = 40000;

double log_factor(double w) { return std::log1p(w) - std::log1p(-w); }

/// Antiderivative limit of a density piece at a (possibly infinite) point.
/// Callers guarantee the corresponding mass is finite.
double antideriv_limit(const Expr& ex, double x) {
    if (std::isfinite(x)) {
        if (ex.kind == Expr::Kind::power_law && x == ex.x0) {
            if (ex.p <= -1.0) throw NonRadonError("antiderivative diverges at power center");
            return 0.0; // |x-x0|^{p+1}/(p+1) -> 0
        }
        return ex.antiderivative(x);
    }
    switch (ex.kind) {
    case Expr::Kind::constant:
        throw NonRadonError("constant density has infinite tail mass");
    case Expr::Kind::power_law:
        if (ex.p < -1.0) return 0.0;
        throw NonRadonError("power density has infinite tail mass");
    case Expr::Kind::exponential:
        if ((x > 0 && ex.q < 0) || (x < 0 && ex.q > 0)) return 0.0;
        throw NonRadonError("exponential density has infinite tail mass");
    }
    return 0.0;
}

} // namespace

DensityProfile build_profile(const CheckedMeasure& m, const GInterval& iv,
                             double eps_prod) {
    return DensityProfile(m, iv, eps_prod);
}

DensityProfile::DensityProfile(const CheckedMeasure& m, const GInterval& iv,
                               double eps_prod)
    : a_(iv.lo), b_(iv.hi), e_(iv.ref), eps_prod_(eps_prod) {
    if (!(a_ < e_ && e_ < b_)) throw Error("reference point must lie inside the interval");

    for (const auto& reg : m.declared_infinite_regions()) {
        if (std::min(b_, reg.hi) > std::max(a_, reg.lo))
            throw NonRadonError("declared infinite region overlaps the interval");
    }
    for (const auto& piece : m.density_pieces()) {
        if (piece.expr.kind == Expr::Kind::power_law && piece.expr.p <= -1.0) {
            double x0 = piece.expr.x0;
            if (x0 > a_ && x0 < b_ && x0 >= piece.iv.lo && x0 <= piece.iv.hi)
                throw NonRadonError("density is not locally integrable inside the interval");
        }
        double lo = std::max(a_, piece.iv.lo);
        double hi = std::min(b_, piece.iv.hi);
        if (lo < hi) {
            DensityPiece clipped = piece;
            clipped.iv = {lo, hi};
            pieces_.push_back(clipped);
        }
    }

    for (const Atom& atom : m.atoms()) {
        if (atom.pos > a_ && atom.pos < b_) {
            if (std::abs(atom.weight) >= 1.0)
                throw AtomOnBoundary("atom with |weight| = 1 in the interior of an interval");
            atoms_.push_back(atom);
        }
    }

    for (const auto& rule : m.rules()) {
        bool handled_as_end = false;
        for (const auto& acc : rule->accumulation_points()) {
            if (!(acc.plus_infinite || acc.minus_infinite)) continue;
            if (acc.pos > a_ && acc.pos < b_)
                throw NonRadonError("atom family accumulates with infinite mass inside the interval");
            if (acc.pos == b_ && acc.from_left) {
                end_rules_[1].push_back(rule);
                handled_as_end = true;
            } else if (acc.pos == a_ && !acc.from_left) {
                end_rules_[0].push_back(rule);
                handled_as_end = true;
            }
        }
        // materialize what we can; the remainder near a divergent endpoint is
        // enumerated on demand
        double cut_lo = a_, cut_hi = b_;
        if (handled_as_end) {
            double ts = rule->tail_start(kMaxMaterialized);
            if (!std::isnan(ts)) {
                for (const auto& acc : rule->accumulation_points()) {
                    if (acc.pos == b_) cut_hi = std::min(cut_hi, ts);
                    if (acc.pos == a_) cut_lo = std::max(cut_lo, ts);
                }
            }
        }
        if (cut_lo < cut_hi) {
            std::vector<Atom> got;
            double omitted = 0;
            rule->append_atoms(cut_lo, cut_hi, eps_prod_, got, omitted);
            for (const Atom& atom : got)
                if (atom.pos > a_ && atom.pos < b_) atoms_.push_back(atom);
        }
    }

    std::sort(atoms_.begin(), atoms_.end(),
              [](const Atom& x, const Atom& y) { return x.pos < y.pos; });
    log_f_.resize(atoms_.size());
    prefix_.assign(atoms_.size() + 1, 0.0);
    prefix_plus_.assign(atoms_.size() + 1, 0.0);
    prefix_minus_.assign(atoms_.size() + 1, 0.0);
    for (size_t i = 0; i < atoms_.size(); i++) {
        double lf = log_factor(atoms_[i].weight);
        log_f_[i] = lf;
        prefix_[i + 1] = prefix_[i] + lf;
        prefix_plus_[i + 1] = prefix_plus_[i] + std::max(lf, 0.0);
        prefix_minus_[i + 1] = prefix_minus_[i] + std::max(-lf, 0.0);
    }

    // half masses, computed now while the measure is at hand
    for (int right = 0; right < 2; right++) {
        for (int kind = 0; kind < 3; kind++) {
            MassKind mk = static_cast<MassKind>(kind);
            ExtendedReal total = ExtendedReal::finite(0.0);
            double atom_sum = 0;
            for (const Atom& atom : m.atoms()) {
                bool in_half = right ? (atom.pos >= e_ && atom.pos < b_)
                                     : (atom.pos > a_ && atom.pos <= e_);
                if (!in_half) continue;
                if (mk == MassKind::total) atom_sum += std::abs(atom.weight);
                else if (mk == MassKind::plus) atom_sum += std::max(atom.weight, 0.0);
                else atom_sum += std::max(-atom.weight, 0.0);
            }
            total += ExtendedReal::finite(atom_sum);
            for (const auto& rule : m.rules()) {
                if (right) {
                    total += rule->mass(e_, b_, mk);
                    double wb = rule->atom_at(b_);
                    if (std::isfinite(b_) && wb != 0.0) {
                        double sub = mk == MassKind::total ? std::abs(wb)
                                   : mk == MassKind::plus  ? std::max(wb, 0.0)
                                                           : std::max(-wb, 0.0);
                        if (total.is_finite())
                            total = ExtendedReal::finite(total.value() - sub, total.confidence());
                    }
                    double we = rule->atom_at(e_);
                    if (we != 0.0) {
                        double add = mk == MassKind::total ? std::abs(we)
                                   : mk == MassKind::plus  ? std::max(we, 0.0)
                                                           : std::max(-we, 0.0);
                        total += ExtendedReal::finite(add);
                    }
                } else {
                    total += rule->mass(a_, e_, mk);
                }
            }
            for (const auto& piece : pieces_) {
                bool counted = mk == MassKind::total ||
                               ((mk == MassKind::plus) == piece.positive());
                if (!counted) continue;
                double lo = std::max(right ? e_ : a_, piece.iv.lo);
                double hi = std::min(right ? b_ : e_, piece.iv.hi);
                if (lo < hi) total += piece.expr.integral_abs(lo, hi);
            }
            half_mass_[right][kind] = total;
        }
    }
}

ExtendedReal DensityProfile::half_mass(bool right_half, MassKind kind) const {
    return half_mass_[right_half ? 1 : 0][static_cast<int>(kind)];
}

double DensityProfile::atom_weight(double z) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), z,
                               [](const Atom& x, double v) { return x.pos < v; });
    if (it != atoms_.end() && it->pos == z) return it->weight;
    for (int endi = 0; endi < 2; endi++)
        for (const auto& r : end_rules_[endi])
            if (double w = r->atom_at(z); w != 0.0) return w;
    return 0.0;
}

double DensityProfile::log_atom_sum(double lo, double hi, bool incl_lo,
                                    bool incl_hi, int part) const {
    if (hi < lo || (hi == lo && !(incl_lo && incl_hi))) return 0.0;
    auto first = incl_lo
                     ? std::lower_bound(atoms_.begin(), atoms_.end(), lo,
                                        [](const Atom& x, double v) { return x.pos < v; })
                     : std::upper_bound(atoms_.begin(), atoms_.end(), lo,
                                        [](double v, const Atom& x) { return v < x.pos; });
    auto last = incl_hi
                    ? std::upper_bound(atoms_.begin(), atoms_.end(), hi,
                                       [](double v, const Atom& x) { return v < x.pos; })
                    : std::lower_bound(atoms_.begin(), atoms_.end(), hi,
                                       [](const Atom& x, double v) { return x.pos < v; });
    size_t i0 = static_cast<size_t>(first - atoms_.begin());
    size_t i1 = static_cast<size_t>(last - atoms_.begin());
    double s = 0;
    if (i1 > i0) {
        const std::vector<double>& pfx =
            part == 0 ? prefix_ : (part > 0 ? prefix_plus_ : prefix_minus_);
        s = pfx[i1] - pfx[i0];
    }
    // atoms past the materialization cutoff near a divergent endpoint
    for (int endi = 0; endi < 2; endi++) {
        for (const auto& rule : end_rules_[endi]) {
            double ts = rule->tail_start(kMaxMaterialized);
            if (std::isnan(ts)) continue;
            double qlo = std::max(lo, ts);
            double qhi = hi;
            if (endi == 0) { // accumulation at a_: tail lies below ts
                qlo = lo;
                qhi = std::min(hi, ts);
            }
            if (qhi <= qlo) continue;
            std::vector<Atom> extra;
            double omitted = 0;
            rule->append_atoms(qlo, qhi, eps_prod_, extra, omitted);
            for (const Atom& atom : extra) {
                if (endi == 1 && atom.pos <= ts) continue; // already materialized
                if (endi == 0 && atom.pos > ts) continue;
                if (atom.pos == lo && !incl_lo) continue;
                if (atom.pos == hi && !incl_hi) continue;
                double lf = log_factor(atom.weight);
                s += part == 0 ? lf : (part > 0 ? std::max(lf, 0.0) : std::max(-lf, 0.0));
            }
        }
    }
    return s;
}

double DensityProfile::cont_log(double z, int part) const {
    if (z == e_ || pieces_.empty()) return 0.0;
    double lo = std::min(z, e_), hi = std::max(z, e_);
    double val = 0;
    for (const auto& piece : pieces_) {
        if (part != 0 && (piece.positive() != (part > 0))) continue;
        double plo = std::max(lo, piece.iv.lo);
        double phi = std::min(hi, piece.iv.hi);
        if (plo < phi) {
            double v = piece.expr.integral_signed_finite(plo, phi);
            val += part == 0 ? v : std::abs(v);
        }
    }
    return 2.0 * (z >= e_ ? val : -val);
}

double DensityProfile::log_eval(double z, Side side) const {
    if (!(z > a_ && z < b_))
        throw OutOfInterval("evaluation point outside the open interval");
    double s;
    if (z > e_ || (z == e_ && side == Side::right)) {
        s = log_atom_sum(e_, z, false, side == Side::right, 0);
    } else {
        s = -log_atom_sum(z, e_, side == Side::left, true, 0);
    }
    return cont_log(z, 0) + s;
}

double DensityProfile::eval(double z, Side side) const {
    return std::exp(log_eval(z, side));
}

double DensityProfile::eval_part(double z, bool plus_part, Side side) const {
    if (!(z > a_ && z < b_))
        throw OutOfInterval("evaluation point outside the open interval");
    int part = plus_part ? 1 : -1;
    double s;
    if (z > e_ || (z == e_ && side == Side::right)) {
        s = log_atom_sum(e_, z, false, side == Side::right, part);
    } else {
        s = -log_atom_sum(z, e_, side == Side::left, true, part);
    }
    return std::exp(cont_log(z, part) + s);
}

const DensityProfile::EndBehavior& DensityProfile::end_behavior(bool at_b) const {
    auto& slot = end_cache_[at_b ? 1 : 0];
    if (!slot) slot = analyze_end(at_b);
    return *slot;
}

DensityProfile::EndBehavior DensityProfile::analyze_end(bool at_b) const {
    EndBehavior out;
    const double end = at_b ? b_ : a_;
    ExtendedReal mp = half_mass(at_b, MassKind::plus);
    ExtendedReal mm = half_mass(at_b, MassKind::minus);

    if (mp.is_finite() && mm.is_finite()) {
        out.kind = EndBehavior::Kind::bounded_positive;
        out.conf = weaker(mp.confidence(), mm.confidence());
        // limit of log rho at the end: antiderivative limits + full atom sum
        double cont = 0;
        for (const auto& piece : pieces_) {
            double plo = std::max(std::min(end, e_), piece.iv.lo);
            double phi = std::min(std::max(end, e_), piece.iv.hi);
            if (plo < phi) {
                auto A = [&](double x) {
                    return (x == end) ? antideriv_limit(piece.expr, x)
                                      : piece.expr.antiderivative(x);
                };
                cont += A(phi) - A(plo);
            }
        }
        double atoms = at_b ? log_atom_sum(e_, b_, false, false, 0)
                            : -log_atom_sum(a_, e_, false, true, 0);
        // cont runs over (min,max): flips sign on the left half
        double logv = 2.0 * (at_b ? cont : -cont) + atoms;
        out.limit_value = std::exp(logv);
        return out;
    }

    // identify what drives the infinite mass
    double gamma = 0;
    int n_power = 0, n_exp_up = 0, n_exp_down = 0, n_unknown = 0;
    for (const auto& piece : pieces_) {
        bool touches = at_b ? piece.iv.hi == end || (!std::isfinite(end) && std::isinf(piece.iv.hi))
                            : piece.iv.lo == end || (!std::isfinite(end) && std::isinf(piece.iv.lo));
        if (!touches) continue;
        ExtendedReal pm = piece.expr.integral_abs(std::max(piece.iv.lo, std::min(e_, end)),
                                                  std::min(piece.iv.hi, std::max(e_, end)));
        if (!pm.is_infinite()) continue;
        const Expr& ex = piece.expr;
        if (std::isfinite(end)) {
            if (ex.kind == Expr::Kind::power_law && ex.x0 == end) {
                double s = at_b ? -1.0 : 1.0; // sign(z - end) on the approach side
                if (ex.p == -1.0) {
                    gamma += 2.0 * ex.c * s;
                    n_power++;
                } else {
                    // p < -1: log rho ~ 2 c s |z-end|^{p+1}/(p+1), blowing up
                    double dir = 2.0 * ex.c * s / (ex.p + 1.0);
                    (dir > 0 ? n_exp_up : n_exp_down)++;
                }
            } else {
                n_unknown++;
            }
        } else {
            double s = at_b ? 1.0 : -1.0; // sign of z out there
            switch (ex.kind) {
            case Expr::Kind::constant:
                (ex.c * s > 0 ? n_exp_up : n_exp_down)++;
                break;
            case Expr::Kind::power_law:
                if (ex.p == -1.0) {
                    gamma += 2.0 * ex.c * s;
                    n_power++;
                } else { // p > -1, else the mass were finite
                    (ex.c * s > 0 ? n_exp_up : n_exp_down)++;
                }
                break;
            case Expr::Kind::exponential:
                // antiderivative (c/q) e^{qz} grows at this end
                (ex.c / ex.q > 0 ? n_exp_up : n_exp_down)++;
                break;
            }
        }
    }

    const auto& rules = end_rules_[at_b ? 1 : 0];
    if (!rules.empty()) {
        if (rules.size() > 1 || n_power + n_exp_up + n_exp_down + n_unknown > 0) {
            out.kind = EndBehavior::Kind::indeterminate;
            return out;
        }
        out.kind = EndBehavior::Kind::rule_driven;
        out.conf = Confidence::certified;
        // normalize the family factor past all other interval structure
        double ref = e_;
        for (const Atom& atom : atoms_) {
            bool own = rules[0]->atom_at(atom.pos) != 0.0;
            if (own) continue;
            if (at_b && atom.pos > ref && atom.pos < end) ref = atom.pos;
            if (!at_b && atom.pos < ref && atom.pos > end) ref = atom.pos;
        }
        for (const auto& piece : pieces_) {
            if (at_b && piece.iv.hi > ref && piece.iv.hi < end) ref = piece.iv.hi;
            if (!at_b && piece.iv.lo < ref && piece.iv.lo > end) ref = piece.iv.lo;
        }
        out.rule_ref = ref;
        out.rule_norm = (ref == e_) ? 1.0 : eval(ref);
        out.rule = rules[0]->side_facts(end, ref);
        return out;
    }

    if (n_unknown > 0 || (n_exp_up > 0 && n_exp_down > 0)) {
        out.kind = EndBehavior::Kind::indeterminate;
        return out;
    }
    if (n_exp_up > 0) {
        out.kind = EndBehavior::Kind::exp_to_inf;
        out.conf = Confidence::certified;
        return out;
    }
    if (n_exp_down > 0) {
        out.kind = EndBehavior::Kind::exp_to_zero;
        out.conf = Confidence::certified;
        return out;
    }
    if (n_power > 0) {
        out.kind = EndBehavior::Kind::power;
        out.gamma = gamma;
        out.conf = Confidence::certified;
        return out;
    }
    out.kind = EndBehavior::Kind::indeterminate;
    return out;
}

EndpointLimit DensityProfile::endpoint_limit(bool at_b) const {
    const EndBehavior& eb = end_behavior(at_b);
    EndpointLimit out;
    switch (eb.kind) {
    case EndBehavior::Kind::bounded_positive:
        out.cls = LimitClass::positive;
        out.value = eb.limit_value;
        out.confidence = eb.conf;
        return out;
    case EndBehavior::Kind::power: {
        // |z-end|^gamma -> 0 at a finite end, |z|^gamma -> inf at an infinite one
        double g = std::isfinite(at_b ? b_ : a_) ? eb.gamma : -eb.gamma;
        if (g > 0) out.cls = LimitClass::zero;
        else if (g < 0) out.cls = LimitClass::diverges;
        else out.cls = LimitClass::undecided;
        out.value = 0;
        out.confidence = eb.gamma == 0 ? Confidence::numeric : eb.conf;
        return out;
    }
    case EndBehavior::Kind::exp_to_zero:
        out.cls = LimitClass::zero;
        out.value = 0;
        out.confidence = eb.conf;
        return out;
    case EndBehavior::Kind::exp_to_inf:
        out.cls = LimitClass::diverges;
        out.value = 0;
        out.confidence = eb.conf;
        return out;
    case EndBehavior::Kind::rule_driven:
        out.cls = eb.rule.limit;
        out.value = eb.rule.limit_value * eb.rule_norm;
        out.confidence = Confidence::certified;
        return out;
    default:
        out.cls = LimitClass::undecided;
        out.confidence = Confidence::numeric;
        return out;
    }
}

double DensityProfile::segment_integral(double z1, double z2, bool inverse) const {
    // no atoms strictly inside (z1, z2)
    bool covered = false;
    for (const auto& piece : pieces_) {
        if (std::min(z2, piece.iv.hi) > std::max(z1, piece.iv.lo)) covered = true;
    }
    if (!covered) {
        double v = log_eval(0.5 * (z1 + z2) == z1 ? z1 : 0.5 * (z1 + z2));
        double lv = inverse ? -v : v;
        return std::exp(lv) * (z2 - z1);
    }
    auto f = [&](double z) {
        double lv = log_eval(z);
        return std::exp(inverse ? -lv : lv);
    };
    return integrate(f, z1, z2, 1e-10, 1e-10).value;
}

double DensityProfile::integral_inside(double z1, double z2, bool inverse) const {
    if (!(z1 <= z2)) std::swap(z1, z2);
    // split at atoms and piece boundaries
    std::vector<double> cuts;
    cuts.push_back(z1);
    for (const Atom& atom : atoms_)
        if (atom.pos > z1 && atom.pos < z2) cuts.push_back(atom.pos);
    for (const auto& piece : pieces_) {
        if (piece.iv.lo > z1 && piece.iv.lo < z2) cuts.push_back(piece.iv.lo);
        if (piece.iv.hi > z1 && piece.iv.hi < z2) cuts.push_back(piece.iv.hi);
    }
    cuts.push_back(z2);
    std::sort(cuts.begin(), cuts.end());
    double total = 0;
    for (size_t i = 0; i + 1 < cuts.size(); i++) {
        if (cuts[i + 1] > cuts[i]) total += segment_integral(cuts[i], cuts[i + 1], inverse);
    }
    return total;
}

double DensityProfile::variation_inside(double z1, double z2) const {
    if (!(z1 <= z2)) std::swap(z1, z2);
    double var = 0;
    // jumps at atoms in (z1, z2]
    for (const Atom& atom : atoms_) {
        if (atom.pos > z1 && atom.pos <= z2)
            var += std::abs(eval(atom.pos) - eval(atom.pos, Side::left));
    }
    // continuous runs between breakpoints: each run is monotone since pieces
    // are single-signed
    std::vector<double> cuts;
    cuts.push_back(z1);
    for (const Atom& atom : atoms_)
        if (atom.pos > z1 && atom.pos < z2) cuts.push_back(atom.pos);
    for (const auto& piece : pieces_) {
        if (piece.iv.lo > z1 && piece.iv.lo < z2) cuts.push_back(piece.iv.lo);
        if (piece.iv.hi > z1 && piece.iv.hi < z2) cuts.push_back(piece.iv.hi);
    }
    cuts.push_back(z2);
    std::sort(cuts.begin(), cuts.end());
    for (size_t i = 0; i + 1 < cuts.size(); i++) {
        if (cuts[i + 1] <= cuts[i]) continue;
        var += std::abs(eval(cuts[i + 1], Side::left) - eval(cuts[i]));
    }
    return var;
}

BvCertificate DensityProfile::bv_certificate(bool right_half) const {
    BvCertificate out;
    const EndBehavior& eb = end_behavior(right_half);
    ExtendedReal up_mass = half_mass(right_half, right_half ? MassKind::plus : MassKind::minus);
    const double end = right_half ? b_ : a_;

    auto walked_variation = [&](double lim) {
        // approach the end geometrically until the variation increment settles
        double outer;
        if (std::isfinite(end)) {
            double step = std::isfinite(e_ - end) ? std::abs(end - e_) * 1e-3 : 1.0;
            outer = end + (right_half ? -step : step);
        } else {
            outer = e_ + (right_half ? 1.0 : -1.0);
        }
        double var = variation_inside(std::min(e_, outer), std::max(e_, outer));
        for (int it = 0; it < 60; it++) {
            double next;
            if (std::isfinite(end)) next = end + (outer - end) * 0.25;
            else next = outer + (right_half ? 1.0 : -1.0) * std::max(1.0, std::abs(outer));
            double inc = variation_inside(std::min(outer, next), std::max(outer, next));
            var += inc;
            outer = next;
            if (inc < 1e-11 * (1 + var)) break;
        }
        var += std::abs(eval(outer, right_half ? Side::right : Side::left) - lim);
        return var;
    };

    if (eb.kind == EndBehavior::Kind::rule_driven) {
        if (eb.rule.bounded_variation.is_yes()) {
            out.cls = BvClass::bv;
            double pre = variation_inside(std::min(e_, eb.rule_ref), std::max(e_, eb.rule_ref));
            double v = pre;
            if (eb.rule.variation.is_finite()) v += eb.rule_norm * eb.rule.variation.value();
            out.total_variation = ExtendedReal::finite(v);
            out.confidence = Confidence::certified;
        } else if (eb.rule.bounded_variation.is_no()) {
            out.cls = BvClass::not_bv;
            out.total_variation = ExtendedReal::infinite();
            out.confidence = Confidence::certified;
        }
        return out;
    }

    if (up_mass.is_finite() || eb.kind == EndBehavior::Kind::bounded_positive) {
        out.cls = BvClass::bv;
        out.confidence = up_mass.is_finite() ? up_mass.confidence() : eb.conf;
        EndpointLimit lim = endpoint_limit(right_half);
        double target = lim.cls == LimitClass::positive ? lim.value : 0.0;
        out.total_variation = ExtendedReal::finite(walked_variation(target), Confidence::numeric);
        return out;
    }

    switch (eb.kind) {
    case EndBehavior::Kind::power: {
        double g = std::isfinite(end) ? eb.gamma : -eb.gamma;
        if (g > 0) {
            out.cls = BvClass::bv; // continuous, eventually monotone to 0
            out.confidence = Confidence::certified;
            out.total_variation = ExtendedReal::finite(walked_variation(0.0), Confidence::numeric);
        } else if (g < 0) {
            out.cls = BvClass::not_bv;
            out.confidence = Confidence::certified;
            out.total_variation = ExtendedReal::infinite();
        }
        return out;
    }
    case EndBehavior::Kind::exp_to_zero:
        out.cls = BvClass::bv;
        out.confidence = Confidence::certified;
        out.total_variation = ExtendedReal::finite(walked_variation(0.0), Confidence::numeric);
        return out;
    case EndBehavior::Kind::exp_to_inf:
        out.cls = BvClass::not_bv;
        out.confidence = Confidence::certified;
        out.total_variation = ExtendedReal::infinite();
        return out;
    default:
        out.cls = BvClass::unknown;
        out.total_variation = ExtendedReal::unknown();
        return out;
    }
}

ExtendedReal DensityProfile::half_integral(bool right_half, bool inverse) const {
    const EndBehavior& eb = end_behavior(right_half);
    const double end = right_half ? b_ : a_;
    const double len = std::abs(end - e_);

    auto finite_value = [&](double from, double to) {
        return integral_inside(std::min(from, to), std::max(from, to), inverse);
    };
    auto tail_value = [&]() {
        // improper numeric value toward an infinite end
        auto f = [&](double z) {
            double lv = log_eval(z);
            return std::exp(inverse ? -lv : lv);
        };
        QuadResult r = right_half ? integrate_right_tail(f, e_) : integrate_left_tail(f, e_);
        return r.value;
    };

    switch (eb.kind) {
    case EndBehavior::Kind::bounded_positive:
        if (!std::isfinite(len)) return ExtendedReal::infinite(eb.conf);
        return ExtendedReal::finite(finite_value(end, e_), eb.conf);
    case EndBehavior::Kind::power: {
        double expo = inverse ? -eb.gamma : eb.gamma;
        if (std::isfinite(end)) {
            if (expo <= -1.0) return ExtendedReal::infinite(eb.conf);
            return ExtendedReal::finite(finite_value(end, e_), eb.conf);
        }
        if (expo >= -1.0) return ExtendedReal::infinite(eb.conf);
        return ExtendedReal::finite(tail_value(), eb.conf);
    }
    case EndBehavior::Kind::exp_to_zero:
        if (!inverse) return ExtendedReal::finite(std::isfinite(end) ? finite_value(end, e_) : tail_value(), eb.conf);
        return ExtendedReal::infinite(eb.conf);
    case EndBehavior::Kind::exp_to_inf:
        if (inverse) return ExtendedReal::finite(std::isfinite(end) ? finite_value(end, e_) : tail_value(), eb.conf);
        return ExtendedReal::infinite(eb.conf);
    case EndBehavior::Kind::rule_driven: {
        const ExtendedReal& fam = inverse ? eb.rule.integral_inv_factor : eb.rule.integral_factor;
        if (fam.is_infinite()) return ExtendedReal::infinite();
        if (fam.is_unknown()) return ExtendedReal::unknown();
        double pre = (eb.rule_ref == e_) ? 0.0 : finite_value(e_, eb.rule_ref);
        double scale = inverse ? 1.0 / eb.rule_norm : eb.rule_norm;
        return ExtendedReal::finite(pre + scale * fam.value());
    }
    default: {
        auto f = [&](double z) {
            double lv = log_eval(z);
            return std::exp(inverse ? -lv : lv);
        };
        return right_half ? improper_nonnegative(f, e_, end) : improper_nonnegative(f, end, e_);
    }
    }
}

IntervalStats DensityProfile::integral_stats() const {
    IntervalStats st;
    ExtendedReal Al = half_integral(false, false), Ar = half_integral(true, false);
    st.Bl = half_integral(false, true);
    st.Br = half_integral(true, true);
    st.A = Al + Ar;
    st.B = st.Bl + st.Br;

    BvCertificate vl = bv_certificate(false), vr = bv_certificate(true);
    ExtendedReal v = vl.total_variation + vr.total_variation;
    // canonical closed version: finite endpoints carry their boundary jump
    for (int right = 0; right < 2; right++) {
        double end = right ? b_ : a_;
        if (!std::isfinite(end)) continue;
        EndpointLimit lim = endpoint_limit(right);
        if (lim.cls == LimitClass::positive)
            v += ExtendedReal::finite(lim.value, lim.confidence);
        else if (lim.cls == LimitClass::diverges || lim.cls == LimitClass::oscillates)
            v += ExtendedReal::infinite(lim.confidence);
        else if (lim.cls == LimitClass::undecided)
            v += ExtendedReal::unknown();
    }
    st.V = v;
    return st;
}

double eval_density(const DensityProfile& p, double z, Side side) { return p.eval(z, side); }
EndpointLimit endpoint_limit(const DensityProfile& p, bool at_b) { return p.endpoint_limit(at_b); }
BvCertificate bv_certificate(const DensityProfile& p, bool right_half) {
    return p.bv_certificate(right_half);
}
IntervalStats integral_stats(const DensityProfile& p) { return p.integral_stats(); }

} // namespace skew
