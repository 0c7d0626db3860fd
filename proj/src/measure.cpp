#include "skew/measure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "skew/cantor.hpp"
#include "skew/errors.hpp"

namespace skew {

namespace {

double factor_of_weight(double w) { return (1.0 + w) / (1.0 - w); }

/// Interleaved family at -1/m, m >= 2: even m carry positive weights, odd m
/// negative ones. Weight magnitudes come from the derived class.
class ClusterRuleBase : public AtomRule {
public:
    // |weight| for even position -1/(2k) resp. odd position -1/(2k+1)
    virtual double weight_plus(long k) const = 0;
    virtual double weight_minus(long k) const = 0;

    TailCertificate certificate() const override { return TailCertificate::divergent; }

    double atom_at(double z) const override {
        if (!(z < 0) || z < -0.5) return 0.0;
        long m = std::llround(-1.0 / z);
        if (m < 2) return 0.0;
        if (-1.0 / static_cast<double>(m) != z) return 0.0;
        return weight_of_index(m);
    }

    void append_atoms(double lo, double hi, double /*tail_tol*/,
                      std::vector<Atom>& out, double& omitted) const override {
        omitted = 0.0;
        if (lo >= 0 || hi <= -0.5) return;
        long m_first = 2;
        if (lo > -0.5) {
            m_first = static_cast<long>(std::floor(-1.0 / lo)) + 1;
            while (m_first > 2 && -1.0 / static_cast<double>(m_first - 1) > lo) m_first--;
            while (-1.0 / static_cast<double>(m_first) <= lo) m_first++;
        }
        const long cap = 2'000'000;
        for (long m = m_first; m <= cap; m++) {
            double pos = -1.0 / static_cast<double>(m);
            if (pos > hi) break;
            out.push_back({pos, weight_of_index(m)});
        }
        if (hi >= 0) omitted = std::numeric_limits<double>::infinity();
    }

    std::vector<AccumulationPoint> accumulation_points() const override {
        return {{0.0, true, true, true}};
    }

    double tail_start(size_t max_atoms) const override {
        long m = std::max<long>(4, static_cast<long>(max_atoms));
        return -1.0 / static_cast<double>(m);
    }

    ExtendedReal mass(double lo, double hi, MassKind kind) const override {
        if (lo >= 0 || hi <= -0.5) return ExtendedReal::finite(0.0);
        if (hi >= 0 && lo < 0) return ExtendedReal::infinite(); // divergent tail at 0-
        double s = 0;
        std::vector<Atom> tmp;
        double omitted;
        append_atoms(lo, hi, 0, tmp, omitted);
        for (const Atom& a : tmp) {
            if (kind == MassKind::total) s += std::abs(a.weight);
            else if (kind == MassKind::plus) s += std::max(a.weight, 0.0);
            else s += std::max(-a.weight, 0.0);
        }
        return ExtendedReal::finite(s);
    }

    double partial_abs_sum(size_t n) const override {
        double s = 0;
        for (size_t k = 1; 2 * k <= n + 1; k++) {
            s += weight_plus(static_cast<long>(k));
            if (2 * k + 1 <= n + 1) s += weight_minus(static_cast<long>(k));
        }
        return s;
    }

protected:
    double weight_of_index(long m) const {
        return (m % 2 == 0) ? weight_plus(m / 2) : -weight_minus((m - 1) / 2);
    }

    /// Walks the step profile from ref toward 0, accumulating the three
    /// series; derived classes supply analytic tails.
    RuleSideFacts walk_facts(double ref, long k_max, double tail_int, double tail_inv,
                             double tail_var, bool int_divergent, bool inv_divergent,
                             bool var_divergent, LimitClass limit) const {
        RuleSideFacts f;
        f.limit = limit;
        double P = 1.0;
        double sum_int = 0, sum_inv = 0, sum_var = 0;
        double prev_pos = ref;
        long m_first = 2;
        if (ref > -0.5) {
            m_first = static_cast<long>(std::floor(-1.0 / ref)) + 1;
            while (-1.0 / static_cast<double>(m_first) <= ref) m_first++;
        }
        for (long m = m_first; m <= 2 * k_max; m++) {
            double pos = -1.0 / static_cast<double>(m);
            double len = pos - prev_pos;
            sum_int += P * len;
            sum_inv += len / P;
            double f_m = factor_of_weight(weight_of_index(m));
            sum_var += std::abs(P * f_m - P);
            P *= f_m;
            prev_pos = pos;
        }
        // last partial piece toward 0 plus analytic tails
        sum_int += P * (0.0 - prev_pos) * 0.0; // covered by tail estimate
        f.integral_factor = int_divergent
                                ? ExtendedReal::infinite()
                                : ExtendedReal::finite(sum_int + tail_int);
        f.integral_inv_factor = inv_divergent
                                    ? ExtendedReal::infinite()
                                    : ExtendedReal::finite(sum_inv + tail_inv);
        f.variation = var_divergent ? ExtendedReal::infinite()
                                    : ExtendedReal::finite(sum_var + tail_var);
        f.bounded_variation = var_divergent ? Verdict::no() : Verdict::yes();
        return f;
    }
};

class ClusterHarmonicRule : public ClusterRuleBase {
public:
    std::string name() const override { return "cluster_harmonic"; }
    std::string params() const override { return ""; }
    double weight_plus(long k) const override { return static_cast<double>(k) / (k + 2); }
    double weight_minus(long k) const override { return static_cast<double>(k) / (k + 2); }

    RuleSideFacts side_facts(double acc, double ref) const override {
        if (acc != 0.0 || !(ref < 0))
            throw Error("cluster rule accumulates at 0 from the left");
        // step values k+1 and 1: the factor oscillates; integral of the factor
        // behaves like sum 1/(4k) (divergent), 1/factor is summable.
        const long K = 1000000;
        double tail_inv = 0.25 / static_cast<double>(K); // ~ int_K^inf dk/(4k^2)
        RuleSideFacts f = walk_facts(ref, K, 0, tail_inv, 0,
                                     /*int_div*/ true, /*inv_div*/ false,
                                     /*var_div*/ true, LimitClass::oscillates);
        return f;
    }
};

class ClusterPowerRule : public ClusterRuleBase {
public:
    explicit ClusterPowerRule(double alpha) : alpha_(alpha) {
        if (!(alpha > 0))
            throw Error("cluster_power requires alpha > 0");
    }
    std::string name() const override { return "cluster_power"; }
    std::string params() const override {
        std::ostringstream os;
        os << "alpha=" << alpha_;
        return os.str();
    }
    double weight_plus(long k) const override {
        double A = std::pow((k + 1.0) / k, alpha_);
        return (A - 1) / (A + 1);
    }
    double weight_minus(long k) const override {
        double C = std::pow(static_cast<double>(k) / (k + 1), 2 * alpha_);
        return (1 - C) / (1 + C);
    }

    RuleSideFacts side_facts(double acc, double ref) const override {
        if (acc != 0.0 || !(ref < 0))
            throw Error("cluster rule accumulates at 0 from the left");
        // step values ((k+1)/k^2)^a and (k+1)^-a; the factor tends to 0 and is
        // of bounded variation for every a > 0. 1/factor integrable iff a < 1.
        const double a = alpha_;
        const long K = 1000000;
        const double Kd = static_cast<double>(K);
        // integral-comparison tails of the three series beyond K
        double tail_int = 0.5 * std::pow(Kd, -a - 1) / (a + 1);
        bool inv_div = (a >= 1.0);
        double tail_inv = inv_div ? 0.0 : 0.5 * std::pow(Kd, a - 1) / (1 - a);
        double tail_var = 2 * a * std::pow(Kd, -a - 1) / (a + 1);
        RuleSideFacts f = walk_facts(ref, K, tail_int, tail_inv, tail_var,
                                     false, inv_div, false, LimitClass::zero);
        f.limit_value = 0.0;
        return f;
    }

private:
    double alpha_;
};

/// Rationals in (0,1) via the Calkin-Wilf walk mapped by q -> q/(1+q),
/// mirrored into (-1,0) with negative weights. Summable by construction.
class DenseRationalRule : public AtomRule {
public:
    explicit DenseRationalRule(double w0) : w0_(w0) {
        if (!(w0 > 0) || w0 >= 1) throw Error("dense_rational requires 0 < w0 < 1");
        double q = 1.0;
        for (int n = 0; n < 52; n++) {
            positions_.push_back(q / (1.0 + q));
            q = 1.0 / (2.0 * std::floor(q) - q + 1.0);
        }
    }
    std::string name() const override { return "dense_rational"; }
    std::string params() const override {
        std::ostringstream os;
        os << "w0=" << w0_;
        return os.str();
    }
    TailCertificate certificate() const override { return TailCertificate::summable; }

    void append_atoms(double lo, double hi, double tail_tol,
                      std::vector<Atom>& out, double& omitted) const override {
        size_t n_used = positions_.size();
        if (tail_tol > 0) {
            // omitted |log factor| tail is bounded by 4 * remaining weight
            while (n_used > 1 && 8.0 * w0_ * std::pow(2.0, -static_cast<double>(n_used)) < tail_tol)
                n_used--;
            n_used = std::min(n_used + 1, positions_.size());
        }
        for (size_t n = 0; n < n_used; n++) {
            double w = w0_ * std::pow(2.0, -static_cast<double>(n + 1));
            if (positions_[n] > lo && positions_[n] <= hi) out.push_back({positions_[n], w});
            if (-positions_[n] > lo && -positions_[n] <= hi) out.push_back({-positions_[n], -w});
        }
        omitted = 8.0 * w0_ * std::pow(2.0, -static_cast<double>(n_used));
    }

    double atom_at(double z) const override {
        for (size_t n = 0; n < positions_.size(); n++) {
            double w = w0_ * std::pow(2.0, -static_cast<double>(n + 1));
            if (z == positions_[n]) return w;
            if (z == -positions_[n]) return -w;
        }
        return 0.0;
    }

    std::vector<AccumulationPoint> accumulation_points() const override {
        return {}; // summable: locally finite everywhere
    }

    ExtendedReal mass(double lo, double hi, MassKind kind) const override {
        double s = 0;
        for (size_t n = 0; n < positions_.size(); n++) {
            double w = w0_ * std::pow(2.0, -static_cast<double>(n + 1));
            bool in_pos = positions_[n] > lo && positions_[n] <= hi;
            bool in_neg = -positions_[n] > lo && -positions_[n] <= hi;
            if (kind == MassKind::total) s += (in_pos + in_neg) * w;
            else if (kind == MassKind::plus) s += in_pos * w;
            else s += in_neg * w;
        }
        return ExtendedReal::finite(s);
    }

    RuleSideFacts side_facts(double, double) const override {
        throw Error("dense_rational has no divergent accumulation point");
    }

    double partial_abs_sum(size_t n) const override {
        double s = 0;
        for (size_t i = 1; i <= n; i++) s += w0_ * std::pow(2.0, -std::ceil(i / 2.0));
        return s;
    }

private:
    double w0_;
    std::vector<double> positions_;
};

} // namespace

AtomRulePtr make_cluster_harmonic() { return std::make_shared<ClusterHarmonicRule>(); }
AtomRulePtr make_cluster_power(double alpha) { return std::make_shared<ClusterPowerRule>(alpha); }
AtomRulePtr make_dense_rational(double w0) { return std::make_shared<DenseRationalRule>(w0); }

double CheckedMeasure::atom_at(double z) const {
    double w = 0;
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), z,
                               [](const Atom& a, double v) { return a.pos < v; });
    if (it != atoms_.end() && it->pos == z) w += it->weight;
    for (const auto& r : rules_) w += r->atom_at(z);
    return w;
}

double CheckedMeasure::continuous_mass_signed(double from, double to) const {
    double s = 0;
    for (const auto& piece : pieces_) {
        double lo = std::max(from, piece.iv.lo);
        double hi = std::min(to, piece.iv.hi);
        if (lo < hi) s += piece.expr.integral_signed_finite(lo, hi);
    }
    return s;
}

double CheckedMeasure::continuous_mass_part(double from, double to, bool plus) const {
    double s = 0;
    for (const auto& piece : pieces_) {
        if (piece.positive() != plus) continue;
        double lo = std::max(from, piece.iv.lo);
        double hi = std::min(to, piece.iv.hi);
        if (lo < hi) s += std::abs(piece.expr.integral_signed_finite(lo, hi));
    }
    return s;
}

const CantorRule* CheckedMeasure::cantor() const {
    for (const auto& r : rules_) {
        if (const CantorRule* c = r->as_cantor()) return c;
    }
    return nullptr;
}

CheckedMeasure validate_measure(const SignedMeasureSpec& spec) {
    CheckedMeasure m;
    m.atoms_ = spec.atoms;
    m.rules_ = spec.atom_rules;
    m.pieces_ = spec.density_pieces;
    m.regions_ = spec.declared_infinite_regions;

    std::sort(m.atoms_.begin(), m.atoms_.end(),
              [](const Atom& a, const Atom& b) { return a.pos < b.pos; });
    for (size_t i = 0; i < m.atoms_.size(); i++) {
        const Atom& a = m.atoms_[i];
        if (!std::isfinite(a.pos)) throw Error("atom location must be finite");
        if (std::abs(a.weight) > 1.0) {
            std::ostringstream os;
            os << "atom at " << a.pos << " has |weight| = " << std::abs(a.weight) << " > 1";
            throw AtomMagnitudeError(os.str());
        }
        if (i > 0 && m.atoms_[i - 1].pos == a.pos)
            throw DuplicateAtomError("duplicate atom location " + std::to_string(a.pos));
        for (const auto& r : m.rules_) {
            if (r->atom_at(a.pos) != 0.0)
                throw DuplicateAtomError("explicit atom collides with rule atom at " +
                                         std::to_string(a.pos));
        }
    }

    for (const auto& piece : m.pieces_) {
        if (piece.expr.c == 0.0) throw Error("density piece with zero coefficient");
        if (piece.expr.kind == Expr::Kind::exponential && piece.expr.k != 1)
            throw Error("measure density pieces are limited to exp(q*x)");
        if (!(piece.iv.lo < piece.iv.hi)) throw Error("empty density piece interval");
    }
    for (size_t i = 0; i < m.pieces_.size(); i++) {
        for (size_t j = i + 1; j < m.pieces_.size(); j++) {
            const auto& a = m.pieces_[i];
            const auto& b = m.pieces_[j];
            if (a.positive() != b.positive() &&
                std::min(a.iv.hi, b.iv.hi) > std::max(a.iv.lo, b.iv.lo))
                throw Error("density pieces of opposite sign overlap; mu+ and mu- "
                            "must be mutually singular");
        }
    }

    // tail certificates: partial sums must behave as declared
    for (const auto& r : m.rules_) {
        double s1 = r->partial_abs_sum(1024);
        double s2 = r->partial_abs_sum(2048);
        double s4 = r->partial_abs_sum(4096);
        double inc1 = s2 - s1, inc2 = s4 - s2;
        if (r->certificate() == TailCertificate::summable) {
            if (!(inc2 <= 0.6 * inc1 + 1e-12))
                throw InconsistentTailCertificate(
                    "rule " + r->name() + " declared summable but partial sums are not Cauchy");
        } else {
            if (!(inc2 > 1e-9))
                throw InconsistentTailCertificate(
                    "rule " + r->name() + " declared divergent but partial sums stall");
        }
    }

    for (const Atom& a : m.atoms_) {
        if (a.weight == 1.0) m.xi_plus_.push_back(a.pos);
        if (a.weight == -1.0) m.xi_minus_.push_back(a.pos);
    }
    return m;
}

ExtendedReal mass_on_interval(const CheckedMeasure& m, double lo, double hi,
                              MassKind kind) {
    if (!(lo < hi)) return ExtendedReal::finite(0.0);
    ExtendedReal total = ExtendedReal::finite(0.0);

    double atom_sum = 0;
    for (const Atom& a : m.atoms()) {
        if (a.pos > lo && a.pos <= hi) {
            if (kind == MassKind::total) atom_sum += std::abs(a.weight);
            else if (kind == MassKind::plus) atom_sum += std::max(a.weight, 0.0);
            else atom_sum += std::max(-a.weight, 0.0);
        }
    }
    total += ExtendedReal::finite(atom_sum);

    for (const auto& r : m.rules()) total += r->mass(lo, hi, kind);

    for (const auto& piece : m.density_pieces()) {
        bool counted = kind == MassKind::total || (kind == MassKind::plus) == piece.positive();
        if (!counted) continue;
        double a = std::max(lo, piece.iv.lo);
        double b = std::min(hi, piece.iv.hi);
        if (a < b) total += piece.expr.integral_abs(a, b);
    }

    for (const auto& reg : m.declared_infinite_regions()) {
        double a = std::max(lo, reg.lo);
        double b = std::min(hi, reg.hi);
        if (a < b) return ExtendedReal::infinite();
    }
    return total;
}

double choose_reference_point(double lo, double hi) {
    bool lo_fin = std::isfinite(lo), hi_fin = std::isfinite(hi);
    if (lo_fin && hi_fin) return 0.5 * (lo + hi);
    if (lo_fin) return lo + 1.0;
    if (hi_fin) return hi - 1.0;
    return 0.0;
}

namespace {
std::vector<double> singular_points(const CheckedMeasure& m) {
    // density pieces: a power-law center with p <= -1 is non-locally-integrable
    std::vector<double> pts;
    for (const auto& piece : m.density_pieces()) {
        if (piece.expr.kind == Expr::Kind::power_law && piece.expr.p <= -1.0) {
            double x0 = piece.expr.x0;
            if (x0 >= piece.iv.lo && x0 <= piece.iv.hi) pts.push_back(x0);
        }
    }
    for (const auto& r : m.rules()) {
        for (const auto& acc : r->accumulation_points()) {
            if (acc.plus_infinite || acc.minus_infinite) pts.push_back(acc.pos);
        }
    }
    return pts;
}
} // namespace

IntervalDecomposition locally_finite_decomposition(const CheckedMeasure& m) {
    IntervalDecomposition out;

    if (const CantorRule* cr = m.cantor()) {
        out = cr->decomposition();
        out.truncated = true;
        // other sources may add singular points inside the listed intervals
        std::vector<double> extra = singular_points(m);
        if (!extra.empty()) {
            std::sort(extra.begin(), extra.end());
            std::vector<GInterval> split;
            for (const GInterval& g : out.intervals) {
                double lo = g.lo;
                for (double p : extra) {
                    if (p > lo && p < g.hi) {
                        split.push_back({lo, p, choose_reference_point(lo, p)});
                        lo = p;
                    }
                }
                split.push_back({lo, g.hi, choose_reference_point(lo, g.hi)});
            }
            out.intervals.swap(split);
        }
        return out;
    }

    std::vector<double> pts = singular_points(m);

    std::vector<Interval> blocks; // closed blocks of G^c with interior
    for (const auto& reg : m.declared_infinite_regions()) blocks.push_back(reg);

    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::sort(blocks.begin(), blocks.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });

    // sweep left to right
    std::vector<std::pair<double, double>> cuts; // [lo,hi] removed (closed)
    for (double p : pts) cuts.push_back({p, p});
    for (const auto& b : blocks) cuts.push_back({b.lo, b.hi});
    std::sort(cuts.begin(), cuts.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& c : cuts) {
        if (!merged.empty() && c.first <= merged.back().second)
            merged.back().second = std::max(merged.back().second, c.second);
        else
            merged.push_back(c);
    }

    double cursor = -std::numeric_limits<double>::infinity();
    for (const auto& c : merged) {
        if (cursor < c.first)
            out.intervals.push_back({cursor, c.first, choose_reference_point(cursor, c.first)});
        cursor = c.second;
    }
    double inf = std::numeric_limits<double>::infinity();
    if (cursor < inf)
        out.intervals.push_back({cursor, inf, choose_reference_point(cursor, inf)});

    std::ostringstream os;
    if (merged.empty()) os << "empty";
    else {
        os << merged.size() << " removed block(s):";
        for (const auto& c : merged) {
            if (c.first == c.second) os << " {" << c.first << "}";
            else os << " [" << c.first << "," << c.second << "]";
        }
    }
    out.complement_description = os.str();
    return out;
}

} // namespace skew
