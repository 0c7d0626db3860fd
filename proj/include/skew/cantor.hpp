#pragma once

#include <vector>

#include "skew/measure.hpp"

namespace skew {

enum class GapModel { middle_proportion, power_law };

/// Generalized Cantor set on [0,1] built from ratios alpha_j in (0,1),
/// either constant or alpha_j = base * j^-decay. The two unbounded intervals
/// (-inf,0) and (1,inf) are always part of the complement's decomposition.
struct CantorSpec {
    double alpha_base = 1.0 / 3.0;
    double alpha_decay = 0.0; // 0 means constant alpha_j
    int depth = 20;           // enumeration depth J
    GapModel gap_model = GapModel::middle_proportion;

    double alpha_at(int level) const; // alpha_j, level >= 1
    bool constant_alpha() const { return alpha_decay == 0.0; }
};

struct CantorGap {
    double lo;
    double hi;
    int level; // level l >= 1 carries 2^(l-1) gaps
};

/// Atom family +1 at every finite left endpoint and -1 at every finite right
/// endpoint of the complement's intervals. Masses are resolved analytically
/// at any depth by descending the construction locally.
class CantorRule : public AtomRule {
public:
    CantorRule(const CantorSpec& spec);

    std::string name() const override { return "cantor_endpoints"; }
    std::string params() const override;
    TailCertificate certificate() const override { return TailCertificate::divergent; }
    void append_atoms(double lo, double hi, double tail_tol, std::vector<Atom>& out,
                      double& omitted) const override;
    double atom_at(double z) const override;
    std::vector<AccumulationPoint> accumulation_points() const override { return {}; }
    ExtendedReal mass(double lo, double hi, MassKind kind) const override;
    RuleSideFacts side_facts(double acc, double ref) const override;
    double partial_abs_sum(size_t n) const override { return static_cast<double>(n); }
    const CantorRule* as_cantor() const override { return this; }

    const CantorSpec& spec() const { return spec_; }
    const std::vector<CantorGap>& gaps() const { return gaps_; }
    IntervalDecomposition decomposition() const;

    /// Lebesgue measure of the kept set at depth J is prod_{j<=J}(1 - alpha_j).
    double kept_measure(int depth) const;
    /// Certified verdict on whether K is Lebesgue-null (sum alpha_j = inf).
    Verdict k_is_null() const;
    /// Gap length at a level (model formula; exact for both models).
    double gap_length(int level) const;

private:
    struct Split {
        double g_lo, g_hi; // gap of a kept interval
        bool ok;
    };
    Split split_kept(double u, double v, int level) const;
    // mass of (lo,hi] restricted to the kept interval [u,v] at `level`
    ExtendedReal descend_mass(double lo, double hi, double u, double v, int level,
                              MassKind kind) const;

    CantorSpec spec_;
    std::vector<CantorGap> gaps_;       // sorted by position
    std::vector<Atom> sorted_atoms_;    // generated endpoints, sorted
};

/// Builds the gap enumeration and the endpoint measure of the spec.
/// Throws DepthOverflow for depth > 24 and rejects power_law specs whose gap
/// lengths do not fit inside the kept intervals.
std::pair<IntervalDecomposition, CheckedMeasure> generate_cantor(const CantorSpec& spec);

enum class CantorVerdict { unique, infinitely_many_irreducible, unknown };

struct CantorVerdictReport {
    CantorVerdict verdict = CantorVerdict::unknown;
    Confidence confidence = Confidence::numeric;
    // sqrt-series sum_l 2^(l-1) sqrt(gap_l (gap_l + 2)): converges iff some
    // positive constants c_n glue everything
    double series_ratio = 0;    // geometric ratio when alpha is constant
    bool series_divergent = false;
    double partial_sum = 0;     // truncated series value (diagnostics)
    Verdict k_null = Verdict::unknown();
};

/// Scale-connection regime of the endpoint measure: `unique` when no choice
/// of constants glues two intervals, `infinitely_many_irreducible` when the
/// sqrt-series converges (witness constants exist for a range of beta).
CantorVerdictReport cantor_verdict(const CantorSpec& spec, int depth_for_series = 40);

struct CantorConstants {
    double beta;
    std::vector<double> c; // aligned with decomposition order
    // certified geometric ratios of the three admissibility series
    double ratio_c_times_len;
    double ratio_len_over_c;
    double ratio_c;
};

/// Witness constants c_n = beta^(level-1) for gap intervals (1 on the two
/// unbounded intervals); requires power_law model and 2*alpha < beta < 1/2.
CantorConstants cantor_constants(const CantorSpec& spec, double beta);

} // namespace skew
