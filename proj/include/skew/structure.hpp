#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skew/cantor.hpp"
#include "skew/measure.hpp"
#include "skew/profile.hpp"

namespace skew {

enum class BarrierLabel { real, pseudo, nonsensical, undecided };

const char* to_string(BarrierLabel label);

/// Finiteness evidence for one side of a barrier.
struct HalfEvidence {
    ExtendedReal mass_total, mass_plus, mass_minus;
    ExtendedReal int_rho, int_inv_rho;
    BvClass bv = BvClass::unknown;
    LimitClass limit = LimitClass::undecided;
};

struct BarrierEntry {
    double z = 0;
    bool right_barrier = true; // z in Xi+ (left endpoint of the interval it guards)
    BarrierLabel label = BarrierLabel::undecided;
    HalfEvidence outer; // the side that must carry finite mass
    HalfEvidence inner; // the side whose profile decides real vs pseudo
    Confidence confidence = Confidence::numeric;
};

struct BarrierClassification {
    std::vector<BarrierEntry> entries;
};

struct ConditionVerdict {
    Verdict verdict;
    std::string note;
};

/// Existence / uniqueness / irreducibility report for the SDE's general skew
/// Brownian motions (the five structural conditions plus derived verdicts).
struct ExistenceReport {
    ConditionVerdict barrier_endpoints;  // unit atoms sit exactly at reachable finite endpoints
    ConditionVerdict no_mass_outside;    // |mu|(G^c \ Xi) = 0
    ConditionVerdict integrable_ends;    // rho integrable toward finite endpoints
    ConditionVerdict bv_reachable_ends;  // BV extension wherever 1/rho is integrable
    ConditionVerdict nonexplosive_tails; // Feller integrals diverge on free tails
    Verdict exists;
    Verdict unique;
    Verdict irreducible_possible;
    Confidence confidence = Confidence::certified;
};

enum class Connectable { yes, no, unknown };

/// Feasibility of gluing I_i to I_j across the given intermediate intervals
/// by some choice of positive constants: requires a Lebesgue-null gap, finite
/// facing half-integrals of 1/rho, and convergence of
/// sum sqrt((A_n + V_n) B_n) over the intermediates (witness constants
/// c_n = sqrt(B_n / (A_n + V_n)); necessity by AM-GM).
Connectable decide_scale_connectable(const IntervalStats& si, const IntervalStats& sj,
                                     const std::vector<IntervalStats>& between,
                                     bool gap_measure_zero);

enum class ConstantsTarget { any_valid, maximally_glued };

/// The density function rho determined by the interval profiles and the
/// positive constants c_n: rho = c_n * profile on I_n, the barrier value at
/// points of Xi+, and 0 elsewhere.
class SkewDensity {
public:
    SkewDensity() = default;

    double eval(double z, Side side = Side::right) const;
    double log_eval(double z) const; // -inf where rho = 0

    size_t interval_count() const { return constants_.size(); }
    const IntervalDecomposition& decomposition() const { return decomp_; }
    const std::vector<double>& constants() const { return constants_; }
    const DensityProfile& profile(size_t n) const { return *profiles_[n]; }
    const IntervalStats& stats(size_t n) const { return stats_[n]; }
    const CheckedMeasure& measure() const { return measure_; }
    const CantorRule* cantor() const { return measure_.cantor(); }

    /// index of the interval whose closure contains z, if any
    std::optional<size_t> interval_of(double z) const;

    SkewDensity with_constants_scaled(double lambda) const;

private:
    friend class StructureEngine;
    CheckedMeasure measure_;
    IntervalDecomposition decomp_;
    std::vector<std::shared_ptr<const DensityProfile>> profiles_;
    std::vector<IntervalStats> stats_;
    std::vector<double> constants_;
};

struct EffectiveInterval {
    double lo = 0, hi = 0;
    bool closed_lo = false, closed_hi = false;
    double ref = 0;                 // base point, s(ref) = 0
    std::vector<size_t> members;    // indices into the decomposition
    double image_lo = 0, image_hi = 0; // J_k = s(effective interval)
};

struct EffectiveIntervalSet {
    std::vector<EffectiveInterval> intervals;
    bool truncated = false;
};

/// Adapted scale function of one effective interval: s(x) = int_ref^x 1/rho,
/// strictly increasing, s(ref) = 0; inverse by bisection.
class ScaleFunction {
public:
    ScaleFunction(const SkewDensity& rho, const EffectiveInterval& iv);
    double eval(double x) const;
    double inverse(double y) const; // bisection to 1e-12
    double image_lo() const { return img_lo_; }
    double image_hi() const { return img_hi_; }

private:
    const SkewDensity* rho_;
    EffectiveInterval iv_;
    std::vector<double> knots_x_, knots_s_;
    double img_lo_, img_hi_;
};

enum class Conservativeness { conservative, explodes, unknown };

struct ConservativenessReport {
    Conservativeness overall = Conservativeness::unknown;
    bool explodes_at_minus_inf = false;
    bool explodes_at_plus_inf = false;
    Confidence confidence = Confidence::certified;
    double feller_integral_plus = 0;  // converged numeric value when explosive
    double feller_integral_minus = 0;
};

/// The decision core bound to one validated measure: builds the interval
/// decomposition and per-interval profiles once, then answers the structural
/// questions. Pure queries over immutable state.
class StructureEngine {
public:
    explicit StructureEngine(const CheckedMeasure& m, double eps_prod = 1e-12);

    const IntervalDecomposition& decomposition() const { return decomp_; }
    const DensityProfile& profile(size_t n) const;
    const IntervalStats& stats(size_t n) const;
    size_t interval_count() const { return decomp_.intervals.size(); }

    BarrierEntry classify_barrier(double z) const;
    BarrierClassification classify_all_barriers() const;

    ExistenceReport check_existence() const;

    Connectable adjacent_connectable(size_t i) const; // I_i with I_{i+1}

    /// Positive constants satisfying the admissibility series; throws
    /// ConditionsNotMet when existence fails.
    std::vector<double> construct_constants(ConstantsTarget target) const;

    SkewDensity skew_density(const std::vector<double>& constants) const;
    SkewDensity skew_density(ConstantsTarget target = ConstantsTarget::any_valid) const;

    const CheckedMeasure& measure() const { return measure_; }

private:
    ExtendedReal open_half_mass(size_t n, bool right_half, MassKind kind) const;
    HalfEvidence side_evidence(double lo, double hi, bool inner_is_left) const;

    CheckedMeasure measure_;
    double eps_prod_;
    IntervalDecomposition decomp_;
    mutable std::vector<std::shared_ptr<const DensityProfile>> profiles_;
    mutable std::vector<std::optional<IntervalStats>> stats_;
    mutable std::optional<ExistenceReport> existence_cache_;
};

EffectiveIntervalSet glue_effective_intervals(const SkewDensity& rho);

ConservativenessReport check_conservative(const EffectiveIntervalSet& es,
                                          const SkewDensity& rho);

std::pair<Verdict, Verdict> check_uniqueness_irreducibility(const StructureEngine& eng,
                                                            const ExistenceReport& rep);

/// Recovers mu from the density: atom weights from evaluated jump ratios,
/// the absolutely continuous part through nu_rho's density identity.
CheckedMeasure measure_density_roundtrip(const SkewDensity& rho);

/// Central log-difference estimate of the continuous part of the recovered
/// measure at z (test oracle for the round trip).
double recovered_density_at(const SkewDensity& rho, double z, double h = 1e-6);

/// Density-side inputs: a raw density function from the closed-form family,
/// optionally modulated by a two-level step on U_k (1/(2k+1), 1/(2k)) or by a
/// summable jump field at the atoms of `jump_field`.
struct RawDensity {
    std::vector<DensityPiece> pieces; // positive coefficients
    std::optional<double> oscillating_factor;
    AtomRulePtr jump_field;

    double eval(double x) const;
};

struct RawEffective {
    EffectiveIntervalSet set;
    std::vector<double> singular_points; // S(rho)
};

/// Computes S(rho), checks assumption (A) (rho vanishes a.e. on S(rho)),
/// splits the complement into effective intervals and adjoins endpoints where
/// the scale limit is finite.
RawEffective density_to_effective_intervals(const RawDensity& rho);

enum class SemimartingaleVerdict { semimartingale, not_semimartingale, unknown };

struct NuRhoSummary {
    std::vector<Atom> jump_atoms;         // truncated enumeration
    std::vector<DensityPiece> ac_density; // d(nu_rho)/dx where smooth
    bool truncated = false;
};

struct SemimartingaleReport {
    SemimartingaleVerdict verdict = SemimartingaleVerdict::unknown;
    Confidence confidence = Confidence::numeric;
    NuRhoSummary nu;
    std::string reason;
};

SemimartingaleReport semimartingale_verdict(const RawDensity& rho, const RawEffective& es);
SemimartingaleReport semimartingale_verdict(const SkewDensity& rho,
                                            const EffectiveIntervalSet& es);

} // namespace skew
