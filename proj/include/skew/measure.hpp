#pragma once

#include <memory>
#include <string>
#include <vector>

#include "skew/expr.hpp"
#include "skew/extended.hpp"

namespace skew {

struct Atom {
    double pos;
    double weight; // mu({pos}), in [-1, 1]
};

enum class MassKind { total, plus, minus };

/// One absolutely continuous piece of mu, supported on an open interval.
/// The coefficient sign of `expr` is the sign of the piece.
struct DensityPiece {
    Interval iv;
    Expr expr;
    bool positive() const { return expr.c > 0; }
};

/// Classification of the one-sided limit of a profile factor.
enum class LimitClass { positive, zero, diverges, oscillates, undecided };

/// Facts about the multiplicative factor contributed by a countable atom
/// family toward its accumulation point, normalized to 1 at `ref`.
struct RuleSideFacts {
    LimitClass limit = LimitClass::positive;
    double limit_value = 1.0; // when limit == positive
    Verdict bounded_variation = Verdict::unknown();
    ExtendedReal integral_factor;     // integral of the factor over (ref, acc) or (acc, ref)
    ExtendedReal integral_inv_factor; // integral of 1/factor
    ExtendedReal variation;           // total variation on the half, boundary jump excluded
};

struct AccumulationPoint {
    double pos;
    bool from_left;      // atoms approach pos from below
    bool plus_infinite;  // mu+ of every one-sided neighborhood is infinite
    bool minus_infinite; // same for mu-
};

enum class TailCertificate { summable, divergent };

class CantorRule;

/// A closed-form countable atom family. Implementations must answer mass and
/// limit questions analytically; enumeration is only used for products and
/// reporting.
class AtomRule {
public:
    virtual ~AtomRule() = default;
    virtual std::string name() const = 0;
    virtual std::string params() const = 0;
    virtual TailCertificate certificate() const = 0;

    /// Appends atoms with pos in (lo, hi]. `tail_tol` bounds the total
    /// |log factor| of omitted atoms (0 means the enumeration is complete);
    /// the implementation reports the bound actually achieved.
    virtual void append_atoms(double lo, double hi, double tail_tol,
                              std::vector<Atom>& out,
                              double& omitted_log_bound) const = 0;

    virtual double atom_at(double z) const = 0;
    virtual std::vector<AccumulationPoint> accumulation_points() const = 0;

    /// Position separating the first `max_atoms` of the family from the tail
    /// toward its divergent accumulation point; NaN when not applicable.
    virtual double tail_start(size_t /*max_atoms*/) const {
        return std::numeric_limits<double>::quiet_NaN();
    }

    /// mu-mass of the half-open interval (lo, hi].
    virtual ExtendedReal mass(double lo, double hi, MassKind kind) const = 0;

    /// Facts toward the accumulation point `acc` when approached across the
    /// family, with the factor normalized at `ref` (same side as the atoms).
    virtual RuleSideFacts side_facts(double acc, double ref) const = 0;

    /// Partial sums of |weights| up to n terms, for certificate validation.
    virtual double partial_abs_sum(size_t n) const = 0;

    virtual const CantorRule* as_cantor() const { return nullptr; }
};

using AtomRulePtr = std::shared_ptr<const AtomRule>;

/// Interleaved atoms at -1/(2k) (weight > 0) and -1/(2k+1) (weight < 0),
/// k >= 1, accumulating at 0 with divergent one-sided mass.
/// Two weight families are provided:
///   harmonic:      w+_k = w-_k = k/(k+2); the profile oscillates and has no
///                  one-sided limit at 0.
///   power(alpha):  weights chosen so the profile is ((k+1)/k^2)^alpha resp.
///                  (k+1)^-alpha on consecutive pieces; the profile tends to 0
///                  and is of bounded variation near 0.
AtomRulePtr make_cluster_harmonic();
AtomRulePtr make_cluster_power(double alpha);

/// Atoms at an enumeration of the rationals in (0,1) and (-1,0) with weights
/// +w0*2^-n and -w0*2^-n; summable, so the measure is Radon on R.
AtomRulePtr make_dense_rational(double w0);

struct SignedMeasureSpec {
    std::vector<Atom> atoms;
    std::vector<AtomRulePtr> atom_rules;
    std::vector<DensityPiece> density_pieces;
    std::vector<Interval> declared_infinite_regions;
};

/// A validated signed measure: atoms sorted, unit-atom sets materialized,
/// sign structure checked. Immutable after construction.
class CheckedMeasure {
public:
    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<AtomRulePtr>& rules() const { return rules_; }
    const std::vector<DensityPiece>& density_pieces() const { return pieces_; }
    const std::vector<Interval>& declared_infinite_regions() const { return regions_; }

    const std::vector<double>& xi_plus() const { return xi_plus_; }
    const std::vector<double>& xi_minus() const { return xi_minus_; }

    /// mu({z}); 0 when no atom sits at z.
    double atom_at(double z) const;

    /// Signed continuous-part mass mu_c((from, to]) inside a region free of
    /// density singularities; exact via antiderivatives.
    double continuous_mass_signed(double from, double to) const;

    /// One-signed continuous mass over (from, to], plus or minus part.
    double continuous_mass_part(double from, double to, bool plus) const;

    const CantorRule* cantor() const;

    friend CheckedMeasure validate_measure(const SignedMeasureSpec& spec);

private:
    std::vector<Atom> atoms_; // sorted by pos
    std::vector<AtomRulePtr> rules_;
    std::vector<DensityPiece> pieces_;
    std::vector<Interval> regions_;
    std::vector<double> xi_plus_, xi_minus_;
};

/// Checks assumption (M0)-style constraints: |mu({z})| <= 1 for all atoms,
/// distinct locations, single-signed pieces, consistent tail certificates.
CheckedMeasure validate_measure(const SignedMeasureSpec& spec);

/// |mu|, mu+ or mu- of the half-open interval (lo, hi], as a finite value,
/// a certified infinity, or unknown.
ExtendedReal mass_on_interval(const CheckedMeasure& m, double lo, double hi,
                              MassKind kind = MassKind::total);

struct GInterval {
    double lo;
    double hi;
    double ref; // reference point e_n: midpoint, finite endpoint +/- 1, or 0 on R
};

struct IntervalDecomposition {
    std::vector<GInterval> intervals; // ordered, disjoint, open
    bool truncated = false;           // true when countably many more intervals exist
    std::string complement_description;
};

double choose_reference_point(double lo, double hi);

/// G = { z : |mu| is finite on some neighborhood of z }, decomposed into
/// ordered open intervals with reference points. Computed from generator
/// metadata, never by sampling.
IntervalDecomposition locally_finite_decomposition(const CheckedMeasure& m);

} // namespace skew
