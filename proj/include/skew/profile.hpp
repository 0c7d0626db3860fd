#pragma once

#include <optional>
#include <vector>

#include "skew/measure.hpp"

namespace skew {

enum class Side { right, left };

struct EndpointLimit {
    LimitClass cls = LimitClass::positive;
    double value = 1.0; // when cls == positive
    Confidence confidence = Confidence::certified;
};

enum class BvClass { bv, not_bv, unknown };

struct BvCertificate {
    BvClass cls = BvClass::unknown;
    ExtendedReal total_variation; // on the closed half, boundary jump excluded
    Confidence confidence = Confidence::numeric;
};

/// A_n, B_n and friends for one interval of G.
struct IntervalStats {
    ExtendedReal A;  // integral of rho over the interval
    ExtendedReal B;  // integral of 1/rho
    ExtendedReal Bl; // integral of 1/rho over (a, e)
    ExtendedReal Br; // integral of 1/rho over (e, b)
    ExtendedReal V;  // total variation of the canonical closed version
};

/// The normalized density profile on one interval (a,b) of G:
///   log rho(z) = 2 (F(z) - F(e)) + sum of atom log-factors between e and z,
/// where F is the antiderivative of the continuous part and each atom at y
/// contributes log((1 + mu_y)/(1 - mu_y)). rho(e) = 1; the plus/minus parts
/// use mu+ resp. mu- alone and satisfy rho = rho+ / rho-.
class DensityProfile {
public:
    DensityProfile(const CheckedMeasure& m, const GInterval& iv,
                   double eps_prod = 1e-12);

    double a() const { return a_; }
    double b() const { return b_; }
    double e() const { return e_; }

    double eval(double z, Side side = Side::right) const;
    double log_eval(double z, Side side = Side::right) const;
    double eval_part(double z, bool plus_part, Side side = Side::right) const;

    /// mu weight of the atom at z (0 off atoms), interior only.
    double atom_weight(double z) const;
    /// interior atoms (explicit and materialized rule atoms), sorted
    const std::vector<Atom>& interior_atoms() const { return atoms_; }

    /// mu-half masses: left half (a, e], right half [e, b).
    ExtendedReal half_mass(bool right_half, MassKind kind) const;

    EndpointLimit endpoint_limit(bool at_b) const;
    BvCertificate bv_certificate(bool right_half) const;

    /// integral of rho (inverse=false) or 1/rho over the open half.
    ExtendedReal half_integral(bool right_half, bool inverse) const;

    IntervalStats integral_stats() const;

    /// integral of rho^{+/-1} over [z1, z2] strictly inside (a, b).
    double integral_inside(double z1, double z2, bool inverse) const;

    /// variation of rho on [z1, z2] strictly inside (a, b).
    double variation_inside(double z1, double z2) const;

    double eps_prod() const { return eps_prod_; }

private:
    struct EndBehavior {
        enum class Kind {
            bounded_positive,
            power,       // log rho ~ gamma log|z-end| (finite end) / gamma log|z| (inf end)
            exp_to_zero, // log rho -> -inf faster than any log
            exp_to_inf,
            rule_driven,
            indeterminate
        };
        Kind kind = Kind::indeterminate;
        double gamma = 0;
        double limit_value = 1;
        Confidence conf = Confidence::numeric;
        RuleSideFacts rule;
        double rule_ref = 0;  // where the rule factor is normalized
        double rule_norm = 1; // rho(rule_ref)
    };
    const EndBehavior& end_behavior(bool at_b) const;
    EndBehavior analyze_end(bool at_b) const;

    double log_atom_sum(double lo, double hi, bool incl_lo, bool incl_hi,
                        int part) const; // part: 0 signed, +1 plus, -1 minus
    double cont_log(double z, int part) const; // 2(F(z) - F(e)) for the part
    double segment_integral(double z1, double z2, bool inverse) const;

    double a_, b_, e_;
    double eps_prod_;
    std::vector<Atom> atoms_;          // interior atoms, sorted by pos
    std::vector<double> log_f_;        // per-atom signed log factor
    std::vector<double> prefix_, prefix_plus_, prefix_minus_;
    std::vector<DensityPiece> pieces_; // clipped to (a,b)
    std::vector<AtomRulePtr> end_rules_[2]; // rules accumulating at a / at b
    ExtendedReal half_mass_[2][3];
    mutable std::optional<EndBehavior> end_cache_[2];
};

/// Spec-facing constructor name; validates Radon-ness and interior atoms.
DensityProfile build_profile(const CheckedMeasure& m, const GInterval& iv,
                             double eps_prod = 1e-12);

double eval_density(const DensityProfile& p, double z, Side side);
EndpointLimit endpoint_limit(const DensityProfile& p, bool at_b);
BvCertificate bv_certificate(const DensityProfile& p, bool right_half);
IntervalStats integral_stats(const DensityProfile& p);

} // namespace skew
