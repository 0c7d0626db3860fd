#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "skew/errors.hpp"

namespace skew {

/// How a numeric verdict was obtained. Certified values come from closed-form
/// analysis or exact summation; numeric values come from quadrature,
/// truncation or sampling heuristics. Combining verdicts keeps the weaker flag.
enum class Confidence { certified, numeric };

inline Confidence weaker(Confidence a, Confidence b) {
    return (a == Confidence::numeric || b == Confidence::numeric)
               ? Confidence::numeric
               : Confidence::certified;
}

inline const char* to_string(Confidence c) {
    return c == Confidence::certified ? "certified" : "numeric";
}

/// A nonnegative quantity that may be finite, infinite or undecided.
/// Used for masses and improper integrals.
class ExtendedReal {
public:
    enum class Kind { finite, infinite, unknown };

    ExtendedReal() : kind_(Kind::unknown), value_(0), conf_(Confidence::numeric) {}

    static ExtendedReal finite(double v, Confidence c = Confidence::certified) {
        ExtendedReal r;
        r.kind_ = Kind::finite;
        r.value_ = v;
        r.conf_ = c;
        return r;
    }
    static ExtendedReal infinite(Confidence c = Confidence::certified) {
        ExtendedReal r;
        r.kind_ = Kind::infinite;
        r.value_ = std::numeric_limits<double>::infinity();
        r.conf_ = c;
        return r;
    }
    static ExtendedReal unknown() { return ExtendedReal(); }

    Kind kind() const { return kind_; }
    bool is_finite() const { return kind_ == Kind::finite; }
    bool is_infinite() const { return kind_ == Kind::infinite; }
    bool is_unknown() const { return kind_ == Kind::unknown; }
    Confidence confidence() const { return conf_; }

    /// Finite value; calling on a non-finite quantity is a logic error.
    double value() const {
        if (kind_ != Kind::finite)
            throw Error("ExtendedReal::value() on non-finite quantity");
        return value_;
    }

    ExtendedReal with_confidence(Confidence c) const {
        ExtendedReal r = *this;
        r.conf_ = c;
        return r;
    }

    friend ExtendedReal operator+(const ExtendedReal& a, const ExtendedReal& b) {
        Confidence c = weaker(a.conf_, b.conf_);
        if (a.is_infinite() || b.is_infinite()) {
            // an already-certified infinity survives an unknown summand
            if (a.is_infinite() && (b.is_infinite() || b.is_finite()))
                return infinite(c);
            if (b.is_infinite() && a.is_finite()) return infinite(c);
            return infinite(Confidence::numeric);
        }
        if (a.is_unknown() || b.is_unknown()) return unknown();
        return finite(a.value_ + b.value_, c);
    }

    ExtendedReal& operator+=(const ExtendedReal& other) {
        *this = *this + other;
        return *this;
    }

    std::string describe() const {
        switch (kind_) {
        case Kind::finite: return std::to_string(value_);
        case Kind::infinite: return "inf";
        default: return "unknown";
        }
    }

private:
    Kind kind_;
    double value_;
    Confidence conf_;
};

/// Three-valued verdict with provenance.
struct Verdict {
    enum class State { yes, no, unknown };
    State state = State::unknown;
    Confidence confidence = Confidence::numeric;

    static Verdict yes(Confidence c = Confidence::certified) { return {State::yes, c}; }
    static Verdict no(Confidence c = Confidence::certified) { return {State::no, c}; }
    static Verdict unknown() { return {State::unknown, Confidence::numeric}; }

    bool is_yes() const { return state == State::yes; }
    bool is_no() const { return state == State::no; }
    bool is_unknown() const { return state == State::unknown; }

    const char* str() const {
        switch (state) {
        case State::yes: return "true";
        case State::no: return "false";
        default: return "unknown";
        }
    }
};

/// Conjunction: no dominates, unknown degrades, confidence is the weakest seen.
inline Verdict operator&&(const Verdict& a, const Verdict& b) {
    Confidence c = weaker(a.confidence, b.confidence);
    if (a.is_no() || b.is_no()) return Verdict::no(c);
    if (a.is_unknown() || b.is_unknown()) return Verdict::unknown();
    return Verdict::yes(c);
}

inline bool definitely_finite(const ExtendedReal& x) { return x.is_finite(); }
inline bool definitely_infinite(const ExtendedReal& x) { return x.is_infinite(); }

} // namespace skew
