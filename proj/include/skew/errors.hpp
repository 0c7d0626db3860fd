#pragma once

#include <stdexcept>
#include <string>

namespace skew {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class AtomMagnitudeError : public Error { public: using Error::Error; };
class DuplicateAtomError : public Error { public: using Error::Error; };
class InconsistentTailCertificate : public Error { public: using Error::Error; };
class UndecidableLocalFiniteness : public Error { public: using Error::Error; };
class AtomOnBoundary : public Error { public: using Error::Error; };
class NonRadonError : public Error { public: using Error::Error; };
class OutOfInterval : public Error { public: using Error::Error; };
class NotABarrier : public Error { public: using Error::Error; };
class ConditionsNotMet : public Error { public: using Error::Error; };
class NotBoundedVariation : public Error { public: using Error::Error; };
class AssumptionAViolated : public Error { public: using Error::Error; };
class DepthOverflow : public Error { public: using Error::Error; };
class BetaOutOfRange : public Error { public: using Error::Error; };
class AtomOffGrid : public Error { public: using Error::Error; };
class StepTooCoarse : public Error { public: using Error::Error; };
class WindowTooNarrow : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };

} // namespace skew
