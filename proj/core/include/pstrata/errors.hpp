#pragma once

#include <stdexcept>
#include <string>

namespace pstrata {

// Every failure mode the library reports. CLI exit codes map onto the
// coarse classes: input/schema (2), unsupported (3), undecided (4),
// refuted or failed verification (5).
enum class Err {
    EvenPrime,
    TagMismatch,
    BadInvolution,
    PrecisionExhausted,
    DivisionByZero,
    NotCoprime,
    NotIntegral,
    WildExtension,
    SingularBasis,
    PeriodMismatch,
    BadBlock,
    NotSelfAdjoint,
    ContextMismatch,
    UnsupportedContext,
    DegenerateTracePairing,
    CaseHypothesisFailed,
    NonConvergence,
    HypothesisFailed,
    CosetNotInvariant,
    NotSkew,
    NotApproxIdempotent,
    InvalidStratum,
    WrongShape,
    NotPrimary,
    NotSplittable,
    NotEquivalentAtLevel,
    WildOrInseparable,
    NormalizationFailed,
    NotIntertwining,
    ConditionFails,
    NoConjugator,
    BlockFormsNotIsometric,
    NotEquivalent,
    BadDefiningSequence,
    Undecided,
    BadInput,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
public:
    Error(Err code, const std::string& what)
        : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}
    Err code() const { return code_; }

private:
    Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Err code, const std::string& what) {
    if (!ok) fail(code, what);
}

}  // namespace pstrata
