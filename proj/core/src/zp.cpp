#include "pstrata/zp.hpp"

#include <algorithm>
#include <sstream>

namespace pstrata {

const char* err_name(Err e) {
    switch (e) {
        case Err::EvenPrime: return "EvenPrime";
        case Err::TagMismatch: return "TagMismatch";
        case Err::BadInvolution: return "BadInvolution";
        case Err::PrecisionExhausted: return "PrecisionExhausted";
        case Err::DivisionByZero: return "DivisionByZero";
        case Err::NotCoprime: return "NotCoprime";
        case Err::NotIntegral: return "NotIntegral";
        case Err::WildExtension: return "WildExtension";
        case Err::SingularBasis: return "SingularBasis";
        case Err::PeriodMismatch: return "PeriodMismatch";
        case Err::BadBlock: return "BadBlock";
        case Err::NotSelfAdjoint: return "NotSelfAdjoint";
        case Err::ContextMismatch: return "ContextMismatch";
        case Err::UnsupportedContext: return "UnsupportedContext";
        case Err::DegenerateTracePairing: return "DegenerateTracePairing";
        case Err::CaseHypothesisFailed: return "CaseHypothesisFailed";
        case Err::NonConvergence: return "NonConvergence";
        case Err::HypothesisFailed: return "HypothesisFailed";
        case Err::CosetNotInvariant: return "CosetNotInvariant";
        case Err::NotSkew: return "NotSkew";
        case Err::NotApproxIdempotent: return "NotApproxIdempotent";
        case Err::InvalidStratum: return "InvalidStratum";
        case Err::WrongShape: return "WrongShape";
        case Err::NotPrimary: return "NotPrimary";
        case Err::NotSplittable: return "NotSplittable";
        case Err::NotEquivalentAtLevel: return "NotEquivalentAtLevel";
        case Err::WildOrInseparable: return "WildOrInseparable";
        case Err::NormalizationFailed: return "NormalizationFailed";
        case Err::NotIntertwining: return "NotIntertwining";
        case Err::ConditionFails: return "ConditionFails";
        case Err::NoConjugator: return "NoConjugator";
        case Err::BlockFormsNotIsometric: return "BlockFormsNotIsometric";
        case Err::NotEquivalent: return "NotEquivalent";
        case Err::BadDefiningSequence: return "BadDefiningSequence";
        case Err::Undecided: return "Undecided";
        case Err::BadInput: return "BadInput";
    }
    return "UnknownError";
}

PadicContext::PadicContext(long p, int digits) : p_(p), digits_(digits) {
    require(p >= 3 && p % 2 == 1, Err::EvenPrime, "residual characteristic must be odd");
    require(digits >= 4, Err::BadInput, "precision must be at least 4 digits");
    pows_.emplace_back(1);
    pows_.emplace_back(p);
}

const mpz_class& PadicContext::pow(long k) const {
    require(k >= 0, Err::BadInput, "negative power of p requested");
    while (static_cast<long>(pows_.size()) <= k) pows_.push_back(pows_.back() * p_);
    return pows_[static_cast<size_t>(k)];
}

Ctx make_context(long p, int digits) { return std::make_shared<PadicContext>(p, digits); }

Zp::Zp(Ctx ctx, long value) : Zp(std::move(ctx), mpz_class(value)) {}

Zp::Zp(Ctx ctx, const mpz_class& value) : ctx_(std::move(ctx)) {
    if (value == 0) {
        zero_ = true;
        bound_ = VAL_INF;
        return;
    }
    zero_ = false;
    rel_ = ctx_->digits();
    unit_ = value;
    val_ = 0;
    while (mpz_divisible_ui_p(unit_.get_mpz_t(), ctx_->p())) {
        unit_ /= ctx_->p();
        ++val_;
    }
    unit_ = unit_ % ctx_->pow(rel_);
    if (unit_ < 0) unit_ += ctx_->pow(rel_);
}

Zp Zp::from_ratio(Ctx ctx, const mpz_class& num, const mpz_class& den) {
    require(den != 0, Err::DivisionByZero, "zero denominator");
    Zp n(ctx, num), d(ctx, den);
    if (n.is_zero()) return n;
    return n * d.inverse();
}

const mpz_class& Zp::unit() const {
    require(!zero_, Err::PrecisionExhausted, "unit part of a zero value");
    return unit_;
}

void Zp::normalize(long abs_prec) {
    // unit_ currently holds an integer congruent to x / p^val_; the value is
    // certified modulo p^(abs_prec - val_).
    long window = abs_prec == VAL_INF ? ctx_->digits() : abs_prec - val_;
    if (window <= 0) {
        zero_ = true;
        bound_ = abs_prec;
        return;
    }
    window = std::min<long>(window, ctx_->digits());
    mpz_class m = ctx_->pow(window);
    unit_ %= m;
    if (unit_ < 0) unit_ += m;
    if (unit_ == 0) {
        zero_ = true;
        bound_ = (abs_prec == VAL_INF) ? val_ + window : abs_prec;
        return;
    }
    long shift = 0;
    while (mpz_divisible_ui_p(unit_.get_mpz_t(), ctx_->p())) {
        unit_ /= ctx_->p();
        ++shift;
    }
    val_ += shift;
    rel_ = static_cast<int>(window - shift);
    zero_ = false;
    unit_ %= ctx_->pow(rel_);
}

Zp Zp::operator-() const {
    if (zero_) return *this;
    Zp r = *this;
    r.unit_ = ctx_->pow(rel_) - unit_;
    return r;
}

Zp Zp::operator+(const Zp& o) const {
    if (zero_ && o.zero_) {
        Zp r(ctx_ ? ctx_ : o.ctx_);
        r.bound_ = std::min(bound_, o.bound_);
        return r;
    }
    if (zero_) return o + *this;
    if (o.zero_) {
        // adding an apparent zero truncates the certified window
        Zp r = *this;
        if (o.bound_ == VAL_INF) return r;
        r.normalize(std::min(val_ + rel_, o.bound_));
        return r;
    }
    long v = std::min(val_, o.val_);
    long abs = std::min(val_ + rel_, o.val_ + o.rel_);
    Zp r(ctx_);
    r.zero_ = false;
    r.val_ = v;
    r.unit_ = unit_ * ctx_->pow(val_ - v) + o.unit_ * ctx_->pow(o.val_ - v);
    r.normalize(abs);
    return r;
}

Zp Zp::operator*(const Zp& o) const {
    if (zero_ || o.zero_) {
        Zp r(ctx_ ? ctx_ : o.ctx_);
        long b1 = val_bound(), b2 = o.val_bound();
        r.bound_ = (b1 == VAL_INF || b2 == VAL_INF) ? VAL_INF : b1 + b2;
        return r;
    }
    Zp r(ctx_);
    r.zero_ = false;
    r.val_ = val_ + o.val_;
    r.rel_ = std::min(rel_, o.rel_);
    r.unit_ = (unit_ * o.unit_) % ctx_->pow(r.rel_);
    return r;
}

Zp Zp::inverse() const {
    if (zero_) {
        if (is_exact_zero()) fail(Err::DivisionByZero, "inverse of zero");
        fail(Err::PrecisionExhausted, "inverse of a value that is zero to precision");
    }
    Zp r(ctx_);
    r.zero_ = false;
    r.val_ = -val_;
    r.rel_ = rel_;
    mpz_class m = ctx_->pow(rel_);
    mpz_invert(r.unit_.get_mpz_t(), unit_.get_mpz_t(), m.get_mpz_t());
    return r;
}

Zp Zp::shift(long k) const {
    if (zero_) {
        Zp r = *this;
        if (r.bound_ != VAL_INF) r.bound_ += k;
        return r;
    }
    Zp r = *this;
    r.val_ += k;
    return r;
}

Zp Zp::pow(long n) const {
    if (n == 0) return Zp(ctx_, 1);
    if (n < 0) return inverse().pow(-n);
    Zp acc(ctx_, 1), base = *this;
    long e = n;
    while (e > 0) {
        if (e & 1) acc *= base;
        base *= base;
        e >>= 1;
    }
    return acc;
}

long Zp::residue_digit() const {
    long b = val_bound();
    require(b >= 0 || zero_, Err::PrecisionExhausted, "residue of a non-integral value");
    if (zero_) {
        require(bound_ >= 1, Err::PrecisionExhausted, "residue needs one certified digit");
        return 0;
    }
    require(val_ >= 0, Err::NotIntegral, "residue of a non-integral value");
    if (val_ > 0) return 0;
    return mpz_class(unit_ % ctx_->p()).get_si();
}

mpz_class Zp::integer_rep(long k) const {
    require(k >= 0, Err::BadInput, "negative window");
    if (zero_) {
        require(bound_ >= k, Err::PrecisionExhausted, "window exceeds certified bound");
        return 0;
    }
    require(val_ >= 0, Err::NotIntegral, "integer representative of a non-integral value");
    require(val_ + rel_ >= k, Err::PrecisionExhausted, "window exceeds certified digits");
    if (val_ >= k) return 0;
    return (unit_ * ctx_->pow(val_)) % ctx_->pow(k);
}

Zp Zp::truncate_abs(long k) const {
    if (zero_ || val_ >= k) {
        Zp r(ctx_);
        r.bound_ = VAL_INF;
        return r;
    }
    return Zp(ctx_, integer_rep(k));
}

bool Zp::is_square() const {
    if (zero_) return true;
    if (val_ % 2 != 0) return false;
    mpz_class r;
    mpz_class p(ctx_->p());
    mpz_powm(r.get_mpz_t(), unit_.get_mpz_t(), mpz_class((ctx_->p() - 1) / 2).get_mpz_t(),
             p.get_mpz_t());
    return r == 1;
}

Zp Zp::sqrt() const {
    if (zero_) return *this;
    require(val_ % 2 == 0, Err::BadInput, "square root of odd valuation");
    require(is_square(), Err::BadInput, "square root of a non-square unit");
    // Hensel: find s mod p then refine s <- s - (s^2-u)/(2s) at full window.
    long p = ctx_->p();
    long s0 = 0;
    long u0 = mpz_class(unit_ % p).get_si();
    for (long t = 1; t < p; ++t)
        if ((t * t) % p == u0) {
            s0 = t;
            break;
        }
    mpz_class s(s0);
    const mpz_class& m = ctx_->pow(rel_);
    for (int i = 0; i < 64 && (1L << std::min(i, 30)) < 2 * rel_; ++i) {
        mpz_class inv2s;
        mpz_class twos = 2 * s;
        mpz_invert(inv2s.get_mpz_t(), twos.get_mpz_t(), m.get_mpz_t());
        s = (s - (s * s - unit_) * inv2s) % m;
        if (s < 0) s += m;
        if (mpz_class((s * s - unit_) % m) == 0) break;
    }
    Zp r(ctx_);
    r.zero_ = false;
    r.val_ = val_ / 2;
    r.rel_ = rel_;
    r.unit_ = s;
    return r;
}

std::string Zp::serialize() const {
    if (zero_) return "inf:";
    std::ostringstream os;
    os << val_ << ":";
    mpz_class u = unit_;
    for (int i = 0; i < rel_; ++i) {
        os << (i ? "," : "") << mpz_class(u % ctx_->p()).get_si();
        u /= ctx_->p();
    }
    return os.str();
}

Zp Zp::deserialize(Ctx ctx, const std::string& s) {
    auto colon = s.find(':');
    require(colon != std::string::npos, Err::BadInput, "element string needs 'val:digits'");
    std::string head = s.substr(0, colon), tail = s.substr(colon + 1);
    if (head == "inf") return Zp::zero(ctx);
    long v = std::stol(head);
    mpz_class u = 0, scale = 1;
    std::istringstream is(tail);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        if (tok.empty()) continue;
        u += mpz_class(std::stol(tok)) * scale;
        scale *= ctx->p();
    }
    require(u != 0, Err::BadInput, "finite valuation with zero digits");
    Zp r(ctx, u);
    r.val_ += v;
    return r;
}

std::string Zp::str() const {
    if (is_exact_zero()) return "0";
    if (zero_) return "O(p^" + std::to_string(bound_) + ")";
    std::ostringstream os;
    os << unit_;
    if (val_ != 0) os << "*p^" << val_;
    return os.str();
}

}  // namespace pstrata
