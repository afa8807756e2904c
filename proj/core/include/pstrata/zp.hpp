#pragma once

#include <gmpxx.h>

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "pstrata/errors.hpp"

namespace pstrata {

inline constexpr long VAL_INF = std::numeric_limits<long>::max();

// Shared arithmetic configuration: the odd prime and the working number of
// significant p-adic digits. Captured once per field tower.
class PadicContext {
public:
    PadicContext(long p, int digits);
    long p() const { return p_; }
    int digits() const { return digits_; }
    const mpz_class& pow(long k) const;  // p^k for k >= 0

private:
    long p_;
    int digits_;
    mutable std::vector<mpz_class> pows_;
};

using Ctx = std::shared_ptr<const PadicContext>;

Ctx make_context(long p, int digits);

// An element of Q_p at capped relative precision: x = p^val * unit with
// p ∤ unit and unit known modulo p^rel. Additive cancellation shortens the
// window; a value that cancels through the whole window becomes a zero
// carrying the absolute bound ν(x) >= bound (VAL_INF for the exact zero).
// All equality below means "equal to working precision".
class Zp {
public:
    Zp() = default;
    Zp(Ctx ctx, long value);
    Zp(Ctx ctx, const mpz_class& value);
    static Zp from_ratio(Ctx ctx, const mpz_class& num, const mpz_class& den);
    static Zp zero(Ctx ctx) { return Zp(std::move(ctx)); }
    static Zp one(Ctx ctx) { return Zp(std::move(ctx), 1); }

    const Ctx& ctx() const { return ctx_; }
    bool is_zero() const { return zero_; }
    bool is_exact_zero() const { return zero_ && bound_ == VAL_INF; }

    // Valuation: VAL_INF for (apparent) zero. val_bound() is the certified
    // lower bound on the valuation, finite for apparent zeros.
    long val() const { return zero_ ? VAL_INF : val_; }
    long val_bound() const { return zero_ ? bound_ : val_; }
    int rel() const { return zero_ ? 0 : rel_; }
    const mpz_class& unit() const;

    Zp operator-() const;
    Zp operator+(const Zp& o) const;
    Zp operator-(const Zp& o) const { return *this + (-o); }
    Zp operator*(const Zp& o) const;
    Zp inverse() const;
    Zp operator/(const Zp& o) const { return *this * o.inverse(); }
    Zp& operator+=(const Zp& o) { return *this = *this + o; }
    Zp& operator-=(const Zp& o) { return *this = *this - o; }
    Zp& operator*=(const Zp& o) { return *this = *this * o; }

    Zp shift(long k) const;  // multiply by p^k
    Zp pow(long n) const;

    bool equals(const Zp& o) const { return (*this - o).is_zero(); }

    // Integrality to precision and digit access.
    bool is_integral() const { return val_bound() >= 0; }
    long residue_digit() const;            // value mod p, requires val >= 0
    Zp truncate_abs(long k) const;         // canonical representative mod p^k
    mpz_class integer_rep(long k) const;   // the integer in [0, p^k) congruent to x

    // Hensel square root of a unit square (odd p). Requires even valuation
    // and a square unit residue.
    Zp sqrt() const;
    bool is_square() const;

    std::string serialize() const;  // "val:digits…" little-endian, "inf:" for zero
    static Zp deserialize(Ctx ctx, const std::string& s);
    std::string str() const;  // human-readable

private:
    explicit Zp(Ctx ctx) : ctx_(std::move(ctx)), zero_(true), bound_(VAL_INF) {}
    void normalize(long abs_prec);

    Ctx ctx_;
    bool zero_ = true;
    long val_ = 0;
    long bound_ = VAL_INF;  // for zero: certified ν >= bound
    int rel_ = 0;
    mpz_class unit_;
};

}  // namespace pstrata
