#pragma once

#include <utility>
#include <vector>

#include "pstrata/errors.hpp"

namespace pstrata {

// Dense univariate polynomials over any exact coefficient type providing
// ring ops, is_zero(), inverse(), and the free helpers ring_zero/ring_one/
// ring_from_int(proto, n). A polynomial always keeps at least one
// coefficient so a prototype element is available.
template <class T>
class Poly {
public:
    Poly() = default;  // empty placeholder; assign before use
    explicit Poly(std::vector<T> coeffs) : c_(std::move(coeffs)) { trim(); }
    static Poly zero(const T& proto) { return Poly(std::vector<T>{ring_zero(proto)}); }
    static Poly constant(const T& v) { return Poly(std::vector<T>{v}); }
    static Poly x_power(const T& proto, int n) {
        std::vector<T> c(static_cast<size_t>(n) + 1, ring_zero(proto));
        c.back() = ring_one(proto);
        return Poly(std::move(c));
    }

    int deg() const {  // -1 for the zero polynomial
        for (int i = static_cast<int>(c_.size()) - 1; i >= 0; --i)
            if (!c_[i].is_zero()) return i;
        return -1;
    }
    bool is_empty() const { return c_.empty(); }
    bool is_zero() const { return deg() < 0; }
    const T& operator[](int i) const { return c_[static_cast<size_t>(i)]; }
    T coeff(int i) const {
        return i >= 0 && i < static_cast<int>(c_.size()) ? c_[static_cast<size_t>(i)]
                                                         : ring_zero(proto());
    }
    const T& proto() const { return c_[0]; }
    const std::vector<T>& coeffs() const { return c_; }
    T lead() const {
        int d = deg();
        require(d >= 0, Err::BadInput, "leading coefficient of zero polynomial");
        return c_[static_cast<size_t>(d)];
    }
    bool is_monic() const { return deg() >= 0 && (lead() - ring_one(proto())).is_zero(); }

    Poly operator+(const Poly& o) const {
        std::vector<T> r(std::max(c_.size(), o.c_.size()), ring_zero(proto()));
        for (size_t i = 0; i < r.size(); ++i) {
            if (i < c_.size()) r[i] = r[i] + c_[i];
            if (i < o.c_.size()) r[i] = r[i] + o.c_[i];
        }
        return Poly(std::move(r));
    }
    Poly operator-() const {
        std::vector<T> r = c_;
        for (auto& x : r) x = -x;
        return Poly(std::move(r));
    }
    Poly operator-(const Poly& o) const { return *this + (-o); }
    Poly operator*(const Poly& o) const {
        if (is_zero() || o.is_zero()) return zero(proto());
        std::vector<T> r(c_.size() + o.c_.size() - 1, ring_zero(proto()));
        for (size_t i = 0; i < c_.size(); ++i) {
            if (c_[i].is_zero()) continue;
            for (size_t j = 0; j < o.c_.size(); ++j) r[i + j] = r[i + j] + c_[i] * o.c_[j];
        }
        return Poly(std::move(r));
    }
    Poly scaled(const T& s) const {
        std::vector<T> r = c_;
        for (auto& x : r) x = x * s;
        return Poly(std::move(r));
    }
    Poly monic() const { return scaled(lead().inverse()); }

    // Division with remainder; the divisor's leading coefficient must be
    // invertible.
    std::pair<Poly, Poly> divmod(const Poly& d) const {
        require(!d.is_zero(), Err::DivisionByZero, "polynomial division by zero");
        Poly q = zero(proto()), r = *this;
        T dlinv = d.lead().inverse();
        int dd = d.deg();
        while (!r.is_zero() && r.deg() >= dd) {
            int k = r.deg() - dd;
            T f = r.lead() * dlinv;
            Poly t = x_power(proto(), k).scaled(f);
            q = q + t;
            r = r - t * d;
            // guard against a non-shrinking remainder at exhausted precision
            if (!r.is_zero() && r.deg() >= dd + k + 1)
                fail(Err::PrecisionExhausted, "polynomial division stalled");
        }
        return {q, r};
    }
    Poly operator%(const Poly& d) const { return divmod(d).second; }
    Poly operator/(const Poly& d) const { return divmod(d).first; }

    T eval(const T& x) const {
        T acc = ring_zero(proto());
        for (int i = static_cast<int>(c_.size()) - 1; i >= 0; --i) acc = acc * x + c_[i];
        return acc;
    }
    // Evaluation in any algebra over the coefficients (e.g. matrices).
    template <class A>
    A eval_in(const A& x, const A& algebra_one) const {
        A acc = algebra_one - algebra_one;  // zero of the algebra
        for (int i = static_cast<int>(c_.size()) - 1; i >= 0; --i)
            acc = acc * x + algebra_one * c_[i];
        return acc;
    }

    Poly derivative() const {
        if (deg() <= 0) return zero(proto());
        std::vector<T> r(c_.size() - 1, ring_zero(proto()));
        for (size_t i = 1; i < c_.size(); ++i) r[i - 1] = c_[i] * ring_from_int(proto(), static_cast<long>(i));
        return Poly(std::move(r));
    }

    Poly shift_compose_neg() const {  // f(-X)
        std::vector<T> r = c_;
        for (size_t i = 1; i < r.size(); i += 2) r[i] = -r[i];
        return Poly(std::move(r));
    }

    bool equals(const Poly& o) const { return (*this - o).is_zero(); }

private:
    void trim() {
        require(!c_.empty(), Err::BadInput, "empty polynomial");
        while (c_.size() > 1 && c_.back().is_zero()) c_.pop_back();
    }
    std::vector<T> c_;
};

template <class T>
Poly<T> poly_gcd(Poly<T> a, Poly<T> b) {
    while (!b.is_zero()) {
        Poly<T> r = a % b.monic();
        a = b;
        b = r;
    }
    return a.is_zero() ? a : a.monic();
}

// Extended gcd: returns (g, u, v) monic with u a + v b = g.
template <class T>
struct XgcdResult {
    Poly<T> g, u, v;
};

template <class T>
XgcdResult<T> poly_xgcd(const Poly<T>& a, const Poly<T>& b) {
    Poly<T> r0 = a, r1 = b;
    Poly<T> u0 = Poly<T>::constant(ring_one(a.proto())), u1 = Poly<T>::zero(a.proto());
    Poly<T> v0 = Poly<T>::zero(a.proto()), v1 = Poly<T>::constant(ring_one(a.proto()));
    while (!r1.is_zero()) {
        auto [q, r] = r0.divmod(r1);
        r0 = r1;
        r1 = r;
        Poly<T> u2 = u0 - q * u1, v2 = v0 - q * v1;
        u0 = u1;
        u1 = u2;
        v0 = v1;
        v1 = v2;
    }
    if (r0.is_zero()) return {r0, u0, v0};
    T s = r0.lead().inverse();
    return {r0.scaled(s), u0.scaled(s), v0.scaled(s)};
}

}  // namespace pstrata
