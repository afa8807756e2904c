#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "pstrata/errors.hpp"
#include "pstrata/poly.hpp"
#include "pstrata/zp.hpp"

namespace pstrata {

class ResidueField;
using RF = std::shared_ptr<const ResidueField>;

// κ = F_{p^f}, presented by F_p-structure constants on a fixed basis (the
// residues of the tower's unramified basis monomials).
class ResidueField : public std::enable_shared_from_this<ResidueField> {
public:
    // Prime field F_p.
    static RF prime_field(long p);
    // General field from structure constants: table[i][j] = coordinates of
    // b_i * b_j. Index 0 must be the unit.
    static RF make(long p, std::vector<std::vector<std::vector<long>>> table);

    long p() const { return p_; }
    int f() const { return f_; }
    long q() const { return q_; }
    const std::vector<long>& mult(int i, int j) const { return table_[static_cast<size_t>(i)][static_cast<size_t>(j)]; }

private:
    long p_;
    int f_;
    long q_;
    std::vector<std::vector<std::vector<long>>> table_;
};

class ResidueElement {
public:
    ResidueElement() = default;
    ResidueElement(RF k, std::vector<long> coords);
    static ResidueElement from_int(const RF& k, long v);
    static ResidueElement zero(const RF& k) { return from_int(k, 0); }
    static ResidueElement one(const RF& k) { return from_int(k, 1); }

    const RF& field() const { return k_; }
    const std::vector<long>& coords() const { return c_; }
    bool is_zero() const;
    bool equals(const ResidueElement& o) const { return (*this - o).is_zero(); }

    ResidueElement operator+(const ResidueElement& o) const;
    ResidueElement operator-() const;
    ResidueElement operator-(const ResidueElement& o) const { return *this + (-o); }
    ResidueElement operator*(const ResidueElement& o) const;
    ResidueElement inverse() const;
    ResidueElement pow(long n) const;
    ResidueElement frobenius(int iterations = 1) const { return pow_q_power(iterations); }

    // x^(p^i)
    ResidueElement pow_q_power(int i) const;
    bool is_square() const;
    ResidueElement sqrt() const;  // brute force; q is small by construction

    long encode() const;  // index in [0, q): mixed-radix coordinates
    static ResidueElement decode(const RF& k, long code);

    std::string str() const;

private:
    RF k_;
    std::vector<long> c_;
};

inline ResidueElement ring_zero(const ResidueElement& proto) { return ResidueElement::zero(proto.field()); }
inline ResidueElement ring_one(const ResidueElement& proto) { return ResidueElement::one(proto.field()); }
inline ResidueElement ring_from_int(const ResidueElement& proto, long n) {
    return ResidueElement::from_int(proto.field(), n);
}
inline long pivot_weight(const ResidueElement& x) { return x.is_zero() ? VAL_INF : 0; }

inline Zp ring_zero(const Zp& proto) { return Zp::zero(proto.ctx()); }
inline Zp ring_one(const Zp& proto) { return Zp::one(proto.ctx()); }
inline Zp ring_from_int(const Zp& proto, long n) { return Zp(proto.ctx(), n); }
inline long pivot_weight(const Zp& x) { return x.is_zero() ? VAL_INF : x.val(); }

using RPoly = Poly<ResidueElement>;

// Primary factorization over κ: list of (irreducible, multiplicity) with
// deterministic ordering. Squarefree + distinct-degree + equal-degree
// splitting; tiny fields fall back to root enumeration first.
std::vector<std::pair<RPoly, int>> residue_primary_factorization(const RPoly& f,
                                                                 uint64_t seed = 0x9e3779b97f4a7c15ULL);

// All roots in κ (with multiplicity 1 each; does not report multiplicities).
std::vector<ResidueElement> residue_roots(const RPoly& f);

bool residue_irreducible(const RPoly& f);

}  // namespace pstrata
