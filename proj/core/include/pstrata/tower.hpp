#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pstrata/residue.hpp"
#include "pstrata/zp.hpp"

namespace pstrata {

class FieldTower;
using Tower = std::shared_ptr<const FieldTower>;

enum class StepKind { Unramified, Eisenstein };

// One tagged prime-degree step: X^d + c_{d-1} X^{d-1} + ... + c_0 with the
// coefficients given as flat coordinate vectors over the subtower below it.
struct StepSpec {
    StepKind kind;
    int degree;
    std::vector<std::vector<mpq_class>> coeffs;  // size degree; inner vectors zero-padded
};

class FieldElement;

// A p-adic field built as a tower of tagged prime-degree extensions of Q_p,
// with an optional involution conjugating one quadratic step. e and f are
// known by construction; wild steps are rejected.
class FieldTower : public std::enable_shared_from_this<FieldTower> {
public:
    static Tower make_qp(long p, int digits);
    static Tower make(long p, int digits, const std::vector<StepSpec>& steps, int conj_step);
    static Tower make(long p, int digits, const std::vector<StepSpec>& steps,
                      const std::vector<int>& conj_steps = {});

    long p() const { return ctx_->p(); }
    int digits() const { return ctx_->digits(); }
    const Ctx& ctx() const { return ctx_; }
    int degree() const { return degree_; }
    int ram_e() const { return e_; }
    int res_f() const { return f_; }
    int num_steps() const { return static_cast<int>(kinds_.size()); }
    StepKind step_kind(int k) const { return kinds_[static_cast<size_t>(k)]; }
    int step_degree(int k) const { return degrees_[static_cast<size_t>(k)]; }
    const std::vector<int>& conj_steps() const { return conj_steps_; }
    bool has_involution() const { return !conj_steps_.empty(); }
    bool step_conjugated(int k) const;
    FieldElement skew_generator() const;  // θ of the first conjugated step
    Tower prefix(int nsteps) const;
    const std::vector<StepSpec>& spec() const { return spec_; }

    const RF& residue_field() const { return kappa_; }
    // index (into the tower basis) of the t-th residue basis monomial
    int residue_monomial(int t) const { return res_idx_[static_cast<size_t>(t)]; }

    FieldElement zero() const;
    FieldElement one() const;
    FieldElement from_int(long v) const;
    FieldElement from_ratio(const mpq_class& v) const;
    FieldElement from_zp(const Zp& v) const;
    FieldElement basis_element(int i) const;
    FieldElement generator(int step) const;
    FieldElement pi() const;  // distinguished uniformizer
    bool pi_is_skew() const;  // ρ(π) = -π ?
    FieldElement lift_residue(const ResidueElement& r) const;

    static bool same(const Tower& a, const Tower& b);

    // internals used by FieldElement
    std::vector<Zp> mul_coords(const std::vector<Zp>& a, const std::vector<Zp>& b) const;
    long monomial_weight(int i) const { return weights_[static_cast<size_t>(i)]; }
    int monomial_conj_parity(int i) const { return parities_[static_cast<size_t>(i)]; }
    int flat_index(const std::vector<int>& exps) const;
    std::vector<int> exponents(int flat) const;

private:
    friend class FieldElement;
    void mul_level(int level, const Zp* a, const Zp* b, Zp* out) const;
    void build_tables();

    Ctx ctx_;
    std::vector<StepKind> kinds_;
    std::vector<int> degrees_;
    std::vector<std::vector<std::vector<Zp>>> coeffs_;  // per step, per coeff, flat coords
    std::vector<StepSpec> spec_;
    std::vector<int> radix_;  // cumulative degrees: radix_[k] = deg of prefix(k)
    int degree_ = 1, e_ = 1, f_ = 1;
    std::vector<int> conj_steps_;
    std::vector<long> weights_;
    std::vector<int> parities_;
    std::vector<int> res_idx_;
    RF kappa_;
    std::shared_ptr<const FieldTower> parent_;
};

// A tower element: coordinates over Q_p in the power basis, with the
// normalized Z-valued valuation of the top field.
class FieldElement {
public:
    FieldElement() = default;
    FieldElement(Tower K, std::vector<Zp> coords);

    const Tower& tower() const { return K_; }
    const std::vector<Zp>& coords() const { return c_; }

    bool is_zero() const;
    long val() const;        // ν(x); VAL_INF when zero to precision
    long val_lower() const;  // certified lower bound; never throws
    bool is_integral() const { return val_lower() >= 0; }
    bool is_unit() const { return !is_zero() && val() == 0; }

    FieldElement operator+(const FieldElement& o) const;
    FieldElement operator-() const;
    FieldElement operator-(const FieldElement& o) const { return *this + (-o); }
    FieldElement operator*(const FieldElement& o) const;
    FieldElement operator*(const Zp& s) const;
    FieldElement inverse() const;
    FieldElement operator/(const FieldElement& o) const { return *this * o.inverse(); }
    FieldElement& operator+=(const FieldElement& o) { return *this = *this + o; }
    FieldElement& operator-=(const FieldElement& o) { return *this = *this - o; }
    FieldElement& operator*=(const FieldElement& o) { return *this = *this * o; }
    FieldElement pow(long n) const;
    bool equals(const FieldElement& o) const { return (*this - o).is_zero(); }

    FieldElement rho() const;  // the tower involution (identity if trivial)
    bool rho_fixed() const { return (rho() - *this).is_zero(); }
    bool rho_skew() const { return (rho() + *this).is_zero(); }

    ResidueElement residue() const;
    FieldElement mod_pi_power(long k) const;  // canonical representative mod π^k
    FieldElement times_pi_power(long k) const;

    // Trace and norm down to the prefix subtower with nsteps steps.
    FieldElement trace_to(int nsteps) const;
    FieldElement norm_to(int nsteps) const;
    FieldElement embed_into(const Tower& E) const;
    FieldElement project_to(int nsteps) const;  // requires support on the prefix

    FieldElement sqrt() const;  // Hensel; requires square
    bool is_square() const;

    std::string str() const;

private:
    Tower K_;
    std::vector<Zp> c_;
};

inline FieldElement ring_zero(const FieldElement& proto) { return proto.tower()->zero(); }
inline FieldElement ring_one(const FieldElement& proto) { return proto.tower()->one(); }
inline FieldElement ring_from_int(const FieldElement& proto, long n) { return proto.tower()->from_int(n); }
inline long pivot_weight(const FieldElement& x) { return x.is_zero() ? VAL_INF : x.val_lower(); }

using FPoly = Poly<FieldElement>;

// Reduce an integral polynomial over F to κ_F[X].
RPoly reduce_poly(const FPoly& f);
FPoly lift_poly(const Tower& K, const RPoly& f);

// Hensel: factor monic integral f as g0*g1 following a coprime monic residue
// factorization.
std::pair<FPoly, FPoly> hensel_factor(const FPoly& f, const RPoly& g0bar, const RPoly& g1bar);

// Lift the full primary factorization of the reduction of f (monic integral,
// with squarefree-coprime primary parts) to a factorization of f.
std::vector<FPoly> hensel_factor_multi(const FPoly& f, const std::vector<RPoly>& parts);

// Bézout over F[X]: a0 g0 + a1 g1 = 1 for coprime g0, g1.
std::pair<FPoly, FPoly> bezout_combine(const FPoly& g0, const FPoly& g1);

}  // namespace pstrata
