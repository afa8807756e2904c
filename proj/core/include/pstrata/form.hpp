#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pstrata/lattice.hpp"
#include "pstrata/symbols.hpp"

namespace pstrata {

enum class FormKind {
    Quadratic,      // ρ trivial,    ε = +1
    Symplectic,     // ρ trivial,    ε = -1
    Hermitian,      // ρ nontrivial, ε = +1
    SkewHermitian,  // ρ nontrivial, ε = -1
};

const char* form_kind_name(FormKind k);

// ε-hermitian form h(v,w) = ρ(v)ᵀ G w with ρ-conjugate-transpose(G) = ε G.
class HermitianForm {
public:
    HermitianForm(Tower F, int eps, FMat gram);

    const Tower& tower() const { return F_; }
    int eps() const { return eps_; }
    const FMat& gram() const { return gram_; }
    int rank() const { return gram_.rows(); }
    FormKind kind() const;

    FieldElement apply(const std::vector<FieldElement>& v, const std::vector<FieldElement>& w) const;
    bool is_isometry(const FMat& g) const;  // ρ(g)ᵀ G g = G
    // adjoint anti-involution: h(x v, w) = h(v, σ(x) w)
    FMat sigma(const FMat& x) const;
    bool is_symmetric_elt(const FMat& x) const { return sigma(x).equals(x); }
    bool is_skew_elt(const FMat& x) const { return sigma(x).equals(-x); }

    HermitianForm twist(const FMat& gamma) const;  // h_γ(v,w) = h(v, γ w)
    HermitianForm restrict_to(const std::vector<std::vector<FieldElement>>& basis) const;
    HermitianForm transported(const FMat& t) const;  // Gram of h in the basis given by t's columns

    static HermitianForm direct_sum(const HermitianForm& a, const HermitianForm& b);

private:
    Tower F_;
    int eps_;
    FMat gram_;
};

// σ_{h,h'}: Hom(V,V') → Hom(V',V) with h'(f v, w) = h(v, σ(f) w).
FMat sigma_pair(const HermitianForm& h, const HermitianForm& hp, const FMat& f);

struct WittBasis {
    FMat basis;  // columns: x1 y1 x2 y2 … | anisotropic tail
    int hyperbolic = 0;
    std::vector<FieldElement> tail;  // diagonal Gram values of the tail
};

WittBasis witt_decompose(const HermitianForm& h, uint64_t seed = 0x5eedULL);

struct FormClass {
    FormKind kind;
    int rank = 0;
    SquareClass disc = SquareClass::One;  // quadratic case
    int hasse = 1;                        // quadratic case
    bool disc_norm = true;                // hermitian / skew-hermitian case
    bool operator==(const FormClass& o) const;
    bool operator!=(const FormClass& o) const { return !(*this == o); }
    std::string str() const;
};

FormClass classify_form(const HermitianForm& h);
bool is_isometric(const HermitianForm& a, const HermitianForm& b);

// diagonalization h = ⟨d_1, …, d_m⟩: returns basis T and the diagonal
// (symplectic forms are rejected)
std::pair<FMat, std::vector<FieldElement>> diagonalize(const HermitianForm& h);

// isotropy decision by invariants
bool is_isotropic(const HermitianForm& h);

// binary quadratic representation test: does ⟨a,b⟩ represent s ≠ 0?
bool binary_represents(const FieldElement& a, const FieldElement& b, const FieldElement& s);

// explicit v ≠ 0 with h(v,v) = 0; the form must be isotropic
std::vector<FieldElement> isotropic_vector(const HermitianForm& h, uint64_t seed = 0x5eedULL);

// explicit v with h(v,v) = c; the value must be represented
std::vector<FieldElement> represent_value(const HermitianForm& h, const FieldElement& c,
                                          uint64_t seed = 0x5eedULL);

// explicit g with h2(g v, g w) = h1(v, w); classes must agree
FMat explicit_isometry(const HermitianForm& h1, const HermitianForm& h2, uint64_t seed = 0x5eedULL);

// --------------------------------------------------------------------------
// forms over the residue field (used by the lifting toolbox)

using RMat = Mat<ResidueElement>;

struct ResidualForm {
    RF field;
    bool bar_trivial = true;  // involution x ↦ x^{q0} when false
    int eps = 1;
    RMat gram;
    ResidueElement bar(const ResidueElement& x) const;
    ResidueElement apply(const std::vector<ResidueElement>& v, const std::vector<ResidueElement>& w) const;
};

struct ResidualWittBasis {
    RMat basis;
    int hyperbolic = 0;
    std::vector<ResidueElement> tail;
};

ResidualWittBasis residual_witt_decompose(const ResidualForm& f, uint64_t seed = 0x5eedULL);

}  // namespace pstrata
