#pragma once

#include "pstrata/tower.hpp"

namespace pstrata {

// Quadratic character of the unit part: +1 if the residue of a·π^{-ν(a)} is
// a square in κ_F, else -1.
int unit_character(const FieldElement& a);

// Tame Hilbert symbol (a,b)_F over any supported tower field (odd residual
// characteristic): bimultiplicative, symmetric.
int hilbert_symbol(const FieldElement& a, const FieldElement& b);

enum class SquareClass { One, Delta, Pi, DeltaPi };
const char* square_class_name(SquareClass c);

// Class of a in F^× / (F^×)^2 with respect to the distinguished uniformizer.
SquareClass square_class(const FieldElement& a);

// a ∈ N_{F(√d)/F}(F(√d)^×)? d must be a non-square.
bool is_norm_from_quadratic(const FieldElement& a, const FieldElement& d);

// For a tower with involution: d with F = F0(√d), ρ(√d) = -√d. Returned as
// the square of the conjugated generator, an element of F fixed by ρ.
FieldElement involution_disc(const Tower& F);

// Is the conjugated step ramified over the fixed field?
bool involution_ramified(const Tower& F);

// a ∈ N_{F/F0}(F^×) for ρ-fixed a, where F0 is the fixed field of ρ.
bool is_norm_to_fixed_field(const FieldElement& a);

// Solve x·ρ(x) = a for ρ-fixed a that is a norm.
FieldElement solve_norm_equation(const FieldElement& a);

}  // namespace pstrata
