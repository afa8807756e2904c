#include "pstrata/symbols.hpp"

namespace pstrata {

int unit_character(const FieldElement& a) {
    require(!a.is_zero(), Err::BadInput, "unit character of zero");
    FieldElement u = a.times_pi_power(-a.val());
    return u.residue().is_square() ? 1 : -1;
}

int hilbert_symbol(const FieldElement& a, const FieldElement& b) {
    require(!a.is_zero() && !b.is_zero(), Err::BadInput, "hilbert symbol of zero");
    long alpha = a.val(), beta = b.val();
    int chi_u = unit_character(a), chi_v = unit_character(b);
    long q = a.tower()->residue_field()->q();
    int sign = 1;
    if ((alpha % 2) && (beta % 2) && ((q - 1) / 2) % 2) sign = -sign;
    if (beta % 2 && chi_u < 0) sign = -sign;
    if (alpha % 2 && chi_v < 0) sign = -sign;
    return sign;
}

const char* square_class_name(SquareClass c) {
    switch (c) {
        case SquareClass::One: return "1";
        case SquareClass::Delta: return "delta";
        case SquareClass::Pi: return "pi";
        case SquareClass::DeltaPi: return "delta*pi";
    }
    return "?";
}

SquareClass square_class(const FieldElement& a) {
    require(!a.is_zero(), Err::BadInput, "square class of zero");
    bool odd = a.val() % 2 != 0;
    bool nonsq = unit_character(a) < 0;
    if (!odd) return nonsq ? SquareClass::Delta : SquareClass::One;
    return nonsq ? SquareClass::DeltaPi : SquareClass::Pi;
}

bool is_norm_from_quadratic(const FieldElement& a, const FieldElement& d) {
    require(!d.is_square(), Err::BadInput, "norm test needs a non-square discriminant");
    return hilbert_symbol(a, d) == 1;
}

FieldElement involution_disc(const Tower& F) {
    FieldElement theta = F->skew_generator();
    return theta * theta;
}

bool involution_ramified(const Tower& F) {
    require(F->has_involution(), Err::UnsupportedContext, "norm machinery needs an involution");
    // F/F0 is unramified iff the induced involution on κ_F is nontrivial,
    // i.e. some conjugated step is unramified.
    for (int s : F->conj_steps())
        if (F->step_kind(s) == StepKind::Unramified) return false;
    return true;
}

namespace {

// A ρ-fixed monomial-times-p-power of prescribed ν_F; serves as a
// uniformizer of F0 in the ramified case (target 2) and of F = F0-level
// computations in the unramified case (target 1).
FieldElement fixed_element_of_valuation(const Tower& F, long target) {
    for (long b = 0; b * F->ram_e() <= target; ++b) {
        for (int i = 0; i < F->degree(); ++i) {
            if (F->monomial_conj_parity(i)) continue;
            if (F->monomial_weight(i) + b * F->ram_e() != target) continue;
            FieldElement x = F->basis_element(i);
            for (long t = 0; t < b; ++t) x = x * F->from_int(F->p());
            return x;
        }
    }
    fail(Err::NormalizationFailed, "no ρ-fixed element of the required valuation");
}

}  // namespace

bool is_norm_to_fixed_field(const FieldElement& a) {
    const Tower& F = a.tower();
    require(F->has_involution(), Err::UnsupportedContext, "norm test needs an involution");
    require(a.rho_fixed(), Err::BadInput, "norm test argument must be ρ-fixed");
    require(!a.is_zero(), Err::BadInput, "norm test of zero");
    if (!involution_ramified(F)) {
        // unramified F/F0: the norms are exactly the elements of even ν_{F0},
        // and ν_{F0} = ν_F on F0 here
        return a.val() % 2 == 0;
    }
    // ramified F/F0: evaluate (a, d)_{F0} with d = θ² by the tame formula.
    // κ_{F0} = κ_F, ν_{F0} = ν_F/2 on F0.
    long vF = a.val();
    require(vF % 2 == 0, Err::BadInput, "ρ-fixed element must have even ν_F in the ramified case");
    FieldElement pi0 = fixed_element_of_valuation(F, 2);
    FieldElement d = involution_disc(F);
    long nu_a = vF / 2;
    long nu_d = d.val() / 2;
    FieldElement ua = a * pi0.pow(-nu_a);
    FieldElement ud = d * pi0.pow(-nu_d);
    int chi_a = ua.residue().is_square() ? 1 : -1;
    int chi_d = ud.residue().is_square() ? 1 : -1;
    long q0 = F->residue_field()->q();
    int sign = 1;
    if ((nu_a % 2) && (nu_d % 2) && ((q0 - 1) / 2) % 2) sign = -sign;
    if ((nu_d % 2) && chi_a < 0) sign = -sign;
    if ((nu_a % 2) && chi_d < 0) sign = -sign;
    return sign == 1;
}

FieldElement solve_norm_equation(const FieldElement& a) {
    const Tower& F = a.tower();
    require(is_norm_to_fixed_field(a), Err::BadInput, "element is not a norm");
    const auto& kappa = F->residue_field();
    FieldElement x = F->zero();
    if (!involution_ramified(F)) {
        // x0 of valuation ν(a)/2; the unit part is corrected by a residue
        // norm solve w^(1+q0) = ū
        FieldElement x0 = F->pi().pow(a.val() / 2);
        FieldElement u = a * (x0 * x0.rho()).inverse();
        long q0 = 1;
        for (int i = 0; i < kappa->f() / 2; ++i) q0 *= kappa->p();
        ResidueElement ubar = u.residue();
        bool found = false;
        ResidueElement wbar = ResidueElement::one(kappa);
        for (long code = 1; code < kappa->q(); ++code) {
            ResidueElement cand = ResidueElement::decode(kappa, code);
            if (cand.pow(1 + q0).equals(ubar)) {
                wbar = cand;
                found = true;
                break;
            }
        }
        require(found, Err::NonConvergence, "no residue solution of the norm equation");
        x = x0 * F->lift_residue(wbar);
    } else {
        FieldElement x0 = F->pi().pow(a.val() / 2);
        FieldElement u = a * (x0 * x0.rho()).inverse();
        ResidueElement ubar = u.residue();
        require(ubar.is_square(), Err::NonConvergence, "unit part is not a residue square");
        x = x0 * F->lift_residue(ubar.sqrt());
    }
    // Hensel refinement: x <- x(1 + δ/2), δ = a/N(x) - 1 is ρ-fixed and small
    FieldElement half = F->from_ratio(mpq_class(1, 2));
    int maxit = 2 * F->digits() + 8;
    for (int i = 0; i < maxit; ++i) {
        FieldElement err = a * (x * x.rho()).inverse() - F->one();
        if (err.is_zero()) break;
        x = x * (F->one() + err * half);
    }
    require((x * x.rho() - a).is_zero(), Err::NonConvergence, "norm equation refinement stalled");
    return x;
}

}  // namespace pstrata
