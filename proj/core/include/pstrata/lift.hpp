#pragma once

#include <functional>
#include <map>

#include "pstrata/form.hpp"

namespace pstrata {

// A lift result together with the re-checkable facts that make it a
// certificate. Every constructor in this module verifies its output before
// returning; an unverifiable certificate is a hard error.
struct LiftCertificate {
    FMat g;
    std::vector<std::pair<std::string, bool>> checks;
    bool ok() const {
        for (auto& [n, b] : checks)
            if (!b) return false;
        return true;
    }
};

// the three base configurations of the Witt-basis lifting lemmas
enum class WittLiftCase {
    Unit,       // period 1, Λ0^# = Λ1: lift a residual Witt basis of h̄
    PiTwisted,  // period 1, Λ0^# = Λ0: work with h·π^{-1}
    TwoLayer,   // period 2, Λ0^# = Λ0: lift any basis of Λ0/Λ1 plus its dual
};

struct ResidualWittData {
    int hyperbolic = 0;  // ignored for TwoLayer
    std::vector<std::vector<FieldElement>> lifts;
};

// Lift through the residue quotient in one of the three base cases. The
// output Witt basis reduces to the input data levelwise.
WittBasis lift_witt_basis_block(const LatticeSequence& lam, const HermitianForm& h, WittLiftCase tag,
                                const ResidualWittData& data);

// One layer of the general lift: vectors in Λ_level \ Λ_{level+1} whose
// residues form a basis of the quotient.
struct WittLayer {
    long level;
    std::vector<std::vector<FieldElement>> vectors;
};

// The general layered lift (self-dual chain, Λ0^# ∈ {Λ0, Λ1}); layers must
// satisfy the pairing/Witt hypotheses of the corresponding lemma. The basis
// returned is a Witt basis up to the recorded π-rescalings.
WittBasis lift_witt_basis_general(const LatticeSequence& lam, const HermitianForm& h,
                                  const std::vector<WittLayer>& layers, uint64_t seed = 0x11ceULL);

// Adapted layered residual data for a self-dual chain (used by
// lift_isometry and exposed for tests).
std::vector<WittLayer> adapted_layers(const LatticeSequence& lam, const HermitianForm& h,
                                      uint64_t seed = 0x11ceULL);

// Lift an approximate (residual) isometry f : (V,h,Λ) → (V',h',Λ') to a
// genuine isometry g with (f-g)(Λ_i) ⊆ Λ'_{i+1}.
LiftCertificate lift_isometry(const HermitianForm& h, const LatticeSequence& lam, const HermitianForm& hp,
                              const LatticeSequence& lamp, const FMat& f, uint64_t seed = 0x11ceULL);

// verification usable from serialized data
bool verify_lift_certificate(const HermitianForm& h, const LatticeSequence& lam, const HermitianForm& hp,
                             const LatticeSequence& lamp, const FMat& f, const FMat& g);

// Newton inverse square root of 1 + d, d small; the iteration budget is
// ⌈log2(digits)⌉ + 4.
FMat inv_sqrt_one_plus(const FMat& s);

// φ in Ũ^n(fΛ) f Ũ^n(Λ) with σ_{h,h'}(φ) = φ^{-1}, by the explicit
// contraction φ = (f σ(f))^{-1/2} f.
FMat double_coset_fixed_point(const FMat& f, const LatticeSequence& lam, long n, const HermitianForm& h,
                              const HermitianForm& hp);

// (1 + v/2)(1 - v/2)^{-1} for skew v ∈ a_1; lands in U¹(Λ) ∩ G.
FMat cayley_transform(const HermitianForm& h, const LatticeSequence& lam, const FMat& v);

// Idempotent lifting e ← 3e² - 2e³ against a multiplicative filtration;
// in_k(x, r) decides x ∈ k_r. Preserves σ-symmetry when sym is given.
FMat lift_idempotent(const FMat& alpha, const std::function<bool(const FMat&, long)>& in_k, long r,
                     const HermitianForm* sym = nullptr);

// u ∈ Ũ^s(Λ) with h_{a2}(uv, uw) = h_{a1}(v, w), for (skew-)symmetric a1, a2
// in n(Λ) with a1 a2^{-1} ∈ Ũ^s(Λ).
FMat twist_isometry(const LatticeSequence& lam, const HermitianForm& h, const FMat& a1, const FMat& a2,
                    long s);

}  // namespace pstrata
