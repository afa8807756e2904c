#pragma once

#include "pstrata/stratum.hpp"

namespace pstrata {

// the filtration between two sequences: {x : x·Λ^src_s ⊆ Λ^dst_{s+t}}
OLattice hom_lattice(const LatticeSequence& src, const LatticeSequence& dst, long t);
// conjugation x ↦ g x g⁻¹ as a matrix on flattened coordinates
FMat conj_map(const FMat& g);
// x ↦ x·b1 - b2·x on flattened coordinates (rectangular allowed)
FMat twisted_ad_map(const FMat& b1, const FMat& b2);

struct IntertwinerCertificate {
    FMat g;
    bool verified = false;
    bool classical = false;  // g preserves the hermitian form
    std::string detail;
};

// Decides g(β + a_{-r})g⁻¹ ∩ (β' + a'_{-r'}) ≠ ∅ by the lattice membership
// g β g⁻¹ - β' ∈ g a_{-r} g⁻¹ + a'_{-r'}.
IntertwinerCertificate verify_intertwiner(const FMat& g, const Stratum& a, const Stratum& b);

enum class MatchOutcome { Matched, NotIntertwining, Undecided };
const char* match_outcome_name(MatchOutcome m);

struct MatchingResult {
    MatchOutcome outcome = MatchOutcome::Undecided;
    std::vector<int> zeta;  // block i of a ↔ block ζ(i) of b
    std::optional<SplitStratum> split_a, split_b;
    std::optional<IntertwinerCertificate> intertwiner;
    bool profile_condition = false;
    std::vector<std::vector<long>> profiles_a, profiles_b;
    std::string refutation;
};

// Matching for minimal semisimple strata (r = q-1 or zero), same period.
MatchingResult match_minimal(const Stratum& a, const Stratum& b, uint64_t seed = 0x919ULL);

struct ConjugacyCertificate {
    FMat u;
    bool verified = false;
    bool classical = false;
    std::string detail;
};

// u ∈ Ũ(Λ) with [uΛ, q, r, uβu⁻¹] equivalent to Δ' (minimal semisimple
// strata on the same Λ whose matching satisfies the profile condition).
ConjugacyCertificate conjugate_gl(const Stratum& a, const Stratum& b, const MatchingResult& match,
                                  uint64_t seed = 0x919ULL);

// Prop-S3-style adjustment: given simple strata data with
// s_β(a) ≡ s_β(a') mod b_{1-r} + b'_{1-r'}, produce (1+w', 1+v) with
// (1+w')(β+a')(1+w')⁻¹ ≡ (1+v)(β+a)(1+v)⁻¹ mod a_{1-r} + a'_{1-r'}.
// With skew = true the outputs are Cayley transforms lying in G.
struct AdjustmentPair {
    FMat one_plus_wp, one_plus_v;
    bool verified = false;
};
AdjustmentPair solve_adjustment(const FMat& beta, const LatticeSequence& lam, const LatticeSequence& lamp,
                                long r, long rp, const FMat& a, const FMat& ap,
                                const TameCorestriction& sbeta, bool skew,
                                const HermitianForm* herm = nullptr);

// g ∈ 1 + m_{-(k0+m)} conjugating the primitive idempotent family of b to
// that of a (equivalent semisimple strata on the same Λ).
FMat equivalent_strata_align(const Stratum& a, const Stratum& b, const SplitStratum& sa,
                             const SplitStratum& sb);

// find an invertible element of the lattice with invertibility and
// two-sided integrality conditions; used by the matchers
std::optional<FMat> find_unit_in(const OLattice& L, const LatticeSequence& src, const LatticeSequence& dst,
                                 bool exact_levels, uint64_t seed, int tries = 400);

}  // namespace pstrata
