#pragma once

#include <map>

#include "pstrata/embed.hpp"
#include "pstrata/lift.hpp"

namespace pstrata {

// A stratum [Λ, q, r, β], optionally with the ambient hermitian context.
struct Stratum {
    LatticeSequence lam;
    long q = 0, r = 0;
    FMat beta;
    std::optional<HermitianForm> herm;

    const Tower& tower() const { return lam.tower(); }
    int dim() const { return lam.dim(); }
    bool is_zero() const { return beta.is_zero() && q == r; }
    bool is_skew() const;
    void validate() const;  // InvalidStratum on contract violations
};

struct StratumAnalysis {
    bool zero = false;
    long e = 1, g = 1;
    FMat y;     // y_β = β^{e/g} π^{q/g} (zero matrix for the zero stratum)
    RPoly phi;  // characteristic polynomial of the stratum over κ_F
    long level_num = 0, level_den = 1;
    bool fundamental = false;
    std::vector<std::pair<RPoly, int>> primary;
};

StratumAnalysis stratum_invariants(const Stratum& s);
bool is_fundamental(const Stratum& s);  // needs r = q-1 or zero shape

enum class FundVerdict { Zero, Simple, Semisimple, Neither };
const char* fund_verdict_name(FundVerdict v);

struct FundamentalAnalysis {
    int r_dim = 0;
    bool r_semisimple = false;
    bool m_condition = false;
    FundVerdict verdict = FundVerdict::Neither;
    int blocks = 0;
};

FundamentalAnalysis analyze_fundamental(const Stratum& s);

// reduction of x ∈ a_level to the κ_F-coordinates of a_level/a_{level+1}
std::vector<ResidueElement> reduce_to_level(const LatticeSequence& lam, const FMat& x, long level);
FMat lift_from_level(const LatticeSequence& lam, const std::vector<ResidueElement>& coords, long level);
// positions (j,k) of the splitting-basis slots contributing to that quotient
std::vector<std::pair<int, int>> level_slots(const LatticeSequence& lam, long level);

struct SplitStratum {
    std::vector<FMat> idempotents;    // in ambient coordinates, Σ = 1
    FMat basis;                       // adapted basis, columns grouped per block
    std::vector<int> block_sizes;
    std::vector<Stratum> blocks;      // in block coordinates
    std::vector<long> q_i;
};

SplitStratum split_stratum(const Stratum& s, uint64_t seed = 0x517aULL);
// the lattice sequence Λ ∩ W in the coordinates of the given columns
LatticeSequence sequence_in_subspace(const LatticeSequence& lam, const FMat& cols);

struct MinimalInvariants {
    int e_E = 1, f_E = 1, deg = 1;
    bool minimal = false;
};
MinimalInvariants minimal_invariants(const Stratum& s);

// ad_β as a matrix on flattened n²-coordinates
FMat ad_map(const FMat& beta);
FMat left_mul_map(const FMat& beta);

struct CentralizerData {
    std::vector<FMat> b_basis;  // F-basis of B = ker(ad_β)
    std::optional<OLattice> b0;
    long k0 = 0;
    bool scalar = false;
};

CentralizerData centralizer_of(const FMat& beta);
OLattice b_lattice(const FMat& beta, const LatticeSequence& lam, long l);  // B ∩ a_l
OLattice n_lattice(const FMat& beta, const LatticeSequence& lam, long l);  // a_β^{-1}(a_l) ∩ a_0
OLattice m_lattice(const FMat& beta, const LatticeSequence& lam, long l, long k0);

// k0(β,Λ) by the n_l ⊄ b_0 + a_1 inclusion tests; -q for the scalar case
CentralizerData critical_exponent(const FMat& beta, const LatticeSequence& lam, long q);

class TameCorestriction {
public:
    TameCorestriction(FMat gamma, std::vector<FMat> b_basis, Mat<FieldElement> proj_flat, FMat unit_img,
                      bool sigma_equivariant, const HermitianForm* herm);
    FMat apply(const FMat& x) const;
    const FMat& gamma() const { return gamma_; }
    const std::vector<FMat>& b_basis() const { return b_basis_; }
    const FMat& unit() const { return unit_; }
    bool sigma_equivariant() const { return sigma_eq_; }

private:
    FMat gamma_;
    std::vector<FMat> b_basis_;
    Mat<FieldElement> proj_;  // n²×n² on flattened coords (projection onto B_γ along im a_γ)
    FMat unit_;
    bool sigma_eq_;
    std::optional<HermitianForm> herm_;
};

// s_γ with s(a_j(Λ)) = a_j(Λ) ∩ B for every supplied sequence.
TameCorestriction tame_corestriction(const FMat& gamma, const std::vector<LatticeSequence>& lams,
                                     const HermitianForm* sigma_ctx = nullptr);

// equivalence of strata: β + a_{-r-j} = β' + a'_{-r'-j} for all j ≥ 0
bool strata_equivalent(const Stratum& a, const Stratum& b);

// [Λ, r+1, r, s_γ(β-γ)] (the element lies in B_γ ⊆ A)
Stratum derived_stratum(const Stratum& s, const FMat& gamma, const TameCorestriction& sg);

struct OrdersPsi {
    LatticeSequence lam;
    OLattice h_order;
    OLattice j_order;
    FMat beta;
    long q = 0;
    bool in_H(const FMat& u, long m) const;  // u ∈ H^{m+1} = h ∩ Ũ^{m+1}
    bool in_J(const FMat& u, long m) const;
    mpq_class psi(const FMat& x) const;  // ψ_β(1+x) ∈ Q/Z as a rational in [0,1)
};

// Defining sequence: the stratum itself followed by coarser tail strata
// (caller-supplied beyond minimal depth; each entry validated).
OrdersPsi build_orders_psi(const Stratum& s, const std::vector<std::pair<Stratum, FMat>>& tail, long m);

}  // namespace pstrata
