#pragma once

#include <optional>
#include <vector>

#include "pstrata/matrix.hpp"
#include "pstrata/tower.hpp"

namespace pstrata {

using FMat = Mat<FieldElement>;

FMat fmat_rho(const FMat& m);             // ρ applied entrywise
FMat fmat_rho_transpose(const FMat& m);   // ρ-conjugate transpose
std::vector<FieldElement> flatten(const FMat& m);
FMat unflatten(const Tower& F, int n, const std::vector<FieldElement>& v);
FMat fmat_from_cols(const Tower& F, const std::vector<std::vector<FieldElement>>& cols);

// An o_F-lattice inside F^d, kept in canonical column echelon form with
// valuation pivoting (ties by lowest row index). May have rank < d.
class OLattice {
public:
    static OLattice from_generators(const Tower& F, int dim,
                                    const std::vector<std::vector<FieldElement>>& gens);
    static OLattice from_matrix_columns(const FMat& gens);
    static OLattice zero(const Tower& F, int dim);

    const Tower& tower() const { return F_; }
    int dim() const { return dim_; }
    int rank() const { return static_cast<int>(cols_.size()); }
    const std::vector<std::vector<FieldElement>>& basis() const { return cols_; }
    FMat basis_matrix() const { return fmat_from_cols(F_, cols_); }

    bool contains(const std::vector<FieldElement>& v) const;
    bool contains_lattice(const OLattice& o) const;
    bool equals(const OLattice& o) const { return contains_lattice(o) && o.contains_lattice(*this); }
    OLattice sum(const OLattice& o) const;
    OLattice intersect(const OLattice& o) const;
    OLattice scale(long pi_power) const;

    // {x in this : A x ∈ target}: A is dim(target.dim × this->dim) over F.
    OLattice preimage(const FMat& a, const OLattice& target) const;
    // {x in this : A x = 0}
    OLattice map_kernel(const FMat& a) const;
    // image A(this)
    OLattice image(const FMat& a) const;

    // dim_κ(this / other) for other ⊆ this of equal rank
    long quotient_length(const OLattice& o) const;

    // coordinates of v in the basis (throws if not in the F-span)
    std::vector<FieldElement> solve_in_span(const std::vector<FieldElement>& v) const;

private:
    Tower F_;
    int dim_ = 0;
    std::vector<std::vector<FieldElement>> cols_;
    std::vector<int> pivot_rows_;
    std::vector<long> pivot_vals_;
    void canonicalize(std::vector<std::vector<FieldElement>> gens,
                      std::vector<std::vector<FieldElement>>* kernel_out);
    friend std::vector<std::vector<FieldElement>> o_kernel(const Tower&, int,
                                                           const std::vector<std::vector<FieldElement>>&);
};

// One Gaussian solution of M x = t with full valuation pivoting (smallest
// valuation first); throws SingularBasis on inconsistency.
std::vector<FieldElement> fmat_solve_any(const FMat& m, const std::vector<FieldElement>& t);

// Saturated o-kernel of the column map F^m → F^d given by the columns.
std::vector<std::vector<FieldElement>> o_kernel(const Tower& F, int dim,
                                                const std::vector<std::vector<FieldElement>>& cols);

// A periodic decreasing lattice function Z → {o_F-lattices}, stored by a
// splitting basis and jump exponents: Λ_s = ⊕_j v_j π^{⌈(s-a_j)/e⌉} o_F.
class LatticeSequence {
public:
    LatticeSequence(Tower F, FMat basis, std::vector<long> jumps, long period);

    const Tower& tower() const { return F_; }
    int dim() const { return n_; }
    long period() const { return e_; }
    const FMat& splitting_basis() const { return basis_; }
    const std::vector<long>& jumps() const { return jumps_; }

    long coeff_exponent(int j, long s) const;  // ⌈(s - a_j)/e⌉
    FMat level_basis(long s) const;
    OLattice level(long s) const;
    bool is_chain() const;
    std::vector<long> residual_profile() const;                    // d_s for s = 0..e-1
    std::vector<long> block_profile(const FMat& idempotent) const; // per level, over one period

    LatticeSequence translate(long t) const;
    LatticeSequence scale_period(long k) const;
    LatticeSequence dagger() const;  // Λ ⊕ (Λ+1) ⊕ … ⊕ (Λ+e-1), always a chain
    static LatticeSequence direct_sum(const LatticeSequence& a, const LatticeSequence& b);

    bool equals(const LatticeSequence& o) const;

    // ν_Λ on End_F(V); VAL_INF for 0. nu_lower never throws.
    long nu(const FMat& x) const;
    long nu_lower(const FMat& x) const;
    bool in_normalizer(const FMat& g) const;

    // the filtration lattice a_i(Λ) ⊆ End_F(V), flattened to F^{n²}
    OLattice a_lattice(long i) const;
    // membership x ∈ a_i is just nu_lower(x) >= i; this is the explicit module

    // Dual sequence s ↦ (Λ_{-s})^# with respect to a nondegenerate Gram
    // matrix (the h(v,M) ⊆ p_F convention), plus the self-duality witness u
    // with (Λ_s)^# = Λ_{u-s} if one exists.
    LatticeSequence dual(const FMat& gram) const;
    std::optional<long> self_dual_witness(const FMat& gram) const;

private:
    Tower F_;
    int n_;
    long e_;
    FMat basis_;         // columns are the splitting basis
    FMat basis_inv_;
    std::vector<long> jumps_;  // normalized into [0, e)
};

}  // namespace pstrata
