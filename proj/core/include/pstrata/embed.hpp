#pragma once

#include <optional>

#include "pstrata/form.hpp"
#include "pstrata/witt.hpp"

namespace pstrata {

// An F-algebra embedding φ: E → End_F(V), with E a tower extension of
// F = E.prefix(prefix_steps). Determined by the images of the upper-monomial
// basis of E over F.
class EmbeddedField {
public:
    EmbeddedField(Tower E, int prefix_steps, std::vector<FMat> upper_monomial_images);

    const Tower& E() const { return E_; }
    Tower F() const { return E_->prefix(prefix_); }
    int prefix_steps() const { return prefix_; }
    int vdim() const { return n_; }
    int edeg() const { return edeg_; }                 // [E:F]
    int mdim() const { return n_ / edeg_; }            // dim_E V
    FMat apply(const FieldElement& x) const;           // φ(x), x ∈ E
    const FMat& upper_image(int u) const { return images_[static_cast<size_t>(u)]; }

    // greedy E-basis of V and E-coordinates
    const std::vector<std::vector<FieldElement>>& e_basis() const { return ebasis_; }
    std::vector<FieldElement> e_coords(const std::vector<FieldElement>& v) const;
    std::vector<FieldElement> from_e_coords(const std::vector<FieldElement>& c) const;
    FMat e_matrix_of(const FMat& x) const;  // matrix over E of an E-linear map on V

    // σ_h(φ(x)) = φ(ρ'(x)) for all x?
    bool equivariant(const HermitianForm& h) const;

private:
    Tower E_;
    int prefix_;
    int n_;
    int edeg_;
    std::vector<FMat> images_;
    std::vector<std::vector<FieldElement>> ebasis_;
    std::optional<FMat> coord_solver_;  // n×n over F: columns are φ(θ_u)·w_i
};

// The unique E-valued ρ'-sesquilinear form h^φ with λ∘h^φ = h (Gram with
// respect to phi.e_basis()).
HermitianForm lift_form_over_E(const HermitianForm& h, const EmbeddedField& phi, const TraceMapSpec& lambda);

// An o_F-lattice sequence normalized by φ(E)^× as an o_E-sequence on
// E-coordinates.
LatticeSequence transport_sequence_to_E(const EmbeddedField& phi, const LatticeSequence& lam);

// Transport an F-sesquilinear Gram over E, an E-linear map back to F, etc.
FMat e_map_to_f(const EmbeddedField& phi, const FMat& e_mat);

// Recognize E = F[β] for β generating a field with ramification e_E and
// residue degree f_E over F; y_norm is the normalized element whose residue
// generates κ_E (y_β of the stratum analysis; ignored when f_E = 1),
// nu_beta = ν_E(β). If sigma_ctx is given and β is skew, the recognized
// tower carries the involution with ρ'(φ⁻¹(β)) = -φ⁻¹(β). Returns the
// embedding and the preimage of β.
struct RecognizedField {
    EmbeddedField phi;
    FieldElement beta_preimage;
};
RecognizedField recognize_field(const Tower& F, const FMat& beta, int e_E, int f_E, const FMat& y_norm,
                                long nu_beta, const HermitianForm* sigma_ctx = nullptr);

}  // namespace pstrata
