#pragma once

#include <optional>

#include "pstrata/form.hpp"

namespace pstrata {

// One of the five structure-theorem cases, fixed by (F, ρ, ε).
struct WittContext {
    Tower F;
    int eps = 1;
    FormKind kind() const;
    bool operator==(const WittContext& o) const { return FieldTower::same(F, o.F) && eps == o.eps; }
};

struct GroupShape {
    long order = 1;
    long exponent = 1;
};

// The abstract group promised by the structure theorem for this context.
GroupShape witt_expected_shape(const WittContext& ctx);

// A Witt class, held as the class invariants of its anisotropic part plus an
// explicit anisotropic representative Gram (certificate output only).
class WittClass {
public:
    WittClass(WittContext ctx, FormClass cls, std::optional<HermitianForm> rep);
    const WittContext& context() const { return ctx_; }
    const FormClass& cls() const { return cls_; }
    int aniso_dim() const { return cls_.rank; }
    bool is_zero() const { return cls_.rank == 0; }
    const std::optional<HermitianForm>& rep() const { return rep_; }
    bool equals(const WittClass& o) const;

private:
    WittContext ctx_;
    FormClass cls_;
    std::optional<HermitianForm> rep_;
};

WittClass witt_zero(const WittContext& ctx);
WittClass witt_class_of(const HermitianForm& h);
WittClass witt_add(const WittClass& a, const WittClass& b);
WittClass witt_neg(const WittClass& a);

// All classes, deterministically ordered by (aniso dim, representatives).
std::vector<WittClass> witt_enumerate(const WittContext& ctx);

// X: the unique element of maximal anisotropic dimension, by enumeration.
WittClass witt_maximal(const WittContext& ctx);

// twist a class by a symmetric scalar (acts on W)
WittClass witt_twist(const WittClass& c, const FieldElement& s);

// λ = tr_{E|F}(z·) with F the prefix subtower of E.
struct TraceMapSpec {
    Tower E;
    int prefix_steps = 0;
    FieldElement z;  // ρ'-symmetric; defaults to 1
    int eps = 1;
    Tower F() const { return E->prefix(prefix_steps); }
};

TraceMapSpec make_trace_spec(const Tower& E, int prefix_steps, int eps);

// Tr_λ: W_{ρ',ε}(E) → W_{ρ,ε}(F) by expanding the Gram over an F-basis of E.
WittClass trace_map(const TraceMapSpec& spec, const WittClass& c);
HermitianForm trace_form(const TraceMapSpec& spec, const HermitianForm& h);

struct TraceTheoremReport {
    bool max_preserved = false;     // Tr(X_E) = X_F
    bool homomorphism = true;       // additivity on sampled pairs
    bool injective = false;
    long kernel_size = 0;
    long classes_E = 0;
    long classes_F = 0;
};

TraceTheoremReport verify_trace_theorem(const TraceMapSpec& spec);

}  // namespace pstrata
