#include "pstrata/witt.hpp"

#include <algorithm>

namespace pstrata {

FormKind WittContext::kind() const {
    if (F->has_involution()) return eps == 1 ? FormKind::Hermitian : FormKind::SkewHermitian;
    return eps == 1 ? FormKind::Quadratic : FormKind::Symplectic;
}

GroupShape witt_expected_shape(const WittContext& ctx) {
    bool minus_one_square = ctx.F->from_int(-1).is_square();
    switch (ctx.kind()) {
        case FormKind::Symplectic: return {1, 1};
        case FormKind::Hermitian:
        case FormKind::SkewHermitian: return minus_one_square ? GroupShape{4, 2} : GroupShape{4, 4};
        case FormKind::Quadratic: return minus_one_square ? GroupShape{16, 2} : GroupShape{16, 4};
    }
    return {1, 1};
}

WittClass::WittClass(WittContext ctx, FormClass cls, std::optional<HermitianForm> rep)
    : ctx_(std::move(ctx)), cls_(cls), rep_(std::move(rep)) {}

bool WittClass::equals(const WittClass& o) const {
    require(ctx_ == o.ctx_, Err::ContextMismatch, "Witt classes in different contexts");
    return cls_ == o.cls_;
}

WittClass witt_zero(const WittContext& ctx) {
    FormClass c;
    c.kind = ctx.kind();
    c.rank = 0;
    return WittClass(ctx, c, std::nullopt);
}

WittClass witt_class_of(const HermitianForm& h) {
    WittContext ctx{h.tower(), h.eps()};
    WittBasis w = witt_decompose(h);
    if (w.tail.empty()) return witt_zero(ctx);
    int t = static_cast<int>(w.tail.size());
    FMat g(t, t, h.tower()->zero());
    for (int i = 0; i < t; ++i) g.at(i, i) = w.tail[static_cast<size_t>(i)];
    HermitianForm rep(h.tower(), h.eps(), g);
    return WittClass(ctx, classify_form(rep), rep);
}

WittClass witt_add(const WittClass& a, const WittClass& b) {
    require(a.context() == b.context(), Err::ContextMismatch, "Witt sum in different contexts");
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    return witt_class_of(HermitianForm::direct_sum(*a.rep(), *b.rep()));
}

WittClass witt_neg(const WittClass& a) {
    if (a.is_zero()) return a;
    return witt_class_of(HermitianForm(a.rep()->tower(), a.rep()->eps(), -a.rep()->gram()));
}

WittClass witt_twist(const WittClass& c, const FieldElement& s) {
    require(!s.is_zero(), Err::BadInput, "twist by zero");
    require(s.rho_fixed(), Err::BadInput, "twist scalar must be symmetric");
    if (c.is_zero()) return c;
    const HermitianForm& r = *c.rep();
    FMat g = FMat::identity(r.rank(), r.tower()->one()) * s;
    return witt_class_of(r.twist(g));
}

namespace {

// ρ-fixed representatives that exhaust F0^× modulo norms resp. squares
std::vector<FieldElement> scalar_reps(const Tower& F) {
    std::vector<FieldElement> out;
    if (!F->has_involution()) {
        const auto& kappa = F->residue_field();
        FieldElement u = F->one();
        for (long code = 1; code < kappa->q(); ++code) {
            ResidueElement cand = ResidueElement::decode(kappa, code);
            if (!cand.is_square()) {
                u = F->lift_residue(cand);
                break;
            }
        }
        out = {F->one(), u, F->pi(), u * F->pi()};
        return out;
    }
    // ρ-fixed elements representing F0^×/N(F^×) = {1, non-norm}
    out.push_back(F->one());
    std::vector<FieldElement> candidates;
    const auto& kappa = F->residue_field();
    for (long code = 1; code < std::min<long>(kappa->q(), 64); ++code)
        candidates.push_back(F->lift_residue(ResidueElement::decode(kappa, code)));
    candidates.push_back(F->from_int(F->p()));
    candidates.push_back(involution_disc(F));
    // ρ-fixed monomials of small valuation (pick up odd-ν elements of F0 in
    // the unramified case) and their unit multiples
    std::vector<FieldElement> monos;
    for (int i = 0; i < F->degree(); ++i)
        if (F->monomial_conj_parity(i) == 0 && F->monomial_weight(i) > 0)
            monos.push_back(F->basis_element(i));
    for (const auto& m : monos) {
        candidates.push_back(m);
        for (long code = 2; code < std::min<long>(kappa->q(), 16); ++code)
            candidates.push_back(m * F->lift_residue(ResidueElement::decode(kappa, code)));
    }
    for (auto& c : candidates) {
        if (c.is_zero() || !c.rho_fixed()) continue;
        if (!is_norm_to_fixed_field(c)) {
            out.push_back(c);
            return out;
        }
    }
    fail(Err::NormalizationFailed, "no non-norm representative found");
}

}  // namespace

std::vector<WittClass> witt_enumerate(const WittContext& ctx) {
    const Tower& F = ctx.F;
    std::vector<WittClass> out{witt_zero(ctx)};
    if (ctx.kind() == FormKind::Symplectic) return out;

    // skew-hermitian classes are the γ-twists of the hermitian ones
    FieldElement gamma = F->has_involution() ? F->skew_generator() : F->one();
    auto push_unique = [&](const HermitianForm& h) {
        WittClass c = witt_class_of(h);
        if (c.aniso_dim() != h.rank()) return;  // not anisotropic: skip
        for (const auto& e : out)
            if (e.equals(c)) return;
        out.push_back(c);
    };
    std::vector<FieldElement> reps = scalar_reps(F);
    int max_dim = ctx.kind() == FormKind::Quadratic ? 4 : 2;
    std::vector<std::vector<FieldElement>> diags{{}};
    for (int dim = 1; dim <= max_dim; ++dim) {
        std::vector<std::vector<FieldElement>> next;
        for (const auto& d : diags) {
            if (static_cast<int>(d.size()) != dim - 1) continue;
            for (const auto& r : reps) {
                auto nd = d;
                nd.push_back(r);
                next.push_back(nd);
            }
        }
        for (const auto& d : next) {
            FMat g(dim, dim, F->zero());
            for (int i = 0; i < dim; ++i) g.at(i, i) = d[static_cast<size_t>(i)];
            if (ctx.kind() == FormKind::SkewHermitian) {
                // h with h(v,v) diagonal γ·sym is skew-hermitian
                for (int i = 0; i < dim; ++i) g.at(i, i) = g.at(i, i) * gamma;
                push_unique(HermitianForm(F, -1, g));
            } else {
                push_unique(HermitianForm(F, ctx.eps, g));
            }
        }
        diags.insert(diags.end(), next.begin(), next.end());
    }
    std::sort(out.begin(), out.end(), [](const WittClass& a, const WittClass& b) {
        if (a.aniso_dim() != b.aniso_dim()) return a.aniso_dim() < b.aniso_dim();
        return a.cls().str() < b.cls().str();
    });
    return out;
}

WittClass witt_maximal(const WittContext& ctx) {
    auto all = witt_enumerate(ctx);
    int best = 0;
    size_t arg = 0;
    int count = 0;
    for (size_t i = 0; i < all.size(); ++i) {
        if (all[i].aniso_dim() > best) {
            best = all[i].aniso_dim();
            arg = i;
            count = 1;
        } else if (all[i].aniso_dim() == best && best > 0) {
            ++count;
        }
    }
    require(count <= 1, Err::UnsupportedContext, "maximal anisotropic class is not unique");
    return all[arg];
}

TraceMapSpec make_trace_spec(const Tower& E, int prefix_steps, int eps) {
    return TraceMapSpec{E, prefix_steps, E->one(), eps};
}

HermitianForm trace_form(const TraceMapSpec& spec, const HermitianForm& h) {
    const Tower& E = spec.E;
    require(FieldTower::same(E, h.tower()), Err::ContextMismatch, "form not over the spec's E");
    require(spec.z.rho_fixed(), Err::BadInput, "λ-twist must be a symmetric element");
    Tower F = spec.F();
    int dpre = F->degree();
    int du = E->degree() / dpre;
    int m = h.rank();
    // wildness guard: the trace pairing must be nondegenerate
    {
        Mat<FieldElement> tp(du, du, F->zero());
        for (int a = 0; a < du; ++a)
            for (int b = 0; b < du; ++b) {
                FieldElement prod = spec.z * E->basis_element(dpre * a) * E->basis_element(dpre * b);
                tp.at(a, b) = prod.trace_to(spec.prefix_steps);
            }
        require(!mat_det(tp).is_zero(), Err::DegenerateTracePairing, "λ-pairing is degenerate");
    }
    FMat g(m * du, m * du, F->zero());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int a = 0; a < du; ++a)
                for (int b = 0; b < du; ++b) {
                    FieldElement val = spec.z * E->basis_element(dpre * a).rho() * h.gram().at(i, j) *
                                       E->basis_element(dpre * b);
                    g.at(i * du + a, j * du + b) = val.trace_to(spec.prefix_steps);
                }
    return HermitianForm(F, h.eps(), std::move(g));
}

WittClass trace_map(const TraceMapSpec& spec, const WittClass& c) {
    WittContext target{spec.F(), spec.eps};
    if (c.is_zero()) return witt_zero(target);
    return witt_class_of(trace_form(spec, *c.rep()));
}

TraceTheoremReport verify_trace_theorem(const TraceMapSpec& spec) {
    TraceTheoremReport rep;
    WittContext ctxE{spec.E, spec.eps};
    WittContext ctxF{spec.F(), spec.eps};
    auto clsE = witt_enumerate(ctxE);
    auto clsF = witt_enumerate(ctxF);
    rep.classes_E = static_cast<long>(clsE.size());
    rep.classes_F = static_cast<long>(clsF.size());
    WittClass XE = witt_maximal(ctxE), XF = witt_maximal(ctxF);
    rep.max_preserved = trace_map(spec, XE).equals(XF);
    std::vector<WittClass> images;
    for (const auto& c : clsE) images.push_back(trace_map(spec, c));
    rep.kernel_size = 0;
    for (const auto& im : images)
        if (im.is_zero()) ++rep.kernel_size;
    rep.injective = true;
    for (size_t i = 0; i < images.size() && rep.injective; ++i)
        for (size_t j = i + 1; j < images.size(); ++j)
            if (images[i].equals(images[j])) {
                rep.injective = false;
                break;
            }
    // additivity on all pairs (the enumeration is small)
    for (size_t i = 0; i < clsE.size() && rep.homomorphism; ++i)
        for (size_t j = 0; j < clsE.size(); ++j) {
            WittClass lhs = trace_map(spec, witt_add(clsE[i], clsE[j]));
            WittClass rhs = witt_add(images[i], images[j]);
            if (!lhs.equals(rhs)) {
                rep.homomorphism = false;
                break;
            }
        }
    return rep;
}

}  // namespace pstrata
