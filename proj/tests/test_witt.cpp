#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pstrata/witt.hpp"

using namespace pstrata;

namespace {

StepSpec unram(long c) { return StepSpec{StepKind::Unramified, 2, {{mpq_class(-c)}, {mpq_class(0)}}}; }
StepSpec eis(long c) { return StepSpec{StepKind::Eisenstein, 2, {{mpq_class(-c)}, {mpq_class(0)}}}; }
StepSpec eis3(long c) { return StepSpec{StepKind::Eisenstein, 3, {{mpq_class(-c)}, {}, {}}}; }

}  // namespace

TEST_CASE("witt group orders match the structure theorem") {
    struct Case {
        Tower F;
        int eps;
        long order, exponent;
    };
    std::vector<Case> cases;
    auto q3 = FieldTower::make_qp(3, 24);
    auto q5 = FieldTower::make_qp(5, 24);
    cases.push_back({q3, 1, 16, 4});   // -1 not a square in Q3: C4×C4
    cases.push_back({q3, -1, 1, 1});   // symplectic
    cases.push_back({q5, 1, 16, 2});   // -1 a square in Q5: C2^4
    cases.push_back({q5, -1, 1, 1});
    // unitary, unramified quadratic: Q3(√5)/Q3 and Q5(√2)/Q5: -1 square → C2×C2
    cases.push_back({FieldTower::make(3, 24, {unram(5)}, 0), 1, 4, 2});
    cases.push_back({FieldTower::make(5, 24, {unram(2)}, 0), 1, 4, 2});
    // unitary, ramified quadratic over Q3: -1 not a square in Q3(√3) → C4
    cases.push_back({FieldTower::make(3, 24, {eis(3)}, 0), 1, 4, 4});
    // over Q5(√5): -1 = 4 is a square → C2×C2
    cases.push_back({FieldTower::make(5, 24, {eis(5)}, 0), 1, 4, 2});
    // skew-hermitian contexts have the same orders
    cases.push_back({FieldTower::make(3, 24, {unram(5)}, 0), -1, 4, 2});
    cases.push_back({FieldTower::make(3, 24, {eis(3)}, 0), -1, 4, 4});

    for (auto& c : cases) {
        WittContext ctx{c.F, c.eps};
        auto shape = witt_expected_shape(ctx);
        CHECK(shape.order == c.order);
        auto all = witt_enumerate(ctx);
        CHECK(static_cast<long>(all.size()) == c.order);
        // group axioms: closure and the exponent
        long expnt = 1;
        for (const auto& a : all) {
            WittClass acc = witt_zero(ctx);
            long ord = 0;
            do {
                acc = witt_add(acc, a);
                ++ord;
            } while (!acc.is_zero() && ord < 8);
            CHECK(acc.is_zero());
            expnt = std::max(expnt, ord);
            // inverse exists
            CHECK(witt_add(a, witt_neg(a)).is_zero());
        }
        CHECK(expnt == c.exponent);
    }
}

TEST_CASE("witt class basics") {
    auto F = FieldTower::make_qp(3, 24);
    WittContext ctx{F, 1};
    // hyperbolic plane → zero class
    FMat h(2, 2, F->zero());
    h.at(0, 1) = F->one();
    h.at(1, 0) = F->one();
    CHECK(witt_class_of(HermitianForm(F, 1, h)).is_zero());
    // any symplectic form → zero
    FMat sp(2, 2, F->zero());
    sp.at(0, 1) = F->one();
    sp.at(1, 0) = -F->one();
    CHECK(witt_class_of(HermitianForm(F, -1, sp)).is_zero());
    // the quaternionic form is X (maximal anisotropic dimension 4)
    FMat q(4, 4, F->zero());
    q.at(0, 0) = F->one();
    q.at(1, 1) = F->from_int(-2);
    q.at(2, 2) = F->from_int(-3);
    q.at(3, 3) = F->from_int(6);
    WittClass X = witt_class_of(HermitianForm(F, 1, q));
    CHECK(X.aniso_dim() == 4);
    CHECK(X.equals(witt_maximal(ctx)));
    // class of h ⊕ hyperbolic equals class of h
    FMat six(6, 6, F->zero());
    six.at(0, 0) = F->one();
    six.at(1, 1) = F->from_int(-2);
    six.at(2, 2) = F->from_int(-3);
    six.at(3, 3) = F->from_int(6);
    six.at(4, 5) = F->one();
    six.at(5, 4) = F->one();
    CHECK(witt_class_of(HermitianForm(F, 1, six)).equals(X));
}

TEST_CASE("the §4 trace example") {
    // E = Q3(√5, √3), F = Q3(√5), ρ'(√5) = -√5
    auto E = FieldTower::make(3, 24, {unram(5), eis(3)}, 0);
    auto spec = make_trace_spec(E, 1, 1);
    Tower F = spec.F();

    // Tr⟨(√3)⟩ has Gram (0 6 / 6 0) and is the zero class
    FMat g1(1, 1, E->zero());
    g1.at(0, 0) = E->pi();  // √3, fixed by ρ'
    HermitianForm h_sqrt3(E, 1, g1);
    HermitianForm tr3 = trace_form(spec, h_sqrt3);
    CHECK((tr3.gram().at(0, 0)).is_zero());
    CHECK((tr3.gram().at(0, 1) - F->from_int(6)).is_zero());
    CHECK((tr3.gram().at(1, 0) - F->from_int(6)).is_zero());
    CHECK((tr3.gram().at(1, 1)).is_zero());
    CHECK(witt_class_of(tr3).is_zero());
    CHECK(trace_map(spec, witt_class_of(h_sqrt3)).is_zero());

    // Tr⟨(1)⟩ has Gram diag(2,6) and is nonzero
    FMat g2(1, 1, E->zero());
    g2.at(0, 0) = E->one();
    HermitianForm h_one(E, 1, g2);
    HermitianForm tr1 = trace_form(spec, h_one);
    CHECK((tr1.gram().at(0, 0) - F->from_int(2)).is_zero());
    CHECK((tr1.gram().at(1, 1) - F->from_int(6)).is_zero());
    CHECK(tr1.gram().at(0, 1).is_zero());
    CHECK(!witt_class_of(tr1).is_zero());

    // Tr of zero is zero
    CHECK(trace_map(spec, witt_zero(WittContext{E, 1})).is_zero());
}

TEST_CASE("trace theorem across tame quadratic specs") {
    std::vector<TraceMapSpec> specs;
    // quadratic steps over Q3 and Q5, trivial and conjugating involutions
    for (long p : {3L, 5L}) {
        long u = p == 3 ? 5 : 2;   // unramified disc
        long e = p;                // eisenstein constant: X² - p
        specs.push_back(make_trace_spec(FieldTower::make(p, 24, {unram(u)}), 0, 1));
        specs.push_back(make_trace_spec(FieldTower::make(p, 24, {eis(e)}), 0, 1));
        specs.push_back(make_trace_spec(FieldTower::make(p, 24, {unram(u)}, 0), 0, 1));
        specs.push_back(make_trace_spec(FieldTower::make(p, 24, {eis(e)}, 0), 0, 1));
        specs.push_back(make_trace_spec(FieldTower::make(p, 24, {unram(u)}, 0), 0, -1));
        specs.push_back(make_trace_spec(FieldTower::make(p, 24, {eis(e)}, 0), 0, -1));
    }
    // a two-step tower: E = Q3(√5,√3) over F = Q3(√5), unitary both ways
    specs.push_back(make_trace_spec(FieldTower::make(3, 24, {unram(5), eis(3)}, 0), 1, 1));
    specs.push_back(make_trace_spec(FieldTower::make(3, 24, {unram(5), eis(3)}, 0), 1, -1));
    for (auto& spec : specs) {
        auto rep = verify_trace_theorem(spec);
        CHECK(rep.max_preserved);
        CHECK(rep.homomorphism);
    }
}

TEST_CASE("odd-degree injectivity and the degree-2 kernel") {
    // E = Q5(5^(1/3))/Q5 tame cubic: Tr is injective
    auto E = FieldTower::make(5, 24, {eis3(5)});
    auto spec = make_trace_spec(E, 0, 1);
    auto rep = verify_trace_theorem(spec);
    CHECK(rep.max_preserved);
    CHECK(rep.injective);

    // E = E0 quadratic over F = F0 = Q3: kernel of Tr has exactly 4 elements
    // with anisotropic dimension ≤ 2
    auto E2 = FieldTower::make(3, 24, {eis(3)});
    auto spec2 = make_trace_spec(E2, 0, 1);
    auto rep2 = verify_trace_theorem(spec2);
    CHECK(rep2.kernel_size == 4);
    WittContext ctxE{E2, 1};
    for (const auto& c : witt_enumerate(ctxE)) {
        if (trace_map(spec2, c).is_zero()) CHECK(c.aniso_dim() <= 2);
    }
}

TEST_CASE("symmetric twists act transitively on odd anisotropic dimensions") {
    auto F = FieldTower::make_qp(3, 24);
    WittContext ctx{F, 1};
    auto all = witt_enumerate(ctx);
    std::vector<FieldElement> scalars{F->one(), F->from_int(2), F->pi(), F->from_int(2) * F->pi(),
                                      F->from_int(-1), F->from_int(-2)};
    for (int dim : {1, 3}) {
        std::vector<WittClass> layer;
        for (const auto& c : all)
            if (c.aniso_dim() == dim) layer.push_back(c);
        // orbit of the first element under scalar twists covers the layer
        for (const auto& target : layer) {
            bool hit = false;
            for (const auto& s : scalars)
                if (witt_twist(layer.front(), s).equals(target)) hit = true;
            CHECK(hit);
        }
    }
    // the zero class and X are fixed by every symmetric twist
    WittClass X = witt_maximal(ctx);
    for (const auto& s : scalars) {
        CHECK(witt_twist(X, s).equals(X));
        CHECK(witt_twist(witt_zero(ctx), s).is_zero());
    }
}

TEST_CASE("z-twisted λ fixes the image of X") {
    auto E = FieldTower::make(3, 24, {unram(5), eis(3)}, 0);
    auto spec = make_trace_spec(E, 1, 1);
    WittContext ctxE{E, 1};
    WittClass XE = witt_maximal(ctxE);
    WittClass XF = witt_maximal(WittContext{spec.F(), 1});
    // change λ to tr(z·) for symmetric z: image of X_E stays X_F
    for (long zi : {1L, 2L, 7L}) {
        TraceMapSpec tw = spec;
        tw.z = E->from_int(zi) + E->pi() * E->from_int(zi % 3);  // ρ'-fixed: √3 is fixed here
        if (!tw.z.rho_fixed() || tw.z.is_zero()) continue;
        CHECK(trace_map(tw, XE).equals(XF));
    }
}
