#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "pstrata/matrix.hpp"
#include "pstrata/poly.hpp"
#include "pstrata/residue.hpp"
#include "pstrata/tower.hpp"

using namespace pstrata;

namespace {

Tower q3() { return FieldTower::make_qp(3, 24); }

StepSpec unram_x2_minus(long c) {
    return StepSpec{StepKind::Unramified, 2, {{mpq_class(-c)}, {mpq_class(0)}}};
}
StepSpec eis_x2_minus(long c) {
    return StepSpec{StepKind::Eisenstein, 2, {{mpq_class(-c)}, {mpq_class(0)}}};
}

// E = Q3(√5, √3) with ρ(√5) = -√5, the §4 example field.
Tower example_E() {
    return FieldTower::make(3, 24, {unram_x2_minus(5), eis_x2_minus(3)}, 0);
}

}  // namespace

TEST_CASE("Zp basics") {
    auto ctx = make_context(3, 24);
    Zp a(ctx, 6), b(ctx, 2);
    CHECK(a.val() == 1);
    CHECK(b.val() == 0);
    CHECK((a * b).val() == 1);
    CHECK((a + b).val() == 0);
    Zp z = a - a;
    CHECK(z.is_zero());
    CHECK(Zp(ctx, 0).is_exact_zero());
    CHECK_THROWS_AS(Zp(ctx, 0).inverse(), Error);
    Zp inv = b.inverse();
    CHECK((inv * b - Zp(ctx, 1)).is_zero());
    Zp r = Zp::from_ratio(ctx, -1, 2);
    CHECK((r * Zp(ctx, -2) - Zp(ctx, 1)).is_zero());
    // cancellation shortens the window but stays correct
    Zp big(ctx, 1 + 81), small(ctx, -1);
    Zp s = big + small;
    CHECK(s.val() == 4);
    // serialization round trip
    Zp x = Zp::from_ratio(ctx, 7, 5).shift(-2);
    Zp y = Zp::deserialize(ctx, x.serialize());
    CHECK((x - y).is_zero());
    CHECK(Zp(ctx, 7).is_square());   // 7 ≡ 1 mod 3
    CHECK(!Zp(ctx, 2).is_square());  // 2 is a non-residue mod 3
    Zp sq = Zp(ctx, 7).sqrt();
    CHECK((sq * sq - Zp(ctx, 7)).is_zero());
}

TEST_CASE("tower construction and tags") {
    CHECK_THROWS_AS(FieldTower::make_qp(2, 24), Error);
    auto F = q3();
    CHECK(F->degree() == 1);
    CHECK(F->ram_e() == 1);
    CHECK(F->res_f() == 1);

    // F = Q3(√5): unramified quadratic, f = 2
    auto F5 = FieldTower::make(3, 24, {unram_x2_minus(5)});
    CHECK(F5->res_f() == 2);
    CHECK(F5->ram_e() == 1);
    CHECK(F5->residue_field()->q() == 9);

    // E = Q3(√5, √3), e = 2, f = 2
    auto E = example_E();
    CHECK(E->ram_e() == 2);
    CHECK(E->res_f() == 2);
    CHECK(E->degree() == 4);

    // tag mismatches
    CHECK_THROWS_AS(FieldTower::make(3, 24, {unram_x2_minus(3)}), Error);  // X²-3 not unramified
    CHECK_THROWS_AS(FieldTower::make(3, 24, {eis_x2_minus(5)}), Error);    // X²-5 not eisenstein
    CHECK_THROWS_AS(FieldTower::make(3, 24, {StepSpec{StepKind::Eisenstein, 3, {{mpq_class(-3)}, {}, {}}}}),
                    Error);  // wild: p | degree
}

TEST_CASE("tower arithmetic, valuation, involution") {
    auto E = example_E();
    FieldElement pi = E->pi();        // √3
    FieldElement u = E->generator(0); // √5
    CHECK(pi.val() == 1);
    CHECK(u.val() == 0);
    CHECK(E->from_int(3).val() == 2);  // e = 2
    CHECK(E->from_int(0).is_zero());
    CHECK((pi * pi - E->from_int(3)).is_zero());
    CHECK((u * u - E->from_int(5)).is_zero());
    FieldElement x = (E->one() + pi) * (u - pi * u);
    FieldElement inv = x.inverse();
    CHECK((x * inv - E->one()).is_zero());

    // involution: ρ(√5) = -√5, fixes √3, so ρ(π) = π
    CHECK((u.rho() + u).is_zero());
    CHECK((pi.rho() - pi).is_zero());
    CHECK(!E->pi_is_skew());
    FieldElement y = u * pi + E->from_int(7);
    CHECK((y.rho().rho() - y).is_zero());

    // trace to F = Q3(√5): tr(√3) = 0, tr(3) = 6
    FieldElement tr_pi = pi.trace_to(1);
    CHECK(tr_pi.is_zero());
    FieldElement tr_3 = E->from_int(3).trace_to(1);
    CHECK((tr_3 - E->prefix(1)->from_int(6)).is_zero());
    // norm of √3 to F is -3
    CHECK((pi.norm_to(1) + E->prefix(1)->from_int(3)).is_zero());

    // residue field of E is F9
    CHECK(E->residue_field()->q() == 9);
    FieldElement w = u + E->from_int(1);
    auto r = w.residue();
    CHECK(!r.is_zero());
    CHECK((E->lift_residue(r) - w).val() >= 1);

    // mod π^k canonical truncation
    FieldElement big = E->from_int(100) + pi * E->from_int(33);
    FieldElement t = big.mod_pi_power(3);
    CHECK((big - t).val() >= 3);
}

TEST_CASE("skew uniformizer tower") {
    auto F = FieldTower::make(3, 24, {eis_x2_minus(3)}, 0);  // Q3(√3), ρ(√3) = -√3
    CHECK(F->pi_is_skew());
    CHECK((F->pi().rho() + F->pi()).is_zero());
}

TEST_CASE("residue field and polynomial factorization") {
    auto F5 = FieldTower::make(3, 24, {unram_x2_minus(5)});
    auto k9 = F5->residue_field();
    // field axioms sampled
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        auto a = ResidueElement::decode(k9, static_cast<long>(rng() % 9));
        auto b = ResidueElement::decode(k9, static_cast<long>(rng() % 9));
        auto c = ResidueElement::decode(k9, static_cast<long>(rng() % 9));
        CHECK((a * (b + c) - (a * b + a * c)).is_zero());
        if (!a.is_zero()) CHECK((a * a.inverse()).equals(ResidueElement::one(k9)));
    }

    auto kp = ResidueField::prime_field(3);
    auto proto = ResidueElement::zero(kp);
    // X^4 over F3
    RPoly x4 = RPoly::x_power(proto, 4);
    auto f1 = residue_primary_factorization(x4);
    REQUIRE(f1.size() == 1);
    CHECK(f1[0].first.deg() == 1);
    CHECK(f1[0].second == 4);

    // (X-1)^2 (X+1)^2 over F3
    RPoly xm1 = RPoly::x_power(proto, 1) - RPoly::constant(ResidueElement::one(kp));
    RPoly xp1 = RPoly::x_power(proto, 1) + RPoly::constant(ResidueElement::one(kp));
    RPoly f = xm1 * xm1 * xp1 * xp1;
    auto f2 = residue_primary_factorization(f);
    REQUIRE(f2.size() == 2);
    CHECK(f2[0].second == 2);
    CHECK(f2[1].second == 2);

    // X²+1 irreducible over F3 (no roots by exhaustion)
    RPoly x2p1 = RPoly::x_power(proto, 2) + RPoly::constant(ResidueElement::one(kp));
    CHECK(residue_roots(x2p1).empty());
    CHECK(residue_irreducible(x2p1));

    // product reconstructs and parts are pairwise coprime (random sample)
    for (int t = 0; t < 10; ++t) {
        std::vector<ResidueElement> cs;
        int deg = 2 + static_cast<int>(rng() % 5);
        for (int i = 0; i < deg; ++i) cs.push_back(ResidueElement::from_int(kp, static_cast<long>(rng() % 3)));
        cs.push_back(ResidueElement::one(kp));
        RPoly g(std::move(cs));
        auto parts = residue_primary_factorization(g);
        RPoly prod = RPoly::constant(ResidueElement::one(kp));
        for (auto& [base, mult] : parts) {
            CHECK(residue_irreducible(base));
            for (int i = 0; i < mult; ++i) prod = prod * base;
        }
        CHECK(prod.equals(g.monic()));
        for (size_t i = 0; i < parts.size(); ++i)
            for (size_t j = i + 1; j < parts.size(); ++j)
                CHECK(poly_gcd(parts[i].first, parts[j].first).deg() == 0);
    }
}

TEST_CASE("hensel factorization") {
    auto F = q3();
    auto kp = F->residue_field();
    auto proto = ResidueElement::zero(kp);
    FieldElement one = F->one();

    // X² - 1 with residue split (X-1)(X+1) → exact linear factors
    FPoly f(std::vector<FieldElement>{-one, F->zero(), one});
    RPoly g0 = RPoly::x_power(proto, 1) - RPoly::constant(ResidueElement::one(kp));
    RPoly g1 = RPoly::x_power(proto, 1) + RPoly::constant(ResidueElement::one(kp));
    auto [a, b] = hensel_factor(f, g0, g1);
    CHECK((a * b - f).is_zero());
    CHECK((a.coeff(0) + one).is_zero());

    // X² - 10: roots square to 10
    FPoly f10(std::vector<FieldElement>{F->from_int(-10), F->zero(), one});
    auto [c, d] = hensel_factor(f10, g0, g1);
    CHECK((c * d - f10).is_zero());
    FieldElement root = -c.coeff(0);
    CHECK((root * root - F->from_int(10)).is_zero());

    // X² - 3 with residue X·X → NotCoprime
    FPoly f3(std::vector<FieldElement>{F->from_int(-3), F->zero(), one});
    RPoly x = RPoly::x_power(proto, 1);
    CHECK_THROWS_AS(hensel_factor(f3, x, x), Error);

    // Hensel roundtrip property at 24 and 48 digits
    for (int digits : {24, 48}) {
        auto Fd = FieldTower::make_qp(3, digits);
        std::mt19937_64 rng(42);
        for (int t = 0; t < 8; ++t) {
            // random monic with residue split into distinct linear factors
            long r1 = 1 + static_cast<long>(rng() % 2);  // 1 or 2
            long r2 = 0;                                  // root 0 mod 3
            FPoly g(std::vector<FieldElement>{Fd->from_int(-r1 - 3 * static_cast<long>(rng() % 9)), Fd->one()});
            FPoly h(std::vector<FieldElement>{Fd->from_int(-r2 - 3 * static_cast<long>(rng() % 9)), Fd->one()});
            FPoly prod = g * h;
            auto kpd = Fd->residue_field();
            RPoly gb = reduce_poly(g), hb = reduce_poly(h);
            auto [gg, hh] = hensel_factor(prod, gb, hb);
            CHECK((gg * hh - prod).is_zero());
        }
    }
}

TEST_CASE("bezout over F[X]") {
    auto F = q3();
    FieldElement one = F->one();
    FPoly g0(std::vector<FieldElement>{-one, one});  // X-1
    FPoly g1(std::vector<FieldElement>{one, one});   // X+1
    auto [a0, a1] = bezout_combine(g0, g1);
    CHECK((a0 * g0 + a1 * g1 - FPoly::constant(one)).is_zero());
    CHECK(a0.deg() == 0);
    // a0 = -1/2, a1 = 1/2
    CHECK((a0.coeff(0) + F->from_ratio(mpq_class(1, 2))).is_zero());
    CHECK((a1.coeff(0) - F->from_ratio(mpq_class(1, 2))).is_zero());

    auto [b0, b1] = bezout_combine(FPoly::constant(one), g1);
    CHECK((b0 - FPoly::constant(one)).is_zero());
    CHECK(b1.is_zero());

    FPoly xx = FPoly::x_power(F->zero(), 1);
    CHECK_THROWS_AS(bezout_combine(xx, xx), Error);
}

TEST_CASE("matrix char/min poly") {
    auto F = q3();
    FieldElement one = F->one();
    Mat<FieldElement> id2 = Mat<FieldElement>::identity(2, one);
    auto chi = mat_charpoly(id2);
    // (X-1)^2
    FPoly expect = FPoly(std::vector<FieldElement>{-one, one});
    CHECK(chi.equals(expect * expect));
    auto mu = mat_minpoly(id2);
    CHECK(mu.equals(expect));

    // companion(X²-3): χ = μ = X²-3
    Mat<FieldElement> comp(2, 2, F->zero());
    comp.at(0, 1) = F->from_int(3);
    comp.at(1, 0) = one;
    FPoly x2m3(std::vector<FieldElement>{F->from_int(-3), F->zero(), one});
    CHECK(mat_charpoly(comp).equals(x2m3));
    CHECK(mat_minpoly(comp).equals(x2m3));
    // μ(M) = 0
    auto ev = mat_minpoly(comp).eval_in(comp, id2);
    CHECK(ev.is_zero());

    // diag(1,2): μ = (X-1)(X-2)
    Mat<FieldElement> dg(2, 2, F->zero());
    dg.at(0, 0) = one;
    dg.at(1, 1) = F->from_int(2);
    FPoly mu2 = mat_minpoly(dg);
    CHECK(mu2.deg() == 2);
    CHECK(mu2.eval(F->one()).is_zero());
    CHECK(mu2.eval(F->from_int(2)).is_zero());
}

TEST_CASE("trace pairing nondegenerate on tame towers") {
    for (auto E : {example_E(), FieldTower::make(5, 24, {unram_x2_minus(2)}),
                   FieldTower::make(5, 24, {eis_x2_minus(5)})}) {
        int d = E->degree();
        Mat<FieldElement> gram(d, d, E->prefix(0)->zero());
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                gram.at(i, j) = (E->basis_element(i) * E->basis_element(j)).trace_to(0);
        CHECK(!mat_det(gram).is_zero());
    }
}

TEST_CASE("rho is an involutive automorphism fixing the subfield") {
    auto E = example_E();
    std::mt19937_64 rng(11);
    for (int t = 0; t < 20; ++t) {
        std::vector<Zp> ca, cb;
        for (int i = 0; i < E->degree(); ++i) {
            ca.emplace_back(E->ctx(), static_cast<long>(rng() % 200) - 100);
            cb.emplace_back(E->ctx(), static_cast<long>(rng() % 200) - 100);
        }
        FieldElement a(E, ca), b(E, cb);
        CHECK((a.rho().rho() - a).is_zero());
        CHECK(((a * b).rho() - a.rho() * b.rho()).is_zero());
        CHECK(((a + b).rho() - (a.rho() + b.rho())).is_zero());
    }
    // fixed subtower: elements of Q3(√3) = Q3 + Q3·√3 are fixed
    FieldElement fixed = E->pi() * E->from_int(4) + E->from_int(9);
    CHECK(fixed.rho_fixed());
}
