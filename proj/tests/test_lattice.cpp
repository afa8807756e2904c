#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "pstrata/lattice.hpp"
#include "pstrata/symbols.hpp"

using namespace pstrata;

namespace {

Tower q3() { return FieldTower::make_qp(3, 24); }

FMat ident(const Tower& F, int n) { return FMat::identity(n, F->one()); }

FMat random_invertible(const Tower& F, int n, std::mt19937_64& rng) {
    while (true) {
        FMat m(n, n, F->zero());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                m.at(i, j) = F->from_int(static_cast<long>(rng() % 19) - 9);
        try {
            if (!mat_det(m).is_zero()) return m;
        } catch (const Error&) {
        }
    }
}

FMat random_monomial(const Tower& F, int n, std::mt19937_64& rng) {
    // permutation matrix with π-power and unit entries: lies in n(Λ) for
    // standard chains
    std::vector<int> perm(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    FMat m(n, n, F->zero());
    for (int j = 0; j < n; ++j) {
        long pw = static_cast<long>(rng() % 3) - 1;
        long u = 1 + static_cast<long>(rng() % (static_cast<unsigned long>(F->p()) - 1));
        m.at(perm[static_cast<size_t>(j)], j) = F->pi().pow(pw) * F->from_int(u);
    }
    return m;
}

// the §7 general-linear example chain: jumps (0,0,0,1), e = 2 on Q3^4
LatticeSequence example_chain(const Tower& F) {
    return LatticeSequence(F, ident(F, 4), {0, 0, 0, 1}, 2);
}

}  // namespace

TEST_CASE("OLattice canonical form and module ops") {
    auto F = q3();
    // L ⊆ L, sums, inclusion
    std::mt19937_64 rng(5);
    for (int t = 0; t < 10; ++t) {
        FMat g = random_invertible(F, 3, rng);
        OLattice L = OLattice::from_matrix_columns(g);
        CHECK(L.rank() == 3);
        CHECK(L.contains_lattice(L));
        CHECK(L.sum(L).equals(L));
        CHECK(L.intersect(L).equals(L));
        OLattice Ls = L.scale(2);
        CHECK(L.contains_lattice(Ls));
        CHECK(!Ls.contains_lattice(L));
        CHECK(L.quotient_length(Ls) == 6);  // π²o³ inside o³: 3·2
        // sum and intersection against a scaled copy
        CHECK(L.sum(Ls).equals(L));
        CHECK(L.intersect(Ls).equals(Ls));
    }
    // modular law sanity on random triples: (A∩C) + (B∩C) ⊆ (A+B)∩C
    for (int t = 0; t < 5; ++t) {
        OLattice A = OLattice::from_matrix_columns(random_invertible(F, 3, rng));
        OLattice B = OLattice::from_matrix_columns(random_invertible(F, 3, rng));
        OLattice C = OLattice::from_matrix_columns(random_invertible(F, 3, rng));
        OLattice lhs = A.intersect(C).sum(B.intersect(C));
        OLattice rhs = A.sum(B).intersect(C);
        CHECK(rhs.contains_lattice(lhs));
    }
}

TEST_CASE("lattice sequence basics and the §7 chain") {
    auto F = q3();
    // standard: jumps 0, e = 1: Λ_s = π^s o^4
    LatticeSequence std1(F, ident(F, 4), {0, 0, 0, 0}, 1);
    CHECK(std1.level(0).equals(OLattice::from_matrix_columns(ident(F, 4))));
    CHECK(std1.level(1).equals(OLattice::from_matrix_columns(ident(F, 4)).scale(1)));
    CHECK(std1.is_chain());

    LatticeSequence ex = example_chain(F);
    // Λ_0 = o^4, Λ_1 = (p,p,p,o) under our jump convention? check profiles:
    // d_s = #{j : a_j = s}: (3,1)
    auto prof = ex.residual_profile();
    CHECK(prof == std::vector<long>{3, 1});
    // ν_Λ(E_41) = 1
    FMat e41(4, 4, F->zero());
    e41.at(3, 0) = F->one();
    CHECK(ex.nu(e41) == 1);
    // ν_Λ(π id) = e = 2
    CHECK(ex.nu(ident(F, 4) * F->pi()) == 2);
    // ν_Λ(0) = ∞
    CHECK(ex.nu(FMat::zero(4, 4, F->zero())) == VAL_INF);

    // block profiles of the §7 example: V¹ = <v1,v2> → (2,0); V² = <v3,v4> → (1,1)
    FMat p1(4, 4, F->zero()), p2(4, 4, F->zero());
    p1.at(0, 0) = F->one();
    p1.at(1, 1) = F->one();
    p2.at(2, 2) = F->one();
    p2.at(3, 3) = F->one();
    CHECK(ex.block_profile(p1) == std::vector<long>{2, 0});
    CHECK(ex.block_profile(p2) == std::vector<long>{1, 1});

    // full-space block, e = 1: profile (n)
    CHECK(std1.block_profile(ident(F, 4)) == std::vector<long>{4});

    // a_0 · a_1 ⊆ a_1 for the §7 chain (multiply generators, reduce)
    OLattice a0 = ex.a_lattice(0), a1 = ex.a_lattice(1);
    CHECK(a1.sum(a1).equals(a1));
    for (const auto& x : a0.basis())
        for (const auto& y : a1.basis()) {
            FMat xm = unflatten(F, 4, x), ym = unflatten(F, 4, y);
            CHECK(a1.contains(flatten(xm * ym)));
        }
    // translation: (Λ+0) = Λ
    CHECK(ex.translate(0).equals(ex));
    CHECK(!ex.translate(1).equals(ex));
}

TEST_CASE("dagger construction is a chain") {
    auto F = q3();
    LatticeSequence lam(F, ident(F, 2), {0, 0}, 2);  // not a chain: d = (2,0)
    CHECK(!lam.is_chain());
    LatticeSequence dag = lam.dagger();
    CHECK(dag.dim() == 4);
    CHECK(dag.period() == 2);
    CHECK(dag.is_chain());
    auto prof = dag.residual_profile();
    for (long d : prof) CHECK(d > 0);

    // direct sum of the §7 example's blocks reassembles the chain levels
    LatticeSequence l1(F, ident(F, 2), {0, 0}, 2);
    LatticeSequence l2(F, ident(F, 2), {0, 1}, 2);
    LatticeSequence sum = LatticeSequence::direct_sum(l1, l2);
    LatticeSequence ex = example_chain(F);
    // same sequence up to basis reordering (v1,v2 | v3,v4)
    CHECK(sum.equals(ex));

    LatticeSequence other(F, ident(F, 2), {0, 0}, 3);
    CHECK_THROWS_AS(LatticeSequence::direct_sum(l1, other), Error);
}

TEST_CASE("duality") {
    auto F = q3();
    // standard lattice, identity Gram: (Λ_0)^# = Λ_1, witness u = 1
    LatticeSequence std1(F, ident(F, 2), {0, 0}, 1);
    FMat gram = ident(F, 2);
    auto u = std1.self_dual_witness(gram);
    REQUIRE(u.has_value());
    CHECK(*u == 1);
    LatticeSequence d = std1.dual(gram);
    CHECK(d.level(0).equals(std1.level(1)));

    // antidiagonal skew Gram with the principal e = 4 chain → self-dual
    auto Fr = FieldTower::make(3, 24, {StepSpec{StepKind::Eisenstein, 2, {{mpq_class(-3)}, {mpq_class(0)}}}}, 0);
    FMat skg(4, 4, Fr->zero());
    skg.at(0, 3) = Fr->one();
    skg.at(1, 2) = Fr->one();
    skg.at(2, 1) = -Fr->one();
    skg.at(3, 0) = -Fr->one();
    LatticeSequence princ(Fr, ident(Fr, 4), {0, 1, 2, 3}, 4);
    CHECK(princ.self_dual_witness(skg).has_value());

    // a random unbalanced scaling is usually not self-dual
    LatticeSequence bad(F, ident(F, 2), {0, 0}, 1);
    FMat gram2 = ident(F, 2);
    gram2.at(1, 1) = F->from_int(9);
    CHECK(!bad.self_dual_witness(gram2).has_value());

    // dual of dual returns the original up to translation (random sample)
    std::mt19937_64 rng(17);
    for (int t = 0; t < 12; ++t) {
        int n = 2 + static_cast<int>(rng() % 2);
        long e = 1 + static_cast<long>(rng() % 3);
        std::vector<long> jumps;
        for (int j = 0; j < n; ++j) jumps.push_back(static_cast<long>(rng() % (2 * e)) - e);
        LatticeSequence lam(F, random_invertible(F, n, rng), jumps, e);
        FMat g = random_invertible(F, n, rng);
        FMat sym = g + g.transpose();  // symmetric, usually invertible
        try {
            if (mat_det(sym).is_zero()) continue;
        } catch (const Error&) {
            continue;
        }
        LatticeSequence dd = lam.dual(sym).dual(sym);
        bool matched = false;
        for (long tsh = -2 * e; tsh <= 2 * e && !matched; ++tsh)
            if (dd.equals(lam.translate(tsh))) matched = true;
        CHECK(matched);
    }
}

TEST_CASE("nu superadditivity and normalizer") {
    auto F = q3();
    LatticeSequence ex = example_chain(F);
    std::mt19937_64 rng(23);
    for (int t = 0; t < 15; ++t) {
        FMat g = random_monomial(F, 4, rng);
        FMat h = random_monomial(F, 4, rng);
        long ng = ex.nu(g), nh = ex.nu(h), ngh = ex.nu(g * h);
        CHECK(ngh >= ng + nh);
        CHECK(ex.nu(g) + ex.nu(mat_inverse(g)) <= 0);
    }
    // jump-compatible monomials do normalize: permute {v1,v2,v3}, scale by units
    for (int t = 0; t < 10; ++t) {
        std::vector<int> perm{0, 1, 2};
        std::shuffle(perm.begin(), perm.end(), rng);
        FMat g(4, 4, F->zero());
        for (int j = 0; j < 3; ++j)
            g.at(perm[static_cast<size_t>(j)], j) = F->from_int(1 + static_cast<long>(rng() % 2));
        g.at(3, 3) = F->from_int(1 + static_cast<long>(rng() % 2));
        CHECK(ex.in_normalizer(g));
        CHECK(ex.in_normalizer(g * F->pi()));
    }
    // non-normalizing example: diag(1, 1, 1, π) + E12 breaks monomial shape
    FMat x = ident(F, 4);
    x.at(0, 1) = F->pi();
    x.at(3, 3) = F->pi();
    // ν(g) + ν(g⁻¹) ≤ 0 always
    long a = ex.nu(x), b = ex.nu(mat_inverse(x));
    CHECK(a + b <= 0);
}

TEST_CASE("residual profile invariant under splitting-basis change") {
    auto F = q3();
    std::mt19937_64 rng(31);
    LatticeSequence lam(F, ident(F, 3), {0, 1, 1}, 2);
    auto prof = lam.residual_profile();
    // change of splitting basis preserving Λ: unit-triangular mixes within
    // equal-jump groups plus π-graded mixing across groups
    FMat u = ident(F, 3);
    u.at(1, 2) = F->from_int(static_cast<long>(rng() % 9));       // same jump group
    u.at(0, 1) = F->pi() * F->from_int(static_cast<long>(rng() % 9));  // jump 1 → 0 needs π? here a_1=1 > a_0=0
    LatticeSequence lam2(F, lam.splitting_basis() * u, {0, 1, 1}, 2);
    CHECK(lam2.equals(lam));
    CHECK(lam2.residual_profile() == prof);
}
