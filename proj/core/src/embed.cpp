#include "pstrata/embed.hpp"

#include <algorithm>

namespace pstrata {

namespace {

std::vector<FieldElement> mat_apply(const FMat& m, const std::vector<FieldElement>& v) {
    std::vector<FieldElement> out(static_cast<size_t>(m.rows()), m.proto().tower()->zero());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) out[static_cast<size_t>(i)] += m.at(i, j) * v[static_cast<size_t>(j)];
    return out;
}

// Solve Σ_j x_j·cols[j] = rhs over Q_p, flattening FieldElement matrices to
// their Zp coordinates; full valuation pivoting, one solution returned.
std::vector<Zp> qp_solve(const Tower& F, const std::vector<FMat>& cols, const FMat& rhs) {
    int n = rhs.rows();
    int degf = F->degree();
    int rows = n * n * degf;
    int m = static_cast<int>(cols.size());
    Mat<Zp> aug(rows, m + 1, Zp::zero(F->ctx()));
    auto put = [&](const FMat& mat, int col) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int t = 0; t < degf; ++t)
                    aug.at((i * n + j) * degf + t, col) = mat.at(i, j).coords()[static_cast<size_t>(t)];
    };
    for (int c = 0; c < m; ++c) put(cols[static_cast<size_t>(c)], c);
    put(rhs, m);
    std::vector<bool> row_used(static_cast<size_t>(rows), false), col_used(static_cast<size_t>(m), false);
    std::vector<std::pair<int, int>> pivots;
    while (true) {
        int br = -1, bc = -1;
        long bw = VAL_INF;
        for (int i = 0; i < rows; ++i) {
            if (row_used[static_cast<size_t>(i)]) continue;
            for (int j = 0; j < m; ++j) {
                if (col_used[static_cast<size_t>(j)] || aug.at(i, j).is_zero()) continue;
                long v = aug.at(i, j).val_bound();
                if (v < bw) {
                    bw = v;
                    br = i;
                    bc = j;
                }
            }
        }
        if (br < 0) break;
        Zp pinv = aug.at(br, bc).inverse();
        for (int i = 0; i < rows; ++i) {
            if (i == br || aug.at(i, bc).is_zero()) continue;
            Zp f = aug.at(i, bc) * pinv;
            for (int j = 0; j <= m; ++j) aug.at(i, j) -= f * aug.at(br, j);
        }
        row_used[static_cast<size_t>(br)] = true;
        col_used[static_cast<size_t>(bc)] = true;
        pivots.emplace_back(br, bc);
    }
    for (int i = 0; i < rows; ++i)
        if (!row_used[static_cast<size_t>(i)])
            require(aug.at(i, m).is_zero(), Err::NonConvergence, "inconsistent Q_p system");
    std::vector<Zp> x(static_cast<size_t>(m), Zp::zero(F->ctx()));
    for (auto& [r, c] : pivots) {
        Zp v = aug.at(r, m);
        for (int j = 0; j < m; ++j)
            if (j != c && !aug.at(r, j).is_zero() && !x[static_cast<size_t>(j)].is_zero())
                v -= aug.at(r, j) * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(c)] = v * aug.at(r, c).inverse();
    }
    return x;
}

mpq_class zp_to_rational(const Zp& z, long p) {
    if (z.is_zero()) return mpq_class(0);
    long v = z.val();
    mpz_class unitrep = z.shift(-v).integer_rep(z.rel());
    mpq_class val(unitrep);
    for (long t = 0; t < v; ++t) val *= p;
    for (long t = 0; t < -v; ++t) val /= p;
    return val;
}

}  // namespace

EmbeddedField::EmbeddedField(Tower E, int prefix_steps, std::vector<FMat> upper_monomial_images)
    : E_(std::move(E)), prefix_(prefix_steps), images_(std::move(upper_monomial_images)) {
    Tower Fp = E_->prefix(prefix_);
    edeg_ = E_->degree() / Fp->degree();
    require(static_cast<int>(images_.size()) == edeg_, Err::BadInput, "one image per upper monomial");
    n_ = images_[0].rows();
    require(n_ % edeg_ == 0, Err::BadInput, "V is not free over E");
    // greedy E-basis
    const Tower& F = Fp;
    int m = n_ / edeg_;
    std::vector<std::vector<FieldElement>> cols;
    FMat solver(n_, n_, F->zero());
    int col = 0;
    for (int cand = 0; cand < n_ && static_cast<int>(ebasis_.size()) < m; ++cand) {
        std::vector<FieldElement> w(static_cast<size_t>(n_), F->zero());
        w[static_cast<size_t>(cand)] = F->one();
        // trial: does adding φ(θ_u)·w keep the family independent?
        std::vector<std::vector<FieldElement>> trial = cols;
        for (int u = 0; u < edeg_; ++u) trial.push_back(mat_apply(images_[static_cast<size_t>(u)], w));
        FMat tm(n_, static_cast<int>(trial.size()), F->zero());
        for (size_t c = 0; c < trial.size(); ++c)
            for (int r = 0; r < n_; ++r) tm.at(r, static_cast<int>(c)) = trial[c][static_cast<size_t>(r)];
        if (mat_rank(tm) != static_cast<int>(trial.size())) continue;
        ebasis_.push_back(w);
        cols = std::move(trial);
    }
    require(static_cast<int>(ebasis_.size()) == m, Err::BadInput, "no E-basis found");
    for (size_t c = 0; c < cols.size(); ++c)
        for (int r = 0; r < n_; ++r) solver.at(r, static_cast<int>(c)) = cols[c][static_cast<size_t>(r)];
    coord_solver_ = solver;
}

FMat EmbeddedField::apply(const FieldElement& x) const {
    Tower Fp = F();
    require(FieldTower::same(x.tower(), E_), Err::ContextMismatch, "element not in E");
    int dpre = Fp->degree();
    FMat out = FMat::zero(n_, n_, Fp->zero());
    for (int u = 0; u < edeg_; ++u) {
        // coefficient of the u-th upper monomial: an element of F
        std::vector<Zp> coords(x.coords().begin() + dpre * u, x.coords().begin() + dpre * (u + 1));
        FieldElement cu(Fp, std::move(coords));
        if (cu.is_zero()) continue;
        out = out + images_[static_cast<size_t>(u)] * cu;
    }
    return out;
}

std::vector<FieldElement> EmbeddedField::e_coords(const std::vector<FieldElement>& v) const {
    Tower Fp = F();
    FMat rhs(n_, 1, Fp->zero());
    for (int i = 0; i < n_; ++i) rhs.at(i, 0) = v[static_cast<size_t>(i)];
    FMat sol = mat_solve(*coord_solver_, rhs);
    // columns are grouped per E-basis vector: m groups of edeg coefficients
    std::vector<FieldElement> out;
    int m = mdim();
    for (int i = 0; i < m; ++i) {
        std::vector<Zp> coords(static_cast<size_t>(E_->degree()), Zp::zero(E_->ctx()));
        for (int u = 0; u < edeg_; ++u) {
            const FieldElement& c = sol.at(i * edeg_ + u, 0);
            for (int t = 0; t < Fp->degree(); ++t)
                coords[static_cast<size_t>(Fp->degree() * u + t)] = c.coords()[static_cast<size_t>(t)];
        }
        out.emplace_back(E_, std::move(coords));
    }
    return out;
}

std::vector<FieldElement> EmbeddedField::from_e_coords(const std::vector<FieldElement>& c) const {
    Tower Fp = F();
    std::vector<FieldElement> v(static_cast<size_t>(n_), Fp->zero());
    for (int i = 0; i < mdim(); ++i) {
        FMat xi = apply(c[static_cast<size_t>(i)]);
        auto term = mat_apply(xi, ebasis_[static_cast<size_t>(i)]);
        for (int r = 0; r < n_; ++r) v[static_cast<size_t>(r)] += term[static_cast<size_t>(r)];
    }
    return v;
}

FMat EmbeddedField::e_matrix_of(const FMat& x) const {
    int m = mdim();
    FMat out(m, m, E_->zero());
    for (int j = 0; j < m; ++j) {
        auto img = mat_apply(x, ebasis_[static_cast<size_t>(j)]);
        auto coords = e_coords(img);
        for (int i = 0; i < m; ++i) out.at(i, j) = coords[static_cast<size_t>(i)];
    }
    return out;
}

bool EmbeddedField::equivariant(const HermitianForm& h) const {
    // check on the tower generators of the upper part
    for (int k = prefix_; k < E_->num_steps(); ++k) {
        FieldElement g = E_->generator(k);
        if (!h.sigma(apply(g)).equals(apply(g.rho()))) return false;
    }
    // and on a prefix generator when ρ is nontrivial there
    for (int s : E_->conj_steps())
        if (s < prefix_) {
            FieldElement g = E_->generator(s);
            if (!h.sigma(apply(g)).equals(apply(g.rho()))) return false;
        }
    return true;
}

HermitianForm lift_form_over_E(const HermitianForm& h, const EmbeddedField& phi, const TraceMapSpec& lambda) {
    const Tower& E = phi.E();
    Tower F = phi.F();
    require(FieldTower::same(lambda.E, E), Err::ContextMismatch, "λ is not defined on E");
    require(lambda.prefix_steps == phi.prefix_steps(), Err::ContextMismatch, "λ has the wrong base");
    int dE = phi.edeg();
    int dpre = F->degree();
    // trace pairing T_ab = λ(θ_a θ_b) over F
    Mat<FieldElement> T(dE, dE, F->zero());
    for (int a = 0; a < dE; ++a)
        for (int b = 0; b < dE; ++b) {
            FieldElement prod = lambda.z * E->basis_element(dpre * a) * E->basis_element(dpre * b);
            T.at(a, b) = prod.trace_to(lambda.prefix_steps);
        }
    require(!mat_det(T).is_zero(), Err::DegenerateTracePairing, "λ-pairing is degenerate");
    int m = phi.mdim();
    FMat g(m, m, E->zero());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            FMat rhs(dE, 1, F->zero());
            for (int b = 0; b < dE; ++b) {
                auto w = mat_apply(phi.upper_image(b), phi.e_basis()[static_cast<size_t>(j)]);
                rhs.at(b, 0) = h.apply(phi.e_basis()[static_cast<size_t>(i)], w);
            }
            FMat sol = mat_solve(T, rhs);
            std::vector<Zp> coords(static_cast<size_t>(E->degree()), Zp::zero(E->ctx()));
            for (int a = 0; a < dE; ++a)
                for (int t = 0; t < dpre; ++t)
                    coords[static_cast<size_t>(dpre * a + t)] = sol.at(a, 0).coords()[static_cast<size_t>(t)];
            g.at(i, j) = FieldElement(E, std::move(coords));
        }
    HermitianForm out(E, h.eps(), g);
    // λ∘h^φ = h on the E-basis
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            FieldElement lh = (lambda.z * g.at(i, j)).trace_to(lambda.prefix_steps);
            FieldElement hv = h.apply(phi.e_basis()[static_cast<size_t>(i)], phi.e_basis()[static_cast<size_t>(j)]);
            require((lh - hv).is_zero(), Err::NonConvergence, "λ∘h^φ ≠ h");
        }
    return out;
}

LatticeSequence transport_sequence_to_E(const EmbeddedField& phi, const LatticeSequence& lam) {
    const Tower& E = phi.E();
    int m = phi.mdim();
    // E-period: ν_Λ of φ(π_E)
    FMat piE = phi.apply(E->pi());
    long t = lam.nu(piE);
    require(t > 0 && t != VAL_INF, Err::HypothesisFailed, "π_E does not shift the sequence");
    // check exact stability: π_E Λ_s = Λ_{s+t}
    for (long s = 0; s < lam.period(); ++s) {
        OLattice im = OLattice::from_matrix_columns(piE * lam.level_basis(s));
        require(im.equals(lam.level(s + t)), Err::HypothesisFailed, "Λ is not φ(E)-normalized");
    }
    // levels as o_E-lattices in E^m
    auto level_E = [&](long s) {
        FMat basis = lam.level_basis(s);
        std::vector<std::vector<FieldElement>> gens;
        for (int c = 0; c < basis.cols(); ++c) gens.push_back(phi.e_coords(basis.col(c)));
        return OLattice::from_generators(E, m, gens);
    };
    // adapted splitting basis: process levels 0..t-1
    std::vector<std::vector<FieldElement>> chosen;
    std::vector<long> jumps;
    for (long lvl = 0; lvl < t; ++lvl) {
        OLattice cur = level_E(lvl);
        OLattice next = level_E(lvl + 1);
        for (const auto& cand : cur.basis()) {
            if (static_cast<int>(chosen.size()) == m) break;
            // accept cand if it is independent modulo next + chosen
            std::vector<std::vector<FieldElement>> gens = next.basis();
            for (size_t j = 0; j < chosen.size(); ++j) {
                // chosen vector at its level, scaled into level lvl
                long a = jumps[j];
                long k = a <= lvl ? (lvl - a + t - 1) / t : 0;  // ⌈(lvl-a)/t⌉ for a ≤ lvl
                std::vector<FieldElement> sc = chosen[j];
                for (auto& x : sc) x = x * E->pi().pow(k);
                gens.push_back(std::move(sc));
            }
            OLattice test = OLattice::from_generators(E, m, gens);
            if (!test.contains(cand)) {
                chosen.push_back(cand);
                jumps.push_back(lvl);
            }
        }
    }
    require(static_cast<int>(chosen.size()) == m, Err::HypothesisFailed, "no adapted o_E-basis found");
    FMat basis(m, m, E->zero());
    for (size_t j = 0; j < chosen.size(); ++j)
        for (int i = 0; i < m; ++i) basis.at(i, static_cast<int>(j)) = chosen[j][static_cast<size_t>(i)];
    LatticeSequence out(E, basis, jumps, t);
    for (long s = 0; s < t; ++s)
        require(out.level(s).equals(level_E(s)), Err::HypothesisFailed, "transported sequence mismatch");
    return out;
}

// ---------------------------------------------------------------------------

namespace {

// Newton-lift u (in the commutative algebra F[seed]) to a root of f.
FMat newton_root(const FMat& u0, const FPoly& f) {
    const Tower& F = u0.proto().tower();
    FMat u = u0;
    FMat one = FMat::identity(u.rows(), F->one());
    int digits = F->digits();
    int budget = 2 * digits + 8;
    FPoly df = f.derivative();
    for (int it = 0; it <= budget; ++it) {
        FMat val = f.eval_in(u, one);
        if (val.is_zero()) break;
        require(it < budget, Err::NonConvergence, "newton root lifting stalled");
        FMat dval = df.eval_in(u, one);
        u = u - val * mat_inverse(dval);
    }
    return u;
}

// Monic degree-`degree` relation of W over the subalgebra spanned by the
// given monomial images: W^d + Σ_{k<d} c_k W^k = 0 with c_k in the
// subtower. Coefficients returned as flat rational coordinate vectors.
std::vector<std::vector<mpq_class>> relative_min_poly(const FMat& w, const std::vector<FMat>& sub_monomials,
                                                      int degree) {
    const Tower& F = w.proto().tower();
    int nsub = static_cast<int>(sub_monomials.size());
    std::vector<FMat> pow{FMat::identity(w.rows(), F->one())};
    for (int k = 1; k <= degree; ++k) pow.push_back(pow.back() * w);
    std::vector<FMat> cols;
    for (int k = 0; k < degree; ++k)
        for (int m = 0; m < nsub; ++m) cols.push_back(sub_monomials[static_cast<size_t>(m)] * pow[static_cast<size_t>(k)]);
    auto sol = qp_solve(F, cols, pow[static_cast<size_t>(degree)]);
    std::vector<std::vector<mpq_class>> out;
    for (int k = 0; k < degree; ++k) {
        std::vector<mpq_class> coord(static_cast<size_t>(nsub), mpq_class(0));
        for (int m = 0; m < nsub; ++m) coord[static_cast<size_t>(m)] = -zp_to_rational(sol[static_cast<size_t>(k * nsub + m)], F->p());
        out.push_back(std::move(coord));
    }
    return out;
}

}  // namespace

RecognizedField recognize_field(const Tower& F, const FMat& beta, int e_E, int f_E, const FMat& y_norm,
                                long nu_beta, const HermitianForm* sigma_ctx) {
    int n = beta.rows();
    FMat one = FMat::identity(n, F->one());
    std::vector<StepSpec> steps = F->spec();
    int prefix = F->num_steps();
    std::vector<int> conj = F->conj_steps();

    // generator matrices for the new steps, in order
    std::vector<FMat> new_gens;
    std::vector<FMat> tower_monomials{one};  // images of ALL monomials of the tower built so far
    // start from F's own monomials: φ on F is scalar multiplication
    tower_monomials.clear();
    for (int i = 0; i < F->degree(); ++i) tower_monomials.push_back(one * F->basis_element(i));

    // --- unramified chain ---
    if (f_E > 1) {
        // κ_E = κ_F[ȳ]: work in κ_F[X]/m̄
        RPoly mbar = [&] {
            // minimal polynomial of ȳ over κ_F via linear algebra on powers
            const auto& kappa = F->residue_field();
            // reduce y_norm's action... easiest: min poly of y over F, reduced
            FPoly mu = mat_minpoly(y_norm);
            RPoly red = reduce_poly(mu);
            // the residual min poly is the squarefree degree-f_E factor of red
            auto fac = residue_primary_factorization(red);
            for (auto& [base, mult] : fac)
                if (base.deg() == f_E) return base;
            (void)kappa;
            fail(Err::NotPrimary, "no residual generator of the expected degree");
        }();
        // prime chain for f_E
        std::vector<int> fprimes;
        int rest = f_E;
        for (int d = 2; d <= rest; ++d)
            while (rest % d == 0) {
                fprimes.push_back(d);
                rest /= d;
            }
        // subfield degrees f_1 | f_2 | … = cumulative products
        long qF = F->residue_field()->q();
        std::mt19937_64 rng(0xabcdULL);
        int fcur = 1;
        FMat prev_root = y_norm;  // element whose residue generates κ_E
        for (size_t step = 0; step < fprimes.size(); ++step) {
            fcur *= fprimes[step];
            // find ḡ of degree exactly fcur over κ_F inside κ_F[X]/m̄:
            // trace of a random element to the fixed field of Frob^{fcur}
            RPoly xbar = RPoly::x_power(mbar.proto(), 1) % mbar;
            RPoly gen = xbar;
            RPoly genmin = mbar;
            for (int attempt = 0; attempt < 200; ++attempt) {
                // random poly z of degree < f_E
                std::vector<ResidueElement> zc;
                for (int i = 0; i < f_E; ++i)
                    zc.push_back(ResidueElement::decode(F->residue_field(),
                                                        static_cast<long>(rng() % static_cast<uint64_t>(qF))));
                RPoly z(std::move(zc));
                if (z.is_zero()) continue;
                // trace to the subfield: Σ z^{q^{fcur·i}}, i < f_E/fcur
                RPoly tr = RPoly::zero(mbar.proto());
                RPoly cur = z % mbar;
                for (int i = 0; i < f_E / fcur; ++i) {
                    tr = (tr + cur) % mbar;
                    // cur ← cur^{q^{fcur}} mod m̄
                    for (int t = 0; t < fcur; ++t) {
                        RPoly acc = RPoly::constant(ring_one(mbar.proto()));
                        RPoly b = cur;
                        long e = qF;
                        while (e > 0) {
                            if (e & 1) acc = (acc * b) % mbar;
                            b = (b * b) % mbar;
                            e >>= 1;
                        }
                        cur = acc;
                    }
                }
                // minimal polynomial of tr over κ_F: linear algebra in κ_F[X]/m̄
                std::vector<RPoly> pows{RPoly::constant(ring_one(mbar.proto()))};
                for (int k = 1; k <= fcur; ++k) pows.push_back((pows.back() * tr) % mbar);
                // solve dependence with minimal degree == fcur
                RMat sys(f_E, fcur + 1, ring_zero(mbar.proto()));
                for (int k = 0; k <= fcur; ++k)
                    for (int i = 0; i < f_E; ++i) sys.at(i, k) = pows[static_cast<size_t>(k)].coeff(i);
                auto kern = mat_kernel(sys);
                if (kern.empty()) continue;
                auto& v = kern.front();
                if (v[static_cast<size_t>(fcur)].is_zero()) continue;  // degree < fcur
                // monic min poly of degree fcur
                ResidueElement lead = v[static_cast<size_t>(fcur)];
                std::vector<ResidueElement> mc;
                for (int k = 0; k <= fcur; ++k) mc.push_back(v[static_cast<size_t>(k)] * lead.inverse());
                genmin = RPoly(std::move(mc));
                if (!residue_irreducible(genmin)) continue;
                gen = tr;
                break;
            }
            require(gen.deg() >= 0 && genmin.deg() == fcur, Err::NonConvergence,
                    "no subfield generator found");
            // lift gen(ȳ) into the matrix algebra and Newton-refine against a
            // monic integral lift of genmin
            FMat approx = FMat::zero(n, n, F->zero());
            {
                FMat acc = FMat::identity(n, F->one());
                for (int i = 0; i <= gen.deg(); ++i) {
                    approx = approx + acc * F->lift_residue(gen.coeff(i));
                    acc = acc * prev_root;
                }
            }
            FPoly lifted = lift_poly(F, genmin);
            FMat w = newton_root(approx, lifted);
            // relative min poly over the current tower
            int reldeg = fprimes[step];
            auto coeffs = relative_min_poly(w, tower_monomials, reldeg);
            steps.push_back(StepSpec{StepKind::Unramified, reldeg, coeffs});
            new_gens.push_back(w);
            // extend monomial images
            std::vector<FMat> next;
            FMat wp = FMat::identity(n, F->one());
            for (int pw = 0; pw < reldeg; ++pw) {
                for (const auto& mimg : tower_monomials) next.push_back(mimg * wp);
                wp = wp * w;
            }
            tower_monomials = std::move(next);
        }
    }

    // --- eisenstein chain ---
    if (e_E > 1) {
        // z0 = β^a π_F^b with a·ν_E(β) + b·e_E = 1
        long a = 0, b = 0;
        bool found = false;
        for (long aa = -8; aa <= 8 && !found; ++aa)
            for (long bb = -8; bb <= 8 && !found; ++bb)
                if (aa * nu_beta + bb * e_E == 1) {
                    a = aa;
                    b = bb;
                    found = true;
                }
        require(found, Err::NotPrimary, "gcd(ν_E(β), e_E) ≠ 1");
        FMat z0 = one;
        FMat binv = mat_inverse(beta);
        for (long t = 0; t < std::abs(a); ++t) z0 = z0 * (a > 0 ? beta : binv);
        z0 = z0 * F->pi().pow(b);
        // prime chain for e_E
        std::vector<int> eprimes;
        int rest = e_E;
        for (int d = 2; d <= rest; ++d)
            while (rest % d == 0) {
                eprimes.push_back(d);
                rest /= d;
            }
        // generators y_i = z0^{e_E/d_i}
        long dcur = 1;
        FMat prev_gen = one;  // generator of the previous ramified step
        for (size_t step = 0; step < eprimes.size(); ++step) {
            dcur *= eprimes[step];
            FMat yi = one;
            long expo = e_E / dcur;
            for (long t = 0; t < expo; ++t) yi = yi * z0;
            if (step == 0) {
                // relative min poly over the current (unramified) tower
                auto coeffs = relative_min_poly(yi, tower_monomials, eprimes[step]);
                steps.push_back(StepSpec{StepKind::Eisenstein, eprimes[step], coeffs});
            } else {
                // X^{p} - θ_prev exactly
                int reldeg = eprimes[step];
                std::vector<std::vector<mpq_class>> coeffs(static_cast<size_t>(reldeg));
                // constant coefficient = -θ_prev: the previous generator is
                // the last monomial block start: index = size/reldeg-block…
                // the previous generator is monomial index (prev block size)
                // in the CURRENT tower: it is the generator of the last step
                // added, i.e. monomial index = (тower size before that step)
                // — record via position: it is tower_monomials.size() /
                // eprimes[step-1]… simpler: we track prev generator index:
                coeffs[0] = {};  // filled below
                steps.push_back(StepSpec{StepKind::Eisenstein, reldeg, coeffs});
            }
            new_gens.push_back(yi);
            std::vector<FMat> next;
            FMat yp = FMat::identity(n, F->one());
            for (int pw = 0; pw < eprimes[step]; ++pw) {
                for (const auto& mimg : tower_monomials) next.push_back(mimg * yp);
                yp = yp * yi;
            }
            long prev_block = static_cast<long>(tower_monomials.size());
            tower_monomials = std::move(next);
            if (step > 0) {
                // constant coefficient -θ_prev: θ_prev is monomial index
                // prev_block/eprimes[step-1]… θ_prev is the generator of the
                // previous step: its flat index in the subtower equals the
                // size of the tower before the previous step was added.
                // Here: the subtower has prev_block monomials and θ_prev has
                // index prev_block / eprimes[step - 1].
                long idx = prev_block / eprimes[step - 1];
                std::vector<mpq_class> c0(static_cast<size_t>(prev_block), mpq_class(0));
                c0[static_cast<size_t>(idx)] = mpq_class(-1);
                std::vector<std::vector<mpq_class>> cs(static_cast<size_t>(eprimes[step]));
                cs[0] = c0;
                for (size_t k = 1; k < cs.size(); ++k) cs[k] = std::vector<mpq_class>{mpq_class(0)};
                steps.back().coeffs = cs;
            }
            prev_gen = yi;
        }
        (void)prev_gen;
    }

    // involution mask for the new steps
    std::vector<int> mask = conj;
    if (sigma_ctx) {
        for (size_t k = 0; k < new_gens.size(); ++k) {
            FMat sg = sigma_ctx->sigma(new_gens[k]);
            if (sg.equals(-new_gens[k]))
                mask.push_back(prefix + static_cast<int>(k));
            else
                require(sg.equals(new_gens[k]), Err::BadInvolution,
                        "σ does not act diagonally on the recognized generators");
        }
    }
    Tower E = FieldTower::make(F->p(), F->digits(), steps, mask);
    require(E->degree() / F->degree() == e_E * f_E, Err::NotPrimary, "degree mismatch in recognition");

    // embedding images: upper monomials of E over F = products of new_gens
    int dE = e_E * f_E;
    std::vector<FMat> images;
    for (int u = 0; u < dE; ++u) {
        // exponents of the upper steps in the flat upper index
        FMat img = one;
        int rem = u;
        for (size_t k = 0; k < new_gens.size(); ++k) {
            int dk = E->step_degree(prefix + static_cast<int>(k));
            int ek = rem % dk;
            rem /= dk;
            for (int t = 0; t < ek; ++t) img = img * new_gens[k];
        }
        images.push_back(img);
    }
    EmbeddedField phi(E, prefix, images);
    // β preimage: solve β = Σ_{u,t} x_{u,t}·φ(θ_u)·b_t over Q_p
    {
        std::vector<FMat> cols;
        for (int u = 0; u < dE; ++u)
            for (int t = 0; t < F->degree(); ++t)
                cols.push_back(images[static_cast<size_t>(u)] * F->basis_element(t));
        auto sol = qp_solve(F, cols, beta);
        std::vector<Zp> coords(static_cast<size_t>(E->degree()), Zp::zero(E->ctx()));
        for (int u = 0; u < dE; ++u)
            for (int t = 0; t < F->degree(); ++t)
                coords[static_cast<size_t>(u * F->degree() + t)] = sol[static_cast<size_t>(u * F->degree() + t)];
        FieldElement bpre(E, std::move(coords));
        require((phi.apply(bpre) - beta).is_zero(), Err::NonConvergence, "β is not in the recognized field");
        return RecognizedField{phi, bpre};
    }
}

}  // namespace pstrata
