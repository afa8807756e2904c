#include "pstrata/lift.hpp"

#include <algorithm>

namespace pstrata {

namespace {

int iteration_budget(const Tower& F) {
    int digits = F->digits();
    int lg = 0;
    while ((1 << lg) < digits) ++lg;
    return lg + 4;
}

FieldElement form_apply(const HermitianForm& h, const std::vector<FieldElement>& v,
                        const std::vector<FieldElement>& w) {
    return h.apply(v, w);
}

std::vector<FieldElement> add_scaled(std::vector<FieldElement> v, const std::vector<FieldElement>& w,
                                     const FieldElement& c) {
    for (size_t i = 0; i < v.size(); ++i) v[i] += w[i] * c;
    return v;
}

FMat cols_to_mat(const Tower& F, const std::vector<std::vector<FieldElement>>& cols) {
    return fmat_from_cols(F, cols);
}

std::vector<FieldElement> solve_any(const FMat& m, const std::vector<FieldElement>& t) {
    return fmat_solve_any(m, t);
}

}  // namespace

// ---------------------------------------------------------------------------
// base case lifts

namespace {

// Case Unit: period-1 configuration with Λ0^# = Λ1 for the given form.
// data.lifts = [x1 y1 x2 y2 … | tail]; returns exact Witt basis.
WittBasis lift_case_unit(const LatticeSequence& lam, const HermitianForm& h, const ResidualWittData& data) {
    const Tower& F = h.tower();
    {
        auto u = lam.self_dual_witness(h.gram());
        require(u && *u == 1 && lam.period() == 1, Err::CaseHypothesisFailed,
                "expected a period-1 sequence with Λ0^# = Λ1");
    }
    int n = static_cast<int>(data.lifts.size());
    require(n == lam.dim(), Err::CaseHypothesisFailed, "residual basis size mismatch");
    std::vector<std::vector<FieldElement>> vv = data.lifts;
    int hyp = data.hyperbolic;
    FieldElement half = F->from_ratio(mpq_class(1, 2));
    int budget = iteration_budget(F);

    // Step 1: anisotropic tail vectors first: exact orthogonal projections
    for (int t = 2 * hyp; t < n; ++t) {
        FieldElement len = form_apply(h, vv[static_cast<size_t>(t)], vv[static_cast<size_t>(t)]);
        require(!len.is_zero() && len.val() == 0 * lam.period(), Err::CaseHypothesisFailed,
                "tail vector is not residually anisotropic");
        for (int s = 0; s < n; ++s) {
            if (s == t) continue;
            FieldElement c = len.inverse() * form_apply(h, vv[static_cast<size_t>(t)], vv[static_cast<size_t>(s)]);
            vv[static_cast<size_t>(s)] = add_scaled(vv[static_cast<size_t>(s)], vv[static_cast<size_t>(t)], -c);
        }
    }
    // Step 2: project later vectors off each hyperbolic pair
    for (int k = 0; k < hyp; ++k) {
        auto& x = vv[static_cast<size_t>(2 * k)];
        auto& y = vv[static_cast<size_t>(2 * k + 1)];
        FMat pg(2, 2, F->zero());
        pg.at(0, 0) = form_apply(h, x, x);
        pg.at(0, 1) = form_apply(h, x, y);
        pg.at(1, 0) = form_apply(h, y, x);
        pg.at(1, 1) = form_apply(h, y, y);
        require(!mat_det(pg).is_zero(), Err::CaseHypothesisFailed, "degenerate residual pair");
        FMat pginv = mat_inverse(pg);
        for (int s = 0; s < 2 * hyp; ++s) {
            if (s == 2 * k || s == 2 * k + 1) continue;
            // v ← v - (x,y)·pg^{-1}·(h(x,v), h(y,v))ᵀ
            FieldElement hx = form_apply(h, x, vv[static_cast<size_t>(s)]);
            FieldElement hy = form_apply(h, y, vv[static_cast<size_t>(s)]);
            FieldElement cx = pginv.at(0, 0) * hx + pginv.at(0, 1) * hy;
            FieldElement cy = pginv.at(1, 0) * hx + pginv.at(1, 1) * hy;
            vv[static_cast<size_t>(s)] = add_scaled(add_scaled(vv[static_cast<size_t>(s)], x, -cx), y, -cy);
        }
    }
    // Step 3: make the pairs exactly hyperbolic
    for (int k = 0; k < hyp; ++k) {
        auto& x = vv[static_cast<size_t>(2 * k)];
        auto& y = vv[static_cast<size_t>(2 * k + 1)];
        // x-isotropy refinement with partner y; renormalizing the pairing to
        // exactly 1 each round keeps the contraction quadratic
        for (int it = 0; it <= budget; ++it) {
            FieldElement cr = form_apply(h, x, y);
            for (auto& e : y) e = e * cr.inverse();
            FieldElement eta = form_apply(h, x, x);
            if (eta.is_zero()) break;
            require(it < budget, Err::NonConvergence, "isotropy refinement exhausted its budget");
            x = add_scaled(x, y, -(eta * half));
        }
        // now fix y against the exact-isotropic x
        FieldElement cross = form_apply(h, x, y);
        for (auto& e : y) e = e * cross.inverse();
        for (int it = 0; it <= budget; ++it) {
            FieldElement eta = form_apply(h, y, y);
            if (eta.is_zero()) break;
            require(it < budget, Err::NonConvergence, "isotropy refinement exhausted its budget");
            FieldElement eps = F->from_int(h.eps());
            y = add_scaled(y, x, -(eta * half * eps));
        }
        cross = form_apply(h, x, y);
        for (auto& e : y) e = e * cross.inverse();
    }
    WittBasis out{cols_to_mat(F, vv), hyp, {}};
    for (int t = 2 * hyp; t < n; ++t)
        out.tail.push_back(form_apply(h, vv[static_cast<size_t>(t)], vv[static_cast<size_t>(t)]));
    return out;
}

// Case TwoLayer: x's in Λ_0 \ Λ_1 (residually a basis of the quotient),
// period-2 configuration with Λ0^# = Λ0. Returns hyperbolic pairs (x_j, y_j)
// with the y's the exact dual family in Λ_{-1}.
WittBasis lift_case_two_layer(const LatticeSequence& lam, const HermitianForm& h,
                              const ResidualWittData& data) {
    const Tower& F = h.tower();
    {
        auto u = lam.self_dual_witness(h.gram());
        require(u && *u == 0 && lam.period() == 2, Err::CaseHypothesisFailed,
                "expected a period-2 sequence with Λ0^# = Λ0");
    }
    int m = static_cast<int>(data.lifts.size());
    require(2 * m == lam.dim(), Err::CaseHypothesisFailed, "two-layer case needs dim = 2·|B0|");
    std::vector<std::vector<FieldElement>> xs = data.lifts;
    int budget = iteration_budget(F);
    FieldElement half = F->from_ratio(mpq_class(1, 2));

    // kill Gram(x) with corrections from Λ_1 (h(Λ1,Λ1) ⊆ p² gives quadratic
    // convergence)
    FMat l1 = lam.level_basis(1);
    for (int it = 0; it <= budget; ++it) {
        FMat gram(m, m, F->zero());
        bool zero = true;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                gram.at(i, j) = form_apply(h, xs[static_cast<size_t>(i)], xs[static_cast<size_t>(j)]);
                zero = zero && gram.at(i, j).is_zero();
            }
        if (zero) break;
        require(it < budget, Err::NonConvergence, "two-layer isotropy refinement exhausted");
        // pairing matrix M_{k,l} = h(w_l, x_k), w_l the Λ1 basis columns
        FMat pair(m, l1.cols(), F->zero());
        for (int k = 0; k < m; ++k)
            for (int l = 0; l < l1.cols(); ++l) pair.at(k, l) = form_apply(h, l1.col(l), xs[static_cast<size_t>(k)]);
        for (int j = 0; j < m; ++j) {
            // want z_j with h(z_j, x_k) = -gram(j,k)/2
            std::vector<FieldElement> target;
            for (int k = 0; k < m; ++k) target.push_back(-(gram.at(j, k) * half));
            auto c = solve_any(pair, target);
            std::vector<FieldElement> z(static_cast<size_t>(lam.dim()), F->zero());
            for (int l = 0; l < l1.cols(); ++l)
                z = add_scaled(z, l1.col(l), c[static_cast<size_t>(l)]);
            xs[static_cast<size_t>(j)] = add_scaled(xs[static_cast<size_t>(j)], z, F->one());
        }
    }
    // exact dual family in Λ_{-1}
    FMat lm1 = lam.level_basis(-1);
    FMat pair(m, lm1.cols(), F->zero());
    std::vector<std::vector<FieldElement>> ys;
    for (int k = 0; k < m; ++k)
        for (int l = 0; l < lm1.cols(); ++l) pair.at(k, l) = form_apply(h, lm1.col(l), xs[static_cast<size_t>(k)]);
    FieldElement epsval = F->from_int(h.eps());
    for (int j = 0; j < m; ++j) {
        std::vector<FieldElement> target(static_cast<size_t>(m), F->zero());
        target[static_cast<size_t>(j)] = epsval;  // h(y_j, x_k) = ε δ_jk, so h(x_j, y_j) = 1
        auto c = solve_any(pair, target);
        std::vector<FieldElement> y(static_cast<size_t>(lam.dim()), F->zero());
        for (int l = 0; l < lm1.cols(); ++l) y = add_scaled(y, lm1.col(l), c[static_cast<size_t>(l)]);
        ys.push_back(std::move(y));
    }
    // make the y's exactly isotropic: y'_j = y_j - Σ_l x_l d_{lj}, d = Y/2
    FMat ygram(m, m, F->zero());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) ygram.at(i, j) = form_apply(h, ys[static_cast<size_t>(i)], ys[static_cast<size_t>(j)]);
    for (int j = 0; j < m; ++j)
        for (int l = 0; l < m; ++l)
            ys[static_cast<size_t>(j)] = add_scaled(ys[static_cast<size_t>(j)], xs[static_cast<size_t>(l)],
                                                    -(ygram.at(l, j) * half * epsval));

    std::vector<std::vector<FieldElement>> cols;
    for (int j = 0; j < m; ++j) {
        cols.push_back(xs[static_cast<size_t>(j)]);
        cols.push_back(ys[static_cast<size_t>(j)]);
    }
    return WittBasis{cols_to_mat(F, cols), m, {}};
}

}  // namespace

WittBasis lift_witt_basis_block(const LatticeSequence& lam, const HermitianForm& h, WittLiftCase tag,
                                const ResidualWittData& data) {
    const Tower& F = h.tower();
    switch (tag) {
        case WittLiftCase::Unit: {
            auto u = lam.self_dual_witness(h.gram());
            require(u && *u == 1 && lam.period() == 1, Err::CaseHypothesisFailed,
                    "expected a period-1 sequence with Λ0^# = Λ1");
            return lift_case_unit(lam, h, data);
        }
        case WittLiftCase::PiTwisted: {
            auto u = lam.self_dual_witness(h.gram());
            require(u && *u == 0 && lam.period() == 1, Err::CaseHypothesisFailed,
                    "expected a period-1 sequence with Λ0^# = Λ0");
            // substitute h by h·π^{-1} and lift there
            FieldElement pi_inv = F->pi().inverse();
            int eps2 = F->pi_is_skew() ? -h.eps() : h.eps();
            HermitianForm htw(F, eps2, h.gram() * pi_inv);
            WittBasis w = lift_case_unit(lam, htw, data);
            // convert pairs back: h(x, y π^{-1}) = 1
            FMat basis = w.basis;
            for (int k = 0; k < w.hyperbolic; ++k)
                for (int i = 0; i < basis.rows(); ++i)
                    basis.at(i, 2 * k + 1) = basis.at(i, 2 * k + 1) * pi_inv;
            WittBasis out{basis, w.hyperbolic, {}};
            for (size_t t = 0; t < w.tail.size(); ++t) out.tail.push_back(w.tail[t] * F->pi());
            return out;
        }
        case WittLiftCase::TwoLayer: {
            auto u = lam.self_dual_witness(h.gram());
            require(u && *u == 0 && lam.period() == 2, Err::CaseHypothesisFailed,
                    "expected a period-2 sequence with Λ0^# = Λ0");
            return lift_case_two_layer(lam, h, data);
        }
    }
    fail(Err::BadInput, "unknown case tag");
}

// ---------------------------------------------------------------------------
// the general layered lift

namespace {

struct Block {
    bool two_layer = false;
    long level_hi = 0, level_lo = 0;  // for two-layer: x-level, partner level
    std::vector<std::vector<FieldElement>> xs;  // lifts at level_hi
    std::vector<std::vector<FieldElement>> ys;  // lifts at level_lo (two-layer)
    long twist = 0;                             // local form is h·π^{-twist}
};

}  // namespace

WittBasis lift_witt_basis_general(const LatticeSequence& lam, const HermitianForm& h,
                                  const std::vector<WittLayer>& layers, uint64_t seed) {
    const Tower& F = h.tower();
    (void)seed;
    auto uo = lam.self_dual_witness(h.gram());
    require(uo.has_value(), Err::HypothesisFailed, "sequence is not self-dual");
    long u = *uo;
    require(u == 0 || u == 1, Err::HypothesisFailed, "normalize the sequence so that Λ0^# ∈ {Λ0, Λ1}");
    long e = lam.period();
    require(lam.is_chain(), Err::HypothesisFailed, "the layered lift needs a chain");

    std::map<long, std::vector<std::vector<FieldElement>>> layer_map;
    long lo = (1 - e) % 2 == 0 ? (1 - e) / 2 : (1 - e - 1) / 2;  // floor((1-e)/2)
    long hi = (e - 1) / 2;                                        // floor((e-1)/2)
    for (const auto& l : layers) {
        require(l.level >= lo && l.level <= hi, Err::HypothesisFailed, "layer level out of range");
        layer_map[l.level] = l.vectors;
    }
    // residual dimensions must match
    auto prof = lam.residual_profile();
    for (long i = lo; i <= hi; ++i) {
        long d = prof[static_cast<size_t>(((i % e) + e) % e)];
        long got = layer_map.count(i) ? static_cast<long>(layer_map[i].size()) : 0;
        require(d == got, Err::HypothesisFailed, "layer sizes do not match the residual profile");
    }

    // group into blocks
    std::vector<Block> blocks;
    std::vector<long> used;
    for (long i = 0; i <= hi; ++i) {
        long j = u - 1 - i;  // partner level
        if (std::find(used.begin(), used.end(), i) != used.end()) continue;
        if (layer_map[i].empty() && (j < lo || layer_map[j].empty())) continue;
        Block b;
        if (j == i) {
            b.two_layer = false;
            b.level_hi = i;
            b.xs = layer_map[i];
        } else {
            require(j >= lo && j <= hi, Err::HypothesisFailed, "partner level out of range");
            b.two_layer = true;
            b.level_hi = i;
            b.level_lo = j;
            b.xs = layer_map[i];
            b.ys = layer_map[j];
            require(b.xs.size() == b.ys.size(), Err::HypothesisFailed, "paired layers of different size");
            used.push_back(j);
        }
        used.push_back(i);
        blocks.push_back(std::move(b));
    }

    // orthogonalize the blocks against each other, in order
    int n = lam.dim();
    auto all_of = [&](Block& b) {
        std::vector<std::vector<FieldElement>*> v;
        for (auto& x : b.xs) v.push_back(&x);
        for (auto& y : b.ys) v.push_back(&y);
        return v;
    };
    for (size_t t = 0; t < blocks.size(); ++t) {
        auto vt = all_of(blocks[t]);
        std::vector<std::vector<FieldElement>> span;
        for (auto* p : vt) span.push_back(*p);
        HermitianForm sub = h.restrict_to(span);
        FMat ginv = mat_inverse(sub.gram());
        for (size_t s = t + 1; s < blocks.size(); ++s) {
            for (auto* p : all_of(blocks[s])) {
                // v ← v - Σ span_i (ginv · h(span, v))_i
                std::vector<FieldElement> rhs;
                for (auto& w : span) rhs.push_back(form_apply(h, w, *p));
                for (size_t i = 0; i < span.size(); ++i) {
                    FieldElement ci = F->zero();
                    for (size_t j = 0; j < span.size(); ++j) ci += ginv.at(static_cast<int>(i), static_cast<int>(j)) * rhs[j];
                    *p = add_scaled(*p, span[i], -ci);
                }
            }
        }
    }

    // per-block local lifts
    std::vector<std::vector<FieldElement>> final_cols;
    int hyper = 0;
    std::vector<FieldElement> tail;
    FieldElement pi = F->pi();
    for (auto& b : blocks) {
        int k = static_cast<int>(b.xs.size() + b.ys.size());
        // local coordinates: the block space with its own Gram
        std::vector<std::vector<FieldElement>> span;
        for (auto& x : b.xs) span.push_back(x);
        for (auto& y : b.ys) span.push_back(y);
        if (!b.two_layer) {
            // self-paired level i: h·π^{c-1} makes it a Unit-case block where
            // π^c is the pairing level of the block Gram
            HermitianForm sub = h.restrict_to(span);
            long c = VAL_INF;
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                    if (!sub.gram().at(i, j).is_zero()) c = std::min(c, sub.gram().at(i, j).val());
            require(c != VAL_INF, Err::HypothesisFailed, "zero block Gram");
            FieldElement tw = pi.pow(-c);
            int eps2 = sub.eps();
            if (F->pi_is_skew() && (c % 2 != 0)) eps2 = -eps2;
            HermitianForm loc(F, eps2, sub.gram() * tw);
            // residual Witt structure of the local form must be supplied by
            // the layer order: detect pairs/tail from the residual form
            RMat rg(k, k, ResidueElement::zero(F->residue_field()));
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) rg.at(i, j) = loc.gram().at(i, j).residue();
            ResidualForm rf{F->residue_field(), !F->has_involution() ? true : false, eps2, rg};
            if (F->has_involution()) {
                // the residual involution is trivial unless the conjugated
                // step is unramified
                rf.bar_trivial = involution_ramified(F);
            }
            auto rw = residual_witt_decompose(rf, seed);
            // recombine the block vectors by the residual Witt basis
            std::vector<std::vector<FieldElement>> reordered;
            for (int col = 0; col < k; ++col) {
                std::vector<FieldElement> v(static_cast<size_t>(n), F->zero());
                for (int r = 0; r < k; ++r)
                    v = add_scaled(v, span[static_cast<size_t>(r)], F->lift_residue(rw.basis.at(r, col)));
                reordered.push_back(std::move(v));
            }
            // local problem in the reordered coordinates
            LatticeSequence lseq(F, FMat::identity(k, F->one()), std::vector<long>(static_cast<size_t>(k), 0), 1);
            FMat locgram(k, k, F->zero());
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                    locgram.at(i, j) =
                        form_apply(h, reordered[static_cast<size_t>(i)], reordered[static_cast<size_t>(j)]) * tw;
            HermitianForm locform(F, eps2, locgram);
            std::vector<std::vector<FieldElement>> unit_cols;
            for (int col = 0; col < k; ++col) {
                std::vector<FieldElement> ecol(static_cast<size_t>(k), F->zero());
                ecol[static_cast<size_t>(col)] = F->one();
                unit_cols.push_back(ecol);
            }
            WittBasis wloc = lift_case_unit(lseq, locform, ResidualWittData{rw.hyperbolic, unit_cols});
            // map back to V: columns of wloc.basis are coordinates in 'reordered'
            for (int col = 0; col < k; ++col) {
                std::vector<FieldElement> v(static_cast<size_t>(n), F->zero());
                for (int r = 0; r < k; ++r) v = add_scaled(v, reordered[static_cast<size_t>(r)], wloc.basis.at(r, col));
                final_cols.push_back(std::move(v));
            }
            hyper += wloc.hyperbolic;
            for (auto& tv : wloc.tail) tail.push_back(tv * pi.pow(c));
        } else {
            // two-layer block: normalize to the TwoLayer configuration on
            // local coordinates
            int m = static_cast<int>(b.xs.size());
            // pairing valuation between the layers
            long c = VAL_INF;
            for (auto& y : b.ys)
                for (auto& x : b.xs) {
                    FieldElement v = form_apply(h, y, x);
                    if (!v.is_zero()) c = std::min(c, v.val());
                }
            require(c != VAL_INF, Err::HypothesisFailed, "two-layer block with zero pairing");
            FieldElement tw = pi.pow(-c);
            int eps2 = h.eps();
            if (F->pi_is_skew() && (c % 2 != 0)) eps2 = -eps2;
            // local basis (x's then y's), local sequence jumps (0,…,0,1,…,1)
            // wait: the TwoLayer case wants x at level 0, partner at -1:
            // jumps x_j ↦ 0, y_j ↦ -1 ≡ 1 mod 2 with basis y·π
            std::vector<long> jumps(static_cast<size_t>(2 * m), 0);
            for (int j = 0; j < m; ++j) jumps[static_cast<size_t>(m + j)] = -1;
            FMat locgram(2 * m, 2 * m, F->zero());
            for (int i = 0; i < 2 * m; ++i)
                for (int j = 0; j < 2 * m; ++j)
                    locgram.at(i, j) = form_apply(h, span[static_cast<size_t>(i)], span[static_cast<size_t>(j)]) * tw;
            HermitianForm locform(F, eps2, locgram);
            LatticeSequence lseq(F, FMat::identity(2 * m, F->one()), jumps, 2);
            std::vector<std::vector<FieldElement>> xcols;
            for (int j = 0; j < m; ++j) {
                std::vector<FieldElement> ecol(static_cast<size_t>(2 * m), F->zero());
                ecol[static_cast<size_t>(j)] = F->one();
                xcols.push_back(ecol);
            }
            ResidualWittData rd{0, xcols};
            WittBasis wloc = lift_case_two_layer(lseq, locform, rd);
            // convert pairs back to h: h(x, y·π^{-c}-scaled) — rescale the
            // second member so that the h-pairing is 1
            for (int pr = 0; pr < wloc.hyperbolic; ++pr) {
                std::vector<FieldElement> xv(static_cast<size_t>(n), F->zero()), yv(static_cast<size_t>(n), F->zero());
                for (int r = 0; r < 2 * m; ++r) {
                    xv = add_scaled(xv, span[static_cast<size_t>(r)], wloc.basis.at(r, 2 * pr));
                    yv = add_scaled(yv, span[static_cast<size_t>(r)], wloc.basis.at(r, 2 * pr + 1) * tw);
                }
                final_cols.push_back(xv);
                final_cols.push_back(yv);
            }
            hyper += wloc.hyperbolic;
        }
    }
    WittBasis out{cols_to_mat(F, final_cols), hyper, tail};
    return out;
}

std::vector<WittLayer> adapted_layers(const LatticeSequence& lam, const HermitianForm& h, uint64_t seed) {
    const Tower& F = h.tower();
    auto uo = lam.self_dual_witness(h.gram());
    require(uo.has_value() && (*uo == 0 || *uo == 1), Err::HypothesisFailed, "normalized self-dual chain expected");
    long u = *uo, e = lam.period();
    long lo = -( (e - 1) - ((e - 1) / 2) );  // floor((1-e)/2)
    long hi = (e - 1) / 2;
    // per level, pick splitting-basis vectors of that jump class
    std::map<long, std::vector<std::vector<FieldElement>>> layer_map;
    for (long i = lo; i <= hi; ++i) layer_map[i] = {};
    for (int j = 0; j < lam.dim(); ++j) {
        long a = lam.jumps()[static_cast<size_t>(j)];  // in [0, e)
        // the representative level in [lo, hi] congruent to a
        long lvl = a;
        while (lvl > hi) lvl -= e;
        while (lvl < lo) lvl += e;
        std::vector<FieldElement> v = lam.splitting_basis().col(j);
        // scale to land in Λ_lvl \ Λ_{lvl+1}
        FieldElement sc = F->pi().pow(lam.coeff_exponent(j, lvl));
        for (auto& x : v) x = x * sc;
        layer_map[lvl].push_back(std::move(v));
    }
    (void)u;
    (void)seed;
    std::vector<WittLayer> out;
    for (auto& [lvl, vecs] : layer_map)
        if (!vecs.empty()) out.push_back(WittLayer{lvl, vecs});
    return out;
}

// ---------------------------------------------------------------------------
// isometry lifting

bool verify_lift_certificate(const HermitianForm& h, const LatticeSequence& lam, const HermitianForm& hp,
                             const LatticeSequence& lamp, const FMat& f, const FMat& g) {
    // Gram transport
    if (!(fmat_rho_transpose(g) * hp.gram() * g - h.gram()).is_zero()) return false;
    // g(Λ_i) = Λ'_i and (f-g)(Λ_i) ⊆ Λ'_{i+1} over one period
    for (long i = 0; i < lam.period(); ++i) {
        OLattice li = OLattice::from_matrix_columns(g * lam.level_basis(i));
        if (!li.equals(lamp.level(i))) return false;
        OLattice next = lamp.level(i + 1);
        FMat diff = (f - g) * lam.level_basis(i);
        for (int c = 0; c < diff.cols(); ++c)
            if (!next.contains(diff.col(c))) return false;
    }
    return true;
}

LiftCertificate lift_isometry(const HermitianForm& h, const LatticeSequence& lam, const HermitianForm& hp,
                              const LatticeSequence& lamp, const FMat& f, uint64_t seed) {
    const Tower& F = h.tower();
    require(lam.period() == lamp.period(), Err::HypothesisFailed, "periods differ");
    // normalize translates so that u ∈ {0,1}
    auto uo = lam.self_dual_witness(h.gram());
    auto upo = lamp.self_dual_witness(hp.gram());
    require(uo && upo, Err::HypothesisFailed, "both sequences must be self-dual");
    require(*uo == *upo, Err::HypothesisFailed, "self-duality witnesses differ");
    long shift = 0;
    LatticeSequence L = lam, Lp = lamp;
    while (*L.self_dual_witness(h.gram()) > 1) {
        L = L.translate(-1);
        Lp = Lp.translate(-1);
        ++shift;
        require(shift < 2 * lam.period() + 2, Err::HypothesisFailed, "cannot normalize the witness");
    }
    while (*L.self_dual_witness(h.gram()) < 0) {
        L = L.translate(1);
        Lp = Lp.translate(1);
        ++shift;
        require(shift < 4 * lam.period() + 4, Err::HypothesisFailed, "cannot normalize the witness");
    }

    // residual hypotheses of the proposition
    std::vector<std::pair<std::string, bool>> checks;
    bool maps_levels = true;
    for (long i = 0; i < L.period(); ++i) {
        OLattice im = OLattice::from_matrix_columns(f * L.level_basis(i));
        if (!im.equals(Lp.level(i))) maps_levels = false;
    }
    require(maps_levels, Err::HypothesisFailed, "f does not map Λ_i onto Λ'_i");
    // residual Gram agreement: h'(f v, f w) ≡ h(v, w) for v ∈ Λ_i, w ∈ (Λ_{i+1})^#
    {
        bool ok = true;
        for (long i = 0; i < L.period() && ok; ++i) {
            FMat vb = L.level_basis(i);
            FMat wb = L.dual(h.gram()).level_basis(-(i + 1));
            for (int a = 0; a < vb.cols() && ok; ++a)
                for (int b = 0; b < wb.cols() && ok; ++b) {
                    FieldElement lhs = hp.apply((f * vb).col(a), (f * wb).col(b));
                    FieldElement rhs = h.apply(vb.col(a), wb.col(b));
                    FieldElement d = lhs - rhs;
                    if (!d.is_zero() && d.val() < 1) ok = false;
                }
        }
        require(ok, Err::HypothesisFailed, "residual Gram agreement fails");
    }

    // adapted layers on Λ, pushed through f on the other side
    auto layersL = adapted_layers(L, h, seed);
    std::vector<WittLayer> layersR;
    for (const auto& l : layersL) {
        WittLayer r{l.level, {}};
        for (const auto& v : l.vectors) {
            std::vector<FieldElement> fv(static_cast<size_t>(L.dim()), F->zero());
            for (int i = 0; i < L.dim(); ++i)
                for (int j = 0; j < L.dim(); ++j) fv[static_cast<size_t>(i)] += f.at(i, j) * v[static_cast<size_t>(j)];
            r.vectors.push_back(std::move(fv));
        }
        layersR.push_back(std::move(r));
    }
    WittBasis wl = lift_witt_basis_general(L, h, layersL, seed);
    WittBasis wr = lift_witt_basis_general(Lp, hp, layersR, seed);
    require(wl.hyperbolic == wr.hyperbolic && wl.tail.size() == wr.tail.size(), Err::HypothesisFailed,
            "witt structures disagree");
    // match tails exactly: scale the right-hand vectors
    FMat rb = wr.basis;
    for (size_t t = 0; t < wl.tail.size(); ++t) {
        FieldElement ratio = wl.tail[t] * wr.tail[t].inverse();
        // ratio ≡ 1 (mod p); find s with ρ(s)·s = ratio
        FieldElement s = F->has_involution() ? solve_norm_equation(ratio) : ratio.sqrt();
        int col = 2 * wl.hyperbolic + static_cast<int>(t);
        for (int i = 0; i < rb.rows(); ++i) rb.at(i, col) = rb.at(i, col) * s;
    }
    FMat g = rb * mat_inverse(wl.basis);
    LiftCertificate cert{g, {}};
    cert.checks.emplace_back("gram_transport", (fmat_rho_transpose(g) * hp.gram() * g - h.gram()).is_zero());
    cert.checks.emplace_back("levels_and_defect", verify_lift_certificate(h, lam, hp, lamp, f, g));
    require(cert.ok(), Err::NonConvergence, "lift certificate failed verification");
    return cert;
}

// ---------------------------------------------------------------------------

FMat inv_sqrt_one_plus(const FMat& s) {
    const Tower& F = s.proto().tower();
    int n = s.rows();
    FMat x = FMat::identity(n, F->one());
    FieldElement half = F->from_ratio(mpq_class(1, 2));
    FMat three = FMat::identity(n, F->one()) * F->from_int(3);
    int budget = iteration_budget(F);
    for (int it = 0; it <= budget; ++it) {
        FMat err = x * x * s - FMat::identity(n, F->one());
        if (err.is_zero()) break;
        require(it < budget, Err::NonConvergence, "inverse square root iteration exhausted");
        // x ← x(3 - s x²)/2
        x = (x * (three - s * x * x)) * half;
    }
    return x;
}

FMat double_coset_fixed_point(const FMat& f, const LatticeSequence& lam, long n, const HermitianForm& h,
                              const HermitianForm& hp) {
    require(n >= 1, Err::BadInput, "n must be positive");
    const Tower& F = h.tower();
    // image sequence fΛ
    LatticeSequence flam(F, f * lam.splitting_basis(), lam.jumps(), lam.period());
    require(flam.self_dual_witness(hp.gram()).has_value(), Err::HypothesisFailed, "fΛ is not self-dual");
    FMat sf = sigma_pair(h, hp, f);
    FMat d = f * sf;  // 1 + small, σ'-symmetric
    FMat dd = d - FMat::identity(d.rows(), F->one());
    require(flam.nu_lower(dd) >= n, Err::CosetNotInvariant, "σ(f) is not in the required double coset");
    require(hp.sigma(d).equals(d), Err::CosetNotInvariant, "f·σ(f) is not symmetric");
    FMat s = inv_sqrt_one_plus(d);
    FMat phi = s * f;
    // φ is an isomorphism of hermitian spaces in Ũ^n(fΛ)·f
    require((fmat_rho_transpose(phi) * hp.gram() * phi - h.gram()).is_zero(), Err::NonConvergence,
            "fixed point is not an isometry");
    require(flam.nu_lower(s - FMat::identity(s.rows(), F->one())) >= n, Err::NonConvergence,
            "fixed point left the double coset");
    return phi;
}

FMat cayley_transform(const HermitianForm& h, const LatticeSequence& lam, const FMat& v) {
    const Tower& F = h.tower();
    require(h.sigma(v).equals(-v), Err::NotSkew, "cayley transform needs a skew element");
    require(v.is_zero() || lam.nu_lower(v) >= 1, Err::NotSkew, "cayley transform needs ν_Λ(v) ≥ 1");
    FMat one = FMat::identity(v.rows(), F->one());
    FMat halfv = v * F->from_ratio(mpq_class(1, 2));
    FMat g = (one + halfv) * mat_inverse(one - halfv);
    require(h.is_isometry(g), Err::NonConvergence, "cayley transform is not an isometry");
    require(lam.nu_lower(g - one) >= 1, Err::NonConvergence, "cayley transform is not in U¹(Λ)");
    return g;
}

FMat lift_idempotent(const FMat& alpha, const std::function<bool(const FMat&, long)>& in_k, long r,
                     const HermitianForm* sym) {
    const Tower& F = alpha.proto().tower();
    require(r >= 1, Err::BadInput, "filtration level must be positive");
    FMat defect = alpha * alpha - alpha;
    require(in_k(defect, r), Err::NotApproxIdempotent, "α² - α is not in k_r");
    if (sym) require(sym->sigma(alpha).equals(alpha), Err::NotApproxIdempotent, "α is not symmetric");
    FMat e = alpha;
    int budget = iteration_budget(F) + 4;
    long level = r;
    for (int it = 0; it <= budget; ++it) {
        FMat d = e * e - e;
        if (d.is_zero()) break;
        require(it < budget, Err::NonConvergence, "idempotent iteration exhausted");
        e = e * e * F->from_int(3) - e * e * e * F->from_int(2);
        level *= 2;
        FMat dnew = e * e - e;
        // doubling contract: e_k² - e_k ∈ k_{2^k r} (skip once zero to precision)
        if (!dnew.is_zero())
            require(in_k(dnew, level), Err::NonConvergence, "doubling contract violated");
    }
    if (sym) require(sym->sigma(e).equals(e), Err::NonConvergence, "symmetry lost in the iteration");
    return e;
}

FMat twist_isometry(const LatticeSequence& lam, const HermitianForm& h, const FMat& a1, const FMat& a2,
                    long s) {
    const Tower& F = h.tower();
    require(s > 0, Err::HypothesisFailed, "s must be positive");
    bool sym1 = h.is_symmetric_elt(a1), skew1 = h.is_skew_elt(a1);
    bool sym2 = h.is_symmetric_elt(a2), skew2 = h.is_skew_elt(a2);
    require((sym1 && sym2) || (skew1 && skew2), Err::HypothesisFailed,
            "a1, a2 must both be symmetric or both skew");
    require(lam.in_normalizer(a1) && lam.in_normalizer(a2), Err::HypothesisFailed,
            "a1, a2 must normalize Λ");
    FMat t = a1 * mat_inverse(a2);
    FMat one = FMat::identity(t.rows(), F->one());
    require(lam.nu_lower(t - one) >= s, Err::HypothesisFailed, "a1·a2^{-1} is not in Ũ^s(Λ)");
    // u = (a1^{-1} a2)^{-1/2}: σ(u) a2 u = a1 and u ∈ Ũ^s(Λ)
    FMat w = mat_inverse(a1) * a2;
    FMat u = inv_sqrt_one_plus(w);
    HermitianForm h1 = h.twist(a1);
    HermitianForm h2 = h.twist(a2);
    require((fmat_rho_transpose(u) * h2.gram() * u - h1.gram()).is_zero(), Err::NonConvergence,
            "twist isometry fails Gram transport");
    require(lam.nu_lower(u - one) >= s, Err::NonConvergence, "twist isometry left Ũ^s(Λ)");
    return u;
}

}  // namespace pstrata
