#include "pstrata/form.hpp"

#include <random>
#include <sstream>

namespace pstrata {

const char* form_kind_name(FormKind k) {
    switch (k) {
        case FormKind::Quadratic: return "quadratic";
        case FormKind::Symplectic: return "symplectic";
        case FormKind::Hermitian: return "hermitian";
        case FormKind::SkewHermitian: return "skew-hermitian";
    }
    return "?";
}

HermitianForm::HermitianForm(Tower F, int eps, FMat gram) : F_(std::move(F)), eps_(eps), gram_(std::move(gram)) {
    require(eps_ == 1 || eps_ == -1, Err::BadInput, "ε must be ±1");
    require(gram_.rows() == gram_.cols(), Err::BadInput, "square Gram matrix expected");
    FMat t = fmat_rho_transpose(gram_);
    require((t - gram_ * F_->from_int(eps_)).is_zero(), Err::BadInput, "Gram matrix is not ε-hermitian");
    require(!mat_det(gram_).is_zero(), Err::BadInput, "form is degenerate to precision");
}

FormKind HermitianForm::kind() const {
    if (F_->has_involution()) return eps_ == 1 ? FormKind::Hermitian : FormKind::SkewHermitian;
    return eps_ == 1 ? FormKind::Quadratic : FormKind::Symplectic;
}

FieldElement HermitianForm::apply(const std::vector<FieldElement>& v,
                                  const std::vector<FieldElement>& w) const {
    FieldElement acc = F_->zero();
    for (int i = 0; i < rank(); ++i) {
        if (v[static_cast<size_t>(i)].is_zero()) continue;
        FieldElement vr = v[static_cast<size_t>(i)].rho();
        for (int j = 0; j < rank(); ++j) acc += vr * gram_.at(i, j) * w[static_cast<size_t>(j)];
    }
    return acc;
}

bool HermitianForm::is_isometry(const FMat& g) const {
    return (fmat_rho_transpose(g) * gram_ * g - gram_).is_zero();
}

FMat HermitianForm::sigma(const FMat& x) const {
    return mat_inverse(gram_) * fmat_rho_transpose(x) * gram_;
}

HermitianForm HermitianForm::twist(const FMat& gamma) const {
    bool sym = is_symmetric_elt(gamma);
    bool skew = is_skew_elt(gamma);
    require(sym || skew, Err::NotSelfAdjoint, "twist element must be symmetric or skew");
    require(!mat_det(gamma).is_zero(), Err::NotSelfAdjoint, "twist element must be invertible");
    return HermitianForm(F_, skew ? -eps_ : eps_, gram_ * gamma);
}

HermitianForm HermitianForm::restrict_to(const std::vector<std::vector<FieldElement>>& basis) const {
    int m = static_cast<int>(basis.size());
    FMat g(m, m, F_->zero());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            g.at(i, j) = apply(basis[static_cast<size_t>(i)], basis[static_cast<size_t>(j)]);
    return HermitianForm(F_, eps_, std::move(g));
}

HermitianForm HermitianForm::transported(const FMat& t) const {
    return HermitianForm(F_, eps_, fmat_rho_transpose(t) * gram_ * t);
}

HermitianForm HermitianForm::direct_sum(const HermitianForm& a, const HermitianForm& b) {
    require(FieldTower::same(a.F_, b.F_) && a.eps_ == b.eps_, Err::ContextMismatch, "direct sum context");
    int n = a.rank() + b.rank();
    FMat g(n, n, a.F_->zero());
    for (int i = 0; i < a.rank(); ++i)
        for (int j = 0; j < a.rank(); ++j) g.at(i, j) = a.gram_.at(i, j);
    for (int i = 0; i < b.rank(); ++i)
        for (int j = 0; j < b.rank(); ++j) g.at(a.rank() + i, a.rank() + j) = b.gram_.at(i, j);
    return HermitianForm(a.F_, a.eps_, std::move(g));
}

FMat sigma_pair(const HermitianForm& h, const HermitianForm& hp, const FMat& f) {
    return mat_inverse(h.gram()) * fmat_rho_transpose(f) * hp.gram();
}

// ---------------------------------------------------------------------------

namespace {

std::vector<FieldElement> unit_vec(const Tower& F, int n, int i) {
    std::vector<FieldElement> v(static_cast<size_t>(n), F->zero());
    v[static_cast<size_t>(i)] = F->one();
    return v;
}

std::vector<FieldElement> add_scaled(std::vector<FieldElement> v, const std::vector<FieldElement>& w,
                                     const FieldElement& c) {
    for (size_t i = 0; i < v.size(); ++i) v[i] += w[i] * c;
    return v;
}

std::vector<FieldElement> combine(const Tower& F, int n,
                                  const std::vector<std::vector<FieldElement>>& basis,
                                  const std::vector<FieldElement>& coords) {
    std::vector<FieldElement> v(static_cast<size_t>(n), F->zero());
    for (size_t j = 0; j < basis.size(); ++j)
        for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] += basis[j][static_cast<size_t>(i)] * coords[j];
    return v;
}

// keep a maximal independent subfamily of target size
std::vector<std::vector<FieldElement>> independent_subfamily(
    const Tower& F, int n, const std::vector<std::vector<FieldElement>>& vecs, int target) {
    std::vector<std::vector<FieldElement>> indep;
    for (const auto& w : vecs) {
        if (static_cast<int>(indep.size()) == target) break;
        std::vector<std::vector<FieldElement>> trial = indep;
        trial.push_back(w);
        FMat tm(n, static_cast<int>(trial.size()), F->zero());
        for (size_t c = 0; c < trial.size(); ++c)
            for (int r = 0; r < n; ++r) tm.at(r, static_cast<int>(c)) = trial[c][static_cast<size_t>(r)];
        if (mat_rank(tm) == static_cast<int>(trial.size())) indep = std::move(trial);
    }
    require(static_cast<int>(indep.size()) == target, Err::BadInput, "independent subfamily not found");
    return indep;
}

FieldElement nonsquare_unit(const Tower& F) {
    const auto& kappa = F->residue_field();
    for (long code = 1; code < kappa->q(); ++code) {
        ResidueElement cand = ResidueElement::decode(kappa, code);
        if (!cand.is_square()) return F->lift_residue(cand);
    }
    fail(Err::BadInput, "no nonsquare in the residue field");
}

}  // namespace

std::pair<FMat, std::vector<FieldElement>> diagonalize(const HermitianForm& h) {
    require(h.kind() != FormKind::Symplectic, Err::BadInput, "symplectic forms have no orthogonal basis");
    const Tower& F = h.tower();
    int n = h.rank();
    std::vector<std::vector<FieldElement>> pool;
    for (int i = 0; i < n; ++i) pool.push_back(unit_vec(F, n, i));
    std::vector<std::vector<FieldElement>> out;
    std::vector<FieldElement> diag;
    while (!pool.empty()) {
        int pick = -1;
        for (size_t i = 0; i < pool.size(); ++i)
            if (!h.apply(pool[i], pool[i]).is_zero()) {
                pick = static_cast<int>(i);
                break;
            }
        std::vector<FieldElement> v;
        if (pick >= 0) {
            v = pool[static_cast<size_t>(pick)];
        } else {
            bool found = false;
            for (size_t i = 0; i < pool.size() && !found; ++i)
                for (size_t j = i + 1; j < pool.size() && !found; ++j) {
                    FieldElement t = h.apply(pool[i], pool[j]);
                    if (t.is_zero()) continue;
                    std::vector<FieldElement> tries{F->one(), t.rho().inverse()};
                    if (F->has_involution()) tries.push_back(F->skew_generator());
                    for (const auto& x : tries) {
                        auto cand = add_scaled(pool[i], pool[j], x);
                        if (!h.apply(cand, cand).is_zero()) {
                            v = cand;
                            found = true;
                            break;
                        }
                    }
                }
            require(found, Err::BadInput, "cannot diagonalize: form appears alternating");
        }
        FieldElement len = h.apply(v, v);
        out.push_back(v);
        diag.push_back(len);
        std::vector<std::vector<FieldElement>> next;
        for (const auto& u : pool) next.push_back(add_scaled(u, v, -(len.inverse() * h.apply(v, u))));
        if (pool.size() == 1) break;
        pool = independent_subfamily(F, n, next, static_cast<int>(pool.size()) - 1);
    }
    FMat t(n, n, F->zero());
    for (size_t j = 0; j < out.size(); ++j)
        for (int i = 0; i < n; ++i) t.at(i, static_cast<int>(j)) = out[j][static_cast<size_t>(i)];
    return {t, diag};
}

bool binary_represents(const FieldElement& a, const FieldElement& b, const FieldElement& s) {
    require(!a.is_zero() && !b.is_zero() && !s.is_zero(), Err::BadInput, "binary representation test");
    FieldElement mab = -(a * b);
    if (mab.is_square()) return true;  // isotropic binary form is universal
    return hilbert_symbol(mab, s * a) == 1;
}

namespace {

bool quad_isotropic(const std::vector<FieldElement>& d);

bool quad_represents(const std::vector<FieldElement>& d, const FieldElement& s) {
    if (d.size() == 1) return (s * d[0].inverse()).is_square();
    if (d.size() == 2) return binary_represents(d[0], d[1], s);
    std::vector<FieldElement> aug = d;
    aug.push_back(-s);
    return quad_isotropic(aug);
}

bool quad_isotropic(const std::vector<FieldElement>& d) {
    size_t m = d.size();
    if (m <= 1) return false;
    if (m == 2) return (-(d[0] * d[1])).is_square();
    if (m == 3) return binary_represents(d[0], d[1], -d[2]);
    if (m >= 5) return true;  // p-adic: every rank-5 form is isotropic
    // m = 4: common value of <d0,d1> and <-d2,-d3> among the square classes
    const Tower& F = d[0].tower();
    FieldElement u = nonsquare_unit(F);
    for (const FieldElement& t : {F->one(), u, F->pi(), u * F->pi()}) {
        if (binary_represents(d[0], d[1], t) && binary_represents(-d[2], -d[3], t)) return true;
    }
    return false;
}

bool herm_isotropic(const std::vector<FieldElement>& d) {
    if (d.size() <= 1) return false;
    if (d.size() >= 3) return true;
    return is_norm_to_fixed_field(-(d[1] * d[0].inverse()));
}

std::vector<FieldElement> ternary_unit_isotropic(const std::vector<FieldElement>& u, uint64_t seed) {
    const Tower& F = u[0].tower();
    const auto& kappa = F->residue_field();
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 200000; ++attempt) {
        ResidueElement x = ResidueElement::decode(kappa, static_cast<long>(rng() % static_cast<uint64_t>(kappa->q())));
        ResidueElement y = ResidueElement::decode(kappa, static_cast<long>(rng() % static_cast<uint64_t>(kappa->q())));
        if (x.is_zero() && y.is_zero()) continue;
        ResidueElement rhs = -(u[0].residue() * x * x + u[1].residue() * y * y) * u[2].residue().inverse();
        if (!rhs.is_square()) continue;
        ResidueElement z = rhs.sqrt();
        std::vector<FieldElement> v = {F->lift_residue(x), F->lift_residue(y), F->lift_residue(z)};
        int newton = -1;
        for (int i = 0; i < 3; ++i)
            if (!v[static_cast<size_t>(i)].residue().is_zero()) newton = i;
        if (newton < 0) continue;
        FieldElement two_inv = F->from_int(2).inverse();
        for (int it = 0; it < 2 * F->digits() + 8; ++it) {
            FieldElement err = u[0] * v[0] * v[0] + u[1] * v[1] * v[1] + u[2] * v[2] * v[2];
            if (err.is_zero()) break;
            FieldElement& w = v[static_cast<size_t>(newton)];
            w -= err * two_inv * (u[static_cast<size_t>(newton)] * w).inverse();
        }
        FieldElement err = u[0] * v[0] * v[0] + u[1] * v[1] * v[1] + u[2] * v[2] * v[2];
        if (err.is_zero()) return v;
    }
    fail(Err::NonConvergence, "ternary isotropic search failed");
}

std::vector<FieldElement> quad_isotropic_vector(const std::vector<FieldElement>& d, uint64_t seed) {
    const Tower& F = d[0].tower();
    size_t m = d.size();
    for (size_t i = 0; i < m; ++i)
        for (size_t j = i + 1; j < m; ++j) {
            FieldElement r = -(d[j] * d[i].inverse());
            if (r.is_square()) {
                std::vector<FieldElement> v(m, F->zero());
                v[i] = r.sqrt();
                v[j] = F->one();
                return v;
            }
        }
    std::vector<size_t> even, odd;
    for (size_t i = 0; i < m; ++i) (d[i].val() % 2 == 0 ? even : odd).push_back(i);
    for (const auto& grp : {even, odd}) {
        if (grp.size() < 3) continue;
        std::vector<FieldElement> units;
        for (int t = 0; t < 3; ++t) {
            const FieldElement& dt = d[grp[static_cast<size_t>(t)]];
            units.push_back(dt.times_pi_power(-dt.val()));
        }
        auto sol = ternary_unit_isotropic(units, seed);
        long v0 = d[grp[0]].val();
        std::vector<FieldElement> v(m, F->zero());
        for (int t = 0; t < 3; ++t) {
            long vt = d[grp[static_cast<size_t>(t)]].val();
            v[grp[static_cast<size_t>(t)]] = sol[static_cast<size_t>(t)].times_pi_power(-(vt - v0) / 2);
        }
        return v;
    }
    fail(Err::BadInput, "form is anisotropic: no isotropic vector");
}

std::vector<FieldElement> herm_isotropic_vector(const std::vector<FieldElement>& d, uint64_t seed) {
    const Tower& F = d[0].tower();
    size_t m = d.size();
    for (size_t i = 0; i < m; ++i)
        for (size_t j = i + 1; j < m; ++j) {
            FieldElement r = -(d[j] * d[i].inverse());
            if (is_norm_to_fixed_field(r)) {
                std::vector<FieldElement> v(m, F->zero());
                v[i] = solve_norm_equation(r);
                v[j] = F->one();
                return v;
            }
        }
    require(m >= 3, Err::BadInput, "form is anisotropic: no isotropic vector");
    std::mt19937_64 rng(seed);
    FieldElement theta = F->skew_generator();
    for (int attempt = 0; attempt < 20000; ++attempt) {
        FieldElement x = F->from_int(static_cast<long>(rng() % 17) - 8) +
                         theta * F->from_int(static_cast<long>(rng() % 17) - 8);
        if (x.is_zero()) continue;
        FieldElement t = -(d[0] * x * x.rho() + d[1]) * d[2].inverse();
        if (t.is_zero() || !is_norm_to_fixed_field(t)) continue;
        std::vector<FieldElement> v(m, F->zero());
        v[0] = x;
        v[1] = F->one();
        v[2] = solve_norm_equation(t);
        return v;
    }
    fail(Err::NonConvergence, "hermitian isotropic search failed");
}

}  // namespace

bool is_isotropic(const HermitianForm& h) {
    switch (h.kind()) {
        case FormKind::Symplectic: return h.rank() >= 2;
        case FormKind::Quadratic: {
            auto [t, diag] = diagonalize(h);
            (void)t;
            return quad_isotropic(diag);
        }
        case FormKind::Hermitian: {
            auto [t, diag] = diagonalize(h);
            (void)t;
            return herm_isotropic(diag);
        }
        case FormKind::SkewHermitian: {
            const Tower& F = h.tower();
            FMat g = FMat::identity(h.rank(), F->one()) * F->skew_generator();
            return is_isotropic(h.twist(g));
        }
    }
    return false;
}


std::vector<FieldElement> isotropic_vector(const HermitianForm& h, uint64_t seed) {
    const Tower& F = h.tower();
    int n = h.rank();
    if (h.kind() == FormKind::Symplectic) {
        require(n >= 2, Err::BadInput, "zero symplectic space");
        return unit_vec(F, n, 0);
    }
    if (h.kind() == FormKind::SkewHermitian) {
        FMat g = FMat::identity(n, F->one()) * F->skew_generator();
        return isotropic_vector(h.twist(g), seed);  // same vectors are isotropic
    }
    auto [t, diag] = diagonalize(h);
    auto coords = h.kind() == FormKind::Quadratic ? quad_isotropic_vector(diag, seed)
                                                  : herm_isotropic_vector(diag, seed);
    std::vector<FieldElement> v(static_cast<size_t>(n), F->zero());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) v[static_cast<size_t>(i)] += t.at(i, j) * coords[static_cast<size_t>(j)];
    return v;
}

WittBasis witt_decompose(const HermitianForm& h, uint64_t seed) {
    const Tower& F = h.tower();
    int n = h.rank();
    std::vector<std::vector<FieldElement>> cur;
    for (int i = 0; i < n; ++i) cur.push_back(unit_vec(F, n, i));
    std::vector<std::vector<FieldElement>> pairs;
    int hyper = 0;
    while (!cur.empty()) {
        HermitianForm sub = h.restrict_to(cur);
        if (!is_isotropic(sub)) break;
        auto xs = isotropic_vector(sub, seed + static_cast<uint64_t>(37 * hyper));
        auto x = combine(F, n, cur, xs);
        std::vector<FieldElement> y;
        for (const auto& cand : cur)
            if (!h.apply(x, cand).is_zero()) {
                y = cand;
                break;
            }
        require(!y.empty(), Err::BadInput, "degenerate subspace in Witt decomposition");
        FieldElement c = h.apply(x, y).inverse();
        for (auto& e : y) e = e * c;
        FieldElement len = h.apply(y, y);
        if (!len.is_zero()) {
            // y' = y - x·(ε·len/2) keeps h(x,y') = 1 and kills h(y',y')
            FieldElement half = F->from_ratio(mpq_class(h.eps(), 2));
            y = add_scaled(y, x, -(len * half));
        }
        pairs.push_back(x);
        pairs.push_back(y);
        ++hyper;
        std::vector<std::vector<FieldElement>> next;
        for (const auto& u : cur) {
            FieldElement cy = h.apply(y, u) * h.apply(y, x).inverse();
            FieldElement cx = h.apply(x, u) * h.apply(x, y).inverse();
            next.push_back(add_scaled(add_scaled(u, x, -cy), y, -cx));
        }
        cur = independent_subfamily(F, n, next, static_cast<int>(cur.size()) - 2);
    }
    WittBasis out{FMat::zero(n, n, F->zero()), hyper, {}};
    std::vector<std::vector<FieldElement>> cols = pairs;
    if (!cur.empty()) {
        HermitianForm tail_form = h.restrict_to(cur);
        require(tail_form.kind() != FormKind::Symplectic, Err::BadInput, "nonzero symplectic tail");
        FMat t(1, 1, F->zero());
        std::vector<FieldElement> diag;
        if (tail_form.kind() == FormKind::SkewHermitian) {
            FieldElement gamma = F->skew_generator();
            auto [tt, dd] = diagonalize(tail_form.twist(FMat::identity(tail_form.rank(), F->one()) * gamma));
            t = tt;
            // h(v,v) of the twisted diagonal basis equals dd·γ^{-1}
            for (const auto& dv : dd) diag.push_back(dv * gamma.inverse());
        } else {
            auto [tt, dd] = diagonalize(tail_form);
            t = tt;
            diag = dd;
        }
        for (int j = 0; j < t.cols(); ++j) {
            auto w = combine(F, n, cur, t.col(j));
            cols.push_back(w);
            out.tail.push_back(diag[static_cast<size_t>(j)]);
        }
    }
    FMat basis(n, n, F->zero());
    for (size_t j = 0; j < cols.size(); ++j)
        for (int i = 0; i < n; ++i) basis.at(i, static_cast<int>(j)) = cols[j][static_cast<size_t>(i)];
    out.basis = basis;
    return out;
}

bool FormClass::operator==(const FormClass& o) const {
    if (kind != o.kind || rank != o.rank) return false;
    switch (kind) {
        case FormKind::Quadratic: return disc == o.disc && hasse == o.hasse;
        case FormKind::Symplectic: return true;
        case FormKind::Hermitian:
        case FormKind::SkewHermitian: return disc_norm == o.disc_norm;
    }
    return false;
}

std::string FormClass::str() const {
    std::ostringstream os;
    os << form_kind_name(kind) << " rank " << rank;
    if (kind == FormKind::Quadratic)
        os << " disc " << square_class_name(disc) << " hasse " << (hasse > 0 ? "+1" : "-1");
    if (kind == FormKind::Hermitian || kind == FormKind::SkewHermitian)
        os << " disc " << (disc_norm ? "norm" : "non-norm");
    return os.str();
}

FormClass classify_form(const HermitianForm& h) {
    FormClass c;
    c.kind = h.kind();
    c.rank = h.rank();
    const Tower& F = h.tower();
    if (c.kind == FormKind::Symplectic) {
        require(c.rank % 2 == 0, Err::BadInput, "odd-rank symplectic form");
        return c;
    }
    HermitianForm work = h;
    if (c.kind == FormKind::SkewHermitian)
        work = h.twist(FMat::identity(h.rank(), F->one()) * F->skew_generator());
    auto [t, diag] = diagonalize(work);
    (void)t;
    FieldElement det = F->one();
    for (const auto& d : diag) det *= d;
    int sgn = ((c.rank * (c.rank - 1) / 2) % 2 == 0) ? 1 : -1;
    FieldElement disc = det * F->from_int(sgn);
    if (work.kind() == FormKind::Quadratic) {
        c.disc = square_class(disc);
        int hasse = 1;
        for (size_t i = 0; i < diag.size(); ++i)
            for (size_t j = i + 1; j < diag.size(); ++j) hasse *= hilbert_symbol(diag[i], diag[j]);
        c.hasse = hasse;
    } else {
        c.disc_norm = is_norm_to_fixed_field(disc);
    }
    return c;
}

bool is_isometric(const HermitianForm& a, const HermitianForm& b) {
    require(FieldTower::same(a.tower(), b.tower()) && a.eps() == b.eps(), Err::ContextMismatch,
            "isometry test in different contexts");
    return classify_form(a) == classify_form(b);
}

std::vector<FieldElement> represent_value(const HermitianForm& h, const FieldElement& c, uint64_t seed) {
    const Tower& F = h.tower();
    require(!c.is_zero(), Err::BadInput, "represent nonzero values only");
    require(h.kind() == FormKind::Quadratic || h.kind() == FormKind::Hermitian, Err::BadInput,
            "value representation needs a diagonalizable kind");
    if (h.kind() == FormKind::Hermitian)
        require(c.rho_fixed(), Err::BadInput, "hermitian lengths are ρ-fixed");
    // quick path: a diagonal entry already matches up to square/norm
    auto [t, diag] = diagonalize(h);
    for (size_t j = 0; j < diag.size(); ++j) {
        FieldElement r = c * diag[j].inverse();
        if (h.kind() == FormKind::Quadratic ? r.is_square() : is_norm_to_fixed_field(r)) {
            FieldElement s = h.kind() == FormKind::Quadratic ? r.sqrt() : solve_norm_equation(r);
            std::vector<FieldElement> v(static_cast<size_t>(h.rank()), F->zero());
            for (int i = 0; i < h.rank(); ++i) v[static_cast<size_t>(i)] = t.at(i, static_cast<int>(j)) * s;
            return v;
        }
    }
    // h represents c iff h ⊕ ⟨-c⟩ is isotropic with last coordinate ≠ 0
    FMat gext(h.rank() + 1, h.rank() + 1, F->zero());
    for (int i = 0; i < h.rank(); ++i)
        for (int j = 0; j < h.rank(); ++j) gext.at(i, j) = h.gram().at(i, j);
    gext.at(h.rank(), h.rank()) = -c;
    HermitianForm ext(F, h.eps(), gext);
    for (uint64_t attempt = 0; attempt < 64; ++attempt) {
        auto v = isotropic_vector(ext, seed + 0x9e37ULL * attempt + attempt);
        FieldElement last = v[static_cast<size_t>(h.rank())];
        if (last.is_zero()) continue;
        FieldElement s = last.inverse();
        std::vector<FieldElement> out(v.begin(), v.begin() + h.rank());
        for (auto& x : out) x = x * s;
        if ((h.apply(out, out) - c).is_zero()) return out;
    }
    fail(Err::NonConvergence, "value representation search failed");
}

FMat explicit_isometry(const HermitianForm& h1, const HermitianForm& h2, uint64_t seed) {
    require(is_isometric(h1, h2), Err::BadInput, "forms are not isometric");
    const Tower& F = h1.tower();
    int n = h1.rank();
    WittBasis w1 = witt_decompose(h1, seed), w2 = witt_decompose(h2, seed + 1);
    require(w1.hyperbolic == w2.hyperbolic, Err::NonConvergence, "witt decompositions disagree");
    int tail = static_cast<int>(w1.tail.size());
    FMat b2 = w2.basis;
    if (tail > 0) {
        std::vector<std::vector<FieldElement>> cur;
        for (int j = 2 * w2.hyperbolic; j < n; ++j) cur.push_back(b2.col(j));
        std::vector<std::vector<FieldElement>> newcols;
        for (int k = 0; k < tail; ++k) {
            HermitianForm sub = h2.kind() == FormKind::SkewHermitian
                                    ? h2.restrict_to(cur).twist(FMat::identity(static_cast<int>(cur.size()), F->one()) *
                                                                F->skew_generator())
                                    : h2.restrict_to(cur);
            FieldElement target = h2.kind() == FormKind::SkewHermitian
                                      ? w1.tail[static_cast<size_t>(k)] * F->skew_generator()
                                      : w1.tail[static_cast<size_t>(k)];
            auto coords = represent_value(sub, target, seed + 17 * static_cast<uint64_t>(k) + 3);
            auto v = combine(F, n, cur, coords);
            newcols.push_back(v);
            if (static_cast<int>(cur.size()) > 1) {
                std::vector<std::vector<FieldElement>> next;
                FieldElement len = h2.apply(v, v);
                for (const auto& u : cur) next.push_back(add_scaled(u, v, -(len.inverse() * h2.apply(v, u))));
                cur = independent_subfamily(F, n, next, static_cast<int>(cur.size()) - 1);
            } else {
                cur.clear();
            }
        }
        for (int k = 0; k < tail; ++k)
            for (int i = 0; i < n; ++i)
                b2.at(i, 2 * w2.hyperbolic + k) = newcols[static_cast<size_t>(k)][static_cast<size_t>(i)];
    }
    FMat g = b2 * mat_inverse(w1.basis);
    require(h1.gram().equals(fmat_rho_transpose(g) * h2.gram() * g), Err::NonConvergence,
            "isometry verification failed");
    return g;
}

// ---------------------------------------------------------------------------
// residual forms

ResidueElement ResidualForm::bar(const ResidueElement& x) const {
    if (bar_trivial) return x;
    return x.pow_q_power(field->f() / 2);
}

ResidueElement ResidualForm::apply(const std::vector<ResidueElement>& v,
                                   const std::vector<ResidueElement>& w) const {
    ResidueElement acc = ResidueElement::zero(field);
    for (int i = 0; i < gram.rows(); ++i) {
        ResidueElement vb = bar(v[static_cast<size_t>(i)]);
        if (vb.is_zero()) continue;
        for (int j = 0; j < gram.cols(); ++j)
            acc = acc + vb * gram.at(i, j) * w[static_cast<size_t>(j)];
    }
    return acc;
}

ResidualWittBasis residual_witt_decompose(const ResidualForm& f, uint64_t seed) {
    const RF& k = f.field;
    int n = f.gram.rows();
    std::mt19937_64 rng(seed);
    auto rnd = [&]() { return ResidueElement::decode(k, static_cast<long>(rng() % static_cast<uint64_t>(k->q()))); };
    std::vector<std::vector<ResidueElement>> cur;
    for (int i = 0; i < n; ++i) {
        std::vector<ResidueElement> e(static_cast<size_t>(n), ResidueElement::zero(k));
        e[static_cast<size_t>(i)] = ResidueElement::one(k);
        cur.push_back(std::move(e));
    }
    auto lift_coords = [&](const std::vector<std::vector<ResidueElement>>& basis,
                           const std::vector<ResidueElement>& c) {
        std::vector<ResidueElement> v(static_cast<size_t>(n), ResidueElement::zero(k));
        for (size_t j = 0; j < basis.size(); ++j)
            for (int i = 0; i < n; ++i)
                v[static_cast<size_t>(i)] = v[static_cast<size_t>(i)] + basis[j][static_cast<size_t>(i)] * c[j];
        return v;
    };
    auto independent = [&](const std::vector<std::vector<ResidueElement>>& vecs, int target) {
        std::vector<std::vector<ResidueElement>> indep;
        for (const auto& w : vecs) {
            if (static_cast<int>(indep.size()) == target) break;
            std::vector<std::vector<ResidueElement>> trial = indep;
            trial.push_back(w);
            RMat tm(n, static_cast<int>(trial.size()), ResidueElement::zero(k));
            for (size_t c = 0; c < trial.size(); ++c)
                for (int r = 0; r < n; ++r) tm.at(r, static_cast<int>(c)) = trial[c][static_cast<size_t>(r)];
            if (mat_rank(tm) == static_cast<int>(trial.size())) indep = std::move(trial);
        }
        require(static_cast<int>(indep.size()) == target, Err::BadInput, "independent family not found");
        return indep;
    };

    std::vector<std::vector<ResidueElement>> pairs;
    while (static_cast<int>(cur.size()) >= 2) {
        int m = static_cast<int>(cur.size());
        std::vector<ResidueElement> iso;
        long budget = 80L * k->q() + 800;
        for (long t = 0; t < budget && iso.empty(); ++t) {
            std::vector<ResidueElement> c;
            bool nz = false;
            for (int j = 0; j < m; ++j) {
                c.push_back(rnd());
                nz = nz || !c.back().is_zero();
            }
            if (!nz) continue;
            auto v = lift_coords(cur, c);
            if (!f.apply(v, v).is_zero()) continue;
            bool pairing = false;
            for (const auto& b : cur)
                if (!f.apply(v, b).is_zero()) pairing = true;
            if (pairing) iso = v;
        }
        if (iso.empty()) break;
        std::vector<ResidueElement> y;
        for (const auto& b : cur)
            if (!f.apply(iso, b).is_zero()) {
                y = b;
                break;
            }
        ResidueElement c = f.apply(iso, y).inverse();
        for (auto& x : y) x = x * c;
        ResidueElement len = f.apply(y, y);
        if (!len.is_zero()) {
            ResidueElement half = ResidueElement::from_int(k, 2 * f.eps).inverse();
            for (size_t i = 0; i < y.size(); ++i) y[i] = y[i] - iso[i] * len * half;
        }
        pairs.push_back(iso);
        pairs.push_back(y);
        std::vector<std::vector<ResidueElement>> next;
        for (const auto& u : cur) {
            ResidueElement cy = f.apply(y, u) * f.apply(y, iso).inverse();
            ResidueElement cx = f.apply(iso, u) * f.apply(iso, y).inverse();
            std::vector<ResidueElement> w = u;
            for (size_t i = 0; i < w.size(); ++i) w[i] = w[i] - iso[i] * cy - y[i] * cx;
            next.push_back(std::move(w));
        }
        cur = independent(next, m - 2);
    }
    std::vector<std::vector<ResidueElement>> tailvecs;
    std::vector<ResidueElement> tailvals;
    while (!cur.empty()) {
        int m = static_cast<int>(cur.size());
        std::vector<ResidueElement> v;
        for (const auto& b : cur)
            if (!f.apply(b, b).is_zero()) {
                v = b;
                break;
            }
        if (v.empty()) {
            for (int i = 0; i < m && v.empty(); ++i)
                for (int j = i + 1; j < m && v.empty(); ++j) {
                    std::vector<ResidueElement> cand = cur[static_cast<size_t>(i)];
                    for (size_t t = 0; t < cand.size(); ++t) cand[t] = cand[t] + cur[static_cast<size_t>(j)][t];
                    if (!f.apply(cand, cand).is_zero()) v = cand;
                }
            require(!v.empty(), Err::BadInput, "residual tail appears alternating");
        }
        ResidueElement len = f.apply(v, v);
        tailvecs.push_back(v);
        tailvals.push_back(len);
        if (m == 1) break;
        std::vector<std::vector<ResidueElement>> next;
        for (const auto& u : cur) {
            ResidueElement cc = f.apply(v, u) * len.inverse();
            std::vector<ResidueElement> w = u;
            for (size_t i = 0; i < w.size(); ++i) w[i] = w[i] - v[i] * cc;
            next.push_back(std::move(w));
        }
        cur = independent(next, m - 1);
    }
    ResidualWittBasis out{RMat::identity(n, ResidueElement::one(k)), static_cast<int>(pairs.size() / 2),
                          tailvals};
    RMat basis(n, n, ResidueElement::zero(k));
    int col = 0;
    for (const auto& v : pairs) {
        for (int i = 0; i < n; ++i) basis.at(i, col) = v[static_cast<size_t>(i)];
        ++col;
    }
    for (const auto& v : tailvecs) {
        for (int i = 0; i < n; ++i) basis.at(i, col) = v[static_cast<size_t>(i)];
        ++col;
    }
    out.basis = basis;
    return out;
}

}  // namespace pstrata
