#include "pstrata/lattice.hpp"

#include <algorithm>
#include <numeric>

namespace pstrata {

FMat fmat_rho(const FMat& m) {
    FMat r = m;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) r.at(i, j) = m.at(i, j).rho();
    return r;
}

FMat fmat_rho_transpose(const FMat& m) { return fmat_rho(m).transpose(); }

std::vector<FieldElement> flatten(const FMat& m) {
    std::vector<FieldElement> v;
    v.reserve(static_cast<size_t>(m.rows()) * m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) v.push_back(m.at(i, j));
    return v;
}

FMat unflatten(const Tower& F, int n, const std::vector<FieldElement>& v) {
    FMat m(n, n, F->zero());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m.at(i, j) = v[static_cast<size_t>(i * n + j)];
    return m;
}

FMat fmat_from_cols(const Tower& F, const std::vector<std::vector<FieldElement>>& cols) {
    require(!cols.empty(), Err::BadInput, "no columns");
    int d = static_cast<int>(cols[0].size());
    FMat m(d, static_cast<int>(cols.size()), F->zero());
    for (size_t j = 0; j < cols.size(); ++j)
        for (int i = 0; i < d; ++i) m.at(i, static_cast<int>(j)) = cols[j][static_cast<size_t>(i)];
    return m;
}

namespace {

long elem_val_lower(const FieldElement& x) { return x.val_lower(); }

}  // namespace

OLattice OLattice::zero(const Tower& F, int dim) {
    OLattice L;
    L.F_ = F;
    L.dim_ = dim;
    return L;
}

OLattice OLattice::from_generators(const Tower& F, int dim,
                                   const std::vector<std::vector<FieldElement>>& gens) {
    OLattice L;
    L.F_ = F;
    L.dim_ = dim;
    L.canonicalize(gens, nullptr);
    return L;
}

OLattice OLattice::from_matrix_columns(const FMat& gens) {
    std::vector<std::vector<FieldElement>> cols;
    for (int j = 0; j < gens.cols(); ++j) cols.push_back(gens.col(j));
    return from_generators(gens.proto().tower(), gens.rows(), cols);
}

// Column echelon over o_F, rows processed top-down with valuation pivoting
// inside each row (ties by column order). Unimodular column operations only,
// so the zeroed companion columns span the saturated kernel. Each finalized
// column is zero at all earlier pivot rows, which makes membership a
// triangular solve.
void OLattice::canonicalize(std::vector<std::vector<FieldElement>> cols,
                            std::vector<std::vector<FieldElement>>* kernel_out) {
    size_t m = cols.size();
    std::vector<std::vector<FieldElement>> comp;
    if (kernel_out) {
        for (size_t j = 0; j < m; ++j) {
            std::vector<FieldElement> e(m, F_->zero());
            e[j] = F_->one();
            comp.push_back(std::move(e));
        }
    }
    std::vector<bool> active(m, true);
    std::vector<int> final_cols;
    std::vector<int> final_pivrow;
    std::vector<long> final_pivval;
    FieldElement pi = F_->pi();
    for (int r = 0; r < dim_; ++r) {
        long best = VAL_INF;
        int bc = -1;
        for (size_t c = 0; c < m; ++c) {
            if (!active[c]) continue;
            const FieldElement& x = cols[c][static_cast<size_t>(r)];
            if (x.is_zero()) continue;
            long w = elem_val_lower(x);
            if (w < best) {
                best = w;
                bc = static_cast<int>(c);
            }
        }
        if (bc < 0) continue;
        FieldElement pivot = cols[static_cast<size_t>(bc)][static_cast<size_t>(r)];
        long k = pivot.val();
        FieldElement uinv = (pivot.times_pi_power(-k)).inverse();
        for (auto& x : cols[static_cast<size_t>(bc)]) x = x * uinv;
        if (kernel_out)
            for (auto& x : comp[static_cast<size_t>(bc)]) x = x * uinv;
        cols[static_cast<size_t>(bc)][static_cast<size_t>(r)] = pi.pow(k);
        for (size_t c = 0; c < m; ++c) {
            if (!active[c] || static_cast<int>(c) == bc) continue;
            const FieldElement& e = cols[c][static_cast<size_t>(r)];
            if (e.is_zero()) continue;
            FieldElement q = e.times_pi_power(-k);
            for (size_t rr = 0; rr < cols[c].size(); ++rr)
                cols[c][rr] -= q * cols[static_cast<size_t>(bc)][rr];
            cols[c][static_cast<size_t>(r)] = F_->zero();
            if (kernel_out)
                for (size_t rr = 0; rr < m; ++rr) comp[c][rr] -= q * comp[static_cast<size_t>(bc)][rr];
        }
        active[static_cast<size_t>(bc)] = false;
        final_cols.push_back(bc);
        final_pivrow.push_back(r);
        final_pivval.push_back(k);
    }
    if (kernel_out) {
        kernel_out->clear();
        for (size_t c = 0; c < m; ++c)
            if (active[c]) kernel_out->push_back(comp[c]);
    }
    // canonical reduction: entries of earlier columns at later pivot rows are
    // reduced mod the pivot; col_t vanishes at earlier pivot rows, so the
    // already-reduced positions are untouched
    for (size_t t = 0; t < final_cols.size(); ++t) {
        int cj = final_cols[t];
        int rj = final_pivrow[t];
        long kj = final_pivval[t];
        for (size_t s = 0; s < t; ++s) {
            int cs = final_cols[s];
            FieldElement e = cols[static_cast<size_t>(cs)][static_cast<size_t>(rj)];
            if (e.is_zero()) continue;
            long ve = e.val();
            FieldElement red = ve >= 0 ? e.mod_pi_power(kj)
                                       : (e.times_pi_power(-ve).mod_pi_power(kj - ve)).times_pi_power(ve);
            FieldElement q = (e - red).times_pi_power(-kj);
            for (size_t rr = 0; rr < cols[static_cast<size_t>(cs)].size(); ++rr)
                cols[static_cast<size_t>(cs)][rr] -= q * cols[static_cast<size_t>(cj)][rr];
        }
    }
    cols_.clear();
    pivot_rows_.clear();
    pivot_vals_.clear();
    for (size_t t = 0; t < final_cols.size(); ++t) {
        cols_.push_back(cols[static_cast<size_t>(final_cols[t])]);
        pivot_rows_.push_back(final_pivrow[t]);
        pivot_vals_.push_back(final_pivval[t]);
    }
}

std::vector<std::vector<FieldElement>> o_kernel(const Tower& F, int dim,
                                                const std::vector<std::vector<FieldElement>>& cols) {
    OLattice L;
    L.F_ = F;
    L.dim_ = dim;
    std::vector<std::vector<FieldElement>> kernel;
    L.canonicalize(cols, &kernel);
    return kernel;
}

bool OLattice::contains(const std::vector<FieldElement>& v) const {
    std::vector<FieldElement> r = v;
    for (size_t t = 0; t < cols_.size(); ++t) {
        const FieldElement& e = r[static_cast<size_t>(pivot_rows_[t])];
        if (e.is_zero()) continue;
        if (e.val_lower() < pivot_vals_[t]) {
            // a certified lower valuation refutes membership; an uncertain
            // one cannot certify it either
            if (!e.is_zero()) {
                long ev;
                try {
                    ev = e.val();
                } catch (const Error&) {
                    fail(Err::PrecisionExhausted, "membership undecidable at working precision");
                }
                if (ev < pivot_vals_[t]) return false;
            }
        }
        FieldElement q = e.times_pi_power(-pivot_vals_[t]);
        for (size_t r2 = 0; r2 < r.size(); ++r2) r[r2] -= q * cols_[t][r2];
    }
    for (const auto& x : r)
        if (!x.is_zero()) return false;
    return true;
}

bool OLattice::contains_lattice(const OLattice& o) const {
    for (const auto& c : o.cols_)
        if (!contains(c)) return false;
    return true;
}

OLattice OLattice::sum(const OLattice& o) const {
    require(dim_ == o.dim_, Err::BadInput, "lattice sum dimension mismatch");
    std::vector<std::vector<FieldElement>> gens = cols_;
    gens.insert(gens.end(), o.cols_.begin(), o.cols_.end());
    return from_generators(F_, dim_, gens);
}

OLattice OLattice::intersect(const OLattice& o) const {
    require(dim_ == o.dim_, Err::BadInput, "lattice intersection dimension mismatch");
    // kernel of [B1 | -B2]: pairs (a, b) with B1 a = B2 b
    std::vector<std::vector<FieldElement>> stacked;
    for (const auto& c : cols_) stacked.push_back(c);
    for (const auto& c : o.cols_) {
        std::vector<FieldElement> neg;
        for (const auto& x : c) neg.push_back(-x);
        stacked.push_back(std::move(neg));
    }
    auto ker = o_kernel(F_, dim_, stacked);
    std::vector<std::vector<FieldElement>> gens;
    for (const auto& v : ker) {
        std::vector<FieldElement> g(static_cast<size_t>(dim_), F_->zero());
        for (size_t t = 0; t < cols_.size(); ++t)
            for (int r = 0; r < dim_; ++r) g[static_cast<size_t>(r)] += cols_[t][static_cast<size_t>(r)] * v[t];
        gens.push_back(std::move(g));
    }
    if (gens.empty()) return zero(F_, dim_);
    return from_generators(F_, dim_, gens);
}

OLattice OLattice::scale(long pi_power) const {
    OLattice L = *this;
    FieldElement f = F_->pi().pow(pi_power);
    for (auto& c : L.cols_)
        for (auto& x : c) x = x * f;
    for (auto& v : L.pivot_vals_) v += pi_power;
    return L;
}

OLattice OLattice::image(const FMat& a) const {
    std::vector<std::vector<FieldElement>> gens;
    for (const auto& c : cols_) {
        std::vector<FieldElement> g(static_cast<size_t>(a.rows()), F_->zero());
        for (int i = 0; i < a.rows(); ++i)
            for (int j = 0; j < a.cols(); ++j) g[static_cast<size_t>(i)] += a.at(i, j) * c[static_cast<size_t>(j)];
        gens.push_back(std::move(g));
    }
    if (gens.empty()) return zero(F_, a.rows());
    return from_generators(F_, a.rows(), gens);
}

OLattice OLattice::preimage(const FMat& a, const OLattice& target) const {
    require(a.cols() == dim_ && a.rows() == target.dim_, Err::BadInput, "preimage shape mismatch");
    // pairs (x-coeffs, t-coeffs) with A B x = C t
    std::vector<std::vector<FieldElement>> stacked;
    for (const auto& c : cols_) {
        std::vector<FieldElement> g(static_cast<size_t>(a.rows()), F_->zero());
        for (int i = 0; i < a.rows(); ++i)
            for (int j = 0; j < a.cols(); ++j) g[static_cast<size_t>(i)] += a.at(i, j) * c[static_cast<size_t>(j)];
        stacked.push_back(std::move(g));
    }
    for (const auto& c : target.cols_) {
        std::vector<FieldElement> neg;
        for (const auto& x : c) neg.push_back(-x);
        stacked.push_back(std::move(neg));
    }
    auto ker = o_kernel(F_, target.dim_, stacked);
    std::vector<std::vector<FieldElement>> gens;
    for (const auto& v : ker) {
        std::vector<FieldElement> g(static_cast<size_t>(dim_), F_->zero());
        for (size_t t = 0; t < cols_.size(); ++t)
            for (int r = 0; r < dim_; ++r) g[static_cast<size_t>(r)] += cols_[t][static_cast<size_t>(r)] * v[t];
        gens.push_back(std::move(g));
    }
    if (gens.empty()) return zero(F_, dim_);
    return from_generators(F_, dim_, gens);
}

OLattice OLattice::map_kernel(const FMat& a) const {
    return preimage(a, zero(F_, a.rows()));
}

long OLattice::quotient_length(const OLattice& o) const {
    require(rank() == o.rank(), Err::BadInput, "quotient of different ranks");
    if (rank() == 0) return 0;
    // o ⊆ this; write o's basis in this basis and take ν(det)
    FMat x(rank(), rank(), F_->zero());
    for (int j = 0; j < rank(); ++j) {
        auto coeff = solve_in_span(o.cols_[static_cast<size_t>(j)]);
        for (int i = 0; i < rank(); ++i) x.at(i, j) = coeff[static_cast<size_t>(i)];
    }
    FieldElement d = mat_det(x);
    require(!d.is_zero(), Err::BadInput, "quotient of non-commensurable lattices");
    long v = d.val();
    require(v % F_->ram_e() == 0, Err::BadInput, "quotient length not integral");
    return v / F_->ram_e();
}

std::vector<FieldElement> OLattice::solve_in_span(const std::vector<FieldElement>& v) const {
    std::vector<FieldElement> r = v;
    std::vector<FieldElement> coeff(cols_.size(), F_->zero());
    for (size_t t = 0; t < cols_.size(); ++t) {
        const FieldElement& e = r[static_cast<size_t>(pivot_rows_[t])];
        if (e.is_zero()) continue;
        FieldElement q = e.times_pi_power(-pivot_vals_[t]);
        coeff[t] = q;
        for (size_t r2 = 0; r2 < r.size(); ++r2) r[r2] -= q * cols_[t][r2];
    }
    for (const auto& x : r)
        require(x.is_zero(), Err::BadInput, "vector outside the lattice span");
    return coeff;
}


std::vector<FieldElement> fmat_solve_any(const FMat& m, const std::vector<FieldElement>& t) {
    const Tower& F = m.proto().tower();
    FMat aug(m.rows(), m.cols() + 1, F->zero());
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) aug.at(i, j) = m.at(i, j);
        aug.at(i, m.cols()) = t[static_cast<size_t>(i)];
    }
    std::vector<bool> row_used(static_cast<size_t>(m.rows()), false);
    std::vector<bool> col_used(static_cast<size_t>(m.cols()), false);
    std::vector<std::pair<int, int>> pivots;
    while (true) {
        int br = -1, bc = -1;
        long bw = VAL_INF;
        for (int i = 0; i < m.rows(); ++i) {
            if (row_used[static_cast<size_t>(i)]) continue;
            for (int j = 0; j < m.cols(); ++j) {
                if (col_used[static_cast<size_t>(j)]) continue;
                const FieldElement& x = aug.at(i, j);
                if (x.is_zero()) continue;
                long w = x.val_lower();
                if (w < bw) {
                    bw = w;
                    br = i;
                    bc = j;
                }
            }
        }
        if (br < 0) break;
        FieldElement pinv = aug.at(br, bc).inverse();
        for (int i = 0; i < m.rows(); ++i) {
            if (i == br || aug.at(i, bc).is_zero()) continue;
            FieldElement f = aug.at(i, bc) * pinv;
            for (int j = 0; j <= m.cols(); ++j) aug.at(i, j) -= f * aug.at(br, j);
        }
        row_used[static_cast<size_t>(br)] = true;
        col_used[static_cast<size_t>(bc)] = true;
        pivots.emplace_back(br, bc);
    }
    for (int i = 0; i < m.rows(); ++i)
        if (!row_used[static_cast<size_t>(i)])
            require(aug.at(i, m.cols()).is_zero(), Err::SingularBasis, "inconsistent linear system");
    std::vector<FieldElement> x(static_cast<size_t>(m.cols()), F->zero());
    for (auto& [r, c] : pivots) {
        FieldElement rhs = aug.at(r, m.cols());
        for (int j = 0; j < m.cols(); ++j)
            if (j != c && !aug.at(r, j).is_zero() && !x[static_cast<size_t>(j)].is_zero())
                rhs -= aug.at(r, j) * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(c)] = rhs * aug.at(r, c).inverse();
    }
    return x;
}

// ---------------------------------------------------------------------------
// LatticeSequence

namespace {
long ceil_div(long a, long b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }
long floor_div(long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
}  // namespace

LatticeSequence::LatticeSequence(Tower F, FMat basis, std::vector<long> jumps, long period)
    : F_(std::move(F)), n_(basis.rows()), e_(period), basis_(basis), basis_inv_(basis), jumps_(std::move(jumps)) {
    require(period >= 1, Err::BadInput, "period must be positive");
    require(basis.rows() == basis.cols(), Err::BadInput, "splitting basis must be square");
    require(static_cast<int>(jumps_.size()) == n_, Err::BadInput, "one jump per basis vector");
    FieldElement det = mat_det(basis_);
    require(!det.is_zero(), Err::SingularBasis, "splitting basis is singular");
    basis_inv_ = mat_inverse(basis_);
    // normalize jumps into [0, e): a -> a - e t compensated by v -> v π^t
    FieldElement pi = F_->pi();
    for (int j = 0; j < n_; ++j) {
        long t = floor_div(jumps_[static_cast<size_t>(j)], e_);
        if (t == 0) continue;
        jumps_[static_cast<size_t>(j)] -= e_ * t;
        FieldElement f = pi.pow(-t);
        for (int i = 0; i < n_; ++i) basis_.at(i, j) = basis_.at(i, j) * f;
    }
    if (n_ > 0) basis_inv_ = mat_inverse(basis_);
}

long LatticeSequence::coeff_exponent(int j, long s) const {
    return ceil_div(s - jumps_[static_cast<size_t>(j)], e_);
}

FMat LatticeSequence::level_basis(long s) const {
    FMat m = basis_;
    FieldElement pi = F_->pi();
    for (int j = 0; j < n_; ++j) {
        FieldElement f = pi.pow(coeff_exponent(j, s));
        for (int i = 0; i < n_; ++i) m.at(i, j) = m.at(i, j) * f;
    }
    return m;
}

OLattice LatticeSequence::level(long s) const { return OLattice::from_matrix_columns(level_basis(s)); }

bool LatticeSequence::is_chain() const {
    auto prof = residual_profile();
    for (long d : prof)
        if (d == 0) return false;
    return true;
}

std::vector<long> LatticeSequence::residual_profile() const {
    std::vector<long> d(static_cast<size_t>(e_), 0);
    for (long a : jumps_) ++d[static_cast<size_t>(a % e_)];
    return d;
}

std::vector<long> LatticeSequence::block_profile(const FMat& idempotent) const {
    // Λ^i_s = Λ_s ∩ im(P), profile entry s = dim_κ(Λ^i_s / Λ^i_{s+1})
    FMat q = FMat::identity(n_, F_->one()) - idempotent;
    require((idempotent * idempotent - idempotent).is_zero(), Err::BadBlock, "projector expected");
    std::vector<OLattice> levels;
    for (long s = 0; s <= e_; ++s) {
        OLattice ls = level(s);
        OLattice cap = ls.map_kernel(q);
        levels.push_back(cap);
    }
    std::vector<long> out;
    for (long s = 0; s < e_; ++s)
        out.push_back(levels[static_cast<size_t>(s)].quotient_length(levels[static_cast<size_t>(s + 1)]));
    return out;
}

LatticeSequence LatticeSequence::translate(long t) const {
    std::vector<long> j = jumps_;
    for (auto& a : j) a += t;
    return LatticeSequence(F_, basis_, std::move(j), e_);
}

LatticeSequence LatticeSequence::scale_period(long k) const {
    require(k >= 1, Err::BadInput, "scale factor must be positive");
    std::vector<long> j = jumps_;
    for (auto& a : j) a *= k;
    return LatticeSequence(F_, basis_, std::move(j), e_ * k);
}

LatticeSequence LatticeSequence::direct_sum(const LatticeSequence& a, const LatticeSequence& b) {
    require(FieldTower::same(a.F_, b.F_), Err::ContextMismatch, "direct sum over different fields");
    require(a.e_ == b.e_, Err::PeriodMismatch, "direct sum needs equal periods");
    int n = a.n_ + b.n_;
    FMat basis(n, n, a.F_->zero());
    for (int i = 0; i < a.n_; ++i)
        for (int j = 0; j < a.n_; ++j) basis.at(i, j) = a.basis_.at(i, j);
    for (int i = 0; i < b.n_; ++i)
        for (int j = 0; j < b.n_; ++j) basis.at(a.n_ + i, a.n_ + j) = b.basis_.at(i, j);
    std::vector<long> jumps = a.jumps_;
    jumps.insert(jumps.end(), b.jumps_.begin(), b.jumps_.end());
    return LatticeSequence(a.F_, std::move(basis), std::move(jumps), a.e_);
}

LatticeSequence LatticeSequence::dagger() const {
    LatticeSequence acc = *this;
    for (long l = 1; l < e_; ++l) acc = direct_sum(acc, translate(l));
    return acc;
}

bool LatticeSequence::equals(const LatticeSequence& o) const {
    if (e_ != o.e_ || n_ != o.n_) return false;
    for (long s = 0; s < e_; ++s)
        if (!level(s).equals(o.level(s))) return false;
    return true;
}

long LatticeSequence::nu_lower(const FMat& x) const {
    FMat y = basis_inv_ * x * basis_;
    long m = VAL_INF;
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) {
            long v = y.at(i, j).val_lower();
            if (v == VAL_INF) continue;
            long c = e_ * v + jumps_[static_cast<size_t>(i)] - jumps_[static_cast<size_t>(j)];
            m = std::min(m, c);
        }
    return m;
}

long LatticeSequence::nu(const FMat& x) const {
    FMat y = basis_inv_ * x * basis_;
    long vnz = VAL_INF, vzb = VAL_INF;
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) {
            const FieldElement& c = y.at(i, j);
            long shift = jumps_[static_cast<size_t>(i)] - jumps_[static_cast<size_t>(j)];
            if (!c.is_zero())
                vnz = std::min(vnz, e_ * c.val() + shift);
            else if (c.val_lower() != VAL_INF)
                vzb = std::min(vzb, e_ * c.val_lower() + shift);
        }
    if (vnz == VAL_INF) return VAL_INF;
    if (vnz <= vzb) return vnz;
    fail(Err::PrecisionExhausted, "ν_Λ uncertain at working precision");
}

bool LatticeSequence::in_normalizer(const FMat& g) const {
    FMat gi = mat_inverse(g);
    long a = nu(g), b = nu(gi);
    return a != VAL_INF && b != VAL_INF && a + b == 0;
}

OLattice LatticeSequence::a_lattice(long i) const {
    std::vector<std::vector<FieldElement>> gens;
    FieldElement pi = F_->pi();
    for (int r = 0; r < n_; ++r)
        for (int c = 0; c < n_; ++c) {
            long k = ceil_div(i + jumps_[static_cast<size_t>(c)] - jumps_[static_cast<size_t>(r)], e_);
            FMat m(n_, n_, F_->zero());
            m.at(r, c) = pi.pow(k);
            gens.push_back(flatten(basis_ * m * basis_inv_));
        }
    return OLattice::from_generators(F_, n_ * n_, gens);
}

LatticeSequence LatticeSequence::dual(const FMat& gram) const {
    // dual basis w_k with h(v_j, w_k) = δ_jk: W = (ρ(B)^T G)^{-1}
    FMat w = mat_inverse(fmat_rho(basis_).transpose() * gram);
    // (Λ_{-s})^# = ⊕ w_k π^{1 + ⌊(s + a_k)/e⌋}, i.e. jumps c_k = -a_k - 1
    std::vector<long> cj;
    for (long a : jumps_) cj.push_back(-a - 1);
    return LatticeSequence(F_, std::move(w), std::move(cj), e_);
}

std::optional<long> LatticeSequence::self_dual_witness(const FMat& gram) const {
    LatticeSequence d = dual(gram);
    // (Λ_s)^# = d_{-s}; want u with d_{-s} = Λ_{u-s}, i.e. d = Λ translated by -u
    for (long u = -2 * e_; u <= 2 * e_; ++u) {
        bool ok = true;
        for (long s = 0; s < e_ && ok; ++s)
            if (!d.level(s).equals(level(u + s))) ok = false;
        if (ok) return u;
    }
    return std::nullopt;
}

}  // namespace pstrata
