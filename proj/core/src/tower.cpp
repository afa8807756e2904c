#include "pstrata/tower.hpp"

#include <algorithm>
#include <sstream>

#include "pstrata/matrix.hpp"

namespace pstrata {

namespace {
bool is_prime_small(int n) {
    if (n < 2) return false;
    for (int d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}
}  // namespace

Tower FieldTower::make_qp(long p, int digits) {
    auto t = std::make_shared<FieldTower>();
    t->ctx_ = make_context(p, digits);
    t->radix_ = {1};
    t->degree_ = 1;
    t->e_ = 1;
    t->f_ = 1;
    t->weights_ = {0};
    t->parities_ = {0};
    t->res_idx_ = {0};
    t->kappa_ = ResidueField::prime_field(p);
    return t;
}

Tower FieldTower::make(long p, int digits, const std::vector<StepSpec>& steps, int conj_step) {
    std::vector<int> cs;
    if (conj_step >= 0) cs.push_back(conj_step);
    return make(p, digits, steps, cs);
}

Tower FieldTower::make(long p, int digits, const std::vector<StepSpec>& steps,
                       const std::vector<int>& conj_steps) {
    Tower cur = make_qp(p, digits);
    for (const auto& s : steps) {
        require(is_prime_small(s.degree), Err::TagMismatch, "extension steps must have prime degree");
        require(static_cast<int>(s.coeffs.size()) == s.degree, Err::BadInput,
                "defining polynomial needs exactly degree coefficients");
        if (s.kind == StepKind::Eisenstein)
            require(s.degree % p != 0, Err::WildExtension, "wildly ramified step rejected");

        auto next = std::make_shared<FieldTower>();
        next->ctx_ = cur->ctx_;
        next->kinds_ = cur->kinds_;
        next->degrees_ = cur->degrees_;
        next->coeffs_ = cur->coeffs_;
        next->spec_ = cur->spec_;
        next->parent_ = cur;
        next->kinds_.push_back(s.kind);
        next->degrees_.push_back(s.degree);
        next->spec_.push_back(s);

        // convert the coefficients over the subtower
        std::vector<std::vector<Zp>> cc;
        for (const auto& coord : s.coeffs) {
            require(static_cast<int>(coord.size()) <= cur->degree_, Err::BadInput,
                    "coefficient has more coordinates than the subtower degree");
            std::vector<Zp> v(static_cast<size_t>(cur->degree_), Zp::zero(cur->ctx_));
            for (size_t i = 0; i < coord.size(); ++i)
                v[i] = Zp::from_ratio(cur->ctx_, coord[i].get_num(), coord[i].get_den());
            cc.push_back(std::move(v));
        }
        next->coeffs_.push_back(std::move(cc));
        next->radix_ = cur->radix_;
        next->radix_.push_back(cur->degree_ * s.degree);
        next->degree_ = cur->degree_ * s.degree;
        next->e_ = cur->e_ * (s.kind == StepKind::Eisenstein ? s.degree : 1);
        next->f_ = cur->f_ * (s.kind == StepKind::Unramified ? s.degree : 1);

        // tag checks against the subtower
        const auto& poly = next->coeffs_.back();
        if (s.kind == StepKind::Eisenstein) {
            for (int i = 0; i < s.degree; ++i) {
                FieldElement ci(cur, poly[static_cast<size_t>(i)]);
                long v = ci.is_zero() ? VAL_INF : ci.val();
                require(v >= 1, Err::TagMismatch, "eisenstein coefficient not in the maximal ideal");
                if (i == 0)
                    require(v == 1, Err::TagMismatch, "eisenstein constant term must have valuation 1");
            }
        } else {
            std::vector<ResidueElement> rc;
            for (int i = 0; i < s.degree; ++i) {
                FieldElement ci(cur, poly[static_cast<size_t>(i)]);
                require(ci.is_integral(), Err::TagMismatch, "unramified coefficient not integral");
                rc.push_back(ci.residue());
            }
            rc.push_back(ResidueElement::one(cur->kappa_));
            require(residue_irreducible(RPoly(std::move(rc))), Err::TagMismatch,
                    "unramified step must reduce to an irreducible polynomial");
        }
        next->build_tables();
        cur = next;
    }

    if (!conj_steps.empty()) {
        auto owned = std::const_pointer_cast<FieldTower>(cur);
        owned->conj_steps_ = conj_steps;
        std::sort(owned->conj_steps_.begin(), owned->conj_steps_.end());
        for (int s : owned->conj_steps_) {
            require(s >= 0 && s < cur->num_steps(), Err::BadInvolution, "involution step out of range");
            require(cur->degrees_[static_cast<size_t>(s)] == 2, Err::BadInvolution,
                    "involution must conjugate quadratic steps");
        }
        // rebuild parity tables with the involution in place, then propagate
        // the mask to the prefix subtowers so coefficient checks see it
        owned->build_tables();
        for (int s : owned->conj_steps_) {
            FieldElement lin(cur->prefix(s), cur->coeffs_[static_cast<size_t>(s)][1]);
            require(lin.is_zero(), Err::BadInvolution, "conjugated steps must be of the form X^2 - c");
        }
        // every step's coefficients must be fixed by the involution of its
        // own subtower (the mask restricted below the step)
        for (int k = 0; k < cur->num_steps(); ++k) {
            for (const auto& coord : cur->coeffs_[static_cast<size_t>(k)]) {
                FieldElement ce(cur->prefix(k), coord);
                require(ce.rho_fixed(), Err::BadInvolution,
                        "defining coefficients must be fixed by the involution below them");
            }
        }
    }
    return cur;
}

bool FieldTower::step_conjugated(int k) const {
    for (int s : conj_steps_)
        if (s == k) return true;
    return false;
}

FieldElement FieldTower::skew_generator() const {
    require(has_involution(), Err::BadInput, "tower has no involution");
    return generator(conj_steps_.front());
}

Tower FieldTower::prefix(int nsteps) const {
    require(nsteps >= 0 && nsteps <= num_steps(), Err::BadInput, "prefix out of range");
    if (nsteps == num_steps()) return shared_from_this();
    Tower t = parent_;
    for (int k = num_steps() - 1; k > nsteps; --k) t = t->parent_;
    std::vector<int> mask;
    for (int s : conj_steps_)
        if (s < nsteps) mask.push_back(s);
    if (mask == t->conj_steps_) return t;
    auto owned = std::make_shared<FieldTower>(*t);
    owned->conj_steps_ = mask;
    owned->build_tables();
    return owned;
}

void FieldTower::build_tables() {
    int m = num_steps();
    weights_.assign(static_cast<size_t>(degree_), 0);
    parities_.assign(static_cast<size_t>(degree_), 0);
    res_idx_.clear();
    for (int i = 0; i < degree_; ++i) {
        auto ex = exponents(i);
        long w = 0;
        bool eisfree = true;
        int e_upto = 1;
        for (int k = 0; k < m; ++k) {
            if (kinds_[static_cast<size_t>(k)] == StepKind::Eisenstein) {
                e_upto *= degrees_[static_cast<size_t>(k)];
                if (ex[static_cast<size_t>(k)] != 0) eisfree = false;
                w += static_cast<long>(ex[static_cast<size_t>(k)]) * (e_ / e_upto);
            }
        }
        weights_[static_cast<size_t>(i)] = w;
        int par = 0;
        for (int s : conj_steps_) par += ex[static_cast<size_t>(s)];
        parities_[static_cast<size_t>(i)] = par & 1;
        if (eisfree) res_idx_.push_back(i);
    }

    // residue field structure constants on the unramified monomials
    std::vector<std::vector<std::vector<long>>> table(res_idx_.size());
    for (size_t t = 0; t < res_idx_.size(); ++t) {
        for (size_t u = 0; u < res_idx_.size(); ++u) {
            std::vector<Zp> a(static_cast<size_t>(degree_)), b(static_cast<size_t>(degree_));
            a[static_cast<size_t>(res_idx_[t])] = Zp::one(ctx_);
            b[static_cast<size_t>(res_idx_[u])] = Zp::one(ctx_);
            auto prod = mul_coords(a, b);
            std::vector<long> digits;
            for (int s : res_idx_) digits.push_back(prod[static_cast<size_t>(s)].is_zero()
                                                        ? 0
                                                        : prod[static_cast<size_t>(s)].residue_digit());
            table[t].push_back(std::move(digits));
        }
    }
    kappa_ = ResidueField::make(p(), std::move(table));
}

int FieldTower::flat_index(const std::vector<int>& exps) const {
    int idx = 0;
    for (int k = 0; k < num_steps(); ++k) idx += exps[static_cast<size_t>(k)] * radix_[static_cast<size_t>(k)];
    return idx;
}

std::vector<int> FieldTower::exponents(int flat) const {
    std::vector<int> ex(static_cast<size_t>(num_steps()));
    for (int k = 0; k < num_steps(); ++k) {
        ex[static_cast<size_t>(k)] = (flat / radix_[static_cast<size_t>(k)]) % degrees_[static_cast<size_t>(k)];
    }
    return ex;
}

void FieldTower::mul_level(int level, const Zp* a, const Zp* b, Zp* out) const {
    if (level == 0) {
        out[0] = a[0] * b[0];
        return;
    }
    int d = degrees_[static_cast<size_t>(level - 1)];
    int D = radix_[static_cast<size_t>(level - 1)];
    std::vector<Zp> conv(static_cast<size_t>((2 * d - 1) * D));
    std::vector<Zp> tmp(static_cast<size_t>(D));
    auto block_zero = [&](const Zp* blk) {
        for (int t = 0; t < D; ++t)
            if (!blk[t].is_exact_zero()) return false;
        return true;
    };
    for (int i = 0; i < d; ++i) {
        if (block_zero(a + i * D)) continue;
        for (int j = 0; j < d; ++j) {
            if (block_zero(b + j * D)) continue;
            mul_level(level - 1, a + i * D, b + j * D, tmp.data());
            for (int t = 0; t < D; ++t) {
                Zp& slot = conv[static_cast<size_t>((i + j) * D + t)];
                slot = slot + tmp[static_cast<size_t>(t)];
            }
        }
    }
    const auto& poly = coeffs_[static_cast<size_t>(level - 1)];
    for (int t = 2 * d - 2; t >= d; --t) {
        if (block_zero(conv.data() + t * D)) continue;
        for (int j = 0; j < d; ++j) {
            mul_level(level - 1, conv.data() + t * D, poly[static_cast<size_t>(j)].data(), tmp.data());
            for (int s = 0; s < D; ++s) {
                Zp& slot = conv[static_cast<size_t>((t - d + j) * D + s)];
                slot = slot - tmp[static_cast<size_t>(s)];
            }
        }
    }
    for (int t = 0; t < d * D; ++t) out[t] = conv[static_cast<size_t>(t)];
}

std::vector<Zp> FieldTower::mul_coords(const std::vector<Zp>& a, const std::vector<Zp>& b) const {
    std::vector<Zp> out(static_cast<size_t>(degree_));
    mul_level(num_steps(), a.data(), b.data(), out.data());
    for (auto& x : out)
        if (!x.ctx()) x = Zp::zero(ctx_);
    return out;
}

FieldElement FieldTower::zero() const {
    return FieldElement(shared_from_this(), std::vector<Zp>(static_cast<size_t>(degree_), Zp::zero(ctx_)));
}

FieldElement FieldTower::one() const { return from_int(1); }

FieldElement FieldTower::from_int(long v) const {
    auto c = std::vector<Zp>(static_cast<size_t>(degree_), Zp::zero(ctx_));
    c[0] = Zp(ctx_, v);
    return FieldElement(shared_from_this(), std::move(c));
}

FieldElement FieldTower::from_ratio(const mpq_class& v) const {
    auto c = std::vector<Zp>(static_cast<size_t>(degree_), Zp::zero(ctx_));
    c[0] = Zp::from_ratio(ctx_, v.get_num(), v.get_den());
    return FieldElement(shared_from_this(), std::move(c));
}

FieldElement FieldTower::from_zp(const Zp& v) const {
    auto c = std::vector<Zp>(static_cast<size_t>(degree_), Zp::zero(ctx_));
    c[0] = v;
    return FieldElement(shared_from_this(), std::move(c));
}

FieldElement FieldTower::basis_element(int i) const {
    auto c = std::vector<Zp>(static_cast<size_t>(degree_), Zp::zero(ctx_));
    c[static_cast<size_t>(i)] = Zp::one(ctx_);
    return FieldElement(shared_from_this(), std::move(c));
}

FieldElement FieldTower::generator(int step) const {
    std::vector<int> ex(static_cast<size_t>(num_steps()), 0);
    ex[static_cast<size_t>(step)] = 1;
    return basis_element(flat_index(ex));
}

FieldElement FieldTower::pi() const {
    for (int k = num_steps() - 1; k >= 0; --k)
        if (kinds_[static_cast<size_t>(k)] == StepKind::Eisenstein) return generator(k);
    return from_int(p());
}

bool FieldTower::pi_is_skew() const {
    for (int k = num_steps() - 1; k >= 0; --k)
        if (kinds_[static_cast<size_t>(k)] == StepKind::Eisenstein) return step_conjugated(k);
    return false;
}

FieldElement FieldTower::lift_residue(const ResidueElement& r) const {
    auto c = std::vector<Zp>(static_cast<size_t>(degree_), Zp::zero(ctx_));
    for (size_t t = 0; t < res_idx_.size(); ++t)
        c[static_cast<size_t>(res_idx_[t])] = Zp(ctx_, r.coords()[t]);
    return FieldElement(shared_from_this(), std::move(c));
}

bool FieldTower::same(const Tower& a, const Tower& b) {
    if (a.get() == b.get()) return true;
    if (a->p() != b->p() || a->digits() != b->digits()) return false;
    if (a->num_steps() != b->num_steps() || a->conj_steps() != b->conj_steps()) return false;
    for (int k = 0; k < a->num_steps(); ++k) {
        if (a->kinds_[static_cast<size_t>(k)] != b->kinds_[static_cast<size_t>(k)]) return false;
        if (a->degrees_[static_cast<size_t>(k)] != b->degrees_[static_cast<size_t>(k)]) return false;
        const auto& ca = a->coeffs_[static_cast<size_t>(k)];
        const auto& cb = b->coeffs_[static_cast<size_t>(k)];
        for (size_t i = 0; i < ca.size(); ++i)
            for (size_t j = 0; j < ca[i].size(); ++j)
                if (!(ca[i][j] - cb[i][j]).is_zero()) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// FieldElement

FieldElement::FieldElement(Tower K, std::vector<Zp> coords) : K_(std::move(K)), c_(std::move(coords)) {
    require(static_cast<int>(c_.size()) == K_->degree(), Err::BadInput, "coordinate count mismatch");
}

bool FieldElement::is_zero() const {
    for (const auto& x : c_)
        if (!x.is_zero()) return false;
    return true;
}

long FieldElement::val_lower() const {
    long m = VAL_INF;
    int e = K_->ram_e();
    for (size_t i = 0; i < c_.size(); ++i) {
        long vb = c_[i].val_bound();
        if (vb == VAL_INF) continue;
        m = std::min(m, e * vb + K_->monomial_weight(static_cast<int>(i)));
    }
    return m;
}

long FieldElement::val() const {
    long vnz = VAL_INF, vzb = VAL_INF;
    int e = K_->ram_e();
    for (size_t i = 0; i < c_.size(); ++i) {
        long w = K_->monomial_weight(static_cast<int>(i));
        if (!c_[i].is_zero())
            vnz = std::min(vnz, e * c_[i].val() + w);
        else if (c_[i].val_bound() != VAL_INF)
            vzb = std::min(vzb, e * c_[i].val_bound() + w);
    }
    if (vnz == VAL_INF) return VAL_INF;
    if (vnz <= vzb) return vnz;
    fail(Err::PrecisionExhausted, "valuation uncertain at working precision");
}

FieldElement FieldElement::operator+(const FieldElement& o) const {
    std::vector<Zp> r = c_;
    for (size_t i = 0; i < r.size(); ++i) r[i] = r[i] + o.c_[i];
    return FieldElement(K_, std::move(r));
}

FieldElement FieldElement::operator-() const {
    std::vector<Zp> r = c_;
    for (auto& x : r) x = -x;
    return FieldElement(K_, std::move(r));
}

FieldElement FieldElement::operator*(const FieldElement& o) const {
    return FieldElement(K_, K_->mul_coords(c_, o.c_));
}

FieldElement FieldElement::operator*(const Zp& s) const {
    std::vector<Zp> r = c_;
    for (auto& x : r) x = x * s;
    return FieldElement(K_, std::move(r));
}

FieldElement FieldElement::inverse() const {
    require(!is_zero(), is_zero() && val_lower() == VAL_INF ? Err::DivisionByZero : Err::PrecisionExhausted,
            "inverse of zero");
    int d = K_->degree();
    Mat<Zp> m(d, d, Zp::zero(K_->ctx()));
    for (int j = 0; j < d; ++j) {
        std::vector<Zp> bj(static_cast<size_t>(d), Zp::zero(K_->ctx()));
        bj[static_cast<size_t>(j)] = Zp::one(K_->ctx());
        auto col = K_->mul_coords(c_, bj);
        for (int i = 0; i < d; ++i) m.at(i, j) = col[static_cast<size_t>(i)];
    }
    Mat<Zp> rhs(d, 1, Zp::zero(K_->ctx()));
    rhs.at(0, 0) = Zp::one(K_->ctx());
    Mat<Zp> sol = mat_solve(std::move(m), std::move(rhs));
    std::vector<Zp> r(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) r[static_cast<size_t>(i)] = sol.at(i, 0);
    return FieldElement(K_, std::move(r));
}

FieldElement FieldElement::pow(long n) const {
    if (n < 0) return inverse().pow(-n);
    FieldElement acc = K_->one(), base = *this;
    while (n > 0) {
        if (n & 1) acc *= base;
        base *= base;
        n >>= 1;
    }
    return acc;
}

FieldElement FieldElement::rho() const {
    if (!K_->has_involution()) return *this;
    std::vector<Zp> r = c_;
    for (size_t i = 0; i < r.size(); ++i)
        if (K_->monomial_conj_parity(static_cast<int>(i))) r[i] = -r[i];
    return FieldElement(K_, std::move(r));
}

ResidueElement FieldElement::residue() const {
    require(val_lower() >= 0, Err::NotIntegral, "residue of a non-integral element");
    std::vector<long> digits;
    for (int t = 0; t < K_->res_f(); ++t) {
        const Zp& c = c_[static_cast<size_t>(K_->residue_monomial(t))];
        digits.push_back(c.is_zero() ? 0 : c.residue_digit());
    }
    return ResidueElement(K_->residue_field(), std::move(digits));
}

FieldElement FieldElement::times_pi_power(long k) const {
    if (k == 0) return *this;
    FieldElement pik = K_->pi().pow(k);
    return *this * pik;
}

FieldElement FieldElement::mod_pi_power(long k) const {
    require(val_lower() >= 0, Err::NotIntegral, "mod π^k of a non-integral element");
    FieldElement rem = *this, out = K_->zero();
    FieldElement pi = K_->pi();
    FieldElement pipow = K_->one();
    for (long i = 0; i < k; ++i) {
        if (rem.is_zero()) break;
        FieldElement u = rem * pi.pow(-i);
        FieldElement lift = K_->lift_residue(u.residue());
        out += lift * pipow;
        rem -= lift * pipow;
        pipow *= pi;
    }
    return out;
}

FieldElement FieldElement::trace_to(int nsteps) const {
    Tower P = K_->prefix(nsteps);
    int dp = P->degree();
    int du = K_->degree() / dp;
    FieldElement acc = P->zero();
    for (int u = 0; u < du; ++u) {
        std::vector<Zp> bu(static_cast<size_t>(K_->degree()), Zp::zero(K_->ctx()));
        bu[static_cast<size_t>(dp * u)] = Zp::one(K_->ctx());
        auto prod = K_->mul_coords(c_, bu);
        std::vector<Zp> diag(prod.begin() + dp * u, prod.begin() + dp * (u + 1));
        acc += FieldElement(P, std::move(diag));
    }
    return acc;
}

FieldElement FieldElement::norm_to(int nsteps) const {
    Tower P = K_->prefix(nsteps);
    int dp = P->degree();
    int du = K_->degree() / dp;
    Mat<FieldElement> m(du, du, P->zero());
    for (int u = 0; u < du; ++u) {
        std::vector<Zp> bu(static_cast<size_t>(K_->degree()), Zp::zero(K_->ctx()));
        bu[static_cast<size_t>(dp * u)] = Zp::one(K_->ctx());
        auto prod = K_->mul_coords(c_, bu);
        for (int v = 0; v < du; ++v) {
            std::vector<Zp> blk(prod.begin() + dp * v, prod.begin() + dp * (v + 1));
            m.at(v, u) = FieldElement(P, std::move(blk));
        }
    }
    return mat_det(std::move(m));
}

FieldElement FieldElement::embed_into(const Tower& E) const {
    require(FieldTower::same(K_, E->prefix(K_->num_steps())), Err::ContextMismatch,
            "element tower is not a prefix of the target tower");
    std::vector<Zp> r(static_cast<size_t>(E->degree()), Zp::zero(E->ctx()));
    for (size_t i = 0; i < c_.size(); ++i) r[i] = c_[i];
    return FieldElement(E, std::move(r));
}

FieldElement FieldElement::project_to(int nsteps) const {
    Tower P = K_->prefix(nsteps);
    for (size_t i = static_cast<size_t>(P->degree()); i < c_.size(); ++i)
        require(c_[i].is_zero(), Err::BadInput, "element not supported on the prefix subtower");
    return FieldElement(P, std::vector<Zp>(c_.begin(), c_.begin() + P->degree()));
}

bool FieldElement::is_square() const {
    if (is_zero()) return true;
    long v = val();
    if (v % 2 != 0) return false;
    return (times_pi_power(-v)).residue().is_square();
}

FieldElement FieldElement::sqrt() const {
    if (is_zero()) return *this;
    long v = val();
    require(v % 2 == 0 && is_square(), Err::BadInput, "element is not a square");
    FieldElement u = times_pi_power(-v);
    FieldElement s = K_->lift_residue(u.residue().sqrt());
    FieldElement two_inv = K_->from_int(2).inverse();
    int maxit = 2 * (32 - __builtin_clz(static_cast<unsigned>(K_->digits()))) + 8;
    for (int i = 0; i < maxit; ++i) {
        FieldElement err = s * s - u;
        if (err.is_zero()) break;
        s = s - err * two_inv * s.inverse();
    }
    require((s * s - u).is_zero(), Err::NonConvergence, "square root iteration did not converge");
    return s.times_pi_power(v / 2);
}

std::string FieldElement::str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < c_.size(); ++i) os << (i ? ", " : "") << c_[i].str();
    os << ")";
    return os.str();
}

// ---------------------------------------------------------------------------
// polynomial helpers over F

RPoly reduce_poly(const FPoly& f) {
    std::vector<ResidueElement> c;
    for (int i = 0; i <= f.deg(); ++i) c.push_back(f.coeff(i).residue());
    if (c.empty()) c.push_back(ResidueElement::zero(f.proto().tower()->residue_field()));
    return RPoly(std::move(c));
}

FPoly lift_poly(const Tower& K, const RPoly& f) {
    std::vector<FieldElement> c;
    for (int i = 0; i <= std::max(f.deg(), 0); ++i) c.push_back(K->lift_residue(f.coeff(i)));
    return FPoly(std::move(c));
}

std::pair<FPoly, FPoly> hensel_factor(const FPoly& f, const RPoly& g0bar, const RPoly& g1bar) {
    const Tower& K = f.proto().tower();
    require(f.is_monic(), Err::NotIntegral, "hensel requires a monic polynomial");
    for (int i = 0; i <= f.deg(); ++i)
        require(f.coeff(i).is_integral(), Err::NotIntegral, "hensel requires integral coefficients");
    require(g0bar.is_monic() && g1bar.is_monic(), Err::BadInput, "residue factors must be monic");
    require((g0bar * g1bar).equals(reduce_poly(f)), Err::BadInput,
            "residue factorization does not match the reduction");
    auto xg = poly_xgcd(g0bar, g1bar);
    require(xg.g.deg() == 0 && !xg.g.is_zero(), Err::NotCoprime, "residue factors are not coprime");
    RPoly abar = xg.u, bbar = xg.v;  // abar*g0bar + bbar*g1bar = 1

    FPoly g = lift_poly(K, g0bar), h = lift_poly(K, g1bar);
    long guard_max = static_cast<long>(K->digits()) * K->ram_e() + 16;
    for (long guard = 0; guard < guard_max; ++guard) {
        FPoly e = f - g * h;
        long vmin = VAL_INF;
        for (int i = 0; i <= e.deg(); ++i)
            if (!e.coeff(i).is_zero()) vmin = std::min(vmin, e.coeff(i).val());
        if (vmin == VAL_INF) break;
        std::vector<ResidueElement> ec;
        for (int i = 0; i <= e.deg(); ++i) ec.push_back(e.coeff(i).times_pi_power(-vmin).residue());
        RPoly ebar(std::move(ec));
        auto [q, dg] = (ebar * bbar).divmod(g0bar);
        RPoly dh = ebar * abar + q * g1bar;
        FieldElement pv = K->pi().pow(vmin);
        g = g + lift_poly(K, dg).scaled(pv);
        h = h + lift_poly(K, dh).scaled(pv);
    }
    FPoly check = f - g * h;
    for (int i = 0; i <= check.deg(); ++i)
        require(check.coeff(i).is_zero(), Err::NonConvergence, "hensel lifting stalled");
    return {g, h};
}

std::vector<FPoly> hensel_factor_multi(const FPoly& f, const std::vector<RPoly>& parts) {
    require(!parts.empty(), Err::BadInput, "no residue parts");
    if (parts.size() == 1) return {f};
    RPoly rest = parts[1];
    for (size_t i = 2; i < parts.size(); ++i) rest = rest * parts[i];
    auto [g, h] = hensel_factor(f, parts[0], rest);
    std::vector<FPoly> out{g};
    auto tail = hensel_factor_multi(h, std::vector<RPoly>(parts.begin() + 1, parts.end()));
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

std::pair<FPoly, FPoly> bezout_combine(const FPoly& g0, const FPoly& g1) {
    require(!g0.is_zero() || !g1.is_zero(), Err::NotCoprime, "both polynomials are zero");
    auto xg = poly_xgcd(g0, g1);
    require(!xg.g.is_zero() && xg.g.deg() == 0, Err::NotCoprime, "polynomials share a factor");
    FieldElement inv = xg.g.coeff(0).inverse();
    return {xg.u.scaled(inv), xg.v.scaled(inv)};
}

}  // namespace pstrata
