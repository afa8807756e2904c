#include "pstrata/residue.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace pstrata {

RF ResidueField::prime_field(long p) {
    std::vector<std::vector<std::vector<long>>> t(1);
    t[0].push_back({1});
    return make(p, std::move(t));
}

RF ResidueField::make(long p, std::vector<std::vector<std::vector<long>>> table) {
    auto k = std::make_shared<ResidueField>();
    k->p_ = p;
    k->f_ = static_cast<int>(table.size());
    k->q_ = 1;
    for (int i = 0; i < k->f_; ++i) k->q_ *= p;
    k->table_ = std::move(table);
    return k;
}

ResidueElement::ResidueElement(RF k, std::vector<long> coords) : k_(std::move(k)), c_(std::move(coords)) {
    c_.resize(static_cast<size_t>(k_->f()), 0);
    for (auto& x : c_) {
        x %= k_->p();
        if (x < 0) x += k_->p();
    }
}

ResidueElement ResidueElement::from_int(const RF& k, long v) {
    std::vector<long> c(static_cast<size_t>(k->f()), 0);
    c[0] = v % k->p();
    if (c[0] < 0) c[0] += k->p();
    return ResidueElement(k, std::move(c));
}

bool ResidueElement::is_zero() const {
    for (long x : c_)
        if (x != 0) return false;
    return true;
}

ResidueElement ResidueElement::operator+(const ResidueElement& o) const {
    std::vector<long> r = c_;
    for (size_t i = 0; i < r.size(); ++i) r[i] = (r[i] + o.c_[i]) % k_->p();
    return ResidueElement(k_, std::move(r));
}

ResidueElement ResidueElement::operator-() const {
    std::vector<long> r = c_;
    for (auto& x : r) x = (k_->p() - x) % k_->p();
    return ResidueElement(k_, std::move(r));
}

ResidueElement ResidueElement::operator*(const ResidueElement& o) const {
    std::vector<long> r(c_.size(), 0);
    for (size_t i = 0; i < c_.size(); ++i) {
        if (c_[i] == 0) continue;
        for (size_t j = 0; j < c_.size(); ++j) {
            if (o.c_[j] == 0) continue;
            long m = (c_[i] * o.c_[j]) % k_->p();
            const auto& prod = k_->mult(static_cast<int>(i), static_cast<int>(j));
            for (size_t t = 0; t < r.size(); ++t) r[t] = (r[t] + m * prod[t]) % k_->p();
        }
    }
    return ResidueElement(k_, std::move(r));
}

ResidueElement ResidueElement::pow(long n) const {
    if (n < 0) return inverse().pow(-n);
    ResidueElement acc = one(k_), base = *this;
    while (n > 0) {
        if (n & 1) acc = acc * base;
        base = base * base;
        n >>= 1;
    }
    return acc;
}

ResidueElement ResidueElement::inverse() const {
    require(!is_zero(), Err::DivisionByZero, "inverse of zero residue");
    return pow(k_->q() - 2);
}

ResidueElement ResidueElement::pow_q_power(int i) const {
    ResidueElement r = *this;
    for (int t = 0; t < i; ++t) r = r.pow(k_->p());
    return r;
}

bool ResidueElement::is_square() const {
    if (is_zero()) return true;
    return pow((k_->q() - 1) / 2).equals(one(k_));
}

ResidueElement ResidueElement::sqrt() const {
    for (long code = 0; code < k_->q(); ++code) {
        ResidueElement cand = decode(k_, code);
        if ((cand * cand).equals(*this)) return cand;
    }
    fail(Err::BadInput, "residue element is not a square");
}

long ResidueElement::encode() const {
    long code = 0, scale = 1;
    for (long x : c_) {
        code += x * scale;
        scale *= k_->p();
    }
    return code;
}

ResidueElement ResidueElement::decode(const RF& k, long code) {
    std::vector<long> c(static_cast<size_t>(k->f()));
    for (auto& x : c) {
        x = code % k->p();
        code /= k->p();
    }
    return ResidueElement(k, std::move(c));
}

std::string ResidueElement::str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < c_.size(); ++i) os << (i ? "," : "") << c_[i];
    os << "]";
    return os.str();
}

namespace {

RPoly rpoly_pow_mod(const RPoly& base, long e, const RPoly& mod) {
    RPoly acc = RPoly::constant(ring_one(base.proto()));
    RPoly b = base % mod;
    while (e > 0) {
        if (e & 1) acc = (acc * b) % mod;
        b = (b * b) % mod;
        e >>= 1;
    }
    return acc;
}

// x^(q^d) mod f
RPoly frobenius_power(const RPoly& f, int d) {
    const auto& k = f.proto().field();
    RPoly x = RPoly::x_power(f.proto(), 1) % f;
    for (int i = 0; i < d; ++i) x = rpoly_pow_mod(x, k->q(), f);
    return x;
}

RPoly pth_root(const RPoly& f) {
    // f(X) = g(X^p) with g recovered by coefficient p-th roots.
    const auto& k = f.proto().field();
    long p = k->p();
    std::vector<ResidueElement> c;
    for (int i = 0; i <= f.deg(); i += static_cast<int>(p)) {
        ResidueElement a = f.coeff(i);
        // p-th root in F_q: a^(q/p)
        c.push_back(a.pow(k->q() / p));
    }
    if (c.empty()) c.push_back(ring_zero(f.proto()));
    return RPoly(std::move(c));
}

std::string rpoly_key(const RPoly& g) {
    std::ostringstream os;
    for (int i = 0; i <= g.deg(); ++i) os << g.coeff(i).encode() << ";";
    return os.str();
}

void record(const RPoly& g, int mult, std::map<std::string, std::pair<RPoly, int>>& acc,
            std::vector<std::pair<RPoly, int>>& order) {
    auto key = rpoly_key(g);
    auto it = acc.find(key);
    if (it == acc.end()) {
        acc.emplace(key, std::make_pair(g, mult));
        order.emplace_back(g, mult);
    } else {
        it->second.second += mult;
        for (auto& e : order)
            if (rpoly_key(e.first) == key) e.second += mult;
    }
}

// Equal-degree splitting (Cantor–Zassenhaus, odd q), deterministic seed.
void equal_degree_split(const RPoly& f, int d, std::mt19937_64& rng, std::vector<RPoly>& out) {
    if (f.deg() == d) {
        out.push_back(f.monic());
        return;
    }
    const auto& k = f.proto().field();
    // exponent (q^d - 1)/2 as exact big integer
    mpz_class e = 1;
    for (int i = 0; i < d; ++i) e *= k->q();
    e = (e - 1) / 2;
    while (true) {
        std::vector<ResidueElement> rc;
        for (int i = 0; i < f.deg(); ++i)
            rc.push_back(ResidueElement::decode(k, static_cast<long>(rng() % static_cast<uint64_t>(k->q()))));
        RPoly r(std::move(rc));
        if (r.is_zero()) continue;
        RPoly g = poly_gcd(f, r);
        if (g.deg() > 0 && g.deg() < f.deg()) {
            equal_degree_split(g, d, rng, out);
            equal_degree_split((f / g).monic(), d, rng, out);
            return;
        }
        // r^((q^d-1)/2) mod f, big exponent by bit scan
        RPoly acc = RPoly::constant(ring_one(f.proto()));
        RPoly b = r % f;
        mpz_class ee = e;
        while (ee > 0) {
            if (mpz_odd_p(ee.get_mpz_t())) acc = (acc * b) % f;
            b = (b * b) % f;
            ee >>= 1;
        }
        RPoly split = poly_gcd(f, acc - RPoly::constant(ring_one(f.proto())));
        if (split.deg() > 0 && split.deg() < f.deg()) {
            equal_degree_split(split, d, rng, out);
            equal_degree_split((f / split).monic(), d, rng, out);
            return;
        }
    }
}

void factor_squarefree(const RPoly& f, int mult, std::mt19937_64& rng,
                       std::map<std::string, std::pair<RPoly, int>>& acc,
                       std::vector<std::pair<RPoly, int>>& order) {
    RPoly rem = f.monic();
    int d = 1;
    while (rem.deg() > 0) {
        if (2 * d > rem.deg()) {
            record(rem, mult, acc, order);
            break;
        }
        RPoly xq = frobenius_power(rem, d);
        RPoly g = poly_gcd(rem, xq - (RPoly::x_power(rem.proto(), 1) % rem));
        if (g.deg() > 0) {
            std::vector<RPoly> pieces;
            equal_degree_split(g.monic(), d, rng, pieces);
            std::sort(pieces.begin(), pieces.end(),
                      [](const RPoly& a, const RPoly& b) { return rpoly_key(a) < rpoly_key(b); });
            for (auto& piece : pieces) record(piece, mult, acc, order);
            rem = (rem / g).monic();
        }
        ++d;
    }
}

}  // namespace

std::vector<std::pair<RPoly, int>> residue_primary_factorization(const RPoly& f0, uint64_t seed) {
    require(!f0.is_zero(), Err::BadInput, "factorization of the zero polynomial");
    std::mt19937_64 rng(seed);
    std::map<std::string, std::pair<RPoly, int>> acc;
    std::vector<std::pair<RPoly, int>> order;

    // squarefree decomposition, char p aware
    std::vector<std::pair<RPoly, int>> stack{{f0.monic(), 1}};
    while (!stack.empty()) {
        auto [f, mult] = stack.back();
        stack.pop_back();
        if (f.deg() <= 0) continue;
        RPoly df = f.derivative();
        if (df.is_zero()) {
            stack.emplace_back(pth_root(f), mult * static_cast<int>(f.proto().field()->p()));
            continue;
        }
        RPoly g = poly_gcd(f, df);
        if (g.deg() == 0) {
            factor_squarefree(f, mult, rng, acc, order);
            continue;
        }
        stack.emplace_back((f / g).monic(), mult);  // squarefree part, multiplicity mult
        stack.emplace_back(g.monic(), mult);        // repeated part; recurse
    }

    // The loop above can register the squarefree part of a repeated factor
    // several times; collapse by the accumulated map, preserving first-seen
    // order for determinism.
    std::vector<std::pair<RPoly, int>> out;
    std::vector<std::string> seen;
    for (auto& e : order) {
        auto key = rpoly_key(e.first);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        out.emplace_back(acc.at(key).first, acc.at(key).second);
    }
    return out;
}

std::vector<ResidueElement> residue_roots(const RPoly& f) {
    std::vector<ResidueElement> roots;
    const auto& k = f.proto().field();
    for (long code = 0; code < k->q(); ++code) {
        ResidueElement x = ResidueElement::decode(k, code);
        if (f.eval(x).is_zero()) roots.push_back(x);
    }
    return roots;
}

bool residue_irreducible(const RPoly& f) {
    if (f.deg() <= 0) return false;
    auto fac = residue_primary_factorization(f);
    return fac.size() == 1 && fac[0].second == 1;
}

}  // namespace pstrata
