#pragma once

#include <functional>
#include <vector>

#include "pstrata/errors.hpp"
#include "pstrata/poly.hpp"
#include "pstrata/zp.hpp"

namespace pstrata {

// Row-major dense matrix over an exact coefficient type. Pivot selection in
// the eliminations below uses the free helper pivot_weight(x): smaller is
// better, VAL_INF marks an unusable pivot.
template <class T>
class Mat {
public:
    Mat() = default;  // empty placeholder; assign before use
    Mat(int rows, int cols, const T& fill) : r_(rows), c_(cols), a_(static_cast<size_t>(rows) * cols, fill) {}
    static Mat identity(int n, const T& proto) {
        Mat m(n, n, ring_zero(proto));
        for (int i = 0; i < n; ++i) m.at(i, i) = ring_one(proto);
        return m;
    }
    static Mat zero(int rows, int cols, const T& proto) { return Mat(rows, cols, ring_zero(proto)); }

    int rows() const { return r_; }
    int cols() const { return c_; }
    T& at(int i, int j) { return a_[static_cast<size_t>(i) * c_ + j]; }
    const T& at(int i, int j) const { return a_[static_cast<size_t>(i) * c_ + j]; }
    const T& proto() const { return a_[0]; }

    Mat operator+(const Mat& o) const {
        Mat m = *this;
        for (size_t i = 0; i < a_.size(); ++i) m.a_[i] = m.a_[i] + o.a_[i];
        return m;
    }
    Mat operator-(const Mat& o) const {
        Mat m = *this;
        for (size_t i = 0; i < a_.size(); ++i) m.a_[i] = m.a_[i] - o.a_[i];
        return m;
    }
    Mat operator-() const {
        Mat m = *this;
        for (auto& x : m.a_) x = -x;
        return m;
    }
    Mat operator*(const Mat& o) const {
        require(c_ == o.r_, Err::BadInput, "matrix dimension mismatch");
        Mat m(r_, o.c_, ring_zero(proto()));
        for (int i = 0; i < r_; ++i)
            for (int k = 0; k < c_; ++k) {
                const T& x = at(i, k);
                if (x.is_zero()) continue;
                for (int j = 0; j < o.c_; ++j) m.at(i, j) = m.at(i, j) + x * o.at(k, j);
            }
        return m;
    }
    Mat operator*(const T& s) const {
        Mat m = *this;
        for (auto& x : m.a_) x = x * s;
        return m;
    }
    Mat transpose() const {
        Mat m(c_, r_, ring_zero(proto()));
        for (int i = 0; i < r_; ++i)
            for (int j = 0; j < c_; ++j) m.at(j, i) = at(i, j);
        return m;
    }
    std::vector<T> col(int j) const {
        std::vector<T> v;
        v.reserve(r_);
        for (int i = 0; i < r_; ++i) v.push_back(at(i, j));
        return v;
    }
    bool is_zero() const {
        for (const auto& x : a_)
            if (!x.is_zero()) return false;
        return true;
    }
    bool equals(const Mat& o) const { return (*this - o).is_zero(); }
    T tr() const {
        T s = ring_zero(proto());
        for (int i = 0; i < r_; ++i) s = s + at(i, i);
        return s;
    }

    // In-place row elimination used by solve/inverse/det/kernel.
    // Returns the pivot column of each pivot row.
    std::vector<int> row_echelon(Mat* companion, T* det) {
        std::vector<int> pivots;
        int row = 0;
        if (det) *det = ring_one(proto());
        for (int col = 0; col < c_ && row < r_; ++col) {
            int best = -1;
            long bw = VAL_INF;
            for (int i = row; i < r_; ++i) {
                long w = pivot_weight(at(i, col));
                if (w < bw) {
                    bw = w;
                    best = i;
                }
            }
            if (best < 0) continue;
            if (best != row) {
                for (int j = 0; j < c_; ++j) std::swap(at(best, j), at(row, j));
                if (companion)
                    for (int j = 0; j < companion->cols(); ++j)
                        std::swap(companion->at(best, j), companion->at(row, j));
                if (det) *det = -*det;
            }
            T pinv = at(row, col).inverse();
            if (det) *det = *det * at(row, col);
            for (int i = 0; i < r_; ++i) {
                if (i == row || at(i, col).is_zero()) continue;
                T f = at(i, col) * pinv;
                for (int j = 0; j < c_; ++j) at(i, j) = at(i, j) - f * at(row, j);
                at(i, col) = ring_zero(proto());
                if (companion)
                    for (int j = 0; j < companion->cols(); ++j)
                        companion->at(i, j) = companion->at(i, j) - f * companion->at(row, j);
            }
            pivots.push_back(col);
            ++row;
        }
        return pivots;
    }

private:
    int r_ = 0, c_ = 0;
    std::vector<T> a_;
};

template <class T>
int mat_rank(Mat<T> m) {
    return static_cast<int>(m.row_echelon(nullptr, nullptr).size());
}

template <class T>
T mat_det(Mat<T> m) {
    require(m.rows() == m.cols(), Err::BadInput, "determinant of non-square matrix");
    T det = ring_one(m.proto());
    auto piv = m.row_echelon(nullptr, &det);
    if (static_cast<int>(piv.size()) < m.rows()) return ring_zero(m.proto());
    return det;
}

// Solve A X = B for X; throws SingularBasis if A is not invertible.
template <class T>
Mat<T> mat_solve(Mat<T> a, Mat<T> b) {
    require(a.rows() == a.cols() && a.rows() == b.rows(), Err::BadInput, "solve shape");
    auto piv = a.row_echelon(&b, nullptr);
    require(static_cast<int>(piv.size()) == a.rows(), Err::SingularBasis, "singular system");
    Mat<T> x(a.cols(), b.cols(), ring_zero(a.proto()));
    for (int r = 0; r < static_cast<int>(piv.size()); ++r) {
        T pinv = a.at(r, piv[r]).inverse();
        for (int j = 0; j < b.cols(); ++j) x.at(piv[r], j) = b.at(r, j) * pinv;
    }
    return x;
}

template <class T>
Mat<T> mat_inverse(const Mat<T>& a) {
    return mat_solve(a, Mat<T>::identity(a.rows(), a.proto()));
}

// Basis of the right kernel over the coefficient field.
template <class T>
std::vector<std::vector<T>> mat_kernel(Mat<T> m) {
    auto piv = m.row_echelon(nullptr, nullptr);
    std::vector<bool> is_pivot(static_cast<size_t>(m.cols()), false);
    for (int c : piv) is_pivot[static_cast<size_t>(c)] = true;
    std::vector<std::vector<T>> basis;
    for (int free = 0; free < m.cols(); ++free) {
        if (is_pivot[static_cast<size_t>(free)]) continue;
        std::vector<T> v(static_cast<size_t>(m.cols()), ring_zero(m.proto()));
        v[static_cast<size_t>(free)] = ring_one(m.proto());
        for (int r = 0; r < static_cast<int>(piv.size()); ++r)
            v[static_cast<size_t>(piv[r])] = -(m.at(r, free) * m.at(r, piv[r]).inverse());
        basis.push_back(std::move(v));
    }
    return basis;
}

// Characteristic polynomial by Faddeev–LeVerrier. The divisions by the
// integers 1..n are exact in characteristic-zero coefficients.
template <class T>
Poly<T> mat_charpoly(const Mat<T>& a) {
    int n = a.rows();
    std::vector<T> c(static_cast<size_t>(n) + 1, ring_zero(a.proto()));
    c[static_cast<size_t>(n)] = ring_one(a.proto());
    Mat<T> m = Mat<T>::zero(n, n, a.proto());
    for (int k = 1; k <= n; ++k) {
        m = a * m;
        for (int i = 0; i < n; ++i) m.at(i, i) = m.at(i, i) + c[static_cast<size_t>(n - k + 1)];
        c[static_cast<size_t>(n - k)] = -((a * m).tr() * ring_from_int(a.proto(), k).inverse());
    }
    return Poly<T>(std::move(c));
}

// Minimal polynomial via the first linear dependence among powers of a.
template <class T>
Poly<T> mat_minpoly(const Mat<T>& a) {
    int n = a.rows();
    int d2 = n * n;
    std::vector<Mat<T>> pows;
    pows.push_back(Mat<T>::identity(n, a.proto()));
    for (int k = 1; k <= n; ++k) {
        pows.push_back(pows.back() * a);
        Mat<T> sys(d2, k + 1, ring_zero(a.proto()));
        for (int col = 0; col <= k; ++col)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) sys.at(i * n + j, col) = pows[static_cast<size_t>(col)].at(i, j);
        auto kern = mat_kernel(std::move(sys));
        if (kern.empty()) continue;
        auto& v = kern.front();
        int d = k;
        while (d > 0 && v[static_cast<size_t>(d)].is_zero()) --d;
        T s = v[static_cast<size_t>(d)].inverse();
        std::vector<T> coeffs(static_cast<size_t>(d) + 1, ring_zero(a.proto()));
        for (int i = 0; i <= d; ++i) coeffs[static_cast<size_t>(i)] = v[static_cast<size_t>(i)] * s;
        return Poly<T>(std::move(coeffs));
    }
    fail(Err::PrecisionExhausted, "minimal polynomial not found");
}

}  // namespace pstrata
