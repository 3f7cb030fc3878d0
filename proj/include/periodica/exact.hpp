#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <vector>

#include "periodica/rational.hpp"

namespace periodica {

struct math_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using IMat = Eigen::Matrix<i64, Eigen::Dynamic, Eigen::Dynamic>;
using IVec = Eigen::Matrix<i64, Eigen::Dynamic, 1>;
using RatVec = std::vector<Rat>;

inline i64 lcm_checked(i64 a, i64 b) {
  if (a == 0 || b == 0) return 0;
  i64 g = std::gcd(a, b);
  return narrow_checked(i128(a / g) * b);
}

// Dense rational matrix, sized for exact solves in dimensions <= ~16.
class RatMat {
 public:
  RatMat() = default;
  RatMat(int r, int c) : rows_(r), cols_(c), a_(size_t(r) * c) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Rat& operator()(int i, int j) { return a_[size_t(i) * cols_ + j]; }
  const Rat& operator()(int i, int j) const { return a_[size_t(i) * cols_ + j]; }

  static RatMat identity(int n) {
    RatMat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = Rat(1);
    return m;
  }

  static RatMat from_int(const IMat& v, i64 den = 1) {
    RatMat m(int(v.rows()), int(v.cols()));
    for (int i = 0; i < v.rows(); ++i)
      for (int j = 0; j < v.cols(); ++j) m(i, j) = Rat(v(i, j), den);
    return m;
  }

  RatMat transpose() const {
    RatMat t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  RatMat mul(const RatMat& o) const {
    if (cols_ != o.rows_) throw math_error("rational matrix shape mismatch");
    RatMat r(rows_, o.cols_);
    for (int i = 0; i < rows_; ++i)
      for (int k = 0; k < cols_; ++k) {
        const Rat& v = (*this)(i, k);
        if (v.is_zero()) continue;
        for (int j = 0; j < o.cols_; ++j) r(i, j) += v * o(k, j);
      }
    return r;
  }

  RatVec apply(const RatVec& x) const {
    if (int(x.size()) != cols_) throw math_error("rational matrix shape mismatch");
    RatVec y(rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j)
        if (!(*this)(i, j).is_zero()) y[i] += (*this)(i, j) * x[j];
    return y;
  }

  // Gauss-Jordan inverse; throws on singular input.
  RatMat inverse() const {
    if (rows_ != cols_) throw math_error("rational inverse of non-square matrix");
    int n = rows_;
    RatMat a = *this;
    RatMat inv = identity(n);
    for (int col = 0; col < n; ++col) {
      int piv = -1;
      for (int r = col; r < n; ++r)
        if (!a(r, col).is_zero()) {
          piv = r;
          break;
        }
      if (piv < 0) throw math_error("singular matrix");
      if (piv != col)
        for (int j = 0; j < n; ++j) {
          std::swap(a(piv, j), a(col, j));
          std::swap(inv(piv, j), inv(col, j));
        }
      Rat d = a(col, col);
      for (int j = 0; j < n; ++j) {
        a(col, j) /= d;
        inv(col, j) /= d;
      }
      for (int r = 0; r < n; ++r) {
        if (r == col || a(r, col).is_zero()) continue;
        Rat f = a(r, col);
        for (int j = 0; j < n; ++j) {
          a(r, j) -= f * a(col, j);
          inv(r, j) -= f * inv(col, j);
        }
      }
    }
    return inv;
  }

  Eigen::MatrixXd to_double() const {
    Eigen::MatrixXd m(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).to_double();
    return m;
  }

  bool is_integer() const {
    for (const Rat& v : a_)
      if (!v.is_integer()) return false;
    return true;
  }

  i64 common_den() const {
    i64 d = 1;
    for (const Rat& v : a_) d = lcm_checked(d, v.den());
    return d;
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<Rat> a_;
};

inline RatVec solve_linear(const RatMat& A, const RatVec& b) {
  return A.inverse().apply(b);
}

inline i64 common_den(const RatVec& v) {
  i64 d = 1;
  for (const Rat& x : v) d = lcm_checked(d, x.den());
  return d;
}

inline bool all_integer(const RatVec& v) {
  for (const Rat& x : v)
    if (!x.is_integer()) return false;
  return true;
}

// Column-style Hermite normal form. Input: n x k integer matrix whose
// columns generate a full-rank lattice in Z^n. Output: n x n lower
// triangular basis with positive diagonal and 0 <= h(i,j) < h(i,i) for j < i.
inline IMat hnf_basis(const IMat& gens) {
  const int n = int(gens.rows());
  const int k = int(gens.cols());
  std::vector<std::vector<i128>> col(k, std::vector<i128>(n));
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < n; ++i) col[j][i] = gens(i, j);

  int placed = 0;
  for (int row = 0; row < n && placed < n; ++row) {
    // Euclid over the active columns until one nonzero entry remains in this row
    while (true) {
      int a = -1, b = -1;
      for (int j = placed; j < k; ++j)
        if (col[j][row] != 0) {
          if (a < 0)
            a = j;
          else {
            b = j;
            break;
          }
        }
      if (b < 0) {
        if (a >= 0) {
          std::swap(col[a], col[placed]);
          if (col[placed][row] < 0)
            for (int i = 0; i < n; ++i) col[placed][i] = -col[placed][i];
          ++placed;
        }
        break;
      }
      if (abs128(col[a][row]) < abs128(col[b][row])) std::swap(a, b);
      i128 q = col[a][row] / col[b][row];
      for (int i = 0; i < n; ++i) col[a][i] -= q * col[b][i];
    }
  }
  if (placed != n) throw math_error("generators do not span a full-rank lattice");

  // normalize off-pivot entries: 0 <= col_l[row of pivot j] < pivot
  for (int j = 0; j < n; ++j) {
    i128 piv = col[j][j];
    for (int l = 0; l < j; ++l) {
      i128 v = col[l][j];
      i128 q = v / piv;
      if (v % piv < 0) q -= 1;
      if (q != 0)
        for (int i = 0; i < n; ++i) col[l][i] -= q * col[j][i];
    }
  }
  IMat h(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) h(i, j) = narrow_checked(col[j][i]);
  return h;
}

// Coset representatives of H Z^n in Z^n for a lower-triangular basis H
// (diagonal positive). Count = prod H(i,i).
inline std::vector<IVec> hnf_coset_reps(const IMat& h) {
  const int n = int(h.rows());
  std::vector<IVec> reps;
  IVec cur = IVec::Zero(n);
  i64 total = 1;
  for (int i = 0; i < n; ++i) total = narrow_checked(i128(total) * h(i, i));
  reps.reserve(size_t(total));
  std::vector<i64> idx(n, 0);
  while (true) {
    for (int i = 0; i < n; ++i) cur[i] = idx[i];
    reps.push_back(cur);
    int p = 0;
    while (p < n && ++idx[p] >= h(p, p)) idx[p++] = 0;
    if (p == n) break;
  }
  return reps;
}

}  // namespace periodica
