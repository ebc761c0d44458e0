#pragma once
// Small dense linear algebra for the low-dimensional (d <= 6) regime this
// library targets. Everything is value-semantic and allocation-light; no
// external BLAS/LAPACK dependency.

#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "volrank/errors.hpp"

namespace volrank {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, fill) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    int r = static_cast<int>(rows.size());
    int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows) {
      assert(static_cast<int>(row.size()) == c);
      int j = 0;
      for (double v : row) m(i, j++) = v;
      ++i;
    }
    return m;
  }
  static Matrix diag(const Vector& d) {
    Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (size_t i = 0; i < d.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }
  const std::vector<double>& data() const { return a_; }
  std::vector<double>& data() { return a_; }

  Vector col(int j) const {
    Vector v(rows_);
    for (int i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
  }
  void set_col(int j, const Vector& v) {
    assert(static_cast<int>(v.size()) == rows_);
    for (int i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
  }

  bool all_finite() const {
    for (double v : a_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend Matrix operator+(const Matrix& x, const Matrix& y) {
    assert(x.rows_ == y.rows_ && x.cols_ == y.cols_);
    Matrix r = x;
    for (size_t i = 0; i < r.a_.size(); ++i) r.a_[i] += y.a_[i];
    return r;
  }
  friend Matrix operator*(double s, const Matrix& x) {
    Matrix r = x;
    for (double& v : r.a_) v *= s;
    return r;
  }
  friend Matrix operator*(const Matrix& x, const Matrix& y) {
    assert(x.cols_ == y.rows_);
    Matrix r(x.rows_, y.cols_);
    for (int i = 0; i < x.rows_; ++i)
      for (int k = 0; k < x.cols_; ++k) {
        double xv = x(i, k);
        if (xv == 0.0) continue;
        for (int j = 0; j < y.cols_; ++j) r(i, j) += xv * y(k, j);
      }
    return r;
  }
  friend bool operator==(const Matrix& x, const Matrix& y) {
    return x.rows_ == y.rows_ && x.cols_ == y.cols_ && x.a_ == y.a_;
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

inline Vector matvec(const Matrix& m, const Vector& v) {
  assert(m.cols() == static_cast<int>(v.size()));
  Vector r(m.rows(), 0.0);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r[i] += m(i, j) * v[j];
  return r;
}

// Rank-3 array, shape d x q x q.  Used for the volatility-of-volatility
// coefficient: (T : w)^{l,m} = sum_k T(l,m,k) w_k.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int d, int q1, int q2, double fill = 0.0)
      : d_(d), q1_(q1), q2_(q2), a_(static_cast<size_t>(d) * q1 * q2, fill) {}
  int dim0() const { return d_; }
  int dim1() const { return q1_; }
  int dim2() const { return q2_; }
  double& operator()(int l, int m, int k) { return a_[(static_cast<size_t>(l) * q1_ + m) * q2_ + k]; }
  double operator()(int l, int m, int k) const { return a_[(static_cast<size_t>(l) * q1_ + m) * q2_ + k]; }
  const std::vector<double>& data() const { return a_; }
  std::vector<double>& data() { return a_; }
  bool empty() const { return a_.empty(); }

  // Contraction against the last index: result(l,m) = sum_k T(l,m,k) w[k].
  Matrix contract(const Vector& w) const {
    assert(static_cast<int>(w.size()) == q2_);
    Matrix r(d_, q1_);
    for (int l = 0; l < d_; ++l)
      for (int m = 0; m < q1_; ++m) {
        double s = 0.0;
        for (int k = 0; k < q2_; ++k) s += (*this)(l, m, k) * w[k];
        r(l, m) = s;
      }
    return r;
  }

 private:
  int d_ = 0, q1_ = 0, q2_ = 0;
  std::vector<double> a_;
};

// Rank-4 array, shape d x q x q x q;  vol-of-vol-of-vol coefficient.
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(int d, int q, double fill = 0.0)
      : d_(d), q_(q), a_(static_cast<size_t>(d) * q * q * q, fill) {}
  int dim0() const { return d_; }
  int dim1() const { return q_; }
  double& operator()(int l, int m, int k, int j) {
    return a_[((static_cast<size_t>(l) * q_ + m) * q_ + k) * q_ + j];
  }
  double operator()(int l, int m, int k, int j) const {
    return a_[((static_cast<size_t>(l) * q_ + m) * q_ + k) * q_ + j];
  }
  bool empty() const { return a_.empty(); }

  Tensor3 contract(const Vector& w) const {
    assert(static_cast<int>(w.size()) == q_);
    Tensor3 r(d_, q_, q_);
    for (int l = 0; l < d_; ++l)
      for (int m = 0; m < q_; ++m)
        for (int k = 0; k < q_; ++k) {
          double s = 0.0;
          for (int j = 0; j < q_; ++j) s += (*this)(l, m, k, j) * w[j];
          r(l, m, k) = s;
        }
    return r;
  }

 private:
  int d_ = 0, q_ = 0;
  std::vector<double> a_;
};

inline Tensor3 tensor3_add(const Tensor3& x, const Tensor3& y) {
  Tensor3 r = x;
  assert(x.data().size() == y.data().size());
  for (size_t i = 0; i < r.data().size(); ++i) r.data()[i] += y.data()[i];
  return r;
}

// Singular values by one-sided Jacobi, descending order.  Plenty for d <= 6;
// the zero matrix comes back as all-zero singular values.
Vector singular_values(const Matrix& m);

// Solve a small square linear system by Gaussian elimination with partial
// pivoting.  Throws config_error on a numerically singular system.
Vector solve_linear(Matrix a, Vector b);

}  // namespace volrank
