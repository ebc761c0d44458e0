#include "volrank/detalg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "volrank/rng.hpp"

namespace volrank {

Vector singular_values(const Matrix& m) {
  // One-sided Jacobi: rotate column pairs of a working copy until all pairs
  // are orthogonal; singular values are the final column norms.
  const int n = m.rows(), c = m.cols();
  Matrix w = m;
  const int sweeps = 60;
  for (int s = 0; s < sweeps; ++s) {
    double off = 0.0;
    for (int p = 0; p < c - 1; ++p)
      for (int q = p + 1; q < c; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < n; ++i) {
          app += w(i, p) * w(i, p);
          aqq += w(i, q) * w(i, q);
          apq += w(i, p) * w(i, q);
        }
        if (apq == 0.0) continue;
        double denom = std::sqrt(app * aqq);
        if (denom == 0.0) continue;
        off = std::max(off, std::abs(apq) / denom);
        double tau = (aqq - app) / (2.0 * apq);
        double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        double cs = 1.0 / std::sqrt(1.0 + t * t), sn = cs * t;
        for (int i = 0; i < n; ++i) {
          double vp = w(i, p), vq = w(i, q);
          w(i, p) = cs * vp - sn * vq;
          w(i, q) = sn * vp + cs * vq;
        }
      }
    if (off < 1e-15) break;
  }
  Vector sv(c);
  for (int j = 0; j < c; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += w(i, j) * w(i, j);
    sv[j] = std::sqrt(s);
  }
  std::sort(sv.begin(), sv.end(), std::greater<double>());
  return sv;
}

Vector solve_linear(Matrix a, Vector b) {
  const int n = a.rows();
  if (a.cols() != n || static_cast<int>(b.size()) != n)
    throw config_error("solve_linear: shape mismatch");
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0.0) throw config_error("solve_linear: singular system");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(b[k], b[piv]);
    }
    for (int i = k + 1; i < n; ++i) {
      double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (int j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  Vector x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

}  // namespace volrank

namespace volrank::detalg {

double det(const Matrix& m) {
  const int n = m.rows();
  if (n < 1 || m.cols() != n) throw config_error("det: matrix must be square, dim >= 1");
  if (n == 1) return m(0, 0);
  Matrix w = m;
  double sign = 1.0;
  double prev = 1.0;
  for (int k = 0; k < n - 1; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(w(i, k)) > std::abs(w(piv, k))) piv = i;
    if (w(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(w(k, j), w(piv, j));
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i) {
      for (int j = k + 1; j < n; ++j)
        w(i, j) = (w(i, j) * w(k, k) - w(i, k) * w(k, j)) / prev;
      w(i, k) = 0.0;
    }
    prev = w(k, k);
  }
  return sign * w(n - 1, n - 1);
}

int rank(const Matrix& m, double tol) {
  if (tol <= 0.0) throw config_error("rank: tol must be positive");
  Vector sv = singular_values(m);
  if (sv.empty() || sv[0] == 0.0) return 0;
  int r = 0;
  for (double s : sv)
    if (s > tol * sv[0]) ++r;
  return r;
}

double test_function_f(const std::vector<Vector>& columns) {
  const int d = static_cast<int>(columns.size());
  Matrix m(d, d);
  for (int j = 0; j < d; ++j) {
    if (static_cast<int>(columns[j].size()) != d)
      throw config_error("test_function_f: need d vectors of dimension d");
    m.set_col(j, columns[j]);
  }
  return test_function_f(m);
}

namespace {

// Enumerate d-bit masks with a given popcount; d <= ~20 is plenty here.
template <typename F>
void for_each_subset(int d, int r, F&& fn) {
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    if (std::popcount(mask) == r) fn(mask);
  }
}

}  // namespace

double gamma_r(int r, const Matrix& a, const Matrix& b) {
  const int d = a.rows();
  if (a.cols() != d || b.rows() != d || b.cols() != d)
    throw config_error("gamma_r: matrices must be square with equal dimension");
  if (r == -1) return 0.0;  // gamma_{-1} convention
  if (r < 0 || r > d) throw config_error("gamma_r: r out of range");
  double sum = 0.0;
  Matrix g(d, d);
  for_each_subset(d, r, [&](unsigned mask) {
    for (int j = 0; j < d; ++j) {
      const Matrix& src = (mask >> j) & 1u ? a : b;
      for (int i = 0; i < d; ++i) g(i, j) = src(i, j);
    }
    sum += det(g);
  });
  return sum;
}

double gamma_prime_r(int r, const Matrix& a, const Matrix& b, const Matrix& c) {
  const int d = a.rows();
  if (a.cols() != d || b.rows() != d || b.cols() != d || c.rows() != d || c.cols() != d)
    throw config_error("gamma_prime_r: matrices must be square with equal dimension");
  if (r < 0 || r > d - 1) throw config_error("gamma_prime_r: need 0 <= r <= d-1");
  double sum = 0.0;
  Matrix g(d, d);
  for_each_subset(d, r, [&](unsigned mask) {
    for (int cc = 0; cc < d; ++cc) {
      if ((mask >> cc) & 1u) continue;  // c takes one column not assigned to a
      for (int j = 0; j < d; ++j) {
        const Matrix& src = j == cc ? c : ((mask >> j) & 1u ? a : b);
        for (int i = 0; i < d; ++i) g(i, j) = src(i, j);
      }
      sum += det(g);
    }
  });
  return sum;
}

double multilinear_expansion(const std::vector<Matrix>& matrices) {
  const int m = static_cast<int>(matrices.size());
  if (m < 1) throw config_error("multilinear_expansion: need at least one matrix");
  const int d = matrices[0].rows();
  for (const Matrix& x : matrices)
    if (x.rows() != d || x.cols() != d)
      throw config_error("multilinear_expansion: common square dimension required");
  // Every assignment of column slots to source matrices is one expansion term.
  std::vector<int> pick(d, 0);
  Matrix g(d, d);
  double sum = 0.0;
  while (true) {
    for (int j = 0; j < d; ++j) {
      const Matrix& src = matrices[pick[j]];
      for (int i = 0; i < d; ++i) g(i, j) = src(i, j);
    }
    sum += det(g);
    int j = 0;
    while (j < d && ++pick[j] == m) pick[j++] = 0;
    if (j == d) break;
  }
  return sum;
}

namespace {

Matrix random_int_matrix(int d, NormalRng& rng, int lo, int hi) {
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = static_cast<double>(rng.uniform_int(lo, hi));
  return m;
}

// Integer matrix with rank exactly r (outer product of random integer
// factors, re-drawn until the rank comes out exact).
Matrix random_int_matrix_of_rank(int d, int r, NormalRng& rng) {
  while (true) {
    Matrix m(d, d);
    if (r > 0) {
      Matrix left(d, r), right(r, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < r; ++j) left(i, j) = static_cast<double>(rng.uniform_int(-2, 2));
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < d; ++j) right(i, j) = static_cast<double>(rng.uniform_int(-2, 2));
      m = left * right;
    }
    if (rank(m) == r) return m;
  }
}

// Coefficients of h |-> det(a + h b) by a Vandermonde solve at the nodes
// h = 1, 1/2, ..., 1/2^d.
Vector poly_coeffs_of_det(const Matrix& a, const Matrix& b) {
  const int d = a.rows();
  const int n = d + 1;
  Matrix vand(n, n);
  Vector rhs(n);
  for (int i = 0; i < n; ++i) {
    double h = std::ldexp(1.0, -i);  // 2^{-i}
    double p = 1.0;
    for (int j = 0; j < n; ++j) {
      vand(i, j) = p;
      p *= h;
    }
    rhs[i] = det(a + h * b);
  }
  return solve_linear(vand, rhs);
}

}  // namespace

SelfTestResult self_test(std::uint64_t seed, int tuples, int max_d) {
  SelfTestResult res;
  NormalRng rng(seed);
  for (int t = 0; t < tuples; ++t) {
    res.tuples++;
    const int d = 2 + static_cast<int>(rng.uniform_int(0, max_d - 2));
    bool bad = false;
    std::string why;

    // Multi-linear identity, exact on integers.
    {
      const int m = 2 + static_cast<int>(rng.uniform_int(0, 1));
      std::vector<Matrix> ms;
      Matrix total(d, d);
      for (int i = 0; i < m; ++i) {
        ms.push_back(random_int_matrix(d, rng, -5, 5));
        total = total + ms.back();
      }
      if (multilinear_expansion(ms) != det(total)) {
        bad = true;
        why = "multilinear expansion != det of sum";
      }
    }

    // Expansion coefficient and low-order vanishing for rank-r a.
    if (!bad) {
      const int r = static_cast<int>(rng.uniform_int(0, d));
      Matrix a = random_int_matrix_of_rank(d, r, rng);
      Matrix b = random_int_matrix(d, rng, -5, 5);
      Vector coef = poly_coeffs_of_det(a, b);
      if (std::abs(coef[d - r] - gamma_r(r, a, b)) > 1e-8) {
        bad = true;
        why = "h^{d-r} coefficient != gamma_r";
      }
      for (int k = 0; k < d - r && !bad; ++k)
        if (std::abs(coef[k]) > 1e-8) {
          bad = true;
          why = "nonzero coefficient below h^{d-r}";
        }
      // Degeneracy: one more column from a than its rank kills every term.
      if (!bad && r < d && gamma_r(r + 1, a, b) != 0.0) {
        bad = true;
        why = "gamma_{r+1} of a rank-r matrix not exactly zero";
      }
    }

    if (bad) {
      res.failures++;
      res.ok = false;
      res.messages.push_back("tuple " + std::to_string(t) + " (d=" + std::to_string(d) + "): " + why);
    }
  }
  return res;
}

}  // namespace volrank::detalg
