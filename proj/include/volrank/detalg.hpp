#pragma once
// Determinant algebra on small square matrices: determinants, numerical rank,
// the squared-determinant test function, and the mixed-column sums gamma_r /
// gamma'_r together with the full multi-linear expansion.  These sums are the
// combinatorial kernel of every statistic in this library, and double as an
// exact oracle layer for property tests (they are exact on integer inputs).

#include <cstdint>
#include <string>
#include <vector>

#include "volrank/linalg.hpp"

namespace volrank::detalg {

// Determinant by fraction-free (Bareiss) elimination with partial pivoting.
// Intermediate values on integer input are integers, so integer-entry
// determinants are exact as long as every minor fits in a double.
double det(const Matrix& m);

// Numerical rank: number of singular values above tol * largest singular
// value.  The zero matrix has rank 0.  tol must be positive.
inline constexpr double kDefaultRankTol = 1e-10;
int rank(const Matrix& m, double tol = kDefaultRankTol);

// f(x_1, ..., x_d) = det(mat(x_1, ..., x_d))^2, columns given as vectors.
double test_function_f(const std::vector<Vector>& columns);
// Same map applied to a matrix already holding the columns.
inline double test_function_f(const Matrix& m) {
  double v = det(m);
  return v * v;
}

// gamma_r(a, b): sum of det(G) over all matrices G taking r columns from a
// (kept in place) and the remaining d-r columns from b.  r = -1 is accepted
// with value 0 (the gamma_{-1} convention); other out-of-range r throw.
double gamma_r(int r, const Matrix& a, const Matrix& b);

// gamma'_r(a, b, c): sum over partitions assigning r columns to a, d-r-1 to
// b and exactly one to c.  Requires 0 <= r <= d-1.
double gamma_prime_r(int r, const Matrix& a, const Matrix& b, const Matrix& c);

// Full multi-linear expansion: sums det(G) over every assignment of the d
// column slots to the m input matrices.  Equals det(A_1 + ... + A_m); kept as
// an independently-computed identity for property tests.
double multilinear_expansion(const std::vector<Matrix>& matrices);

// Self-check suite over random integer matrix tuples (d <= max_d): the
// multi-linear identity, the h^{d-r} expansion coefficient, and the
// rank-deficiency degeneracy of gamma_r.  Returns a human-readable report;
// ok is false iff any tuple failed.
struct SelfTestResult {
  bool ok = true;
  int tuples = 0;
  int failures = 0;
  std::vector<std::string> messages;
};
SelfTestResult self_test(std::uint64_t seed, int tuples, int max_d = 4);

}  // namespace volrank::detalg
