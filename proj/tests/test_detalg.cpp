#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/oracles.hpp"
#include "volrank/detalg.hpp"

using namespace volrank;
using namespace volrank::detalg;
using testsupport::det_cofactor;
using testsupport::random_int_matrix;

TEST_CASE("det: hand values and cofactor oracle") {
  CHECK(det(Matrix::identity(3)) == 1.0);
  CHECK(det(Matrix::from_rows({{1, 2}, {3, 4}})) == -2.0);

  NormalRng rng(11);
  for (int t = 0; t < 50; ++t) {
    Matrix m = random_int_matrix(4, rng);
    double a = det(m), b = det_cofactor(m);
    CHECK(a == b);  // both exact on small integer input
  }
  // Float inputs: agree to 1e-12 relative.
  for (int t = 0; t < 50; ++t) {
    Matrix m(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) m(i, j) = rng.normal();
    double a = det(m), b = det_cofactor(m);
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)));
  }
}

TEST_CASE("det: degenerate matrices return zero") {
  Matrix z(3, 3);
  CHECK(det(z) == 0.0);
  // Row two is exactly twice row one.
  Matrix m = Matrix::from_rows({{1.5, -2.25, 0.5}, {3.0, -4.5, 1.0}, {0.7, 0.2, 0.9}});
  CHECK(det(m) == 0.0);
}

TEST_CASE("rank: examples and tolerance behaviour") {
  CHECK(rank(Matrix(2, 2)) == 0);
  CHECK(rank(Matrix::diag({1.0, 0.0})) == 1);
  CHECK(rank(Matrix::diag({1.0, 1e-14}), 1e-10) == 1);
  CHECK(rank(Matrix::diag({1.0, 1e-14}), 1e-16) == 2);
  CHECK(rank(Matrix::identity(4)) == 4);
  CHECK_THROWS_AS(rank(Matrix::identity(2), 0.0), config_error);
}

TEST_CASE("test_function_f: examples") {
  CHECK(test_function_f({Vector{1, 0}, Vector{0, 1}}) == 1.0);
  CHECK(test_function_f({Vector{2, 3}, Vector{2, 3}}) == 0.0);
  CHECK(test_function_f({Vector{1, 2}, Vector{3, 4}}) == 4.0);
  CHECK_THROWS_AS(test_function_f({Vector{1, 2, 3}, Vector{1, 2, 3}}), config_error);
}

TEST_CASE("gamma_r: boundary cases and hand enumeration") {
  NormalRng rng(7);
  Matrix a = random_int_matrix(3, rng), b = random_int_matrix(3, rng);
  CHECK(gamma_r(3, a, b) == det(a));
  CHECK(gamma_r(0, a, b) == det(b));
  CHECK(gamma_r(-1, a, b) == 0.0);
  CHECK_THROWS_AS(gamma_r(4, a, b), config_error);

  Matrix a2 = Matrix::diag({1.0, 0.0});
  Matrix b2 = Matrix::diag({0.0, 1.0});
  CHECK(gamma_r(1, a2, b2) == 1.0);
}

TEST_CASE("gamma_prime_r: examples and brute-force oracle") {
  Matrix c1(1, 1);
  c1(0, 0) = 4.5;
  CHECK(gamma_prime_r(0, Matrix(1, 1), Matrix(1, 1), c1) == 4.5);

  Matrix eye = Matrix::identity(2);
  CHECK(gamma_prime_r(1, eye, eye, eye) == 2.0);
  CHECK_THROWS_AS(gamma_prime_r(2, eye, eye, eye), config_error);

  NormalRng rng(23);
  for (int t = 0; t < 30; ++t) {
    Matrix a = random_int_matrix(3, rng), b = random_int_matrix(3, rng),
           c = random_int_matrix(3, rng);
    for (int r = 0; r <= 2; ++r)
      CHECK(gamma_prime_r(r, a, b, c) == testsupport::gamma_prime_brute(r, a, b, c));
  }
}

TEST_CASE("multilinear expansion equals determinant of the sum") {
  NormalRng rng(5);
  Matrix a1 = random_int_matrix(1, rng);
  CHECK(multilinear_expansion({a1}) == det(a1));

  Matrix x(1, 1), y(1, 1);
  x(0, 0) = 3;
  y(0, 0) = -7;
  CHECK(multilinear_expansion({x, y}) == -4.0);

  for (int t = 0; t < 40; ++t) {
    int d = 2 + static_cast<int>(rng.uniform_int(0, 2));
    int m = 2 + static_cast<int>(rng.uniform_int(0, 1));
    std::vector<Matrix> ms;
    Matrix total(d, d);
    for (int i = 0; i < m; ++i) {
      ms.push_back(random_int_matrix(d, rng));
      total = total + ms.back();
    }
    CHECK(multilinear_expansion(ms) == det(total));  // exact in integer arithmetic
  }
  // Floating inputs stay within 1e-9.
  for (int t = 0; t < 20; ++t) {
    std::vector<Matrix> ms;
    Matrix total(3, 3);
    for (int i = 0; i < 3; ++i) {
      Matrix m(3, 3);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = rng.normal();
      ms.push_back(m);
      total = total + m;
    }
    CHECK(std::abs(multilinear_expansion(ms) - det(total)) < 1e-9);
  }
  CHECK_THROWS_AS(multilinear_expansion({}), config_error);
}

TEST_CASE("degeneracy: gamma_r vanishes exactly below the rank") {
  NormalRng rng(31);
  for (int t = 0; t < 40; ++t) {
    int d = 2 + static_cast<int>(rng.uniform_int(0, 2));
    int r = static_cast<int>(rng.uniform_int(0, d - 1));
    // Integer matrix of rank exactly r.
    Matrix a(d, d);
    if (r > 0) {
      Matrix left(d, r), right(r, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < r; ++j) left(i, j) = static_cast<double>(rng.uniform_int(-2, 2));
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < d; ++j) right(i, j) = static_cast<double>(rng.uniform_int(-2, 2));
      a = left * right;
    }
    if (rank(a) != r) {
      --t;
      continue;
    }
    Matrix b = random_int_matrix(d, rng);
    for (int rr = r + 1; rr <= d; ++rr) CHECK(gamma_r(rr, a, b) == 0.0);
  }
}

TEST_CASE("column permutations act through the signature") {
  NormalRng rng(41);
  for (int t = 0; t < 20; ++t) {
    int d = 3;
    Matrix a = random_int_matrix(d, rng), b = random_int_matrix(d, rng);
    Matrix as = a, bs = b;
    // Swap columns 0 and 2 in both.
    for (int i = 0; i < d; ++i) {
      std::swap(as(i, 0), as(i, 2));
      std::swap(bs(i, 0), bs(i, 2));
    }
    for (int r = 0; r <= d; ++r) CHECK(gamma_r(r, as, bs) == -gamma_r(r, a, b));
  }
}

TEST_CASE("expansion coefficient: gamma_r is the h^{d-r} coefficient") {
  // det(a + h b) as a polynomial in h, coefficients extracted by a
  // Vandermonde solve at h = 1, 1/2, ..., 1/2^d.
  NormalRng rng(53);
  for (int t = 0; t < 20; ++t) {
    const int d = 3;
    const int r = 1 + static_cast<int>(rng.uniform_int(0, 1));
    Matrix left(d, r), right(r, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < r; ++j) left(i, j) = static_cast<double>(rng.uniform_int(-2, 2));
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < d; ++j) right(i, j) = static_cast<double>(rng.uniform_int(-2, 2));
    Matrix a = left * right;
    if (rank(a) != r) {
      --t;
      continue;
    }
    Matrix b = random_int_matrix(d, rng);

    Matrix vand(d + 1, d + 1);
    Vector rhs(d + 1);
    for (int i = 0; i <= d; ++i) {
      double h = std::ldexp(1.0, -i);
      double p = 1.0;
      for (int j = 0; j <= d; ++j) {
        vand(i, j) = p;
        p *= h;
      }
      rhs[i] = det(a + h * b);
    }
    Vector coef = solve_linear(vand, rhs);
    CHECK(std::abs(coef[d - r] - gamma_r(r, a, b)) < 1e-8);
    for (int k = 0; k < d - r; ++k) CHECK(std::abs(coef[k]) < 1e-8);
  }
}

TEST_CASE("second-order expansion error stays bounded") {
  // |det(a + h b + h^2 c) - h^{d-r} g_r - h^{d-r+1}(g_{r-1} + g'_r)| = O(h^{d-r+2}).
  NormalRng rng(67);
  auto run_case = [&](int d, int r, int k_max) {
    Matrix left(d, r), right(r, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < r; ++j) left(i, j) = static_cast<double>(rng.uniform_int(-2, 2));
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < d; ++j) right(i, j) = static_cast<double>(rng.uniform_int(-2, 2));
    Matrix a = left * right;
    if (rank(a) != r) return false;
    Matrix b = random_int_matrix(d, rng), c = random_int_matrix(d, rng);
    double g = gamma_r(r, a, b);
    double g2 = gamma_r(r - 1, a, b) + gamma_prime_r(r, a, b, c);
    std::vector<double> ratios;
    for (int k = 4; k <= k_max; ++k) {
      double h = std::ldexp(1.0, -k);
      double err = det(a + h * b + (h * h) * c) - std::pow(h, d - r) * g -
                   std::pow(h, d - r + 1) * g2;
      ratios.push_back(std::abs(err) / std::pow(h, d - r + 2));
    }
    double first = ratios.front() + 1.0;
    for (double ratio : ratios) {
      CHECK(std::isfinite(ratio));
      CHECK(ratio <= 8.0 * first);
    }
    return true;
  };
  int done = 0;
  while (done < 6) done += run_case(2, 1, 12) ? 1 : 0;
  done = 0;
  while (done < 6) done += run_case(3, 2, 12) ? 1 : 0;
  done = 0;
  while (done < 4) done += run_case(3, 1, 9) ? 1 : 0;
}

TEST_CASE("self-test suite passes on 200 random tuples") {
  auto res = self_test(2024, 200, 4);
  for (const auto& msg : res.messages) UNSCOPED_INFO(msg);
  CHECK(res.ok);
  CHECK(res.tuples == 200);
  CHECK(res.failures == 0);
}
