#pragma once
// The statistical core: random perturbation of an observed path, block
// statistics S^{n,kappa}, the rank estimator, variance estimators, tests for
// the maximal rank, spot-rank estimators and the constant-rank test.
//
// Block conventions.  Observations are grouped into non-overlapping blocks of
// 2d increments.  Within block i (base index 2id):
//   f1[i] applies the squared-determinant test function to the d one-step
//         increments of Z^{n,1} = X + sqrt(Delta_n) X' over the first half of
//         the block, each normalized by sqrt(Delta_n);
//   f2[i] applies it to the d two-step increments of Z^{n,2} =
//         X + sqrt(2 Delta_n) X' spanning the whole block, normalized by
//         sqrt(2 Delta_n).
// The kappa-step increments of Z^{n,kappa} normalized by sqrt(kappa Delta_n)
// make the two block values identically distributed in the small-Delta_n
// limit, which is what the ratio statistic S^{n,2}/S^{n,1} -> 2^{d-R} needs.

#include <cstdint>
#include <string>
#include <vector>

#include "volrank/itosim.hpp"
#include "volrank/linalg.hpp"

namespace volrank::ranktest {

struct PerturbationConfig {
  Matrix theta;                  // non-random invertible d x d; defaults to identity
  std::uint64_t seed_wprime = 1; // statistician's randomization, independent of the data seed
};

struct PerturbedBlocks {
  int d = 0;
  double delta_n = 0.0;
  double t_max = 0.0;
  std::vector<double> f1, f2;  // per-block determinant values, >= 0

  int n_blocks() const { return static_cast<int>(f1.size()); }
};

PerturbedBlocks perturb_and_block(const itosim::PathSample& path, const PerturbationConfig& cfg);

// S^{n,kappa}_t = 2 d Delta_n * sum of the block values with block end <= t.
struct SPair {
  double s1 = 0.0, s2 = 0.0;
};
SPair s_statistics(const PerturbedBlocks& blocks, double up_to);

// R-hat(n,T) = d - log2(s2 / s1).  Degenerate (non-positive) inputs throw.
double rank_estimate(double s1, double s2, int d);

// Clamped integer estimator R''(n,T) = 0 v (round(R-hat) ^ d).
int rank_rounded(double r_hat, int d);

struct VarianceTriple {
  double v11 = 0.0, v22 = 0.0, v12 = 0.0;
};
VarianceTriple variance_estimators(const PerturbedBlocks& blocks, double up_to);

// Feasible CLT variance V(n,T) by the displayed ratio formula.
double feasible_variance(double s1, double r_hat, double v11, double v22, double v12, int d);
// Same quantity computed through the perfect-square form
// 4 d^2 Delta_n sum_i (f1[i] - 2^{R-d} f2[i])^2 / (s1 log 2)^2, which is
// nonnegative by construction; this is what reports carry.
double feasible_variance_sq(const PerturbedBlocks& blocks, double r_hat, double s1);
// Optional diagnostic converging to the same limit through the identity
// "numerator = 2(V^{11} - V^{12})"; unlike V(n,T) it can be negative.
double feasible_variance_prime(double s1, double r_hat, double v11, double v12, int d);

enum class HypothesisKind { equal, leq, geq };

struct HypothesisSpec {
  HypothesisKind kind = HypothesisKind::equal;
  int r = 0;

  std::string label() const;
};

struct TestDecision {
  HypothesisSpec hypothesis;
  double alpha = 0.0;
  bool reject = false;
  double standardized = 0.0;  // (R-hat - r) / sqrt(Delta_n V(n,T))
  double quantile = 0.0;      // z_alpha (equal) or z'_alpha (one-sided)
};

TestDecision test_max_rank(double r_hat, double v_feasible, double delta_n,
                           const HypothesisSpec& hyp, double alpha);

struct RankTestReport {
  int d = 0;
  double delta_n = 0.0;
  double t_max = 0.0;
  int n_blocks = 0;
  double s1 = 0.0, s2 = 0.0;
  double r_hat = 0.0;
  int r_rounded = 0;
  double v11 = 0.0, v22 = 0.0, v12 = 0.0;
  double v_feasible = 0.0;
  double v_prime = 0.0;  // diagnostic, possibly negative
  std::vector<TestDecision> decisions;
};

RankTestReport analyze(const PerturbedBlocks& blocks, const std::vector<HypothesisSpec>& hypotheses,
                       const std::vector<double>& alphas);

// ---- spot estimators and the constant-rank test ------------------------------

struct SpotSeries {
  int k_n = 0;
  std::vector<double> r_hat;      // window of k_n blocks starting at block i
  std::vector<uint8_t> valid;     // 0 where a window had a non-positive f-sum
  int n_invalid = 0;

  double median_valid() const;
};

// k_n must satisfy 4d <= k_n <= n_blocks.
SpotSeries spot_rank_series(const PerturbedBlocks& blocks, int k_n);

struct ConstRankReport {
  int k_n = 0;
  double p = 1.0;
  double a_p = 0.0;       // A(p)^n_T
  double a_n_T = 0.0;     // a(n,T)
  double b_stat = 0.0;    // B(n,p,T)
  double vbar11 = 0.0, vbar22 = 0.0, vbar12 = 0.0;
  double vbar = 0.0;      // Vbar(n,p,T), nonnegative via the square form
  double z_stat = 0.0;    // Z(n,p,T) with the 1/sqrt(Delta_n) cap in the root
  int n_windows = 0;      // disjoint spot windows entering A(p)
  int n_skipped = 0;      // flagged windows / weight blocks excluded
  SpotSeries spot;
  std::string null_note;  // what null this tests (constancy with R_T >= 1)
};

ConstRankReport const_rank_statistics(const PerturbedBlocks& blocks, const SpotSeries& spot,
                                      double p, double r_hat, double s1);

struct ConstRankDecision {
  double alpha = 0.0;
  bool reject = false;
  double quantile = 0.0;
};
ConstRankDecision test_const_rank(const ConstRankReport& report, double delta_n, double alpha);

// k_n = max(4d, ceil(Delta_n^{-4/5})); satisfies k_n Delta_n^{3/4} -> inf and
// k_n Delta_n -> 0.
int default_kn(double delta_n, int d);

}  // namespace volrank::ranktest
