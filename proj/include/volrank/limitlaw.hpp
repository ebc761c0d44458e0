#pragma once
// Monte Carlo realization of the limiting quantities behind the rank
// statistics: the coupled 2d-dimensional Psi blocks, the squared mixed-column
// sums Fbar_r, and the moments Gamma_r / Gamma'_r / Gamma''_r, together with
// their time integrals.  These serve as oracles for the asymptotic variances
// in the acceptance tests.

#include <cstdint>
#include <utility>
#include <vector>

#include "volrank/itosim.hpp"
#include "volrank/linalg.hpp"

namespace volrank::limitlaw {

enum class Exec { serial, parallel };

struct LimitInput {
  int d = 1, q = 1;
  Matrix alpha;   // d x q
  Matrix beta;    // d x d
  Tensor3 gamma;  // d x q x q (zero-sized accepted as all-zero)
  Vector a;       // d

  void validate() const;
};

// One realization of the d coupled blocks for a given kappa; column i holds
// Psi(u, kappa)_i, first d components the x-part, last d the y-part.
struct PsiDraw {
  int kappa = 1;
  Matrix psi;  // 2d x d

  Matrix x_matrix() const;
  Matrix y_matrix() const;
};

// One coupled realization for kappa = 1 and kappa = 2 from a single fine path
// of (Wbar, Wbar') on [0, 2d] at resolution 1/n_substeps.  Ito integrals are
// forward (left-point) sums on the fine grid.  n_substeps >= 100.
std::pair<PsiDraw, PsiDraw> draw_psi(const LimitInput& u, std::uint64_t seed, int n_substeps);

// Fbar_r of one draw: gamma_r(x-matrix, y-matrix)^2.
double fbar_r(int r, const PsiDraw& draw);

// Coupled samples of (Fbar_r(u,1), Fbar_r(u,2)); draw i uses the substream
// (seed, i), so output is bit-identical for a fixed seed under any thread
// count.  The serial variant is the reference implementation.
struct FbarSample {
  std::vector<double> f1, f2;
};
FbarSample sample_fbar(const LimitInput& u, int r, int n_samples, int n_substeps,
                       std::uint64_t seed, Exec exec = Exec::parallel, int threads = 0);

struct GammaEstimate {
  double gamma_r = 0.0;
  double gamma_r_prime = 0.0;
  double gamma_r_dprime = 0.0;
  double se_gamma = 0.0;
  double se_prime = 0.0;   // delta-method se for Gamma'
  double se_dprime = 0.0;  // delta-method se for Gamma''
  double se_diff = 0.0;    // se of Gamma' - Gamma'' (the Gamma^2 terms cancel)
  int n_samples = 0;
  int n_substeps = 0;
};

GammaEstimate estimate_gamma(const LimitInput& u, int r, int n_samples, int n_substeps,
                             std::uint64_t seed, Exec exec = Exec::parallel, int threads = 0);

struct McParams {
  int n_samples = 20000;
  int n_substeps = 512;
  std::uint64_t seed = 1;
  Exec exec = Exec::parallel;
  int threads = 0;
};

// Time integrals of the Gamma quantities along deterministic coefficient
// paths s -> (sigma_s, theta, v_s, b_s): the centering process S(r)_T, the
// asymptotic covariances V(r)^{kk'}_T, the limits of the variance estimators
// (theta integrals), the feasible-CLT variance V(T), and the constant-rank
// statistic variance for a given power p.
struct LimitIntegrals {
  double s_r = 0.0;
  double v11 = 0.0, v22 = 0.0, v12 = 0.0;
  double theta11 = 0.0, theta22 = 0.0, theta12 = 0.0;
  double v_T = 0.0;
  double bbar_v = 0.0;
  double p = 1.0;
  double se_s_r = 0.0;
};

LimitIntegrals integrated_limits(const itosim::ModelSpec& model, const Matrix& theta, int r,
                                 double t_max, int grid, double p, const McParams& mc);

}  // namespace volrank::limitlaw
