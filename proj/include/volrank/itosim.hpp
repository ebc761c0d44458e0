#pragma once
// Generation of discretely observed continuous Ito semimartingale paths with
// exact knowledge of the volatility rank process, including rank-switching
// scenarios.  The driving hierarchy is
//
//   dX = b dt + sigma dW,   dsigma = a dt + v dW,
//   db = a' dt + v' dW,     dv = a'' dt + v'' dW,
//
// all driven by one q-dimensional Brownian motion.  Each of sigma, b, v can
// instead follow an explicit path (a function of time and X), which is how
// the deterministic-coefficient scenarios pin the rank process exactly.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "volrank/linalg.hpp"

namespace volrank::itosim {

struct SimState {
  double t = 0.0;
  Vector x;
  Matrix sigma;
  Vector b;
  Tensor3 v;
};

struct RankSegment {
  double t_from = 0.0;
  int r = 0;
};

struct RankProfile {
  std::vector<RankSegment> segments;  // sorted by t_from, first at 0

  int rank_at(double t) const;
  int max_rank(double t_max) const;  // sup over [0, t_max)
  bool piecewise_constant() const { return segments.size() > 1; }
};

struct ModelSpec {
  int d = 1, q = 1;
  Vector x0;

  // Explicit coefficient paths; when set the process is evaluated, not
  // integrated.  Deterministic scenarios ignore the state argument.
  std::function<Matrix(double, const Vector&)> sigma_explicit;   // d x q
  std::function<Vector(double, const Vector&)> b_explicit;       // d
  std::function<Tensor3(double, const Vector&)> v_explicit;      // d x q x q

  // Initial values and coefficients for the integrated (SDE) mode.
  Matrix sigma0;
  Vector b0;
  Tensor3 v0;
  std::function<Matrix(double, const SimState&)> sigma_drift;    // a
  std::function<Vector(double, const SimState&)> b_drift;        // a'
  std::function<Matrix(double, const SimState&)> b_vol;          // v'
  std::function<Tensor3(double, const SimState&)> v_drift;       // a''
  std::function<Tensor4(double, const SimState&)> v_vol;         // v''

  RankProfile rank_profile;
  std::string scenario;
  bool coeffs_deterministic = false;  // sigma, b, v are functions of t only

  Matrix sigma_at(double t, const Vector& x) const;
  Vector b_at(double t, const Vector& x) const;
  Tensor3 v_at(double t, const Vector& x) const;
};

struct PathSample {
  double delta_n = 0.0;
  double t_max = 0.0;
  int d = 0;
  std::uint64_t seed = 0;
  std::string scenario;
  std::vector<double> obs;  // (n_increments + 1) x d, row-major

  // Coefficient paths at observation times, kept when requested.
  std::vector<Matrix> latent_sigma;
  std::vector<Vector> latent_b;
  std::vector<Tensor3> latent_v;

  int n_increments() const { return static_cast<int>(obs.size()) / d - 1; }
  double at(int i, int j) const { return obs[static_cast<size_t>(i) * d + j]; }
  Vector row(int i) const {
    return Vector(obs.begin() + static_cast<size_t>(i) * d, obs.begin() + static_cast<size_t>(i + 1) * d);
  }
};

// Euler-Maruyama on the fine grid of step delta_n / refine for the coupled
// system (X, sigma, b, v); observations are the Delta_n subsamples.
PathSample simulate(const ModelSpec& model, double t_max, double delta_n, int refine,
                    std::uint64_t seed, bool keep_latent = false);

// ---- canned scenarios -------------------------------------------------------

struct ScenarioParams {
  std::string name;  // constant_rank | rank_switch | integrated_diffusion | sde_case | degenerate_d3q1
  int d = 2;
  int q = 0;  // 0: scenario default (q = d except where noted)
  int r = 1;
  int r_before = 1, r_after = 2;
  double switch_time = 0.5;
  double ramp_width = 1e-5;      // width of the C^1 rank-switch ramp
  double vol_modulation = 0.0;   // amplitude of a smooth deterministic scale
  double modulation_period = 1.0;
  double probe_horizon = 1.0;    // horizon for construction-time rank checks
};

ModelSpec scenario(const ScenarioParams& params);

// ---- path files -------------------------------------------------------------

// CSV with header t,x_1,...,x_d; values printed with round-trip precision.
void write_csv(const PathSample& path, const std::string& file);
PathSample read_csv(const std::string& file, double delta_n = 0.0);

// Raw little-endian doubles plus a JSON sidecar <file>.json with metadata.
void write_binary(const PathSample& path, const std::string& file);
PathSample read_binary(const std::string& file);

}  // namespace volrank::itosim
