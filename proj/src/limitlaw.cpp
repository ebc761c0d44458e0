#include "volrank/limitlaw.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "volrank/detalg.hpp"
#include "volrank/rng.hpp"

namespace volrank::limitlaw {

void LimitInput::validate() const {
  if (d < 1 || q < 1) throw config_error("LimitInput: dimensions must be positive");
  if (alpha.rows() != d || alpha.cols() != q) throw config_error("LimitInput: alpha must be d x q");
  if (beta.rows() != d || beta.cols() != d) throw config_error("LimitInput: beta must be d x d");
  if (!gamma.empty() && (gamma.dim0() != d || gamma.dim1() != q || gamma.dim2() != q))
    throw config_error("LimitInput: gamma must be d x q x q");
  if (static_cast<int>(a.size()) != d) throw config_error("LimitInput: a must have length d");
}

Matrix PsiDraw::x_matrix() const {
  const int d = psi.cols();
  Matrix x(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = psi(i, j);
  return x;
}

Matrix PsiDraw::y_matrix() const {
  const int d = psi.cols();
  Matrix y(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) y(i, j) = psi(d + i, j);
  return y;
}

std::pair<PsiDraw, PsiDraw> draw_psi(const LimitInput& u, std::uint64_t seed, int n_substeps) {
  u.validate();
  if (n_substeps < 100)
    throw config_error("draw_psi: n_substeps < 100 would bias the Ito-integral sums");
  const int d = u.d, q = u.q;
  const double h = 1.0 / n_substeps;
  const double sqh = std::sqrt(h);
  const bool with_gamma = !u.gamma.empty();

  NormalRng rng(seed);

  // Per unit interval j = 1..2d: Brownian increments and the forward-sum Ito
  // integrals I[j](m,k) ~ int_{j-1}^{j} Wbar^k dWbar^m (Wbar from the origin).
  std::vector<Vector> dw_unit(2 * d, Vector(q, 0.0));
  std::vector<Vector> dwp_unit(2 * d, Vector(d, 0.0));
  std::vector<Matrix> ito_unit(2 * d);
  Vector w(q, 0.0);
  Vector dw(q);
  for (int j = 0; j < 2 * d; ++j) {
    Matrix ito(q, q);
    for (int s = 0; s < n_substeps; ++s) {
      for (int m = 0; m < q; ++m) dw[m] = sqh * rng.normal();
      if (with_gamma) {
        for (int m = 0; m < q; ++m)
          for (int k = 0; k < q; ++k) ito(m, k) += w[k] * dw[m];
      }
      for (int m = 0; m < q; ++m) {
        w[m] += dw[m];
        dw_unit[j][m] += dw[m];
      }
      for (int l = 0; l < d; ++l) dwp_unit[j][l] += sqh * rng.normal();
    }
    ito_unit[j] = std::move(ito);
  }

  auto make_draw = [&](int kappa) {
    PsiDraw out;
    out.kappa = kappa;
    out.psi = Matrix(2 * d, d);
    const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(kappa));
    for (int i = 1; i <= d; ++i) {
      Vector dwk(q, 0.0), dwpk(d, 0.0);
      Matrix ik(q, q);
      for (int j = kappa * (i - 1); j < kappa * i; ++j) {
        for (int m = 0; m < q; ++m) dwk[m] += dw_unit[j][m];
        for (int l = 0; l < d; ++l) dwpk[l] += dwp_unit[j][l];
        if (with_gamma)
          for (int m = 0; m < q; ++m)
            for (int k = 0; k < q; ++k) ik(m, k) += ito_unit[j](m, k);
      }
      for (int l = 0; l < d; ++l) {
        double xv = 0.0;
        for (int m = 0; m < q; ++m) xv += u.alpha(l, m) * dwk[m];
        out.psi(l, i - 1) = inv_sqrt_k * xv;

        double yv = u.a[l];
        for (int m = 0; m < d; ++m) yv += inv_sqrt_k * u.beta(l, m) * dwpk[m];
        if (with_gamma) {
          double gv = 0.0;
          for (int m = 0; m < q; ++m)
            for (int k = 0; k < q; ++k) gv += u.gamma(l, m, k) * ik(m, k);
          yv += gv / kappa;
        }
        out.psi(d + l, i - 1) = yv;
      }
    }
    return out;
  };

  return {make_draw(1), make_draw(2)};
}

double fbar_r(int r, const PsiDraw& draw) {
  double g = detalg::gamma_r(r, draw.x_matrix(), draw.y_matrix());
  return g * g;
}

FbarSample sample_fbar(const LimitInput& u, int r, int n_samples, int n_substeps,
                       std::uint64_t seed, Exec exec, int threads) {
  u.validate();
  if (n_samples < 1) throw config_error("sample_fbar: n_samples must be >= 1");
  FbarSample out;
  out.f1.resize(n_samples);
  out.f2.resize(n_samples);
  auto work = [&](int i) {
    auto [d1, d2] = draw_psi(u, substream(seed, static_cast<std::uint64_t>(i)), n_substeps);
    out.f1[i] = fbar_r(r, d1);
    out.f2[i] = fbar_r(r, d2);
  };
  if (exec == Exec::serial) {
    for (int i = 0; i < n_samples; ++i) work(i);
  } else {
#ifdef _OPENMP
    if (threads > 0) {
#pragma omp parallel for schedule(static) num_threads(threads)
      for (int i = 0; i < n_samples; ++i) work(i);
    } else {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n_samples; ++i) work(i);
    }
#else
    for (int i = 0; i < n_samples; ++i) work(i);
#endif
  }
  return out;
}

GammaEstimate estimate_gamma(const LimitInput& u, int r, int n_samples, int n_substeps,
                             std::uint64_t seed, Exec exec, int threads) {
  if (n_samples < 100) throw config_error("estimate_gamma: n_samples must be >= 100");
  FbarSample s = sample_fbar(u, r, n_samples, n_substeps, seed, exec, threads);
  const int n = n_samples;

  double m1 = 0.0, m11 = 0.0, m12 = 0.0;
  for (int i = 0; i < n; ++i) {
    m1 += s.f1[i];
    m11 += s.f1[i] * s.f1[i];
    m12 += s.f1[i] * s.f2[i];
  }
  m1 /= n;
  m11 /= n;
  m12 /= n;

  GammaEstimate g;
  g.n_samples = n;
  g.n_substeps = n_substeps;
  g.gamma_r = m1;
  g.gamma_r_prime = m11 - m1 * m1;
  g.gamma_r_dprime = m12 - m1 * m1;

  // Per-draw influence values; the plug-in mean enters the delta method.
  double v1 = 0.0, vp = 0.0, vpp = 0.0, vd = 0.0;
  for (int i = 0; i < n; ++i) {
    double a1 = s.f1[i] - m1;
    double ap = (s.f1[i] * s.f1[i] - 2.0 * m1 * s.f1[i]) - (m11 - 2.0 * m1 * m1);
    double app = (s.f1[i] * s.f2[i] - 2.0 * m1 * s.f1[i]) - (m12 - 2.0 * m1 * m1);
    double ad = (s.f1[i] * s.f1[i] - s.f1[i] * s.f2[i]) - (m11 - m12);
    v1 += a1 * a1;
    vp += ap * ap;
    vpp += app * app;
    vd += ad * ad;
  }
  const double dn = n > 1 ? static_cast<double>(n) * (n - 1) : 1.0;
  g.se_gamma = std::sqrt(v1 / dn);
  g.se_prime = std::sqrt(vp / dn);
  g.se_dprime = std::sqrt(vpp / dn);
  g.se_diff = std::sqrt(vd / dn);
  return g;
}

LimitIntegrals integrated_limits(const itosim::ModelSpec& model, const Matrix& theta, int r,
                                 double t_max, int grid, double p, const McParams& mc) {
  if (!model.coeffs_deterministic)
    throw unsupported_model(
        "integrated_limits: limit integrals are defined here only for models with "
        "deterministic (frozen) coefficient paths");
  if (grid < 1) throw config_error("integrated_limits: grid must be >= 1");
  if (t_max <= 0.0) throw config_error("integrated_limits: t_max must be positive");
  const int d = model.d;
  const double dt = t_max / grid;

  std::vector<GammaEstimate> est(grid);
  for (int gidx = 0; gidx < grid; ++gidx) {
    double s = (gidx + 0.5) * dt;  // midpoint rule
    LimitInput u;
    u.d = d;
    u.q = model.q;
    u.alpha = model.sigma_at(s, model.x0);
    u.beta = theta;
    u.gamma = model.v_at(s, model.x0);
    u.a = model.b_at(s, model.x0);
    est[gidx] = estimate_gamma(u, r, mc.n_samples, mc.n_substeps,
                               substream(mc.seed, static_cast<std::uint64_t>(gidx)), mc.exec,
                               mc.threads);
  }

  LimitIntegrals out;
  out.p = p;
  double se2 = 0.0;
  for (const auto& e : est) {
    out.s_r += dt * e.gamma_r;
    out.v11 += 2.0 * d * dt * e.gamma_r_prime;
    out.v12 += 2.0 * d * dt * e.gamma_r_dprime;
    out.theta11 += 2.0 * d * dt * (e.gamma_r_prime + e.gamma_r * e.gamma_r);
    out.theta12 += 2.0 * d * dt * (e.gamma_r_dprime + e.gamma_r * e.gamma_r);
    se2 += dt * dt * e.se_gamma * e.se_gamma;
  }
  out.v22 = out.v11;
  out.theta22 = out.theta11;
  out.se_s_r = std::sqrt(se2);

  if (out.s_r > 0.0) {
    const double log2 = std::log(2.0);
    out.v_T = (out.v11 + out.v22 - 2.0 * out.v12) / (log2 * log2 * out.s_r * out.s_r);
    if (r >= 1) {
      double coef = p * std::pow(static_cast<double>(r), p - 1.0) / log2;
      double acc = 0.0;
      for (int gidx = 0; gidx < grid; ++gidx) {
        const auto& e = est[gidx];
        if (e.gamma_r <= 0.0) continue;
        double wgt = 1.0 / e.gamma_r - t_max / out.s_r;
        acc += dt * wgt * wgt * 4.0 * d * (e.gamma_r_prime - e.gamma_r_dprime);
      }
      out.bbar_v = coef * coef * acc;
    }
  }
  return out;
}

}  // namespace volrank::limitlaw
