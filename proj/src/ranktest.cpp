#include "volrank/ranktest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "volrank/detalg.hpp"
#include "volrank/rng.hpp"
#include "volrank/stats.hpp"

namespace volrank::ranktest {

namespace {

constexpr double kLog2 = 0.6931471805599453;

int blocks_up_to(const PerturbedBlocks& blocks, double t) {
  double span = 2.0 * blocks.d * blocks.delta_n;
  int k = static_cast<int>(std::floor(t / span + 1e-9));
  return std::clamp(k, 0, blocks.n_blocks());
}

// Monotone power extension used for (R-hat)^p with real-valued R-hat.
double pow_signed(double x, double p) {
  return x >= 0.0 ? std::pow(x, p) : -std::pow(-x, p);
}

}  // namespace

std::string HypothesisSpec::label() const {
  switch (kind) {
    case HypothesisKind::equal: return "=" + std::to_string(r);
    case HypothesisKind::leq: return "<=" + std::to_string(r);
    case HypothesisKind::geq: return ">=" + std::to_string(r);
  }
  return "?";
}

PerturbedBlocks perturb_and_block(const itosim::PathSample& path, const PerturbationConfig& cfg) {
  const int d = path.d;
  const double dn = path.delta_n;
  const int n_incr = path.n_increments();
  if (n_incr < 2 * d)
    throw too_short_path("perturb_and_block: need at least 2d+1 observations");
  Matrix theta = cfg.theta;
  if (theta.rows() == 0) theta = Matrix::identity(d);
  if (theta.rows() != d || theta.cols() != d)
    throw config_error("perturb_and_block: theta must be d x d");
  if (detalg::det(theta) == 0.0) throw config_error("perturb_and_block: theta must be invertible");

  // X' = theta W' on the observation grid, from the statistician's seed.
  NormalRng rng(substream(cfg.seed_wprime, 0x57));
  const double sq_dn = std::sqrt(dn);
  std::vector<double> xprime(static_cast<size_t>(n_incr + 1) * d, 0.0);
  Vector w(d, 0.0);
  for (int i = 1; i <= n_incr; ++i) {
    for (int l = 0; l < d; ++l) w[l] += sq_dn * rng.normal();
    for (int l = 0; l < d; ++l) {
      double s = 0.0;
      for (int m = 0; m < d; ++m) s += theta(l, m) * w[m];
      xprime[static_cast<size_t>(i) * d + l] = s;
    }
  }

  PerturbedBlocks out;
  out.d = d;
  out.delta_n = dn;
  out.t_max = path.t_max;
  const int n_blocks = n_incr / (2 * d);
  out.f1.resize(n_blocks);
  out.f2.resize(n_blocks);

  const double scale1 = std::sqrt(dn);            // perturbation and normalization, kappa = 1
  const double scale2 = std::sqrt(2.0 * dn);      // kappa = 2
  Matrix cols(d, d);
  auto xp = [&](int i, int l) { return xprime[static_cast<size_t>(i) * d + l]; };
  for (int i = 0; i < n_blocks; ++i) {
    const int base = 2 * i * d;
    for (int j = 1; j <= d; ++j)
      for (int l = 0; l < d; ++l) {
        double dz = (path.at(base + j, l) + scale1 * xp(base + j, l)) -
                    (path.at(base + j - 1, l) + scale1 * xp(base + j - 1, l));
        cols(l, j - 1) = dz / scale1;
      }
    out.f1[i] = detalg::test_function_f(cols);

    for (int j = 1; j <= d; ++j)
      for (int l = 0; l < d; ++l) {
        double dz = (path.at(base + 2 * j, l) + scale2 * xp(base + 2 * j, l)) -
                    (path.at(base + 2 * j - 2, l) + scale2 * xp(base + 2 * j - 2, l));
        cols(l, j - 1) = dz / scale2;
      }
    out.f2[i] = detalg::test_function_f(cols);
  }
  return out;
}

SPair s_statistics(const PerturbedBlocks& blocks, double up_to) {
  const int k = blocks_up_to(blocks, up_to);
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < k; ++i) {
    s1 += blocks.f1[i];
    s2 += blocks.f2[i];
  }
  const double w = 2.0 * blocks.d * blocks.delta_n;
  return {w * s1, w * s2};
}

double rank_estimate(double s1, double s2, int d) {
  if (!(s1 > 0.0) || !(s2 > 0.0))
    throw degenerate_statistic("rank_estimate: S^{n,1} and S^{n,2} must be positive");
  return d - std::log2(s2 / s1);
}

int rank_rounded(double r_hat, int d) {
  long long r = std::llround(r_hat);
  return static_cast<int>(std::clamp<long long>(r, 0, d));
}

VarianceTriple variance_estimators(const PerturbedBlocks& blocks, double up_to) {
  const int k = blocks_up_to(blocks, up_to);
  VarianceTriple v;
  for (int i = 0; i < k; ++i) {
    v.v11 += blocks.f1[i] * blocks.f1[i];
    v.v22 += blocks.f2[i] * blocks.f2[i];
    v.v12 += blocks.f1[i] * blocks.f2[i];
  }
  const double w = 4.0 * blocks.d * blocks.d * blocks.delta_n;
  v.v11 *= w;
  v.v22 *= w;
  v.v12 *= w;
  return v;
}

double feasible_variance(double s1, double r_hat, double v11, double v22, double v12, int d) {
  if (!(s1 > 0.0)) throw degenerate_statistic("feasible_variance: S^{n,1} must be positive");
  const double c = std::exp2(r_hat - d);
  double num = v11 + c * c * v22 - 2.0 * c * v12;
  double den = s1 * kLog2;
  return num / (den * den);
}

double feasible_variance_sq(const PerturbedBlocks& blocks, double r_hat, double s1) {
  if (!(s1 > 0.0)) throw degenerate_statistic("feasible_variance_sq: S^{n,1} must be positive");
  const double c = std::exp2(r_hat - blocks.d);
  double num = 0.0;
  for (int i = 0; i < blocks.n_blocks(); ++i) {
    double diff = blocks.f1[i] - c * blocks.f2[i];
    num += diff * diff;
  }
  num *= 4.0 * blocks.d * blocks.d * blocks.delta_n;
  const double den = s1 * kLog2;
  return num / (den * den);
}

double feasible_variance_prime(double s1, double r_hat, double v11, double v12, int d) {
  if (!(s1 > 0.0)) throw degenerate_statistic("feasible_variance_prime: S^{n,1} must be positive");
  const double c = std::exp2(r_hat - d);
  const double den = s1 * kLog2;
  return 2.0 * (v11 - c * v12) / (den * den);
}

TestDecision test_max_rank(double r_hat, double v_feasible, double delta_n,
                           const HypothesisSpec& hyp, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("test_max_rank: alpha must lie in (0,1)");
  if (v_feasible < 0.0) throw degenerate_statistic("test_max_rank: negative feasible variance");
  TestDecision dec;
  dec.hypothesis = hyp;
  dec.alpha = alpha;
  const double band = std::sqrt(delta_n * v_feasible);
  const double dev = r_hat - hyp.r;
  dec.standardized =
      band > 0.0 ? dev / band
                 : (dev == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), dev));
  switch (hyp.kind) {
    case HypothesisKind::equal:
      dec.quantile = stats::z_two_sided(alpha);
      dec.reject = std::abs(dev) > dec.quantile * band;
      break;
    case HypothesisKind::leq:
      dec.quantile = stats::z_one_sided(alpha);
      dec.reject = dev > dec.quantile * band;
      break;
    case HypothesisKind::geq:
      dec.quantile = stats::z_one_sided(alpha);
      dec.reject = dev < -dec.quantile * band;
      break;
  }
  return dec;
}

RankTestReport analyze(const PerturbedBlocks& blocks, const std::vector<HypothesisSpec>& hypotheses,
                       const std::vector<double>& alphas) {
  RankTestReport rep;
  rep.d = blocks.d;
  rep.delta_n = blocks.delta_n;
  rep.t_max = blocks.t_max;
  rep.n_blocks = blocks.n_blocks();
  SPair s = s_statistics(blocks, blocks.t_max);
  rep.s1 = s.s1;
  rep.s2 = s.s2;
  rep.r_hat = rank_estimate(s.s1, s.s2, blocks.d);
  rep.r_rounded = rank_rounded(rep.r_hat, blocks.d);
  VarianceTriple v = variance_estimators(blocks, blocks.t_max);
  rep.v11 = v.v11;
  rep.v22 = v.v22;
  rep.v12 = v.v12;
  rep.v_feasible = feasible_variance_sq(blocks, rep.r_hat, s.s1);
  rep.v_prime = feasible_variance_prime(s.s1, rep.r_hat, v.v11, v.v12, blocks.d);
  for (const auto& hyp : hypotheses)
    for (double alpha : alphas)
      rep.decisions.push_back(test_max_rank(rep.r_hat, rep.v_feasible, rep.delta_n, hyp, alpha));
  return rep;
}

double SpotSeries::median_valid() const {
  std::vector<double> vals;
  vals.reserve(r_hat.size());
  for (size_t i = 0; i < r_hat.size(); ++i)
    if (valid[i]) vals.push_back(r_hat[i]);
  if (vals.empty()) return std::numeric_limits<double>::quiet_NaN();
  size_t mid = vals.size() / 2;
  std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
  double hi = vals[mid];
  if (vals.size() % 2 == 1) return hi;
  double lo = *std::max_element(vals.begin(), vals.begin() + mid);
  return 0.5 * (lo + hi);
}

SpotSeries spot_rank_series(const PerturbedBlocks& blocks, int k_n) {
  const int d = blocks.d;
  const int nb = blocks.n_blocks();
  if (k_n < 4 * d) throw config_error("spot_rank_series: k_n must be >= 4d");
  if (k_n > nb) throw config_error("spot_rank_series: k_n exceeds the block count");
  SpotSeries out;
  out.k_n = k_n;
  const int n_windows = nb - k_n + 1;
  out.r_hat.resize(n_windows);
  out.valid.assign(n_windows, 1);

  std::vector<double> p1(nb + 1, 0.0), p2(nb + 1, 0.0);
  for (int i = 0; i < nb; ++i) {
    p1[i + 1] = p1[i] + blocks.f1[i];
    p2[i + 1] = p2[i] + blocks.f2[i];
  }
  for (int i = 0; i < n_windows; ++i) {
    double w1 = p1[i + k_n] - p1[i];
    double w2 = p2[i + k_n] - p2[i];
    if (!(w1 > 0.0) || !(w2 > 0.0)) {
      out.valid[i] = 0;
      out.n_invalid++;
      out.r_hat[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    out.r_hat[i] = d - std::log2(w2 / w1);
  }
  return out;
}

ConstRankReport const_rank_statistics(const PerturbedBlocks& blocks, const SpotSeries& spot,
                                      double p, double r_hat, double s1) {
  if (!(p > 0.0)) throw config_error("const_rank_statistics: p must be positive");
  if (!(s1 > 0.0)) throw degenerate_statistic("const_rank_statistics: S^{n,1} must be positive");
  const int d = blocks.d;
  const int nb = blocks.n_blocks();
  const int k_n = spot.k_n;
  const double dn = blocks.delta_n;
  const double t_max = blocks.t_max;
  const double w_n = 2.0 * d * k_n * dn;

  ConstRankReport rep;
  rep.k_n = k_n;
  rep.p = p;
  rep.spot = spot;
  rep.null_note =
      "null: rank constant on [0,T] with R_T >= 1; R_T = 0 calls for the separate "
      "double test with the maximal-rank test at r = 0";

  // A(p): disjoint windows sampled at block indices 0, k_n, 2 k_n, ...
  const int m_windows = static_cast<int>(std::floor(t_max / w_n + 1e-9));
  const double cap = std::pow(static_cast<double>(d + 1), p);
  double a_sum = 0.0;
  for (int i = 0; i + 2 <= m_windows; ++i) {
    const int idx = i * k_n;
    if (idx >= static_cast<int>(spot.r_hat.size()) || !spot.valid[idx]) {
      rep.n_skipped++;
      continue;
    }
    a_sum += std::min(std::pow(std::abs(spot.r_hat[idx]), p), cap);
    rep.n_windows++;
  }
  rep.a_p = w_n * a_sum;
  rep.a_n_T = w_n * (m_windows - 1);
  rep.b_stat = rep.a_p - rep.a_n_T * pow_signed(r_hat, p);

  // Vbar^{n,kk'}: sliding windows weight each block's f-products by the
  // squared centered inverse local slope of S^{n,1}.  The raw-S weights
  // already carry Delta^{2(R-d)} and the f-products Delta^{2(d-R)}, so the
  // prefactor is 4 d^2 Delta_n; together with the 2^{...} weights below this
  // is what makes the combination converge to the limit variance of B at
  // every rank, not only at full rank.
  std::vector<double> p1(nb + 1, 0.0);
  for (int i = 0; i < nb; ++i) p1[i + 1] = p1[i] + blocks.f1[i];
  const double c = std::exp2(r_hat - d);
  const double pref = 4.0 * d * d * dn;
  double sum11 = 0.0, sum22 = 0.0, sum12 = 0.0, sum_sq = 0.0;
  for (int i = 0; i + k_n + 1 <= nb; ++i) {
    double s_inc = 2.0 * d * dn * (p1[i + k_n] - p1[i]);
    if (!(s_inc > 0.0)) {
      rep.n_skipped++;
      continue;
    }
    double wgt = w_n / s_inc - t_max / s1;
    double w2 = wgt * wgt;
    sum11 += w2 * blocks.f1[i] * blocks.f1[i];
    sum22 += w2 * blocks.f2[i] * blocks.f2[i];
    sum12 += w2 * blocks.f1[i] * blocks.f2[i];
    double diff = blocks.f1[i] - c * blocks.f2[i];
    sum_sq += w2 * diff * diff;
  }
  rep.vbar11 = pref * sum11;
  rep.vbar22 = pref * sum22;
  rep.vbar12 = pref * sum12;
  const double coef = p * std::pow(std::abs(r_hat), p - 1.0) / kLog2;
  rep.vbar = coef * coef * pref * sum_sq;

  const double capped = std::min(rep.vbar, 1.0 / std::sqrt(dn));
  const double denom = std::sqrt(dn * capped);
  rep.z_stat = denom > 0.0 ? rep.b_stat / denom
                           : (rep.b_stat == 0.0
                                  ? 0.0
                                  : std::copysign(std::numeric_limits<double>::infinity(), rep.b_stat));
  return rep;
}

ConstRankDecision test_const_rank(const ConstRankReport& report, double delta_n, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("test_const_rank: alpha must lie in (0,1)");
  ConstRankDecision dec;
  dec.alpha = alpha;
  dec.quantile = stats::z_one_sided(alpha);
  const double capped = std::min(report.vbar, 1.0 / std::sqrt(delta_n));
  dec.reject = report.b_stat < -dec.quantile * std::sqrt(delta_n * capped);
  return dec;
}

int default_kn(double delta_n, int d) {
  if (!(delta_n > 0.0 && delta_n < 1.0)) throw config_error("default_kn: delta_n must lie in (0,1)");
  double v = std::pow(delta_n, -0.8);
  long long k = static_cast<long long>(std::ceil(v - 1e-9));
  return static_cast<int>(std::max<long long>(4LL * d, k));
}

}  // namespace volrank::ranktest
