#include "volrank/stats.hpp"

#include <algorithm>
#include <cmath>

#include "volrank/errors.hpp"

namespace volrank::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Acklam's rational approximation to the probit function (relative error
// below 1.15e-9 on its own), used as the starting point.
double probit_approx(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  double q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw config_error("normal_quantile: p must lie in (0,1)");
  constexpr double two_pi = 6.283185307179586;
  double x = probit_approx(p);
  // One Halley refinement on F(x) - p.
  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(two_pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double z_two_sided(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("z_two_sided: alpha must lie in (0,1)");
  return normal_quantile(1.0 - alpha / 2.0);
}

double z_one_sided(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("z_one_sided: alpha must lie in (0,1)");
  return normal_quantile(1.0 - alpha);
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

KsResult ks_normal(std::vector<double> samples) {
  if (samples.size() < 20) throw config_error("ks_normal: need at least 20 samples");
  for (double v : samples)
    if (!std::isfinite(v)) throw config_error("ks_normal: samples must be finite");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = normal_cdf(samples[i]);
    d = std::max(d, std::max((i + 1.0) / n - f, f - static_cast<double>(i) / n));
  }
  double sn = std::sqrt(static_cast<double>(n));
  double lambda = (sn + 0.12 + 0.11 / sn) * d;
  return {d, kolmogorov_sf(lambda), n};
}

KsResult ks_two_sample(std::vector<double> x, std::vector<double> y) {
  if (x.empty() || y.empty()) throw config_error("ks_two_sample: empty sample");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const std::size_t nx = x.size(), ny = y.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < nx && j < ny) {
    double v = std::min(x[i], y[j]);
    while (i < nx && x[i] <= v) ++i;
    while (j < ny && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  double ne = static_cast<double>(nx) * ny / (nx + ny);
  double sn = std::sqrt(ne);
  double lambda = (sn + 0.12 + 0.11 / sn) * d;
  return {d, kolmogorov_sf(lambda), nx + ny};
}

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.n = xs.size();
  if (s.n == 0) return s;
  double m = 0.0;
  for (double v : xs) m += v;
  m /= s.n;
  double ss = 0.0;
  for (double v : xs) ss += (v - m) * (v - m);
  s.mean = m;
  s.sd = s.n > 1 ? std::sqrt(ss / (s.n - 1)) : 0.0;
  s.se = s.n > 0 ? s.sd / std::sqrt(static_cast<double>(s.n)) : 0.0;
  return s;
}

}  // namespace volrank::stats
