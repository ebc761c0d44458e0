#pragma once
// Scalar statistics support: standard-normal CDF / quantile, one- and
// two-sample Kolmogorov-Smirnov tests, and running summary helpers.

#include <cstddef>
#include <vector>

namespace volrank::stats {

double normal_cdf(double x);

// Inverse standard-normal CDF.  Rational minimax approximation refined by one
// Halley step on erfc; absolute error well below 1e-9 on (0, 1).
double normal_quantile(double p);

// Symmetric quantile z_a with P(|Z| > z_a) = a.
double z_two_sided(double alpha);
// One-sided quantile z'_a with P(Z > z'_a) = a.
double z_one_sided(double alpha);

struct KsResult {
  double distance = 0.0;  // sup-norm distance
  double p_value = 1.0;   // asymptotic
  std::size_t n = 0;
};

// One-sample KS against the standard normal CDF.  Requires >= 20 finite
// samples (throws config_error otherwise).
KsResult ks_normal(std::vector<double> samples);

// Two-sample KS.
KsResult ks_two_sample(std::vector<double> x, std::vector<double> y);

// Survival function of the Kolmogorov distribution at lambda.
double kolmogorov_sf(double lambda);

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n-1)
  double se = 0.0;  // sd / sqrt(n)
};
Summary summarize(const std::vector<double>& xs);

}  // namespace volrank::stats
