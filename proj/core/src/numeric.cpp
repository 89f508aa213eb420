#include "srw/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "srw/errors.hpp"

namespace srw {

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n <= 32) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return pairwise_sum(values) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double m = mean(values);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = values[i] - m;
    sq[i] = d * d;
  }
  return pairwise_sum(sq) / static_cast<double>(n - 1);
}

double sample_sd(std::span<const double> values) { return std::sqrt(sample_variance(values)); }

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of empty range");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal_quantile: p must lie in (0,1)");

  // Acklam's rational approximation, three-region form.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  static constexpr double p_low = 0.02425;
  static constexpr double p_high = 1.0 - p_low;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > p_high) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double log_normal_pdf(double x, double mean, double var) {
  static constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
  const double d = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var)) - d * d / (2.0 * var);
}

double log_sample_variance_pdf(double s2, double sigma, std::int64_t count) {
  // T = nu * s2 / sigma^2 follows chi-square(nu), nu = count - 1;
  // p(s2) = chi2_pdf(T; nu) * nu / sigma^2.
  const double nu = static_cast<double>(count - 1);
  const double sigma2 = sigma * sigma;
  const double t = nu * s2 / sigma2;
  static constexpr double kLog2 = 0.69314718055994530941723212145818;
  const double log_chi2 =
      (0.5 * nu - 1.0) * std::log(t) - 0.5 * t - 0.5 * nu * kLog2 - std::lgamma(0.5 * nu);
  return log_chi2 + std::log(nu / sigma2);
}

}  // namespace srw
