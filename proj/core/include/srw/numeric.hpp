#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace srw {

/// Pairwise (cascade) summation. Deterministic for a given element order and
/// O(eps * log n) error growth, which keeps aggregation independent of how
/// work was distributed across threads.
double pairwise_sum(std::span<const double> values);

double mean(std::span<const double> values);

/// Unbiased sample variance (n-1 denominator); 0 for fewer than 2 values.
double sample_variance(std::span<const double> values);

double sample_sd(std::span<const double> values);

/// Median of a copy of `values` (average of the two middle order statistics
/// for even sizes).
double median(std::vector<double> values);

/// Inverse standard normal CDF by Acklam's rational approximation
/// (relative error below 1.2e-9). p must lie in (0,1).
double normal_quantile(double p);

/// log N(x | mean, var), var > 0.
double log_normal_pdf(double x, double mean, double var);

/// Log-density of an observed sample variance s2 computed from `count` iid
/// normal draws with true standard deviation sigma:
/// (count-1) * s2 / sigma^2 ~ chi-square(count-1).
double log_sample_variance_pdf(double s2, double sigma, std::int64_t count);

}  // namespace srw
