#pragma once

#include <span>
#include <vector>

namespace sli {

/// Fractional (average) ranks, 1-based. Tied values share the mean of the
/// ranks they occupy, so the ranks always sum to n(n+1)/2.
std::vector<double> fractional_ranks(std::span<const double> x);

/// Pearson product-moment correlation. Throws if either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation: Pearson correlation of fractional ranks.
/// Without ties this equals 1 - 6 sum(d^2) / (n (n^2 - 1)).
/// Throws std::invalid_argument on length mismatch, n < 2, or a constant input.
double spearman(std::span<const double> x, std::span<const double> y);

/// Middle order statistic, or the mean of the two middle ones for even n.
double median(std::span<const double> x);

/// Nearest-rank quartile x(ceil(n p / 100)) for p in {25, 50, 75}.
/// p = 50 returns median(x).
double quartile(std::span<const double> x, int percent);

/// Standard normal CDF, computed as erfc(-z / sqrt(2)) / 2. Absolute error is
/// at the level of double rounding (well under 1e-10).
double std_normal_cdf(double z);

/// Two-sided Wald p-value 2 (1 - Phi(|coefficient| / std_error)).
/// Evaluated as erfc(|z| / sqrt(2)) so small tail values keep full precision.
double wald_p_value(double coefficient, double std_error);

}  // namespace sli
