#include "sli/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sli {

std::vector<double> fractional_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    // Positions i..j-1 (0-based) hold ranks i+1..j; their mean is (i+1+j)/2.
    const double shared = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = shared;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("correlation: length mismatch (" + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()) + ")");
  if (x.size() < 2) throw std::invalid_argument("correlation: need at least 2 observations");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("correlation undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("spearman: length mismatch (" + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()) + ")");
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  return pearson(rx, ry);
}

namespace {

std::vector<double> sorted_copy(std::span<const double> x, const char* what) {
  if (x.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

double median(std::span<const double> x) {
  const auto s = sorted_copy(x, "median");
  const std::size_t n = s.size();
  if (n % 2 == 1) return s[n / 2];
  return 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

double quartile(std::span<const double> x, int percent) {
  if (percent != 25 && percent != 50 && percent != 75)
    throw std::invalid_argument("quartile: percent must be 25, 50 or 75");
  if (percent == 50) return median(x);
  const auto s = sorted_copy(x, "quartile");
  // ceil(n p / 100) in integer arithmetic; at least 1.
  const std::size_t rank =
      std::max<std::size_t>(1, (s.size() * static_cast<std::size_t>(percent) + 99) / 100);
  return s[rank - 1];
}

double std_normal_cdf(double z) {
  if (!std::isfinite(z)) throw std::invalid_argument("std_normal_cdf: non-finite input");
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double wald_p_value(double coefficient, double std_error) {
  if (!(std_error > 0.0)) throw std::invalid_argument("wald_p_value: standard error must be > 0");
  if (!std::isfinite(coefficient) || !std::isfinite(std_error))
    throw std::invalid_argument("wald_p_value: non-finite input");
  const double z = std::abs(coefficient) / std_error;
  return std::erfc(z / std::numbers::sqrt2);
}

}  // namespace sli
