#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mafla/common.hpp"

namespace mafla::evalkit {

/// Exact 1-D Wasserstein-1 distance between two empirical measures.
/// Unequal sizes are handled by integrating |F^-1 - G^-1| over merged breakpoints.
double w1_1d(ConstSpan a, ConstSpan b);

/// Mean 1-D W1 over n_proj seeded uniform directions on the sphere.
double sliced_w1(const Matrix& a, const Matrix& b, std::size_t n_proj = 256, std::uint64_t seed = 0);

/// Type-7 (linear interpolation) quantile of finite values; sorts a copy.
double quantile(ConstSpan v, double beta);

enum class Statistic { norm_radial, per_coordinate_mean };

Statistic statistic_from_string(const std::string& s);
std::string to_string(Statistic s);

/// |q_beta(a) - q_beta(b)| of two scalar samples.
double quantile_error_1d(ConstSpan a, ConstSpan b, double beta);

/// Tail-quantile error between samples and reference.
///   norm_radial: statistic is |x - m|, with m the reference mean
///   per_coordinate_mean: mean over coordinates of marginal quantile errors
double quantile_error(const Matrix& samples, const Matrix& reference, double beta,
                      Statistic statistic = Statistic::norm_radial);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov p-value.
KsResult ks_two_sample(ConstSpan a, ConstSpan b);

/// Rows with any non-finite coordinate removed; the count is returned through dropped.
Matrix finite_rows(const Matrix& m, std::size_t* dropped = nullptr);

struct MetricsConfig {
  std::size_t n_proj = 256;
  std::uint64_t seed = 0;
  Statistic statistic = Statistic::norm_radial;
  // Subsample the pooled chain to at most this many rows (0 = all).
  std::size_t max_samples = 0;
};

struct MetricReport {
  double w1 = 0.0;
  double q95_err = 0.0;
  double q99_err = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_reference = 0;
  std::size_t n_dropped = 0;
  Statistic statistic = Statistic::norm_radial;
  std::uint64_t seed = 0;
};

MetricReport report(const Matrix& samples, const Matrix& reference, const MetricsConfig& cfg);

}  // namespace mafla::evalkit
