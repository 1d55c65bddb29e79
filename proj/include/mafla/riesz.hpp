#pragma once

#include <vector>

#include "mafla/common.hpp"
#include "mafla/proposal.hpp"
#include "mafla/targets.hpp"

namespace mafla::riesz {

/// Truncated fractional centered-difference drift of order gamma = alpha - 2.
struct RieszConfig {
  double order = 0.0;  // gamma in (-1, 0]
  double h = 1e-2;
  std::size_t K = 0;
  // Drop the h^(-gamma) prefactor so that K = 0 gives exactly c_alpha s(x).
  bool normalize_k0 = true;

  void validate() const;
};

/// Reciprocal Gamma function; exactly zero at non-positive integers.
double rgamma(double x);

/// Coefficients g_{gamma,k} for k = -K..K.
struct CoefficientTable {
  double gamma = 0.0;
  std::vector<double> coeffs;  // index k + K

  std::size_t K() const { return coeffs.empty() ? 0 : (coeffs.size() - 1) / 2; }
  double at(long k) const { return coeffs[static_cast<std::size_t>(k + static_cast<long>(K()))]; }
};

CoefficientTable riesz_coeffs(double gamma, std::size_t K);

struct PathRatio {
  double ratio = 1.0;
  bool clamped = false;
};

/// Trapezoid nodes for a path of the given length: max(9, ceil(33 len) + 1).
std::size_t default_nodes(double length);

/// p(x_shifted) / p(x) from the trapezoid rule on the score along the segment.
PathRatio density_ratio_along_path(const ScoreModel& score, ConstSpan x, ConstSpan x_shifted, std::size_t n_nodes);

/// Coordinate-wise drift
///   b_j(x) = pre * sum_{k=-K..K} g_k p(x - k h e_j)/p(x) s_j(x - k h e_j),
/// with pre = 1 when normalize_k0 is set and h^(2 - alpha) otherwise.
/// Sets *clamped when any path ratio hit the clamp.
void riesz_drift(const ScoreModel& score, ConstSpan x, const RieszConfig& cfg, double alpha, MutSpan out,
                 bool* clamped = nullptr);

/// DriftField wrapper; the transposed Jacobian is a full central-difference Jacobian.
class RieszDrift final : public DriftField {
 public:
  RieszDrift(const ScoreModel& score, RieszConfig cfg, double alpha);
  std::size_t dim() const override { return score_.dim(); }
  void drift(ConstSpan x, MutSpan out) const override;
  void drift_vjp(ConstSpan x, ConstSpan v, MutSpan out) const override;

 private:
  const ScoreModel& score_;
  RieszConfig cfg_;
  double alpha_;
};

}  // namespace mafla::riesz
