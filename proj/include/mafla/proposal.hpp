#pragma once

#include <string>

#include "mafla/common.hpp"
#include "mafla/rng.hpp"
#include "mafla/targets.hpp"

namespace mafla {

/// Drift constant Gamma(alpha - 1) / Gamma(alpha / 2)^2 for alpha in (1, 2].
/// Rejects alpha < 1 + 1e-6, where the numerator pole makes it meaningless.
double c_alpha(double alpha);

/// Fractional Langevin step parameters.
struct DriftConfig {
  double alpha = 2.0;
  double tau = 0.01;
  double c_alpha = 1.0;
  double kappa = 50.0;  // 1 / (alpha c_alpha tau)
  double noise_scale = 0.1;  // tau^(1/alpha)

  static DriftConfig make(double alpha, double tau);
  void validate() const;
};

/// Drift b(x) used by the fractional proposal, with its transposed Jacobian.
class DriftField {
 public:
  virtual ~DriftField() = default;
  virtual std::size_t dim() const = 0;
  virtual void drift(ConstSpan x, MutSpan out) const = 0;
  /// J_b(x)^T v.
  virtual void drift_vjp(ConstSpan x, ConstSpan v, MutSpan out) const = 0;
};

enum class JacobianMode { analytic, finite_difference, network };

JacobianMode jacobian_mode_from_string(const std::string& s);

/// b(x) = c_alpha * s(x).
class ScaledScoreDrift final : public DriftField {
 public:
  ScaledScoreDrift(const ScoreModel& score, double c, JacobianMode mode = JacobianMode::finite_difference);
  std::size_t dim() const override { return score_.dim(); }
  void drift(ConstSpan x, MutSpan out) const override;
  void drift_vjp(ConstSpan x, ConstSpan v, MutSpan out) const override;
  const ScoreModel& score_model() const { return score_; }
  double scale() const { return c_; }

 private:
  const ScoreModel& score_;
  double c_;
  JacobianMode mode_;
};

/// c_alpha * s(x) written into out.
void drift(const ScoreModel& score, ConstSpan x, const DriftConfig& cfg, MutSpan out);

/// c_alpha * (Jacobian of s at x)^T v. Analytic mode requires a score model
/// with an analytic Jacobian (quadratic log-density or a network); the
/// network mode requires a score model backed by a network.
void jacobian_vjp(const ScoreModel& score, ConstSpan x, ConstSpan v, const DriftConfig& cfg, JacobianMode mode,
                  MutSpan out);

/// A forward move x -> x' together with both drifts and residuals.
struct ProposalPair {
  Vec x;
  Vec x_prime;
  Vec r;      // x' - x - tau b(x)
  Vec r_rev;  // x - x' - tau b(x')
  Vec drift_x;
  Vec drift_xprime;
};

/// Completes a pair from (x, x') by evaluating the drift at both points.
ProposalPair make_pair(ConstSpan x, ConstSpan x_prime, const DriftField& field, const DriftConfig& cfg);

/// x' = x + tau b(x) + tau^(1/alpha) xi with xi isotropic SaS(1).
/// If zero_noise is set the noise draw is skipped (test hook).
ProposalPair propose(ConstSpan x, const DriftField& field, const DriftConfig& cfg, RngStream& rng,
                     bool zero_noise = false);

/// The four density-free proposal-score proxies, in the order
/// grad_{x'} log q(x'|x), grad_x log q(x'|x), grad_x log q(x|x'), grad_{x'} log q(x|x').
struct ProposalScores {
  Vec fwd_xprime;
  Vec fwd_x;
  Vec rev_x;
  Vec rev_xprime;
};

ProposalScores proposal_scores(const ProposalPair& pair, const DriftField& field, const DriftConfig& cfg);

}  // namespace mafla
