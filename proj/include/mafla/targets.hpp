#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mafla/common.hpp"
#include "mafla/rng.hpp"
#include "mafla/stable_law.hpp"

namespace mafla {

/// Anything that supplies a score field grad log p on R^dim.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;
  virtual std::size_t dim() const = 0;
  virtual void score(ConstSpan x, MutSpan out) const = 0;
  /// (Jacobian of the score at x)^T v. The default is a central difference
  /// along v, which is exact in the limit for symmetric (Hessian) Jacobians.
  virtual void score_vjp(ConstSpan x, ConstSpan v, MutSpan out) const;
  /// True when score_vjp is analytic rather than a finite difference.
  virtual bool analytic_vjp() const { return false; }
};

/// Target distribution with optional log-density and exact sampler.
class Target : public ScoreModel {
 public:
  virtual bool has_log_density() const { return false; }
  /// Unnormalized log-density. Throws CapabilityError when unavailable.
  virtual double log_density(ConstSpan x) const;
  virtual bool has_sampler() const { return false; }
  virtual Matrix sample(std::size_t n, RngStream& rng) const;
};

namespace targets {

enum class Kind { gaussian_mixture, cauchy_mixture, stable_location_mixture, product_stable, co_relaxation };

Kind kind_from_string(const std::string& s);
std::string to_string(Kind k);

struct Component {
  double weight = 1.0;
  Vec center;
  double scale = 1.0;
};

/// Declarative description of a synthetic target.
///
/// Scales follow the stable convention: a Gaussian component with scale s
/// has covariance 2 s^2 I.
struct TargetSpec {
  Kind kind = Kind::gaussian_mixture;
  std::vector<Component> components;
  double alpha_tgt = 2.0;
  std::size_t dim = 1;

  void validate() const;
};

/// Mixture of location-scale components, evaluated in log space.
class MixtureTarget final : public Target {
 public:
  explicit MixtureTarget(TargetSpec spec);

  const TargetSpec& spec() const { return spec_; }
  std::size_t dim() const override { return spec_.dim; }
  void score(ConstSpan x, MutSpan out) const override;
  void score_vjp(ConstSpan x, ConstSpan v, MutSpan out) const override;
  bool analytic_vjp() const override;
  bool has_log_density() const override;
  double log_density(ConstSpan x) const override;
  bool has_sampler() const override { return true; }
  Matrix sample(std::size_t n, RngStream& rng) const override;

  /// Exact sample that also reports the component index of each row.
  Matrix sample_labeled(std::size_t n, RngStream& rng, std::vector<std::size_t>& labels) const;
  /// Posterior component probabilities at x.
  std::vector<double> responsibilities(ConstSpan x) const;
  /// Log-density and score of one component.
  double component_log_density(std::size_t i, ConstSpan x, MutSpan grad) const;

 private:
  TargetSpec spec_;
  const stable::RadialTable* table_ = nullptr;
  std::vector<double> log_w_;
};

std::unique_ptr<MixtureTarget> make_target(const TargetSpec& spec);

/// Responsibility-weighted mixture score.
Vec mixture_score(const TargetSpec& spec, ConstSpan x);
Matrix exact_sample(const TargetSpec& spec, std::size_t n, RngStream& rng);
double log_density(const TargetSpec& spec, ConstSpan x);

}  // namespace targets
}  // namespace mafla
