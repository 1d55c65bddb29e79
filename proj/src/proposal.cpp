#include "mafla/proposal.hpp"

#include <sstream>

#include "mafla/diffnet.hpp"
#include "mafla/stable_law.hpp"

namespace mafla {

double c_alpha(double alpha) {
  if (!(alpha >= 1.0 + 1e-6 && alpha <= 2.0)) {
    std::ostringstream os;
    os << "c_alpha: alpha=" << alpha << " outside (1, 2]";
    throw ParameterError(os.str());
  }
  if (alpha == 2.0) return 1.0;
  return std::exp(std::lgamma(alpha - 1.0) - 2.0 * std::lgamma(0.5 * alpha));
}

DriftConfig DriftConfig::make(double alpha, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ParameterError("DriftConfig: tau must be positive");
  DriftConfig cfg;
  cfg.alpha = alpha;
  cfg.tau = tau;
  cfg.c_alpha = mafla::c_alpha(alpha);
  cfg.kappa = 1.0 / (alpha * cfg.c_alpha * tau);
  cfg.noise_scale = alpha == 2.0 ? std::sqrt(tau) : std::pow(tau, 1.0 / alpha);
  return cfg;
}

void DriftConfig::validate() const {
  mafla::c_alpha(alpha);
  if (!(tau > 0.0)) throw ParameterError("DriftConfig: tau must be positive");
  if (!(c_alpha > 0.0) || !(kappa > 0.0) || !std::isfinite(kappa)) {
    throw ParameterError("DriftConfig: inconsistent derived constants");
  }
}

JacobianMode jacobian_mode_from_string(const std::string& s) {
  if (s == "analytic") return JacobianMode::analytic;
  if (s == "finite_difference") return JacobianMode::finite_difference;
  if (s == "network") return JacobianMode::network;
  throw ParameterError("unknown jacobian mode '" + s + "'");
}

void jacobian_vjp(const ScoreModel& score, ConstSpan x, ConstSpan v, const DriftConfig& cfg, JacobianMode mode,
                  MutSpan out) {
  switch (mode) {
    case JacobianMode::analytic:
      if (!score.analytic_vjp()) throw CapabilityError("jacobian_vjp: no analytic Jacobian for this score");
      score.score_vjp(x, v, out);
      break;
    case JacobianMode::finite_difference:
      score.ScoreModel::score_vjp(x, v, out);
      break;
    case JacobianMode::network:
      if (dynamic_cast<const diffnet::NetScore*>(&score) == nullptr) {
        throw CapabilityError("jacobian_vjp: network mode needs a learned score");
      }
      score.score_vjp(x, v, out);
      break;
  }
  for (double& o : out) o *= cfg.c_alpha;
}

ScaledScoreDrift::ScaledScoreDrift(const ScoreModel& score, double c, JacobianMode mode)
    : score_(score), c_(c), mode_(mode) {}

void ScaledScoreDrift::drift(ConstSpan x, MutSpan out) const {
  score_.score(x, out);
  for (double& o : out) o *= c_;
}

void ScaledScoreDrift::drift_vjp(ConstSpan x, ConstSpan v, MutSpan out) const {
  if (mode_ == JacobianMode::finite_difference && !score_.analytic_vjp()) {
    score_.ScoreModel::score_vjp(x, v, out);
  } else {
    score_.score_vjp(x, v, out);
  }
  for (double& o : out) o *= c_;
}

void drift(const ScoreModel& score, ConstSpan x, const DriftConfig& cfg, MutSpan out) {
  score.score(x, out);
  for (double& o : out) o *= cfg.c_alpha;
}

ProposalPair make_pair(ConstSpan x, ConstSpan x_prime, const DriftField& field, const DriftConfig& cfg) {
  const std::size_t d = x.size();
  if (x_prime.size() != d || field.dim() != d) throw ParameterError("make_pair: dimension mismatch");
  ProposalPair p;
  p.x.assign(x.begin(), x.end());
  p.x_prime.assign(x_prime.begin(), x_prime.end());
  p.drift_x.resize(d);
  p.drift_xprime.resize(d);
  field.drift(p.x, p.drift_x);
  field.drift(p.x_prime, p.drift_xprime);
  if (!all_finite(p.drift_x) || !all_finite(p.drift_xprime)) throw NumericError("make_pair: non-finite drift");
  p.r.resize(d);
  p.r_rev.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    p.r[j] = p.x_prime[j] - p.x[j] - cfg.tau * p.drift_x[j];
    p.r_rev[j] = p.x[j] - p.x_prime[j] - cfg.tau * p.drift_xprime[j];
  }
  return p;
}

ProposalPair propose(ConstSpan x, const DriftField& field, const DriftConfig& cfg, RngStream& rng, bool zero_noise) {
  const std::size_t d = x.size();
  Vec b(d);
  field.drift(x, b);
  if (!all_finite(b)) throw NumericError("propose: non-finite drift");
  Vec xi(d, 0.0);
  if (!zero_noise) stable::draw_isotropic_unit(cfg.alpha, xi, rng);
  Vec xp(d);
  for (std::size_t j = 0; j < d; ++j) xp[j] = x[j] + (cfg.tau * b[j] + cfg.noise_scale * xi[j]);
  if (!all_finite(xp)) throw NumericError("propose: non-finite proposal");
  return make_pair(x, xp, field, cfg);
}

ProposalScores proposal_scores(const ProposalPair& pair, const DriftField& field, const DriftConfig& cfg) {
  const std::size_t d = pair.x.size();
  ProposalScores s;
  s.fwd_xprime.resize(d);
  s.fwd_x.resize(d);
  s.rev_x.resize(d);
  s.rev_xprime.resize(d);
  Vec jr(d);
  Vec jrr(d);
  field.drift_vjp(pair.x, pair.r, jr);
  field.drift_vjp(pair.x_prime, pair.r_rev, jrr);
  const double k = cfg.kappa;
  for (std::size_t j = 0; j < d; ++j) {
    s.fwd_xprime[j] = -k * pair.r[j];
    s.fwd_x[j] = k * (pair.r[j] + cfg.tau * jr[j]);
    s.rev_x[j] = -k * pair.r_rev[j];
    s.rev_xprime[j] = k * (pair.r_rev[j] + cfg.tau * jrr[j]);
  }
  return s;
}

}  // namespace mafla
