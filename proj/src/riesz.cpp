#include "mafla/riesz.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

namespace mafla::riesz {

namespace {

constexpr double kLogClamp = 690.7755278982137;  // log(1e300)

}  // namespace

void RieszConfig::validate() const {
  if (!(order > -1.0 && order <= 0.0)) throw ParameterError("RieszConfig: order must lie in (-1, 0]");
  if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("RieszConfig: h must be positive");
}

double rgamma(double x) {
  if (x <= 0.0 && x == std::floor(x)) return 0.0;
  if (x < 0.5) return std::sin(std::numbers::pi * x) * std::tgamma(1.0 - x) / std::numbers::pi;
  if (x > 171.0) return 0.0;
  return 1.0 / std::tgamma(x);
}

CoefficientTable riesz_coeffs(double gamma, std::size_t K) {
  if (!(gamma > -1.0 && gamma <= 0.0)) {
    std::ostringstream os;
    os << "riesz_coeffs: gamma=" << gamma << " outside (-1, 0]";
    throw ParameterError(os.str());
  }
  CoefficientTable t;
  t.gamma = gamma;
  t.coeffs.assign(2 * K + 1, 0.0);
  const double g1 = std::tgamma(gamma + 1.0);
  // The centre coefficient equals the drift constant; use the same routine so
  // that K = 0 reproduces c_alpha s(x) bit for bit.
  t.coeffs[K] = c_alpha(gamma + 2.0);
  for (std::size_t k = 1; k <= K; ++k) {
    const double kk = static_cast<double>(k);
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double g = sign * g1 * rgamma(0.5 * gamma - kk + 1.0) * rgamma(0.5 * gamma + kk + 1.0);
    t.coeffs[K + k] = g;
    t.coeffs[K - k] = g;
  }
  return t;
}

std::size_t default_nodes(double length) {
  const double n = std::ceil(33.0 * length) + 1.0;
  return std::max<std::size_t>(9, static_cast<std::size_t>(std::min(n, 1e7)));
}

PathRatio density_ratio_along_path(const ScoreModel& score, ConstSpan x, ConstSpan x_shifted, std::size_t n_nodes) {
  if (n_nodes < 2) throw ParameterError("density_ratio_along_path: need at least 2 nodes");
  const std::size_t d = x.size();
  if (x_shifted.size() != d) throw ParameterError("density_ratio_along_path: dimension mismatch");
  Vec delta(d);
  bool zero = true;
  for (std::size_t j = 0; j < d; ++j) {
    delta[j] = x_shifted[j] - x[j];
    zero = zero && delta[j] == 0.0;
  }
  if (zero) return {};
  Vec y(d), s(d);
  double acc = 0.0;
  const double step = 1.0 / static_cast<double>(n_nodes - 1);
  for (std::size_t m = 0; m < n_nodes; ++m) {
    const double t = static_cast<double>(m) * step;
    for (std::size_t j = 0; j < d; ++j) y[j] = x[j] + t * delta[j];
    score.score(y, s);
    const double w = (m == 0 || m + 1 == n_nodes) ? 0.5 : 1.0;
    acc += w * dot(s, delta);
  }
  double lr = acc * step;
  PathRatio out;
  if (!(std::abs(lr) <= kLogClamp)) {
    out.clamped = true;
    lr = std::isnan(lr) ? 0.0 : std::clamp(lr, -kLogClamp, kLogClamp);
  }
  out.ratio = std::exp(lr);
  return out;
}

void riesz_drift(const ScoreModel& score, ConstSpan x, const RieszConfig& cfg, double alpha, MutSpan out,
                 bool* clamped) {
  cfg.validate();
  if (std::abs(cfg.order - (alpha - 2.0)) > 1e-12) throw ParameterError("riesz_drift: order must equal alpha - 2");
  const std::size_t d = x.size();
  const auto table = riesz_coeffs(cfg.order, cfg.K);
  const double pre = cfg.normalize_k0 ? 1.0 : std::pow(cfg.h, -cfg.order);
  const long K = static_cast<long>(cfg.K);
  Vec s0(d);
  score.score(x, s0);
  Vec y(d), sy(d);
  bool any_clamped = false;
  for (std::size_t j = 0; j < d; ++j) {
    double sum = table.at(0) * s0[j];
    for (long k = -K; k <= K; ++k) {
      if (k == 0) continue;
      const double g = table.at(k);
      if (g == 0.0) continue;
      std::copy(x.begin(), x.end(), y.begin());
      const double shift = static_cast<double>(k) * cfg.h;
      y[j] -= shift;
      const auto pr = density_ratio_along_path(score, x, y, default_nodes(std::abs(shift)));
      any_clamped = any_clamped || pr.clamped;
      score.score(y, sy);
      sum += g * pr.ratio * sy[j];
    }
    out[j] = pre * sum;
  }
  if (clamped != nullptr) *clamped = any_clamped;
}

RieszDrift::RieszDrift(const ScoreModel& score, RieszConfig cfg, double alpha)
    : score_(score), cfg_(cfg), alpha_(alpha) {
  cfg_.validate();
}

void RieszDrift::drift(ConstSpan x, MutSpan out) const { riesz_drift(score_, x, cfg_, alpha_, out); }

void RieszDrift::drift_vjp(ConstSpan x, ConstSpan v, MutSpan out) const {
  const std::size_t d = x.size();
  const double eps = std::max(1e-5, 1e-7 * norm2(x));
  Vec xp(x.begin(), x.end()), xm(x.begin(), x.end()), bp(d), bm(d);
  for (std::size_t m = 0; m < d; ++m) {
    xp[m] += eps;
    xm[m] -= eps;
    drift(xp, bp);
    drift(xm, bm);
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += (bp[j] - bm[j]) / (2.0 * eps) * v[j];
    out[m] = acc;
    xp[m] = x[m];
    xm[m] = x[m];
  }
}

}  // namespace mafla::riesz
