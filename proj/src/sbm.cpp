#include "mafla/sbm.hpp"

#include <algorithm>
#include <sstream>

namespace mafla::sbm {

namespace {

constexpr double kEntropyEps = 1e-7;

Vec concat(ConstSpan a, ConstSpan b) {
  Vec z(a.begin(), a.end());
  z.insert(z.end(), b.begin(), b.end());
  return z;
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

AcceptanceForm form_from_string(const std::string& s) {
  if (s == "free") return AcceptanceForm::free;
  if (s == "antisymmetric") return AcceptanceForm::antisymmetric;
  throw ParameterError("unknown acceptance form '" + s + "'");
}

std::string to_string(AcceptanceForm f) { return f == AcceptanceForm::free ? "free" : "antisymmetric"; }

AcceptanceNet::AcceptanceNet(std::size_t dim, std::vector<std::size_t> hidden, diffnet::Activation act,
                             AcceptanceForm form)
    : dim_(dim), form_(form) {
  if (dim < 1) throw ParameterError("AcceptanceNet: dim must be >= 1");
  std::vector<std::size_t> widths{2 * dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  net_ = diffnet::Mlp(widths, act, diffnet::Head::scalar_logit);
}

double AcceptanceNet::logit(ConstSpan x_prime, ConstSpan x) const {
  const double e = net_.forward_scalar(concat(x_prime, x));
  if (form_ == AcceptanceForm::free) return e;
  return e - net_.forward_scalar(concat(x, x_prime));
}

double AcceptanceNet::logit_grad(ConstSpan x_prime, ConstSpan x, MutSpan gp, MutSpan gx) const {
  const std::size_t d = dim_;
  Vec g1(2 * d);
  double e = net_.value_and_input_grad(concat(x_prime, x), g1);
  if (form_ == AcceptanceForm::free) {
    std::copy(g1.begin(), g1.begin() + d, gp.begin());
    std::copy(g1.begin() + d, g1.end(), gx.begin());
    return e;
  }
  Vec g2(2 * d);
  e -= net_.value_and_input_grad(concat(x, x_prime), g2);
  for (std::size_t j = 0; j < d; ++j) {
    gp[j] = g1[j] - g2[d + j];
    gx[j] = g1[d + j] - g2[j];
  }
  return e;
}

void AcceptanceNet::backprop(ConstSpan x_prime, ConstSpan x, double e_bar, ConstSpan gp_bar, ConstSpan gx_bar,
                             MutSpan param_grad) const {
  const double one = 1.0;
  const double ob1 = e_bar;
  net_.backprop(concat(x_prime, x), ConstSpan(&ob1, 1), concat(gp_bar, gx_bar), ConstSpan(&one, 1), param_grad);
  if (form_ == AcceptanceForm::antisymmetric) {
    const double ob2 = -e_bar;
    Vec v = concat(gx_bar, gp_bar);
    for (double& t : v) t = -t;
    net_.backprop(concat(x, x_prime), ConstSpan(&ob2, 1), v, ConstSpan(&one, 1), param_grad);
  }
}

LogAcceptGradFn log_accept_grad(const AcceptanceNet& net) {
  return [&net](ConstSpan first, ConstSpan second) {
    const std::size_t d = net.dim();
    LogAcceptGrad g{Vec(d), Vec(d)};
    const double e = net.logit_grad(first, second, g.wrt_first, g.wrt_second);
    const double w = 1.0 - sigmoid(e);
    for (std::size_t j = 0; j < d; ++j) {
      g.wrt_first[j] *= w;
      g.wrt_second[j] *= w;
    }
    return g;
  };
}

LogAcceptGradFn constant_accept_grad(std::size_t dim) {
  return [dim](ConstSpan, ConstSpan) { return LogAcceptGrad{Vec(dim, 0.0), Vec(dim, 0.0)}; };
}

Deltas deltas(const ProposalPair& pair, const ScoreModel& target_score, const DriftField& field,
              const DriftConfig& cfg) {
  const std::size_t d = pair.x.size();
  Deltas out{Vec(2 * d), Vec(2 * d)};
  Vec sx(d), sxp(d);
  target_score.score(pair.x, sx);
  target_score.score(pair.x_prime, sxp);
  const auto q = proposal_scores(pair, field, cfg);
  for (std::size_t j = 0; j < d; ++j) {
    out.delta_p[j] = -sx[j];
    out.delta_p[d + j] = sxp[j];
    out.delta_q[j] = q.rev_x[j] - q.fwd_x[j];
    out.delta_q[d + j] = q.rev_xprime[j] - q.fwd_xprime[j];
  }
  return out;
}

Vec residual(const ProposalPair& pair, const LogAcceptGradFn& accept, const ScoreModel& target_score,
             const DriftField& field, const DriftConfig& cfg) {
  const std::size_t d = pair.x.size();
  if (!all_finite(pair.x) || !all_finite(pair.x_prime)) throw NumericError("residual: non-finite pair");
  const auto dl = deltas(pair, target_score, field, cfg);
  const auto fwd = accept(pair.x_prime, pair.x);
  const auto rev = accept(pair.x, pair.x_prime);
  Vec r(2 * d);
  for (std::size_t j = 0; j < d; ++j) {
    r[j] = fwd.wrt_second[j] - rev.wrt_first[j] - dl.delta_p[j] - dl.delta_q[j];
    r[d + j] = fwd.wrt_first[j] - rev.wrt_second[j] - dl.delta_p[d + j] - dl.delta_q[d + j];
  }
  return r;
}

double loss_l2(const Matrix& residuals) {
  if (residuals.rows == 0) throw ParameterError("loss_l2: empty batch");
  double s = 0.0;
  for (double v : residuals.data) s += v * v;
  return s / static_cast<double>(residuals.rows);
}

double loss_alpha(const Matrix& residuals, double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw ParameterError("loss_alpha: alpha outside (1, 2]");
  if (residuals.rows == 0) throw ParameterError("loss_alpha: empty batch");
  double s = 0.0;
  for (double v : residuals.data) s += alpha == 2.0 ? v * v : std::pow(std::abs(v), alpha);
  return s / static_cast<double>(residuals.rows);
}

double loss_combined(const Matrix& residuals, double alpha, const SBMConfig& cfg) {
  return loss_l2(residuals) + cfg.lambda_alpha * loss_alpha(residuals, alpha);
}

double entropy_term(ConstSpan a_values) {
  if (a_values.empty()) throw ParameterError("entropy_term: empty input");
  double s = 0.0;
  for (double a : a_values) {
    const double c = std::clamp(a, kEntropyEps, 1.0 - kEntropyEps);
    s += c * std::log(c) + (1.0 - c) * std::log1p(-c);
  }
  return s / static_cast<double>(a_values.size());
}

std::vector<std::pair<std::size_t, double>> default_eta_schedule(std::size_t epochs) {
  const std::size_t hold = epochs / 5;
  const std::size_t last = epochs > 0 ? epochs - 1 : 0;
  if (last <= hold) return {{0, 0.1}, {last, 1.0}};
  return {{0, 0.1}, {hold, 0.1}, {last, 1.0}};
}

void SBMConfig::validate() const {
  if (lambda_alpha < 0.0 || lambda_entropy < 0.0) throw ParameterError("SBMConfig: lambdas must be >= 0");
  if (batch_size == 0 || batches_per_epoch == 0) throw ParameterError("SBMConfig: empty batches");
  if (!(lr > 0.0)) throw ParameterError("SBMConfig: lr must be positive");
  if (!eta_schedule.empty()) {
    if (eta_schedule.front().first != 0) throw ParameterError("SBMConfig: eta schedule must start at epoch 0");
    for (std::size_t i = 0; i < eta_schedule.size(); ++i) {
      const auto [ep, eta] = eta_schedule[i];
      if (!(eta >= 0.0 && eta <= 1.0)) throw ParameterError("SBMConfig: eta outside [0, 1]");
      if (i > 0 && (ep < eta_schedule[i - 1].first || eta < eta_schedule[i - 1].second)) {
        throw ParameterError("SBMConfig: eta schedule must be nondecreasing");
      }
    }
  }
}

double SBMConfig::eta_at(std::size_t epoch) const {
  const auto sched = eta_schedule.empty() ? default_eta_schedule(epochs) : eta_schedule;
  if (epoch <= sched.front().first) return sched.front().second;
  for (std::size_t i = 1; i < sched.size(); ++i) {
    const auto [e0, v0] = sched[i - 1];
    const auto [e1, v1] = sched[i];
    if (epoch <= e1) {
      if (e1 == e0) return v1;
      const double t = static_cast<double>(epoch - e0) / static_cast<double>(e1 - e0);
      return v0 + t * (v1 - v0);
    }
  }
  return sched.back().second;
}

std::vector<std::pair<Vec, Vec>> curriculum_pairs(const DataSampler& data, const DriftField& field,
                                                  const DriftConfig& cfg, double eta, std::size_t n,
                                                  RngStream& rng) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ParameterError("curriculum_pairs: eta outside [0, 1]");
  const Matrix xs = data(n, rng);
  if (xs.rows != n) throw ParameterError("curriculum_pairs: data sampler returned wrong row count");
  std::vector<std::pair<Vec, Vec>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = xs.row(i);
    const auto p = propose(x, field, cfg, rng);
    Vec xp(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) xp[j] = eta * p.x_prime[j] + (1.0 - eta) * x[j];
    out.emplace_back(Vec(x.begin(), x.end()), std::move(xp));
  }
  return out;
}

PairTerms pair_terms(ConstSpan x, ConstSpan x_prime, const ScoreModel& target_score, const DriftField& field,
                     const DriftConfig& cfg) {
  const auto pair = make_pair(x, x_prime, field, cfg);
  auto dl = deltas(pair, target_score, field, cfg);
  return PairTerms{pair.x, pair.x_prime, std::move(dl.delta_p), std::move(dl.delta_q)};
}

LossParts sbm_loss(const AcceptanceNet& net, const std::vector<PairTerms>& batch, double alpha,
                   const SBMConfig& cfg, MutSpan grad) {
  if (batch.empty()) throw ParameterError("sbm_loss: empty batch");
  if (!(alpha > 1.0 && alpha <= 2.0)) throw ParameterError("sbm_loss: alpha outside (1, 2]");
  const std::size_t d = net.dim();
  const double n = static_cast<double>(batch.size());
  const bool want_grad = !grad.empty();
  LossParts parts;
  Vec p1(d), q1(d), p2(d), q2(d), r(2 * d), rb(2 * d);
  Vec gp1(d), gx1(d), gp2(d), gx2(d);
  for (const auto& t : batch) {
    const double e1 = net.logit_grad(t.x_prime, t.x, p1, q1);
    const double e2 = net.logit_grad(t.x, t.x_prime, p2, q2);
    const double s1 = sigmoid(e1);
    const double s2 = sigmoid(e2);
    for (std::size_t j = 0; j < d; ++j) {
      r[j] = (1.0 - s1) * q1[j] - (1.0 - s2) * p2[j] - t.delta_p[j] - t.delta_q[j];
      r[d + j] = (1.0 - s1) * p1[j] - (1.0 - s2) * q2[j] - t.delta_p[d + j] - t.delta_q[d + j];
    }
    double l2 = 0.0;
    double la = 0.0;
    for (std::size_t k = 0; k < 2 * d; ++k) {
      l2 += r[k] * r[k];
      la += alpha == 2.0 ? r[k] * r[k] : std::pow(std::abs(r[k]), alpha);
    }
    const double a = std::clamp(s1, kEntropyEps, 1.0 - kEntropyEps);
    const double h = a * std::log(a) + (1.0 - a) * std::log1p(-a);
    parts.l2 += l2 / n;
    parts.l_alpha += la / n;
    parts.entropy += h / n;
    if (!want_grad) continue;

    for (std::size_t k = 0; k < 2 * d; ++k) {
      const double ga = alpha == 2.0 ? 2.0 * r[k] : alpha * std::pow(std::abs(r[k]), alpha - 1.0) * sgn(r[k]);
      rb[k] = (2.0 * r[k] + cfg.lambda_alpha * ga) / n;
    }
    ConstSpan rbx(rb.data(), d);
    ConstSpan rbxp(rb.data() + d, d);
    // a(x', x) enters with +, a(x, x') with -.
    double e1_bar = -s1 * (1.0 - s1) * (dot(q1, rbx) + dot(p1, rbxp));
    if (s1 > kEntropyEps && s1 < 1.0 - kEntropyEps) e1_bar += cfg.lambda_entropy * e1 * s1 * (1.0 - s1) / n;
    for (std::size_t j = 0; j < d; ++j) {
      gp1[j] = (1.0 - s1) * rbxp[j];
      gx1[j] = (1.0 - s1) * rbx[j];
      gp2[j] = -(1.0 - s2) * rbx[j];
      gx2[j] = -(1.0 - s2) * rbxp[j];
    }
    const double e2_bar = s2 * (1.0 - s2) * (dot(p2, rbx) + dot(q2, rbxp));
    net.backprop(t.x_prime, t.x, e1_bar, gp1, gx1, grad);
    net.backprop(t.x, t.x_prime, e2_bar, gp2, gx2, grad);
  }
  parts.combined = parts.l2 + cfg.lambda_alpha * parts.l_alpha + cfg.lambda_entropy * parts.entropy;
  return parts;
}

std::vector<TraceRow> train_acceptance(AcceptanceNet& net, const DataSampler& data, const ScoreModel& target_score,
                                       const DriftField& field, const DriftConfig& cfg, const SBMConfig& sbm_cfg,
                                       RngStream& rng) {
  sbm_cfg.validate();
  cfg.validate();
  diffnet::Adam opt(net.net().n_params(), sbm_cfg.lr, sbm_cfg.clip);
  std::vector<TraceRow> trace;
  for (std::size_t ep = 0; ep < sbm_cfg.epochs; ++ep) {
    const double eta = sbm_cfg.eta_at(ep);
    TraceRow row{ep, eta, 0.0, 0.0, 0.0, 0.0};
    const double nb = static_cast<double>(sbm_cfg.batches_per_epoch);
    for (std::size_t b = 0; b < sbm_cfg.batches_per_epoch; ++b) {
      const auto pairs = curriculum_pairs(data, field, cfg, eta, sbm_cfg.batch_size, rng);
      std::vector<PairTerms> batch;
      batch.reserve(pairs.size());
      for (const auto& [x, xp] : pairs) batch.push_back(pair_terms(x, xp, target_score, field, cfg));
      Vec g(net.net().n_params(), 0.0);
      const auto parts = sbm_loss(net, batch, cfg.alpha, sbm_cfg, g);
      if (!std::isfinite(parts.combined) || !all_finite(g)) {
        std::ostringstream os;
        os << "train_acceptance: non-finite loss at epoch " << ep << " batch " << b;
        throw NumericError(os.str());
      }
      opt.step(net.net().params(), std::move(g));
      row.loss_l2 += parts.l2 / nb;
      row.loss_alpha += parts.l_alpha / nb;
      row.entropy += parts.entropy / nb;
      row.combined += parts.combined / nb;
    }
    trace.push_back(row);
  }
  return trace;
}

}  // namespace mafla::sbm
