#include <cmath>

#include "doctest.h"
#include "mafla/evalkit.hpp"
#include "mafla/sbm.hpp"

using namespace mafla;
using namespace mafla::sbm;

namespace {

// Gaussian target N(mu, 2 s^2 I) with the alpha=2 proposal N(x + tau c s(x), 2 tau I).
struct GaussianSetting {
  std::size_t d;
  Vec mu;
  double s;
  double tau;

  Vec score(ConstSpan x) const {
    Vec g(d);
    for (std::size_t j = 0; j < d; ++j) g[j] = -(x[j] - mu[j]) / (2 * s * s);
    return g;
  }
  // log rho(x', x) = log p(x') + log q(x | x') - log p(x) - log q(x' | x)
  // gradients with respect to x' (first) and x (second), written out by hand.
  std::pair<Vec, Vec> grad_log_ratio(ConstSpan xp, ConstSpan x) const {
    const double jac = -1.0 / (2 * s * s);  // Jacobian of the drift is jac * I
    const Vec sx = score(x), sxp = score(xp);
    Vec gp(d), gx(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double fwd = xp[j] - x[j] - tau * sx[j];   // x' - mean of q(. | x)
      const double rev = x[j] - xp[j] - tau * sxp[j];  // x - mean of q(. | x')
      // d/dx' [ -rev^2 / 4tau ] = (1 + tau jac) rev / 2tau ; d/dx' [ fwd^2 / 4tau ] = fwd / 2tau
      gp[j] = sxp[j] + (1 + tau * jac) * rev / (2 * tau) + fwd / (2 * tau);
      gx[j] = -sx[j] - rev / (2 * tau) - (1 + tau * jac) * fwd / (2 * tau);
    }
    return {gp, gx};
  }
  double log_ratio(ConstSpan xp, ConstSpan x) const {
    const Vec sx = score(x), sxp = score(xp);
    double v = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double fwd = xp[j] - x[j] - tau * sx[j];
      const double rev = x[j] - xp[j] - tau * sxp[j];
      v += -((xp[j] - mu[j]) * (xp[j] - mu[j]) - (x[j] - mu[j]) * (x[j] - mu[j])) / (4 * s * s);
      v += (-rev * rev + fwd * fwd) / (4 * tau);
    }
    return v;
  }
  LogAcceptGradFn barker() const {
    return [this](ConstSpan first, ConstSpan second) {
      const double w = 1.0 - sigmoid(log_ratio(first, second));
      auto [gp, gx] = grad_log_ratio(first, second);
      for (auto& v : gp) v *= w;
      for (auto& v : gx) v *= w;
      return LogAcceptGrad{gp, gx};
    };
  }
};

targets::TargetSpec spec_of(const GaussianSetting& g) {
  targets::TargetSpec t;
  t.kind = targets::Kind::gaussian_mixture;
  t.dim = g.d;
  t.components = {{1.0, g.mu, g.s}};
  return t;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-3, std::max(std::abs(a), std::abs(b))); }

std::vector<PairTerms> random_batch(std::size_t n, const ScoreModel& target, const DriftField& field,
                                    const DriftConfig& cfg, RngStream& rng, double spread = 1.5) {
  std::vector<PairTerms> batch;
  const std::size_t d = target.dim();
  for (std::size_t i = 0; i < n; ++i) {
    Vec x(d);
    for (double& v : x) v = spread * rng.normal();
    const auto p = propose(x, field, cfg, rng);
    batch.push_back(pair_terms(p.x, p.x_prime, target, field, cfg));
  }
  return batch;
}

}  // namespace

TEST_CASE("Barker acceptance zeroes the residual in the Gaussian setting") {
  GaussianSetting g{3, {0.5, -1.0, 2.0}, 0.8, 0.2};
  targets::MixtureTarget t(spec_of(g));
  const auto cfg = DriftConfig::make(2.0, g.tau);
  ScaledScoreDrift field(t, cfg.c_alpha, JacobianMode::analytic);
  const auto barker = g.barker();
  RngStream rng(1, 0);
  for (int batch = 0; batch < 20; ++batch) {
    Matrix res(64, 6);
    for (std::size_t i = 0; i < 64; ++i) {
      Vec x(3);
      for (double& v : x) v = 2.0 * rng.normal();
      const auto p = propose(x, field, cfg, rng);
      const auto r = residual(p, barker, t, field, cfg);
      std::copy(r.begin(), r.end(), res.row(i).begin());
    }
    CHECK(loss_l2(res) < 1e-10);
    double mx = 0.0;
    for (double v : res.data) mx = std::max(mx, std::abs(v));
    CHECK(mx < 1e-6);
  }
}

TEST_CASE("constant acceptance: residual is -(delta p + delta q)") {
  targets::TargetSpec s;
  s.kind = targets::Kind::cauchy_mixture;
  s.dim = 2;
  s.components = {{0.5, {1.0, 0.0}, 1.0}, {0.5, {-1.0, 0.0}, 1.0}};
  targets::MixtureTarget t(s);
  const auto cfg = DriftConfig::make(1.5, 0.1);
  ScaledScoreDrift field(t, cfg.c_alpha);
  RngStream rng(2, 0);
  const auto p = propose(Vec{0.3, 0.2}, field, cfg, rng);
  const auto r = residual(p, constant_accept_grad(2), t, field, cfg);
  const auto dl = deltas(p, t, field, cfg);
  for (std::size_t k = 0; k < 4; ++k) CHECK(r[k] == -(dl.delta_p[k] + dl.delta_q[k]));
}

TEST_CASE("x' = x with zero drift gives zero residual") {
  // Holds for acceptance rules whose two partial derivatives agree on the
  // diagonal (constant, Barker); a generic network does not satisfy that.
  class Zero final : public ScoreModel {
   public:
    std::size_t dim() const override { return 2; }
    void score(ConstSpan, MutSpan out) const override { std::fill(out.begin(), out.end(), 0.0); }
  } z;
  const auto cfg = DriftConfig::make(2.0, 0.1);
  ScaledScoreDrift field(z, cfg.c_alpha);
  const Vec x{0.7, -0.2};
  const auto p = make_pair(x, x, field, cfg);
  for (double v : p.r) CHECK(v == 0.0);
  for (double v : p.r_rev) CHECK(v == 0.0);
  const auto dl = deltas(p, z, field, cfg);
  for (double v : dl.delta_p) CHECK(v == 0.0);
  for (double v : residual(p, constant_accept_grad(2), z, field, cfg)) CHECK(v == 0.0);
  // Barker rule with a flat target: the log ratio is identically zero at zero drift
  LogAcceptGradFn barker = [&](ConstSpan first, ConstSpan second) {
    Vec gp(2), gx(2);
    for (std::size_t j = 0; j < 2; ++j) {
      const double fwd = first[j] - second[j];
      const double rev = second[j] - first[j];
      gp[j] = 0.5 * (rev + fwd) / (2 * cfg.tau);
      gx[j] = 0.5 * (-rev - fwd) / (2 * cfg.tau);
    }
    return LogAcceptGrad{gp, gx};
  };
  for (double v : residual(p, barker, z, field, cfg)) CHECK(v == 0.0);
}

TEST_CASE("loss family on fixed residuals") {
  Matrix zero(3, 4);
  CHECK(loss_l2(zero) == 0.0);
  CHECK(loss_alpha(zero, 1.5) == 0.0);
  SBMConfig cfg;
  CHECK(loss_combined(zero, 1.5, cfg) == 0.0);
  Matrix ones(1, 4, 1.0);
  CHECK(loss_l2(ones) == 4.0);
  CHECK(loss_alpha(ones, 1.5) == 4.0);
  RngStream rng(4, 0);
  Matrix r(5, 4);
  for (double& v : r.data) v = rng.normal();
  CHECK(loss_alpha(r, 2.0) == doctest::Approx(loss_l2(r)).epsilon(1e-15));
  cfg.lambda_alpha = 0.0;
  CHECK(loss_combined(r, 1.3, cfg) == loss_l2(r));
  cfg.lambda_alpha = 0.7;
  CHECK(loss_combined(r, 2.0, cfg) == doctest::Approx(1.7 * loss_l2(r)).epsilon(1e-14));
  CHECK_THROWS_AS(loss_alpha(r, 1.0), ParameterError);
  CHECK_THROWS_AS(loss_alpha(r, 2.5), ParameterError);
}

TEST_CASE("entropy term") {
  CHECK(entropy_term(Vec{0.5}) == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  CHECK(entropy_term(Vec{0.9}) == doctest::Approx(-0.325083).epsilon(1e-6));
  const double near_one = entropy_term(Vec{1.0 - 1e-6});
  CHECK(near_one < 0.0);
  CHECK(near_one > -1e-4);
  const double clamped = entropy_term(Vec{1.0});
  CHECK(clamped < 0.0);
  CHECK(std::isfinite(entropy_term(Vec{0.0})));
  for (double a = 0.01; a < 1.0; a += 0.01) {
    const double h = entropy_term(Vec{a});
    CHECK(h >= -std::log(2.0));
    CHECK(h < 0.0);
    if (std::abs(a - 0.5) > 1e-9) CHECK(h > -std::log(2.0));
  }
}

TEST_CASE("curriculum pairs: eta endpoints and convexity") {
  GaussianSetting g{2, {0.0, 0.0}, 1.0, 0.1};
  targets::MixtureTarget t(spec_of(g));
  const auto cfg = DriftConfig::make(1.6, 0.1);
  ScaledScoreDrift field(t, cfg.c_alpha);
  DataSampler data = [&t](std::size_t n, RngStream& rng) { return t.sample(n, rng); };
  RngStream a(5, 0), b(5, 0), c(5, 0);
  const auto p0 = curriculum_pairs(data, field, cfg, 0.0, 50, a);
  const auto p1 = curriculum_pairs(data, field, cfg, 1.0, 50, b);
  const auto ph = curriculum_pairs(data, field, cfg, 0.5, 50, c);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(p0[i].first == p0[i].second);
    CHECK(p1[i].first == ph[i].first);
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(ph[i].second[j] == doctest::Approx((p1[i].first[j] + p1[i].second[j]) / 2).epsilon(1e-15));
    }
  }
  // eta = 1 gives a pure proposal draw from x~
  RngStream d(5, 0);
  const Matrix xs = data(50, d);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto p = propose(xs.row(i), field, cfg, d);
    CHECK(p1[i].second == p.x_prime);
  }
  CHECK_THROWS_AS(curriculum_pairs(data, field, cfg, 1.5, 5, a), ParameterError);
}

TEST_CASE("curriculum at eta=0 reproduces the data distribution") {
  GaussianSetting g{1, {1.0}, 1.0, 0.1};
  targets::MixtureTarget t(spec_of(g));
  const auto cfg = DriftConfig::make(1.5, 0.1);
  ScaledScoreDrift field(t, cfg.c_alpha);
  DataSampler data = [&t](std::size_t n, RngStream& rng) { return t.sample(n, rng); };
  RngStream rng(6, 0), ref(6, 1);
  const auto pairs = curriculum_pairs(data, field, cfg, 0.0, 20000, rng);
  Vec xp;
  for (const auto& p : pairs) xp.push_back(p.second[0]);
  const auto exact = t.sample(20000, ref);
  CHECK(evalkit::ks_two_sample(xp, exact.data).p_value > 0.01);
}

TEST_CASE("eta schedule") {
  SBMConfig cfg;
  cfg.epochs = 100;
  CHECK(cfg.eta_at(0) == 0.1);
  CHECK(cfg.eta_at(20) == 0.1);
  CHECK(cfg.eta_at(99) == 1.0);
  CHECK(cfg.eta_at(59) == doctest::Approx(0.1 + 0.9 * 39.0 / 79.0));
  cfg.eta_schedule = {{0, 0.2}, {10, 0.6}};
  CHECK(cfg.eta_at(5) == doctest::Approx(0.4));
  CHECK(cfg.eta_at(50) == 0.6);
  cfg.eta_schedule = {{1, 0.2}};
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg.eta_schedule = {{0, 0.5}, {5, 0.2}};
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

TEST_CASE("sbm_loss matches per-pair residuals") {
  GaussianSetting g{2, {0.0, 1.0}, 0.9, 0.1};
  targets::MixtureTarget t(spec_of(g));
  const auto cfg = DriftConfig::make(1.7, 0.1);
  ScaledScoreDrift field(t, cfg.c_alpha);
  RngStream rng(7, 0);
  for (auto form : {AcceptanceForm::free, AcceptanceForm::antisymmetric}) {
    AcceptanceNet net(2, {6, 6}, diffnet::Activation::tanh, form);
    net.net().init(rng);
    const auto batch = random_batch(16, t, field, cfg, rng);
    SBMConfig sc;
    const auto parts = sbm_loss(net, batch, cfg.alpha, sc);
    Matrix res(batch.size(), 4);
    Vec a;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto p = make_pair(batch[i].x, batch[i].x_prime, field, cfg);
      const auto r = residual(p, log_accept_grad(net), t, field, cfg);
      std::copy(r.begin(), r.end(), res.row(i).begin());
      a.push_back(net.accept(batch[i].x_prime, batch[i].x));
    }
    CHECK(parts.l2 == doctest::Approx(loss_l2(res)).epsilon(1e-12));
    CHECK(parts.l_alpha == doctest::Approx(loss_alpha(res, cfg.alpha)).epsilon(1e-12));
    CHECK(parts.entropy == doctest::Approx(entropy_term(a)).epsilon(1e-12));
    CHECK(parts.combined == doctest::Approx(parts.l2 + sc.lambda_alpha * parts.l_alpha + sc.lambda_entropy * parts.entropy));
  }
}

TEST_CASE("sbm_loss parameter gradient matches finite differences") {
  GaussianSetting g{2, {0.0, 0.5}, 1.0, 0.2};
  targets::MixtureTarget t(spec_of(g));
  for (double alpha : {2.0, 1.6}) {
    const auto cfg = DriftConfig::make(alpha, 0.2);
    ScaledScoreDrift field(t, cfg.c_alpha);
    for (auto form : {AcceptanceForm::free, AcceptanceForm::antisymmetric}) {
      RngStream rng(8, static_cast<std::uint64_t>(form) + (alpha < 2 ? 10 : 0));
      AcceptanceNet net(2, {5, 4}, diffnet::Activation::tanh, form);
      net.net().init(rng);
      const auto batch = random_batch(6, t, field, cfg, rng);
      SBMConfig sc;
      sc.lambda_alpha = 0.8;
      sc.lambda_entropy = 0.3;
      Vec grad(net.net().n_params(), 0.0);
      sbm_loss(net, batch, alpha, sc, grad);
      AcceptanceNet probe = net;
      for (std::size_t k = 0; k < grad.size(); ++k) {
        const double keep = probe.net().params()[k];
        probe.net().params()[k] = keep + 1e-4;
        const double up = sbm_loss(probe, batch, alpha, sc).combined;
        probe.net().params()[k] = keep - 1e-4;
        const double dn = sbm_loss(probe, batch, alpha, sc).combined;
        probe.net().params()[k] = keep;
        CHECK(rel_err(grad[k], (up - dn) / 2e-4) < 1e-3);
      }
    }
  }
}

TEST_CASE("entropy gradient vanishes at a = 1/2") {
  GaussianSetting g{1, {0.0}, 1.0, 0.1};
  targets::MixtureTarget t(spec_of(g));
  const auto cfg = DriftConfig::make(2.0, 0.1);
  ScaledScoreDrift field(t, cfg.c_alpha);
  RngStream rng(9, 0);
  AcceptanceNet net(1, {4}, diffnet::Activation::tanh, AcceptanceForm::free);
  const auto batch = random_batch(8, t, field, cfg, rng);
  SBMConfig with, without;
  with.lambda_entropy = 1.0;
  without.lambda_entropy = 0.0;
  Vec g1(net.net().n_params(), 0.0), g0(net.net().n_params(), 0.0);
  sbm_loss(net, batch, 2.0, with, g1);
  sbm_loss(net, batch, 2.0, without, g0);
  for (std::size_t k = 0; k < g1.size(); ++k) CHECK(g1[k] == g0[k]);
}

TEST_CASE("train_acceptance: residual falls far below the constant baseline") {
  GaussianSetting g{1, {0.0}, 1.0, 0.1};
  targets::MixtureTarget t(spec_of(g));
  const auto cfg = DriftConfig::make(2.0, 0.1);
  ScaledScoreDrift field(t, cfg.c_alpha, JacobianMode::analytic);
  DataSampler data = [&t](std::size_t n, RngStream& rng) { return t.sample(n, rng); };
  RngStream rng(10, 0);
  AcceptanceNet net(1, {32, 32}, diffnet::Activation::tanh, AcceptanceForm::antisymmetric);
  net.net().init(rng);
  SBMConfig sc;
  sc.epochs = 300;
  sc.batch_size = 128;
  sc.batches_per_epoch = 2;
  sc.lr = 3e-3;
  sc.lambda_alpha = 0.0;
  const auto trace = train_acceptance(net, data, t, field, cfg, sc, rng);
  CHECK(trace.size() == 300);
  RngStream held(10, 1);
  const auto pairs = curriculum_pairs(data, field, cfg, 1.0, 2000, held);
  double trained = 0.0, baseline = 0.0;
  for (const auto& [x, xp] : pairs) {
    const auto p = make_pair(x, xp, field, cfg);
    const auto r = residual(p, log_accept_grad(net), t, field, cfg);
    const auto dl = deltas(p, t, field, cfg);
    trained += dot(r, r);
    for (std::size_t k = 0; k < 2; ++k) baseline += (dl.delta_p[k] + dl.delta_q[k]) * (dl.delta_p[k] + dl.delta_q[k]);
  }
  MESSAGE("trained/baseline = " << trained / baseline);
  CHECK(trained <= 0.1 * baseline);
}

TEST_CASE("train_acceptance: strong entropy weight pins a near 1/2") {
  GaussianSetting g{1, {0.0}, 1.0, 0.1};
  targets::MixtureTarget t(spec_of(g));
  const auto cfg = DriftConfig::make(2.0, 0.1);
  ScaledScoreDrift field(t, cfg.c_alpha);
  DataSampler data = [&t](std::size_t n, RngStream& rng) { return t.sample(n, rng); };
  RngStream rng(11, 0);
  AcceptanceNet net(1, {16}, diffnet::Activation::tanh, AcceptanceForm::free);
  net.net().init(rng);
  SBMConfig sc;
  sc.epochs = 100;
  sc.batch_size = 64;
  sc.batches_per_epoch = 2;
  sc.lr = 3e-3;
  sc.lambda_alpha = 0.0;
  sc.lambda_entropy = 1e3;
  train_acceptance(net, data, t, field, cfg, sc, rng);
  RngStream held(11, 1);
  const auto pairs = curriculum_pairs(data, field, cfg, 1.0, 1000, held);
  double dev = 0.0;
  for (const auto& [x, xp] : pairs) dev += std::abs(net.accept(xp, x) - 0.5);
  CHECK(dev / 1000.0 < 0.05);
}

TEST_CASE("train_acceptance: zero epochs") {
  GaussianSetting g{1, {0.0}, 1.0, 0.1};
  targets::MixtureTarget t(spec_of(g));
  const auto cfg = DriftConfig::make(2.0, 0.1);
  ScaledScoreDrift field(t, cfg.c_alpha);
  DataSampler data = [&t](std::size_t n, RngStream& rng) { return t.sample(n, rng); };
  RngStream rng(12, 0);
  AcceptanceNet net(1, {4}, diffnet::Activation::tanh, AcceptanceForm::free);
  net.net().init(rng);
  const Vec before = net.net().params();
  SBMConfig sc;
  sc.epochs = 0;
  CHECK(train_acceptance(net, data, t, field, cfg, sc, rng).empty());
  CHECK(net.net().params() == before);
}
