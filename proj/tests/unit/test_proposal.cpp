#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mafla/diffnet.hpp"
#include "mafla/proposal.hpp"

using namespace mafla;

namespace {

targets::TargetSpec gaussian(std::size_t d, double scale, Vec center = {}) {
  targets::TargetSpec s;
  s.kind = targets::Kind::gaussian_mixture;
  s.dim = d;
  s.components = {{1.0, center.empty() ? Vec(d, 0.0) : center, scale}};
  return s;
}

class ZeroScore final : public ScoreModel {
 public:
  explicit ZeroScore(std::size_t d) : d_(d) {}
  std::size_t dim() const override { return d_; }
  void score(ConstSpan, MutSpan out) const override { std::fill(out.begin(), out.end(), 0.0); }

 private:
  std::size_t d_;
};

// log N(y; m, 2 tau I) up to a constant
double log_gauss(const Vec& y, const Vec& m, double tau) {
  double s = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) s += (y[j] - m[j]) * (y[j] - m[j]);
  return -s / (4.0 * tau);
}

}  // namespace

TEST_CASE("c_alpha values") {
  CHECK(c_alpha(2.0) == 1.0);
  const double ref = std::sqrt(std::numbers::pi) / std::pow(std::tgamma(0.75), 2);
  CHECK(ref == doctest::Approx(1.18034).epsilon(1e-5));
  CHECK(c_alpha(1.5) == doctest::Approx(ref).epsilon(1e-13));
  CHECK(c_alpha(1.0 + 1e-4) > 1000.0);
  CHECK_THROWS_AS(c_alpha(1.0), ParameterError);
  CHECK_THROWS_AS(c_alpha(1.0 + 1e-7), ParameterError);
  CHECK_THROWS_AS(c_alpha(2.01), ParameterError);
}

TEST_CASE("DriftConfig identities") {
  for (double alpha : {1.1, 1.2, 1.5, 1.9, 1.95, 2.0}) {
    for (double tau : {1e-3, 0.05, 0.7}) {
      const auto cfg = DriftConfig::make(alpha, tau);
      CHECK(cfg.kappa * alpha * cfg.c_alpha * tau == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(cfg.noise_scale == doctest::Approx(std::pow(tau, 1.0 / alpha)).epsilon(1e-14));
      CHECK_NOTHROW(cfg.validate());
    }
  }
  CHECK_THROWS_AS(DriftConfig::make(1.5, 0.0), ParameterError);
}

TEST_CASE("drift: alpha=2 equals score, zero score, Gaussian value") {
  targets::MixtureTarget g(gaussian(1, 1.0));
  Vec out(1), s(1);
  const Vec x{1.0};
  drift(g, x, DriftConfig::make(2.0, 0.1), out);
  g.score(x, s);
  CHECK(out == s);
  drift(g, x, DriftConfig::make(1.5, 0.1), out);
  CHECK(out[0] == doctest::Approx(-0.59017).epsilon(1e-5));
  ZeroScore z(2);
  Vec o2(2, 1.0);
  drift(z, Vec{3.0, 4.0}, DriftConfig::make(1.5, 0.1), o2);
  CHECK(o2 == Vec{0.0, 0.0});
}

TEST_CASE("propose: zero noise and small tau") {
  targets::MixtureTarget g(gaussian(2, 0.8));
  const auto cfg = DriftConfig::make(1.5, 0.2);
  ScaledScoreDrift field(g, cfg.c_alpha);
  RngStream rng(1, 0);
  const Vec x{0.5, -1.0};
  const auto p = propose(x, field, cfg, rng, true);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(p.x_prime[j] == x[j] + cfg.tau * p.drift_x[j]);
    CHECK(p.r[j] == doctest::Approx(0.0).scale(1e-15));
  }
  double prev = 1e9;
  for (double tau : {1e-1, 1e-3, 1e-5, 1e-7}) {
    const auto c = DriftConfig::make(1.5, tau);
    RngStream same(2, 0);
    const auto q = propose(x, field, c, same);
    const double dist = std::hypot(q.x_prime[0] - x[0], q.x_prime[1] - x[1]);
    CHECK(dist < prev);
    prev = dist;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("propose: alpha=2 moments match N(x + tau b, 2 tau I)") {
  targets::MixtureTarget g(gaussian(2, 1.0));
  const auto cfg = DriftConfig::make(2.0, 0.3);
  ScaledScoreDrift field(g, cfg.c_alpha);
  RngStream rng(3, 0);
  const Vec x{1.0, -2.0};
  Vec b(2);
  field.drift(x, b);
  double m0 = 0, m1 = 0, v0 = 0, v1 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto p = propose(x, field, cfg, rng);
    const double e0 = p.x_prime[0] - x[0] - cfg.tau * b[0];
    const double e1 = p.x_prime[1] - x[1] - cfg.tau * b[1];
    m0 += e0;
    m1 += e1;
    v0 += e0 * e0;
    v1 += e1 * e1;
  }
  CHECK(std::abs(m0 / n) < 0.02 * std::sqrt(2 * cfg.tau));
  CHECK(std::abs(m1 / n) < 0.02 * std::sqrt(2 * cfg.tau));
  CHECK(v0 / n == doctest::Approx(2 * cfg.tau).epsilon(0.02));
  CHECK(v1 / n == doctest::Approx(2 * cfg.tau).epsilon(0.02));
}

TEST_CASE("proposal_scores: zero drift") {
  ZeroScore z(2);
  const auto cfg = DriftConfig::make(1.5, 0.1);
  ScaledScoreDrift field(z, cfg.c_alpha);
  const Vec x{0.0, 1.0}, xp{2.0, -1.0};
  const auto p = make_pair(x, xp, field, cfg);
  for (std::size_t j = 0; j < 2; ++j) CHECK(p.r[j] == -p.r_rev[j]);
  const auto s = proposal_scores(p, field, cfg);
  const double k = cfg.kappa;
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(s.fwd_xprime[j] == doctest::Approx(-k * (xp[j] - x[j])));
    CHECK(s.fwd_x[j] == doctest::Approx(k * (xp[j] - x[j])));
    CHECK(s.rev_x[j] == doctest::Approx(-k * (x[j] - xp[j])));
    CHECK(s.rev_xprime[j] == doctest::Approx(k * (x[j] - xp[j])));
  }
}

TEST_CASE("proposal_scores: exact Gaussian conditional scores at alpha=2") {
  targets::MixtureTarget g(gaussian(3, 0.6, {0.5, -0.5, 1.0}));
  const auto cfg = DriftConfig::make(2.0, 0.15);
  ScaledScoreDrift field(g, cfg.c_alpha, JacobianMode::analytic);
  RngStream rng(4, 0);
  for (int t = 0; t < 20; ++t) {
    Vec x(3);
    for (double& v : x) v = rng.normal();
    const auto p = propose(x, field, cfg, rng);
    const auto s = proposal_scores(p, field, cfg);
    // grad of log N(x'; x + tau b(x), 2 tau I) in x' and x, b linear with Jacobian -1/(2 s^2)
    const double jac = -1.0 / (2 * 0.36);
    for (std::size_t j = 0; j < 3; ++j) {
      const double fwd_xp = -p.r[j] / (2 * cfg.tau);
      const double fwd_x = (1 + cfg.tau * jac) * p.r[j] / (2 * cfg.tau);
      CHECK(s.fwd_xprime[j] == doctest::Approx(fwd_xp).epsilon(1e-14));
      CHECK(s.fwd_x[j] == doctest::Approx(fwd_x).epsilon(1e-13));
    }
    // against FD of the closed-form log density
    Vec m(3);
    for (std::size_t j = 0; j < 3; ++j) m[j] = p.x[j] + cfg.tau * p.drift_x[j];
    for (std::size_t j = 0; j < 3; ++j) {
      Vec xp = p.x_prime, xm = p.x_prime;
      xp[j] += 1e-6;
      xm[j] -= 1e-6;
      CHECK(s.fwd_xprime[j] == doctest::Approx((log_gauss(xp, m, cfg.tau) - log_gauss(xm, m, cfg.tau)) / 2e-6).epsilon(1e-6));
    }
  }
}

TEST_CASE("proposal_scores: pair swap exchanges the halves") {
  targets::TargetSpec s;
  s.kind = targets::Kind::cauchy_mixture;
  s.dim = 2;
  s.components = {{0.4, {-1.0, 0.0}, 1.0}, {0.6, {2.0, 1.0}, 0.5}};
  targets::MixtureTarget t(s);
  const auto cfg = DriftConfig::make(1.7, 0.05);
  ScaledScoreDrift field(t, cfg.c_alpha);
  RngStream rng(5, 0);
  for (int k = 0; k < 10; ++k) {
    const Vec x{rng.normal(), rng.normal()};
    const auto p = propose(x, field, cfg, rng);
    const auto q = make_pair(p.x_prime, p.x, field, cfg);
    const auto a = proposal_scores(p, field, cfg);
    const auto b = proposal_scores(q, field, cfg);
    CHECK(a.fwd_xprime == b.rev_x);
    CHECK(a.fwd_x == b.rev_xprime);
    CHECK(a.rev_x == b.fwd_xprime);
    CHECK(a.rev_xprime == b.fwd_x);
  }
}

TEST_CASE("jacobian_vjp modes") {
  targets::MixtureTarget g(gaussian(2, 0.5));
  const auto cfg = DriftConfig::make(1.5, 0.1);
  const Vec x{0.3, 0.7}, v{1.0, -2.0};
  Vec a(2), f(2), zero(2, 5.0);
  jacobian_vjp(g, x, v, cfg, JacobianMode::analytic, a);
  for (std::size_t j = 0; j < 2; ++j) CHECK(a[j] == doctest::Approx(-cfg.c_alpha * v[j] / (2 * 0.25)).epsilon(1e-15));
  jacobian_vjp(g, x, v, cfg, JacobianMode::finite_difference, f);
  for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(a[j] - f[j]) < 1e-5);
  jacobian_vjp(g, x, Vec{0.0, 0.0}, cfg, JacobianMode::finite_difference, zero);
  CHECK(zero == Vec{0.0, 0.0});

  targets::TargetSpec mix = gaussian(2, 0.5);
  mix.components = {{0.5, {1.0, 0.0}, 0.5}, {0.5, {-1.0, 0.0}, 0.5}};
  targets::MixtureTarget m(mix);
  CHECK_THROWS_AS(jacobian_vjp(m, x, v, cfg, JacobianMode::analytic, a), CapabilityError);
  CHECK_THROWS_AS(jacobian_vjp(m, x, v, cfg, JacobianMode::network, a), CapabilityError);

  RngStream rng(6, 0);
  diffnet::Mlp net({2, 5, 2}, diffnet::Activation::tanh, diffnet::Head::vector);
  net.init(rng);
  diffnet::NetScore ns(net);
  Vec nv(2), direct(2);
  jacobian_vjp(ns, x, v, cfg, JacobianMode::network, nv);
  net.vjp(x, v, direct);
  for (std::size_t j = 0; j < 2; ++j) CHECK(nv[j] == doctest::Approx(cfg.c_alpha * direct[j]).epsilon(1e-15));
  CHECK(jacobian_mode_from_string("network") == JacobianMode::network);
  CHECK_THROWS_AS(jacobian_mode_from_string("bogus"), ParameterError);
}
