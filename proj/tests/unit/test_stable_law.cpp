#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mafla/evalkit.hpp"
#include "mafla/stable_law.hpp"

using namespace mafla;
using namespace mafla::stable;

namespace {

constexpr double kPi = std::numbers::pi;

// Density of the unit isotropic law at the origin, closed form.
double origin_density(double alpha, int d) {
  return std::tgamma(d / alpha) / (alpha * std::pow(2.0, d - 1) * std::pow(kPi, 0.5 * d) * std::tgamma(0.5 * d));
}

// Independent oracle: brute-force trapezoid of the Hankel integral with a fine grid.
double hankel_oracle(double alpha, int d, double r) {
  const double h = 1e-4;
  const double t_max = std::pow(45.0, 1.0 / alpha);
  if (d == 1) {
    // (1/pi) int_0^inf cos(rt) e^{-t^alpha} dt, half weight at t=0
    double s = 0.5;
    for (double t = h; t < t_max; t += h) s += std::cos(r * t) * std::exp(-std::pow(t, alpha));
    return s * h / kPi;
  }
  const double nu = 0.5 * d - 1.0;
  double sum = 0.0;
  for (double t = h; t < t_max; t += h) {
    const double bessel = std::cyl_bessel_j(nu, r * t) * std::pow(r, -nu);
    sum += bessel * std::pow(t, 0.5 * d) * std::exp(-std::pow(t, alpha));
  }
  return std::pow(2.0 * kPi, -0.5 * d) * sum * h;
}

double sample_var(const Vec& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("sample_sas_1d: Gaussian limit has variance 2") {
  RngStream rng(1, 0);
  const auto x = sample_sas_1d(2.0, 1.0, 1000000, rng);
  CHECK(sample_var(x) == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("sample_sas_1d: Cauchy interquartile range is 2") {
  RngStream rng(2, 0);
  const auto x = sample_sas_1d(1.0, 1.0, 400000, rng);
  const double iqr = evalkit::quantile(x, 0.75) - evalkit::quantile(x, 0.25);
  CHECK(iqr == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("sample_sas_1d: scale equivariance is bit-exact") {
  for (double alpha : {1.2, 1.5, 2.0}) {
    RngStream a(7, 3);
    RngStream b(7, 3);
    const auto x1 = sample_sas_1d(alpha, 1.0, 1000, a);
    const auto xs = sample_sas_1d(alpha, 3.5, 1000, b);
    for (std::size_t i = 0; i < x1.size(); ++i) REQUIRE(xs[i] == 3.5 * x1[i]);
  }
}

TEST_CASE("sampling is deterministic per stream") {
  RngStream a(11, 5);
  RngStream b(11, 5);
  const auto m1 = sample_sas_isotropic(1.5, 1.0, 3, 500, a);
  const auto m2 = sample_sas_isotropic(1.5, 1.0, 3, 500, b);
  CHECK(m1.data == m2.data);
}

TEST_CASE("sample parameter errors") {
  RngStream rng(1, 0);
  CHECK_THROWS_AS(sample_sas_1d(2.5, 1.0, 10, rng), ParameterError);
  CHECK_THROWS_AS(sample_sas_1d(1.5, 0.0, 10, rng), ParameterError);
  CHECK_THROWS_AS(sample_sas_isotropic(1.5, 1.0, 0, 10, rng), ParameterError);
  CHECK_THROWS_AS(sample_sas_isotropic(0.9, 1.0, 2, 10, rng), ParameterError);
}

TEST_CASE("isotropic dim=1 matches the 1-D sampler in distribution") {
  RngStream a(3, 0);
  RngStream b(3, 1);
  const auto x = sample_sas_1d(1.5, 1.0, 100000, a);
  const auto m = sample_sas_isotropic(1.5, 1.0, 1, 100000, b);
  CHECK(evalkit::ks_two_sample(x, m.data).p_value > 0.01);
}

TEST_CASE("isotropic Gaussian limit: covariance 2 sigma^2 I") {
  RngStream rng(4, 0);
  const double sigma = 0.7;
  const auto m = sample_sas_isotropic(2.0, sigma, 3, 200000, rng);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < m.rows; ++i) s += m(i, a) * m(i, b);
      s /= static_cast<double>(m.rows);
      if (a == b) {
        CHECK(s == doctest::Approx(2 * sigma * sigma).epsilon(0.02));
      } else {
        CHECK(std::abs(s) < 0.01);
      }
    }
  }
}

TEST_CASE("isotropic projections match the 1-D characteristic function") {
  RngStream rng(5, 0);
  const double sigma = 1.3;
  const auto m = sample_sas_isotropic(1.5, sigma, 3, 1000000, rng);
  RngStream dir(5, 1);
  Vec u(3);
  for (double& v : u) v = dir.normal();
  const double un = norm2(u);
  for (double& v : u) v /= un;
  Vec proj(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) proj[i] = dot(m.row(i), u);
  Vec grid;
  for (double t = -3.0; t <= 3.0 + 1e-9; t += 0.25) grid.push_back(t);
  const auto err = ecf_check(proj, grid, 1.5, sigma);
  CHECK(*std::max_element(err.begin(), err.end()) < 0.02);
}

TEST_CASE("ecf_check: u=0 gives error 0 exactly") {
  const Vec s{0.3, -1.2, 5.0};
  const auto e = ecf(s, 0.0);
  CHECK(e.first == 1.0);
  CHECK(e.second == 0.0);
  const Vec grid{0.0};
  CHECK(ecf_check(s, grid, 1.5)[0] == 0.0);
}

TEST_CASE("ecf_check: Gaussian and Cauchy samples") {
  Vec grid;
  for (double t = -3.0; t <= 3.0 + 1e-9; t += 0.5) grid.push_back(t);
  RngStream g(6, 0);
  Vec gauss(1000000);
  for (double& v : gauss) v = std::sqrt(2.0) * g.normal();
  auto e = ecf_check(gauss, grid, 2.0);
  CHECK(*std::max_element(e.begin(), e.end()) < 0.02);
  RngStream c(6, 1);
  Vec cauchy(1000000);
  for (double& v : cauchy) v = std::tan(kPi * (c.uniform() - 0.5));
  e = ecf_check(cauchy, grid, 1.0);
  CHECK(*std::max_element(e.begin(), e.end()) < 0.02);
}

TEST_CASE("pdf_sas_1d: closed-form values") {
  CHECK(pdf_sas_1d(1.0, 0.0) == doctest::Approx(1.0 / kPi).epsilon(1e-9));
  CHECK(pdf_sas_1d(2.0, 0.0) == doctest::Approx(0.282095).epsilon(1e-6));
  for (double alpha : {1.1, 1.2, 1.5, 1.9}) {
    CHECK(pdf_sas_1d(alpha, 0.0) == doctest::Approx(origin_density(alpha, 1)).epsilon(1e-8));
  }
  for (double x : {0.5, 2.0, 7.0}) {
    CHECK(pdf_sas_1d(1.0, x) == doctest::Approx(1.0 / (kPi * (1 + x * x))).epsilon(1e-7));
  }
}

TEST_CASE("pdf_sas_1d: brute-force Fourier oracle") {
  for (double alpha : {1.2, 1.5, 1.9}) {
    for (double x : {0.3, 1.0, 2.5, 6.0}) {
      CHECK(pdf_sas_1d(alpha, x) == doctest::Approx(hankel_oracle(alpha, 1, x)).epsilon(1e-5));
    }
  }
}

TEST_CASE("pdf_sas_1d: symmetric, positive, normalized") {
  for (double alpha : {1.2, 1.5, 1.95}) {
    double mass = 0.0;
    const double h = 0.01;
    const double L = 200.0;
    for (double x = -L; x <= L; x += h) {
      const double f = pdf_sas_1d(alpha, x);
      REQUIRE(f > 0.0);
      mass += f * h;
    }
    // analytic tail mass beyond L from the leading series term
    const double tail = 2.0 * std::tgamma(alpha) * std::sin(kPi * alpha / 2) / kPi * std::pow(L, -alpha);
    CHECK(std::abs(mass + tail - 1.0) < 1e-4);
    for (double x : {0.1, 1.7, 4.2, 30.0}) CHECK(pdf_sas_1d(alpha, x) == pdf_sas_1d(alpha, -x));
  }
}

TEST_CASE("score_sas_1d: analytic limits") {
  double worst_c = 0.0;
  double worst_g = 0.0;
  for (double x = -5.0; x <= 5.0; x += 0.1) {
    worst_c = std::max(worst_c, std::abs(score_sas_1d(1.0, x) + 2 * x / (1 + x * x)));
    worst_g = std::max(worst_g, std::abs(score_sas_1d(2.0, x) + x / 2));
  }
  CHECK(worst_c < 1e-4);
  CHECK(worst_g < 1e-4);
  for (double alpha : {1.0, 1.3, 1.7, 2.0}) CHECK(score_sas_1d(alpha, 0.0) == 0.0);
}

TEST_CASE("score_sas_1d: odd and consistent with log pdf") {
  for (double alpha : {1.2, 1.5, 1.8}) {
    for (double x = -8.0; x <= 8.0; x += 0.35) {
      CHECK(score_sas_1d(alpha, -x) == doctest::Approx(-score_sas_1d(alpha, x)).epsilon(1e-12));
      const double h = 1e-4;
      const double fd = (std::log(pdf_sas_1d(alpha, x + h)) - std::log(pdf_sas_1d(alpha, x - h))) / (2 * h);
      CHECK(std::abs(fd - score_sas_1d(alpha, x)) < 1e-4);
    }
  }
}

TEST_CASE("pdf and score: parameter errors") {
  CHECK_THROWS_AS(pdf_sas_1d(0.5, 1.0), ParameterError);
  CHECK_THROWS_AS(pdf_sas_1d(2.1, 1.0), ParameterError);
  CHECK_THROWS_AS(radial_density(1.5, 5, 1.0), ParameterError);
}

TEST_CASE("radial density: origin values and brute-force oracle in d=2,3") {
  for (int d : {2, 3, 4}) {
    for (double alpha : {1.2, 1.5, 1.9}) {
      CHECK(radial_density(alpha, d, 0.0) == doctest::Approx(origin_density(alpha, d)).epsilon(1e-8));
    }
  }
  for (int d : {2, 3}) {
    for (double alpha : {1.3, 1.7}) {
      for (double r : {0.5, 1.5, 4.0}) {
        CHECK(radial_density(alpha, d, r) == doctest::Approx(hankel_oracle(alpha, d, r)).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("radial density: Cauchy and Gaussian closed forms in d=2,3") {
  for (int d : {2, 3}) {
    for (double r : {0.0, 0.7, 3.0, 12.0}) {
      const double cauchy = std::tgamma(0.5 * (d + 1)) / std::pow(kPi, 0.5 * (d + 1)) * std::pow(1 + r * r, -0.5 * (d + 1));
      CHECK(radial_density(1.0, d, r) == doctest::Approx(cauchy).epsilon(1e-7));
      const double gauss = std::pow(4 * kPi, -0.5 * d) * std::exp(-r * r / 4);
      CHECK(radial_density(2.0, d, r) == doctest::Approx(gauss).epsilon(1e-12));
    }
  }
}

TEST_CASE("tail series agrees with quadrature far out") {
  for (int d : {1, 2, 3}) {
    for (double alpha : {1.2, 1.5, 1.9}) {
      const double r = 30.0;
      CHECK(radial_density_tail_series(alpha, d, r) ==
            doctest::Approx(radial_density_quadrature(alpha, d, r)).epsilon(1e-6));
    }
  }
}

TEST_CASE("radial score matches log-density differences") {
  for (int d : {2, 3, 4}) {
    for (double alpha : {1.2, 1.6, 1.95}) {
      for (double r : {0.2, 1.0, 3.0, 9.0, 40.0}) {
        const double h = 1e-4 * std::max(1.0, r);
        const double fd = (std::log(radial_density(alpha, d, r + h)) - std::log(radial_density(alpha, d, r - h))) / (2 * h);
        CHECK(radial_score(alpha, d, r) == doctest::Approx(fd).epsilon(1e-5).scale(1e-6));
      }
    }
  }
}

TEST_CASE("RadialTable agrees with direct evaluation") {
  for (int d : {1, 2, 4}) {
    for (double alpha : {1.2, 1.5, 1.9, 2.0}) {
      const auto& t = radial_table(alpha, d);
      CHECK(&t == &radial_table(alpha, d));
      for (double r : {0.0, 0.013, 0.5, 2.345, 7.77, 19.5, 60.0, 500.0}) {
        const double f = radial_density(alpha, d, r);
        const double ref = f > 0.0 ? std::log(f) : -0.5 * d * std::log(4 * kPi) - r * r / 4;
        CHECK(t.log_pdf(r) == doctest::Approx(ref).epsilon(1e-7).scale(1e-7));
        CHECK(t.score(r) == doctest::Approx(radial_score(alpha, d, r)).epsilon(1e-5).scale(1e-6));
      }
    }
  }
}

TEST_CASE("StableLaw: characteristic function and validation") {
  StableLaw law{1.5, 2.0, 2, Isotropy::isotropic};
  const Vec u{0.3, 0.4};
  CHECK(law.characteristic(u) == doctest::Approx(std::exp(-std::pow(2.0 * 0.5, 1.5))));
  law.isotropy = Isotropy::product;
  CHECK(law.characteristic(u) ==
        doctest::Approx(std::exp(-std::pow(0.6, 1.5) - std::pow(0.8, 1.5))));
  StableLaw bad{1.5, -1.0, 2, Isotropy::isotropic};
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}
