#include "mafla/stable_law.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

namespace mafla::stable {

namespace {

constexpr double kPi = std::numbers::pi;
// Beyond this radius the standalone density routines use the tail series.
constexpr double kSeriesRadius = 25.0;

void check_alpha(double alpha, double lo, bool lo_open, const char* where) {
  const bool ok = std::isfinite(alpha) && alpha <= 2.0 && (lo_open ? alpha > lo : alpha >= lo);
  if (!ok) {
    std::ostringstream os;
    os << where << ": alpha=" << alpha << " outside " << (lo_open ? "(" : "[") << lo << ", 2]";
    throw ParameterError(os.str());
  }
}

void check_dim(std::size_t dim, std::size_t max_dim, const char* where) {
  if (dim < 1 || dim > max_dim) {
    std::ostringstream os;
    os << where << ": dim=" << dim << " outside [1, " << max_dim << "]";
    throw ParameterError(os.str());
  }
}

// r^{-nu} J_nu(r t), continuous at r = 0.
double scaled_bessel(double nu, double r, double t) {
  const double z = r * t;
  if (z < 1.0) {
    const double q = -0.25 * z * z;
    double term = 1.0 / std::tgamma(nu + 1.0);
    double sum = term;
    for (int m = 1; m < 30; ++m) {
      term *= q / (m * (m + nu));
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return std::pow(0.5 * t, nu) * sum;
  }
  const double pre = std::sqrt(2.0 / (kPi * z));
  double j = 0.0;
  if (nu == -0.5) {
    j = pre * std::cos(z);
  } else if (nu == 0.5) {
    j = pre * std::sin(z);
  } else if (nu == 1.5) {
    j = pre * (std::sin(z) / z - std::cos(z));
  } else {
    j = std::cyl_bessel_j(nu, z);
  }
  return j * std::pow(r, -nu);
}

// Integration cutoff where exp(-t^alpha) t^{power} drops below e^{-40}.
double cutoff(double alpha, double power) {
  double t = std::pow(40.0, 1.0 / alpha);
  for (int it = 0; it < 200; ++it) {
    if (std::pow(t, alpha) - power * std::log(t) >= 40.0) return t;
    t *= 1.05;
  }
  return t;
}

double hankel_quadrature(double alpha, std::size_t dim, double r, int level) {
  const double nu = 0.5 * static_cast<double>(dim) - 1.0;
  const double half_d = 0.5 * static_cast<double>(dim);
  const double norm = std::pow(2.0 * kPi, -half_d);
  const double t_max = cutoff(alpha, half_d + 1.0);
  double w0 = r > 0.0 ? std::min(1.0, kPi / r) : 1.0;
  w0 = std::ldexp(w0, -level);

  auto integrand = [&](double t) {
    return std::exp(-std::pow(t, alpha)) * std::pow(t, half_d) * scaled_bessel(nu, r, t);
  };
  using GL = boost::math::quadrature::gauss<double, 20>;

  double total = 0.0;
  double a = 0.0;
  // Geometric grading resolves the t^alpha cusp of the integrand at the origin.
  for (int k = 16; k >= 1; --k) {
    const double b = std::ldexp(w0, -k);
    total += GL::integrate(integrand, a, b);
    a = b;
  }
  while (a < t_max) {
    const double b = std::min(a + w0, t_max);
    total += GL::integrate(integrand, a, b);
    a = b;
  }
  return norm * total;
}

struct TailSeries {
  std::vector<double> coef;  // coefficient of r^{-alpha k - dim}, k = 1..
};

TailSeries tail_coefficients(double alpha, std::size_t dim, int max_terms) {
  TailSeries s;
  const double d = static_cast<double>(dim);
  for (int k = 1; k <= max_terms; ++k) {
    const double ak = alpha * k;
    const double sn = std::sin(0.5 * kPi * ak);
    if (std::abs(sn) < 1e-15) {
      s.coef.push_back(0.0);
      continue;
    }
    const double log_mag = ak * std::log(2.0) + std::lgamma(0.5 * ak + 1.0) + std::lgamma(0.5 * (ak + d)) -
                           std::lgamma(k + 1.0) - (0.5 * d + 1.0) * std::log(kPi);
    const double sign = (k % 2 == 1 ? 1.0 : -1.0) * (sn > 0 ? 1.0 : -1.0);
    s.coef.push_back(sign * std::exp(log_mag) * std::abs(sn));
  }
  return s;
}

// Sums the asymptotic series, stopping once terms stop shrinking.
// Returns {value, derivative}.
std::pair<double, double> eval_tail(const std::vector<double>& coef, double alpha, std::size_t dim, double r) {
  const double d = static_cast<double>(dim);
  double sum = 0.0;
  double dsum = 0.0;
  double prev = INFINITY;
  for (std::size_t i = 0; i < coef.size(); ++i) {
    if (coef[i] == 0.0) continue;
    const double k = static_cast<double>(i + 1);
    const double e = alpha * k + d;
    const double term = coef[i] * std::pow(r, -e);
    if (std::abs(term) > prev) break;
    sum += term;
    dsum += -e * term / r;
    prev = std::abs(term);
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return {sum, dsum};
}

double gaussian_log_density(std::size_t dim, double r) {
  return -0.5 * static_cast<double>(dim) * std::log(4.0 * kPi) - 0.25 * r * r;
}

}  // namespace

void StableLaw::validate() const {
  check_alpha(alpha, 1.0, true, "StableLaw");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ParameterError("StableLaw: scale must be positive");
  if (dim < 1) throw ParameterError("StableLaw: dim must be >= 1");
}

double StableLaw::characteristic(ConstSpan u) const {
  if (u.size() != dim) throw ParameterError("StableLaw::characteristic: dimension mismatch");
  const double sa = std::pow(scale, alpha);
  if (isotropy == Isotropy::isotropic) {
    return std::exp(-sa * std::pow(norm2(u), alpha));
  }
  double acc = 0.0;
  for (double ui : u) acc += std::pow(std::abs(ui), alpha);
  return std::exp(-sa * acc);
}

double draw_unit(double alpha, RngStream& rng) {
  const double v = kPi * (rng.uniform() - 0.5);
  const double w = rng.exponential();
  if (alpha == 1.0) return std::tan(v);
  const double a = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha);
  const double b = std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
  return a * b;
}

void draw_isotropic_unit(double alpha, MutSpan out, RngStream& rng) {
  double mix = 1.0;
  if (alpha < 2.0) {
    // Kanter's representation of the positive (alpha/2)-stable law with
    // Laplace transform exp(-s^{alpha/2}).
    const double beta = 0.5 * alpha;
    const double u = kPi * rng.uniform();
    const double w = rng.exponential();
    const double left = std::sin(beta * u) / std::pow(std::sin(u), 1.0 / beta);
    const double right = std::pow(std::sin((1.0 - beta) * u) / w, (1.0 - beta) / beta);
    mix = std::sqrt(left * right);
  }
  const double s = std::numbers::sqrt2 * mix;
  for (double& v : out) v = s * rng.normal();
}

std::vector<double> sample_sas_1d(double alpha, double scale, std::size_t n, RngStream& rng) {
  check_alpha(alpha, 0.0, true, "sample_sas_1d");
  if (!(scale > 0.0)) throw ParameterError("sample_sas_1d: scale must be positive");
  std::vector<double> out(n);
  for (auto& x : out) x = scale * draw_unit(alpha, rng);
  return out;
}

Matrix sample_sas_isotropic(double alpha, double scale, std::size_t dim, std::size_t n, RngStream& rng) {
  check_alpha(alpha, 1.0, true, "sample_sas_isotropic");
  if (dim < 1) throw ParameterError("sample_sas_isotropic: dim must be >= 1");
  if (!(scale > 0.0)) throw ParameterError("sample_sas_isotropic: scale must be positive");
  Matrix m(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = m.row(i);
    draw_isotropic_unit(alpha, row, rng);
    for (double& v : row) v *= scale;
  }
  return m;
}

Matrix sample(const StableLaw& law, std::size_t n, RngStream& rng) {
  law.validate();
  if (law.isotropy == Isotropy::isotropic) return sample_sas_isotropic(law.alpha, law.scale, law.dim, n, rng);
  Matrix m(n, law.dim);
  for (double& v : m.data) v = law.scale * draw_unit(law.alpha, rng);
  return m;
}

double radial_density_quadrature(double alpha, std::size_t dim, double r, bool refine) {
  check_alpha(alpha, 1.0, false, "radial_density_quadrature");
  check_dim(dim, 8, "radial_density_quadrature");
  r = std::abs(r);
  double prev = hankel_quadrature(alpha, dim, r, 0);
  if (!refine) return prev;
  for (int level = 1; level <= 5; ++level) {
    const double cur = hankel_quadrature(alpha, dim, r, level);
    if (std::abs(cur - prev) <= 1e-8 * std::abs(cur) + 1e-300) return cur;
    prev = cur;
  }
  std::ostringstream os;
  os << "radial_density_quadrature: no convergence at alpha=" << alpha << " dim=" << dim << " r=" << r
     << " last estimate " << prev;
  throw NumericError(os.str());
}

double radial_density_tail_series(double alpha, std::size_t dim, double r) {
  check_alpha(alpha, 1.0, false, "radial_density_tail_series");
  const auto s = tail_coefficients(alpha, dim, 60);
  return eval_tail(s.coef, alpha, dim, std::abs(r)).first;
}

double radial_density(double alpha, std::size_t dim, double r) {
  check_alpha(alpha, 1.0, false, "radial_density");
  check_dim(dim, 4, "radial_density");
  r = std::abs(r);
  if (alpha == 2.0) return std::exp(gaussian_log_density(dim, r));
  if (r >= kSeriesRadius) return radial_density_tail_series(alpha, dim, r);
  const double f = radial_density_quadrature(alpha, dim, r, true);
  if (!(f > 0.0)) throw NumericError("radial_density: non-positive quadrature value");
  return f;
}

double radial_score(double alpha, std::size_t dim, double r) {
  check_alpha(alpha, 1.0, false, "radial_score");
  check_dim(dim, 4, "radial_score");
  const double sign = r < 0 ? -1.0 : 1.0;
  r = std::abs(r);
  if (alpha == 2.0) return -0.5 * r * sign;
  if (r == 0.0) return 0.0;
  if (r >= kSeriesRadius) {
    const auto s = tail_coefficients(alpha, dim, 60);
    const auto [f, df] = eval_tail(s.coef, alpha, dim, r);
    return sign * df / f;
  }
  const double fd = radial_density_quadrature(alpha, dim, r, true);
  const double fd2 = radial_density_quadrature(alpha, dim + 2, r, true);
  return sign * (-2.0 * kPi * r * fd2 / fd);
}

double pdf_sas_1d(double alpha, double x) { return radial_density(alpha, 1, x); }

double score_sas_1d(double alpha, double x) { return radial_score(alpha, 1, x); }

std::pair<double, double> ecf(ConstSpan samples, double u) {
  if (samples.empty()) throw ParameterError("ecf: empty sample");
  double re = 0.0;
  double im = 0.0;
  for (double x : samples) {
    re += std::cos(u * x);
    im += std::sin(u * x);
  }
  const double n = static_cast<double>(samples.size());
  return {re / n, im / n};
}

std::vector<double> ecf_check(ConstSpan samples, ConstSpan u_grid, double alpha, double scale) {
  if (samples.empty()) throw ParameterError("ecf_check: empty sample");
  std::vector<double> err(u_grid.size());
  const double sa = std::pow(scale, alpha);
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < u_grid.size(); ++k) {
    const auto [re, im] = ecf(samples, u_grid[k]);
    const double target = std::exp(-sa * std::pow(std::abs(u_grid[k]), alpha));
    err[k] = std::hypot(re - target, im);
  }
  return err;
}

RadialTable::RadialTable(double alpha, std::size_t dim) : alpha_(alpha), dim_(dim), gaussian_(alpha == 2.0) {
  check_alpha(alpha, 1.0, false, "RadialTable");
  check_dim(dim, 4, "RadialTable");
  if (gaussian_) return;

  tail_coef_ = tail_coefficients(alpha, dim, 60).coef;
  auto tail = [&](double r) { return eval_tail(tail_coef_, alpha_, dim_, r).first; };

  // Switch to the series once it agrees with quadrature at three successive radii.
  r_max_ = 0.0;
  int agree = 0;
  for (double r = 3.0; r <= 80.0; r += 0.25) {
    const double q = hankel_quadrature(alpha, dim, r, 0);
    const double s = tail(r);
    if (q > 0 && std::abs(q - s) <= 1e-9 * q) {
      if (++agree == 3) {
        r_max_ = r;
        break;
      }
    } else {
      agree = 0;
    }
  }
  if (r_max_ == 0.0) r_max_ = 80.0;

  const std::size_t n = static_cast<std::size_t>(std::ceil(r_max_ / step_)) + 1;
  r_max_ = step_ * static_cast<double>(n - 1);
  log_f_.resize(n);
  g_.resize(n);
  dg_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = step_ * static_cast<double>(i);
    const double fd = hankel_quadrature(alpha, dim, r, 0);
    const double fd2 = hankel_quadrature(alpha, dim + 2, r, 0);
    if (!(fd > 0.0)) {
      std::ostringstream os;
      os << "RadialTable: non-positive density at alpha=" << alpha << " dim=" << dim << " r=" << r;
      throw NumericError(os.str());
    }
    log_f_[i] = std::log(fd);
    g_[i] = -2.0 * kPi * r * fd2 / fd;
  }
  // g is odd in r, so reflect for the stencil near the origin.
  auto g_at = [&](long j) -> double {
    if (j < 0) return -g_[static_cast<std::size_t>(-j)];
    return g_[static_cast<std::size_t>(j)];
  };
  for (std::size_t i = 0; i < n; ++i) {
    const long j = static_cast<long>(i);
    if (i + 2 < n) {
      dg_[i] = (g_at(j - 2) - 8.0 * g_at(j - 1) + 8.0 * g_at(j + 1) - g_at(j + 2)) / (12.0 * step_);
    } else {
      dg_[i] = (3.0 * g_at(j) - 4.0 * g_at(j - 1) + g_at(j - 2)) / (2.0 * step_);
    }
  }
}

double RadialTable::tail_log_pdf(double r) const {
  return std::log(eval_tail(tail_coef_, alpha_, dim_, r).first);
}

double RadialTable::tail_score(double r) const {
  const auto [f, df] = eval_tail(tail_coef_, alpha_, dim_, r);
  return df / f;
}

double RadialTable::log_pdf(double r) const {
  r = std::abs(r);
  if (gaussian_) return gaussian_log_density(dim_, r);
  if (r >= r_max_) return tail_log_pdf(r);
  const double x = r / step_;
  const std::size_t i = std::min(static_cast<std::size_t>(x), log_f_.size() - 2);
  const double s = x - static_cast<double>(i);
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * log_f_[i] + h10 * step_ * g_[i] + h01 * log_f_[i + 1] + h11 * step_ * g_[i + 1];
}

double RadialTable::score(double r) const {
  const double sign = r < 0 ? -1.0 : 1.0;
  r = std::abs(r);
  if (gaussian_) return -0.5 * r * sign;
  if (r >= r_max_) return sign * tail_score(r);
  const double x = r / step_;
  const std::size_t i = std::min(static_cast<std::size_t>(x), g_.size() - 2);
  const double s = x - static_cast<double>(i);
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return sign * (h00 * g_[i] + h10 * step_ * dg_[i] + h01 * g_[i + 1] + h11 * step_ * dg_[i + 1]);
}

const RadialTable& radial_table(double alpha, std::size_t dim) {
  static std::mutex mu;
  static std::map<std::pair<double, std::size_t>, std::unique_ptr<RadialTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(alpha, dim);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, std::make_unique<RadialTable>(alpha, dim)).first;
  }
  return *it->second;
}

}  // namespace mafla::stable
