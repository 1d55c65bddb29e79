#include "mafla/evalkit.hpp"

#include <algorithm>
#include <numeric>

#include "mafla/rng.hpp"

namespace mafla::evalkit {

namespace {

Vec sorted_copy(ConstSpan v) {
  Vec s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return s;
}

double w1_sorted(const Vec& a, const Vec& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == m) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(n);
  }
  // Walk the merged breakpoints k/n and l/m of both quantile functions.
  double total = 0.0;
  double t = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  const double dn = static_cast<double>(n);
  const double dm = static_cast<double>(m);
  while (i < n && j < m) {
    const double ta = static_cast<double>(i + 1) / dn;
    const double tb = static_cast<double>(j + 1) / dm;
    const double next = std::min(ta, tb);
    total += (next - t) * std::abs(a[i] - b[j]);
    t = next;
    if (ta <= next) ++i;
    if (tb <= next) ++j;
  }
  return total;
}

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

Vec finite_values(ConstSpan v) {
  Vec out;
  out.reserve(v.size());
  for (double x : v) {
    if (std::isfinite(x)) out.push_back(x);
  }
  return out;
}

Matrix stride_subsample(const Matrix& m, std::size_t max_rows) {
  if (max_rows == 0 || m.rows <= max_rows) return m;
  Matrix out(max_rows, m.cols);
  for (std::size_t k = 0; k < max_rows; ++k) {
    const std::size_t src = k * m.rows / max_rows;
    std::copy(m.row(src).begin(), m.row(src).end(), out.row(k).begin());
  }
  return out;
}

}  // namespace

double w1_1d(ConstSpan a, ConstSpan b) {
  if (a.empty() || b.empty()) throw ParameterError("w1_1d: empty input");
  return w1_sorted(sorted_copy(a), sorted_copy(b));
}

double sliced_w1(const Matrix& a, const Matrix& b, std::size_t n_proj, std::uint64_t seed) {
  if (a.cols != b.cols) throw ParameterError("sliced_w1: dimension mismatch");
  if (a.rows == 0 || b.rows == 0) throw ParameterError("sliced_w1: empty input");
  if (n_proj == 0) throw ParameterError("sliced_w1: n_proj must be >= 1");
  const std::size_t d = a.cols;
  if (d == 1) return w1_1d(a.data, b.data);
  std::vector<double> per(n_proj);
  const long np = static_cast<long>(n_proj);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < np; ++k) {
    RngStream rng(seed, derive_stream_id(0x5117ed, 1, static_cast<std::uint64_t>(k)));
    Vec u(d);
    for (double& v : u) v = rng.normal();
    const double un = norm2(u);
    for (double& v : u) v /= un;
    Vec pa(a.rows), pb(b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) pa[i] = dot(a.row(i), u);
    for (std::size_t i = 0; i < b.rows; ++i) pb[i] = dot(b.row(i), u);
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    per[static_cast<std::size_t>(k)] = w1_sorted(pa, pb);
  }
  return std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(n_proj);
}

double quantile(ConstSpan v, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ParameterError("quantile: beta outside [0, 1]");
  Vec s = finite_values(v);
  if (s.empty()) throw ParameterError("quantile: no finite values");
  std::sort(s.begin(), s.end());
  const double h = beta * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

Statistic statistic_from_string(const std::string& s) {
  if (s == "norm_radial") return Statistic::norm_radial;
  if (s == "per_coordinate_mean") return Statistic::per_coordinate_mean;
  throw ParameterError("unknown quantile statistic '" + s + "'");
}

std::string to_string(Statistic s) { return s == Statistic::norm_radial ? "norm_radial" : "per_coordinate_mean"; }

double quantile_error_1d(ConstSpan a, ConstSpan b, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw ParameterError("quantile_error: beta outside (0, 1)");
  if (a.empty() || b.empty()) throw ParameterError("quantile_error: empty input");
  return std::abs(quantile(a, beta) - quantile(b, beta));
}

double quantile_error(const Matrix& samples, const Matrix& reference, double beta, Statistic statistic) {
  if (samples.rows == 0 || reference.rows == 0) throw ParameterError("quantile_error: empty input");
  if (samples.cols != reference.cols) throw ParameterError("quantile_error: dimension mismatch");
  const std::size_t d = samples.cols;
  if (statistic == Statistic::per_coordinate_mean) {
    double acc = 0.0;
    Vec ca(samples.rows), cb(reference.rows);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < samples.rows; ++i) ca[i] = samples(i, j);
      for (std::size_t i = 0; i < reference.rows; ++i) cb[i] = reference(i, j);
      acc += quantile_error_1d(ca, cb, beta);
    }
    return acc / static_cast<double>(d);
  }
  Vec mean(d, 0.0);
  std::size_t nf = 0;
  for (std::size_t i = 0; i < reference.rows; ++i) {
    auto r = reference.row(i);
    if (!all_finite(r)) continue;
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
    ++nf;
  }
  for (double& m : mean) m /= static_cast<double>(nf);
  auto radial = [&](const Matrix& m) {
    Vec out(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += (m(i, j) - mean[j]) * (m(i, j) - mean[j]);
      out[i] = std::sqrt(s);
    }
    return out;
  };
  return quantile_error_1d(radial(samples), radial(reference), beta);
}

KsResult ks_two_sample(ConstSpan a, ConstSpan b) {
  Vec x = finite_values(a);
  Vec y = finite_values(b);
  if (x.empty() || y.empty()) throw ParameterError("ks_two_sample: empty input");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double dmax = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    dmax = std::max(dmax, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double ne = std::sqrt(n * m / (n + m));
  KsResult r;
  r.statistic = dmax;
  r.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * dmax);
  return r;
}

Matrix finite_rows(const Matrix& m, std::size_t* dropped) {
  Matrix out(0, m.cols);
  out.data.reserve(m.data.size());
  std::size_t drop = 0;
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto r = m.row(i);
    if (!all_finite(r)) {
      ++drop;
      continue;
    }
    out.data.insert(out.data.end(), r.begin(), r.end());
    ++out.rows;
  }
  if (dropped != nullptr) *dropped = drop;
  return out;
}

MetricReport report(const Matrix& samples, const Matrix& reference, const MetricsConfig& cfg) {
  if (samples.rows == 0) throw ParameterError("report: empty trajectory");
  MetricReport rep;
  Matrix s = finite_rows(samples, &rep.n_dropped);
  if (s.rows == 0) throw NumericError("report: every sample is non-finite");
  s = stride_subsample(s, cfg.max_samples);
  rep.n_samples = s.rows;
  rep.n_reference = reference.rows;
  rep.statistic = cfg.statistic;
  rep.seed = cfg.seed;
  rep.w1 = sliced_w1(s, reference, cfg.n_proj, cfg.seed);
  rep.q95_err = quantile_error(s, reference, 0.95, cfg.statistic);
  rep.q99_err = quantile_error(s, reference, 0.99, cfg.statistic);
  return rep;
}

}  // namespace mafla::evalkit
