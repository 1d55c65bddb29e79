#include "mafla/targets.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

namespace mafla {

void ScoreModel::score_vjp(ConstSpan x, ConstSpan v, MutSpan out) const {
  const std::size_t d = dim();
  const double vn = norm2(v);
  if (vn == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double eps = std::max(1e-5, 1e-7 * norm2(x));
  Vec xp(x.begin(), x.end());
  Vec xm(x.begin(), x.end());
  for (std::size_t j = 0; j < d; ++j) {
    xp[j] += eps * v[j] / vn;
    xm[j] -= eps * v[j] / vn;
  }
  Vec sp(d);
  Vec sm(d);
  score(xp, sp);
  score(xm, sm);
  for (std::size_t j = 0; j < d; ++j) out[j] = vn * (sp[j] - sm[j]) / (2.0 * eps);
}

double Target::log_density(ConstSpan) const { throw CapabilityError("log-density unavailable for this target"); }

Matrix Target::sample(std::size_t, RngStream&) const {
  throw CapabilityError("exact sampler unavailable for this target");
}

namespace targets {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_stable(Kind k) { return k == Kind::stable_location_mixture || k == Kind::product_stable; }

}  // namespace

Kind kind_from_string(const std::string& s) {
  if (s == "gaussian_mixture") return Kind::gaussian_mixture;
  if (s == "cauchy_mixture") return Kind::cauchy_mixture;
  if (s == "stable_location_mixture") return Kind::stable_location_mixture;
  if (s == "product_stable") return Kind::product_stable;
  if (s == "co_relaxation") return Kind::co_relaxation;
  throw ParameterError("unknown target kind '" + s + "'");
}

std::string to_string(Kind k) {
  switch (k) {
    case Kind::gaussian_mixture:
      return "gaussian_mixture";
    case Kind::cauchy_mixture:
      return "cauchy_mixture";
    case Kind::stable_location_mixture:
      return "stable_location_mixture";
    case Kind::product_stable:
      return "product_stable";
    case Kind::co_relaxation:
      return "co_relaxation";
  }
  return "unknown";
}

void TargetSpec::validate() const {
  if (kind == Kind::co_relaxation) {
    throw ParameterError("co_relaxation targets are built from a graph, not a component list");
  }
  if (dim < 1) throw ParameterError("TargetSpec: dim must be >= 1");
  if (components.empty()) throw ParameterError("TargetSpec: no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0)) throw ParameterError("TargetSpec: weights must be positive");
    if (!(c.scale > 0.0) || !std::isfinite(c.scale)) throw ParameterError("TargetSpec: scales must be positive");
    if (c.center.size() != dim) throw ParameterError("TargetSpec: center dimension mismatch");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "TargetSpec: weights sum to " << total << ", expected 1";
    throw ParameterError(os.str());
  }
  if (is_stable(kind)) {
    if (!(alpha_tgt > 1.0 && alpha_tgt <= 2.0)) throw ParameterError("TargetSpec: alpha_tgt must lie in (1, 2]");
    if (kind == Kind::stable_location_mixture && dim > 4) {
      throw ParameterError("TargetSpec: isotropic stable components need dim <= 4; use product_stable");
    }
  }
}

MixtureTarget::MixtureTarget(TargetSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.kind == Kind::stable_location_mixture) table_ = &stable::radial_table(spec_.alpha_tgt, spec_.dim);
  if (spec_.kind == Kind::product_stable) table_ = &stable::radial_table(spec_.alpha_tgt, 1);
  for (const auto& c : spec_.components) log_w_.push_back(std::log(c.weight));
}

double MixtureTarget::component_log_density(std::size_t i, ConstSpan x, MutSpan grad) const {
  const auto& c = spec_.components[i];
  const std::size_t d = spec_.dim;
  const double s = c.scale;
  const double dd = static_cast<double>(d);
  if (spec_.kind == Kind::product_stable) {
    double lp = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double z = (x[j] - c.center[j]) / s;
      lp += table_->log_pdf(z) - std::log(s);
      grad[j] = table_->score(z) / s;
    }
    return lp;
  }
  double r2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) r2 += (x[j] - c.center[j]) * (x[j] - c.center[j]);
  const double r = std::sqrt(r2);
  switch (spec_.kind) {
    case Kind::gaussian_mixture: {
      for (std::size_t j = 0; j < d; ++j) grad[j] = -(x[j] - c.center[j]) / (2.0 * s * s);
      return -0.5 * dd * std::log(4.0 * kPi * s * s) - r2 / (4.0 * s * s);
    }
    case Kind::cauchy_mixture: {
      const double a = 0.5 * (dd + 1.0);
      for (std::size_t j = 0; j < d; ++j) grad[j] = -(dd + 1.0) * (x[j] - c.center[j]) / (s * s + r2);
      return std::lgamma(a) - a * std::log(kPi) - dd * std::log(s) - a * std::log1p(r2 / (s * s));
    }
    case Kind::stable_location_mixture: {
      const double g = table_->score(r / s) / s;
      for (std::size_t j = 0; j < d; ++j) grad[j] = r > 0.0 ? g * (x[j] - c.center[j]) / r : 0.0;
      return table_->log_pdf(r / s) - dd * std::log(s);
    }
    default:
      throw ParameterError("unsupported component kind");
  }
}

void MixtureTarget::score(ConstSpan x, MutSpan out) const {
  const std::size_t d = spec_.dim;
  const std::size_t m = spec_.components.size();
  if (x.size() != d || out.size() != d) throw ParameterError("MixtureTarget::score: dimension mismatch");
  if (!all_finite(x)) throw NumericError("MixtureTarget::score: non-finite input");
  if (m == 1) {
    component_log_density(0, x, out);
    return;
  }
  Vec lt(m);
  Vec grads(m * d);
  for (std::size_t i = 0; i < m; ++i) {
    lt[i] = log_w_[i] + component_log_density(i, x, MutSpan(grads.data() + i * d, d));
  }
  const double lse = log_sum_exp(lt);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double resp = std::exp(lt[i] - lse);
    for (std::size_t j = 0; j < d; ++j) out[j] += resp * grads[i * d + j];
  }
}

bool MixtureTarget::analytic_vjp() const {
  return spec_.kind == Kind::gaussian_mixture && spec_.components.size() == 1;
}

void MixtureTarget::score_vjp(ConstSpan x, ConstSpan v, MutSpan out) const {
  if (analytic_vjp()) {
    const double s = spec_.components[0].scale;
    for (std::size_t j = 0; j < spec_.dim; ++j) out[j] = -v[j] / (2.0 * s * s);
    return;
  }
  ScoreModel::score_vjp(x, v, out);
}

bool MixtureTarget::has_log_density() const { return true; }

double MixtureTarget::log_density(ConstSpan x) const {
  if (x.size() != spec_.dim) throw ParameterError("MixtureTarget::log_density: dimension mismatch");
  if (!all_finite(x)) throw NumericError("MixtureTarget::log_density: non-finite input");
  const std::size_t m = spec_.components.size();
  Vec lt(m);
  Vec scratch(spec_.dim);
  for (std::size_t i = 0; i < m; ++i) lt[i] = log_w_[i] + component_log_density(i, x, scratch);
  return log_sum_exp(lt);
}

std::vector<double> MixtureTarget::responsibilities(ConstSpan x) const {
  const std::size_t m = spec_.components.size();
  Vec lt(m);
  Vec scratch(spec_.dim);
  for (std::size_t i = 0; i < m; ++i) lt[i] = log_w_[i] + component_log_density(i, x, scratch);
  const double lse = log_sum_exp(lt);
  for (double& v : lt) v = std::exp(v - lse);
  return lt;
}

Matrix MixtureTarget::sample_labeled(std::size_t n, RngStream& rng, std::vector<std::size_t>& labels) const {
  const std::size_t d = spec_.dim;
  Matrix out(n, d);
  labels.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform();
    std::size_t k = 0;
    while (k + 1 < spec_.components.size() && u >= spec_.components[k].weight) {
      u -= spec_.components[k].weight;
      ++k;
    }
    labels[i] = k;
    const auto& c = spec_.components[k];
    auto row = out.row(i);
    switch (spec_.kind) {
      case Kind::gaussian_mixture:
        stable::draw_isotropic_unit(2.0, row, rng);
        break;
      case Kind::cauchy_mixture: {
        for (double& v : row) v = rng.normal();
        const double w = std::abs(rng.normal());
        for (double& v : row) v /= w;
        break;
      }
      case Kind::stable_location_mixture:
        stable::draw_isotropic_unit(spec_.alpha_tgt, row, rng);
        break;
      case Kind::product_stable:
        for (double& v : row) v = stable::draw_unit(spec_.alpha_tgt, rng);
        break;
      default:
        throw CapabilityError("exact sampler unavailable for this target");
    }
    for (std::size_t j = 0; j < d; ++j) row[j] = c.center[j] + c.scale * row[j];
  }
  return out;
}

Matrix MixtureTarget::sample(std::size_t n, RngStream& rng) const {
  std::vector<std::size_t> labels;
  return sample_labeled(n, rng, labels);
}

std::unique_ptr<MixtureTarget> make_target(const TargetSpec& spec) {
  if (spec.kind == Kind::co_relaxation) {
    throw CapabilityError("co_relaxation targets have no exact sampler; construct them from a graph");
  }
  return std::make_unique<MixtureTarget>(spec);
}

Vec mixture_score(const TargetSpec& spec, ConstSpan x) {
  MixtureTarget t(spec);
  Vec out(spec.dim);
  t.score(x, out);
  return out;
}

Matrix exact_sample(const TargetSpec& spec, std::size_t n, RngStream& rng) { return make_target(spec)->sample(n, rng); }

double log_density(const TargetSpec& spec, ConstSpan x) { return MixtureTarget(spec).log_density(x); }

}  // namespace targets
}  // namespace mafla
