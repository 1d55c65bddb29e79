#include "mafla/diffnet.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace mafla::diffnet {

namespace {

struct ActDerivs {
  double f;
  double d1;
  double d2;
};

inline ActDerivs activate(Activation a, double z) {
  if (a == Activation::tanh) {
    const double t = std::tanh(z);
    const double s = 1.0 - t * t;
    return {t, s, -2.0 * t * s};
  }
  const double sg = sigmoid(z);
  const double f = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return {f, sg, sg * (1.0 - sg)};
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffU;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "softplus") return Activation::softplus;
  throw ParameterError("unknown activation '" + s + "'");
}

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "softplus"; }

Mlp::Mlp(std::vector<std::size_t> widths, Activation act, Head head)
    : widths_(std::move(widths)), act_(act), head_(head) {
  if (widths_.size() < 2) throw ParameterError("Mlp: need at least input and output widths");
  for (auto w : widths_) {
    if (w < 1) throw ParameterError("Mlp: widths must be >= 1");
  }
  if (head_ == Head::scalar_logit && widths_.back() != 1) throw ParameterError("Mlp: scalar head needs output width 1");
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    Layer L{widths_[l], widths_[l + 1], off, off + widths_[l] * widths_[l + 1]};
    off = L.b + L.out;
    layers_.push_back(L);
  }
  params_.assign(off, 0.0);
}

void Mlp::init(RngStream& rng) {
  for (const auto& L : layers_) {
    const double lim = 1.0 / std::sqrt(static_cast<double>(L.in));
    for (std::size_t k = 0; k < L.in * L.out + L.out; ++k) params_[L.w + k] = lim * (2.0 * rng.uniform() - 1.0);
  }
}

void Mlp::forward(ConstSpan x, MutSpan out) const {
  if (x.size() != n_in() || out.size() != n_out()) throw ParameterError("Mlp::forward: shape mismatch");
  Vec a(x.begin(), x.end());
  Vec z;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    z.assign(L.out, 0.0);
    for (std::size_t i = 0; i < L.out; ++i) {
      double s = params_[L.b + i];
      const double* w = &params_[L.w + i * L.in];
      for (std::size_t j = 0; j < L.in; ++j) s += w[j] * a[j];
      z[i] = s;
    }
    if (l + 1 < layers_.size()) {
      for (double& v : z) v = activate(act_, v).f;
    }
    a.swap(z);
  }
  std::copy(a.begin(), a.end(), out.begin());
}

double Mlp::forward_scalar(ConstSpan x) const {
  double y = 0.0;
  forward(x, MutSpan(&y, 1));
  return y;
}

void Mlp::vjp(ConstSpan x, ConstSpan w, MutSpan out) const {
  if (x.size() != n_in() || w.size() != n_out() || out.size() != n_in()) {
    throw ParameterError("Mlp::vjp: shape mismatch");
  }
  const std::size_t nl = layers_.size();
  std::vector<Vec> acts(nl);  // acts[l] = input to layer l
  std::vector<Vec> d1(nl);    // phi'(z) of layer l (hidden only)
  acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l + 1 < nl; ++l) {
    const auto& L = layers_[l];
    acts[l + 1].resize(L.out);
    d1[l].resize(L.out);
    for (std::size_t i = 0; i < L.out; ++i) {
      double s = params_[L.b + i];
      const double* wr = &params_[L.w + i * L.in];
      for (std::size_t j = 0; j < L.in; ++j) s += wr[j] * acts[l][j];
      const auto ad = activate(act_, s);
      acts[l + 1][i] = ad.f;
      d1[l][i] = ad.d1;
    }
  }
  Vec delta(w.begin(), w.end());
  for (std::size_t l = nl; l-- > 0;) {
    const auto& L = layers_[l];
    Vec back(L.in, 0.0);
    for (std::size_t i = 0; i < L.out; ++i) {
      const double* wr = &params_[L.w + i * L.in];
      for (std::size_t j = 0; j < L.in; ++j) back[j] += wr[j] * delta[i];
    }
    if (l > 0) {
      for (std::size_t j = 0; j < L.in; ++j) back[j] *= d1[l - 1][j];
    }
    delta.swap(back);
  }
  std::copy(delta.begin(), delta.end(), out.begin());
}

double Mlp::value_and_input_grad(ConstSpan x, MutSpan grad) const {
  if (n_out() != 1) throw ParameterError("Mlp::value_and_input_grad: needs a scalar output");
  const double one = 1.0;
  vjp(x, ConstSpan(&one, 1), grad);
  return forward_scalar(x);
}

void Mlp::jvp(ConstSpan x, ConstSpan v, MutSpan out) const {
  if (x.size() != n_in() || v.size() != n_in() || out.size() != n_out()) {
    throw ParameterError("Mlp::jvp: shape mismatch");
  }
  Vec a(x.begin(), x.end());
  Vec ad(v.begin(), v.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    Vec z(L.out);
    Vec zd(L.out);
    for (std::size_t i = 0; i < L.out; ++i) {
      double s = params_[L.b + i];
      double sd = 0.0;
      const double* wr = &params_[L.w + i * L.in];
      for (std::size_t j = 0; j < L.in; ++j) {
        s += wr[j] * a[j];
        sd += wr[j] * ad[j];
      }
      z[i] = s;
      zd[i] = sd;
    }
    if (l + 1 < layers_.size()) {
      for (std::size_t i = 0; i < L.out; ++i) {
        const auto dv = activate(act_, z[i]);
        z[i] = dv.f;
        zd[i] *= dv.d1;
      }
    }
    a.swap(z);
    ad.swap(zd);
  }
  std::copy(ad.begin(), ad.end(), out.begin());
}

void Mlp::backprop(ConstSpan x, ConstSpan out_bar, ConstSpan v, ConstSpan jv_bar, MutSpan param_grad) const {
  if (x.size() != n_in() || out_bar.size() != n_out() || param_grad.size() != params_.size()) {
    throw ParameterError("Mlp::backprop: shape mismatch");
  }
  const bool tangent = !v.empty();
  if (tangent && (v.size() != n_in() || jv_bar.size() != n_out())) {
    throw ParameterError("Mlp::backprop: tangent shape mismatch");
  }
  const std::size_t nl = layers_.size();
  // Forward pass with the tangent carried alongside.
  std::vector<Vec> a(nl), at(nl), zt(nl), d1(nl), d2(nl);
  a[0].assign(x.begin(), x.end());
  at[0] = tangent ? Vec(v.begin(), v.end()) : Vec(n_in(), 0.0);
  for (std::size_t l = 0; l + 1 < nl; ++l) {
    const auto& L = layers_[l];
    a[l + 1].resize(L.out);
    at[l + 1].resize(L.out);
    zt[l].resize(L.out);
    d1[l].resize(L.out);
    d2[l].resize(L.out);
    for (std::size_t i = 0; i < L.out; ++i) {
      double s = params_[L.b + i];
      double sd = 0.0;
      const double* wr = &params_[L.w + i * L.in];
      for (std::size_t j = 0; j < L.in; ++j) {
        s += wr[j] * a[l][j];
        sd += wr[j] * at[l][j];
      }
      const auto dv = activate(act_, s);
      a[l + 1][i] = dv.f;
      zt[l][i] = sd;
      d1[l][i] = dv.d1;
      d2[l][i] = dv.d2;
      at[l + 1][i] = dv.d1 * sd;
    }
  }
  Vec zb(out_bar.begin(), out_bar.end());
  Vec ztb = tangent ? Vec(jv_bar.begin(), jv_bar.end()) : Vec(n_out(), 0.0);
  for (std::size_t l = nl; l-- > 0;) {
    const auto& L = layers_[l];
    for (std::size_t i = 0; i < L.out; ++i) {
      double* gw = &param_grad[L.w + i * L.in];
      for (std::size_t j = 0; j < L.in; ++j) gw[j] += zb[i] * a[l][j] + ztb[i] * at[l][j];
      param_grad[L.b + i] += zb[i];
    }
    if (l == 0) break;
    Vec ab(L.in, 0.0);
    Vec atb(L.in, 0.0);
    for (std::size_t i = 0; i < L.out; ++i) {
      const double* wr = &params_[L.w + i * L.in];
      for (std::size_t j = 0; j < L.in; ++j) {
        ab[j] += wr[j] * zb[i];
        atb[j] += wr[j] * ztb[i];
      }
    }
    zb.assign(L.in, 0.0);
    ztb.assign(L.in, 0.0);
    for (std::size_t j = 0; j < L.in; ++j) {
      ztb[j] = atb[j] * d1[l - 1][j];
      zb[j] = ab[j] * d1[l - 1][j] + atb[j] * zt[l - 1][j] * d2[l - 1][j];
    }
  }
}

std::uint64_t Mlp::shape_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto w : widths_) h = fnv1a(h, w);
  h = fnv1a(h, static_cast<std::uint64_t>(act_));
  h = fnv1a(h, static_cast<std::uint64_t>(head_));
  return h;
}

Adam::Adam(std::size_t n, double lr, double clip, double beta1, double beta2, double eps)
    : lr_(lr), clip_(clip), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {
  if (!(lr > 0.0)) throw ParameterError("Adam: lr must be positive");
}

double Adam::step(Vec& params, Vec grad) {
  if (grad.size() != params.size() || grad.size() != m_.size()) throw ParameterError("Adam::step: size mismatch");
  const double gn = norm2(grad);
  if (!std::isfinite(gn)) throw NumericError("Adam::step: non-finite gradient");
  if (clip_ > 0.0 && gn > clip_) {
    const double s = clip_ / gn;
    for (double& g : grad) g *= s;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grad[k];
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grad[k] * grad[k];
    params[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
  }
  return gn;
}

double ssm_objective(const Mlp& net, const Matrix& x, const Matrix& projections, std::size_t n_proj, MutSpan grad) {
  const std::size_t d = net.n_in();
  if (net.n_out() != d) throw ParameterError("ssm_objective: score net must map R^d to R^d");
  if (x.cols != d || projections.cols != d || projections.rows != x.rows * n_proj || n_proj == 0) {
    throw ParameterError("ssm_objective: shape mismatch");
  }
  const double n = static_cast<double>(x.rows);
  const double p = static_cast<double>(n_proj);
  double total = 0.0;
  Vec s(d), jv(d), vbar(d);
  for (std::size_t i = 0; i < x.rows; ++i) {
    net.forward(x.row(i), s);
    total += 0.5 * dot(s, s);
    if (!grad.empty()) {
      for (std::size_t j = 0; j < d; ++j) s[j] /= n;
      net.backprop(x.row(i), s, {}, {}, grad);
    }
    for (std::size_t k = 0; k < n_proj; ++k) {
      auto v = projections.row(i * n_proj + k);
      net.jvp(x.row(i), v, jv);
      total += dot(v, jv) / p;
      if (!grad.empty()) {
        for (std::size_t j = 0; j < d; ++j) vbar[j] = v[j] / (n * p);
        Vec zero(d, 0.0);
        net.backprop(x.row(i), zero, v, vbar, grad);
      }
    }
  }
  return total / n;
}

std::vector<double> ssm_train(Mlp& net, const Matrix& data, const SsmConfig& cfg, RngStream& rng) {
  if (data.rows == 0) throw ParameterError("ssm_train: empty data");
  if (cfg.batch_size == 0 || cfg.n_projections == 0) throw ParameterError("ssm_train: zero batch or projections");
  const std::size_t d = data.cols;
  Adam opt(net.n_params(), cfg.lr, cfg.clip);
  std::vector<std::size_t> order(data.rows);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> trace;
  for (std::size_t ep = 0; ep < cfg.epochs; ++ep) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double acc = 0.0;
    std::size_t nb = 0;
    for (std::size_t start = 0; start < data.rows; start += cfg.batch_size) {
      const std::size_t m = std::min(cfg.batch_size, data.rows - start);
      Matrix xb(m, d);
      for (std::size_t i = 0; i < m; ++i) {
        auto src = data.row(order[start + i]);
        std::copy(src.begin(), src.end(), xb.row(i).begin());
      }
      Matrix vb(m * cfg.n_projections, d);
      for (double& v : vb.data) v = rng.normal();
      Vec g(net.n_params(), 0.0);
      const double loss = ssm_objective(net, xb, vb, cfg.n_projections, g);
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "ssm_train: non-finite loss at epoch " << ep << ", batch " << nb;
        throw NumericError(os.str());
      }
      opt.step(net.params(), std::move(g));
      acc += loss;
      ++nb;
    }
    trace.push_back(acc / static_cast<double>(nb));
  }
  return trace;
}

void save_checkpoint(const std::string& path, const Mlp& net, const CheckpointMeta& meta) {
  nlohmann::json h;
  h["format"] = "mafla-mlp";
  h["widths"] = net.widths();
  h["activation"] = to_string(net.activation());
  h["head"] = net.head() == Head::vector ? "vector" : "scalar_logit";
  h["n_params"] = net.n_params();
  h["shape_hash"] = net.shape_hash();
  h["seed"] = meta.seed;
  h["training"] = meta.training.empty() ? nlohmann::json::object() : nlohmann::json::parse(meta.training);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  os << h.dump() << '\n';
  for (double p : net.params()) {
    auto bits = std::bit_cast<std::uint64_t>(p);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
}

CheckpointMeta load_checkpoint(const std::string& path, Mlp& net) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path);
  std::string line;
  std::getline(is, line);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint " + path + ": bad header: " + e.what());
  }
  if (h.value("format", "") != "mafla-mlp") throw std::runtime_error("checkpoint " + path + ": unknown format");
  if (h.at("shape_hash").get<std::uint64_t>() != net.shape_hash() ||
      h.at("n_params").get<std::size_t>() != net.n_params()) {
    throw std::runtime_error("checkpoint " + path + ": architecture does not match");
  }
  for (double& p : net.params()) {
    std::uint64_t bits = 0;
    if (!is.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
      throw std::runtime_error("checkpoint " + path + ": truncated parameter block");
    }
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    p = std::bit_cast<double>(bits);
  }
  CheckpointMeta meta;
  meta.seed = h.value("seed", std::uint64_t{0});
  meta.training = h.at("training").dump();
  return meta;
}

}  // namespace mafla::diffnet
