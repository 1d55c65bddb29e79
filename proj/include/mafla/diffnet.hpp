#pragma once

#include <string>
#include <vector>

#include "mafla/common.hpp"
#include "mafla/rng.hpp"
#include "mafla/targets.hpp"

namespace mafla::diffnet {

enum class Activation { tanh, softplus };
enum class Head { vector, scalar_logit };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

/// Fully connected network with smooth hidden activations and a linear output.
///
/// widths = {in, h1, ..., out}. Parameters are stored flat, layer by layer,
/// each layer as a row-major weight block followed by its bias.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<std::size_t> widths, Activation act, Head head);

  std::size_t n_in() const { return widths_.front(); }
  std::size_t n_out() const { return widths_.back(); }
  std::size_t n_params() const { return params_.size(); }
  const std::vector<std::size_t>& widths() const { return widths_; }
  Activation activation() const { return act_; }
  Head head() const { return head_; }
  Vec& params() { return params_; }
  const Vec& params() const { return params_; }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init(RngStream& rng);

  void forward(ConstSpan x, MutSpan out) const;
  double forward_scalar(ConstSpan x) const;

  /// Scalar head: value and gradient with respect to the input.
  double value_and_input_grad(ConstSpan x, MutSpan grad) const;
  /// Jacobian-vector product J(x) v.
  void jvp(ConstSpan x, ConstSpan v, MutSpan out) const;
  /// Vector-Jacobian product J(x)^T w.
  void vjp(ConstSpan x, ConstSpan w, MutSpan out) const;

  /// Accumulates into param_grad the parameter gradient of
  ///   out_bar . f(x) + jv_bar . (J(x) v).
  /// For a scalar head with input-gradient cotangent G_bar, pass v = G_bar
  /// and jv_bar = {1}.
  void backprop(ConstSpan x, ConstSpan out_bar, ConstSpan v, ConstSpan jv_bar, MutSpan param_grad) const;

  /// Deterministic hash of the architecture, stored in checkpoints.
  std::uint64_t shape_hash() const;

 private:
  struct Layer {
    std::size_t in;
    std::size_t out;
    std::size_t w;  // offset of weights
    std::size_t b;  // offset of bias
  };
  std::vector<std::size_t> widths_;
  std::vector<Layer> layers_;
  Activation act_ = Activation::tanh;
  Head head_ = Head::vector;
  Vec params_;
};

/// Adam with global gradient-norm clipping.
class Adam {
 public:
  explicit Adam(std::size_t n, double lr = 1e-3, double clip = 10.0, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  /// Applies one update. Returns the pre-clip gradient norm.
  double step(Vec& params, Vec grad);
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_;
  double clip_;
  double beta1_;
  double beta2_;
  double eps_;
  std::size_t t_ = 0;
  Vec m_;
  Vec v_;
};

/// Learned score s_theta as a ScoreModel; its Jacobian products are exact.
class NetScore final : public ScoreModel {
 public:
  explicit NetScore(const Mlp& net) : net_(net) {}
  std::size_t dim() const override { return net_.n_in(); }
  void score(ConstSpan x, MutSpan out) const override { net_.forward(x, out); }
  void score_vjp(ConstSpan x, ConstSpan v, MutSpan out) const override { net_.vjp(x, v, out); }
  bool analytic_vjp() const override { return true; }

 private:
  const Mlp& net_;
};

/// Sliced score-matching objective mean_i [ 1/2 |s(x_i)|^2 + v_ij . J(x_i) v_ij ]
/// averaged over the projections v_ij (rows of `projections`, n_proj per
/// sample, stored consecutively). If grad is non-empty the parameter gradient
/// is accumulated into it.
double ssm_objective(const Mlp& net, const Matrix& x, const Matrix& projections, std::size_t n_proj,
                     MutSpan grad = {});

struct SsmConfig {
  std::size_t n_projections = 1;
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  double lr = 1e-3;
  double clip = 10.0;
};

/// Trains a vector-head net by sliced score matching with Gaussian projections.
/// Returns the per-epoch mean loss. Throws NumericError on a non-finite loss.
std::vector<double> ssm_train(Mlp& net, const Matrix& data, const SsmConfig& cfg, RngStream& rng);

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::string training;  // JSON text of the training config
};

/// JSON header line followed by the raw little-endian float64 parameters.
void save_checkpoint(const std::string& path, const Mlp& net, const CheckpointMeta& meta);
/// Loads parameters into a net of identical architecture; the shape hash must match.
CheckpointMeta load_checkpoint(const std::string& path, Mlp& net);

}  // namespace mafla::diffnet
