#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mafla/common.hpp"
#include "mafla/diffnet.hpp"
#include "mafla/proposal.hpp"
#include "mafla/rng.hpp"
#include "mafla/targets.hpp"

namespace mafla::sbm {

/// How the logit g(x', x) is built from the underlying network h on (x', x).
///   free:          g(x', x) = h(x', x)
///   antisymmetric: g(x', x) = h(x', x) - h(x, x')
enum class AcceptanceForm { free, antisymmetric };

AcceptanceForm form_from_string(const std::string& s);
std::string to_string(AcceptanceForm f);

/// Learned acceptance a(x', x) = sigmoid(g(x', x)).
class AcceptanceNet {
 public:
  AcceptanceNet() = default;
  AcceptanceNet(std::size_t dim, std::vector<std::size_t> hidden, diffnet::Activation act, AcceptanceForm form);

  std::size_t dim() const { return dim_; }
  AcceptanceForm form() const { return form_; }
  diffnet::Mlp& net() { return net_; }
  const diffnet::Mlp& net() const { return net_; }

  double logit(ConstSpan x_prime, ConstSpan x) const;
  /// Logit with its gradients with respect to x' (gp) and x (gx).
  double logit_grad(ConstSpan x_prime, ConstSpan x, MutSpan gp, MutSpan gx) const;
  /// Accumulates the parameter gradient of e_bar g + gp_bar . grad_{x'} g + gx_bar . grad_x g.
  void backprop(ConstSpan x_prime, ConstSpan x, double e_bar, ConstSpan gp_bar, ConstSpan gx_bar,
                MutSpan param_grad) const;
  double accept(ConstSpan x_prime, ConstSpan x) const { return sigmoid(logit(x_prime, x)); }

 private:
  std::size_t dim_ = 0;
  AcceptanceForm form_ = AcceptanceForm::free;
  diffnet::Mlp net_;
};

/// Gradients of log a(first, second) with respect to each argument.
struct LogAcceptGrad {
  Vec wrt_first;
  Vec wrt_second;
};

/// Provider of grad log a(first, second) for residual evaluation.
using LogAcceptGradFn = std::function<LogAcceptGrad(ConstSpan first, ConstSpan second)>;

LogAcceptGradFn log_accept_grad(const AcceptanceNet& net);
/// Constant acceptance: all gradients vanish.
LogAcceptGradFn constant_accept_grad(std::size_t dim);

/// Delta p = (-s(x), s(x')) and Delta q assembled from the proposal proxies,
/// both stacked as (x block, x' block).
struct Deltas {
  Vec delta_p;
  Vec delta_q;
};

Deltas deltas(const ProposalPair& pair, const ScoreModel& target_score, const DriftField& field,
              const DriftConfig& cfg);

/// Stacked residual grad log a(x', x) - grad log a(x, x') - Delta p - Delta q,
/// with grad = (grad_x, grad_x').
Vec residual(const ProposalPair& pair, const LogAcceptGradFn& accept, const ScoreModel& target_score,
             const DriftField& field, const DriftConfig& cfg);

/// Mean squared Euclidean norm of the residual rows.
double loss_l2(const Matrix& residuals);
/// Mean of sum_i |R_i|^alpha. alpha in (1, 2].
double loss_alpha(const Matrix& residuals, double alpha);

struct SBMConfig {
  double lambda_alpha = 1.0;
  double lambda_entropy = 0.01;
  // (epoch, eta); empty means the default 0.1 -> 1.0 ramp.
  std::vector<std::pair<std::size_t, double>> eta_schedule;
  std::size_t batch_size = 256;
  std::size_t batches_per_epoch = 4;
  std::size_t epochs = 200;
  double lr = 1e-3;
  double clip = 10.0;

  void validate() const;
  /// Piecewise-linear interpolation of the schedule.
  double eta_at(std::size_t epoch) const;
};

double loss_combined(const Matrix& residuals, double alpha, const SBMConfig& cfg);

/// Mean of a log a + (1 - a) log(1 - a), with a clamped to [1e-7, 1 - 1e-7].
double entropy_term(ConstSpan a_values);

/// Default curriculum: eta = 0.1 for the first 20% of epochs, then a linear ramp to 1.
std::vector<std::pair<std::size_t, double>> default_eta_schedule(std::size_t epochs);

using DataSampler = std::function<Matrix(std::size_t n, RngStream& rng)>;

/// Pairs (x~, eta v' + (1 - eta) x~) with x~ from data and v' ~ q(. | x~).
std::vector<std::pair<Vec, Vec>> curriculum_pairs(const DataSampler& data, const DriftField& field,
                                                  const DriftConfig& cfg, double eta, std::size_t n,
                                                  RngStream& rng);

/// Everything the loss needs about one pair, precomputed once per pair.
struct PairTerms {
  Vec x;
  Vec x_prime;
  Vec delta_p;  // stacked (x, x')
  Vec delta_q;
};

PairTerms pair_terms(ConstSpan x, ConstSpan x_prime, const ScoreModel& target_score, const DriftField& field,
                     const DriftConfig& cfg);

struct LossParts {
  double l2 = 0.0;
  double l_alpha = 0.0;
  double entropy = 0.0;
  double combined = 0.0;  // l2 + lambda_alpha l_alpha + lambda_entropy entropy
};

/// SBM loss of the acceptance net over a batch of pairs; accumulates the
/// parameter gradient into grad when it is non-empty.
LossParts sbm_loss(const AcceptanceNet& net, const std::vector<PairTerms>& batch, double alpha,
                   const SBMConfig& cfg, MutSpan grad = {});

struct TraceRow {
  std::size_t epoch;
  double eta;
  double loss_l2;
  double loss_alpha;
  double entropy;
  double combined;
};

/// Trains the acceptance net on fresh curriculum pairs each epoch.
/// Throws NumericError on a non-finite loss, leaving the last good parameters in place.
std::vector<TraceRow> train_acceptance(AcceptanceNet& net, const DataSampler& data, const ScoreModel& target_score,
                                       const DriftField& field, const DriftConfig& cfg, const SBMConfig& sbm_cfg,
                                       RngStream& rng);

}  // namespace mafla::sbm
