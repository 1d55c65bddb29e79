#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mafla/common.hpp"
#include "mafla/rng.hpp"
#include "mafla/targets.hpp"

namespace mafla::combopt {

/// Simple undirected graph; w_ij = A_ij.
struct Graph {
  std::size_t n = 0;
  std::vector<std::uint8_t> adjacency;  // n x n, row-major
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j, sorted
  std::vector<std::vector<std::size_t>> neighbors;

  static Graph from_edges(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges);
  std::size_t n_edges() const { return edges.size(); }
  bool has_edge(std::size_t i, std::size_t j) const { return adjacency[i * n + j] != 0; }
  /// out = A v.
  void multiply(ConstSpan v, MutSpan out) const;
};

/// Each i < j edge independently with probability p.
Graph gen_er(std::size_t n, double p, RngStream& rng);
/// Exactly m distinct edges chosen uniformly.
Graph gen_er_edges(std::size_t n, std::size_t m, RngStream& rng);
/// Preferential attachment from a complete seed graph on m + 1 vertices.
Graph gen_ba(std::size_t n, std::size_t m, RngStream& rng);

/// Edge-list text: header "n m", then "i j" per line, 0-indexed.
void write_graph(const std::string& path, const Graph& g);
Graph read_graph(const std::string& path);

/// pi(u) proportional to exp(-E(u) / temperature), E(u) = 1/2 tanh(u)^T A tanh(u).
class MaxCutTarget final : public Target {
 public:
  MaxCutTarget(const Graph& g, double temperature);
  std::size_t dim() const override { return g_.n; }
  double energy(ConstSpan u) const;
  void score(ConstSpan u, MutSpan out) const override;
  void score_vjp(ConstSpan u, ConstSpan v, MutSpan out) const override;
  bool analytic_vjp() const override { return true; }
  bool has_log_density() const override { return true; }
  double log_density(ConstSpan u) const override { return -energy(u) / temperature_; }
  const Graph& graph() const { return g_; }
  double temperature() const { return temperature_; }

 private:
  Graph g_;
  double temperature_;
};

/// E(u) = 1^T p + (penalty / 2) (1 - p)^T A (1 - p), p = sigmoid(u).
class VCTarget final : public Target {
 public:
  VCTarget(const Graph& g, double penalty, double temperature);
  std::size_t dim() const override { return g_.n; }
  double energy(ConstSpan u) const;
  void score(ConstSpan u, MutSpan out) const override;
  void score_vjp(ConstSpan u, ConstSpan v, MutSpan out) const override;
  bool analytic_vjp() const override { return true; }
  bool has_log_density() const override { return true; }
  double log_density(ConstSpan u) const override { return -energy(u) / temperature_; }
  const Graph& graph() const { return g_; }

 private:
  Graph g_;
  double penalty_;
  double temperature_;
};

double maxcut_energy(ConstSpan u, const MaxCutTarget& t);
Vec maxcut_score(ConstSpan u, const MaxCutTarget& t);
double vc_energy(ConstSpan u, const VCTarget& t);
Vec vc_score(ConstSpan u, const VCTarget& t);

/// x_i = +1 if u_i >= 0 else -1.
std::vector<int> sign_decode(ConstSpan u);
/// sum over edges of (1 - x_i x_j) / 2.
long cut_value(const std::vector<int>& x, const Graph& g);
/// Exhaustive maximum cut; n <= 24.
long brute_force_maxcut(const Graph& g);

/// Threshold at u > 0, then repeatedly cover the first uncovered edge (in
/// edge-list order) with its endpoint of larger sigmoid(u); ties go to the
/// lower index.
std::vector<int> greedy_decode_vc(ConstSpan u, const Graph& g);
std::vector<int> threshold_vc(ConstSpan u);

struct CoverMetrics {
  std::size_t size = 0;
  std::size_t uncovered = 0;
  double uncovered_ratio = 0.0;
};

CoverMetrics cover_metrics(const std::vector<int>& x, const Graph& g);
/// Exhaustive minimum vertex cover size; n <= 24.
std::size_t brute_force_vc(const Graph& g);

}  // namespace mafla::combopt
