#include "mafla/combopt.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace mafla::combopt {

Graph Graph::from_edges(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges) {
  Graph g;
  g.n = n;
  g.adjacency.assign(n * n, 0);
  g.neighbors.assign(n, {});
  for (auto& [i, j] : edges) {
    if (i == j || i >= n || j >= n) throw ParameterError("Graph: invalid edge");
    if (i > j) std::swap(i, j);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const auto& [i, j] : edges) {
    g.adjacency[i * n + j] = 1;
    g.adjacency[j * n + i] = 1;
    g.neighbors[i].push_back(j);
    g.neighbors[j].push_back(i);
  }
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  g.edges = std::move(edges);
  return g;
}

void Graph::multiply(ConstSpan v, MutSpan out) const {
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (auto j : neighbors[i]) s += v[j];
    out[i] = s;
  }
}

Graph gen_er(std::size_t n, double p, RngStream& rng) {
  if (n < 1) throw ParameterError("gen_er: n must be >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw ParameterError("gen_er: p must lie in (0, 1]");
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.uniform() < p) e.emplace_back(i, j);
    }
  }
  return Graph::from_edges(n, std::move(e));
}

Graph gen_er_edges(std::size_t n, std::size_t m, RngStream& rng) {
  if (n < 2) throw ParameterError("gen_er_edges: n must be >= 2");
  if (m > n * (n - 1) / 2) throw ParameterError("gen_er_edges: too many edges");
  std::set<std::pair<std::size_t, std::size_t>> chosen;
  while (chosen.size() < m) {
    std::size_t i = rng.below(n);
    std::size_t j = rng.below(n);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    chosen.emplace(i, j);
  }
  return Graph::from_edges(n, {chosen.begin(), chosen.end()});
}

Graph gen_ba(std::size_t n, std::size_t m, RngStream& rng) {
  if (m < 1 || m >= n) throw ParameterError("gen_ba: need 1 <= m < n");
  std::vector<std::pair<std::size_t, std::size_t>> e;
  std::vector<std::size_t> ends;  // each vertex repeated by degree
  for (std::size_t i = 0; i <= m; ++i) {
    for (std::size_t j = i + 1; j <= m; ++j) {
      e.emplace_back(i, j);
      ends.push_back(i);
      ends.push_back(j);
    }
  }
  for (std::size_t v = m + 1; v < n; ++v) {
    std::vector<std::size_t> targets;
    while (targets.size() < m) {
      const std::size_t t = ends[rng.below(ends.size())];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (auto t : targets) {
      e.emplace_back(t, v);
      ends.push_back(t);
      ends.push_back(v);
    }
  }
  return Graph::from_edges(n, std::move(e));
}

void write_graph(const std::string& path, const Graph& g) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write graph file " + path);
  os << g.n << ' ' << g.n_edges() << '\n';
  for (const auto& [i, j] : g.edges) os << i << ' ' << j << '\n';
}

Graph read_graph(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read graph file " + path);
  std::size_t n = 0;
  std::size_t m = 0;
  if (!(is >> n >> m)) throw ParameterError(path + ": bad header, expected 'n m'");
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t i = 0;
    std::size_t j = 0;
    if (!(is >> i >> j)) {
      std::ostringstream os;
      os << path << ": expected " << m << " edges, read " << k;
      throw ParameterError(os.str());
    }
    e.emplace_back(i, j);
  }
  return Graph::from_edges(n, std::move(e));
}

MaxCutTarget::MaxCutTarget(const Graph& g, double temperature) : g_(g), temperature_(temperature) {
  if (!(temperature > 0.0)) throw ParameterError("MaxCutTarget: temperature must be positive");
}

double MaxCutTarget::energy(ConstSpan u) const {
  double e = 0.0;
  for (const auto& [i, j] : g_.edges) e += std::tanh(u[i]) * std::tanh(u[j]);
  return e;  // 1/2 y^T A y counts each edge twice
}

void MaxCutTarget::score(ConstSpan u, MutSpan out) const {
  const std::size_t n = g_.n;
  Vec y(n), ay(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(u[i]);
  g_.multiply(y, ay);
  for (std::size_t i = 0; i < n; ++i) out[i] = -(1.0 - y[i] * y[i]) * ay[i] / temperature_;
}

void MaxCutTarget::score_vjp(ConstSpan u, ConstSpan v, MutSpan out) const {
  const std::size_t n = g_.n;
  Vec y(n), ay(n), dv(n), adv(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = std::tanh(u[i]);
    dv[i] = (1.0 - y[i] * y[i]) * v[i];
  }
  g_.multiply(y, ay);
  g_.multiply(dv, adv);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = 1.0 - y[i] * y[i];
    out[i] = -(s * adv[i] - 2.0 * y[i] * s * ay[i] * v[i]) / temperature_;
  }
}

VCTarget::VCTarget(const Graph& g, double penalty, double temperature)
    : g_(g), penalty_(penalty), temperature_(temperature) {
  if (!(penalty > 0.0)) throw ParameterError("VCTarget: penalty must be positive");
  if (!(temperature > 0.0)) throw ParameterError("VCTarget: temperature must be positive");
}

double VCTarget::energy(ConstSpan u) const {
  double e = 0.0;
  for (std::size_t i = 0; i < g_.n; ++i) e += sigmoid(u[i]);
  double pen = 0.0;
  for (const auto& [i, j] : g_.edges) pen += sigmoid(-u[i]) * sigmoid(-u[j]);
  return e + penalty_ * pen;  // (lambda/2) q^T A q = lambda * sum over edges
}

void VCTarget::score(ConstSpan u, MutSpan out) const {
  const std::size_t n = g_.n;
  Vec q(n), aq(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = sigmoid(-u[i]);
  g_.multiply(q, aq);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = 1.0 - q[i];
    out[i] = -p * q[i] * (1.0 - penalty_ * aq[i]) / temperature_;
  }
}

void VCTarget::score_vjp(ConstSpan u, ConstSpan v, MutSpan out) const {
  const std::size_t n = g_.n;
  Vec q(n), aq(n), sv(n), asv(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = sigmoid(-u[i]);
    sv[i] = (1.0 - q[i]) * q[i] * v[i];
  }
  g_.multiply(q, aq);
  g_.multiply(sv, asv);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = 1.0 - q[i];
    const double s1 = p * q[i];
    const double s2 = s1 * (1.0 - 2.0 * p);
    out[i] = -(s2 * (1.0 - penalty_ * aq[i]) * v[i] + penalty_ * s1 * asv[i]) / temperature_;
  }
}

double maxcut_energy(ConstSpan u, const MaxCutTarget& t) { return t.energy(u); }

Vec maxcut_score(ConstSpan u, const MaxCutTarget& t) {
  Vec out(t.dim());
  t.score(u, out);
  return out;
}

double vc_energy(ConstSpan u, const VCTarget& t) { return t.energy(u); }

Vec vc_score(ConstSpan u, const VCTarget& t) {
  Vec out(t.dim());
  t.score(u, out);
  return out;
}

std::vector<int> sign_decode(ConstSpan u) {
  std::vector<int> x(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) x[i] = u[i] >= 0.0 ? 1 : -1;
  return x;
}

long cut_value(const std::vector<int>& x, const Graph& g) {
  if (x.size() != g.n) throw ParameterError("cut_value: size mismatch");
  long c = 0;
  for (const auto& [i, j] : g.edges) c += (1 - x[i] * x[j]) / 2;
  return c;
}

long brute_force_maxcut(const Graph& g) {
  if (g.n > 24) throw ParameterError("brute_force_maxcut: n too large");
  if (g.n < 2) return 0;
  long best = 0;
  const std::uint64_t total = std::uint64_t{1} << (g.n - 1);  // vertex n-1 fixed on one side
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    long c = 0;
    for (const auto& [i, j] : g.edges) c += static_cast<long>(((mask >> i) ^ (mask >> j)) & 1U);
    best = std::max(best, c);
  }
  return best;
}

std::vector<int> threshold_vc(ConstSpan u) {
  std::vector<int> x(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) x[i] = u[i] > 0.0 ? 1 : 0;
  return x;
}

std::vector<int> greedy_decode_vc(ConstSpan u, const Graph& g) {
  if (u.size() != g.n) throw ParameterError("greedy_decode_vc: size mismatch");
  auto x = threshold_vc(u);
  for (const auto& [i, j] : g.edges) {
    if (x[i] || x[j]) continue;
    // sigmoid is monotone, so compare u directly.
    if (u[j] > u[i]) {
      x[j] = 1;
    } else {
      x[i] = 1;
    }
  }
  return x;
}

CoverMetrics cover_metrics(const std::vector<int>& x, const Graph& g) {
  if (x.size() != g.n) throw ParameterError("cover_metrics: size mismatch");
  CoverMetrics m;
  for (int v : x) m.size += v != 0;
  for (const auto& [i, j] : g.edges) m.uncovered += (!x[i] && !x[j]);
  m.uncovered_ratio = g.n_edges() ? static_cast<double>(m.uncovered) / static_cast<double>(g.n_edges()) : 0.0;
  return m;
}

std::size_t brute_force_vc(const Graph& g) {
  if (g.n > 24) throw ParameterError("brute_force_vc: n too large");
  std::size_t best = g.n;
  const std::uint64_t total = std::uint64_t{1} << g.n;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    const auto size = static_cast<std::size_t>(__builtin_popcountll(mask));
    if (size >= best) continue;
    bool ok = true;
    for (const auto& [i, j] : g.edges) {
      if (!(((mask >> i) | (mask >> j)) & 1U)) {
        ok = false;
        break;
      }
    }
    if (ok) best = size;
  }
  return best;
}

}  // namespace mafla::combopt
