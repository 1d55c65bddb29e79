#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "mafla/combopt.hpp"

using namespace mafla;
using namespace mafla::combopt;

namespace {

Graph k3() { return Graph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}}); }
Graph p3() { return Graph::from_edges(3, {{0, 1}, {1, 2}}); }

long cut_by_enumeration(const std::vector<int>& x, const Graph& g) {
  long c = 0;
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = i + 1; j < g.n; ++j) {
      if (g.has_edge(i, j) && x[i] != x[j]) ++c;
    }
  }
  return c;
}

template <class T>
void check_score_fd(const T& t, RngStream& rng, int n_points) {
  const std::size_t n = t.dim();
  for (int k = 0; k < n_points; ++k) {
    Vec u(n);
    for (double& v : u) v = 1.5 * rng.normal();
    Vec s(n);
    t.score(u, s);
    for (std::size_t i = 0; i < n; ++i) {
      Vec up = u, dn = u;
      up[i] += 1e-6;
      dn[i] -= 1e-6;
      const double fd = (t.log_density(up) - t.log_density(dn)) / 2e-6;
      REQUIRE(std::abs(s[i] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

}  // namespace

TEST_CASE("graph construction invariants") {
  const auto g = Graph::from_edges(4, {{2, 1}, {0, 3}, {1, 2}});
  CHECK(g.n_edges() == 2);
  CHECK(g.edges.front() == std::pair<std::size_t, std::size_t>{0, 3});
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(g.adjacency[i * 4 + i] == 0);
    for (std::size_t j = 0; j < 4; ++j) CHECK(g.has_edge(i, j) == g.has_edge(j, i));
  }
  CHECK_THROWS_AS(Graph::from_edges(3, {{1, 1}}), ParameterError);
  CHECK_THROWS_AS(Graph::from_edges(3, {{0, 3}}), ParameterError);
}

TEST_CASE("ER and BA generators") {
  double mean = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RngStream rng(seed, 0);
    mean += static_cast<double>(gen_er(64, 0.1, rng).n_edges());
  }
  CHECK(std::abs(mean / 200 - 201.6) < 5.0);
  RngStream rng(1, 0);
  CHECK(gen_er(2, 1.0, rng).n_edges() == 1);
  for (std::size_t n : {3, 10, 64}) {
    const auto g = gen_ba(n, 2, rng);
    CHECK(g.n_edges() == 2 * n - 3);
  }
  const auto ba = gen_ba(50, 3, rng);
  CHECK(ba.n_edges() == 6 + 3 * (50 - 4));
  CHECK(gen_er_edges(64, 160, rng).n_edges() == 160);
  CHECK_THROWS_AS(gen_ba(3, 3, rng), ParameterError);
  CHECK_THROWS_AS(gen_er(5, 0.0, rng), ParameterError);
  RngStream a(9, 0), b(9, 0);
  CHECK(gen_ba(40, 2, a).edges == gen_ba(40, 2, b).edges);
}

TEST_CASE("graph file round-trip") {
  RngStream rng(2, 0);
  const auto g = gen_er(20, 0.3, rng);
  const auto path = (std::filesystem::temp_directory_path() / "mafla_graph_test.txt").string();
  write_graph(path, g);
  const auto h = read_graph(path);
  CHECK(h.n == g.n);
  CHECK(h.edges == g.edges);
  std::filesystem::remove(path);
}

TEST_CASE("MaxCut energy and score") {
  const auto g = k3();
  MaxCutTarget t(g, 0.5);
  const Vec zero(3, 0.0);
  CHECK(t.energy(zero) == 0.0);
  CHECK(maxcut_score(zero, t) == Vec{0.0, 0.0, 0.0});
  CHECK(t.energy(Vec{10.0, 10.0, -10.0}) == doctest::Approx(-1.0).epsilon(1e-7));
  RngStream rng(3, 0);
  check_score_fd(t, rng, 100);
  const auto er = gen_er(16, 0.3, rng);
  MaxCutTarget te(er, 0.7);
  check_score_fd(te, rng, 100);
  CHECK_THROWS_AS(MaxCutTarget(g, 0.0), ParameterError);
}

TEST_CASE("vertex cover energy and score") {
  RngStream rng(4, 0);
  const auto g = gen_er_edges(12, 30, rng);
  VCTarget t(g, 2.0, 0.5);
  CHECK(t.energy(Vec(12, 40.0)) == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(t.energy(Vec(12, -40.0)) == doctest::Approx(2.0 * 30).epsilon(1e-12));
  check_score_fd(t, rng, 100);
  VCTarget p(p3(), 3.0, 1.0);
  check_score_fd(p, rng, 100);
}

TEST_CASE("analytic score vjp matches FD of the score") {
  RngStream rng(5, 0);
  const auto g = gen_er(10, 0.4, rng);
  MaxCutTarget mc(g, 0.5);
  VCTarget vc(g, 2.0, 0.5);
  for (const Target* t : {static_cast<const Target*>(&mc), static_cast<const Target*>(&vc)}) {
    Vec u(10), v(10), a(10), f(10);
    for (double& x : u) x = rng.normal();
    for (double& x : v) x = rng.normal();
    t->score_vjp(u, v, a);
    t->ScoreModel::score_vjp(u, v, f);
    for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(a[i] - f[i]) < 1e-6 * std::max(1.0, std::abs(a[i])));
  }
}

TEST_CASE("sign decoding and cut values") {
  CHECK(sign_decode(Vec{0.0, -0.1, 2.0}) == std::vector<int>{1, -1, 1});
  const auto g = k3();
  CHECK(cut_value({1, 1, -1}, g) == 2);
  CHECK(brute_force_maxcut(g) == 2);
  CHECK(cut_value({1, 1, 1}, g) == 0);
  const auto k22 = Graph::from_edges(4, {{0, 2}, {0, 3}, {1, 2}, {1, 3}});
  CHECK(cut_value({1, 1, -1, -1}, k22) == 4);
  CHECK(brute_force_maxcut(k22) == 4);
  RngStream rng(6, 0);
  for (int k = 0; k < 20; ++k) {
    const auto h = gen_er(12, 0.4, rng);
    std::vector<int> x(12), flip(12);
    for (std::size_t i = 0; i < 12; ++i) {
      x[i] = rng.uniform() < 0.5 ? 1 : -1;
      flip[i] = -x[i];
    }
    CHECK(cut_value(x, h) == cut_value(flip, h));
    CHECK(cut_value(x, h) == cut_by_enumeration(x, h));
    CHECK(cut_value(x, h) <= brute_force_maxcut(h));
  }
}

TEST_CASE("greedy vertex cover decoding") {
  const auto p = p3();
  const auto x = greedy_decode_vc(Vec{-1.0, 2.0, -1.0}, p);
  CHECK(x == std::vector<int>{0, 1, 0});
  CHECK(brute_force_vc(p) == 1);
  const auto e = Graph::from_edges(2, {{0, 1}});
  const auto y = greedy_decode_vc(Vec{-1.0, -2.0}, e);
  CHECK(y == std::vector<int>{1, 0});
  const auto tie = greedy_decode_vc(Vec{-1.0, -1.0}, e);
  CHECK(tie == std::vector<int>{1, 0});
  CHECK(greedy_decode_vc(Vec{1.0, -1.0, 1.0}, p) == std::vector<int>{1, 0, 1});
  RngStream rng(7, 0);
  for (int k = 0; k < 200; ++k) {
    const auto g = gen_er(15, 0.1 + 0.4 * rng.uniform(), rng);
    Vec u(15);
    for (double& v : u) v = 2 * rng.normal();
    const auto c = greedy_decode_vc(u, g);
    REQUIRE(cover_metrics(c, g).uncovered == 0);
    const auto t = threshold_vc(u);
    for (std::size_t i = 0; i < 15; ++i) CHECK(c[i] >= t[i]);
    if (k < 20) CHECK(cover_metrics(c, g).size >= brute_force_vc(g));
  }
}

TEST_CASE("cover metrics") {
  const auto p = p3();
  const auto full = cover_metrics({0, 1, 0}, p);
  CHECK(full.size == 1);
  CHECK(full.uncovered_ratio == 0.0);
  CHECK(cover_metrics({0, 0, 0}, p).uncovered_ratio == 1.0);
  const auto half = cover_metrics({1, 0, 0}, p);
  CHECK(half.uncovered == 1);
  CHECK(half.uncovered_ratio == 0.5);
  CHECK(cover_metrics({0, 0}, Graph::from_edges(2, {})).uncovered_ratio == 0.0);
}
