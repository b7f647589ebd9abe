#include "dpp/textstats/wmd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpp {

BagOfWords make_bag(const std::vector<std::string>& tokens) {
  BagOfWords bag;
  for (const auto& t : tokens) {
    auto it = std::find(bag.words.begin(), bag.words.end(), t);
    if (it == bag.words.end()) {
      bag.words.push_back(t);
      bag.weights.push_back(1.0);
    } else {
      bag.weights[static_cast<std::size_t>(it - bag.words.begin())] += 1.0;
    }
  }
  const double n = static_cast<double>(tokens.size());
  for (auto& w : bag.weights) w /= n;
  return bag;
}

double transport_cost(const std::vector<double>& supply, const std::vector<double>& demand,
                      const std::vector<double>& cost) {
  const std::size_t m = supply.size();
  const std::size_t n = demand.size();
  if (cost.size() != m * n) throw std::invalid_argument("cost matrix shape mismatch");
  constexpr double kEps = 1e-15;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Residual network: source(0), supplies(1..m), demands(m+1..m+n), sink(m+n+1).
  struct Edge {
    std::size_t to;
    double cap;
    double cost;
  };
  const std::size_t nodes = m + n + 2;
  const std::size_t sink = nodes - 1;
  std::vector<Edge> edges;
  std::vector<std::vector<std::size_t>> adj(nodes);
  auto add_edge = [&](std::size_t u, std::size_t v, double cap, double c) {
    adj[u].push_back(edges.size());
    edges.push_back({v, cap, c});
    adj[v].push_back(edges.size());
    edges.push_back({u, 0.0, -c});
  };
  for (std::size_t i = 0; i < m; ++i) add_edge(0, 1 + i, supply[i], 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) add_edge(1 + i, 1 + m + j, kInf, cost[i * n + j]);
  for (std::size_t j = 0; j < n; ++j) add_edge(1 + m + j, sink, demand[j], 0.0);

  double total = 0.0;
  std::vector<double> dist(nodes);
  std::vector<std::size_t> via(nodes);
  for (std::size_t iter = 0; iter < 4 * (m + n) * (m + n) + 16; ++iter) {
    // Bellman-Ford: reverse residual edges carry negative costs.
    std::fill(dist.begin(), dist.end(), kInf);
    dist[0] = 0.0;
    for (std::size_t round = 0; round < nodes; ++round) {
      bool changed = false;
      for (std::size_t u = 0; u < nodes; ++u) {
        if (dist[u] == kInf) continue;
        for (std::size_t e : adj[u]) {
          const Edge& ed = edges[e];
          if (ed.cap > kEps && dist[u] + ed.cost < dist[ed.to] - 1e-15) {
            dist[ed.to] = dist[u] + ed.cost;
            via[ed.to] = e;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (dist[sink] == kInf) break;
    double push = kInf;
    for (std::size_t v = sink; v != 0; v = edges[via[v] ^ 1].to) push = std::min(push, edges[via[v]].cap);
    if (!(push > kEps)) break;
    for (std::size_t v = sink; v != 0; v = edges[via[v] ^ 1].to) {
      edges[via[v]].cap -= push;
      edges[via[v] ^ 1].cap += push;
    }
    total += push * dist[sink];
  }
  return total;
}

double embedding_distance(const EmbeddingTable& emb, const std::string& a, const std::string& b) {
  if (a == b) return 0.0;
  auto va = emb[a];
  auto vb = emb[b];
  double s = 0.0;
  for (std::size_t k = 0; k < va.size(); ++k) {
    const double d = static_cast<double>(va[k]) - static_cast<double>(vb[k]);
    s += d * d;
  }
  return std::sqrt(s);
}

namespace {

std::vector<double> cost_matrix(const BagOfWords& a, const BagOfWords& b, const EmbeddingTable& emb) {
  std::vector<double> cost(a.words.size() * b.words.size());
  for (std::size_t i = 0; i < a.words.size(); ++i)
    for (std::size_t j = 0; j < b.words.size(); ++j)
      cost[i * b.words.size() + j] = embedding_distance(emb, a.words[i], b.words[j]);
  return cost;
}

}  // namespace

double relaxed_wmd(const std::vector<std::string>& a, const std::vector<std::string>& b,
                   const EmbeddingTable& emb) {
  const BagOfWords ba = make_bag(a);
  const BagOfWords bb = make_bag(b);
  const auto cost = cost_matrix(ba, bb, emb);
  const std::size_t n = bb.words.size();
  double left = 0.0;
  for (std::size_t i = 0; i < ba.words.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) best = std::min(best, cost[i * n + j]);
    left += ba.weights[i] * best;
  }
  double right = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ba.words.size(); ++i) best = std::min(best, cost[i * n + j]);
    right += bb.weights[j] * best;
  }
  return std::max(left, right);
}

double wmd(const std::vector<std::string>& a, const std::vector<std::string>& b,
           const EmbeddingTable& emb, std::size_t exact_limit) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wmd requires non-empty utterances");
  if (a.size() > exact_limit || b.size() > exact_limit) return relaxed_wmd(a, b, emb);
  const BagOfWords ba = make_bag(a);
  const BagOfWords bb = make_bag(b);
  return transport_cost(ba.weights, bb.weights, cost_matrix(ba, bb, emb));
}

}  // namespace dpp
