#pragma once

#include <functional>
#include <map>

#include "trapdoor/graph.hpp"
#include "trapdoor/rng.hpp"

namespace testing {

using namespace trapdoor;

// Independent oracle: enumerate every simple path of the mixed graph and
// check the blocking rule edge by edge.
struct Link {
  Vertex to;
  bool head_at_from;  // arrowhead at the vertex we leave
  bool head_at_to;    // arrowhead at the vertex we enter
};

inline std::map<Vertex, std::vector<Link>> links_of(const CausalGraph& g) {
  std::map<Vertex, std::vector<Link>> out;
  for (const auto& [a, b] : g.directed()) {
    out[a].push_back({b, false, true});
    out[b].push_back({a, true, false});
  }
  for (const auto& [a, b] : g.bidirected()) {
    out[a].push_back({b, true, true});
    out[b].push_back({a, true, true});
  }
  return out;
}

inline VertexSet descendants_by_search(const CausalGraph& g, const Vertex& v) {
  VertexSet seen{v};
  std::vector<Vertex> stack{v};
  while (!stack.empty()) {
    const Vertex u = stack.back();
    stack.pop_back();
    for (const auto& [a, b] : g.directed()) {
      if (a == u && seen.insert(b).second) stack.push_back(b);
    }
  }
  return seen;
}

inline bool brute_force_separated(const CausalGraph& g, const Vertex& a, const Vertex& b, const VertexSet& cond) {
  const auto links = links_of(g);
  std::map<Vertex, bool> opens_collider;
  for (const auto& v : g.vertices()) {
    bool open = false;
    for (const auto& d : descendants_by_search(g, v)) open = open || cond.contains(d);
    opens_collider[v] = open;
  }
  VertexSet on_path{a};
  bool connected = false;
  // `head_in` says whether the edge we arrived by points into `v`.
  std::function<void(const Vertex&, bool)> walk = [&](const Vertex& v, bool head_in) {
    if (connected) return;
    auto it = links.find(v);
    if (it == links.end()) return;
    for (const auto& l : it->second) {
      if (on_path.contains(l.to)) continue;
      if (v != a) {
        const bool collider = head_in && l.head_at_from;
        if (collider && !opens_collider.at(v)) continue;
        if (!collider && cond.contains(v)) continue;
      }
      if (l.to == b) {
        connected = true;
        return;
      }
      on_path.insert(l.to);
      walk(l.to, l.head_at_to);
      on_path.erase(l.to);
    }
  };
  walk(a, false);
  return !connected;
}

inline CausalGraph random_graph(Rng& rng, std::size_t n) {
  std::vector<Vertex> order;
  for (std::size_t i = 0; i < n; ++i) order.push_back(std::string(1, static_cast<char>('A' + i)));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  std::set<Edge> dir, bi;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (draw_uniform(rng) < 0.35) dir.insert({order[i], order[j]});
      if (draw_uniform(rng) < 0.2) bi.insert({std::min(order[i], order[j]), std::max(order[i], order[j])});
    }
  }
  return CausalGraph(VertexSet(order.begin(), order.end()), dir, bi);
}

}  // namespace testing
