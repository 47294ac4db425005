#pragma once

#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trapdoor {

using Vertex = std::string;
using VertexSet = std::set<Vertex>;
using Edge = std::pair<Vertex, Vertex>;

/// Acyclic directed mixed graph. Directed edges are (from, to); bidirected
/// edges are stored with endpoints in lexicographic order so that two graphs
/// with the same structure compare equal.
class CausalGraph {
 public:
  CausalGraph() = default;
  CausalGraph(VertexSet vertices, std::set<Edge> directed, std::set<Edge> bidirected);

  const VertexSet& vertices() const noexcept { return vertices_; }
  const std::set<Edge>& directed() const noexcept { return directed_; }
  const std::set<Edge>& bidirected() const noexcept { return bidirected_; }

  bool contains(const Vertex& v) const { return vertices_.contains(v); }
  bool has_directed(const Vertex& from, const Vertex& to) const;
  bool has_bidirected(const Vertex& a, const Vertex& b) const;

  VertexSet parents(const Vertex& v) const;
  VertexSet children(const Vertex& v) const;
  /// Vertices reachable by directed paths, including the starting set.
  VertexSet descendants(const VertexSet& from) const;
  VertexSet ancestors(const VertexSet& of) const;

  friend bool operator==(const CausalGraph&, const CausalGraph&) = default;

 private:
  VertexSet vertices_;
  std::set<Edge> directed_;
  std::set<Edge> bidirected_;
};

std::string to_json(const CausalGraph& g);
/// {"vertices": [...], "directed": [["W","Z"],...], "bidirected": [["W","Y"],...]}
CausalGraph graph_from_json(std::string_view text);

/// True iff every path between `a` and `b` is blocked by `cond`. Bidirected
/// edges behave as a fork through an unobserved parent.
bool d_separated(const CausalGraph& g, const VertexSet& a, const VertexSet& b,
                 const VertexSet& cond);

/// Back-door criterion: `z` holds no descendant of `x` and blocks every path
/// from `x` to `y` that starts with an edge pointing into `x`.
bool is_backdoor_admissible(const CausalGraph& g, const VertexSet& x, const VertexSet& y,
                            const VertexSet& z);

/// Latent projection onto `keep`: the dropped vertices become latent.
CausalGraph latent_projection(const CausalGraph& g, const VertexSet& keep);

/// Named graphs: fig1, fig2a, fig2b, fig2c, fig3a, fsd (alias fig3b),
/// fig4a, fig4b, fig4c.
CausalGraph builtin_graph(std::string_view key);
std::vector<std::string> builtin_graph_keys();

}  // namespace trapdoor
