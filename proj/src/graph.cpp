#include "trapdoor/graph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <queue>

#include <json.hpp>

#include "trapdoor/error.hpp"

namespace trapdoor {

namespace {

Edge ordered(Vertex a, Vertex b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

void check_subset(const CausalGraph& g, const VertexSet& s, const char* role) {
  for (const auto& v : s) {
    if (!g.contains(v)) fail(ErrorKind::Input, std::string(role) + " vertex '" + v + "' is not in the graph");
  }
}

void check_disjoint(const VertexSet& a, const VertexSet& b, const char* what) {
  for (const auto& v : a) {
    if (b.contains(v)) fail(ErrorKind::Input, std::string(what) + " share vertex '" + v + "'");
  }
}

// The mixed graph with every bidirected edge a<->b replaced by a<-U->b.
// Hidden vertices are appended after the observed ones.
struct Expanded {
  std::vector<Vertex> names;
  std::size_t observed = 0;
  std::vector<std::vector<int>> parents;
  std::vector<std::vector<int>> children;
  std::map<Vertex, int> index;

  explicit Expanded(const CausalGraph& g) {
    for (const auto& v : g.vertices()) {
      index.emplace(v, static_cast<int>(names.size()));
      names.push_back(v);
    }
    observed = names.size();
    parents.resize(observed);
    children.resize(observed);
    for (const auto& [from, to] : g.directed()) link(index.at(from), index.at(to));
    for (const auto& [a, b] : g.bidirected()) {
      const int u = static_cast<int>(names.size());
      names.push_back("<" + a + "," + b + ">");
      parents.emplace_back();
      children.emplace_back();
      link(u, index.at(a));
      link(u, index.at(b));
    }
  }

  std::size_t size() const { return names.size(); }
  bool hidden(int v) const { return static_cast<std::size_t>(v) >= observed; }

  void link(int from, int to) {
    children[from].push_back(to);
    parents[to].push_back(from);
  }

  bool is_parent(int p, int c) const {
    return std::find(parents[c].begin(), parents[c].end(), p) != parents[c].end();
  }

  std::vector<char> mask(const VertexSet& s) const {
    std::vector<char> m(size(), 0);
    for (const auto& v : s) m[index.at(v)] = 1;
    return m;
  }

  // Vertices with a descendant (or themselves) in `s`.
  std::vector<char> ancestors_of(const std::vector<char>& s) const {
    std::vector<char> out(size(), 0);
    std::vector<int> stack;
    for (std::size_t v = 0; v < size(); ++v) {
      if (s[v]) {
        out[v] = 1;
        stack.push_back(static_cast<int>(v));
      }
    }
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int p : parents[v]) {
        if (!out[p]) {
          out[p] = 1;
          stack.push_back(p);
        }
      }
    }
    return out;
  }
};

// Depth-first search for an open path. `start` has already been placed on
// the path; `prev` is the vertex before `cur` (or -1). `admit` decides
// whether a vertex may appear in the interior, `blocks(prev, mid, next)`
// whether a triple closes the path, and `target` whether a path ending at a
// vertex is complete (with the last step's orientation available).
struct PathSearch {
  const Expanded& g;
  std::function<bool(int)> admit;
  std::function<bool(int, int, int)> blocks;
  std::function<bool(int prev, int end)> target;
  std::vector<char> on_path;

  bool from(int prev, int cur) {
    auto step = [&](int next) -> bool {
      if (on_path[next]) return false;
      if (prev >= 0 && blocks(prev, cur, next)) return false;
      if (target(cur, next)) return true;
      if (!admit(next)) return false;
      on_path[next] = 1;
      const bool found = from(cur, next);
      on_path[next] = 0;
      return found;
    };
    for (int c : g.children[cur]) {
      if (step(c)) return true;
    }
    for (int p : g.parents[cur]) {
      if (step(p)) return true;
    }
    return false;
  }
};

bool is_collider(const Expanded& g, int prev, int mid, int next) {
  return g.is_parent(prev, mid) && g.is_parent(next, mid);
}

}  // namespace

CausalGraph::CausalGraph(VertexSet vertices, std::set<Edge> directed, std::set<Edge> bidirected)
    : vertices_(std::move(vertices)), directed_(std::move(directed)) {
  for (auto [a, b] : bidirected) bidirected_.insert(ordered(std::move(a), std::move(b)));
  auto check_edge = [&](const Edge& e, const char* kind) {
    if (e.first == e.second) fail(ErrorKind::Input, std::string(kind) + " self-loop on '" + e.first + "'");
    for (const auto& v : {e.first, e.second}) {
      if (!vertices_.contains(v)) {
        fail(ErrorKind::Input, std::string(kind) + " edge endpoint '" + v + "' is not a vertex");
      }
    }
  };
  for (const auto& e : directed_) check_edge(e, "directed");
  for (const auto& e : bidirected_) check_edge(e, "bidirected");

  // Kahn's algorithm on the directed part.
  std::map<Vertex, int> indegree;
  for (const auto& v : vertices_) indegree[v] = 0;
  for (const auto& e : directed_) ++indegree[e.second];
  std::queue<Vertex> ready;
  for (const auto& [v, d] : indegree) {
    if (d == 0) ready.push(v);
  }
  std::size_t seen = 0;
  while (!ready.empty()) {
    const Vertex v = ready.front();
    ready.pop();
    ++seen;
    for (const auto& e : directed_) {
      if (e.first == v && --indegree[e.second] == 0) ready.push(e.second);
    }
  }
  if (seen != vertices_.size()) fail(ErrorKind::Input, "directed edges form a cycle");
}

bool CausalGraph::has_directed(const Vertex& from, const Vertex& to) const {
  return directed_.contains({from, to});
}

bool CausalGraph::has_bidirected(const Vertex& a, const Vertex& b) const {
  return bidirected_.contains(ordered(a, b));
}

VertexSet CausalGraph::parents(const Vertex& v) const {
  VertexSet out;
  for (const auto& [from, to] : directed_) {
    if (to == v) out.insert(from);
  }
  return out;
}

VertexSet CausalGraph::children(const Vertex& v) const {
  VertexSet out;
  for (const auto& [from, to] : directed_) {
    if (from == v) out.insert(to);
  }
  return out;
}

VertexSet CausalGraph::descendants(const VertexSet& from) const {
  VertexSet out = from;
  std::vector<Vertex> stack(from.begin(), from.end());
  while (!stack.empty()) {
    const Vertex v = stack.back();
    stack.pop_back();
    for (const auto& c : children(v)) {
      if (out.insert(c).second) stack.push_back(c);
    }
  }
  return out;
}

VertexSet CausalGraph::ancestors(const VertexSet& of) const {
  VertexSet out = of;
  std::vector<Vertex> stack(of.begin(), of.end());
  while (!stack.empty()) {
    const Vertex v = stack.back();
    stack.pop_back();
    for (const auto& p : parents(v)) {
      if (out.insert(p).second) stack.push_back(p);
    }
  }
  return out;
}

std::string to_json(const CausalGraph& g) {
  nlohmann::json j;
  j["vertices"] = std::vector<Vertex>(g.vertices().begin(), g.vertices().end());
  auto edges = [](const std::set<Edge>& s) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [a, b] : s) arr.push_back({a, b});
    return arr;
  };
  j["directed"] = edges(g.directed());
  j["bidirected"] = edges(g.bidirected());
  return j.dump();
}

CausalGraph graph_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    VertexSet vertices;
    for (const auto& v : j.at("vertices")) vertices.insert(v.get<std::string>());
    auto edges = [&](const char* key) {
      std::set<Edge> out;
      if (!j.contains(key)) return out;
      for (const auto& e : j.at(key)) {
        if (!e.is_array() || e.size() != 2) fail(ErrorKind::Input, std::string("malformed edge in '") + key + "'");
        out.emplace(e[0].get<std::string>(), e[1].get<std::string>());
      }
      return out;
    };
    return CausalGraph(std::move(vertices), edges("directed"), edges("bidirected"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Input, std::string("graph JSON: ") + e.what());
  }
}

bool d_separated(const CausalGraph& g, const VertexSet& a, const VertexSet& b, const VertexSet& cond) {
  check_subset(g, a, "first set");
  check_subset(g, b, "second set");
  check_subset(g, cond, "conditioning set");
  check_disjoint(a, b, "the separated sets");
  check_disjoint(a, cond, "first and conditioning sets");
  check_disjoint(b, cond, "second and conditioning sets");

  const Expanded ex(g);
  const auto in_cond = ex.mask(cond);
  const auto in_b = ex.mask(b);
  const auto opens_collider = ex.ancestors_of(in_cond);

  PathSearch search{
      ex,
      [&](int) { return true; },
      [&](int prev, int mid, int next) {
        if (is_collider(ex, prev, mid, next)) return !opens_collider[mid];
        return static_cast<bool>(in_cond[mid]);
      },
      [&](int, int end) { return static_cast<bool>(in_b[end]); },
      std::vector<char>(ex.size(), 0)};

  for (const auto& v : a) {
    const int s = ex.index.at(v);
    search.on_path[s] = 1;
    const bool open = search.from(-1, s);
    search.on_path[s] = 0;
    if (open) return false;
  }
  return true;
}

bool is_backdoor_admissible(const CausalGraph& g, const VertexSet& x, const VertexSet& y, const VertexSet& z) {
  check_subset(g, x, "treatment");
  check_subset(g, y, "outcome");
  check_subset(g, z, "adjustment");
  if (x.empty() || y.empty()) fail(ErrorKind::Input, "treatment and outcome sets must be nonempty");
  check_disjoint(x, y, "treatment and outcome sets");
  check_disjoint(x, z, "treatment and adjustment sets");
  check_disjoint(y, z, "outcome and adjustment sets");

  const VertexSet desc = g.descendants(x);
  for (const auto& v : z) {
    if (desc.contains(v)) return false;
  }

  const Expanded ex(g);
  const auto in_z = ex.mask(z);
  const auto in_x = ex.mask(x);
  const auto in_y = ex.mask(y);
  const auto opens_collider = ex.ancestors_of(in_z);

  PathSearch search{
      ex,
      [&](int v) { return !in_x[v]; },
      [&](int prev, int mid, int next) {
        if (is_collider(ex, prev, mid, next)) return !opens_collider[mid];
        return static_cast<bool>(in_z[mid]);
      },
      [&](int, int end) { return static_cast<bool>(in_y[end]); },
      std::vector<char>(ex.size(), 0)};

  for (const auto& v : x) {
    const int s = ex.index.at(v);
    search.on_path[s] = 1;
    for (int p : ex.parents[s]) {
      // first edge p -> x points into x
      if (in_y[p]) return false;
      if (in_x[p]) continue;
      search.on_path[p] = 1;
      const bool open = search.from(s, p);
      search.on_path[p] = 0;
      if (open) return false;
    }
    search.on_path[s] = 0;
  }
  return true;
}

CausalGraph latent_projection(const CausalGraph& g, const VertexSet& keep) {
  check_subset(g, keep, "kept");
  const Expanded ex(g);
  const auto kept = ex.mask(keep);

  std::set<Edge> directed;
  for (const auto& v : keep) {
    // directed paths whose interior is latent
    const int s = ex.index.at(v);
    std::vector<char> seen(ex.size(), 0);
    std::vector<int> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int c : ex.children[u]) {
        if (seen[c]) continue;
        seen[c] = 1;
        if (kept[c]) {
          directed.emplace(v, ex.names[c]);
        } else {
          stack.push_back(c);
        }
      }
    }
  }

  std::set<Edge> bidirected;
  for (const auto& v : keep) {
    const int s = ex.index.at(v);
    PathSearch search{
        ex,
        [&](int u) { return !kept[u]; },
        [&](int prev, int mid, int next) { return is_collider(ex, prev, mid, next); },
        [&](int prev, int end) {
          // last edge must point into the kept endpoint
          if (!kept[end] || end == s || !ex.is_parent(prev, end)) return false;
          bidirected.insert(ordered(v, ex.names[end]));
          return false;  // keep enumerating
        },
        std::vector<char>(ex.size(), 0)};
    search.on_path[s] = 1;
    for (int p : ex.parents[s]) {
      // first edge must point into the start vertex
      if (kept[p]) continue;
      search.on_path[p] = 1;
      search.from(s, p);
      search.on_path[p] = 0;
    }
  }

  return CausalGraph(keep, std::move(directed), std::move(bidirected));
}

namespace {

CausalGraph make(std::initializer_list<const char*> vertices,
                 std::initializer_list<std::pair<const char*, const char*>> directed,
                 std::initializer_list<std::pair<const char*, const char*>> bidirected) {
  VertexSet v(vertices.begin(), vertices.end());
  std::set<Edge> d, b;
  for (auto [from, to] : directed) d.emplace(from, to);
  for (auto [p, q] : bidirected) b.emplace(p, q);
  return CausalGraph(std::move(v), std::move(d), std::move(b));
}

}  // namespace

CausalGraph builtin_graph(std::string_view key) {
  if (key == "fig1") {
    return make({"W", "Z", "X", "Y"}, {{"W", "Z"}, {"Z", "X"}, {"X", "Y"}}, {{"Z", "Y"}});
  }
  if (key == "fig2a") {
    return make({"W", "X", "Y"}, {{"W", "X"}, {"X", "Y"}}, {{"W", "Y"}});
  }
  if (key == "fig2b") {
    return make({"W", "X", "Y"}, {{"W", "X"}, {"X", "Y"}}, {{"W", "Y"}, {"W", "X"}});
  }
  if (key == "fig2c") {
    return make({"W", "Z", "X", "Y"}, {{"W", "Z"}, {"Z", "X"}, {"X", "Y"}}, {{"W", "Y"}, {"W", "X"}});
  }
  if (key == "fig3a") {
    return make({"W", "Z", "X", "Y", "B"},
                {{"W", "Z"}, {"Z", "X"}, {"X", "Y"}, {"B", "Y"}, {"B", "X"}, {"B", "Z"}},
                {{"W", "B"}, {"W", "X"}, {"W", "Y"}});
  }
  if (key == "fsd" || key == "fig3b") {
    return make({"W", "Z", "X", "Y", "S", "G"},
                {{"W", "Z"}, {"Z", "X"}, {"X", "Y"}, {"S", "Y"}, {"S", "X"}, {"S", "Z"},
                 {"G", "Y"}, {"G", "X"}, {"G", "Z"}},
                {{"W", "S"}, {"W", "X"}, {"W", "Y"}});
  }
  if (key == "fig4a") {
    return make({"X1", "Z", "W", "X2", "Y"}, {{"X1", "Z"}, {"Z", "W"}, {"W", "X2"}, {"X2", "Y"}},
                {{"X1", "W"}, {"X1", "Y"}, {"Z", "X2"}});
  }
  if (key == "fig4b") {
    return make({"X1", "W", "Z", "X2", "Y"}, {{"X1", "Z"}, {"W", "Z"}, {"Z", "X2"}, {"X2", "Y"}},
                {{"W", "Y"}, {"X1", "Y"}, {"W", "X2"}});
  }
  if (key == "fig4c") {
    return make({"W", "Z", "X", "Y1", "Y2"},
                {{"W", "Z"}, {"Z", "X"}, {"X", "Y1"}, {"Y1", "Y2"}, {"W", "Y1"}},
                {{"Y2", "W"}, {"W", "X"}, {"Z", "Y1"}});
  }
  fail(ErrorKind::Input, "unknown graph key '" + std::string(key) + "'");
}

std::vector<std::string> builtin_graph_keys() {
  return {"fig1", "fig2a", "fig2b", "fig2c", "fig3a", "fsd", "fig4a", "fig4b", "fig4c"};
}

}  // namespace trapdoor
