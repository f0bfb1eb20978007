#include "trigraph/graphs.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>

#include "trigraph/error.hpp"

namespace trigraph {

namespace {

bool by_vertex(const Neighbor& a, const Neighbor& b) { return a.vertex < b.vertex; }

std::uint32_t lookup(std::span<const Neighbor> adj, std::uint32_t v) {
  auto it = std::lower_bound(adj.begin(), adj.end(), Neighbor{v, 0}, by_vertex);
  return (it != adj.end() && it->vertex == v) ? it->weight : 0;
}

std::size_t intersection_size(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  std::size_t n = 0;
  auto i = a.begin(), j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

}  // namespace

WeightedGraph::WeightedGraph(std::uint32_t n_vertices, std::vector<Edge> edges)
    : n_(n_vertices), adjacency_(n_vertices) {
  for (auto& e : edges) {
    if (e.u == e.v) throw ContractViolation("self-loop");
    if (e.u >= n_ || e.v >= n_) throw ContractViolation("edge vertex out of range");
    if (e.weight == 0) throw ContractViolation("zero-weight edge");
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i].u == edges[i - 1].u && edges[i].v == edges[i - 1].v) {
      throw ContractViolation("duplicate edge");
    }
  }
  for (const auto& e : edges) {
    adjacency_[e.u].push_back({e.v, e.weight});
    adjacency_[e.v].push_back({e.u, e.weight});
  }
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end(), by_vertex);
  edges_ = std::move(edges);
}

std::uint32_t WeightedGraph::weight(std::uint32_t u, std::uint32_t v) const {
  if (u >= n_ || v >= n_) return 0;
  return lookup(adjacency_[u], v);
}

std::uint64_t WeightedGraph::total_weight() const {
  return std::accumulate(edges_.begin(), edges_.end(), std::uint64_t{0},
                         [](std::uint64_t s, const Edge& e) { return s + e.weight; });
}

BipartiteGraph::BipartiteGraph(std::uint32_t n_persons, std::uint32_t n_docs, std::vector<PdEdge> edges)
    : n_persons_(n_persons), n_docs_(n_docs), doc_adj_(n_docs), person_adj_(n_persons) {
  for (const auto& e : edges) {
    if (e.person >= n_persons || e.doc >= n_docs) throw ContractViolation("bipartite edge out of range");
    if (e.weight == 0) throw ContractViolation("zero-weight edge");
  }
  std::sort(edges.begin(), edges.end(), [](const PdEdge& a, const PdEdge& b) {
    return a.doc != b.doc ? a.doc < b.doc : a.person < b.person;
  });
  for (const auto& e : edges) {
    doc_adj_[e.doc].push_back({e.person, e.weight});
    person_adj_[e.person].push_back({e.doc, e.weight});
  }
  for (auto& adj : doc_adj_) std::sort(adj.begin(), adj.end(), by_vertex);
  for (auto& adj : person_adj_) std::sort(adj.begin(), adj.end(), by_vertex);
  edges_ = std::move(edges);
}

std::uint32_t BipartiteGraph::weight(std::uint32_t person, std::uint32_t doc) const {
  if (person >= n_persons_ || doc >= n_docs_) return 0;
  return lookup(doc_adj_[doc], person);
}

WeightedGraph build_person_person(const Instance& inst) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> counts;
  std::vector<std::uint32_t> people;
  for (const auto& entries : inst.doc_authors) {
    people.clear();
    for (const auto& e : entries) people.push_back(e.person);
    std::sort(people.begin(), people.end());
    people.erase(std::unique(people.begin(), people.end()), people.end());
    for (std::size_t i = 0; i < people.size(); ++i) {
      for (std::size_t j = i + 1; j < people.size(); ++j) ++counts[{people[i], people[j]}];
    }
  }
  std::vector<Edge> edges;
  edges.reserve(counts.size());
  for (const auto& [pair, w] : counts) edges.push_back({pair.first, pair.second, w});
  return WeightedGraph(static_cast<std::uint32_t>(inst.n_persons()), std::move(edges));
}

BipartiteGraph build_person_document(const Instance& inst) {
  std::vector<PdEdge> edges;
  for (std::uint32_t d = 0; d < inst.n_docs(); ++d) {
    std::map<std::uint32_t, std::uint32_t> mult;
    for (const auto& e : inst.doc_authors[d]) mult[e.person] += e.count;
    for (const auto& [p, w] : mult) edges.push_back({p, d, w});
  }
  return BipartiteGraph(static_cast<std::uint32_t>(inst.n_persons()),
                        static_cast<std::uint32_t>(inst.n_docs()), std::move(edges));
}

std::vector<std::uint32_t> extended_collaborators(std::uint32_t doc, const WeightedGraph& pp,
                                                  const BipartiteGraph& pd) {
  if (doc >= pd.n_docs()) throw ContractViolation("doc index out of range");
  std::vector<std::uint32_t> out;
  for (const auto& b : pd.doc_neighbors(doc)) {
    out.push_back(b.vertex);
    for (const auto& nb : pp.neighbors(b.vertex)) out.push_back(nb.vertex);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

WeightedGraph build_document_document(const Instance& inst, const WeightedGraph& pp,
                                      const BipartiteGraph& pd) {
  const auto n = static_cast<std::uint32_t>(inst.n_docs());
  std::vector<std::vector<std::uint32_t>> extended(n);
  for (std::uint32_t d = 0; d < n; ++d) extended[d] = extended_collaborators(d, pp, pd);
  std::vector<Edge> edges;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (extended[i].empty()) continue;
    for (std::uint32_t j = i + 1; j < n; ++j) {
      const auto w = intersection_size(extended[i], extended[j]);
      if (w > 0) edges.push_back({i, j, static_cast<std::uint32_t>(w)});
    }
  }
  return WeightedGraph(n, std::move(edges));
}

TriGraph build_trigraph(const Instance& inst) {
  TriGraph tg;
  tg.pp = build_person_person(inst);
  tg.pd = build_person_document(inst);
  tg.dd = build_document_document(inst, tg.pp, tg.pd);
  return tg;
}

void write_edge_list(const WeightedGraph& g, std::ostream& out) {
  for (const auto& e : g.edges()) out << e.u << '\t' << e.v << '\t' << e.weight << '\n';
}

void write_edge_list(const BipartiteGraph& g, std::ostream& out) {
  for (const auto& e : g.edges()) out << e.person << '\t' << e.doc << '\t' << e.weight << '\n';
}

}  // namespace trigraph
