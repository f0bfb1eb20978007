#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "trigraph/ingest.hpp"

namespace trigraph {

struct Neighbor {
  std::uint32_t vertex;
  std::uint32_t weight;

  bool operator==(const Neighbor&) const = default;
};

struct Edge {
  std::uint32_t u;
  std::uint32_t v;
  std::uint32_t weight;

  bool operator==(const Edge&) const = default;
};

// Undirected graph with strictly positive integer weights and no self-loops.
// Edges are stored once with u < v; adjacency holds both directions.
class WeightedGraph {
 public:
  WeightedGraph() = default;
  // Takes edges with u != v; duplicates are not allowed.
  WeightedGraph(std::uint32_t n_vertices, std::vector<Edge> edges);

  std::uint32_t n_vertices() const { return n_; }
  std::size_t n_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const Neighbor> neighbors(std::uint32_t v) const { return adjacency_[v]; }
  std::size_t degree(std::uint32_t v) const { return adjacency_[v].size(); }
  // 0 when absent.
  std::uint32_t weight(std::uint32_t u, std::uint32_t v) const;
  bool has_edge(std::uint32_t u, std::uint32_t v) const { return weight(u, v) > 0; }
  std::uint64_t total_weight() const;

 private:
  std::uint32_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

struct PdEdge {
  std::uint32_t person;
  std::uint32_t doc;
  std::uint32_t weight;

  bool operator==(const PdEdge&) const = default;
};

class BipartiteGraph {
 public:
  BipartiteGraph() = default;
  BipartiteGraph(std::uint32_t n_persons, std::uint32_t n_docs, std::vector<PdEdge> edges);

  std::uint32_t n_persons() const { return n_persons_; }
  std::uint32_t n_docs() const { return n_docs_; }
  std::size_t n_edges() const { return edges_.size(); }
  const std::vector<PdEdge>& edges() const { return edges_; }
  // Persons adjacent to a document, sorted by person index.
  std::span<const Neighbor> doc_neighbors(std::uint32_t doc) const { return doc_adj_[doc]; }
  // Documents adjacent to a person, sorted by doc index.
  std::span<const Neighbor> person_neighbors(std::uint32_t person) const { return person_adj_[person]; }
  std::uint32_t weight(std::uint32_t person, std::uint32_t doc) const;

 private:
  std::uint32_t n_persons_ = 0;
  std::uint32_t n_docs_ = 0;
  std::vector<PdEdge> edges_;
  std::vector<std::vector<Neighbor>> doc_adj_;
  std::vector<std::vector<Neighbor>> person_adj_;
};

struct TriGraph {
  WeightedGraph pp;
  BipartiteGraph pd;
  WeightedGraph dd;
};

// Person-person: weight = number of distinct documents two persons share.
WeightedGraph build_person_person(const Instance& inst);

// Person-document: weight = multiplicity of the person on the document.
BipartiteGraph build_person_document(const Instance& inst);

// A1 (the document's collaborators) plus every person-person neighbor of a
// member of A1. Sorted, distinct.
std::vector<std::uint32_t> extended_collaborators(std::uint32_t doc, const WeightedGraph& pp,
                                                  const BipartiteGraph& pd);

// Linked documents: weight = |A2(i) ∩ A2(j)| when positive.
WeightedGraph build_document_document(const Instance& inst, const WeightedGraph& pp,
                                      const BipartiteGraph& pd);

TriGraph build_trigraph(const Instance& inst);

// `u<TAB>v<TAB>w` per edge.
void write_edge_list(const WeightedGraph& g, std::ostream& out);
void write_edge_list(const BipartiteGraph& g, std::ostream& out);

}  // namespace trigraph
