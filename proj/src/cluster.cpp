#include "trigraph/cluster.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>

#include "trigraph/error.hpp"

namespace trigraph {

Metric parse_metric(const std::string& name) {
  if (name == "cosine") return Metric::Cosine;
  if (name == "euclidean") return Metric::Euclidean;
  throw ConfigError("unknown metric '" + name + "'");
}

const char* metric_name(Metric m) { return m == Metric::Cosine ? "cosine" : "euclidean"; }

DistanceMatrix pairwise_distances(const Matrix& rows, Metric metric) {
  const std::size_t n = rows.rows();
  DistanceMatrix dist(n);
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double v : rows.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = rows.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto v = rows.row(j);
      double d;
      if (metric == Metric::Cosine) {
        if (norms[i] == 0.0 || norms[j] == 0.0) {
          d = 1.0;
        } else {
          double dot = 0.0;
          for (std::size_t c = 0; c < u.size(); ++c) dot += u[c] * v[c];
          d = std::clamp(1.0 - dot / (norms[i] * norms[j]), 0.0, 2.0);
        }
      } else {
        double s = 0.0;
        for (std::size_t c = 0; c < u.size(); ++c) s += (u[c] - v[c]) * (u[c] - v[c]);
        d = std::sqrt(s);
      }
      dist.set(i, j, d);
    }
  }
  return dist;
}

namespace {

struct Candidate {
  double distance;
  std::uint32_t a;
  std::uint32_t b;
};

// Min-heap order on (distance, a, b).
struct LaterFirst {
  bool operator()(const Candidate& x, const Candidate& y) const {
    if (x.distance != y.distance) return x.distance > y.distance;
    if (x.a != y.a) return x.a > y.a;
    return x.b > y.b;
  }
};

}  // namespace

Dendrogram hac_group_average(const DistanceMatrix& dist) {
  const auto n = static_cast<std::uint32_t>(dist.size());
  if (n == 0) throw RangeError("clustering needs at least one point");
  Dendrogram dg;
  dg.n_leaves = n;
  if (n == 1) return dg;

  // Slot-indexed sums of leaf-to-leaf distances between live clusters.
  std::vector<double> sums(std::size_t{n} * n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) sums[std::size_t{i} * n + j] = dist(i, j);
  }
  const std::uint32_t total_nodes = 2 * n - 1;
  std::vector<std::uint32_t> slot_of(total_nodes, 0), node_of(n), size_of(n, 1);
  std::vector<bool> alive(total_nodes, false);
  std::vector<std::uint32_t> live_slots(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    slot_of[i] = i;
    node_of[i] = i;
    alive[i] = true;
    live_slots[i] = i;
  }

  std::vector<Candidate> heap;
  heap.reserve(std::size_t{n} * (n - 1));
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) heap.push_back({dist(i, j), i, j});
  }
  std::make_heap(heap.begin(), heap.end(), LaterFirst{});

  dg.merges.reserve(n - 1);
  for (std::uint32_t step = 0; step + 1 < n; ++step) {
    Candidate best;
    do {
      std::pop_heap(heap.begin(), heap.end(), LaterFirst{});
      best = heap.back();
      heap.pop_back();
    } while (!alive[best.a] || !alive[best.b]);

    const std::uint32_t id = n + step;
    const std::uint32_t sa = slot_of[best.a], sb = slot_of[best.b];
    assert(dg.merges.empty() || best.distance >= dg.merges.back().distance * (1 - 1e-12) - 1e-12);
    dg.merges.push_back({best.a, best.b, best.distance, id});
    alive[best.a] = alive[best.b] = false;
    alive[id] = true;

    // The merged cluster takes slot sa; sb goes dead.
    live_slots.erase(std::find(live_slots.begin(), live_slots.end(), sb));
    const std::uint32_t merged_size = size_of[sa] + size_of[sb];
    for (std::uint32_t sc : live_slots) {
      if (sc == sa) continue;
      const double s = sums[std::size_t{sa} * n + sc] + sums[std::size_t{sb} * n + sc];
      sums[std::size_t{sa} * n + sc] = s;
      sums[std::size_t{sc} * n + sa] = s;
      const double avg = s / (static_cast<double>(merged_size) * size_of[sc]);
      heap.push_back({avg, node_of[sc], id});
      std::push_heap(heap.begin(), heap.end(), LaterFirst{});
    }
    size_of[sa] = merged_size;
    node_of[sa] = id;
    slot_of[id] = sa;
  }
  return dg;
}

ClusterAssignment cut(const Dendrogram& dg, std::uint32_t n_clusters) {
  const std::uint32_t n = dg.n_leaves;
  if (n_clusters < 1 || n_clusters > n) {
    throw RangeError("cluster count " + std::to_string(n_clusters) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<std::uint32_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0u);
  const std::uint32_t applied = n - n_clusters;
  for (std::uint32_t s = 0; s < applied; ++s) {
    const auto& m = dg.merges[s];
    parent[m.left] = m.id;
    parent[m.right] = m.id;
  }
  auto root = [&](std::uint32_t v) {
    while (parent[v] != v) v = parent[v];
    return v;
  };
  ClusterAssignment out;
  out.labels.resize(n);
  std::vector<std::uint32_t> label_of(2 * n - 1, UINT32_MAX);
  for (std::uint32_t leaf = 0; leaf < n; ++leaf) {
    const auto r = root(leaf);
    if (label_of[r] == UINT32_MAX) label_of[r] = out.n_clusters++;
    out.labels[leaf] = label_of[r];
  }
  return out;
}

void write_dendrogram_csv(const Dendrogram& dg, std::ostream& out) {
  out << "left,right,distance,new_id\n";
  char buf[96];
  for (const auto& m : dg.merges) {
    std::snprintf(buf, sizeof buf, "%u,%u,%.17g,%u\n", m.left, m.right, m.distance, m.id);
    out << buf;
  }
}

void write_assignment_csv(const ClusterAssignment& a, const std::vector<std::string>& doc_keys,
                          std::ostream& out) {
  if (doc_keys.size() != a.labels.size()) throw ContractViolation("assignment/doc key length mismatch");
  out << "doc_key,cluster_id\n";
  for (std::size_t i = 0; i < doc_keys.size(); ++i) out << doc_keys[i] << ',' << a.labels[i] << '\n';
}

std::vector<std::pair<std::string, std::uint32_t>> read_assignment_csv(std::istream& in) {
  std::vector<std::pair<std::string, std::uint32_t>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (lineno == 1 && line == "doc_key,cluster_id")) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0) throw ParseError(lineno, "expected `doc_key,cluster_id`");
    try {
      std::size_t used = 0;
      const unsigned long id = std::stoul(line.substr(comma + 1), &used);
      if (used != line.size() - comma - 1) throw std::invalid_argument("trailing");
      rows.emplace_back(line.substr(0, comma), static_cast<std::uint32_t>(id));
    } catch (const std::logic_error&) {
      throw ParseError(lineno, "bad cluster id");
    }
  }
  return rows;
}

}  // namespace trigraph
