#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "trigraph/matrix.hpp"

namespace trigraph {

enum class Metric { Cosine, Euclidean };

Metric parse_metric(const std::string& name);
const char* metric_name(Metric m);

// Symmetric N x N matrix with a zero diagonal.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    d_[i * n_ + j] = v;
    d_[j * n_ + i] = v;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

// Cosine distance is 1 - cos(u, v); a zero row sits at distance 1 from every
// other row.
DistanceMatrix pairwise_distances(const Matrix& rows, Metric metric);

struct Merge {
  std::uint32_t left;
  std::uint32_t right;
  double distance;
  std::uint32_t id;

  bool operator==(const Merge&) const = default;
};

// Leaves are 0..N-1; merge s creates node N+s.
struct Dendrogram {
  std::uint32_t n_leaves = 0;
  std::vector<Merge> merges;
};

// Group-average (UPGMA) agglomerative clustering. Each step merges the pair
// with the smallest mean inter-cluster distance; ties go to the smallest
// (min id, max id) pair. Linkages are carried as sums of leaf distances, the
// Lance-Williams update in unnormalized form. O(N^2 log N) with a lazy heap.
// Throws RangeError on an empty matrix.
Dendrogram hac_group_average(const DistanceMatrix& dist);

struct ClusterAssignment {
  std::vector<std::uint32_t> labels;
  std::uint32_t n_clusters = 0;
};

// Undoes the last L-1 merges. Cluster ids are dense, ordered by each
// cluster's smallest leaf. Throws RangeError unless 1 <= L <= N.
ClusterAssignment cut(const Dendrogram& dg, std::uint32_t n_clusters);

// `left,right,distance,new_id`
void write_dendrogram_csv(const Dendrogram& dg, std::ostream& out);
// `doc_key,cluster_id`
void write_assignment_csv(const ClusterAssignment& a, const std::vector<std::string>& doc_keys,
                          std::ostream& out);
// Reads `doc_key,cluster_id`, header optional.
std::vector<std::pair<std::string, std::uint32_t>> read_assignment_csv(std::istream& in);

}  // namespace trigraph
