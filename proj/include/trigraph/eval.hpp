#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "trigraph/cluster.hpp"
#include "trigraph/ingest.hpp"

namespace trigraph {

struct F1Score {
  double macro_f1 = 0.0;
  // One entry per true class.
  std::vector<double> per_class_f1;
  // cluster id -> class id for matched pairs with positive overlap.
  std::map<std::uint32_t, std::uint32_t> alignment;
};

// Maximum-total-F1 one-to-one matching between predicted clusters and true
// classes; unmatched classes score 0 and the mean runs over true classes.
// Throws ContractViolation on a length mismatch.
F1Score macro_f1(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth);

// Solves max-weight assignment on a rows x cols score matrix (row-major).
// Returns, per row, the matched column or -1.
std::vector<int> max_weight_assignment(std::span<const double> scores, std::size_t rows, std::size_t cols);

ClusterAssignment baseline_rand(std::uint32_t n_docs, std::uint32_t n_clusters, std::uint64_t seed);

// Binary doc x collaborator incidence rows.
Matrix author_incidence(const Instance& inst);

// HAC on the incidence rows, cut at n_clusters.
ClusterAssignment baseline_authorlist(const Instance& inst, std::uint32_t n_clusters,
                                      Metric metric = Metric::Cosine);

struct TTest {
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
};

// Two-tailed paired t-test. Throws UndefinedTestError for fewer than two
// pairs or zero variance of the differences.
TTest paired_t_test(std::span<const double> a, std::span<const double> b);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single value
};

Summary summarize(std::span<const double> values);

}  // namespace trigraph
