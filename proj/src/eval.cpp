#include "trigraph/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "trigraph/error.hpp"
#include "trigraph/random.hpp"

namespace trigraph {

std::vector<int> max_weight_assignment(std::span<const double> scores, std::size_t rows, std::size_t cols) {
  if (scores.size() != rows * cols) throw ContractViolation("score matrix size mismatch");
  const std::size_t n = std::max(rows, cols);
  if (n == 0) return {};
  double top = 0.0;
  for (double s : scores) top = std::max(top, s);
  // Padded square cost matrix, 1-based as in the classic potentials method.
  auto cost = [&](std::size_t i, std::size_t j) {
    if (i > rows || j > cols) return top;
    return top - scores[(i - 1) * cols + (j - 1)];
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(rows, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = match[j];
    if (i >= 1 && i <= rows && j <= cols) out[i - 1] = static_cast<int>(j - 1);
  }
  return out;
}

F1Score macro_f1(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth) {
  if (predicted.size() != truth.size()) throw ContractViolation("prediction and truth lengths differ");
  F1Score score;
  if (truth.empty()) return score;
  const std::size_t n_pred = *std::max_element(predicted.begin(), predicted.end()) + 1;
  const std::size_t n_true = *std::max_element(truth.begin(), truth.end()) + 1;

  std::vector<double> table(n_pred * n_true, 0.0), pred_size(n_pred, 0.0), true_size(n_true, 0.0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    table[predicted[i] * n_true + truth[i]] += 1.0;
    pred_size[predicted[i]] += 1.0;
    true_size[truth[i]] += 1.0;
  }
  // F1 of a cluster/class pair = 2 |c ∩ t| / (|c| + |t|).
  std::vector<double> f1(n_pred * n_true, 0.0);
  for (std::size_t c = 0; c < n_pred; ++c) {
    for (std::size_t t = 0; t < n_true; ++t) {
      const double overlap = table[c * n_true + t];
      if (overlap > 0.0) f1[c * n_true + t] = 2.0 * overlap / (pred_size[c] + true_size[t]);
    }
  }
  const auto match = max_weight_assignment(f1, n_pred, n_true);
  score.per_class_f1.assign(n_true, 0.0);
  for (std::size_t c = 0; c < n_pred; ++c) {
    if (match[c] < 0) continue;
    const auto t = static_cast<std::size_t>(match[c]);
    const double value = f1[c * n_true + t];
    if (value <= 0.0) continue;
    score.per_class_f1[t] = value;
    score.alignment.emplace(static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(t));
  }
  score.macro_f1 = std::accumulate(score.per_class_f1.begin(), score.per_class_f1.end(), 0.0) /
                   static_cast<double>(n_true);
  return score;
}

ClusterAssignment baseline_rand(std::uint32_t n_docs, std::uint32_t n_clusters, std::uint64_t seed) {
  if (n_clusters < 1) throw ConfigError("cluster count must be >= 1");
  Rng rng(Rng::derive(seed, 0x7a4d));
  ClusterAssignment out;
  out.n_clusters = n_clusters;
  out.labels.resize(n_docs);
  for (auto& l : out.labels) l = static_cast<std::uint32_t>(rng.below(n_clusters));
  return out;
}

Matrix author_incidence(const Instance& inst) {
  Matrix x(inst.n_docs(), inst.n_persons());
  for (std::size_t d = 0; d < inst.n_docs(); ++d) {
    for (const auto& e : inst.doc_authors[d]) x(d, e.person) = 1.0;
  }
  return x;
}

ClusterAssignment baseline_authorlist(const Instance& inst, std::uint32_t n_clusters, Metric metric) {
  const auto dg = hac_group_average(pairwise_distances(author_incidence(inst), metric));
  return cut(dg, n_clusters);
}

TTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("paired t-test needs equal lengths");
  const std::size_t n = a.size();
  if (n < 2) throw UndefinedTestError("paired t-test needs at least two pairs");
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
  const auto s = summarize(diff);
  if (!(s.stddev > 0.0)) throw UndefinedTestError("differences have zero variance");
  TTest out;
  out.df = n - 1;
  out.t = s.mean / (s.stddev / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(out.df));
  out.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(out.t)));
  return out;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

}  // namespace trigraph
