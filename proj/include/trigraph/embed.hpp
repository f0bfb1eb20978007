#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trigraph/alias_table.hpp"
#include "trigraph/graphs.hpp"
#include "trigraph/matrix.hpp"
#include "trigraph/random.hpp"

namespace trigraph {

enum class Network : std::uint8_t { PersonPerson = 0, PersonDocument = 1, DocumentDocument = 2 };

inline constexpr std::array<Network, 3> kNetworks = {Network::PersonPerson, Network::PersonDocument,
                                                      Network::DocumentDocument};

const char* network_name(Network net);

// Which networks take part in training.
class ComponentMask {
 public:
  ComponentMask() = default;
  ComponentMask(bool pp, bool pd, bool dd) : bits_{pp, pd, dd} {}
  static ComponentMask all() { return {true, true, true}; }
  // Accepts tokens pp, pd, dd joined by ',' or '+', in any order.
  static ComponentMask parse(const std::string& text);

  bool has(Network net) const { return bits_[static_cast<std::size_t>(net)]; }
  void set(Network net, bool on) { bits_[static_cast<std::size_t>(net)] = on; }
  bool empty() const { return !bits_[0] && !bits_[1] && !bits_[2]; }
  // Canonical "pp+pd+dd" ordering.
  std::string to_string() const;

  bool operator==(const ComponentMask&) const = default;

 private:
  std::array<bool, 3> bits_{true, true, true};
};

// For PersonDocument the anchor is a document and positive/negative are
// persons; otherwise all three index the same vertex set.
struct Triplet {
  Network network;
  std::uint32_t anchor;
  std::uint32_t positive;
  std::uint32_t negative;

  bool operator==(const Triplet&) const = default;
};

struct Hyperparams {
  std::uint32_t dim = 20;
  double lambda = 0.01;
  double learning_rate = 0.02;
  std::uint64_t seed = 1;
};

struct EmbeddingModel {
  Matrix persons;    // M x k
  Matrix documents;  // N x k
  Hyperparams hyper;
  Rng rng;

  std::size_t dim() const { return hyper.dim; }
  std::span<double> anchor_row(const Triplet& t);
  std::span<double> positive_row(const Triplet& t);
  std::span<double> negative_row(const Triplet& t);
  std::span<const double> anchor_row(const Triplet& t) const;
  std::span<const double> positive_row(const Triplet& t) const;
  std::span<const double> negative_row(const Triplet& t) const;
};

// Entries i.i.d. uniform on [-0.2, 0.2]. Throws ConfigError for dim 0,
// negative lambda or a non-positive learning rate.
EmbeddingModel init_model(std::size_t n_persons, std::size_t n_docs, const Hyperparams& hyper);

double affinity(std::span<const double> u, std::span<const double> v);

// 1 / (1 + exp(-x)), evaluated without overflow for any finite x.
double sigmoid(double x);
// sigma(s_pos - s_neg)
double triplet_probability(double s_pos, double s_neg);
// -ln sigma(x)
double neg_log_sigmoid(double x);

// S_ij - S_it for the triplet's current vectors.
double triplet_margin(const EmbeddingModel& model, const Triplet& t);

// -ln sigma(margin) + lambda (|anchor|^2 + |positive|^2 + |negative|^2).
double triplet_loss(const EmbeddingModel& model, const Triplet& t);

struct TripletGradient {
  std::vector<double> anchor;
  std::vector<double> positive;
  std::vector<double> negative;
};

// Analytic gradient of triplet_loss with respect to the three rows.
TripletGradient triplet_gradient(const EmbeddingModel& model, const Triplet& t);

// One SGD update of the three rows touched by the triplet, all gradients taken
// at the pre-update values. Throws DivergenceError on a non-finite result.
void sgd_step(EmbeddingModel& model, const Triplet& t, double learning_rate);
inline void sgd_step(EmbeddingModel& model, const Triplet& t) {
  sgd_step(model, t, model.hyper.learning_rate);
}

// Sum over triplets of -ln sigma(margin) plus lambda (|A|_F^2 + |D|_F^2).
double compute_joint_loss(const EmbeddingModel& model, std::span<const Triplet> sample);

// Edge sampling (alias tables over edge weights) and uniform negative
// sampling over the three networks of a TriGraph. Holds a reference to the
// graphs, which must outlive it.
class TripletSampler {
 public:
  TripletSampler(const TriGraph& graphs, ComponentMask mask = ComponentMask::all());

  // Number of edges of `net`, 0 when masked out.
  std::size_t edge_count(Network net) const;
  // Sum of edge counts over active networks.
  std::size_t epoch_size() const;
  ComponentMask mask() const { return mask_; }
  const TriGraph& graphs() const { return graphs_; }

  // Edge drawn proportional to weight as (anchor, positive). Undirected
  // networks pick the orientation uniformly. Throws NoEdgesError when the
  // network is empty or masked out.
  std::pair<std::uint32_t, std::uint32_t> sample_positive(Network net, Rng& rng) const;

  // Uniform non-neighbor of the anchor, excluding the anchor itself.
  // Rejection sampling for up to 100 draws, then an explicit scan. nullopt
  // when the anchor is adjacent to every candidate.
  std::optional<std::uint32_t> sample_negative(Network net, std::uint32_t anchor, Rng& rng) const;

  // Network chosen proportional to edge counts, then positive and negative.
  // nullopt when the negative draw has no candidate.
  std::optional<Triplet> sample(Rng& rng) const;

  // Candidate count on the negative side for `net`.
  std::uint32_t candidate_count(Network net) const;
  bool is_neighbor(Network net, std::uint32_t anchor, std::uint32_t candidate) const;

 private:
  const TriGraph& graphs_;
  ComponentMask mask_;
  std::array<AliasTable, 3> edge_tables_;
  AliasTable network_table_;
  std::array<Network, 3> network_order_{};
};

struct EpochStats {
  std::uint32_t epoch = 0;
  double loss = 0.0;  // nll + reg
  double nll = 0.0;
  double reg = 0.0;
  double auc = 0.0;
  std::size_t updates = 0;
  std::size_t skipped = 0;
};

struct TrainOptions {
  std::uint32_t epochs = 50;
  std::uint32_t negatives_per_positive = 1;
  std::size_t eval_samples = 1000;
  // Linear decay of the learning rate towards 1e-4 of its start value.
  bool decay_learning_rate = false;
};

// Each epoch runs epoch_size() sampling rounds, then evaluates mean loss and
// AUC on a fresh sample drawn from a stream derived from the model seed and
// the epoch number.
std::vector<EpochStats> train(EmbeddingModel& model, const TripletSampler& sampler,
                              const TrainOptions& options);

struct Evaluation {
  double nll = 0.0;
  double reg = 0.0;
  double auc = 0.0;
  std::size_t n = 0;
};

Evaluation evaluate_triplets(const EmbeddingModel& model, std::span<const Triplet> sample);

// Draws up to `count` triplets; bounded retries on skipped negatives.
std::vector<Triplet> draw_triplets(const TripletSampler& sampler, std::size_t count, Rng& rng);

// CSV `epoch,loss,auc,nll,reg`.
void write_trace_csv(std::span<const EpochStats> trace, std::ostream& out);

// Binary checkpoint, little-endian: magic "TRIGEMB1", u32 version, u64 M,
// u64 N, u64 k, f64 lambda, f64 alpha, u64 seed, then A and D row-major as
// f64. A loaded model's generator is reseeded from the stored seed.
void save_checkpoint(const EmbeddingModel& model, std::ostream& out);
EmbeddingModel load_checkpoint(std::istream& in);

}  // namespace trigraph
