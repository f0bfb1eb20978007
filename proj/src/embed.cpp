#include "trigraph/embed.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "trigraph/error.hpp"

namespace trigraph {

const char* network_name(Network net) {
  switch (net) {
    case Network::PersonPerson:
      return "pp";
    case Network::PersonDocument:
      return "pd";
    case Network::DocumentDocument:
      return "dd";
  }
  return "?";
}

ComponentMask ComponentMask::parse(const std::string& text) {
  ComponentMask mask(false, false, false);
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    if (token == "pp") {
      mask.set(Network::PersonPerson, true);
    } else if (token == "pd") {
      mask.set(Network::PersonDocument, true);
    } else if (token == "dd") {
      mask.set(Network::DocumentDocument, true);
    } else {
      throw ConfigError("unknown component '" + token + "'");
    }
    token.clear();
  };
  for (char c : text) {
    if (c == ',' || c == '+' || c == ' ') {
      flush();
    } else {
      token += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  flush();
  if (mask.empty()) throw ConfigError("component mask is empty");
  return mask;
}

std::string ComponentMask::to_string() const {
  std::string out;
  for (auto net : kNetworks) {
    if (!has(net)) continue;
    if (!out.empty()) out += '+';
    out += network_name(net);
  }
  return out;
}

std::span<double> EmbeddingModel::anchor_row(const Triplet& t) {
  return t.network == Network::PersonPerson ? persons.row(t.anchor) : documents.row(t.anchor);
}
std::span<double> EmbeddingModel::positive_row(const Triplet& t) {
  return t.network == Network::DocumentDocument ? documents.row(t.positive) : persons.row(t.positive);
}
std::span<double> EmbeddingModel::negative_row(const Triplet& t) {
  return t.network == Network::DocumentDocument ? documents.row(t.negative) : persons.row(t.negative);
}
std::span<const double> EmbeddingModel::anchor_row(const Triplet& t) const {
  return t.network == Network::PersonPerson ? persons.row(t.anchor) : documents.row(t.anchor);
}
std::span<const double> EmbeddingModel::positive_row(const Triplet& t) const {
  return t.network == Network::DocumentDocument ? documents.row(t.positive) : persons.row(t.positive);
}
std::span<const double> EmbeddingModel::negative_row(const Triplet& t) const {
  return t.network == Network::DocumentDocument ? documents.row(t.negative) : persons.row(t.negative);
}

EmbeddingModel init_model(std::size_t n_persons, std::size_t n_docs, const Hyperparams& hyper) {
  if (hyper.dim < 1) throw ConfigError("dimension must be >= 1");
  if (!(hyper.lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(hyper.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  EmbeddingModel model{Matrix(n_persons, hyper.dim), Matrix(n_docs, hyper.dim), hyper, Rng(hyper.seed)};
  for (double& v : model.persons.values()) v = model.rng.uniform(-0.2, 0.2);
  for (double& v : model.documents.values()) v = model.rng.uniform(-0.2, 0.2);
  return model;
}

double affinity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ContractViolation("affinity: dimension mismatch");
  double s = 0.0;
  for (std::size_t c = 0; c < u.size(); ++c) s += u[c] * v[c];
  return s;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double triplet_probability(double s_pos, double s_neg) { return sigmoid(s_pos - s_neg); }

double neg_log_sigmoid(double x) {
  if (x >= 0.0) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

double triplet_margin(const EmbeddingModel& model, const Triplet& t) {
  const auto a = model.anchor_row(t);
  return affinity(a, model.positive_row(t)) - affinity(a, model.negative_row(t));
}

double triplet_loss(const EmbeddingModel& model, const Triplet& t) {
  const auto a = model.anchor_row(t), p = model.positive_row(t), n = model.negative_row(t);
  const double reg = affinity(a, a) + affinity(p, p) + affinity(n, n);
  return neg_log_sigmoid(triplet_margin(model, t)) + model.hyper.lambda * reg;
}

TripletGradient triplet_gradient(const EmbeddingModel& model, const Triplet& t) {
  const auto a = model.anchor_row(t), p = model.positive_row(t), n = model.negative_row(t);
  // d(-ln sigma(x))/dx = -e^{-x} / (1 + e^{-x}) = -sigma(-x)
  const double coef = -sigmoid(-triplet_margin(model, t));
  const double l2 = 2.0 * model.hyper.lambda;
  TripletGradient g;
  const std::size_t k = a.size();
  g.anchor.resize(k);
  g.positive.resize(k);
  g.negative.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    g.anchor[c] = coef * (p[c] - n[c]) + l2 * a[c];
    g.positive[c] = coef * a[c] + l2 * p[c];
    g.negative[c] = -coef * a[c] + l2 * n[c];
  }
  return g;
}

void sgd_step(EmbeddingModel& model, const Triplet& t, double learning_rate) {
  auto a = model.anchor_row(t), p = model.positive_row(t), n = model.negative_row(t);
  const double coef = -sigmoid(-triplet_margin(model, t));
  const double l2 = 2.0 * model.hyper.lambda;
  bool finite = true;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double ac = a[c], pc = p[c], nc = n[c];
    a[c] = ac - learning_rate * (coef * (pc - nc) + l2 * ac);
    p[c] = pc - learning_rate * (coef * ac + l2 * pc);
    n[c] = nc - learning_rate * (-coef * ac + l2 * nc);
    finite = finite && std::isfinite(a[c]) && std::isfinite(p[c]) && std::isfinite(n[c]);
  }
  if (!finite) {
    std::ostringstream msg;
    msg << "non-finite embedding after update of " << network_name(t.network) << " triplet (" << t.anchor
        << ", " << t.positive << ", " << t.negative << ")";
    throw DivergenceError(msg.str());
  }
}

double compute_joint_loss(const EmbeddingModel& model, std::span<const Triplet> sample) {
  double nll = 0.0;
  for (const auto& t : sample) nll += neg_log_sigmoid(triplet_margin(model, t));
  return nll + model.hyper.lambda * (model.persons.squared_norm() + model.documents.squared_norm());
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> weights_of(const WeightedGraph& g) {
  std::vector<double> w;
  w.reserve(g.n_edges());
  for (const auto& e : g.edges()) w.push_back(e.weight);
  return w;
}

std::vector<double> weights_of(const BipartiteGraph& g) {
  std::vector<double> w;
  w.reserve(g.n_edges());
  for (const auto& e : g.edges()) w.push_back(e.weight);
  return w;
}

bool contains(std::span<const Neighbor> adj, std::uint32_t v) {
  auto it = std::lower_bound(adj.begin(), adj.end(), v,
                             [](const Neighbor& nb, std::uint32_t x) { return nb.vertex < x; });
  return it != adj.end() && it->vertex == v;
}

}  // namespace

TripletSampler::TripletSampler(const TriGraph& graphs, ComponentMask mask) : graphs_(graphs), mask_(mask) {
  if (mask.empty()) throw ConfigError("component mask is empty");
  if (edge_count(Network::PersonPerson) > 0) {
    edge_tables_[0] = AliasTable(weights_of(graphs.pp));
  }
  if (edge_count(Network::PersonDocument) > 0) {
    edge_tables_[1] = AliasTable(weights_of(graphs.pd));
  }
  if (edge_count(Network::DocumentDocument) > 0) {
    edge_tables_[2] = AliasTable(weights_of(graphs.dd));
  }
  std::vector<double> counts;
  std::size_t slot = 0;
  for (auto net : kNetworks) {
    if (edge_count(net) == 0) continue;
    counts.push_back(static_cast<double>(edge_count(net)));
    network_order_[slot++] = net;
  }
  if (!counts.empty()) network_table_ = AliasTable(counts);
}

std::size_t TripletSampler::edge_count(Network net) const {
  if (!mask_.has(net)) return 0;
  switch (net) {
    case Network::PersonPerson:
      return graphs_.pp.n_edges();
    case Network::PersonDocument:
      return graphs_.pd.n_edges();
    case Network::DocumentDocument:
      return graphs_.dd.n_edges();
  }
  return 0;
}

std::size_t TripletSampler::epoch_size() const {
  std::size_t s = 0;
  for (auto net : kNetworks) s += edge_count(net);
  return s;
}

std::pair<std::uint32_t, std::uint32_t> TripletSampler::sample_positive(Network net, Rng& rng) const {
  if (edge_count(net) == 0) {
    throw NoEdgesError(std::string("network ") + network_name(net) + " has no edges");
  }
  const std::size_t idx = edge_tables_[static_cast<std::size_t>(net)].sample(rng);
  if (net == Network::PersonDocument) {
    const auto& e = graphs_.pd.edges()[idx];
    return {e.doc, e.person};
  }
  const auto& e = (net == Network::PersonPerson ? graphs_.pp : graphs_.dd).edges()[idx];
  if (rng.below(2) == 0) return {e.u, e.v};
  return {e.v, e.u};
}

std::uint32_t TripletSampler::candidate_count(Network net) const {
  switch (net) {
    case Network::PersonPerson:
    case Network::PersonDocument:
      return graphs_.pd.n_persons();
    case Network::DocumentDocument:
      return graphs_.dd.n_vertices();
  }
  return 0;
}

bool TripletSampler::is_neighbor(Network net, std::uint32_t anchor, std::uint32_t candidate) const {
  switch (net) {
    case Network::PersonPerson:
      return contains(graphs_.pp.neighbors(anchor), candidate);
    case Network::PersonDocument:
      return contains(graphs_.pd.doc_neighbors(anchor), candidate);
    case Network::DocumentDocument:
      return contains(graphs_.dd.neighbors(anchor), candidate);
  }
  return false;
}

std::optional<std::uint32_t> TripletSampler::sample_negative(Network net, std::uint32_t anchor, Rng& rng) const {
  const std::uint32_t n = candidate_count(net);
  if (n == 0) return std::nullopt;
  const bool same_side = net != Network::PersonDocument;
  auto valid = [&](std::uint32_t t) { return !(same_side && t == anchor) && !is_neighbor(net, anchor, t); };
  for (int attempt = 0; attempt < 100; ++attempt) {
    const auto t = static_cast<std::uint32_t>(rng.below(n));
    if (valid(t)) return t;
  }
  std::vector<std::uint32_t> pool;
  for (std::uint32_t t = 0; t < n; ++t) {
    if (valid(t)) pool.push_back(t);
  }
  if (pool.empty()) return std::nullopt;
  return pool[rng.below(pool.size())];
}

std::optional<Triplet> TripletSampler::sample(Rng& rng) const {
  if (network_table_.empty()) throw NoEdgesError("no active network has edges");
  const Network net = network_order_[network_table_.sample(rng)];
  const auto [anchor, positive] = sample_positive(net, rng);
  const auto negative = sample_negative(net, anchor, rng);
  if (!negative) return std::nullopt;
  return Triplet{net, anchor, positive, *negative};
}

std::vector<Triplet> draw_triplets(const TripletSampler& sampler, std::size_t count, Rng& rng) {
  std::vector<Triplet> out;
  out.reserve(count);
  for (std::size_t attempt = 0; out.size() < count && attempt < 4 * count + 16; ++attempt) {
    if (auto t = sampler.sample(rng)) out.push_back(*t);
  }
  return out;
}

Evaluation evaluate_triplets(const EmbeddingModel& model, std::span<const Triplet> sample) {
  Evaluation ev;
  ev.n = sample.size();
  if (sample.empty()) return ev;
  std::size_t ordered = 0;
  for (const auto& t : sample) {
    const auto a = model.anchor_row(t), p = model.positive_row(t), n = model.negative_row(t);
    const double margin = affinity(a, p) - affinity(a, n);
    ev.nll += neg_log_sigmoid(margin);
    ev.reg += model.hyper.lambda * (affinity(a, a) + affinity(p, p) + affinity(n, n));
    if (margin > 0.0) ++ordered;
  }
  const double n = static_cast<double>(sample.size());
  ev.nll /= n;
  ev.reg /= n;
  ev.auc = static_cast<double>(ordered) / n;
  return ev;
}

std::vector<EpochStats> train(EmbeddingModel& model, const TripletSampler& sampler, const TrainOptions& options) {
  std::vector<EpochStats> trace;
  if (options.epochs == 0) return trace;
  if (sampler.epoch_size() == 0) throw NoEdgesError("no active network has edges");
  if (options.negatives_per_positive < 1) throw ConfigError("negatives_per_positive must be >= 1");
  if (sampler.graphs().pd.n_persons() != model.persons.rows() ||
      sampler.graphs().dd.n_vertices() != model.documents.rows()) {
    throw ContractViolation("model shape does not match the graphs");
  }

  const std::size_t rounds = sampler.epoch_size();
  const double total_steps = static_cast<double>(rounds) * options.epochs;
  const double lr0 = model.hyper.learning_rate;
  std::size_t step = 0;
  for (std::uint32_t epoch = 1; epoch <= options.epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    try {
      for (std::size_t r = 0; r < rounds; ++r, ++step) {
        const double lr = options.decay_learning_rate
                              ? lr0 * std::max(1e-4, 1.0 - static_cast<double>(step) / total_steps)
                              : lr0;
        auto first = sampler.sample(model.rng);
        if (!first) {
          ++stats.skipped;
          continue;
        }
        sgd_step(model, *first, lr);
        ++stats.updates;
        for (std::uint32_t extra = 1; extra < options.negatives_per_positive; ++extra) {
          auto neg = sampler.sample_negative(first->network, first->anchor, model.rng);
          if (!neg) break;
          Triplet t = *first;
          t.negative = *neg;
          sgd_step(model, t, lr);
          ++stats.updates;
        }
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " in epoch " + std::to_string(epoch));
    }
    Rng eval_rng(Rng::derive(model.hyper.seed, 0xe0a1000000ULL + epoch));
    const auto sample = draw_triplets(sampler, options.eval_samples, eval_rng);
    const auto ev = evaluate_triplets(model, sample);
    stats.nll = ev.nll;
    stats.reg = ev.reg;
    stats.loss = ev.nll + ev.reg;
    stats.auc = ev.auc;
    trace.push_back(stats);
  }
  return trace;
}

void write_trace_csv(std::span<const EpochStats> trace, std::ostream& out) {
  out << "epoch,loss,auc,nll,reg\n";
  char buf[160];
  for (const auto& s : trace) {
    std::snprintf(buf, sizeof buf, "%u,%.17g,%.17g,%.17g,%.17g\n", s.epoch, s.loss, s.auc, s.nll, s.reg);
    out << buf;
  }
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'T', 'R', 'I', 'G', 'E', 'M', 'B', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(value);
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof bytes);
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof bytes)) throw IoError("truncated checkpoint");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void save_checkpoint(const EmbeddingModel& model, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint64_t>(out, model.persons.rows());
  put_le<std::uint64_t>(out, model.documents.rows());
  put_le<std::uint64_t>(out, model.hyper.dim);
  put_le<double>(out, model.hyper.lambda);
  put_le<double>(out, model.hyper.learning_rate);
  put_le<std::uint64_t>(out, model.hyper.seed);
  for (double v : model.persons.values()) put_le<double>(out, v);
  for (double v : model.documents.values()) put_le<double>(out, v);
  if (!out) throw IoError("failed to write checkpoint");
}

EmbeddingModel load_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw IoError("not a model checkpoint");
  }
  if (get_le<std::uint32_t>(in) != kVersion) throw IoError("unsupported checkpoint version");
  const auto m = get_le<std::uint64_t>(in);
  const auto n = get_le<std::uint64_t>(in);
  const auto k = get_le<std::uint64_t>(in);
  Hyperparams hyper;
  hyper.dim = static_cast<std::uint32_t>(k);
  hyper.lambda = get_le<double>(in);
  hyper.learning_rate = get_le<double>(in);
  hyper.seed = get_le<std::uint64_t>(in);
  if (k == 0 || k > (1u << 20)) throw IoError("implausible checkpoint dimension");
  EmbeddingModel model{Matrix(m, k), Matrix(n, k), hyper, Rng(hyper.seed)};
  for (double& v : model.persons.values()) v = get_le<double>(in);
  for (double& v : model.documents.values()) v = get_le<double>(in);
  return model;
}

}  // namespace trigraph
