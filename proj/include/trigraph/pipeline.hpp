#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trigraph/cluster.hpp"
#include "trigraph/embed.hpp"
#include "trigraph/eval.hpp"
#include "trigraph/graphs.hpp"
#include "trigraph/ingest.hpp"

namespace trigraph {

using Json = nlohmann::ordered_json;

struct RunConfig {
  std::string records_path;
  std::string truth_path;
  std::string name_ref;
  Hyperparams hyper;
  TrainOptions train;
  // Defaults to the number of true classes when truth is available.
  std::optional<std::uint32_t> n_clusters;
  Metric metric = Metric::Cosine;
  std::uint32_t n_runs = 10;
  ComponentMask components = ComponentMask::all();
  std::filesystem::path out_dir = "out";
  bool force = false;
  bool dump_graphs = false;

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

// One name reference's instance and its three networks.
struct Workload {
  Instance instance;
  TriGraph graphs;

  std::size_t isolated_docs() const;
};

Workload prepare_workload(const RecordSet& rs, const std::string& name_ref);

// Number of clusters for this workload; throws ConfigError when neither the
// config nor the truth supplies one, RangeError when outside [1, N].
std::uint32_t resolve_clusters(const RunConfig& cfg, const Workload& w);

struct RunResult {
  std::uint64_t seed = 0;
  EmbeddingModel model;
  std::vector<EpochStats> trace;
  Dendrogram dendrogram;
  ClusterAssignment assignment;
  std::optional<F1Score> score;
  double runtime_ms = 0.0;
};

// Train, cluster and (with truth) score a single seed.
RunResult run_once(const Workload& w, const RunConfig& cfg, std::uint64_t seed);

// Hierarchical clustering of the trained document rows.
Dendrogram cluster_documents(const EmbeddingModel& model, Metric metric);

struct RunOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
  double final_loss = 0.0;
  double final_auc = 0.0;
  double runtime_ms = 0.0;
};

struct MultiRunReport {
  std::string name_ref;
  std::uint32_t n_clusters = 0;
  std::vector<RunOutcome> runs;
  Summary embedding;
  std::optional<RunResult> first;  // artifacts of the seed+0 run
  std::vector<double> rand_scores;
  Summary rand;
  std::optional<double> authorlist;
  std::optional<TTest> vs_authorlist;
  std::vector<double> scores() const;
};

// Runs seeds seed+0 .. seed+n_runs-1. Failed runs are recorded, not thrown.
MultiRunReport multi_run(const Workload& w, const RunConfig& cfg);

// Deterministic EvalReport (no timings).
Json report_json(const Workload& w, const RunConfig& cfg, const MultiRunReport& r);

// One JSON-lines record per run and method, with runtime_ms.
std::vector<Json> run_records(const RunConfig& cfg, const MultiRunReport& r);

struct SweepRow {
  std::string key;
  double mean = 0.0;
  double stddev = 0.0;
  std::uint32_t ok_runs = 0;
  std::string error;
};

// One multi-run per dimension.
std::vector<SweepRow> sweep_dim(const Workload& w, const RunConfig& cfg, const std::vector<std::uint32_t>& dims);

struct LSweep {
  std::vector<SweepRow> rows;
  std::vector<ClusterAssignment> cuts;  // aligned with rows; empty labels on error
  double train_ms = 0.0;
  double cut_ms = 0.0;
};

// Trains and clusters once with the base seed and cuts the single dendrogram
// at every requested L.
LSweep sweep_clusters(const Workload& w, const RunConfig& cfg, const std::vector<std::uint32_t>& ls);

// Component masks added in the order pd, dd, pp.
std::vector<ComponentMask> ablation_masks();
std::vector<SweepRow> ablation(const Workload& w, const RunConfig& cfg,
                               const std::vector<ComponentMask>& masks = ablation_masks());

std::string rows_csv(const std::string& key_header, const std::vector<SweepRow>& rows, bool with_std = true);

// Writes through a temporary file and a rename. Throws IoError when the file
// exists and `force` is false.
void write_file_atomic(const std::filesystem::path& path, const std::string& content, bool force);

RecordSet load_records(const std::string& records_path, const std::string& truth_path);

}  // namespace trigraph
