#include "trigraph/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "trigraph/error.hpp"

namespace trigraph {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  if (name_ref.empty()) throw ConfigError("--name-ref is required");
  if (hyper.dim < 1) throw ConfigError("--dim must be >= 1");
  if (!(hyper.lambda >= 0.0)) throw ConfigError("--lambda must be >= 0");
  if (!(hyper.learning_rate > 0.0)) throw ConfigError("--lr must be > 0");
  if (n_runs < 1) throw ConfigError("--runs must be >= 1");
  if (components.empty()) throw ConfigError("--components must name at least one network");
  if (n_clusters && *n_clusters < 1) throw ConfigError("--clusters must be >= 1");
}

std::size_t Workload::isolated_docs() const {
  std::size_t n = 0;
  for (std::uint32_t d = 0; d < instance.n_docs(); ++d) {
    if (graphs.pd.doc_neighbors(d).empty() && graphs.dd.degree(d) == 0) ++n;
  }
  return n;
}

Workload prepare_workload(const RecordSet& rs, const std::string& name_ref) {
  Workload w{select_instance(rs, name_ref), {}};
  w.graphs = build_trigraph(w.instance);
  return w;
}

std::uint32_t resolve_clusters(const RunConfig& cfg, const Workload& w) {
  std::uint32_t l;
  if (cfg.n_clusters) {
    l = *cfg.n_clusters;
  } else if (w.instance.truth) {
    l = static_cast<std::uint32_t>(w.instance.n_classes());
  } else {
    throw ConfigError("--clusters is required when no truth file is given");
  }
  if (l < 1 || l > w.instance.n_docs()) {
    throw RangeError("cluster count " + std::to_string(l) + " outside [1, " +
                     std::to_string(w.instance.n_docs()) + "]");
  }
  return l;
}

Dendrogram cluster_documents(const EmbeddingModel& model, Metric metric) {
  return hac_group_average(pairwise_distances(model.documents, metric));
}

RunResult run_once(const Workload& w, const RunConfig& cfg, std::uint64_t seed) {
  const auto start = Clock::now();
  const std::uint32_t l = resolve_clusters(cfg, w);
  Hyperparams hyper = cfg.hyper;
  hyper.seed = seed;
  RunResult r;
  r.seed = seed;
  r.model = init_model(w.instance.n_persons(), w.instance.n_docs(), hyper);
  const TripletSampler sampler(w.graphs, cfg.components);
  r.trace = train(r.model, sampler, cfg.train);
  r.dendrogram = cluster_documents(r.model, cfg.metric);
  r.assignment = cut(r.dendrogram, l);
  if (w.instance.truth) r.score = macro_f1(r.assignment.labels, *w.instance.truth);
  r.runtime_ms = elapsed_ms(start);
  return r;
}

std::vector<double> MultiRunReport::scores() const {
  std::vector<double> out;
  for (const auto& r : runs) {
    if (r.ok) out.push_back(r.macro_f1);
  }
  return out;
}

MultiRunReport multi_run(const Workload& w, const RunConfig& cfg) {
  MultiRunReport rep;
  rep.name_ref = w.instance.name_ref;
  rep.n_clusters = resolve_clusters(cfg, w);
  const bool scored = w.instance.truth.has_value();
  for (std::uint32_t i = 0; i < cfg.n_runs; ++i) {
    RunOutcome out;
    out.seed = cfg.hyper.seed + i;
    try {
      RunResult r = run_once(w, cfg, out.seed);
      out.ok = true;
      if (r.score) {
        out.macro_f1 = r.score->macro_f1;
        out.per_class_f1 = r.score->per_class_f1;
      }
      if (!r.trace.empty()) {
        out.final_loss = r.trace.back().loss;
        out.final_auc = r.trace.back().auc;
      }
      out.runtime_ms = r.runtime_ms;
      if (i == 0) rep.first = std::move(r);
    } catch (const Error& e) {
      out.error = e.what();
    }
    rep.runs.push_back(std::move(out));
    if (scored) {
      const auto rand = baseline_rand(static_cast<std::uint32_t>(w.instance.n_docs()), rep.n_clusters,
                                      cfg.hyper.seed + i);
      rep.rand_scores.push_back(macro_f1(rand.labels, *w.instance.truth).macro_f1);
    }
  }
  const auto ok = rep.scores();
  rep.embedding = summarize(ok);
  if (scored) {
    rep.rand = summarize(rep.rand_scores);
    rep.authorlist =
        macro_f1(baseline_authorlist(w.instance, rep.n_clusters, cfg.metric).labels, *w.instance.truth).macro_f1;
    if (ok.size() >= 2) {
      const std::vector<double> base(ok.size(), *rep.authorlist);
      try {
        rep.vs_authorlist = paired_t_test(ok, base);
      } catch (const UndefinedTestError&) {
      }
    }
  }
  return rep;
}

Json report_json(const Workload& w, const RunConfig& cfg, const MultiRunReport& r) {
  Json j;
  j["name_ref"] = w.instance.name_ref;
  j["method"] = "embedding";
  j["n_docs"] = w.instance.n_docs();
  j["n_persons"] = w.instance.n_persons();
  j["L"] = r.n_clusters;
  j["edges"] = {{"pp", w.graphs.pp.n_edges()}, {"pd", w.graphs.pd.n_edges()}, {"dd", w.graphs.dd.n_edges()}};
  j["components"] = cfg.components.to_string();
  j["dim"] = cfg.hyper.dim;
  j["lambda"] = cfg.hyper.lambda;
  j["lr"] = cfg.hyper.learning_rate;
  j["lr_decay"] = cfg.train.decay_learning_rate;
  j["epochs"] = cfg.train.epochs;
  j["metric"] = metric_name(cfg.metric);
  j["seed"] = cfg.hyper.seed;
  j["n_runs"] = cfg.n_runs;
  j["isolated_docs"] = w.isolated_docs();

  const bool scored = w.instance.truth.has_value();
  const auto ok = r.scores();
  if (scored && !ok.empty()) {
    j["macro_f1"] = r.embedding.mean;
    j["std"] = r.embedding.stddev;
  } else {
    j["macro_f1"] = nullptr;
    j["std"] = nullptr;
  }
  if (r.first && r.first->score) {
    j["per_class_f1"] = r.first->score->per_class_f1;
    Json align = Json::object();
    for (const auto& [c, t] : r.first->score->alignment) {
      align[std::to_string(c)] = w.instance.class_keys[t];
    }
    j["alignment"] = align;
  }
  Json runs = Json::array();
  for (const auto& o : r.runs) {
    Json run;
    run["seed"] = o.seed;
    run["ok"] = o.ok;
    if (o.ok) {
      if (scored) run["macro_f1"] = o.macro_f1;
      run["final_loss"] = o.final_loss;
      run["final_auc"] = o.final_auc;
    } else {
      run["error"] = o.error;
    }
    runs.push_back(run);
  }
  j["runs"] = runs;
  if (scored) {
    j["baselines"] = {{"rand", {{"mean", r.rand.mean}, {"std", r.rand.stddev}}},
                      {"authorlist", r.authorlist ? Json(*r.authorlist) : Json(nullptr)}};
    if (r.vs_authorlist) {
      j["t_test_vs_authorlist"] = {{"t", r.vs_authorlist->t},
                                    {"p", r.vs_authorlist->p},
                                    {"df", r.vs_authorlist->df},
                                    {"significant_at_0_05", r.vs_authorlist->p < 0.05}};
    }
  }
  j["trace"] = "trace.csv";
  return j;
}

std::vector<Json> run_records(const RunConfig& cfg, const MultiRunReport& r) {
  std::vector<Json> out;
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    const auto& o = r.runs[i];
    Json j;
    j["name_ref"] = r.name_ref;
    j["method"] = "embedding";
    j["L"] = r.n_clusters;
    j["seed"] = o.seed;
    j["macro_f1"] = o.ok ? Json(o.macro_f1) : Json(nullptr);
    j["per_class_f1"] = o.per_class_f1;
    j["runtime_ms"] = o.runtime_ms;
    if (!o.ok) j["error"] = o.error;
    out.push_back(j);
    if (i < r.rand_scores.size()) {
      Json b;
      b["name_ref"] = r.name_ref;
      b["method"] = "rand";
      b["L"] = r.n_clusters;
      b["seed"] = cfg.hyper.seed + i;
      b["macro_f1"] = r.rand_scores[i];
      b["per_class_f1"] = Json::array();
      b["runtime_ms"] = 0.0;
      out.push_back(b);
    }
  }
  if (r.authorlist) {
    Json b;
    b["name_ref"] = r.name_ref;
    b["method"] = "authorlist";
    b["L"] = r.n_clusters;
    b["seed"] = cfg.hyper.seed;
    b["macro_f1"] = *r.authorlist;
    b["per_class_f1"] = Json::array();
    b["runtime_ms"] = 0.0;
    out.push_back(b);
  }
  return out;
}

std::vector<SweepRow> sweep_dim(const Workload& w, const RunConfig& cfg, const std::vector<std::uint32_t>& dims) {
  std::vector<SweepRow> rows;
  for (std::size_t cell = 0; cell < dims.size(); ++cell) {
    SweepRow row;
    row.key = std::to_string(dims[cell]);
    try {
      RunConfig c = cfg;
      c.hyper.dim = dims[cell];
      c.validate();
      const auto rep = multi_run(w, c);
      row.mean = rep.embedding.mean;
      row.stddev = rep.embedding.stddev;
      row.ok_runs = static_cast<std::uint32_t>(rep.scores().size());
      if (row.ok_runs == 0) row.error = rep.runs.empty() ? "no runs" : rep.runs.front().error;
    } catch (const Error& e) {
      row.error = e.what();
    }
    if (!row.error.empty()) row.mean = row.stddev = std::nan("");
    rows.push_back(row);
  }
  return rows;
}

LSweep sweep_clusters(const Workload& w, const RunConfig& cfg, const std::vector<std::uint32_t>& ls) {
  LSweep out;
  auto start = Clock::now();
  Hyperparams hyper = cfg.hyper;
  auto model = init_model(w.instance.n_persons(), w.instance.n_docs(), hyper);
  const TripletSampler sampler(w.graphs, cfg.components);
  train(model, sampler, cfg.train);
  const auto dg = cluster_documents(model, cfg.metric);
  out.train_ms = elapsed_ms(start);
  start = Clock::now();
  for (auto l : ls) {
    SweepRow row;
    row.key = std::to_string(l);
    ClusterAssignment a;
    try {
      a = cut(dg, l);
      if (w.instance.truth) {
        row.mean = macro_f1(a.labels, *w.instance.truth).macro_f1;
      } else {
        row.mean = std::nan("");
      }
      row.ok_runs = 1;
    } catch (const Error& e) {
      row.error = e.what();
      row.mean = std::nan("");
    }
    out.rows.push_back(row);
    out.cuts.push_back(std::move(a));
  }
  out.cut_ms = elapsed_ms(start);
  return out;
}

std::vector<ComponentMask> ablation_masks() {
  return {ComponentMask(false, true, false), ComponentMask(false, true, true), ComponentMask(true, true, true)};
}

std::vector<SweepRow> ablation(const Workload& w, const RunConfig& cfg, const std::vector<ComponentMask>& masks) {
  std::vector<SweepRow> rows;
  for (const auto& mask : masks) {
    SweepRow row;
    // Listed in the order the components were added.
    std::string key;
    for (auto net : {Network::PersonDocument, Network::DocumentDocument, Network::PersonPerson}) {
      if (!mask.has(net)) continue;
      if (!key.empty()) key += '+';
      key += network_name(net);
    }
    row.key = key;
    try {
      RunConfig c = cfg;
      c.components = mask;
      c.validate();
      const auto rep = multi_run(w, c);
      row.mean = rep.embedding.mean;
      row.stddev = rep.embedding.stddev;
      row.ok_runs = static_cast<std::uint32_t>(rep.scores().size());
      if (row.ok_runs == 0) row.error = rep.runs.empty() ? "no runs" : rep.runs.front().error;
    } catch (const Error& e) {
      row.error = e.what();
    }
    if (!row.error.empty()) row.mean = row.stddev = std::nan("");
    rows.push_back(row);
  }
  return rows;
}

std::string rows_csv(const std::string& key_header, const std::vector<SweepRow>& rows, bool with_std) {
  std::ostringstream out;
  out << key_header << (with_std ? ",mean_macro_f1,std\n" : ",macro_f1\n");
  for (const auto& r : rows) {
    out << r.key << ',' << format_double(r.mean);
    if (with_std) out << ',' << format_double(r.stddev);
    out << '\n';
  }
  return out.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content, bool force) {
  namespace fs = std::filesystem;
  if (fs::exists(path) && !force) {
    throw IoError(path.string() + " exists; pass --force to overwrite");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename to " + path.string() + " failed: " + ec.message());
}

RecordSet load_records(const std::string& records_path, const std::string& truth_path) {
  std::ifstream in(records_path);
  if (!in) throw IoError("cannot open records file " + records_path);
  RecordSet rs = parse_records(in);
  if (!truth_path.empty()) {
    std::ifstream tin(truth_path);
    if (!tin) throw IoError("cannot open truth file " + truth_path);
    rs.set_truth(parse_truth(tin));
  }
  return rs;
}

}  // namespace trigraph
