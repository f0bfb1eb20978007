// Command-line front end: synth, anonymize, build-graphs, train, cluster,
// eval, pipeline, sweep-dim, sweep-l, ablation.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "trigraph/error.hpp"
#include "trigraph/pipeline.hpp"

namespace fs = std::filesystem;
using namespace trigraph;

namespace {

struct Options {
  std::string records, truth, name_ref, model_path, assignment_path;
  std::uint32_t dim = 20;
  double lambda = 0.01;
  double lr = 0.02;
  bool lr_decay = false;
  std::uint32_t epochs = 50;
  std::uint32_t negatives = 1;
  std::uint32_t clusters = 0;
  std::string metric = "cosine";
  std::optional<std::uint64_t> seed;
  std::uint32_t runs = 10;
  std::vector<std::string> components;
  std::string out = "out";
  bool force = false;
  bool dump_graphs = false;
  std::vector<std::uint32_t> dims{10, 20, 30, 40, 50};
  std::vector<std::uint32_t> ls{40, 45, 50, 55, 60};
  std::vector<std::string> masks;
  SynthConfig synth;
};

// Innermost stage reached, named in diagnostics.
std::string g_stage = "setup";

void enter(const char* stage) { g_stage = stage; }

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("TRIGRAPH_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("TRIGRAPH_SEED is not an integer: ") + env);
    }
  }
  return 1;
}

RunConfig make_config(const Options& o) {
  RunConfig c;
  c.records_path = o.records;
  c.truth_path = o.truth;
  c.name_ref = o.name_ref;
  c.hyper.dim = o.dim;
  c.hyper.lambda = o.lambda;
  c.hyper.learning_rate = o.lr;
  c.hyper.seed = resolve_seed(o);
  c.train.epochs = o.epochs;
  c.train.negatives_per_positive = o.negatives;
  c.train.decay_learning_rate = o.lr_decay;
  if (o.clusters > 0) c.n_clusters = o.clusters;
  c.metric = parse_metric(o.metric);
  c.n_runs = o.runs;
  if (!o.components.empty()) {
    std::string joined;
    for (const auto& s : o.components) joined += s + ",";
    c.components = ComponentMask::parse(joined);
  }
  c.out_dir = o.out;
  c.force = o.force;
  c.dump_graphs = o.dump_graphs;
  c.validate();
  return c;
}

std::string render(const std::function<void(std::ostream&)>& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

void write_out(const RunConfig& c, const std::string& name, const std::string& content) {
  enter("output");
  write_file_atomic(c.out_dir / name, content, c.force);
}

Workload load_workload(const RunConfig& c) {
  if (c.records_path.empty()) throw ConfigError("--records is required");
  enter("ingest");
  Workload w{select_instance(load_records(c.records_path, c.truth_path), c.name_ref), {}};
  enter("graphs");
  w.graphs = build_trigraph(w.instance);
  return w;
}

void dump_graphs(const RunConfig& c, const Workload& w) {
  write_out(c, "gpp.tsv", render([&](std::ostream& o) { write_edge_list(w.graphs.pp, o); }));
  write_out(c, "gpd.tsv", render([&](std::ostream& o) { write_edge_list(w.graphs.pd, o); }));
  write_out(c, "gdd.tsv", render([&](std::ostream& o) { write_edge_list(w.graphs.dd, o); }));
}

void print_instance(const Workload& w) {
  std::cout << "name_ref " << w.instance.name_ref << ": " << w.instance.n_docs() << " docs, "
            << w.instance.n_persons() << " collaborators";
  if (w.instance.truth) std::cout << ", " << w.instance.n_classes() << " classes";
  std::cout << "\nedges pp=" << w.graphs.pp.n_edges() << " pd=" << w.graphs.pd.n_edges()
            << " dd=" << w.graphs.dd.n_edges() << ", isolated docs=" << w.isolated_docs() << "\n";
}

int cmd_synth(const Options& o) {
  SynthConfig s = o.synth;
  s.seed = resolve_seed(o);
  const RecordSet rs = generate_synthetic(s);
  const fs::path dir = o.out;
  write_file_atomic(dir / "records.tsv", to_record_text(rs), o.force);
  write_file_atomic(dir / "truth.tsv", render([&](std::ostream& out) { serialize_truth(*rs.truth(), rs, out); }),
                    o.force);
  std::cout << "wrote " << rs.size() << " records for " << s.n_entities << " entities to " << dir << "\n";
  return 0;
}

int cmd_anonymize(const Options& o) {
  if (o.records.empty()) throw ConfigError("--records is required");
  const RecordSet rs = load_records(o.records, o.truth);
  const auto anon = anonymize(rs, resolve_seed(o));
  const fs::path dir = o.out;
  write_file_atomic(dir / "records.tsv", to_record_text(anon.records), o.force);
  if (anon.records.truth()) {
    write_file_atomic(
        dir / "truth.tsv",
        render([&](std::ostream& out) { serialize_truth(*anon.records.truth(), anon.records, out); }), o.force);
  }
  write_file_atomic(dir / "keymap.tsv", render([&](std::ostream& out) {
                      for (const auto& [k, v] : anon.key_map) out << k << '\t' << v << '\n';
                    }),
                    o.force);
  if (!o.name_ref.empty()) {
    auto it = anon.key_map.find(o.name_ref);
    if (it == anon.key_map.end()) throw NotFoundError("name reference '" + o.name_ref + "' not found");
    std::cout << o.name_ref << " -> " << it->second << "\n";
  }
  return 0;
}

int cmd_build_graphs(const Options& o) {
  const RunConfig c = make_config(o);
  const Workload w = load_workload(c);
  print_instance(w);
  dump_graphs(c, w);
  return 0;
}

int cmd_train(const Options& o) {
  const RunConfig c = make_config(o);
  const Workload w = load_workload(c);
  enter("train");
  auto model = init_model(w.instance.n_persons(), w.instance.n_docs(), c.hyper);
  const TripletSampler sampler(w.graphs, c.components);
  const auto trace = train(model, sampler, c.train);
  write_out(c, "model.ckpt", render([&](std::ostream& out) { save_checkpoint(model, out); }));
  write_out(c, "trace.csv", render([&](std::ostream& out) { write_trace_csv(trace, out); }));
  if (!trace.empty()) {
    std::cout << "epoch " << trace.back().epoch << " loss " << trace.back().loss << " auc " << trace.back().auc
              << "\n";
  }
  return 0;
}

int cmd_cluster(const Options& o) {
  const RunConfig c = make_config(o);
  const Workload w = load_workload(c);
  if (o.model_path.empty()) throw ConfigError("--model is required");
  enter("cluster");
  std::ifstream in(o.model_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + o.model_path);
  const auto model = load_checkpoint(in);
  if (model.documents.rows() != w.instance.n_docs()) {
    throw ConfigError("checkpoint has " + std::to_string(model.documents.rows()) + " documents, instance has " +
                      std::to_string(w.instance.n_docs()));
  }
  const auto dg = cluster_documents(model, c.metric);
  const auto a = cut(dg, resolve_clusters(c, w));
  write_out(c, "dendrogram.csv", render([&](std::ostream& out) { write_dendrogram_csv(dg, out); }));
  write_out(c, "assignment.csv",
            render([&](std::ostream& out) { write_assignment_csv(a, w.instance.docs, out); }));
  return 0;
}

int cmd_eval(const Options& o) {
  RunConfig c = make_config(o);
  const Workload w = load_workload(c);
  if (!w.instance.truth) throw ConfigError("--truth is required for eval");
  if (o.assignment_path.empty()) throw ConfigError("--assignment is required");
  enter("eval");
  std::ifstream in(o.assignment_path);
  if (!in) throw IoError("cannot open " + o.assignment_path);
  std::map<std::string, std::uint32_t> by_doc;
  for (const auto& [doc, id] : read_assignment_csv(in)) by_doc[doc] = id;
  std::vector<std::uint32_t> labels;
  for (const auto& d : w.instance.docs) {
    auto it = by_doc.find(d);
    if (it == by_doc.end()) throw NotFoundError("assignment lacks doc '" + d + "'");
    labels.push_back(it->second);
  }
  const auto score = macro_f1(labels, *w.instance.truth);
  const std::uint32_t l = resolve_clusters(c, w);
  const double rand =
      macro_f1(baseline_rand(static_cast<std::uint32_t>(labels.size()), l, c.hyper.seed).labels, *w.instance.truth)
          .macro_f1;
  const double authorlist = macro_f1(baseline_authorlist(w.instance, l, c.metric).labels, *w.instance.truth).macro_f1;
  Json j;
  j["name_ref"] = w.instance.name_ref;
  j["method"] = "assignment";
  j["L"] = l;
  j["seed"] = c.hyper.seed;
  j["macro_f1"] = score.macro_f1;
  j["per_class_f1"] = score.per_class_f1;
  j["baselines"] = {{"rand", rand}, {"authorlist", authorlist}};
  write_out(c, "eval.json", j.dump(2) + "\n");
  std::cout << "macro_f1 " << score.macro_f1 << " (rand " << rand << ", authorlist " << authorlist << ")\n";
  return 0;
}

int cmd_pipeline(const Options& o) {
  const RunConfig c = make_config(o);
  const Workload w = load_workload(c);
  print_instance(w);
  if (c.dump_graphs) dump_graphs(c, w);
  enter("run");
  const auto rep = multi_run(w, c);
  if (rep.first) {
    const auto& r = *rep.first;
    write_out(c, "model.ckpt", render([&](std::ostream& out) { save_checkpoint(r.model, out); }));
    write_out(c, "trace.csv", render([&](std::ostream& out) { write_trace_csv(r.trace, out); }));
    write_out(c, "dendrogram.csv", render([&](std::ostream& out) { write_dendrogram_csv(r.dendrogram, out); }));
    write_out(c, "assignment.csv",
              render([&](std::ostream& out) { write_assignment_csv(r.assignment, w.instance.docs, out); }));
  }
  write_out(c, "report.json", report_json(w, c, rep).dump(2) + "\n");
  std::string lines;
  for (const auto& j : run_records(c, rep)) lines += j.dump() + "\n";
  write_out(c, "runs.jsonl", lines);

  std::size_t failed = 0;
  for (const auto& r : rep.runs) {
    if (!r.ok) {
      ++failed;
      std::cerr << "run seed " << r.seed << " failed: " << r.error << "\n";
    }
  }
  if (w.instance.truth && !rep.scores().empty()) {
    std::cout << "macro_f1 " << rep.embedding.mean << " (std " << rep.embedding.stddev << ", " << rep.scores().size()
              << " runs)\n";
    std::cout << "rand " << rep.rand.mean << ", authorlist " << rep.authorlist.value_or(0.0) << "\n";
    if (rep.vs_authorlist) {
      std::cout << "paired t vs authorlist: t=" << rep.vs_authorlist->t << " p=" << rep.vs_authorlist->p << "\n";
    }
  }
  return failed == 0 ? 0 : 1;
}

int cmd_sweep_dim(const Options& o) {
  const RunConfig c = make_config(o);
  const Workload w = load_workload(c);
  enter("run");
  const auto rows = sweep_dim(w, c, o.dims);
  const auto csv = rows_csv("k", rows);
  write_out(c, "sweep_dim.csv", csv);
  std::cout << csv;
  int status = 0;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      std::cerr << "k=" << r.key << ": " << r.error << "\n";
      status = 1;
    }
  }
  return status;
}

int cmd_sweep_l(const Options& o) {
  const RunConfig c = make_config(o);
  const Workload w = load_workload(c);
  enter("run");
  const auto sweep = sweep_clusters(w, c, o.ls);
  const auto csv = rows_csv("L", sweep.rows, false);
  write_out(c, "sweep_l.csv", csv);
  std::cout << csv;
  int status = 0;
  for (const auto& r : sweep.rows) {
    if (!r.error.empty()) {
      std::cerr << "L=" << r.key << ": " << r.error << "\n";
      status = 1;
    }
  }
  return status;
}

int cmd_ablation(const Options& o) {
  const RunConfig c = make_config(o);
  const Workload w = load_workload(c);
  std::vector<ComponentMask> masks = ablation_masks();
  if (!o.masks.empty()) {
    masks.clear();
    for (const auto& m : o.masks) masks.push_back(ComponentMask::parse(m));
  }
  enter("run");
  const auto rows = ablation(w, c, masks);
  const auto csv = rows_csv("components", rows);
  write_out(c, "ablation.csv", csv);
  std::cout << csv;
  int status = 0;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      std::cerr << r.key << ": " << r.error << "\n";
      status = 1;
    }
  }
  return status;
}

void add_input_flags(CLI::App* app, Options& o) {
  app->add_option("--records", o.records, "record file (doc<TAB>authors)");
  app->add_option("--truth", o.truth, "truth file (doc<TAB>entity)");
  app->add_option("--name-ref", o.name_ref, "ambiguous name reference");
  app->add_option("--seed", o.seed, "seed (falls back to TRIGRAPH_SEED, then 1)");
  app->add_option("--out", o.out, "output directory");
  app->add_flag("--force", o.force, "overwrite existing outputs");
}

void add_model_flags(CLI::App* app, Options& o) {
  app->add_option("--dim", o.dim, "embedding dimension")->check(CLI::PositiveNumber);
  app->add_option("--lambda", o.lambda, "l2 regularization weight")->check(CLI::NonNegativeNumber);
  app->add_option("--lr", o.lr, "SGD learning rate")->check(CLI::PositiveNumber);
  app->add_flag("--lr-decay", o.lr_decay, "decay the learning rate linearly over training");
  app->add_option("--epochs", o.epochs, "training epochs");
  app->add_option("--negatives", o.negatives, "negatives per positive")->check(CLI::PositiveNumber);
  app->add_option("--components", o.components, "networks to train on: pp pd dd")->delimiter(',');
}

void add_cluster_flags(CLI::App* app, Options& o) {
  app->add_option("--clusters", o.clusters, "number of clusters L (default: true class count)");
  app->add_option("--metric", o.metric, "distance metric")->check(CLI::IsMember({"cosine", "euclidean"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Name disambiguation on anonymized document-author graphs"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "generate a synthetic record set with truth");
  synth->add_option("--entities", o.synth.n_entities);
  synth->add_option("--alpha", o.synth.alpha, "power-law exponent of docs per entity");
  synth->add_option("--docs-min", o.synth.docs_min);
  synth->add_option("--docs-max", o.synth.docs_max);
  synth->add_option("--pool", o.synth.pool, "collaborator pool size");
  synth->add_option("--within", o.synth.within_collab, "probability of drawing from the private sub-pool");
  synth->add_option("--coauthors-min", o.synth.coauthors_min);
  synth->add_option("--coauthors-max", o.synth.coauthors_max);
  synth->add_option("--name-ref", o.synth.name_ref);
  synth->add_option("--seed", o.seed);
  synth->add_option("--out", o.out);
  synth->add_flag("--force", o.force);

  auto* anon = app.add_subcommand("anonymize", "replace every key with a pseudo-random token");
  add_input_flags(anon, o);

  auto* graphs = app.add_subcommand("build-graphs", "write the three networks as edge lists");
  add_input_flags(graphs, o);

  auto* train_cmd = app.add_subcommand("train", "train embeddings, write model.ckpt and trace.csv");
  add_input_flags(train_cmd, o);
  add_model_flags(train_cmd, o);

  auto* cluster_cmd = app.add_subcommand("cluster", "cluster a checkpoint's document rows");
  add_input_flags(cluster_cmd, o);
  add_cluster_flags(cluster_cmd, o);
  cluster_cmd->add_option("--model", o.model_path, "model checkpoint")->required();

  auto* eval_cmd = app.add_subcommand("eval", "score an assignment against truth");
  add_input_flags(eval_cmd, o);
  add_cluster_flags(eval_cmd, o);
  eval_cmd->add_option("--assignment", o.assignment_path, "assignment CSV")->required();

  auto* pipe = app.add_subcommand("pipeline", "graphs, training, clustering and evaluation");
  add_input_flags(pipe, o);
  add_model_flags(pipe, o);
  add_cluster_flags(pipe, o);
  pipe->add_option("--runs", o.runs, "runs with seeds seed..seed+runs-1");
  pipe->add_flag("--dump-graphs", o.dump_graphs, "also write gpp/gpd/gdd edge lists");

  auto* sdim = app.add_subcommand("sweep-dim", "macro-F1 across embedding dimensions");
  add_input_flags(sdim, o);
  add_model_flags(sdim, o);
  add_cluster_flags(sdim, o);
  sdim->add_option("--runs", o.runs);
  sdim->add_option("--dims", o.dims)->delimiter(',');

  auto* sl = app.add_subcommand("sweep-l", "macro-F1 across cluster counts from one dendrogram");
  add_input_flags(sl, o);
  add_model_flags(sl, o);
  add_cluster_flags(sl, o);
  sl->add_option("--ls", o.ls)->delimiter(',');

  auto* abl = app.add_subcommand("ablation", "macro-F1 as networks are added (pd, dd, pp)");
  add_input_flags(abl, o);
  add_model_flags(abl, o);
  add_cluster_flags(abl, o);
  abl->add_option("--runs", o.runs);
  abl->add_option("--mask", o.masks, "custom component mask, repeatable (e.g. pd+dd)");

  CLI11_PARSE(app, argc, argv);

  std::string command = "trigraph";
  try {
    for (const auto* sub : app.get_subcommands()) command += " " + sub->get_name();
    if (*synth) return cmd_synth(o);
    if (*anon) return cmd_anonymize(o);
    if (*graphs) return cmd_build_graphs(o);
    if (*train_cmd) return cmd_train(o);
    if (*cluster_cmd) return cmd_cluster(o);
    if (*eval_cmd) return cmd_eval(o);
    if (*pipe) return cmd_pipeline(o);
    if (*sdim) return cmd_sweep_dim(o);
    if (*sl) return cmd_sweep_l(o);
    if (*abl) return cmd_ablation(o);
  } catch (const std::exception& e) {
    std::cerr << command << " [" << g_stage << "]: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
