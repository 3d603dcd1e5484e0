// nprf: ad-hoc retrieval with neural pseudo relevance feedback.
// One binary, subcommands for each pipeline stage; all randomness flows from
// the seed in the config, and every output directory gets a manifest.

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nprf/experiment.hpp"
#include "nprf/synthetic.hpp"

namespace fs = std::filesystem;
using namespace nprf;

namespace {

// Tracks files written under one output directory. Nothing is considered
// delivered until commit(); on error the destructor removes the partial
// outputs so a failed command leaves no half-written artifacts behind.
class OutputTracker {
 public:
  OutputTracker(std::string dir, const ExperimentConfig& config)
      : dir_(std::move(dir)), manifest_(config) {
    fs::create_directories(dir_);
  }

  OutputTracker(const OutputTracker&) = delete;
  OutputTracker& operator=(const OutputTracker&) = delete;

  ~OutputTracker() {
    if (committed_) return;
    for (const auto& name : names_) {
      std::error_code ec;
      fs::remove(fs::path(dir_) / name, ec);
    }
  }

  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

  void write(const std::string& name, std::string_view content) {
    write_text_file(path(name), content);
    names_.push_back(name);
  }

  // Registers a file some library call already wrote to path(name).
  void adopt(const std::string& name) { names_.push_back(name); }

  void commit() {
    for (const auto& name : names_) manifest_.record(name, path(name));
    manifest_.write(dir_);
    committed_ = true;
  }

 private:
  std::string dir_;
  Manifest manifest_;
  std::vector<std::string> names_;
  bool committed_ = false;
};

// Shared flags for commands driven by a config file.
struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs applied after the file
  std::string out_dir;                 // overrides output_dir when set
  int threads = 0;                     // 0 = keep config value

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "experiment config file (key = value lines)")
        ->required();
    cmd->add_option("--set", overrides, "override a config key, e.g. --set m=5 (repeatable)");
    cmd->add_option("-o,--out-dir", out_dir, "output directory (overrides output_dir)");
    cmd->add_option("--threads", threads, "worker thread cap (does not affect results)");
  }

  ExperimentConfig load(bool need_output_dir) const {
    ExperimentConfig config = ExperimentConfig::load_file(config_path);
    for (const auto& pair : overrides) {
      size_t eq = pair.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("--set expects key=value, got '" + pair + "'");
      std::string key = pair.substr(0, eq);
      std::string value = pair.substr(eq + 1);
      while (!key.empty() && key.back() == ' ') key.pop_back();
      while (!value.empty() && value.front() == ' ') value.erase(value.begin());
      config.set(key, value);
    }
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (threads > 0) config.train.threads = threads;
    config.validate(need_output_dir);
    return config;
  }
};

std::string run_to_string(const std::vector<RunList>& runs, std::string_view tag) {
  std::ostringstream out;
  write_trec_run(out, runs, tag);
  return out.str();
}

std::string report_table_string(const MetricReport& report) {
  std::ostringstream out;
  write_report_table(out, report);
  return out.str();
}

std::string report_jsonl_string(const MetricReport& report) {
  std::ostringstream out;
  write_report_jsonl(out, report);
  return out.str();
}

std::string metric_line(const std::string& label, const MetricReport& r) {
  std::ostringstream out;
  out << label << " map " << format_double(r.map) << " p20 " << format_double(r.mean_p20)
      << " ndcg20 " << format_double(r.mean_ndcg20) << " queries " << r.query_count;
  return out.str();
}

std::string ttest_line(const std::string& metric, const TTestResult& t) {
  std::ostringstream out;
  out << metric << " t " << format_double(t.t) << " p " << format_double(t.p) << " significant "
      << (t.significant_at_95 ? "true" : "false");
  return out.str();
}

std::string epochs_to_string(const TrainResult& result) {
  std::ostringstream out;
  out << "initial val_map " << format_double(result.initial_val_map) << "\n";
  for (size_t e = 0; e < result.epochs.size(); e++)
    out << "epoch " << (e + 1) << " loss " << format_double(result.epochs[e].mean_loss)
        << " val_map " << format_double(result.epochs[e].val_map) << "\n";
  out << "best epoch " << result.best_epoch << " val_map " << format_double(result.best_val_map)
      << "\n";
  return out.str();
}

void print_skipped(const RetrievalSetup& setup) {
  for (const auto& qid : setup.skipped_queries())
    std::cout << "note: query " << qid << " retrieved nothing, skipped\n";
}

// --- commands ---

struct IndexArgs {
  std::string corpus;
  std::string out;
  std::string stopwords = "default";
};

void cmd_index(const IndexArgs& args) {
  ExperimentConfig stopword_source;
  stopword_source.stopwords = args.stopwords;
  if (args.stopwords != "default" && args.stopwords != "none" && !fs::exists(args.stopwords))
    throw std::runtime_error("stopwords file not found: " + args.stopwords);
  StopwordSet stopwords = stopword_source.load_stopword_set();
  CorpusIndex index = CorpusIndex::build(load_corpus_jsonl(args.corpus, stopwords));
  try {
    index.save_file(args.out);
  } catch (...) {
    std::error_code ec;
    fs::remove(args.out, ec);
    throw;
  }
  std::cout << "indexed " << index.doc_count() << " docs, " << index.vocab_size()
            << " terms, avg_doc_len " << format_double(index.avg_doc_len()) << "\n"
            << "wrote " << args.out << "\n";
}

struct SearchArgs {
  ConfigArgs common;
  bool qe = false;
  int fb_docs = 10;
  int fb_terms = 20;
  double beta = 0.4;
  std::string tag;
};

void cmd_search(const SearchArgs& args) {
  ExperimentConfig config = args.common.load(true);
  LoadedExperiment data = load_experiment(config);
  std::string tag = args.tag.empty() ? (args.qe ? "bm25-qe" : "bm25") : args.tag;

  std::vector<RunList> runs;
  for (const auto& query : data.queries) {
    RunList run = bm25_search(query, data.index, config.train.bm25, config.train.depth);
    if (args.qe && !run.entries.empty()) {
      Query expanded = rocchio_expand(query, run, data.index, args.fb_docs, args.fb_terms,
                                      args.beta);
      run = bm25_search(expanded, data.index, config.train.bm25, config.train.depth);
    }
    if (run.entries.empty()) {
      std::cout << "note: query " << query.query_id << " retrieved nothing, skipped\n";
      continue;
    }
    runs.push_back(std::move(run));
  }
  if (runs.empty()) throw std::runtime_error("search: no query retrieved any document");

  OutputTracker out(config.output_dir, config);
  out.write(tag + ".run", run_to_string(runs, tag));
  MetricReport report = evaluate_runs(runs, data.qrels);
  out.commit();
  std::cout << metric_line(tag, report) << "\n"
            << "wrote " << out.path(tag + ".run") << "\n";
}

void cmd_build_feedback(const ConfigArgs& common) {
  ExperimentConfig config = common.load(true);
  LoadedExperiment data = load_experiment(config);

  std::ostringstream body;
  size_t queries_with_feedback = 0;
  for (const auto& query : data.queries) {
    RunList run = bm25_search(query, data.index, config.train.bm25, config.train.depth);
    if (run.entries.empty()) {
      std::cout << "note: query " << query.query_id << " retrieved nothing, skipped\n";
      continue;
    }
    FeedbackSet fb = build_feedback_set(query, run, data.index, config.train.m, config.train.k);
    queries_with_feedback++;
    for (size_t i = 0; i < fb.members.size(); i++) {
      const FeedbackMember& member = fb.members[i];
      body << fb.query_id << " " << (i + 1) << " " << member.doc_id << " "
           << format_double(member.rel_q_score);
      for (const auto& tw : member.summary)
        body << " " << tw.term << " " << format_double(tw.weight);
      body << "\n";
    }
  }
  if (queries_with_feedback == 0) throw std::runtime_error("feedback: no query retrieved any document");

  OutputTracker out(config.output_dir, config);
  out.write("feedback.txt", body.str());
  out.commit();
  std::cout << "wrote feedback for " << queries_with_feedback << " queries to "
            << out.path("feedback.txt") << "\n";
}

struct TrainArgs {
  ConfigArgs common;
  int folds = 5;
  int fold = 0;
};

void cmd_train(const TrainArgs& args) {
  ExperimentConfig config = args.common.load(true);
  if (args.folds < 2) throw std::runtime_error("--folds must be >= 2");
  if (args.fold < 0 || args.fold >= args.folds)
    throw std::runtime_error("--fold must be in [0, folds)");
  LoadedExperiment data = load_experiment(config);
  RetrievalSetup setup(data.index, data.table, data.queries, config.train);
  print_skipped(setup);

  // Same derivation as cross-validate, so `train --fold i` reproduces fold i.
  std::vector<std::string> qids;
  for (const auto& ctx : setup.queries()) qids.push_back(ctx.query.query_id);
  Rng master(config.train.seed);
  Rng plan_rng = master.derive(1);
  FoldPlan plan = make_fold_plan(qids, args.folds, plan_rng);
  const Fold& fold = plan.folds[static_cast<size_t>(args.fold)];

  TrainResult result = train(setup, fold, data.qrels, master.derive(100 + args.fold).seed());
  std::vector<RunList> test_runs = rerank_with_params(setup, fold.test_qids, result.params);

  OutputTracker out(config.output_dir, config);
  std::string ckpt = out.path("model.ckpt");
  result.params.save_file(ckpt);
  out.adopt("model.ckpt");
  out.write("epochs.txt", epochs_to_string(result));
  out.write("test.run", run_to_string(test_runs, result.params.run_tag()));
  MetricReport report = evaluate_runs(test_runs, data.qrels);
  out.commit();

  std::cout << "trained " << result.params.shape_descriptor() << " on fold " << args.fold << "/"
            << args.folds << ": best epoch " << result.best_epoch << ", val_map "
            << format_double(result.best_val_map) << "\n"
            << metric_line("test", report) << "\n"
            << "wrote " << ckpt << "\n";
}

struct RerankArgs {
  ConfigArgs common;
  std::string params_path;
};

void cmd_rerank(const RerankArgs& args) {
  ExperimentConfig config = args.common.load(true);
  NprfParams params = NprfParams::load_file(args.params_path);
  if (params.m != config.train.m)
    throw std::runtime_error("checkpoint was trained with m=" + std::to_string(params.m) +
                             " but config has m=" + std::to_string(config.train.m));
  config.train.scorer = params.scorer;
  config.train.variant = params.variant;
  LoadedExperiment data = load_experiment(config);
  RetrievalSetup setup(data.index, data.table, data.queries, config.train);
  print_skipped(setup);

  std::vector<std::string> qids;
  for (const auto& ctx : setup.queries()) qids.push_back(ctx.query.query_id);
  std::vector<RunList> runs = rerank_with_params(setup, qids, params);
  std::string tag = params.run_tag();

  OutputTracker out(config.output_dir, config);
  out.write(tag + ".run", run_to_string(runs, tag));
  MetricReport report = evaluate_runs(runs, data.qrels);
  MetricReport baseline = evaluate_runs(setup.baseline_runs(), data.qrels);
  out.commit();
  std::cout << metric_line("bm25", baseline) << "\n"
            << metric_line(tag, report) << "\n"
            << "wrote " << out.path(tag + ".run") << "\n";
}

struct EvalArgs {
  ConfigArgs common;
  std::string run_path;
  std::string baseline_path;
};

void cmd_evaluate(const EvalArgs& args) {
  // Only the qrels (and output dir) are consulted; corpus and embeddings are
  // not loaded for plain run scoring.
  ExperimentConfig config = ExperimentConfig::load_file(args.common.config_path);
  for (const auto& pair : args.common.overrides) {
    size_t eq = pair.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--set expects key=value, got '" + pair + "'");
    config.set(pair.substr(0, eq), pair.substr(eq + 1));
  }
  if (!args.common.out_dir.empty()) config.output_dir = args.common.out_dir;
  if (config.qrels.empty() || !fs::exists(config.qrels))
    throw std::runtime_error("config key qrels: file not found: " + config.qrels);
  if (config.output_dir.empty()) throw std::runtime_error("config key output_dir is required");

  Qrels qrels = Qrels::load_file(config.qrels);
  std::vector<RunList> runs = read_trec_run_file(args.run_path);
  MetricReport report = evaluate_runs(runs, qrels);

  OutputTracker out(config.output_dir, config);
  out.write("report.txt", report_table_string(report));
  out.write("report.jsonl", report_jsonl_string(report));
  std::cout << metric_line("run", report) << "\n";

  if (!args.baseline_path.empty()) {
    std::vector<RunList> baseline_runs = read_trec_run_file(args.baseline_path);
    CvResult pair;
    pair.nprf_report = evaluate_runs(runs, qrels);
    pair.bm25_report = evaluate_runs(baseline_runs, qrels);
    attach_significance(pair);
    std::ostringstream sig;
    sig << metric_line("baseline", pair.bm25_report) << "\n"
        << metric_line("run", pair.nprf_report) << "\n"
        << ttest_line("map", pair.map_ttest) << "\n"
        << ttest_line("p20", pair.p20_ttest) << "\n"
        << ttest_line("ndcg20", pair.ndcg_ttest) << "\n";
    out.write("significance.txt", sig.str());
    std::cout << metric_line("baseline", pair.bm25_report) << "\n"
              << ttest_line("map", pair.map_ttest) << "\n";
  }
  out.commit();
  std::cout << "wrote " << out.path("report.txt") << "\n";
}

struct CvArgs {
  ConfigArgs common;
  int folds = 5;
};

std::string cv_summary(const ExperimentConfig& config, const CvResult& cv) {
  std::ostringstream out;
  out << "model " << NprfParams::make(config.train.scorer, config.train.variant, config.train.m)
             .shape_descriptor()
      << "\n";
  out << "folds " << cv.folds.size() << "\n";
  out << metric_line("bm25", cv.bm25_report) << "\n";
  out << metric_line("nprf", cv.nprf_report) << "\n";
  out << ttest_line("map", cv.map_ttest) << "\n";
  out << ttest_line("p20", cv.p20_ttest) << "\n";
  out << ttest_line("ndcg20", cv.ndcg_ttest) << "\n";
  for (size_t f = 0; f < cv.folds.size(); f++) {
    const TrainResult& r = cv.folds[f].result;
    out << "fold " << f << " best_epoch " << r.best_epoch << " val_map "
        << format_double(r.best_val_map) << " test_queries " << cv.folds[f].fold.test_qids.size()
        << "\n";
  }
  return out.str();
}

CvResult run_cv(const ExperimentConfig& config, const LoadedExperiment& data,
                const RetrievalSetup& setup, int folds, OutputTracker& out) {
  CvResult cv = cross_validate(setup, data.qrels, folds);
  std::string tag = NprfParams::make(config.train.scorer, config.train.variant, config.train.m)
                        .run_tag();
  out.write("bm25.run", run_to_string(cv.baseline_runs, "bm25"));
  out.write(tag + ".run", run_to_string(cv.test_runs, tag));
  out.write("bm25.report.txt", report_table_string(cv.bm25_report));
  out.write("bm25.report.jsonl", report_jsonl_string(cv.bm25_report));
  out.write(tag + ".report.txt", report_table_string(cv.nprf_report));
  out.write(tag + ".report.jsonl", report_jsonl_string(cv.nprf_report));
  for (size_t f = 0; f < cv.folds.size(); f++) {
    std::string name = "fold" + std::to_string(f) + ".ckpt";
    cv.folds[f].result.params.save_file(out.path(name));
    out.adopt(name);
    out.write("fold" + std::to_string(f) + ".epochs.txt", epochs_to_string(cv.folds[f].result));
  }
  out.write("summary.txt", cv_summary(config, cv));
  return cv;
}

void cmd_cross_validate(const CvArgs& args) {
  ExperimentConfig config = args.common.load(true);
  if (args.folds < 2) throw std::runtime_error("--folds must be >= 2");
  LoadedExperiment data = load_experiment(config);
  RetrievalSetup setup(data.index, data.table, data.queries, config.train);
  print_skipped(setup);

  OutputTracker out(config.output_dir, config);
  CvResult cv = run_cv(config, data, setup, args.folds, out);
  out.commit();
  std::cout << cv_summary(config, cv) << "wrote " << out.path("summary.txt") << "\n";
}

struct SweepArgs {
  ConfigArgs common;
  std::string param;
  std::vector<int> values;
  int folds = 5;
};

void cmd_sweep(const SweepArgs& args) {
  if (args.param != "m" && args.param != "k")
    throw std::runtime_error("--param must be m or k");
  if (args.values.empty()) throw std::runtime_error("--values must be non-empty");
  ExperimentConfig base = args.common.load(true);

  std::ostringstream table;
  std::ostringstream jsonl;
  table << args.param << "  bm25_map  nprf_map  delta  p\n";

  for (int value : args.values) {
    if (value < 1) throw std::runtime_error("--values entries must be >= 1");
    ExperimentConfig config = base;
    config.set(args.param, std::to_string(value));
    config.output_dir = (fs::path(base.output_dir) / (args.param + std::to_string(value))).string();
    config.validate(true);

    LoadedExperiment data = load_experiment(config);
    RetrievalSetup setup(data.index, data.table, data.queries, config.train);
    OutputTracker sub(config.output_dir, config);
    CvResult cv = run_cv(config, data, setup, args.folds, sub);
    sub.commit();

    table << value << "  " << format_double(cv.bm25_report.map) << "  "
          << format_double(cv.nprf_report.map) << "  "
          << format_double(cv.nprf_report.map - cv.bm25_report.map) << "  "
          << format_double(cv.map_ttest.p) << "\n";
    jsonl << "{\"" << args.param << "\": " << value << ", \"bm25_map\": "
          << format_double(cv.bm25_report.map) << ", \"nprf_map\": "
          << format_double(cv.nprf_report.map) << ", \"nprf_p20\": "
          << format_double(cv.nprf_report.mean_p20) << ", \"nprf_ndcg20\": "
          << format_double(cv.nprf_report.mean_ndcg20) << ", \"map_p\": "
          << format_double(cv.map_ttest.p) << "}\n";
    std::cout << args.param << "=" << value << " bm25_map "
              << format_double(cv.bm25_report.map) << " nprf_map "
              << format_double(cv.nprf_report.map) << "\n";
  }

  OutputTracker out(base.output_dir, base);
  out.write("sweep.txt", table.str());
  out.write("sweep.jsonl", jsonl.str());
  out.commit();
  std::cout << "wrote " << out.path("sweep.txt") << "\n";
}

struct SynthArgs {
  std::string out_dir;
  SynthConfig config;
};

void cmd_synth(const SynthArgs& args) {
  std::vector<std::string> expected = {"corpus.jsonl", "queries.tsv", "qrels.txt",
                                       "embeddings.txt", "config.txt"};
  try {
    SynthFiles files = write_synthetic_dataset(args.out_dir, args.config);
    ExperimentConfig config;
    config.corpus = files.corpus;
    config.embeddings = files.embeddings;
    config.qrels = files.qrels;
    config.queries = files.queries;
    config.stopwords = "none";
    config.output_dir = (fs::path(args.out_dir) / "out").string();
    config.train.depth = 100;
    config.train.seed = args.config.seed;
    write_text_file((fs::path(args.out_dir) / "config.txt").string(), config.to_text());
    std::cout << "wrote " << files.corpus << "\n"
              << "wrote " << files.queries << "\n"
              << "wrote " << files.qrels << "\n"
              << "wrote " << files.embeddings << "\n"
              << "wrote " << (fs::path(args.out_dir) / "config.txt").string() << "\n";
  } catch (...) {
    for (const auto& name : expected) {
      std::error_code ec;
      fs::remove(fs::path(args.out_dir) / name, ec);
    }
    throw;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nprf: BM25 first stage with neural pseudo relevance feedback reranking"};
  app.require_subcommand(1);

  IndexArgs index_args;
  CLI::App* index_cmd = app.add_subcommand("index", "build and save an inverted index");
  index_cmd->add_option("--corpus", index_args.corpus, "corpus JSONL ({\"id\", \"text\"} per line)")
      ->required()
      ->check(CLI::ExistingFile);
  index_cmd->add_option("--out", index_args.out, "output index path")->required();
  index_cmd->add_option("--stopwords", index_args.stopwords,
                        "stopword list: default, none, or a file path");

  SearchArgs search_args;
  CLI::App* search_cmd = app.add_subcommand("search", "run BM25 over the query set");
  search_args.common.attach(search_cmd);
  search_cmd->add_flag("--qe", search_args.qe, "expand queries (Rocchio tf-idf) before searching");
  search_cmd->add_option("--fb-docs", search_args.fb_docs, "expansion feedback docs");
  search_cmd->add_option("--fb-terms", search_args.fb_terms, "expansion terms appended");
  search_cmd->add_option("--beta", search_args.beta, "expansion term weight");
  search_cmd->add_option("--tag", search_args.tag, "run tag (default bm25 / bm25-qe)");

  ConfigArgs feedback_args;
  CLI::App* feedback_cmd =
      app.add_subcommand("build-feedback", "write per-query feedback docs and term summaries");
  feedback_args.attach(feedback_cmd);

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train one cross-validation fold");
  train_args.common.attach(train_cmd);
  train_cmd->add_option("--folds", train_args.folds, "number of folds in the plan");
  train_cmd->add_option("--fold", train_args.fold, "fold index to train");

  RerankArgs rerank_args;
  CLI::App* rerank_cmd = app.add_subcommand("rerank", "rerank BM25 runs with a saved checkpoint");
  rerank_args.common.attach(rerank_cmd);
  rerank_cmd->add_option("--params", rerank_args.params_path, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "score a run file against the qrels");
  eval_args.common.attach(eval_cmd);
  eval_cmd->add_option("--run", eval_args.run_path, "TREC run file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--baseline", eval_args.baseline_path,
                       "baseline run for paired t-tests")
      ->check(CLI::ExistingFile);

  CvArgs cv_args;
  CLI::App* cv_cmd =
      app.add_subcommand("cross-validate", "full protocol: split, train, rerank, evaluate");
  cv_args.common.attach(cv_cmd);
  cv_cmd->add_option("--folds", cv_args.folds, "number of folds");

  SweepArgs sweep_args;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "cross-validate once per value of m or k");
  sweep_args.common.attach(sweep_cmd);
  sweep_cmd->add_option("--param", sweep_args.param, "hyperparameter to vary: m or k")->required();
  sweep_cmd->add_option("--values", sweep_args.values, "values to try")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--folds", sweep_args.folds, "number of folds");

  SynthArgs synth_args;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "generate the synthetic benchmark dataset and a config");
  synth_cmd->add_option("-o,--out-dir", synth_args.out_dir, "dataset directory")->required();
  synth_cmd->add_option("--seed", synth_args.config.seed, "generator seed");
  synth_cmd->add_option("--docs", synth_args.config.docs, "document count");
  synth_cmd->add_option("--topics", synth_args.config.topics, "latent topic count");
  synth_cmd->add_option("--queries", synth_args.config.queries, "query count");
  synth_cmd->add_option("--dim", synth_args.config.dim, "embedding dimensions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*index_cmd) cmd_index(index_args);
    if (*search_cmd) cmd_search(search_args);
    if (*feedback_cmd) cmd_build_feedback(feedback_args);
    if (*train_cmd) cmd_train(train_args);
    if (*rerank_cmd) cmd_rerank(rerank_args);
    if (*eval_cmd) cmd_evaluate(eval_args);
    if (*cv_cmd) cmd_cross_validate(cv_args);
    if (*sweep_cmd) cmd_sweep(sweep_args);
    if (*synth_cmd) cmd_synth(synth_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
