#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nprf/evaluation.hpp"
#include "nprf/nprf.hpp"

namespace nprf {

// max(0, 1 - rel_plus + rel_minus); zero-loss boundary has zero subgradient.
double hinge_loss(double rel_plus, double rel_minus);

struct TrainingInstance {
  std::string query_id;
  std::string d_plus;   // judged relevant, drawn from the query's candidate pool
  std::string d_minus;  // judged non-relevant, same pool
};

struct SampleStats {
  size_t eligible_queries = 0;
  size_t skipped_queries = 0;  // no judged-relevant or no judged-non-relevant candidate
};

// Draws per_query (d+, d-) pairs per eligible query, uniformly over the
// judged candidates inside each query's run. Queries missing either side are
// skipped (counted); no eligible query at all is an error.
std::vector<TrainingInstance> sample_instances(const Qrels& qrels,
                                               const std::vector<RunList>& initial_runs,
                                               int per_query, uint64_t seed,
                                               bool with_replacement = true,
                                               SampleStats* stats = nullptr);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment blocks mirror the parameter blocks they
// were created from; step() checks the alignment by block name and size.
class AdamState {
 public:
  AdamState(const ParamRefs& params, AdamConfig config);
  void step(const ParamRefs& params, const ConstParamRefs& grads);
  uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  uint64_t t_ = 0;
  std::vector<std::string> names_;
  std::vector<Vec> m_;
  std::vector<Vec> v_;
};

struct Fold {
  std::vector<std::string> train_qids;
  std::vector<std::string> val_qids;
  std::vector<std::string> test_qids;
};

struct FoldPlan {
  std::vector<Fold> folds;
};

// Shuffles query ids and splits them into n_folds partitions (remainder
// spread over the earliest partitions). Fold i tests on partition i,
// validates on partition (i+1) mod n_folds, trains on the rest.
FoldPlan make_fold_plan(std::vector<std::string> query_ids, int n_folds, Rng& rng);

struct TrainSettings {
  ScorerKind scorer = ScorerKind::drmm;
  CombineVariant variant = CombineVariant::ds;
  int m = 10;
  int k = 20;
  int depth = 1000;
  double lr = 0.001;
  int batch_size = 20;
  int epochs = 30;
  int per_query = 16;
  uint64_t seed = 42;
  Bm25Params bm25;
  bool sample_with_replacement = true;
  int target_len_cap = 0;
  int threads = 1;
};

// Per-query retrieval state reused across training, validation and test:
// the BM25 run, the feedback set with resolved summaries, and the gates.
struct QueryContext {
  Query query;
  RunList run;
  FeedbackSet feedback;
  std::vector<ResolvedSummary> summaries;
  Vec gates;
};

// Read-only experiment state shared by all folds. Also memoizes resolved
// target documents (they are parameter-independent).
class RetrievalSetup {
 public:
  RetrievalSetup(const CorpusIndex& index, const EmbeddingTable& table,
                 std::vector<Query> queries, const TrainSettings& settings);

  const CorpusIndex& index() const { return index_; }
  const EmbeddingTable& table() const { return table_; }
  const TrainSettings& settings() const { return settings_; }
  const std::vector<QueryContext>& queries() const { return contexts_; }
  const QueryContext& context(std::string_view query_id) const;
  bool has_query(std::string_view query_id) const;
  // Queries dropped because BM25 retrieved nothing for them.
  const std::vector<std::string>& skipped_queries() const { return skipped_; }

  std::vector<RunList> baseline_runs() const;  // BM25 runs in query order

  // Resolved term ids of a target document, cached; respects target_len_cap.
  const std::vector<int32_t>& target_ids(uint32_t ord) const;

 private:
  const CorpusIndex& index_;
  const EmbeddingTable& table_;
  TrainSettings settings_;
  std::vector<QueryContext> contexts_;
  std::unordered_map<std::string, size_t> by_qid_;
  std::vector<std::string> skipped_;
  mutable std::mutex cache_mu_;
  mutable std::unordered_map<uint32_t, std::vector<int32_t>> target_cache_;
};

struct EpochStats {
  double mean_loss = 0.0;
  double val_map = 0.0;
};

struct TrainResult {
  NprfParams params;  // best validation-MAP checkpoint
  int best_epoch = 0;       // 1-based; 0 = untrained (never selected in practice)
  double best_val_map = 0.0;
  double initial_val_map = 0.0;  // untrained params, for reference
  std::vector<EpochStats> epochs;
  SampleStats sample_stats;
  // FNV hash over the sorted train+validation query ids: everything the
  // selected parameters may depend on besides the corpus and seed.
  uint64_t consumed_hash = 0;
};

// Pairwise hinge training on one fold: batched Adam updates, per-epoch
// validation MAP, best-epoch selection (ties resolved to the earlier epoch).
TrainResult train(const RetrievalSetup& setup, const Fold& fold, const Qrels& qrels,
                  uint64_t seed);

// Reranks the given queries with fixed params via the cached-feature path.
// Produces the same runs as rerank() on each query's BM25 run.
std::vector<RunList> rerank_with_params(const RetrievalSetup& setup,
                                        std::span<const std::string> query_ids,
                                        const NprfParams& params);

struct FoldOutcome {
  Fold fold;
  TrainResult result;
  std::vector<RunList> test_runs;
};

struct CvResult {
  FoldPlan plan;
  std::vector<FoldOutcome> folds;
  std::vector<RunList> test_runs;      // union over folds, sorted by query_id
  std::vector<RunList> baseline_runs;  // matching BM25 runs
  MetricReport nprf_report;
  MetricReport bm25_report;
  TTestResult map_ttest;
  TTestResult p20_ttest;
  TTestResult ndcg_ttest;
};

// Five-fold protocol: split, train per fold, rerank each test fold with its
// fold's best checkpoint, evaluate the union against the BM25 baseline.
CvResult cross_validate(const RetrievalSetup& setup, const Qrels& qrels, int n_folds = 5);

// Aligns two reports by query_id and runs paired t-tests on AP, P@20 and
// NDCG@20 (queries lacking a metric value on either side are dropped for
// that metric's test).
void attach_significance(CvResult& cv);

}  // namespace nprf
