#include "nprf/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <utility>

namespace nprf {

double hinge_loss(double rel_plus, double rel_minus) {
  return std::max(0.0, 1.0 - rel_plus + rel_minus);
}

std::vector<TrainingInstance> sample_instances(const Qrels& qrels,
                                               const std::vector<RunList>& initial_runs,
                                               int per_query, uint64_t seed,
                                               bool with_replacement, SampleStats* stats) {
  if (per_query < 1) throw std::invalid_argument("sample_instances: per_query must be >= 1");
  Rng rng(seed);
  std::vector<TrainingInstance> out;
  SampleStats local;
  for (const auto& run : initial_runs) {
    std::vector<const std::string*> rel, nonrel;
    for (const auto& e : run.entries) {
      if (!qrels.judged(run.query_id, e.doc_id)) continue;
      if (qrels.grade(run.query_id, e.doc_id) > 0)
        rel.push_back(&e.doc_id);
      else
        nonrel.push_back(&e.doc_id);
    }
    if (rel.empty() || nonrel.empty()) {
      local.skipped_queries++;
      continue;
    }
    local.eligible_queries++;
    if (with_replacement) {
      for (int j = 0; j < per_query; j++) {
        const std::string& dp = *rel[rng.below(rel.size())];
        const std::string& dm = *nonrel[rng.below(nonrel.size())];
        out.push_back(TrainingInstance{run.query_id, dp, dm});
      }
    } else {
      size_t total = rel.size() * nonrel.size();
      if (total <= static_cast<size_t>(per_query)) {
        for (size_t r = 0; r < rel.size(); r++)
          for (size_t c = 0; c < nonrel.size(); c++)
            out.push_back(TrainingInstance{run.query_id, *rel[r], *nonrel[c]});
      } else {
        std::set<size_t> seen;
        while (seen.size() < static_cast<size_t>(per_query)) {
          size_t r = rng.below(rel.size());
          size_t c = rng.below(nonrel.size());
          if (!seen.insert(r * nonrel.size() + c).second) continue;
          out.push_back(TrainingInstance{run.query_id, *rel[r], *nonrel[c]});
        }
      }
    }
  }
  if (local.eligible_queries == 0)
    throw std::runtime_error(
        "sample_instances: no query has both judged-relevant and judged-non-relevant "
        "candidates");
  if (stats) *stats = local;
  return out;
}

AdamState::AdamState(const ParamRefs& params, AdamConfig config) : config_(config) {
  for (const auto& [name, vec] : params) {
    names_.push_back(name);
    m_.emplace_back(vec->size(), 0.0);
    v_.emplace_back(vec->size(), 0.0);
  }
}

void AdamState::step(const ParamRefs& params, const ConstParamRefs& grads) {
  if (params.size() != names_.size() || grads.size() != names_.size())
    throw std::invalid_argument("adam_step: block count mismatch");
  t_++;
  double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < names_.size(); i++) {
    if (params[i].first != names_[i] || grads[i].first != names_[i])
      throw std::invalid_argument("adam_step: block name mismatch at " + names_[i]);
    Vec& p = *params[i].second;
    const Vec& g = *grads[i].second;
    if (p.size() != m_[i].size() || g.size() != m_[i].size())
      throw std::invalid_argument("adam_step: block size mismatch at " + names_[i]);
    for (size_t j = 0; j < p.size(); j++) {
      double gj = g[j];
      if (!std::isfinite(gj))
        throw std::runtime_error("adam_step: non-finite gradient in block " + names_[i]);
      m_[i][j] = config_.beta1 * m_[i][j] + (1.0 - config_.beta1) * gj;
      v_[i][j] = config_.beta2 * v_[i][j] + (1.0 - config_.beta2) * gj * gj;
      double mhat = m_[i][j] / bc1;
      double vhat = v_[i][j] / bc2;
      p[j] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

FoldPlan make_fold_plan(std::vector<std::string> query_ids, int n_folds, Rng& rng) {
  if (n_folds < 2) throw std::invalid_argument("make_fold_plan: need at least 2 folds");
  if (query_ids.size() < static_cast<size_t>(n_folds))
    throw std::runtime_error("make_fold_plan: need at least " + std::to_string(n_folds) +
                             " queries, have " + std::to_string(query_ids.size()));
  rng.shuffle(query_ids);
  size_t base = query_ids.size() / static_cast<size_t>(n_folds);
  size_t remainder = query_ids.size() % static_cast<size_t>(n_folds);
  std::vector<std::vector<std::string>> parts(static_cast<size_t>(n_folds));
  size_t pos = 0;
  for (size_t i = 0; i < parts.size(); i++) {
    size_t len = base + (i < remainder ? 1 : 0);
    parts[i].assign(query_ids.begin() + static_cast<ptrdiff_t>(pos),
                    query_ids.begin() + static_cast<ptrdiff_t>(pos + len));
    pos += len;
  }
  FoldPlan plan;
  plan.folds.resize(parts.size());
  for (size_t i = 0; i < parts.size(); i++) {
    Fold& fold = plan.folds[i];
    fold.test_qids = parts[i];
    fold.val_qids = parts[(i + 1) % parts.size()];
    for (size_t j = 0; j < parts.size(); j++) {
      if (j == i || j == (i + 1) % parts.size()) continue;
      fold.train_qids.insert(fold.train_qids.end(), parts[j].begin(), parts[j].end());
    }
  }
  return plan;
}

RetrievalSetup::RetrievalSetup(const CorpusIndex& index, const EmbeddingTable& table,
                               std::vector<Query> queries, const TrainSettings& settings)
    : index_(index), table_(table), settings_(settings) {
  std::vector<RunList> runs(queries.size());
  parallel_for(queries.size(), settings_.threads,
               [&](size_t i) { runs[i] = bm25_search(queries[i], index_, settings_.bm25,
                                                     settings_.depth); });
  for (size_t i = 0; i < queries.size(); i++) {
    if (runs[i].entries.empty()) {
      skipped_.push_back(queries[i].query_id);
      continue;
    }
    QueryContext ctx;
    ctx.query = std::move(queries[i]);
    ctx.run = std::move(runs[i]);
    ctx.feedback = build_feedback_set(ctx.query, ctx.run, index_, settings_.m, settings_.k);
    Vec rel_q;
    for (const auto& mem : ctx.feedback.members) {
      ctx.summaries.push_back(resolve_summary(mem.summary, table_, index_));
      rel_q.push_back(mem.rel_q_score);
    }
    ctx.gates = normalize_gates(rel_q);
    if (!by_qid_.emplace(ctx.query.query_id, contexts_.size()).second)
      throw std::runtime_error("duplicate query_id '" + ctx.query.query_id + "'");
    contexts_.push_back(std::move(ctx));
  }
}

const QueryContext& RetrievalSetup::context(std::string_view query_id) const {
  auto it = by_qid_.find(std::string(query_id));
  if (it == by_qid_.end())
    throw std::runtime_error("unknown or skipped query '" + std::string(query_id) + "'");
  return contexts_[it->second];
}

bool RetrievalSetup::has_query(std::string_view query_id) const {
  return by_qid_.count(std::string(query_id)) > 0;
}

std::vector<RunList> RetrievalSetup::baseline_runs() const {
  std::vector<RunList> out;
  out.reserve(contexts_.size());
  for (const auto& ctx : contexts_) out.push_back(ctx.run);
  return out;
}

const std::vector<int32_t>& RetrievalSetup::target_ids(uint32_t ord) const {
  std::lock_guard<std::mutex> lock(cache_mu_);
  auto it = target_cache_.find(ord);
  if (it != target_cache_.end()) return it->second;
  std::span<const std::string> terms(index_.doc(ord).terms);
  if (settings_.target_len_cap > 0 &&
      terms.size() > static_cast<size_t>(settings_.target_len_cap))
    terms = terms.subspan(0, static_cast<size_t>(settings_.target_len_cap));
  auto [ins, inserted] = target_cache_.emplace(ord, resolve_target(terms, table_));
  (void)inserted;
  return ins->second;
}

namespace {

uint64_t pair_key(size_t query_idx, uint32_t ord) {
  return (static_cast<uint64_t>(query_idx) << 32) | ord;
}

uint64_t qid_set_hash(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> all;
  all.reserve(a.size() + b.size());
  all.insert(all.end(), a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  uint64_t h = kFnvOffset;
  for (const auto& qid : all) {
    h = fnv1a(qid, h);
    h = fnv1a("|", h);
  }
  return h;
}

// Scores every document of a query's run with fixed params using
// pre-extracted features and re-sorts (ties keep BM25 order).
RunList rerank_from_features(const QueryContext& ctx,
                             const std::vector<TargetFeatures>& features,
                             const NprfParams& params) {
  size_t n = features.size();
  Vec scores(n);
  for (size_t i = 0; i < n; i++)
    scores[i] = nprf_score_features(features[i], ctx.gates, params, nullptr);
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  RunList out;
  out.query_id = ctx.query.query_id;
  out.entries.reserve(n);
  for (size_t i = 0; i < n; i++) {
    out.entries.push_back(
        RunEntry{ctx.run.entries[order[i]].doc_id, scores[order[i]], static_cast<int>(i + 1)});
  }
  return out;
}

}  // namespace

TrainResult train(const RetrievalSetup& setup, const Fold& fold, const Qrels& qrels,
                  uint64_t seed) {
  const TrainSettings& cfg = setup.settings();
  Rng master(seed);

  std::vector<std::string> train_qids;
  for (const auto& qid : fold.train_qids)
    if (setup.has_query(qid)) train_qids.push_back(qid);
  std::vector<std::string> val_qids;
  for (const auto& qid : fold.val_qids)
    if (setup.has_query(qid)) val_qids.push_back(qid);
  if (train_qids.empty()) throw std::runtime_error("train: no usable training queries");
  if (val_qids.empty()) throw std::runtime_error("train: no usable validation queries");

  TrainResult result;
  result.params = NprfParams::make(cfg.scorer, cfg.variant, cfg.m);
  Rng init_rng = master.derive(1);
  result.params.init(init_rng);
  result.consumed_hash = qid_set_hash(fold.train_qids, fold.val_qids);

  std::vector<RunList> train_runs;
  train_runs.reserve(train_qids.size());
  for (const auto& qid : train_qids) train_runs.push_back(setup.context(qid).run);
  std::vector<TrainingInstance> instances =
      sample_instances(qrels, train_runs, cfg.per_query, master.derive(2).seed(),
                       cfg.sample_with_replacement, &result.sample_stats);

  // Scorer inputs depend only on (feedback docs, target doc), never on the
  // trainable parameters, so extract once and reuse across all epochs.
  struct InstanceRefs {
    size_t query_idx;
    const TargetFeatures* plus;
    const TargetFeatures* minus;
  };
  std::unordered_map<uint64_t, TargetFeatures> feature_cache;
  std::vector<const QueryContext*> train_ctx;
  std::unordered_map<std::string, size_t> ctx_pos;
  for (const auto& qid : train_qids) {
    ctx_pos.emplace(qid, train_ctx.size());
    train_ctx.push_back(&setup.context(qid));
  }
  auto features_for = [&](size_t query_idx, const std::string& doc_id) -> const TargetFeatures* {
    auto ord = setup.index().doc_ord(doc_id);
    if (!ord) throw std::runtime_error("train: doc '" + doc_id + "' not in corpus");
    uint64_t key = pair_key(query_idx, *ord);
    auto it = feature_cache.find(key);
    if (it == feature_cache.end()) {
      const QueryContext& ctx = *train_ctx[query_idx];
      it = feature_cache
               .emplace(key, extract_features(ctx.summaries, setup.target_ids(*ord), cfg.scorer,
                                              setup.table(), result.params.knrm))
               .first;
    }
    return &it->second;
  };
  std::vector<InstanceRefs> refs;
  refs.reserve(instances.size());
  for (const auto& inst : instances) {
    size_t qidx = ctx_pos.at(inst.query_id);
    refs.push_back(
        InstanceRefs{qidx, features_for(qidx, inst.d_plus), features_for(qidx, inst.d_minus)});
  }

  // Validation features, one vector per validation query aligned to its run.
  std::vector<const QueryContext*> val_ctx;
  std::vector<std::vector<TargetFeatures>> val_features;
  for (const auto& qid : val_qids) {
    const QueryContext& ctx = setup.context(qid);
    std::vector<TargetFeatures> feats;
    feats.reserve(ctx.run.entries.size());
    for (const auto& e : ctx.run.entries) {
      auto ord = setup.index().doc_ord(e.doc_id);
      feats.push_back(extract_features(ctx.summaries, setup.target_ids(*ord), cfg.scorer,
                                       setup.table(), result.params.knrm));
    }
    val_ctx.push_back(&ctx);
    val_features.push_back(std::move(feats));
  }
  auto validation_map = [&](const NprfParams& params) {
    std::vector<RunList> val_runs;
    val_runs.reserve(val_ctx.size());
    for (size_t i = 0; i < val_ctx.size(); i++)
      val_runs.push_back(rerank_from_features(*val_ctx[i], val_features[i], params));
    return evaluate_runs(val_runs, qrels).map;
  };

  result.initial_val_map = validation_map(result.params);
  result.best_val_map = result.initial_val_map;
  result.best_epoch = 0;
  NprfParams best = result.params;

  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  AdamState adam(result.params.param_refs(), adam_cfg);
  NprfParams grad = result.params.zeros_like();

  std::vector<size_t> order(refs.size());
  std::iota(order.begin(), order.end(), 0);
  NprfCache cache_plus, cache_minus;

  for (int epoch = 1; epoch <= cfg.epochs; epoch++) {
    Rng epoch_rng = master.derive(1000 + static_cast<uint64_t>(epoch));
    epoch_rng.shuffle(order);
    double loss_sum = 0.0;
    size_t processed = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      double inv_batch = 1.0 / static_cast<double>(end - start);
      auto grad_refs = grad.param_refs();
      for (auto& [name, vec] : grad_refs) std::fill(vec->begin(), vec->end(), 0.0);
      for (size_t i = start; i < end; i++) {
        const InstanceRefs& inst = refs[order[i]];
        const QueryContext& ctx = *train_ctx[inst.query_idx];
        double rel_plus = nprf_score_features(*inst.plus, ctx.gates, result.params, &cache_plus);
        double rel_minus =
            nprf_score_features(*inst.minus, ctx.gates, result.params, &cache_minus);
        double loss = hinge_loss(rel_plus, rel_minus);
        if (!std::isfinite(loss))
          throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(start / cfg.batch_size + 1));
        loss_sum += loss;
        processed++;
        if (loss > 0.0) {
          nprf_backward(*inst.plus, result.params, cache_plus, -inv_batch, grad);
          nprf_backward(*inst.minus, result.params, cache_minus, inv_batch, grad);
        }
      }
      adam.step(result.params.param_refs(), std::as_const(grad).param_refs());
      result.params.bump_revision();
    }
    EpochStats stats;
    stats.mean_loss = processed ? loss_sum / static_cast<double>(processed) : 0.0;
    stats.val_map = validation_map(result.params);
    result.epochs.push_back(stats);
    if (stats.val_map > result.best_val_map) {
      result.best_val_map = stats.val_map;
      result.best_epoch = epoch;
      best = result.params;
    }
  }
  result.params = std::move(best);
  return result;
}

std::vector<RunList> rerank_with_params(const RetrievalSetup& setup,
                                        std::span<const std::string> query_ids,
                                        const NprfParams& params) {
  std::vector<RunList> out;
  for (const auto& qid : query_ids) {
    if (!setup.has_query(qid)) continue;
    const QueryContext& ctx = setup.context(qid);
    std::vector<TargetFeatures> feats;
    feats.reserve(ctx.run.entries.size());
    for (const auto& e : ctx.run.entries) {
      auto ord = setup.index().doc_ord(e.doc_id);
      if (!ord) throw std::runtime_error("rerank: doc '" + e.doc_id + "' not in corpus");
      feats.push_back(extract_features(ctx.summaries, setup.target_ids(*ord), params.scorer,
                                       setup.table(), params.knrm));
    }
    out.push_back(rerank_from_features(ctx, feats, params));
  }
  return out;
}

void attach_significance(CvResult& cv) {
  std::map<std::string, const QueryMetrics*> base;
  for (const auto& qm : cv.bm25_report.per_query) base.emplace(qm.query_id, &qm);
  std::vector<double> ap_a, ap_b, p20_a, p20_b, ndcg_a, ndcg_b;
  for (const auto& qm : cv.nprf_report.per_query) {
    auto it = base.find(qm.query_id);
    if (it == base.end()) continue;
    const QueryMetrics& bq = *it->second;
    if (qm.ap && bq.ap) {
      ap_a.push_back(*qm.ap);
      ap_b.push_back(*bq.ap);
    }
    p20_a.push_back(qm.p20);
    p20_b.push_back(bq.p20);
    if (qm.ndcg20 && bq.ndcg20) {
      ndcg_a.push_back(*qm.ndcg20);
      ndcg_b.push_back(*bq.ndcg20);
    }
  }
  if (ap_a.size() >= 2) cv.map_ttest = paired_t_test(ap_a, ap_b);
  if (p20_a.size() >= 2) cv.p20_ttest = paired_t_test(p20_a, p20_b);
  if (ndcg_a.size() >= 2) cv.ndcg_ttest = paired_t_test(ndcg_a, ndcg_b);
}

CvResult cross_validate(const RetrievalSetup& setup, const Qrels& qrels, int n_folds) {
  const TrainSettings& cfg = setup.settings();
  std::vector<std::string> qids;
  for (const auto& ctx : setup.queries()) qids.push_back(ctx.query.query_id);
  if (qids.size() < static_cast<size_t>(n_folds))
    throw std::runtime_error("cross_validate: need at least " + std::to_string(n_folds) +
                             " queries with results, have " + std::to_string(qids.size()));
  Rng master(cfg.seed);
  CvResult cv;
  Rng plan_rng = master.derive(1);
  cv.plan = make_fold_plan(qids, n_folds, plan_rng);

  for (size_t f = 0; f < cv.plan.folds.size(); f++) {
    const Fold& fold = cv.plan.folds[f];
    FoldOutcome outcome;
    outcome.fold = fold;
    outcome.result = train(setup, fold, qrels, master.derive(100 + f).seed());
    outcome.test_runs = rerank_with_params(setup, fold.test_qids, outcome.result.params);
    cv.folds.push_back(std::move(outcome));
  }

  for (const auto& outcome : cv.folds)
    for (const auto& run : outcome.test_runs) cv.test_runs.push_back(run);
  std::sort(cv.test_runs.begin(), cv.test_runs.end(),
            [](const RunList& a, const RunList& b) { return a.query_id < b.query_id; });
  cv.baseline_runs.reserve(cv.test_runs.size());
  for (const auto& run : cv.test_runs) cv.baseline_runs.push_back(setup.context(run.query_id).run);

  cv.nprf_report = evaluate_runs(cv.test_runs, qrels);
  cv.bm25_report = evaluate_runs(cv.baseline_runs, qrels);
  attach_significance(cv);
  return cv;
}

}  // namespace nprf
