#include "nprf/nprf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "nprf/common.hpp"

namespace nprf {

std::string to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::drmm: return "drmm";
    case ScorerKind::knrm: return "knrm";
  }
  throw std::invalid_argument("unknown scorer kind");
}

std::string to_string(CombineVariant variant) {
  switch (variant) {
    case CombineVariant::ds: return "ds";
    case CombineVariant::ff: return "ff";
    case CombineVariant::ff_prime: return "ff-prime";
  }
  throw std::invalid_argument("unknown combine variant");
}

ScorerKind parse_scorer(std::string_view name) {
  if (name == "drmm") return ScorerKind::drmm;
  if (name == "knrm") return ScorerKind::knrm;
  throw std::invalid_argument("unknown scorer '" + std::string(name) + "' (drmm or knrm)");
}

CombineVariant parse_variant(std::string_view name) {
  if (name == "ds") return CombineVariant::ds;
  if (name == "ff") return CombineVariant::ff;
  if (name == "ff-prime" || name == "ff_prime") return CombineVariant::ff_prime;
  throw std::invalid_argument("unknown variant '" + std::string(name) +
                              "' (ds, ff or ff-prime)");
}

FeedbackSet build_feedback_set(const Query& query, const RunList& initial_run,
                               const CorpusIndex& index, int m, int k) {
  if (m < 1 || k < 1) throw std::invalid_argument("build_feedback_set: m and k must be >= 1");
  if (initial_run.entries.empty())
    throw std::runtime_error("build_feedback_set: empty run for query '" + query.query_id +
                             "'");
  FeedbackSet fb;
  fb.query_id = query.query_id;
  size_t n = std::min<size_t>(static_cast<size_t>(m), initial_run.entries.size());
  fb.members.reserve(n);
  for (size_t i = 0; i < n; i++) {
    const auto& e = initial_run.entries[i];
    const Document* doc = index.find_doc(e.doc_id);
    if (!doc)
      throw std::runtime_error("build_feedback_set: doc '" + e.doc_id + "' not in index");
    fb.members.push_back(FeedbackMember{e.doc_id, e.score, tfidf_summary(*doc, index, k)});
  }
  return fb;
}

Vec normalize_gates(std::span<const double> rel_q_scores) {
  if (rel_q_scores.empty()) throw std::invalid_argument("normalize_gates: empty score vector");
  auto [mn_it, mx_it] = std::minmax_element(rel_q_scores.begin(), rel_q_scores.end());
  double mn = *mn_it, mx = *mx_it;
  Vec gates(rel_q_scores.size());
  if (mn == mx) {
    std::fill(gates.begin(), gates.end(), 1.0);
    return gates;
  }
  for (size_t i = 0; i < rel_q_scores.size(); i++)
    gates[i] = 0.5 + 0.5 * (rel_q_scores[i] - mn) / (mx - mn);
  return gates;
}

NprfParams NprfParams::make(ScorerKind scorer, CombineVariant variant, int m) {
  if (m < 1) throw std::invalid_argument("NprfParams: m must be >= 1");
  NprfParams p;
  p.scorer = scorer;
  p.variant = variant;
  p.m = m;
  p.drmm = DrmmParams::make();
  p.knrm = KnrmParams::make();
  if (variant != CombineVariant::ds) {
    p.comb_hidden.resize(m, kCombineHidden);
    p.comb_out.resize(kCombineHidden, 1);
  }
  return p;
}

void NprfParams::init(Rng& rng) {
  if (scorer == ScorerKind::drmm)
    drmm.init(rng);
  else
    knrm.init(rng);
  if (variant != CombineVariant::ds) {
    init_uniform(comb_hidden, rng);
    init_uniform(comb_out, rng);
  }
  bump_revision();
}

NprfParams NprfParams::zeros_like() const {
  NprfParams g;
  g.scorer = scorer;
  g.variant = variant;
  g.m = m;
  g.drmm = drmm.zeros_like();
  g.knrm = knrm.zeros_like();
  if (variant != CombineVariant::ds) {
    g.comb_hidden.resize(m, kCombineHidden);
    g.comb_out.resize(kCombineHidden, 1);
  }
  return g;
}

namespace {

template <typename Refs, typename Params>
Refs nprf_param_refs(Params& p) {
  Refs refs;
  auto add = [&refs](const std::string& prefix, Refs scorer_refs) {
    for (auto& [name, vec] : scorer_refs) refs.emplace_back(prefix + name, vec);
  };
  if (p.scorer == ScorerKind::drmm)
    add("drmm.", p.drmm.param_refs());
  else
    add("knrm.", p.knrm.param_refs());
  if (p.variant != CombineVariant::ds) {
    refs.emplace_back("comb.hidden.w", &p.comb_hidden.w);
    refs.emplace_back("comb.hidden.b", &p.comb_hidden.b);
    refs.emplace_back("comb.out.w", &p.comb_out.w);
    refs.emplace_back("comb.out.b", &p.comb_out.b);
  }
  return refs;
}

}  // namespace

ParamRefs NprfParams::param_refs() { return nprf_param_refs<ParamRefs>(*this); }

ConstParamRefs NprfParams::param_refs() const { return nprf_param_refs<ConstParamRefs>(*this); }

void NprfParams::bump_revision() {
  revision++;
  drmm.revision = revision;
  knrm.revision = revision;
}

std::string NprfParams::shape_descriptor() const {
  return to_string(scorer) + "-" + to_string(variant) + "-m" + std::to_string(m);
}

std::string NprfParams::run_tag() const {
  return "nprf-" + to_string(scorer) + "-" + to_string(variant);
}

void NprfParams::save_file(const std::string& path) const {
  save_params_file(path, "nprf", shape_descriptor(), param_refs());
}

NprfParams NprfParams::load_file(const std::string& path) {
  LoadedParams loaded = load_params_file(path);
  if (loaded.model_name != "nprf")
    throw std::runtime_error("checkpoint '" + path + "' holds model '" + loaded.model_name +
                             "', expected 'nprf'");
  // Shape descriptor <scorer>-<variant>-m<m>; variant may itself contain '-'.
  const std::string& shape = loaded.shape;
  size_t first = shape.find('-');
  size_t last = shape.rfind("-m");
  if (first == std::string::npos || last == std::string::npos || last <= first)
    throw std::runtime_error("checkpoint '" + path + "': bad shape descriptor '" + shape + "'");
  ScorerKind scorer = parse_scorer(shape.substr(0, first));
  CombineVariant variant = parse_variant(shape.substr(first + 1, last - first - 1));
  int m = static_cast<int>(parse_int(shape.substr(last + 2), "checkpoint m"));
  NprfParams p = make(scorer, variant, m);
  apply_loaded_params(loaded, p.param_refs());
  p.bump_revision();
  return p;
}

ResolvedSummary resolve_summary(const std::vector<TermWeight>& summary,
                                const EmbeddingTable& table, const CorpusIndex& index) {
  ResolvedSummary out;
  for (const auto& tw : summary) {
    auto r = table.row_of(tw.term);
    if (!r && table.policy() == OovPolicy::skip_term) continue;
    out.ids.push_back(r ? static_cast<int32_t>(*r) : -1);
    out.idf.push_back(index.idf(tw.term));
  }
  return out;
}

std::vector<int32_t> resolve_target(std::span<const std::string> terms,
                                    const EmbeddingTable& table) {
  std::vector<int32_t> out;
  out.reserve(terms.size());
  for (const auto& t : terms) {
    auto r = table.row_of(t);
    if (!r && table.policy() == OovPolicy::skip_term) continue;
    out.push_back(r ? static_cast<int32_t>(*r) : -1);
  }
  return out;
}

TargetFeatures extract_features(std::span<const ResolvedSummary> summaries,
                                std::span<const int32_t> target_ids, ScorerKind scorer,
                                const EmbeddingTable& table, const KnrmParams& kernels) {
  TargetFeatures out;
  out.pairs.resize(summaries.size());
  for (size_t i = 0; i < summaries.size(); i++) {
    const auto& s = summaries[i];
    if (scorer == ScorerKind::drmm) {
      out.pairs[i].drmm = drmm_features_ids(s.ids, s.idf, target_ids, table);
    } else {
      out.pairs[i].knrm_phi =
          knrm_features_ids(s.ids, target_ids, kernels.mu, kernels.sigma, table);
    }
  }
  return out;
}

double nprf_score_features(const TargetFeatures& features, std::span<const double> feedback_gates,
                           const NprfParams& params, NprfCache* cache) {
  size_t n = features.pairs.size();
  if (n == 0) throw std::invalid_argument("nprf_score_features: no feedback pairs");
  if (feedback_gates.size() != n)
    throw std::invalid_argument("nprf_score_features: gates not aligned with feedback");
  if (params.variant != CombineVariant::ds && n > static_cast<size_t>(params.m))
    throw std::invalid_argument("nprf_score_features: feedback size " + std::to_string(n) +
                                " exceeds model width m=" + std::to_string(params.m));

  NprfCache local;
  NprfCache& c = cache ? *cache : local;
  c = NprfCache{};
  c.revision = params.revision;

  c.raw.assign(n, 0.0);
  c.gates.assign(n, 1.0);
  if (params.variant != CombineVariant::ff_prime)
    std::copy(feedback_gates.begin(), feedback_gates.end(), c.gates.begin());
  if (params.scorer == ScorerKind::drmm)
    c.drmm_caches.resize(n);
  else
    c.knrm_caches.resize(n);

  for (size_t i = 0; i < n; i++) {
    if (params.scorer == ScorerKind::drmm) {
      c.raw[i] = drmm_score(features.pairs[i].drmm, params.drmm, &c.drmm_caches[i]);
    } else if (features.pairs[i].knrm_phi) {
      c.raw[i] = knrm_score(*features.pairs[i].knrm_phi, params.knrm, &c.knrm_caches[i]);
    } else {
      c.knrm_caches[i].valid = true;
      c.knrm_caches[i].degenerate = true;
      c.knrm_caches[i].revision = params.knrm.revision;
    }
  }

  double score = 0.0;
  if (params.variant == CombineVariant::ds) {
    c.gated.resize(n);
    for (size_t i = 0; i < n; i++) {
      c.gated[i] = c.raw[i] * c.gates[i];
      score += c.gated[i];
    }
  } else {
    c.gated.assign(static_cast<size_t>(params.m), 0.0);
    for (size_t i = 0; i < n; i++) c.gated[i] = c.raw[i] * c.gates[i];
    c.comb_hidden_act = tanh_vec(params.comb_hidden.forward(c.gated));
    score = params.comb_out.forward(c.comb_hidden_act)[0];
  }
  c.score = score;
  c.valid = true;
  return score;
}

void nprf_backward(const TargetFeatures& features, const NprfParams& params,
                   const NprfCache& cache, double upstream, NprfParams& grad) {
  if (!cache.valid) throw std::runtime_error("nprf_backward: missing forward cache");
  if (cache.revision != params.revision)
    throw std::runtime_error("nprf_backward: stale forward cache (params changed)");
  size_t n = features.pairs.size();
  if (cache.raw.size() != n) throw std::runtime_error("nprf_backward: cache/features mismatch");

  Vec draw(n, 0.0);  // d(score)/d(raw_i)
  if (params.variant == CombineVariant::ds) {
    for (size_t i = 0; i < n; i++) draw[i] = upstream * cache.gates[i];
  } else {
    Vec dh = params.comb_out.backward(cache.comb_hidden_act, Vec{upstream}, grad.comb_out);
    for (size_t i = 0; i < dh.size(); i++) {
      double a = cache.comb_hidden_act[i];
      dh[i] *= 1.0 - a * a;
    }
    Vec dgated = params.comb_hidden.backward(cache.gated, dh, grad.comb_hidden);
    for (size_t i = 0; i < n; i++) draw[i] = dgated[i] * cache.gates[i];
  }

  for (size_t i = 0; i < n; i++) {
    if (params.scorer == ScorerKind::drmm) {
      drmm_backward(features.pairs[i].drmm, params.drmm, cache.drmm_caches[i], draw[i],
                    grad.drmm);
    } else if (features.pairs[i].knrm_phi) {
      knrm_backward(*features.pairs[i].knrm_phi, params.knrm, cache.knrm_caches[i], draw[i],
                    grad.knrm);
    }
  }
}

namespace {

TargetFeatures extract_for_target(const FeedbackSet& feedback,
                                  std::span<const ResolvedSummary> summaries,
                                  std::span<const std::string> target_terms,
                                  const NprfParams& params, const EmbeddingTable& table) {
  (void)feedback;
  std::vector<int32_t> target_ids = resolve_target(target_terms, table);
  return extract_features(summaries, target_ids, params.scorer, table, params.knrm);
}

}  // namespace

double nprf_score(const Query& query, const FeedbackSet& feedback, const Document& target,
                  const NprfParams& params, const EmbeddingTable& table,
                  const CorpusIndex& index, NprfCache* cache) {
  (void)query;
  if (feedback.members.empty())
    throw std::invalid_argument("nprf_score: feedback set has no members");
  std::vector<ResolvedSummary> summaries;
  summaries.reserve(feedback.members.size());
  Vec rel_q;
  for (const auto& mem : feedback.members) {
    summaries.push_back(resolve_summary(mem.summary, table, index));
    rel_q.push_back(mem.rel_q_score);
  }
  TargetFeatures features = extract_for_target(feedback, summaries, target.terms, params, table);
  Vec gates = normalize_gates(rel_q);
  return nprf_score_features(features, gates, params, cache);
}

RunList rerank(const Query& query, const RunList& initial_run, const NprfParams& params,
               const EmbeddingTable& table, const CorpusIndex& index, int m, int k, int depth,
               const RerankOptions& opts) {
  if (depth < 1) throw std::invalid_argument("rerank: depth must be >= 1");
  FeedbackSet fb = build_feedback_set(query, initial_run, index, m, k);
  std::vector<ResolvedSummary> summaries;
  summaries.reserve(fb.members.size());
  Vec rel_q;
  for (const auto& mem : fb.members) {
    summaries.push_back(resolve_summary(mem.summary, table, index));
    rel_q.push_back(mem.rel_q_score);
  }
  Vec gates = normalize_gates(rel_q);

  size_t n = std::min<size_t>(static_cast<size_t>(depth), initial_run.entries.size());
  Vec scores(n, 0.0);
  std::vector<std::string> errors(n);
  parallel_for(n, opts.threads, [&](size_t i) {
    const auto& e = initial_run.entries[i];
    const Document* doc = index.find_doc(e.doc_id);
    if (!doc) {
      errors[i] = "rerank: doc '" + e.doc_id + "' not in index";
      return;
    }
    try {
      std::span<const std::string> terms(doc->terms);
      if (opts.target_len_cap > 0 && terms.size() > static_cast<size_t>(opts.target_len_cap))
        terms = terms.subspan(0, static_cast<size_t>(opts.target_len_cap));
      TargetFeatures features = extract_for_target(fb, summaries, terms, params, table);
      scores[i] = nprf_score_features(features, gates, params, nullptr);
    } catch (const std::exception& ex) {
      errors[i] = "rerank: doc '" + e.doc_id + "': " + ex.what();
    }
  });
  for (const auto& err : errors)
    if (!err.empty()) throw std::runtime_error(err);

  if (opts.add_target_rel_q) {
    Vec pool(n);
    for (size_t i = 0; i < n; i++) pool[i] = initial_run.entries[i].score;
    auto [mn_it, mx_it] = std::minmax_element(pool.begin(), pool.end());
    double mn = *mn_it, mx = *mx_it;
    for (size_t i = 0; i < n; i++)
      scores[i] += mx == mn ? 1.0 : (pool[i] - mn) / (mx - mn);
  }

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  RunList out;
  out.query_id = query.query_id;
  out.entries.reserve(n);
  for (size_t i = 0; i < n; i++) {
    out.entries.push_back(RunEntry{initial_run.entries[order[i]].doc_id, scores[order[i]],
                                   static_cast<int>(i + 1)});
  }
  return out;
}

}  // namespace nprf
