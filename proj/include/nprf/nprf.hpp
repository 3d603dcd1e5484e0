#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nprf/first_stage.hpp"
#include "nprf/nirm.hpp"

namespace nprf {

enum class ScorerKind { drmm, knrm };
enum class CombineVariant { ds, ff, ff_prime };

std::string to_string(ScorerKind kind);
std::string to_string(CombineVariant variant);
ScorerKind parse_scorer(std::string_view name);
CombineVariant parse_variant(std::string_view name);

struct FeedbackMember {
  std::string doc_id;
  double rel_q_score = 0.0;
  std::vector<TermWeight> summary;  // top-k tf-idf terms
};

// The pseudo-relevance feedback documents for one query, in rank order.
struct FeedbackSet {
  std::string query_id;
  std::vector<FeedbackMember> members;
};

// Takes the first min(m, |run|) entries with their tf-idf summaries.
FeedbackSet build_feedback_set(const Query& query, const RunList& initial_run,
                               const CorpusIndex& index, int m, int k);

// Smoothed min-max rescaling of first-stage scores into [0.5, 1]:
// gate_i = 0.5 + 0.5 * (s_i - min) / (max - min); all 1.0 when max == min.
Vec normalize_gates(std::span<const double> rel_q_scores);

inline constexpr int kCombineHidden = 5;

// Full model: embedded per-feedback scorer plus the combination stage.
// ds sums the gated scores; ff feeds the gated vector (feedback-rank order,
// zero-padded to m) through an FFN [m -> 5 -> 1] with tanh hidden; ff_prime
// is ff with all gates forced to 1.
struct NprfParams {
  ScorerKind scorer = ScorerKind::drmm;
  CombineVariant variant = CombineVariant::ds;
  int m = 10;
  DrmmParams drmm;
  KnrmParams knrm;
  Linear comb_hidden;  // ff variants only
  Linear comb_out;
  uint64_t revision = 0;

  static NprfParams make(ScorerKind scorer, CombineVariant variant, int m);
  void init(Rng& rng);
  NprfParams zeros_like() const;
  ParamRefs param_refs();
  ConstParamRefs param_refs() const;
  // Marks caches from older forwards stale. Call after any in-place mutation
  // of parameter values (the optimizer does).
  void bump_revision();
  std::string shape_descriptor() const;  // "<scorer>-<variant>-m<m>"
  std::string run_tag() const;           // "nprf-<scorer>-<variant>"

  void save_file(const std::string& path) const;
  static NprfParams load_file(const std::string& path);
};

// Pre-extracted scorer inputs for one (feedback member, target doc) pair.
// Depends only on summaries, the target and fixed kernels, never on
// trainable parameters, so it can be computed once and reused all epochs.
struct PairFeatures {
  DrmmFeatures drmm;             // scorer == drmm
  std::optional<Vec> knrm_phi;   // scorer == knrm; nullopt = degenerate pair
};

struct TargetFeatures {
  std::vector<PairFeatures> pairs;  // aligned with feedback members
};

// Summary rows resolved against the embedding table (OOV policy applied),
// with idf weights for DRMM gating.
struct ResolvedSummary {
  std::vector<int32_t> ids;
  Vec idf;
};

ResolvedSummary resolve_summary(const std::vector<TermWeight>& summary,
                                const EmbeddingTable& table, const CorpusIndex& index);
std::vector<int32_t> resolve_target(std::span<const std::string> terms,
                                    const EmbeddingTable& table);

TargetFeatures extract_features(std::span<const ResolvedSummary> summaries,
                                std::span<const int32_t> target_ids, ScorerKind scorer,
                                const EmbeddingTable& table, const KnrmParams& kernels);

struct NprfCache {
  bool valid = false;
  uint64_t revision = 0;
  std::vector<DrmmCache> drmm_caches;
  std::vector<KnrmCache> knrm_caches;
  Vec raw;     // rel_d per member
  Vec gates;   // effective gates (ones for ff_prime)
  Vec gated;   // zero-padded to m for ff variants
  Vec comb_hidden_act;
  double score = 0.0;
};

// feedback_gates come from normalize_gates over the feedback set's rel_q
// scores; ff_prime substitutes 1.0 internally.
double nprf_score_features(const TargetFeatures& features, std::span<const double> feedback_gates,
                           const NprfParams& params, NprfCache* cache = nullptr);
void nprf_backward(const TargetFeatures& features, const NprfParams& params,
                   const NprfCache& cache, double upstream, NprfParams& grad);

// Convenience single-call scorer over raw structures (builds matrices and
// features internally; same result as the features path).
double nprf_score(const Query& query, const FeedbackSet& feedback, const Document& target,
                  const NprfParams& params, const EmbeddingTable& table,
                  const CorpusIndex& index, NprfCache* cache = nullptr);

struct RerankOptions {
  // Adds min-max-normalized rel_q(q, d) over the rerank pool to each score
  // (experimental; the default pipeline routes rel_q through the gates only).
  bool add_target_rel_q = false;
  // Truncates target documents to this many leading terms (0 = no cap).
  int target_len_cap = 0;
  int threads = 1;
};

// Re-scores the top min(depth, |initial_run|) entries with nprf_score and
// re-sorts descending; ties keep the initial (BM25) order.
RunList rerank(const Query& query, const RunList& initial_run, const NprfParams& params,
               const EmbeddingTable& table, const CorpusIndex& index, int m, int k, int depth,
               const RerankOptions& opts = {});

}  // namespace nprf
