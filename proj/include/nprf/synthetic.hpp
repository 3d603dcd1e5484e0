#pragma once

#include <cstdint>
#include <string>

namespace nprf {

// Synthetic retrieval task with a controlled vocabulary-mismatch structure.
//
// Each topic owns `a_terms` query-side terms (queries draw from the first
// `core_terms` of them) and `terms_per_topic - a_terms` document-side terms.
// Relevant docs come in two styles: A-heavy docs match the query on the
// surface, B-heavy docs mostly use the document-side vocabulary (some carry
// no core term at all and stay beyond BM25's reach). Distractor mass comes
// from B-heavy docs of *other* topics borrowing this topic's core terms:
// they out-score the weak relevant docs lexically but their remaining text
// lives near a different embedding centroid, which is what the neural
// reranker can exploit.
//
// All generated tokens end in a digit, which keeps the stemmer and stopword
// list from altering them, so surface text round-trips the preprocessor.
struct SynthConfig {
  int docs = 2000;
  int topics = 20;
  int terms_per_topic = 240;  // first a_terms are query-side, rest doc-side
  int a_terms = 60;
  int core_terms = 12;  // subset of A that queries draw from
  int general_terms = 200;
  int queries = 50;
  int query_len = 4;
  int doc_len_min = 60;
  int doc_len_max = 120;
  int dim = 50;
  double noise = 0.7;  // embedding spread around the topic centroid

  // Token mixture shares (remainder of each style is general vocabulary).
  double a_heavy_a = 0.50;       // A-pool share in A-heavy docs
  double a_heavy_core = 0.6;     // fraction of those A draws from the core
  double a_heavy_b = 0.25;       // B-pool share in A-heavy docs
  double b_heavy_core = 0.07;    // own-core share in retrievable B-heavy docs
  double b_heavy_b = 0.55;       // own B-pool share in B-heavy docs
  double no_core_prob = 0.3;     // B-heavy docs with zero own-core share
  double borrow_prob = 0.5;      // B-heavy docs borrowing another topic's core
  double borrow_share = 0.15;    // borrowed-core share in borrowing docs

  uint64_t seed = 7;
};

struct SynthFiles {
  std::string corpus;      // JSONL, doc per line
  std::string queries;     // TSV
  std::string qrels;       // TREC qrels, every (query, doc) judged
  std::string embeddings;  // word2vec text format
};

// Writes the four dataset files into dir (created if missing) and returns
// their paths. Deterministic for a fixed config.
SynthFiles write_synthetic_dataset(const std::string& dir, const SynthConfig& config);

}  // namespace nprf
