#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "nprf/corpus.hpp"

namespace nprf {

struct Query {
  enum class Kind { title, description };

  std::string query_id;
  std::vector<std::string> terms;  // preprocessed like document text
  std::vector<double> weights;     // empty = all 1.0; else aligned with terms
  Kind kind = Kind::title;
};

struct RunEntry {
  std::string doc_id;
  double score = 0.0;
  int rank = 0;  // 1-based, consecutive
};

struct RunList {
  std::string query_id;
  std::vector<RunEntry> entries;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// ln(1 + (N - df + 0.5) / (df + 0.5)); non-negative for df <= N.
double bm25_idf(size_t doc_count, size_t df);

// Sum over query term occurrences of w * idf * tf*(k1+1) / (tf + k1*(1-b+b*dl/avgdl)).
double bm25_score(const Query& query, uint32_t ord, const CorpusIndex& index,
                  const Bm25Params& params);
double bm25_score(const Query& query, std::string_view doc_id, const CorpusIndex& index,
                  const Bm25Params& params);

// Top-`depth` candidates (docs containing at least one query term) by score,
// ties broken by doc_id ascending. Produces the same scores as bm25_score.
RunList bm25_search(const Query& query, const CorpusIndex& index, const Bm25Params& params,
                    int depth);

// Rocchio-style expansion: appends the top fb_terms non-query terms of the top
// fb_docs run entries, ranked by tf-idf summed over those docs (ties by term
// ascending). Original terms keep weight 1, expansion terms get weight beta.
Query rocchio_expand(const Query& query, const RunList& run, const CorpusIndex& index,
                     int fb_docs, int fb_terms, double beta);

// TREC run format: `query_id Q0 doc_id rank score tag`, score with 6 decimals.
void write_trec_run(std::ostream& out, const std::vector<RunList>& runs, std::string_view tag);
void write_trec_run_file(const std::string& path, const std::vector<RunList>& runs,
                         std::string_view tag);
std::vector<RunList> read_trec_run(std::istream& in);
std::vector<RunList> read_trec_run_file(const std::string& path);

// Queries file: one query per line, `query_id<TAB>text`.
std::vector<Query> load_queries_tsv(const std::string& path, const StopwordSet& stopwords,
                                    Query::Kind kind = Query::Kind::title);

}  // namespace nprf
