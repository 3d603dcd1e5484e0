#include "nprf/first_stage.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "nprf/common.hpp"

namespace nprf {

double bm25_idf(size_t doc_count, size_t df) {
  double n = static_cast<double>(doc_count);
  double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

namespace {

double term_weight(const Query& q, size_t i) {
  if (q.weights.empty()) return 1.0;
  if (q.weights.size() != q.terms.size())
    throw std::invalid_argument("query '" + q.query_id + "': weights/terms length mismatch");
  return q.weights[i];
}

double bm25_contribution(double tf, double idf, double dl, double avgdl,
                         const Bm25Params& p) {
  double norm = p.k1 * (1.0 - p.b + p.b * dl / avgdl);
  return idf * tf * (p.k1 + 1.0) / (tf + norm);
}

}  // namespace

double bm25_score(const Query& query, uint32_t ord, const CorpusIndex& index,
                  const Bm25Params& params) {
  if (ord >= index.doc_count()) throw std::runtime_error("bm25_score: doc ordinal out of range");
  double dl = static_cast<double>(index.doc(ord).length());
  double avgdl = index.avg_doc_len();
  double score = 0.0;
  for (size_t i = 0; i < query.terms.size(); i++) {
    uint32_t tf = index.tf(query.terms[i], ord);
    if (tf == 0) continue;
    double idf = bm25_idf(index.doc_count(), index.df(query.terms[i]));
    score += term_weight(query, i) *
             bm25_contribution(static_cast<double>(tf), idf, dl, avgdl, params);
  }
  return score;
}

double bm25_score(const Query& query, std::string_view doc_id, const CorpusIndex& index,
                  const Bm25Params& params) {
  auto ord = index.doc_ord(doc_id);
  if (!ord) throw std::runtime_error("bm25_score: unknown doc_id '" + std::string(doc_id) + "'");
  return bm25_score(query, *ord, index, params);
}

RunList bm25_search(const Query& query, const CorpusIndex& index, const Bm25Params& params,
                    int depth) {
  if (depth < 1) throw std::invalid_argument("bm25_search: depth must be >= 1");
  RunList run;
  run.query_id = query.query_id;
  if (index.doc_count() == 0) return run;

  // Term-at-a-time accumulation in query order: per candidate this adds the
  // same contributions in the same order as bm25_score, so scores are
  // bit-identical between search and single-doc scoring.
  std::vector<double> acc(index.doc_count(), 0.0);
  std::vector<uint8_t> touched(index.doc_count(), 0);
  std::vector<uint32_t> candidates;
  double avgdl = index.avg_doc_len();
  for (size_t i = 0; i < query.terms.size(); i++) {
    const auto* plist = index.postings(query.terms[i]);
    if (!plist) continue;
    double idf = bm25_idf(index.doc_count(), plist->size());
    double w = term_weight(query, i);
    for (const Posting& p : *plist) {
      double dl = static_cast<double>(index.doc(p.doc).length());
      acc[p.doc] += w * bm25_contribution(static_cast<double>(p.tf), idf, dl, avgdl, params);
      if (!touched[p.doc]) {
        touched[p.doc] = 1;
        candidates.push_back(p.doc);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::stable_sort(candidates.begin(), candidates.end(), [&](uint32_t a, uint32_t b) {
    return acc[a] > acc[b];  // equal scores keep ordinal (= doc_id) order
  });
  size_t n = std::min<size_t>(candidates.size(), static_cast<size_t>(depth));
  run.entries.reserve(n);
  for (size_t i = 0; i < n; i++) {
    run.entries.push_back(RunEntry{index.doc(candidates[i]).doc_id, acc[candidates[i]],
                                   static_cast<int>(i + 1)});
  }
  return run;
}

Query rocchio_expand(const Query& query, const RunList& run, const CorpusIndex& index,
                     int fb_docs, int fb_terms, double beta) {
  if (fb_docs < 1 || fb_terms < 1)
    throw std::invalid_argument("rocchio_expand: fb_docs and fb_terms must be >= 1");
  if (run.entries.empty()) throw std::invalid_argument("rocchio_expand: empty run");
  if (static_cast<size_t>(fb_docs) > run.entries.size())
    throw std::invalid_argument("rocchio_expand: fb_docs exceeds run length");

  StopwordSet original(query.terms.begin(), query.terms.end());
  std::map<std::string, double> pooled;
  for (int i = 0; i < fb_docs; i++) {
    const auto& doc_id = run.entries[static_cast<size_t>(i)].doc_id;
    const Document* doc = index.find_doc(doc_id);
    if (!doc) throw std::runtime_error("rocchio_expand: doc '" + doc_id + "' not in index");
    std::map<std::string, uint32_t> counts;
    for (const auto& t : doc->terms) counts[t]++;
    for (const auto& [term, tf] : counts) {
      if (original.count(term)) continue;
      pooled[term] += static_cast<double>(tf) * index.idf(term);
    }
  }
  std::vector<TermWeight> ranked;
  ranked.reserve(pooled.size());
  for (const auto& [term, w] : pooled) ranked.push_back(TermWeight{term, w});
  std::sort(ranked.begin(), ranked.end(), [](const TermWeight& a, const TermWeight& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.term < b.term;
  });
  if (ranked.size() > static_cast<size_t>(fb_terms)) ranked.resize(static_cast<size_t>(fb_terms));

  Query out;
  out.query_id = query.query_id;
  out.kind = query.kind;
  out.terms = query.terms;
  out.weights.assign(query.terms.size(), 1.0);
  for (size_t i = 0; i < query.terms.size(); i++) out.weights[i] = term_weight(query, i);
  for (const auto& tw : ranked) {
    out.terms.push_back(tw.term);
    out.weights.push_back(beta);
  }
  return out;
}

void write_trec_run(std::ostream& out, const std::vector<RunList>& runs, std::string_view tag) {
  char score_buf[64];
  for (const auto& run : runs) {
    for (const auto& e : run.entries) {
      std::snprintf(score_buf, sizeof score_buf, "%.6f", e.score);
      out << run.query_id << " Q0 " << e.doc_id << " " << e.rank << " " << score_buf << " "
          << tag << "\n";
    }
  }
  if (!out) throw std::runtime_error("run file write failed");
}

void write_trec_run_file(const std::string& path, const std::vector<RunList>& runs,
                         std::string_view tag) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write run file: " + path);
  write_trec_run(out, runs, tag);
}

std::vector<RunList> read_trec_run(std::istream& in) {
  std::vector<RunList> runs;
  std::unordered_map<std::string, size_t> by_qid;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string qid, q0, doc_id, score_s, tag;
    int rank = 0;
    if (!(ls >> qid >> q0 >> doc_id >> rank >> score_s >> tag) || q0 != "Q0")
      throw std::runtime_error("run file line " + std::to_string(lineno) + ": bad format");
    double score = parse_double(score_s, "run score");
    auto [it, inserted] = by_qid.emplace(qid, runs.size());
    if (inserted) runs.push_back(RunList{qid, {}});
    runs[it->second].entries.push_back(RunEntry{doc_id, score, rank});
  }
  for (auto& run : runs) {
    std::sort(run.entries.begin(), run.entries.end(),
              [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
    for (size_t i = 0; i < run.entries.size(); i++) {
      if (run.entries[i].rank != static_cast<int>(i + 1))
        throw std::runtime_error("run for query '" + run.query_id +
                                 "': ranks not consecutive from 1");
    }
  }
  return runs;
}

std::vector<RunList> read_trec_run_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run file: " + path);
  return read_trec_run(in);
}

std::vector<Query> load_queries_tsv(const std::string& path, const StopwordSet& stopwords,
                                    Query::Kind kind) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open queries file: " + path);
  std::vector<Query> out;
  std::unordered_set<std::string> seen;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected query_id<TAB>text");
    Query q;
    q.query_id = line.substr(0, tab);
    if (q.query_id.empty() || !seen.insert(q.query_id).second)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": empty or duplicate query_id");
    q.terms = preprocess(line.substr(tab + 1), stopwords);
    q.kind = kind;
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace nprf
