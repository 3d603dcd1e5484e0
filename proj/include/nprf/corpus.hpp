#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nprf/text.hpp"

namespace nprf {

struct Document {
  std::string doc_id;
  std::vector<std::string> terms;  // preprocessed, in document order

  size_t length() const { return terms.size(); }
};

struct TermWeight {
  std::string term;
  double weight = 0.0;
};

struct Posting {
  uint32_t doc = 0;  // ordinal into CorpusIndex::docs()
  uint32_t tf = 0;
};

// Inverted + forward index over a fixed document collection. Documents are
// stored sorted by doc_id, so ordinals are stable for a given collection no
// matter the ingest order, and postings sorted by ordinal are also sorted by
// doc_id. Duplicate doc_ids are rejected.
class CorpusIndex {
 public:
  static CorpusIndex build(std::vector<Document> docs);

  size_t doc_count() const { return docs_.size(); }
  size_t vocab_size() const { return postings_.size(); }
  double avg_doc_len() const;

  const std::vector<Document>& docs() const { return docs_; }
  const Document& doc(uint32_t ord) const { return docs_.at(ord); }
  std::optional<uint32_t> doc_ord(std::string_view doc_id) const;
  const Document* find_doc(std::string_view doc_id) const;

  size_t df(std::string_view term) const;
  // ln(N / df); 0 for terms with no postings.
  double idf(std::string_view term) const;
  const std::vector<Posting>* postings(std::string_view term) const;
  uint32_t tf(std::string_view term, uint32_t ord) const;

  const std::map<std::string, std::vector<Posting>, std::less<>>& postings_map() const {
    return postings_;
  }

  // Text format with magic NPRFIDX1. Only integers and verbatim terms are
  // written, so save -> load -> save is byte-identical.
  void save(std::ostream& out) const;
  static CorpusIndex load(std::istream& in);
  void save_file(const std::string& path) const;
  static CorpusIndex load_file(const std::string& path);

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, uint32_t> ord_;
  std::map<std::string, std::vector<Posting>, std::less<>> postings_;
  uint64_t total_len_ = 0;
};

// Thread-safe accumulator: add() may be called from concurrent producers;
// finish() sorts by doc_id so the result is independent of arrival order.
class IndexBuilder {
 public:
  void add(Document doc);
  CorpusIndex finish();

 private:
  std::mutex mu_;
  std::vector<Document> docs_;
};

// Top-k document terms by tf * ln(N/df); ties broken by term ascending.
// k <= 0 is rejected; fewer than k distinct terms yields all of them.
std::vector<TermWeight> tfidf_summary(const Document& doc, const CorpusIndex& index, int k);

// JSONL corpus: one object per line with string fields "id" and "text".
// Text is preprocessed with the given stopword list.
std::vector<Document> load_corpus_jsonl(const std::string& path, const StopwordSet& stopwords);

}  // namespace nprf
