#include "nprf/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "nprf/common.hpp"

namespace nprf {

namespace {

constexpr std::string_view kIndexMagic = "NPRFIDX1";

bool has_whitespace(std::string_view s) {
  return s.find_first_of(" \t\r\n") != std::string_view::npos;
}

}  // namespace

CorpusIndex CorpusIndex::build(std::vector<Document> docs) {
  CorpusIndex idx;
  std::sort(docs.begin(), docs.end(),
            [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
  for (size_t i = 0; i + 1 < docs.size(); i++) {
    if (docs[i].doc_id == docs[i + 1].doc_id)
      throw std::runtime_error("duplicate doc_id: " + docs[i].doc_id);
  }
  for (const auto& d : docs) {
    if (d.doc_id.empty()) throw std::runtime_error("empty doc_id");
    if (has_whitespace(d.doc_id))
      throw std::runtime_error("doc_id contains whitespace: " + d.doc_id);
  }
  idx.docs_ = std::move(docs);
  idx.ord_.reserve(idx.docs_.size());
  std::unordered_map<std::string, uint32_t> counts;
  for (uint32_t ord = 0; ord < idx.docs_.size(); ord++) {
    const Document& d = idx.docs_[ord];
    idx.ord_.emplace(d.doc_id, ord);
    idx.total_len_ += d.terms.size();
    counts.clear();
    for (const auto& t : d.terms) counts[t]++;
    for (const auto& [term, tf] : counts)
      idx.postings_[term].push_back(Posting{ord, tf});
  }
  return idx;
}

double CorpusIndex::avg_doc_len() const {
  if (docs_.empty()) return 0.0;
  return static_cast<double>(total_len_) / static_cast<double>(docs_.size());
}

std::optional<uint32_t> CorpusIndex::doc_ord(std::string_view doc_id) const {
  auto it = ord_.find(std::string(doc_id));
  if (it == ord_.end()) return std::nullopt;
  return it->second;
}

const Document* CorpusIndex::find_doc(std::string_view doc_id) const {
  auto ord = doc_ord(doc_id);
  return ord ? &docs_[*ord] : nullptr;
}

size_t CorpusIndex::df(std::string_view term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? 0 : it->second.size();
}

double CorpusIndex::idf(std::string_view term) const {
  size_t d = df(term);
  if (d == 0) return 0.0;
  return std::log(static_cast<double>(doc_count()) / static_cast<double>(d));
}

const std::vector<Posting>* CorpusIndex::postings(std::string_view term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? nullptr : &it->second;
}

uint32_t CorpusIndex::tf(std::string_view term, uint32_t ord) const {
  const auto* plist = postings(term);
  if (!plist) return 0;
  auto it = std::lower_bound(plist->begin(), plist->end(), ord,
                             [](const Posting& p, uint32_t o) { return p.doc < o; });
  if (it == plist->end() || it->doc != ord) return 0;
  return it->tf;
}

void CorpusIndex::save(std::ostream& out) const {
  out << kIndexMagic << "\n";
  out << "docs " << docs_.size() << "\n";
  for (const auto& d : docs_) {
    out << d.doc_id << " " << d.terms.size();
    for (const auto& t : d.terms) out << " " << t;
    out << "\n";
  }
  out << "terms " << postings_.size() << "\n";
  for (const auto& [term, plist] : postings_) {
    out << term << " " << plist.size();
    for (const auto& p : plist) out << " " << p.doc << ":" << p.tf;
    out << "\n";
  }
  out << "end\n";
  if (!out) throw std::runtime_error("index write failed");
}

CorpusIndex CorpusIndex::load(std::istream& in) {
  std::string word;
  if (!(in >> word) || word != kIndexMagic)
    throw std::runtime_error("not an index file (bad magic)");
  uint64_t n = 0;
  if (!(in >> word >> n) || word != "docs")
    throw std::runtime_error("index file: expected docs section");
  std::vector<Document> docs;
  docs.reserve(n);
  for (uint64_t i = 0; i < n; i++) {
    Document d;
    uint64_t len = 0;
    if (!(in >> d.doc_id >> len))
      throw std::runtime_error("index file: truncated document record");
    d.terms.reserve(len);
    for (uint64_t t = 0; t < len; t++) {
      std::string term;
      if (!(in >> term)) throw std::runtime_error("index file: truncated term list");
      d.terms.push_back(std::move(term));
    }
    docs.push_back(std::move(d));
  }
  uint64_t v = 0;
  if (!(in >> word >> v) || word != "terms")
    throw std::runtime_error("index file: expected terms section");

  CorpusIndex idx = build(std::move(docs));
  // Verify the stored postings against what the forward index implies; a
  // mismatch means the file was edited or truncated.
  if (v != idx.postings_.size())
    throw std::runtime_error("index file: postings count mismatch");
  for (uint64_t i = 0; i < v; i++) {
    std::string term;
    uint64_t df = 0;
    if (!(in >> term >> df))
      throw std::runtime_error("index file: truncated postings record");
    const auto* plist = idx.postings(term);
    if (!plist || plist->size() != df)
      throw std::runtime_error("index file: postings disagree with documents for term '" +
                               term + "'");
    for (uint64_t p = 0; p < df; p++) {
      std::string pair;
      if (!(in >> pair)) throw std::runtime_error("index file: truncated posting");
      size_t colon = pair.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error("index file: bad posting '" + pair + "'");
      auto ord = static_cast<uint32_t>(parse_int(pair.substr(0, colon), "posting doc"));
      auto tf = static_cast<uint32_t>(parse_int(pair.substr(colon + 1), "posting tf"));
      if ((*plist)[p].doc != ord || (*plist)[p].tf != tf)
        throw std::runtime_error("index file: postings disagree with documents for term '" +
                                 term + "'");
    }
  }
  if (!(in >> word) || word != "end")
    throw std::runtime_error("index file: missing end marker");
  return idx;
}

void CorpusIndex::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write index file: " + path);
  save(out);
}

CorpusIndex CorpusIndex::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open index file: " + path);
  return load(in);
}

void IndexBuilder::add(Document doc) {
  std::lock_guard<std::mutex> lock(mu_);
  docs_.push_back(std::move(doc));
}

CorpusIndex IndexBuilder::finish() {
  std::lock_guard<std::mutex> lock(mu_);
  return CorpusIndex::build(std::move(docs_));
}

std::vector<TermWeight> tfidf_summary(const Document& doc, const CorpusIndex& index, int k) {
  if (k <= 0) throw std::invalid_argument("tfidf_summary: k must be positive");
  std::map<std::string, uint32_t> counts;
  for (const auto& t : doc.terms) counts[t]++;
  std::vector<TermWeight> out;
  out.reserve(counts.size());
  for (const auto& [term, tf] : counts)
    out.push_back(TermWeight{term, static_cast<double>(tf) * index.idf(term)});
  std::sort(out.begin(), out.end(), [](const TermWeight& a, const TermWeight& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.term < b.term;
  });
  if (out.size() > static_cast<size_t>(k)) out.resize(static_cast<size_t>(k));
  return out;
}

std::vector<Document> load_corpus_jsonl(const std::string& path, const StopwordSet& stopwords) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<Document> docs;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("text") ||
        !obj["id"].is_string() || !obj["text"].is_string()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected object with string fields id and text");
    }
    Document d;
    d.doc_id = obj["id"].get<std::string>();
    d.terms = preprocess(obj["text"].get<std::string>(), stopwords);
    docs.push_back(std::move(d));
  }
  return docs;
}

}  // namespace nprf
