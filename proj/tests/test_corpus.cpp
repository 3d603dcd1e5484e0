#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "nprf/common.hpp"
#include "nprf/corpus.hpp"

using namespace nprf;

namespace {

Document make_doc(std::string id, std::vector<std::string> terms) {
  Document d;
  d.doc_id = std::move(id);
  d.terms = std::move(terms);
  return d;
}

// d1..d3 exercise df in {1, 2, 3} and a zero-idf term (cherry in every doc).
std::vector<Document> toy_docs() {
  return {
      make_doc("d1", {"apple", "apple", "banana", "cherry"}),
      make_doc("d2", {"banana", "cherry", "date"}),
      make_doc("d3", {"cherry", "date", "egg", "egg"}),
  };
}

std::filesystem::path temp_file(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "nprf_corpus_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("build sorts documents by doc_id") {
  auto idx = CorpusIndex::build({make_doc("z", {"a"}), make_doc("m", {"b"}), make_doc("a", {"c"})});
  REQUIRE(idx.doc_count() == 3);
  CHECK(idx.doc(0).doc_id == "a");
  CHECK(idx.doc(1).doc_id == "m");
  CHECK(idx.doc(2).doc_id == "z");
  CHECK(idx.doc_ord("m") == 1u);
  CHECK(!idx.doc_ord("missing").has_value());
  CHECK(idx.find_doc("z")->doc_id == "z");
  CHECK(idx.find_doc("missing") == nullptr);
}

TEST_CASE("build rejects duplicate, empty and whitespace doc_ids") {
  CHECK_THROWS_WITH(CorpusIndex::build({make_doc("d", {"a"}), make_doc("d", {"b"})}),
                    doctest::Contains("duplicate doc_id"));
  CHECK_THROWS_WITH(CorpusIndex::build({make_doc("", {"a"})}), doctest::Contains("empty doc_id"));
  CHECK_THROWS(CorpusIndex::build({make_doc("bad id", {"a"})}));
}

TEST_CASE("df, tf, idf and postings agree with the toy corpus") {
  auto idx = CorpusIndex::build(toy_docs());
  CHECK(idx.doc_count() == 3);
  CHECK(idx.vocab_size() == 5);
  CHECK(idx.avg_doc_len() == doctest::Approx(3.6666666666666665).epsilon(1e-15));

  CHECK(idx.df("apple") == 1);
  CHECK(idx.df("banana") == 2);
  CHECK(idx.df("cherry") == 3);
  CHECK(idx.df("missing") == 0);

  CHECK(idx.idf("apple") == doctest::Approx(1.0986122886681098).epsilon(1e-15));
  CHECK(idx.idf("cherry") == 0.0);
  CHECK(idx.idf("missing") == 0.0);

  auto ord = [&](const char* id) { return *idx.doc_ord(id); };
  CHECK(idx.tf("apple", ord("d1")) == 2);
  CHECK(idx.tf("apple", ord("d2")) == 0);
  CHECK(idx.tf("egg", ord("d3")) == 2);

  const auto* plist = idx.postings("banana");
  REQUIRE(plist != nullptr);
  REQUIRE(plist->size() == 2);
  CHECK((*plist)[0].doc == ord("d1"));
  CHECK((*plist)[0].tf == 1);
  CHECK((*plist)[1].doc == ord("d2"));
  CHECK((*plist)[1].tf == 1);
  CHECK(idx.postings("missing") == nullptr);
}

TEST_CASE("postings are sorted by ordinal for every term") {
  auto idx = CorpusIndex::build(toy_docs());
  for (const auto& [term, plist] : idx.postings_map()) {
    CAPTURE(term);
    for (size_t i = 1; i < plist.size(); i++) CHECK(plist[i - 1].doc < plist[i].doc);
  }
}

TEST_CASE("IndexBuilder output is independent of arrival order") {
  auto docs = toy_docs();
  IndexBuilder fwd;
  for (const auto& d : docs) fwd.add(d);
  IndexBuilder rev;
  for (auto it = docs.rbegin(); it != docs.rend(); ++it) rev.add(*it);

  std::ostringstream a, b;
  fwd.finish().save(a);
  rev.finish().save(b);
  CHECK(a.str() == b.str());
}

TEST_CASE("tfidf_summary ranks by tf times ln(N/df)") {
  auto idx = CorpusIndex::build(toy_docs());
  auto sum = tfidf_summary(*idx.find_doc("d1"), idx, 2);
  REQUIRE(sum.size() == 2);
  CHECK(sum[0].term == "apple");
  CHECK(sum[0].weight == doctest::Approx(2.1972245773362196).epsilon(1e-15));
  CHECK(sum[1].term == "banana");
  CHECK(sum[1].weight == doctest::Approx(0.40546510810816438).epsilon(1e-15));
}

TEST_CASE("tfidf_summary breaks weight ties by term ascending") {
  auto idx = CorpusIndex::build(toy_docs());
  // banana and date both have tf=1, df=2 in d2.
  auto sum = tfidf_summary(*idx.find_doc("d2"), idx, 3);
  REQUIRE(sum.size() == 3);
  CHECK(sum[0].term == "banana");
  CHECK(sum[1].term == "date");
  CHECK(sum[2].term == "cherry");
  CHECK(sum[2].weight == 0.0);
}

TEST_CASE("tfidf_summary caps at available distinct terms and rejects k <= 0") {
  auto idx = CorpusIndex::build(toy_docs());
  CHECK(tfidf_summary(*idx.find_doc("d2"), idx, 50).size() == 3);
  CHECK_THROWS_AS(tfidf_summary(*idx.find_doc("d1"), idx, 0), std::invalid_argument);
  CHECK_THROWS_AS(tfidf_summary(*idx.find_doc("d1"), idx, -2), std::invalid_argument);
}

TEST_CASE("index save/load round-trips byte-identically") {
  auto idx = CorpusIndex::build(toy_docs());
  std::ostringstream first;
  idx.save(first);
  CHECK(first.str().rfind("NPRFIDX1", 0) == 0);

  std::istringstream in(first.str());
  auto reloaded = CorpusIndex::load(in);
  std::ostringstream second;
  reloaded.save(second);
  CHECK(first.str() == second.str());

  CHECK(reloaded.doc_count() == idx.doc_count());
  CHECK(reloaded.avg_doc_len() == idx.avg_doc_len());
  CHECK(reloaded.df("apple") == 1);
}

TEST_CASE("index load verifies stored postings against documents") {
  auto idx = CorpusIndex::build(toy_docs());
  std::ostringstream out;
  idx.save(out);
  std::string text = out.str();

  // Corrupt one tf inside the postings of "egg" (appears as "2:2": ordinal 2,
  // tf 2; the document section has no colon pairs so this hits postings only).
  auto pos = text.find("egg 1 2:2");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 9, "egg 1 2:9");
  std::istringstream in(text);
  CHECK_THROWS_WITH(CorpusIndex::load(in), doctest::Contains("egg"));
}

TEST_CASE("index load rejects bad magic and truncation") {
  std::istringstream bad("NOTMAGIC docs 0");
  CHECK_THROWS_WITH(CorpusIndex::load(bad), doctest::Contains("bad magic"));

  auto idx = CorpusIndex::build(toy_docs());
  std::ostringstream out;
  idx.save(out);
  std::string text = out.str();
  std::istringstream truncated(text.substr(0, text.size() / 2));
  CHECK_THROWS(CorpusIndex::load(truncated));
}

TEST_CASE("save_file/load_file round-trip on disk") {
  auto path = temp_file("toy.idx");
  auto idx = CorpusIndex::build(toy_docs());
  idx.save_file(path.string());
  auto reloaded = CorpusIndex::load_file(path.string());
  CHECK(reloaded.vocab_size() == idx.vocab_size());
  CHECK_THROWS_WITH(CorpusIndex::load_file("/nonexistent/x.idx"), doctest::Contains("cannot open"));
  std::filesystem::remove(path);
}

TEST_CASE("load_corpus_jsonl preprocesses text and reports line numbers") {
  auto path = temp_file("corpus.jsonl");
  {
    std::ofstream out(path);
    out << R"({"id": "d1", "text": "The Cats are running"})" << "\n";
    out << "\n";  // blank lines are allowed
    out << R"({"id": "d2", "text": "dogs!"})" << "\n";
  }
  StopwordSet sw{"the", "are"};
  auto docs = load_corpus_jsonl(path.string(), sw);
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].doc_id == "d1");
  CHECK(docs[0].terms == std::vector<std::string>{"cat", "run"});
  CHECK(docs[1].terms == std::vector<std::string>{"dog"});

  {
    std::ofstream out(path);
    out << R"({"id": "d1", "text": "ok"})" << "\n";
    out << "not json\n";
  }
  CHECK_THROWS_WITH(load_corpus_jsonl(path.string(), sw), doctest::Contains(":2:"));

  {
    std::ofstream out(path);
    out << R"({"id": 7, "text": "ok"})" << "\n";
  }
  CHECK_THROWS_WITH(load_corpus_jsonl(path.string(), sw),
                    doctest::Contains("string fields id and text"));
  std::filesystem::remove(path);
}
