#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "nprf/common.hpp"
#include "nprf/first_stage.hpp"

using namespace nprf;

namespace {

Document make_doc(std::string id, std::vector<std::string> terms) {
  Document d;
  d.doc_id = std::move(id);
  d.terms = std::move(terms);
  return d;
}

Query make_query(std::string id, std::vector<std::string> terms) {
  Query q;
  q.query_id = std::move(id);
  q.terms = std::move(terms);
  return q;
}

CorpusIndex bm25_toy() {
  return CorpusIndex::build({
      make_doc("d1", {"a", "b", "a"}),
      make_doc("d2", {"b", "c"}),
      make_doc("d3", {"a", "c", "c", "d"}),
  });
}

// Deterministic little corpus with overlapping vocabulary for the
// search-vs-exhaustive comparison.
std::vector<Document> random_corpus(Rng& rng, size_t n_docs) {
  const std::vector<std::string> vocab{"red", "green", "blue", "cyan", "teal",
                                       "plum", "gold", "gray", "jade", "rust"};
  std::vector<Document> docs;
  for (size_t i = 0; i < n_docs; i++) {
    Document d;
    d.doc_id = "doc" + std::to_string(100 + i);
    size_t len = 3 + rng.below(8);
    for (size_t t = 0; t < len; t++) d.terms.push_back(vocab[rng.below(vocab.size())]);
    docs.push_back(std::move(d));
  }
  return docs;
}

std::filesystem::path temp_file(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "nprf_fs_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("bm25_idf uses the plus-half formulation") {
  CHECK(bm25_idf(3, 2) == doctest::Approx(0.47000362924573563).epsilon(1e-14));
  CHECK(bm25_idf(3, 0) == doctest::Approx(2.0794415416798357).epsilon(1e-14));
  CHECK(bm25_idf(10, 10) == doctest::Approx(0.046520015634892907).epsilon(1e-14));
  // Never negative, unlike the unsmoothed log((N-df+.5)/(df+.5)).
  CHECK(bm25_idf(10, 10) > 0.0);
}

TEST_CASE("bm25_score matches hand-computed toy values") {
  auto idx = bm25_toy();
  Bm25Params p;  // k1=1.2 b=0.75
  auto q = make_query("q", {"a"});
  CHECK(bm25_score(q, "d1", idx, p) == doctest::Approx(0.64625499021288646).epsilon(1e-14));
  CHECK(bm25_score(q, "d3", idx, p) == doctest::Approx(0.41360319373624738).epsilon(1e-14));
  CHECK(bm25_score(q, "d2", idx, p) == 0.0);
}

TEST_CASE("bm25_score honors per-term query weights") {
  auto idx = bm25_toy();
  Bm25Params p;
  auto q = make_query("q", {"a"});
  Query half = q;
  half.weights = {0.5};
  CHECK(bm25_score(half, "d1", idx, p) ==
        doctest::Approx(0.5 * bm25_score(q, "d1", idx, p)).epsilon(1e-15));
}

TEST_CASE("repeated query terms accumulate") {
  auto idx = bm25_toy();
  Bm25Params p;
  auto once = make_query("q", {"a"});
  auto twice = make_query("q", {"a", "a"});
  CHECK(bm25_score(twice, "d1", idx, p) ==
        doctest::Approx(2.0 * bm25_score(once, "d1", idx, p)).epsilon(1e-15));
}

TEST_CASE("bm25_search returns scored candidates in order") {
  auto idx = bm25_toy();
  Bm25Params p;
  auto run = bm25_search(make_query("q7", {"a"}), idx, p, 1000);
  CHECK(run.query_id == "q7");
  REQUIRE(run.entries.size() == 2);  // d2 has no query term
  CHECK(run.entries[0].doc_id == "d1");
  CHECK(run.entries[1].doc_id == "d3");
  CHECK(run.entries[0].rank == 1);
  CHECK(run.entries[1].rank == 2);
  CHECK(run.entries[0].score > run.entries[1].score);
}

TEST_CASE("bm25_search truncates to depth and rejects depth < 1") {
  auto idx = bm25_toy();
  Bm25Params p;
  auto run = bm25_search(make_query("q", {"a"}), idx, p, 1);
  CHECK(run.entries.size() == 1);
  CHECK(run.entries[0].doc_id == "d1");
  CHECK_THROWS(bm25_search(make_query("q", {"a"}), idx, p, 0));
}

TEST_CASE("bm25_search agrees with exhaustive scoring, ties by doc_id") {
  Rng rng(2024);
  auto idx = CorpusIndex::build(random_corpus(rng, 40));
  Bm25Params p;
  for (int trial = 0; trial < 10; trial++) {
    std::vector<std::string> terms;
    const std::vector<std::string> vocab{"red", "green", "blue", "cyan", "absent"};
    size_t len = 1 + rng.below(3);
    for (size_t t = 0; t < len; t++) terms.push_back(vocab[rng.below(vocab.size())]);
    auto q = make_query("t" + std::to_string(trial), terms);

    auto run = bm25_search(q, idx, p, 1000);

    struct Scored {
      std::string doc_id;
      double score;
    };
    std::vector<Scored> all;
    for (uint32_t ord = 0; ord < idx.doc_count(); ord++) {
      double s = bm25_score(q, ord, idx, p);
      if (s > 0.0) all.push_back({idx.doc(ord).doc_id, s});
    }
    std::stable_sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.doc_id < b.doc_id;
    });

    REQUIRE(run.entries.size() == all.size());
    for (size_t i = 0; i < all.size(); i++) {
      CAPTURE(trial);
      CAPTURE(i);
      CHECK(run.entries[i].doc_id == all[i].doc_id);
      CHECK(run.entries[i].score == all[i].score);
      CHECK(run.entries[i].rank == static_cast<int>(i) + 1);
    }
  }
}

TEST_CASE("rocchio_expand pools tf-idf over feedback docs") {
  auto idx = CorpusIndex::build({
      make_doc("r1", {"x", "x", "y"}),
      make_doc("r2", {"x", "z"}),
      make_doc("o1", {"w", "w", "w"}),
      make_doc("o2", {"y", "z", "w"}),
  });
  RunList run;
  run.query_id = "q";
  run.entries = {{"r1", 3.0, 1}, {"r2", 2.0, 2}, {"o1", 1.0, 3}};
  auto q = make_query("q", {"x"});

  auto expanded = rocchio_expand(q, run, idx, 2, 2, 0.4);
  // y and z pool to the same weight (tf 1, idf ln 2); tie broken by term.
  REQUIRE(expanded.terms.size() == 3);
  CHECK(expanded.terms[0] == "x");
  CHECK(expanded.terms[1] == "y");
  CHECK(expanded.terms[2] == "z");
  REQUIRE(expanded.weights.size() == 3);
  CHECK(expanded.weights[0] == 1.0);
  CHECK(expanded.weights[1] == 0.4);
  CHECK(expanded.weights[2] == 0.4);
  CHECK(expanded.query_id == "q");
}

TEST_CASE("rocchio_expand never re-adds query terms") {
  auto idx = CorpusIndex::build({make_doc("r1", {"x", "x", "y"}), make_doc("r2", {"x", "z"})});
  RunList run;
  run.query_id = "q";
  run.entries = {{"r1", 3.0, 1}, {"r2", 2.0, 2}};
  auto expanded = rocchio_expand(make_query("q", {"x"}), run, idx, 2, 10, 0.4);
  CHECK(std::count(expanded.terms.begin(), expanded.terms.end(), "x") == 1);
}

TEST_CASE("rocchio_expand validates its inputs") {
  auto idx = bm25_toy();
  auto q = make_query("q", {"a"});
  RunList empty_run;
  empty_run.query_id = "q";
  CHECK_THROWS_WITH(rocchio_expand(q, empty_run, idx, 1, 1, 0.4), doctest::Contains("empty run"));

  RunList run;
  run.query_id = "q";
  run.entries = {{"d1", 1.0, 1}};
  CHECK_THROWS_WITH(rocchio_expand(q, run, idx, 2, 1, 0.4), doctest::Contains("exceeds run"));
  CHECK_THROWS(rocchio_expand(q, run, idx, 0, 1, 0.4));
  CHECK_THROWS(rocchio_expand(q, run, idx, 1, 0, 0.4));

  RunList ghost;
  ghost.query_id = "q";
  ghost.entries = {{"nope", 1.0, 1}};
  CHECK_THROWS_WITH(rocchio_expand(q, ghost, idx, 1, 1, 0.4), doctest::Contains("nope"));
}

TEST_CASE("TREC run files round-trip") {
  std::vector<RunList> runs(2);
  runs[0].query_id = "q1";
  runs[0].entries = {{"docB", 2.5, 1}, {"docA", 1.25, 2}};
  runs[1].query_id = "q2";
  runs[1].entries = {{"docC", 0.123456789, 1}};

  std::ostringstream out;
  write_trec_run(out, runs, "mytag");
  CHECK(out.str() ==
        "q1 Q0 docB 1 2.500000 mytag\n"
        "q1 Q0 docA 2 1.250000 mytag\n"
        "q2 Q0 docC 1 0.123457 mytag\n");

  std::istringstream in(out.str());
  auto back = read_trec_run(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].query_id == "q1");
  REQUIRE(back[0].entries.size() == 2);
  CHECK(back[0].entries[0].doc_id == "docB");
  CHECK(back[0].entries[1].doc_id == "docA");
  CHECK(back[0].entries[0].score == 2.5);
  CHECK(back[1].entries[0].rank == 1);
}

TEST_CASE("read_trec_run validates format and rank sequence") {
  std::istringstream bad("q1 XX doc 1 1.0 tag\n");
  CHECK_THROWS_WITH(read_trec_run(bad), doctest::Contains("line 1"));

  std::istringstream gap("q1 Q0 a 1 2.0 tag\nq1 Q0 b 3 1.0 tag\n");
  CHECK_THROWS_WITH(read_trec_run(gap), doctest::Contains("not consecutive"));

  // Entries may arrive rank-shuffled as long as ranks form 1..n.
  std::istringstream shuffled("q1 Q0 b 2 1.0 tag\nq1 Q0 a 1 2.0 tag\n");
  auto runs = read_trec_run(shuffled);
  REQUIRE(runs.size() == 1);
  CHECK(runs[0].entries[0].doc_id == "a");
  CHECK(runs[0].entries[1].doc_id == "b");

  CHECK_THROWS_WITH(read_trec_run_file("/nonexistent/run.txt"), doctest::Contains("cannot open"));
}

TEST_CASE("load_queries_tsv preprocesses text like documents") {
  auto path = temp_file("queries.tsv");
  {
    std::ofstream f(path);
    f << "q1\tThe International Organized Crime\n";
    f << "\n";
    f << "q2\tairbus subsidies\n";
  }
  StopwordSet sw{"the"};
  auto queries = load_queries_tsv(path.string(), sw);
  REQUIRE(queries.size() == 2);
  CHECK(queries[0].query_id == "q1");
  CHECK(queries[0].terms == std::vector<std::string>{"intern", "organ", "crime"});
  CHECK(queries[0].kind == Query::Kind::title);
  CHECK(queries[1].terms == std::vector<std::string>{"airbu", "subsidi"});
  std::filesystem::remove(path);
}

TEST_CASE("load_queries_tsv rejects malformed lines") {
  auto path = temp_file("badq.tsv");
  {
    std::ofstream f(path);
    f << "no tab here\n";
  }
  CHECK_THROWS_WITH(load_queries_tsv(path.string(), {}), doctest::Contains(":1:"));
  {
    std::ofstream f(path);
    f << "q1\ta\nq1\tb\n";
  }
  CHECK_THROWS_WITH(load_queries_tsv(path.string(), {}), doctest::Contains("duplicate"));
  std::filesystem::remove(path);
}
