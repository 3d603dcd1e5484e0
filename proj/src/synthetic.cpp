#include "nprf/synthetic.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "nprf/common.hpp"
#include "nprf/embeddings.hpp"

namespace nprf {

namespace {

double gaussian(Rng& rng) {
  // Box-Muller; 1-u keeps the log argument away from zero.
  double u1 = 1.0 - rng.uniform();
  double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::vector<double> gaussian_vec(Rng& rng, int dim) {
  std::vector<double> v(static_cast<size_t>(dim));
  for (auto& x : v) x = gaussian(rng);
  return v;
}

void normalize(std::vector<double>& v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  double inv = 1.0 / std::sqrt(n2);
  for (auto& x : v) x *= inv;
}

std::string zpad(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

SynthFiles write_synthetic_dataset(const std::string& dir, const SynthConfig& cfg) {
  if (cfg.topics < 1 || cfg.docs < cfg.topics || cfg.queries < 1)
    throw std::invalid_argument("synthetic config: need docs >= topics >= 1 and queries >= 1");
  if (cfg.core_terms > cfg.a_terms || cfg.a_terms >= cfg.terms_per_topic)
    throw std::invalid_argument("synthetic config: need core_terms <= a_terms < terms_per_topic");
  if (cfg.query_len > cfg.core_terms)
    throw std::invalid_argument("synthetic config: query_len exceeds core_terms");
  std::filesystem::create_directories(dir);

  Rng rng(cfg.seed);
  Rng embed_rng = rng.derive(1);
  Rng doc_rng = rng.derive(2);
  Rng query_rng = rng.derive(3);

  // Vocabulary. Topic terms are t<topic>a<idx> / t<topic>b<idx>, general
  // terms g<idx>; the trailing digits keep preprocessing from rewriting them.
  std::vector<std::vector<std::string>> topic_terms(static_cast<size_t>(cfg.topics));
  for (int t = 0; t < cfg.topics; t++) {
    auto& terms = topic_terms[static_cast<size_t>(t)];
    terms.reserve(static_cast<size_t>(cfg.terms_per_topic));
    for (int i = 0; i < cfg.terms_per_topic; i++) {
      const char* side = i < cfg.a_terms ? "a" : "b";
      terms.push_back("t" + zpad(t, 2) + side + std::to_string(i));
    }
  }
  std::vector<std::string> general;
  general.reserve(static_cast<size_t>(cfg.general_terms));
  for (int i = 0; i < cfg.general_terms; i++) general.push_back("g" + std::to_string(i));

  // Embeddings: unit centroid per topic, terms scattered around it; general
  // terms are isotropic (near-orthogonal to every topic).
  EmbeddingTable table(cfg.dim);
  std::vector<std::vector<double>> centroids;
  for (int t = 0; t < cfg.topics; t++) {
    auto c = gaussian_vec(embed_rng, cfg.dim);
    normalize(c);
    centroids.push_back(std::move(c));
  }
  double sigma = cfg.noise / std::sqrt(static_cast<double>(cfg.dim));
  for (int t = 0; t < cfg.topics; t++) {
    for (const auto& term : topic_terms[static_cast<size_t>(t)]) {
      auto v = gaussian_vec(embed_rng, cfg.dim);
      for (int d = 0; d < cfg.dim; d++)
        v[static_cast<size_t>(d)] =
            centroids[static_cast<size_t>(t)][static_cast<size_t>(d)] +
            sigma * v[static_cast<size_t>(d)];
      table.add(term, v);
    }
  }
  for (const auto& term : general) table.add(term, gaussian_vec(embed_rng, cfg.dim));

  // Documents. Topic cycles over doc index; A-heavy and B-heavy alternate in
  // blocks of one full topic cycle.
  SynthFiles files;
  files.corpus = dir + "/corpus.jsonl";
  std::ofstream corpus(files.corpus, std::ios::binary | std::ios::trunc);
  if (!corpus) throw std::runtime_error("cannot write " + files.corpus);
  std::vector<int> doc_topic(static_cast<size_t>(cfg.docs));
  int id_width = static_cast<int>(std::to_string(cfg.docs - 1).size());
  for (int d = 0; d < cfg.docs; d++) {
    int topic = d % cfg.topics;
    bool a_heavy = (d / cfg.topics) % 2 == 0;
    doc_topic[static_cast<size_t>(d)] = topic;
    const auto& terms = topic_terms[static_cast<size_t>(topic)];
    int len = cfg.doc_len_min +
              static_cast<int>(doc_rng.below(
                  static_cast<uint64_t>(cfg.doc_len_max - cfg.doc_len_min + 1)));
    // B-heavy styles are decided per document: a no-core slice is invisible
    // to the first stage, and borrowing docs double as lexical distractors
    // for the borrowed topic's queries.
    double core_share, b_share, borrow_share = 0.0;
    const std::vector<std::string>* borrowed = nullptr;
    if (a_heavy) {
      core_share = cfg.a_heavy_a;  // split between core and full A pool below
      b_share = cfg.a_heavy_b;
    } else {
      core_share = doc_rng.uniform() < cfg.no_core_prob ? 0.0 : cfg.b_heavy_core;
      b_share = cfg.b_heavy_b;
      if (doc_rng.uniform() < cfg.borrow_prob) {
        uint64_t pick = doc_rng.below(static_cast<uint64_t>(cfg.topics - 1));
        int other = (topic + 1 + static_cast<int>(pick)) % cfg.topics;
        borrowed = &topic_terms[static_cast<size_t>(other)];
        borrow_share = cfg.borrow_share;
      }
    }
    std::string text;
    for (int i = 0; i < len; i++) {
      double roll = doc_rng.uniform();
      const std::string* tok;
      if (roll < core_share) {
        if (a_heavy && doc_rng.uniform() >= cfg.a_heavy_core) {
          tok = &terms[doc_rng.below(static_cast<uint64_t>(cfg.a_terms))];
        } else {
          tok = &terms[doc_rng.below(static_cast<uint64_t>(cfg.core_terms))];
        }
      } else if (roll < core_share + b_share) {
        tok = &terms[cfg.a_terms +
                     doc_rng.below(static_cast<uint64_t>(cfg.terms_per_topic - cfg.a_terms))];
      } else if (roll < core_share + b_share + borrow_share) {
        tok = &(*borrowed)[doc_rng.below(static_cast<uint64_t>(cfg.core_terms))];
      } else {
        tok = &general[doc_rng.below(general.size())];
      }
      if (!text.empty()) text.push_back(' ');
      text += *tok;
    }
    nlohmann::json row;
    row["id"] = "d" + zpad(d, id_width);
    row["text"] = text;
    corpus << row.dump() << "\n";
  }
  if (!corpus) throw std::runtime_error("write failed: " + files.corpus);
  corpus.close();

  // Queries: distinct core terms of the query's topic.
  files.queries = dir + "/queries.tsv";
  std::ofstream queries(files.queries, std::ios::binary | std::ios::trunc);
  if (!queries) throw std::runtime_error("cannot write " + files.queries);
  int q_width = static_cast<int>(std::to_string(cfg.queries - 1).size());
  std::vector<int> query_topic(static_cast<size_t>(cfg.queries));
  for (int q = 0; q < cfg.queries; q++) {
    int topic = q % cfg.topics;
    query_topic[static_cast<size_t>(q)] = topic;
    std::vector<size_t> core(static_cast<size_t>(cfg.core_terms));
    for (size_t i = 0; i < core.size(); i++) core[i] = i;
    query_rng.shuffle(core);
    std::string text;
    for (int i = 0; i < cfg.query_len; i++) {
      if (!text.empty()) text.push_back(' ');
      text += topic_terms[static_cast<size_t>(topic)][core[static_cast<size_t>(i)]];
    }
    queries << "q" << zpad(q, q_width) << "\t" << text << "\n";
  }
  if (!queries) throw std::runtime_error("write failed: " + files.queries);
  queries.close();

  // Qrels: every (query, doc) pair judged; same topic = relevant.
  files.qrels = dir + "/qrels.txt";
  std::ofstream qrels(files.qrels, std::ios::binary | std::ios::trunc);
  if (!qrels) throw std::runtime_error("cannot write " + files.qrels);
  for (int q = 0; q < cfg.queries; q++) {
    for (int d = 0; d < cfg.docs; d++) {
      int grade =
          doc_topic[static_cast<size_t>(d)] == query_topic[static_cast<size_t>(q)] ? 1 : 0;
      qrels << "q" << zpad(q, q_width) << " 0 d" << zpad(d, id_width) << " " << grade << "\n";
    }
  }
  if (!qrels) throw std::runtime_error("write failed: " + files.qrels);
  qrels.close();

  files.embeddings = dir + "/embeddings.txt";
  table.save(files.embeddings);
  return files;
}

}  // namespace nprf
