#include "nprf/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nprf {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) b++;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) e--;
  return std::string(s.substr(b, e - b));
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::runtime_error("config key " + key + ": expected a boolean, got '" + value + "'");
}

void require_file(const std::string& key, const std::string& path) {
  if (path.empty()) throw std::runtime_error("config key " + key + " is required");
  if (!std::filesystem::exists(path))
    throw std::runtime_error("config key " + key + ": file not found: " + path);
}

}  // namespace

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ExperimentConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    try {
      config.set(key, value);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw std::runtime_error("empty config key");
  if (key == "corpus") {
    corpus = value;
  } else if (key == "index") {
    index = value;
  } else if (key == "embeddings") {
    embeddings = value;
  } else if (key == "qrels") {
    qrels = value;
  } else if (key == "queries") {
    queries = value;
  } else if (key == "stopwords") {
    stopwords = value;
  } else if (key == "output_dir") {
    output_dir = value;
  } else if (key == "model") {
    train.scorer = parse_scorer(value);
  } else if (key == "variant") {
    train.variant = parse_variant(value);
  } else if (key == "m") {
    train.m = static_cast<int>(parse_int(value, key));
  } else if (key == "k") {
    train.k = static_cast<int>(parse_int(value, key));
  } else if (key == "depth") {
    train.depth = static_cast<int>(parse_int(value, key));
  } else if (key == "lr") {
    train.lr = parse_double(value, key);
  } else if (key == "batch_size") {
    train.batch_size = static_cast<int>(parse_int(value, key));
  } else if (key == "epochs") {
    train.epochs = static_cast<int>(parse_int(value, key));
  } else if (key == "per_query") {
    train.per_query = static_cast<int>(parse_int(value, key));
  } else if (key == "seed") {
    int64_t v = parse_int(value, key);
    if (v < 0) throw std::runtime_error("config key seed: must be non-negative");
    train.seed = static_cast<uint64_t>(v);
  } else if (key == "bm25.k1") {
    train.bm25.k1 = parse_double(value, key);
  } else if (key == "bm25.b") {
    train.bm25.b = parse_double(value, key);
  } else if (key == "sample_with_replacement") {
    train.sample_with_replacement = parse_bool(key, value);
  } else if (key == "target_len_cap") {
    train.target_len_cap = static_cast<int>(parse_int(value, key));
  } else if (key == "threads") {
    train.threads = static_cast<int>(parse_int(value, key));
  } else if (key == "oov_policy") {
    if (value != "skip" && value != "zero")
      throw std::runtime_error("config key oov_policy: expected skip or zero");
    oov_policy = value;
  } else if (key == "add_target_rel_q") {
    add_target_rel_q = parse_bool(key, value);
  } else {
    throw std::runtime_error("unknown config key: " + key);
  }
}

void ExperimentConfig::validate(bool need_output_dir) const {
  if (corpus.empty() && index.empty())
    throw std::runtime_error("config: one of corpus or index is required");
  if (!corpus.empty()) require_file("corpus", corpus);
  if (!index.empty()) require_file("index", index);
  require_file("embeddings", embeddings);
  require_file("queries", queries);
  require_file("qrels", qrels);
  if (stopwords != "default" && stopwords != "none") require_file("stopwords", stopwords);
  if (need_output_dir && output_dir.empty())
    throw std::runtime_error("config key output_dir is required");
  if (train.m < 1) throw std::runtime_error("config key m: must be >= 1");
  if (train.k < 1) throw std::runtime_error("config key k: must be >= 1");
  if (train.depth < 1) throw std::runtime_error("config key depth: must be >= 1");
  if (!(train.lr > 0)) throw std::runtime_error("config key lr: must be > 0");
  if (train.batch_size < 1) throw std::runtime_error("config key batch_size: must be >= 1");
  if (train.epochs < 1) throw std::runtime_error("config key epochs: must be >= 1");
  if (train.per_query < 1) throw std::runtime_error("config key per_query: must be >= 1");
  if (train.target_len_cap < 0) throw std::runtime_error("config key target_len_cap: must be >= 0");
  if (train.threads < 1) throw std::runtime_error("config key threads: must be >= 1");
  if (!(train.bm25.k1 >= 0)) throw std::runtime_error("config key bm25.k1: must be >= 0");
  if (!(train.bm25.b >= 0 && train.bm25.b <= 1))
    throw std::runtime_error("config key bm25.b: must be in [0, 1]");
}

OovPolicy ExperimentConfig::oov() const {
  return oov_policy == "zero" ? OovPolicy::zero_vector : OovPolicy::skip_term;
}

StopwordSet ExperimentConfig::load_stopword_set() const {
  if (stopwords == "none") return {};
  if (stopwords == "default") return default_stopwords();
  return load_stopwords(stopwords);
}

std::string ExperimentConfig::to_text(bool with_output_dir) const {
  std::ostringstream out;
  out << "corpus = " << corpus << "\n";
  out << "index = " << index << "\n";
  out << "embeddings = " << embeddings << "\n";
  out << "qrels = " << qrels << "\n";
  out << "queries = " << queries << "\n";
  out << "stopwords = " << stopwords << "\n";
  if (with_output_dir) out << "output_dir = " << output_dir << "\n";
  out << "model = " << to_string(train.scorer) << "\n";
  out << "variant = " << to_string(train.variant) << "\n";
  out << "m = " << train.m << "\n";
  out << "k = " << train.k << "\n";
  out << "depth = " << train.depth << "\n";
  out << "lr = " << format_double(train.lr) << "\n";
  out << "batch_size = " << train.batch_size << "\n";
  out << "epochs = " << train.epochs << "\n";
  out << "per_query = " << train.per_query << "\n";
  out << "seed = " << train.seed << "\n";
  out << "bm25.k1 = " << format_double(train.bm25.k1) << "\n";
  out << "bm25.b = " << format_double(train.bm25.b) << "\n";
  out << "sample_with_replacement = " << (train.sample_with_replacement ? "true" : "false") << "\n";
  out << "target_len_cap = " << train.target_len_cap << "\n";
  out << "oov_policy = " << oov_policy << "\n";
  out << "add_target_rel_q = " << (add_target_rel_q ? "true" : "false") << "\n";
  return out.str();
}

// The hash identifies the experiment; where its outputs land is not part
// of that identity, so output_dir is left out.
uint64_t ExperimentConfig::config_hash() const { return fnv1a(to_text(false)); }

LoadedExperiment load_experiment(const ExperimentConfig& config) {
  StopwordSet stopwords = config.load_stopword_set();
  CorpusIndex index = config.index.empty()
                          ? CorpusIndex::build(load_corpus_jsonl(config.corpus, stopwords))
                          : CorpusIndex::load_file(config.index);
  EmbeddingTable table = EmbeddingTable::load(config.embeddings, config.oov());
  std::vector<Query> queries = load_queries_tsv(config.queries, stopwords);
  Qrels qrels = Qrels::load_file(config.qrels);
  return LoadedExperiment{std::move(stopwords), std::move(index), std::move(table),
                          std::move(queries), std::move(qrels)};
}

Manifest::Manifest(const ExperimentConfig& config)
    : config_hash_(config.config_hash()), seed_(config.train.seed) {}

void Manifest::record(const std::string& name, const std::string& path) {
  files_.emplace_back(name, fnv1a(read_text_file(path)));
}

void Manifest::write(const std::string& dir) const {
  std::ostringstream out;
  out << "config " << std::hex << config_hash_ << std::dec << "\n";
  out << "seed " << seed_ << "\n";
  std::vector<std::pair<std::string, uint64_t>> files = files_;
  std::sort(files.begin(), files.end());
  for (const auto& [name, hash] : files) out << "file " << name << " " << std::hex << hash << std::dec << "\n";
  write_text_file((std::filesystem::path(dir) / "manifest.txt").string(), out.str());
}

}  // namespace nprf
