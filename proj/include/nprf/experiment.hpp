#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nprf/training.hpp"

namespace nprf {

// Everything a pipeline command needs, read from a flat `key = value` file.
// Unknown keys are rejected; paths are checked at validate() time.
struct ExperimentConfig {
  // Paths. Either corpus (JSONL, indexed on the fly) or index (prebuilt
  // NPRFIDX1 file) must be set for pipeline commands.
  std::string corpus;
  std::string index;
  std::string embeddings;
  std::string qrels;
  std::string queries;
  std::string stopwords = "default";  // "default", "none" or a file path
  std::string output_dir;

  TrainSettings train;
  std::string oov_policy = "skip";  // "skip" or "zero"
  bool add_target_rel_q = false;

  static ExperimentConfig load_file(const std::string& path);
  // Applies one key=value assignment (also used by CLI --set overrides).
  void set(const std::string& key, const std::string& value);
  // Checks ranges and that every referenced input file exists.
  void validate(bool need_output_dir) const;

  OovPolicy oov() const;
  StopwordSet load_stopword_set() const;
  // Canonical text rendering, loadable by load_file. The hash covers
  // everything except output_dir (the output location is not part of the
  // experiment's identity).
  std::string to_text(bool with_output_dir = true) const;
  uint64_t config_hash() const;
};

// Input data loaded per the config (index built from the corpus if no
// prebuilt index path is given).
struct LoadedExperiment {
  StopwordSet stopwords;
  CorpusIndex index;
  EmbeddingTable table;
  std::vector<Query> queries;
  Qrels qrels;
};

LoadedExperiment load_experiment(const ExperimentConfig& config);

// Output-directory manifest: config hash, seed and a content hash per file.
class Manifest {
 public:
  explicit Manifest(const ExperimentConfig& config);
  // Records a file that was just written under its manifest name.
  void record(const std::string& name, const std::string& path);
  void write(const std::string& dir) const;

 private:
  uint64_t config_hash_;
  uint64_t seed_;
  std::vector<std::pair<std::string, uint64_t>> files_;
};

}  // namespace nprf
