#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nprf/corpus.hpp"

namespace nprf {

// What to do with tokens that have no usable embedding. skip_term drops the
// token from interaction matrices; zero_vector keeps its slot with similarity
// 0 against everything.
enum class OovPolicy { skip_term, zero_vector };

class EmbeddingTable {
 public:
  explicit EmbeddingTable(int dim, OovPolicy policy = OovPolicy::skip_term);

  // word2vec text format: header "<count> <dim>", then one token per line
  // followed by <dim> reals. Vectors are L2-normalized on load; zero-norm
  // rows are dropped and their tokens handled as OOV.
  static EmbeddingTable load(const std::string& path, OovPolicy policy = OovPolicy::skip_term);
  void save(const std::string& path) const;

  // Adds a vector (normalizing it); zero-norm input leaves the token OOV.
  void add(const std::string& token, std::span<const double> vec);

  int dim() const { return dim_; }
  OovPolicy policy() const { return policy_; }
  size_t size() const { return tokens_.size(); }

  std::optional<uint32_t> row_of(std::string_view token) const;
  std::span<const double> row(uint32_t r) const;
  const std::string& token(uint32_t r) const { return tokens_.at(r); }

  // Maps each term to its row, -1 when OOV. Identical terms share a row, so
  // id equality doubles as token identity in similarity code.
  std::vector<int32_t> resolve(std::span<const std::string> terms) const;

  // Similarity of two resolved ids: exactly 1 for equal ids, 0 when either
  // is -1, otherwise the dot product clamped to [-1, 1].
  double sim(int32_t a, int32_t b) const;

  // Token-level cosine. OOV operands yield no value under skip_term and 0
  // under zero_vector. Identical in-vocabulary tokens yield exactly 1.
  std::optional<double> cosine(std::string_view a, std::string_view b) const;

 private:
  int dim_;
  OovPolicy policy_;
  std::vector<std::string> tokens_;
  std::vector<double> data_;  // size() * dim_, L2-normalized rows
  std::unordered_map<std::string, uint32_t> rows_;
};

// Cosine grid between a document summary and a target document.
// Rows follow summary order, columns target order; under skip_term OOV rows
// and columns are removed, under zero_vector they stay as zeros.
struct InteractionMatrix {
  std::vector<std::string> row_terms;
  std::vector<std::string> col_terms;
  std::vector<double> values;  // rows() x cols(), row-major

  size_t rows() const { return row_terms.size(); }
  size_t cols() const { return col_terms.size(); }
  bool empty() const { return row_terms.empty() || col_terms.empty(); }
  double at(size_t r, size_t c) const { return values[r * col_terms.size() + c]; }
};

InteractionMatrix interaction_matrix(const std::vector<TermWeight>& summary,
                                     std::span<const std::string> target_terms,
                                     const EmbeddingTable& table);

}  // namespace nprf
