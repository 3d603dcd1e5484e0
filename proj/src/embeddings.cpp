#include "nprf/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "nprf/common.hpp"

namespace nprf {

EmbeddingTable::EmbeddingTable(int dim, OovPolicy policy) : dim_(dim), policy_(policy) {
  if (dim <= 0) throw std::invalid_argument("embedding dimension must be positive");
}

EmbeddingTable EmbeddingTable::load(const std::string& path, OovPolicy policy) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("empty embedding file: " + path);
  std::istringstream hs(header);
  uint64_t count = 0;
  int dim = 0;
  if (!(hs >> count >> dim) || dim <= 0)
    throw std::runtime_error("embedding file: bad header '" + header + "'");
  EmbeddingTable table(dim, policy);
  std::string line;
  std::vector<double> vec(static_cast<size_t>(dim));
  for (uint64_t i = 0; i < count; i++) {
    if (!std::getline(in, line))
      throw std::runtime_error("embedding file: expected " + std::to_string(count) +
                               " rows, got " + std::to_string(i));
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token))
      throw std::runtime_error("embedding file: blank row at line " + std::to_string(i + 2));
    for (int d = 0; d < dim; d++) {
      if (!(ls >> vec[static_cast<size_t>(d)]))
        throw std::runtime_error("embedding file: row for '" + token + "' has fewer than " +
                                 std::to_string(dim) + " values (line " +
                                 std::to_string(i + 2) + ")");
    }
    double extra;
    if (ls >> extra)
      throw std::runtime_error("embedding file: row for '" + token + "' has more than " +
                               std::to_string(dim) + " values (line " + std::to_string(i + 2) +
                               ")");
    if (table.rows_.count(token))
      throw std::runtime_error("embedding file: duplicate token '" + token + "' (line " +
                               std::to_string(i + 2) + ")");
    table.add(token, vec);
  }
  return table;
}

void EmbeddingTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write embedding file: " + path);
  out << tokens_.size() << " " << dim_ << "\n";
  for (size_t r = 0; r < tokens_.size(); r++) {
    out << tokens_[r];
    for (int d = 0; d < dim_; d++)
      out << " " << format_double(data_[r * static_cast<size_t>(dim_) + static_cast<size_t>(d)]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("embedding write failed: " + path);
}

void EmbeddingTable::add(const std::string& token, std::span<const double> vec) {
  if (vec.size() != static_cast<size_t>(dim_))
    throw std::invalid_argument("embedding for '" + token + "' has dimension " +
                                std::to_string(vec.size()) + ", table expects " +
                                std::to_string(dim_));
  double norm2 = 0.0;
  for (double v : vec) norm2 += v * v;
  if (norm2 == 0.0) return;  // unusable row; token stays OOV
  double inv = 1.0 / std::sqrt(norm2);
  auto [it, inserted] = rows_.emplace(token, static_cast<uint32_t>(tokens_.size()));
  if (!inserted) throw std::invalid_argument("duplicate embedding token: " + token);
  tokens_.push_back(token);
  for (double v : vec) data_.push_back(v * inv);
  (void)it;
}

std::optional<uint32_t> EmbeddingTable::row_of(std::string_view token) const {
  auto it = rows_.find(std::string(token));
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> EmbeddingTable::row(uint32_t r) const {
  return std::span<const double>(data_).subspan(static_cast<size_t>(r) * static_cast<size_t>(dim_),
                                                static_cast<size_t>(dim_));
}

std::vector<int32_t> EmbeddingTable::resolve(std::span<const std::string> terms) const {
  std::vector<int32_t> out;
  out.reserve(terms.size());
  for (const auto& t : terms) {
    auto r = row_of(t);
    out.push_back(r ? static_cast<int32_t>(*r) : -1);
  }
  return out;
}

double EmbeddingTable::sim(int32_t a, int32_t b) const {
  if (a < 0 || b < 0) return 0.0;
  if (a == b) return 1.0;
  auto va = row(static_cast<uint32_t>(a));
  auto vb = row(static_cast<uint32_t>(b));
  double dot = 0.0;
  for (int d = 0; d < dim_; d++)
    dot += va[static_cast<size_t>(d)] * vb[static_cast<size_t>(d)];
  return std::clamp(dot, -1.0, 1.0);
}

std::optional<double> EmbeddingTable::cosine(std::string_view a, std::string_view b) const {
  auto ra = row_of(a);
  auto rb = row_of(b);
  if (!ra || !rb) {
    if (policy_ == OovPolicy::skip_term) return std::nullopt;
    return 0.0;
  }
  return sim(static_cast<int32_t>(*ra), static_cast<int32_t>(*rb));
}

InteractionMatrix interaction_matrix(const std::vector<TermWeight>& summary,
                                     std::span<const std::string> target_terms,
                                     const EmbeddingTable& table) {
  if (summary.empty()) throw std::invalid_argument("interaction_matrix: empty summary");
  InteractionMatrix m;
  std::vector<int32_t> row_ids;
  for (const auto& tw : summary) {
    auto r = table.row_of(tw.term);
    if (!r && table.policy() == OovPolicy::skip_term) continue;
    row_ids.push_back(r ? static_cast<int32_t>(*r) : -1);
    m.row_terms.push_back(tw.term);
  }
  std::vector<int32_t> col_ids;
  for (const auto& t : target_terms) {
    auto r = table.row_of(t);
    if (!r && table.policy() == OovPolicy::skip_term) continue;
    col_ids.push_back(r ? static_cast<int32_t>(*r) : -1);
    m.col_terms.push_back(t);
  }
  if (m.empty()) return m;
  m.values.resize(m.rows() * m.cols());
  for (size_t r = 0; r < row_ids.size(); r++)
    for (size_t c = 0; c < col_ids.size(); c++)
      m.values[r * col_ids.size() + c] = table.sim(row_ids[r], col_ids[c]);
  return m;
}

}  // namespace nprf
