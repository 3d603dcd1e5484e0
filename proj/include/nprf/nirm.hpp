#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "nprf/embeddings.hpp"
#include "nprf/nn.hpp"

namespace nprf {

inline constexpr int kDrmmBins = 30;
inline constexpr int kDrmmHidden = 5;
inline constexpr int kKnrmKernels = 11;
inline constexpr int kKnrmHidden = 5;
inline constexpr double kKernelFloor = 1e-10;

// DRMM with log-count histograms and idf term gating: per-row histogram ->
// FFN [bins -> 5 -> 1] (tanh hidden, linear out) -> per-row score z_i;
// gates = softmax over rows of (gate_w * idf_i); score = sum g_i z_i.
struct DrmmParams {
  Linear hidden;
  Linear out;
  Vec gate_w;  // single scalar, kept as a block for uniform param handling
  // Bumped on every parameter mutation; forward caches record it so a
  // backward pass against stale activations is rejected.
  uint64_t revision = 0;

  static DrmmParams make(int bins = kDrmmBins);
  void init(Rng& rng);
  DrmmParams zeros_like() const;
  ParamRefs param_refs();
  ConstParamRefs param_refs() const;
};

// Histogram over B-1 equal-width intervals covering [-1, 1) plus a dedicated
// final bin for exact matches (similarity == 1.0); counts mapped to ln(1+c).
Vec drmm_histogram(std::span<const double> sims, int bins);

struct DrmmFeatures {
  std::vector<Vec> histograms;  // one per surviving summary row
  Vec idf;                      // aligned with histograms
  bool degenerate() const { return histograms.empty(); }
};

DrmmFeatures drmm_features(const InteractionMatrix& m, std::span<const double> idf_weights,
                           int bins = kDrmmBins);
// Same features computed from resolved embedding ids (training fast path);
// -1 ids mean OOV-as-zero and contribute 0-similarity entries.
DrmmFeatures drmm_features_ids(std::span<const int32_t> row_ids, std::span<const double> row_idf,
                               std::span<const int32_t> col_ids, const EmbeddingTable& table,
                               int bins = kDrmmBins);

struct DrmmCache {
  bool valid = false;
  bool degenerate = false;
  uint64_t revision = 0;
  std::vector<Vec> hidden_act;  // tanh activations per row
  Vec z;                        // per-row scores
  Vec gates;                    // softmax weights
  double score = 0.0;
};

double drmm_score(const DrmmFeatures& f, const DrmmParams& p, DrmmCache* cache = nullptr);
double drmm_score(const InteractionMatrix& m, std::span<const double> idf_weights,
                  const DrmmParams& p, DrmmCache* cache = nullptr);
// Accumulates d(upstream * score)/dtheta into grad. Requires a cache filled
// by drmm_score against the same params revision.
void drmm_backward(const DrmmFeatures& f, const DrmmParams& p, const DrmmCache& cache,
                   double upstream, DrmmParams& grad);

// K-NRM variant with frozen embeddings: kernel-pooled soft-TF features ->
// FC [K -> 5 -> 1] with tanh on hidden and output, so scores lie in (-1, 1).
// Kernels are fixed: exact-match mu=1 sigma=1e-3, soft kernels mu in
// {-0.9, -0.7, ..., 0.9} with sigma=0.1.
struct KnrmParams {
  Vec mu;
  Vec sigma;
  Linear hidden;
  Linear out;
  uint64_t revision = 0;

  static KnrmParams make();
  void init(Rng& rng);
  KnrmParams zeros_like() const;
  ParamRefs param_refs();    // trainable blocks only; kernels stay fixed
  ConstParamRefs param_refs() const;
};

// phi_k = sum over rows of ln(max(sum over cols of exp(-(s-mu_k)^2/(2 sigma_k^2)), 1e-10)).
// Empty matrix -> no value (degenerate input).
std::optional<Vec> knrm_features(const InteractionMatrix& m, std::span<const double> mu,
                                 std::span<const double> sigma);
std::optional<Vec> knrm_features_ids(std::span<const int32_t> row_ids,
                                     std::span<const int32_t> col_ids,
                                     std::span<const double> mu, std::span<const double> sigma,
                                     const EmbeddingTable& table);

struct KnrmCache {
  bool valid = false;
  bool degenerate = false;
  uint64_t revision = 0;
  Vec phi;
  Vec hidden_act;
  double score = 0.0;
};

double knrm_score(const Vec& phi, const KnrmParams& p, KnrmCache* cache = nullptr);
double knrm_score(const InteractionMatrix& m, const KnrmParams& p, KnrmCache* cache = nullptr);
void knrm_backward(const Vec& phi, const KnrmParams& p, const KnrmCache& cache, double upstream,
                   KnrmParams& grad);

}  // namespace nprf
