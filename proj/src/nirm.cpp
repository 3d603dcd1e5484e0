#include "nprf/nirm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nprf {

DrmmParams DrmmParams::make(int bins) {
  DrmmParams p;
  p.hidden.resize(bins, kDrmmHidden);
  p.out.resize(kDrmmHidden, 1);
  p.gate_w.assign(1, 1.0);
  return p;
}

void DrmmParams::init(Rng& rng) {
  init_uniform(hidden, rng);
  init_uniform(out, rng);
  double r = init_bound(1, 1);
  gate_w[0] = rng.uniform(-r, r);
  revision++;
}

DrmmParams DrmmParams::zeros_like() const {
  DrmmParams g;
  g.hidden.resize(hidden.in, hidden.out);
  g.out.resize(out.in, out.out);
  g.gate_w.assign(1, 0.0);
  return g;
}

ParamRefs DrmmParams::param_refs() {
  return {{"hidden.w", &hidden.w}, {"hidden.b", &hidden.b}, {"out.w", &out.w},
          {"out.b", &out.b},       {"gate.w", &gate_w}};
}

ConstParamRefs DrmmParams::param_refs() const {
  return {{"hidden.w", &hidden.w}, {"hidden.b", &hidden.b}, {"out.w", &out.w},
          {"out.b", &out.b},       {"gate.w", &gate_w}};
}

Vec drmm_histogram(std::span<const double> sims, int bins) {
  if (bins < 2) throw std::invalid_argument("drmm_histogram: need at least 2 bins");
  Vec counts(static_cast<size_t>(bins), 0.0);
  double soft_bins = static_cast<double>(bins - 1);
  for (double s : sims) {
    if (s < -1.0 || s > 1.0)
      throw std::invalid_argument("drmm_histogram: similarity outside [-1, 1]");
    size_t idx;
    if (s == 1.0) {
      idx = static_cast<size_t>(bins - 1);  // exact-match bin
    } else {
      idx = static_cast<size_t>((s + 1.0) / 2.0 * soft_bins);
      if (idx > static_cast<size_t>(bins - 2)) idx = static_cast<size_t>(bins - 2);
    }
    counts[idx] += 1.0;
  }
  for (auto& c : counts) c = std::log1p(c);
  return counts;
}

DrmmFeatures drmm_features(const InteractionMatrix& m, std::span<const double> idf_weights,
                           int bins) {
  if (idf_weights.size() != m.rows())
    throw std::invalid_argument("drmm_features: idf weights not aligned with matrix rows");
  DrmmFeatures f;
  if (m.empty()) return f;
  f.histograms.reserve(m.rows());
  f.idf.assign(idf_weights.begin(), idf_weights.end());
  for (size_t r = 0; r < m.rows(); r++) {
    std::span<const double> row(&m.values[r * m.cols()], m.cols());
    f.histograms.push_back(drmm_histogram(row, bins));
  }
  return f;
}

DrmmFeatures drmm_features_ids(std::span<const int32_t> row_ids, std::span<const double> row_idf,
                               std::span<const int32_t> col_ids, const EmbeddingTable& table,
                               int bins) {
  if (row_ids.size() != row_idf.size())
    throw std::invalid_argument("drmm_features_ids: idf weights not aligned with rows");
  DrmmFeatures f;
  if (row_ids.empty() || col_ids.empty()) return f;
  f.histograms.reserve(row_ids.size());
  f.idf.assign(row_idf.begin(), row_idf.end());
  Vec sims(col_ids.size());
  for (size_t r = 0; r < row_ids.size(); r++) {
    for (size_t c = 0; c < col_ids.size(); c++) sims[c] = table.sim(row_ids[r], col_ids[c]);
    f.histograms.push_back(drmm_histogram(sims, bins));
  }
  return f;
}

namespace {

Vec softmax(const Vec& logits) {
  Vec out(logits.size());
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); i++) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

}  // namespace

double drmm_score(const DrmmFeatures& f, const DrmmParams& p, DrmmCache* cache) {
  if (cache) {
    *cache = DrmmCache{};
    cache->revision = p.revision;
  }
  if (f.degenerate()) {
    if (cache) {
      cache->valid = true;
      cache->degenerate = true;
    }
    return 0.0;
  }
  size_t rows = f.histograms.size();
  Vec z(rows);
  std::vector<Vec> acts;
  acts.reserve(rows);
  for (size_t r = 0; r < rows; r++) {
    Vec h = tanh_vec(p.hidden.forward(f.histograms[r]));
    z[r] = p.out.forward(h)[0];
    acts.push_back(std::move(h));
  }
  Vec logits(rows);
  for (size_t r = 0; r < rows; r++) logits[r] = p.gate_w[0] * f.idf[r];
  Vec gates = softmax(logits);
  double score = 0.0;
  for (size_t r = 0; r < rows; r++) score += gates[r] * z[r];
  if (cache) {
    cache->valid = true;
    cache->hidden_act = std::move(acts);
    cache->z = std::move(z);
    cache->gates = std::move(gates);
    cache->score = score;
  }
  return score;
}

double drmm_score(const InteractionMatrix& m, std::span<const double> idf_weights,
                  const DrmmParams& p, DrmmCache* cache) {
  return drmm_score(drmm_features(m, idf_weights, p.hidden.in), p, cache);
}

void drmm_backward(const DrmmFeatures& f, const DrmmParams& p, const DrmmCache& cache,
                   double upstream, DrmmParams& grad) {
  if (!cache.valid) throw std::runtime_error("drmm_backward: missing forward cache");
  if (cache.revision != p.revision)
    throw std::runtime_error("drmm_backward: stale forward cache (params changed)");
  if (cache.degenerate) return;  // score is constant 0
  size_t rows = f.histograms.size();
  if (cache.z.size() != rows) throw std::runtime_error("drmm_backward: cache/features mismatch");

  // d(score)/dz_i = g_i; FFN backward per row.
  for (size_t r = 0; r < rows; r++) {
    double dz = upstream * cache.gates[r];
    Vec dh = p.out.backward(cache.hidden_act[r], Vec{dz}, grad.out);
    for (size_t i = 0; i < dh.size(); i++) {
      double a = cache.hidden_act[r][i];
      dh[i] *= 1.0 - a * a;
    }
    p.hidden.backward(f.histograms[r], dh, grad.hidden);
  }
  // Gate path: dl_i = g_i (dgate_i - sum_j dgate_j g_j) with dgate_i = up * z_i,
  // then d(w_g) = sum_i dl_i * idf_i.
  double weighted = 0.0;
  for (size_t r = 0; r < rows; r++) weighted += upstream * cache.z[r] * cache.gates[r];
  double dw = 0.0;
  for (size_t r = 0; r < rows; r++) {
    double dl = cache.gates[r] * (upstream * cache.z[r] - weighted);
    dw += dl * f.idf[r];
  }
  grad.gate_w[0] += dw;
}

KnrmParams KnrmParams::make() {
  KnrmParams p;
  p.mu.push_back(1.0);
  p.sigma.push_back(1e-3);
  for (int i = 0; i < 10; i++) {
    p.mu.push_back(-0.9 + 0.2 * static_cast<double>(i));
    p.sigma.push_back(0.1);
  }
  p.hidden.resize(kKnrmKernels, kKnrmHidden);
  p.out.resize(kKnrmHidden, 1);
  return p;
}

void KnrmParams::init(Rng& rng) {
  init_uniform(hidden, rng);
  init_uniform(out, rng);
  revision++;
}

KnrmParams KnrmParams::zeros_like() const {
  KnrmParams g;
  g.mu = mu;
  g.sigma = sigma;
  g.hidden.resize(hidden.in, hidden.out);
  g.out.resize(out.in, out.out);
  return g;
}

ParamRefs KnrmParams::param_refs() {
  return {{"hidden.w", &hidden.w}, {"hidden.b", &hidden.b}, {"out.w", &out.w}, {"out.b", &out.b}};
}

ConstParamRefs KnrmParams::param_refs() const {
  return {{"hidden.w", &hidden.w}, {"hidden.b", &hidden.b}, {"out.w", &out.w}, {"out.b", &out.b}};
}

namespace {

std::optional<Vec> knrm_features_grid(size_t rows, size_t cols, std::span<const double> mu,
                                      std::span<const double> sigma,
                                      const std::function<double(size_t, size_t)>& sim_at) {
  if (mu.size() != sigma.size())
    throw std::invalid_argument("knrm_features: mu/sigma length mismatch");
  if (rows == 0 || cols == 0) return std::nullopt;
  size_t k = mu.size();
  Vec phi(k, 0.0);
  Vec inner(k);
  for (size_t r = 0; r < rows; r++) {
    std::fill(inner.begin(), inner.end(), 0.0);
    for (size_t c = 0; c < cols; c++) {
      double s = sim_at(r, c);
      for (size_t i = 0; i < k; i++) {
        double d = (s - mu[i]) / sigma[i];
        inner[i] += std::exp(-0.5 * d * d);
      }
    }
    for (size_t i = 0; i < k; i++) phi[i] += std::log(std::max(inner[i], kKernelFloor));
  }
  return phi;
}

}  // namespace

std::optional<Vec> knrm_features(const InteractionMatrix& m, std::span<const double> mu,
                                 std::span<const double> sigma) {
  return knrm_features_grid(m.rows(), m.cols(), mu, sigma,
                            [&](size_t r, size_t c) { return m.at(r, c); });
}

std::optional<Vec> knrm_features_ids(std::span<const int32_t> row_ids,
                                     std::span<const int32_t> col_ids,
                                     std::span<const double> mu, std::span<const double> sigma,
                                     const EmbeddingTable& table) {
  return knrm_features_grid(row_ids.size(), col_ids.size(), mu, sigma, [&](size_t r, size_t c) {
    return table.sim(row_ids[r], col_ids[c]);
  });
}

double knrm_score(const Vec& phi, const KnrmParams& p, KnrmCache* cache) {
  if (cache) {
    *cache = KnrmCache{};
    cache->revision = p.revision;
  }
  Vec h = tanh_vec(p.hidden.forward(phi));
  double y = std::tanh(p.out.forward(h)[0]);
  if (cache) {
    cache->valid = true;
    cache->phi = phi;
    cache->hidden_act = std::move(h);
    cache->score = y;
  }
  return y;
}

double knrm_score(const InteractionMatrix& m, const KnrmParams& p, KnrmCache* cache) {
  auto phi = knrm_features(m, p.mu, p.sigma);
  if (!phi) {
    if (cache) {
      *cache = KnrmCache{};
      cache->revision = p.revision;
      cache->valid = true;
      cache->degenerate = true;
    }
    return 0.0;
  }
  return knrm_score(*phi, p, cache);
}

void knrm_backward(const Vec& phi, const KnrmParams& p, const KnrmCache& cache, double upstream,
                   KnrmParams& grad) {
  if (!cache.valid) throw std::runtime_error("knrm_backward: missing forward cache");
  if (cache.revision != p.revision)
    throw std::runtime_error("knrm_backward: stale forward cache (params changed)");
  if (cache.degenerate) return;
  double dy = upstream * (1.0 - cache.score * cache.score);
  Vec dh = p.out.backward(cache.hidden_act, Vec{dy}, grad.out);
  for (size_t i = 0; i < dh.size(); i++) {
    double a = cache.hidden_act[i];
    dh[i] *= 1.0 - a * a;
  }
  p.hidden.backward(phi, dh, grad.hidden);
}

}  // namespace nprf
