#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "nprf/nirm.hpp"

using namespace nprf;

namespace {

// Central-difference check of analytic gradients. Blocks are walked entry by
// entry; the forward closure must recompute the score from current values.
void check_fd(const ParamRefs& params, const ConstParamRefs& grads,
              const std::function<double()>& forward, double h = 1e-5, double tol = 1e-4) {
  REQUIRE(params.size() == grads.size());
  for (size_t bi = 0; bi < params.size(); bi++) {
    Vec& vec = *params[bi].second;
    const Vec& gvec = *grads[bi].second;
    REQUIRE(vec.size() == gvec.size());
    for (size_t i = 0; i < vec.size(); i++) {
      double saved = vec[i];
      vec[i] = saved + h;
      double up = forward();
      vec[i] = saved - h;
      double down = forward();
      vec[i] = saved;
      double fd = (up - down) / (2.0 * h);
      double got = gvec[i];
      double denom = std::max({std::fabs(fd), std::fabs(got), 1e-4});
      CAPTURE(params[bi].first);
      CAPTURE(i);
      CAPTURE(fd);
      CAPTURE(got);
      CHECK(std::fabs(fd - got) <= tol * denom);
    }
  }
}

InteractionMatrix random_matrix(Rng& rng, size_t rows, size_t cols, double exact_prob = 0.1) {
  InteractionMatrix m;
  for (size_t r = 0; r < rows; r++) m.row_terms.push_back("r" + std::to_string(r));
  for (size_t c = 0; c < cols; c++) m.col_terms.push_back("c" + std::to_string(c));
  m.values.resize(rows * cols);
  for (auto& v : m.values) v = rng.uniform() < exact_prob ? 1.0 : rng.uniform(-1.0, 1.0);
  return m;
}

Vec random_idf(Rng& rng, size_t rows) {
  Vec idf(rows);
  for (auto& v : idf) v = rng.uniform(0.0, 3.0);
  return idf;
}

// Naive per-value interval scan, independent of the arithmetic binning.
Vec histogram_oracle(std::span<const double> sims, int bins) {
  Vec counts(static_cast<size_t>(bins), 0.0);
  int soft = bins - 1;
  for (double s : sims) {
    if (s == 1.0) {
      counts[static_cast<size_t>(bins - 1)] += 1.0;
      continue;
    }
    for (int b = 0; b < soft; b++) {
      double lo = -1.0 + 2.0 * b / soft;
      double hi = -1.0 + 2.0 * (b + 1) / soft;
      bool last = b == soft - 1;
      if (s >= lo && (s < hi || (last && s < 1.0))) {
        counts[static_cast<size_t>(b)] += 1.0;
        break;
      }
    }
  }
  for (auto& c : counts) c = std::log1p(c);
  return counts;
}

// Straight-line DRMM forward, sharing no code with the library version.
double drmm_oracle(const InteractionMatrix& m, const Vec& idf, const DrmmParams& p) {
  size_t rows = m.rows();
  Vec z(rows);
  for (size_t r = 0; r < rows; r++) {
    std::vector<double> row;
    for (size_t c = 0; c < m.cols(); c++) row.push_back(m.at(r, c));
    Vec hist = histogram_oracle(row, p.hidden.in);
    Vec h(static_cast<size_t>(p.hidden.out));
    for (int o = 0; o < p.hidden.out; o++) {
      double acc = p.hidden.b[static_cast<size_t>(o)];
      for (int in = 0; in < p.hidden.in; in++)
        acc += p.hidden.w[static_cast<size_t>(o * p.hidden.in + in)] * hist[static_cast<size_t>(in)];
      h[static_cast<size_t>(o)] = std::tanh(acc);
    }
    double out = p.out.b[0];
    for (int in = 0; in < p.out.in; in++) out += p.out.w[static_cast<size_t>(in)] * h[static_cast<size_t>(in)];
    z[r] = out;
  }
  double mx = -1e300;
  for (size_t r = 0; r < rows; r++) mx = std::max(mx, p.gate_w[0] * idf[r]);
  double sum = 0.0;
  Vec g(rows);
  for (size_t r = 0; r < rows; r++) {
    g[r] = std::exp(p.gate_w[0] * idf[r] - mx);
    sum += g[r];
  }
  double score = 0.0;
  for (size_t r = 0; r < rows; r++) score += g[r] / sum * z[r];
  return score;
}

// Brute-force triple loop for kernel features.
Vec knrm_features_oracle(const InteractionMatrix& m, const Vec& mu, const Vec& sigma) {
  Vec phi(mu.size(), 0.0);
  for (size_t k = 0; k < mu.size(); k++) {
    for (size_t r = 0; r < m.rows(); r++) {
      double inner = 0.0;
      for (size_t c = 0; c < m.cols(); c++) {
        double d = m.at(r, c) - mu[k];
        inner += std::exp(-d * d / (2.0 * sigma[k] * sigma[k]));
      }
      phi[k] += std::log(std::max(inner, 1e-10));
    }
  }
  return phi;
}

double knrm_oracle(const Vec& phi, const KnrmParams& p) {
  Vec h(static_cast<size_t>(p.hidden.out));
  for (int o = 0; o < p.hidden.out; o++) {
    double acc = p.hidden.b[static_cast<size_t>(o)];
    for (int in = 0; in < p.hidden.in; in++)
      acc += p.hidden.w[static_cast<size_t>(o * p.hidden.in + in)] * phi[static_cast<size_t>(in)];
    h[static_cast<size_t>(o)] = std::tanh(acc);
  }
  double out = p.out.b[0];
  for (int in = 0; in < p.out.in; in++) out += p.out.w[static_cast<size_t>(in)] * h[static_cast<size_t>(in)];
  return std::tanh(out);
}

}  // namespace

TEST_CASE("drmm_histogram places similarities into the right bins") {
  // Exact matches get the dedicated final bin.
  auto h = drmm_histogram(std::vector<double>{1.0}, 30);
  REQUIRE(h.size() == 30);
  CHECK(h[29] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  for (int i = 0; i < 29; i++) CHECK(h[static_cast<size_t>(i)] == 0.0);

  // 0.999 lands in the last soft bin, not the exact bin.
  h = drmm_histogram(std::vector<double>{0.999}, 30);
  CHECK(h[28] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(h[29] == 0.0);

  // Endpoint -1 is the first bin; 0 sits in bin 14 of 29.
  h = drmm_histogram(std::vector<double>{-1.0, 0.0}, 30);
  CHECK(h[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(h[14] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("drmm_histogram maps counts through ln(1+c)") {
  auto h = drmm_histogram(std::vector<double>{1.0, 1.0, 1.0}, 30);
  CHECK(h[29] == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  auto empty = drmm_histogram(std::vector<double>{}, 30);
  for (double v : empty) CHECK(v == 0.0);
}

TEST_CASE("drmm_histogram validates input") {
  CHECK_THROWS_AS(drmm_histogram(std::vector<double>{0.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(drmm_histogram(std::vector<double>{1.5}, 30), std::invalid_argument);
  CHECK_THROWS_AS(drmm_histogram(std::vector<double>{-1.0001}, 30), std::invalid_argument);
}

TEST_CASE("drmm_histogram agrees with a per-value interval scan") {
  Rng rng(321);
  for (int trial = 0; trial < 5; trial++) {
    std::vector<double> sims;
    for (int i = 0; i < 50; i++)
      sims.push_back(rng.uniform() < 0.1 ? 1.0 : rng.uniform(-1.0, 1.0));
    auto got = drmm_histogram(sims, 30);
    auto want = histogram_oracle(sims, 30);
    CAPTURE(trial);
    CHECK(got == want);
  }
}

TEST_CASE("drmm_features aligns idf with rows and flags empty input") {
  Rng rng(5);
  auto m = random_matrix(rng, 3, 4);
  Vec idf{1.0, 2.0};
  CHECK_THROWS_WITH(drmm_features(m, idf, 30), doctest::Contains("not aligned"));

  InteractionMatrix empty;
  auto f = drmm_features(empty, {}, 30);
  CHECK(f.degenerate());
}

TEST_CASE("drmm matrix path equals ids path") {
  EmbeddingTable t(3);
  t.add("a", std::vector<double>{1.0, 0.2, 0.1});
  t.add("b", std::vector<double>{-0.3, 0.8, 0.4});
  t.add("c", std::vector<double>{0.1, -0.5, 0.9});

  std::vector<TermWeight> summary{{"a", 2.0}, {"c", 1.0}};
  std::vector<std::string> target{"b", "a", "c"};
  auto m = interaction_matrix(summary, target, t);
  Vec idf{1.3, 0.6};
  auto f1 = drmm_features(m, idf, 30);

  auto row_ids = t.resolve(std::vector<std::string>{"a", "c"});
  auto col_ids = t.resolve(target);
  auto f2 = drmm_features_ids(row_ids, idf, col_ids, t, 30);

  REQUIRE(f1.histograms.size() == f2.histograms.size());
  for (size_t r = 0; r < f1.histograms.size(); r++) CHECK(f1.histograms[r] == f2.histograms[r]);
  CHECK(f1.idf == f2.idf);

  DrmmParams p = DrmmParams::make();
  Rng init(9);
  p.init(init);
  CHECK(drmm_score(f1, p) == drmm_score(f2, p));
}

TEST_CASE("drmm_score trivial cases") {
  Rng rng(17);
  auto m = random_matrix(rng, 4, 6);
  auto idf = random_idf(rng, 4);

  // All-zero parameters: every row scores 0, so the gated sum is 0.
  DrmmParams zero = DrmmParams::make();
  zero.gate_w[0] = 0.0;
  CHECK(drmm_score(m, idf, zero) == 0.0);

  // Single row: softmax over one logit is 1, score equals the row's FFN output.
  DrmmParams p = DrmmParams::make();
  p.init(rng);
  auto single = random_matrix(rng, 1, 5);
  Vec one_idf{2.2};
  DrmmCache cache;
  double s = drmm_score(single, one_idf, p, &cache);
  REQUIRE(cache.gates.size() == 1);
  CHECK(cache.gates[0] == 1.0);
  CHECK(s == cache.z[0]);
}

TEST_CASE("drmm_score matches a straight-line reimplementation") {
  Rng rng(23);
  DrmmParams p = DrmmParams::make();
  p.init(rng);
  for (int trial = 0; trial < 5; trial++) {
    auto m = random_matrix(rng, 2 + rng.below(4), 3 + rng.below(5));
    auto idf = random_idf(rng, m.rows());
    CAPTURE(trial);
    CHECK(drmm_score(m, idf, p) == doctest::Approx(drmm_oracle(m, idf, p)).epsilon(1e-12));
  }
}

TEST_CASE("drmm degenerate input scores 0 and backward is a no-op") {
  DrmmParams p = DrmmParams::make();
  Rng rng(3);
  p.init(rng);
  DrmmFeatures f;  // no rows
  DrmmCache cache;
  CHECK(drmm_score(f, p, &cache) == 0.0);
  CHECK(cache.degenerate);

  DrmmParams grad = p.zeros_like();
  drmm_backward(f, p, cache, 1.0, grad);
  for (const auto& [name, vec] : std::as_const(grad).param_refs())
    for (double v : *vec) CHECK(v == 0.0);
}

TEST_CASE("uniform idf makes gates uniform and the gate gradient vanish") {
  Rng rng(29);
  DrmmParams p = DrmmParams::make();
  p.init(rng);
  auto m = random_matrix(rng, 4, 5);
  Vec idf(4, 1.7);

  auto f = drmm_features(m, idf, 30);
  DrmmCache cache;
  drmm_score(f, p, &cache);
  for (double g : cache.gates) CHECK(g == doctest::Approx(0.25).epsilon(1e-14));

  // Shifting w_g moves all logits together, so the softmax cannot change.
  DrmmParams grad = p.zeros_like();
  drmm_backward(f, p, cache, 1.0, grad);
  CHECK(std::fabs(grad.gate_w[0]) < 1e-12);
}

TEST_CASE("drmm_backward matches finite differences") {
  Rng rng(41);
  DrmmParams p = DrmmParams::make();
  p.init(rng);
  auto m = random_matrix(rng, 3, 6);
  auto idf = random_idf(rng, 3);
  auto f = drmm_features(m, idf, 30);

  DrmmCache cache;
  drmm_score(f, p, &cache);
  DrmmParams grad = p.zeros_like();
  drmm_backward(f, p, cache, 1.0, grad);

  check_fd(p.param_refs(), std::as_const(grad).param_refs(),
           [&] { return drmm_score(f, p); });
}

TEST_CASE("drmm_backward scales linearly with upstream") {
  Rng rng(43);
  DrmmParams p = DrmmParams::make();
  p.init(rng);
  auto m = random_matrix(rng, 2, 4);
  auto idf = random_idf(rng, 2);
  auto f = drmm_features(m, idf, 30);
  DrmmCache cache;
  drmm_score(f, p, &cache);

  DrmmParams g1 = p.zeros_like();
  drmm_backward(f, p, cache, 1.0, g1);
  DrmmParams g2 = p.zeros_like();
  drmm_backward(f, p, cache, -2.5, g2);
  auto r1 = std::as_const(g1).param_refs();
  auto r2 = std::as_const(g2).param_refs();
  for (size_t b = 0; b < r1.size(); b++)
    for (size_t i = 0; i < r1[b].second->size(); i++)
      CHECK((*r2[b].second)[i] == doctest::Approx(-2.5 * (*r1[b].second)[i]).epsilon(1e-12));

  DrmmParams gz = p.zeros_like();
  drmm_backward(f, p, cache, 0.0, gz);
  for (const auto& [name, vec] : std::as_const(gz).param_refs())
    for (double v : *vec) CHECK(v == 0.0);
}

TEST_CASE("drmm_backward rejects stale or missing caches") {
  Rng rng(47);
  DrmmParams p = DrmmParams::make();
  p.init(rng);
  auto m = random_matrix(rng, 2, 3);
  Vec idf{1.0, 2.0};
  auto f = drmm_features(m, idf, 30);

  DrmmParams grad = p.zeros_like();
  DrmmCache never;
  CHECK_THROWS_WITH(drmm_backward(f, p, never, 1.0, grad), doctest::Contains("missing"));

  DrmmCache cache;
  drmm_score(f, p, &cache);
  p.revision++;  // simulate an optimizer step between forward and backward
  CHECK_THROWS_WITH(drmm_backward(f, p, cache, 1.0, grad), doctest::Contains("stale"));
}

TEST_CASE("drmm column permutation leaves the score bit-identical") {
  Rng rng(53);
  DrmmParams p = DrmmParams::make();
  p.init(rng);
  auto m = random_matrix(rng, 3, 7);
  auto idf = random_idf(rng, 3);

  InteractionMatrix shuffled = m;
  std::vector<size_t> perm{4, 0, 6, 2, 5, 1, 3};
  for (size_t r = 0; r < m.rows(); r++)
    for (size_t c = 0; c < perm.size(); c++)
      shuffled.values[r * m.cols() + c] = m.at(r, perm[c]);

  CHECK(drmm_score(m, idf, p) == drmm_score(shuffled, idf, p));
}

TEST_CASE("drmm row permutation with idf leaves the score unchanged") {
  Rng rng(59);
  DrmmParams p = DrmmParams::make();
  p.init(rng);
  auto m = random_matrix(rng, 4, 5);
  auto idf = random_idf(rng, 4);

  std::vector<size_t> perm{2, 0, 3, 1};
  InteractionMatrix shuffled = m;
  Vec idf2(4);
  for (size_t r = 0; r < perm.size(); r++) {
    idf2[r] = idf[perm[r]];
    for (size_t c = 0; c < m.cols(); c++)
      shuffled.values[r * m.cols() + c] = m.at(perm[r], c);
  }
  CHECK(drmm_score(shuffled, idf2, p) == doctest::Approx(drmm_score(m, idf, p)).epsilon(1e-12));
}

TEST_CASE("knrm kernels follow the published layout") {
  auto p = KnrmParams::make();
  REQUIRE(p.mu.size() == 11);
  REQUIRE(p.sigma.size() == 11);
  CHECK(p.mu[0] == 1.0);
  CHECK(p.sigma[0] == 1e-3);
  for (int i = 1; i <= 10; i++) {
    CHECK(p.mu[static_cast<size_t>(i)] ==
          doctest::Approx(-0.9 + 0.2 * (i - 1)).epsilon(1e-14));
    CHECK(p.sigma[static_cast<size_t>(i)] == 0.1);
  }
  // Trainable blocks exclude the fixed kernels.
  for (const auto& [name, vec] : p.param_refs()) {
    CHECK(name != "mu");
    CHECK(name != "sigma");
  }
}

TEST_CASE("knrm_features peaks at ln(1) for a matrix holding the kernel mean") {
  auto p = KnrmParams::make();
  for (size_t k = 0; k < p.mu.size(); k++) {
    InteractionMatrix m;
    m.row_terms = {"r"};
    m.col_terms = {"c"};
    m.values = {p.mu[k]};
    auto phi = knrm_features(m, p.mu, p.sigma);
    REQUIRE(phi.has_value());
    CAPTURE(k);
    CHECK((*phi)[k] == 0.0);  // ln(exp(0)) == 0
  }
}

TEST_CASE("knrm_features clamps empty kernels at ln(1e-10)") {
  auto p = KnrmParams::make();
  InteractionMatrix m;
  m.row_terms = {"r"};
  m.col_terms = {"c"};
  m.values = {0.0};  // 1000 sigmas from the exact-match kernel
  auto phi = knrm_features(m, p.mu, p.sigma);
  REQUIRE(phi.has_value());
  CHECK((*phi)[0] == doctest::Approx(-23.025850929940457).epsilon(1e-14));
}

TEST_CASE("knrm_features matches the brute-force triple loop") {
  Rng rng(61);
  auto p = KnrmParams::make();
  for (int trial = 0; trial < 5; trial++) {
    auto m = random_matrix(rng, 3, 4);
    auto got = knrm_features(m, p.mu, p.sigma);
    REQUIRE(got.has_value());
    auto want = knrm_features_oracle(m, p.mu, p.sigma);
    for (size_t k = 0; k < want.size(); k++) {
      CAPTURE(trial);
      CAPTURE(k);
      CHECK((*got)[k] == doctest::Approx(want[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("knrm_features handles empty and mismatched input") {
  auto p = KnrmParams::make();
  InteractionMatrix empty;
  CHECK(!knrm_features(empty, p.mu, p.sigma).has_value());
  Vec mu{0.5};
  Vec sigma{0.1, 0.2};
  InteractionMatrix m;
  m.row_terms = {"r"};
  m.col_terms = {"c"};
  m.values = {0.0};
  CHECK_THROWS_WITH(knrm_features(m, mu, sigma), doctest::Contains("mismatch"));
}

TEST_CASE("knrm_features matrix path equals ids path") {
  EmbeddingTable t(3);
  t.add("a", std::vector<double>{1.0, 0.2, 0.1});
  t.add("b", std::vector<double>{-0.3, 0.8, 0.4});
  auto p = KnrmParams::make();

  std::vector<TermWeight> summary{{"a", 1.0}, {"b", 2.0}};
  std::vector<std::string> target{"b", "a"};
  auto m = interaction_matrix(summary, target, t);
  auto f1 = knrm_features(m, p.mu, p.sigma);

  auto row_ids = t.resolve(std::vector<std::string>{"a", "b"});
  auto col_ids = t.resolve(target);
  auto f2 = knrm_features_ids(row_ids, col_ids, p.mu, p.sigma, t);
  REQUIRE(f1.has_value());
  REQUIRE(f2.has_value());
  CHECK(*f1 == *f2);
}

TEST_CASE("knrm monotone response toward a kernel mean") {
  auto p = KnrmParams::make();
  // Moving a similarity toward mu_k increases that kernel's inner sum.
  size_t k = 5;  // some soft kernel
  double mu = p.mu[k];
  InteractionMatrix far;
  far.row_terms = {"r"};
  far.col_terms = {"c1", "c2"};
  far.values = {mu - 0.5, 0.0};
  InteractionMatrix near = far;
  near.values = {mu - 0.1, 0.0};
  auto phi_far = knrm_features(far, p.mu, p.sigma);
  auto phi_near = knrm_features(near, p.mu, p.sigma);
  CHECK((*phi_near)[k] >= (*phi_far)[k]);
}

TEST_CASE("knrm_score is bounded and zero for zero weights") {
  Rng rng(67);
  auto p = KnrmParams::make();  // weights default to zero
  auto m = random_matrix(rng, 3, 4);
  CHECK(knrm_score(m, p) == 0.0);

  p.init(rng);
  for (int trial = 0; trial < 10; trial++) {
    auto mm = random_matrix(rng, 1 + rng.below(4), 1 + rng.below(6));
    double s = knrm_score(mm, p);
    CHECK(s > -1.0);
    CHECK(s < 1.0);
  }
}

TEST_CASE("knrm_score matches a straight-line reimplementation") {
  Rng rng(71);
  auto p = KnrmParams::make();
  p.init(rng);
  for (int trial = 0; trial < 5; trial++) {
    auto m = random_matrix(rng, 2 + rng.below(3), 2 + rng.below(5));
    auto phi = knrm_features(m, p.mu, p.sigma);
    REQUIRE(phi.has_value());
    CAPTURE(trial);
    CHECK(knrm_score(*phi, p) == doctest::Approx(knrm_oracle(*phi, p)).epsilon(1e-12));
  }
}

TEST_CASE("knrm degenerate input scores 0 through the matrix overload") {
  Rng rng(73);
  auto p = KnrmParams::make();
  p.init(rng);
  InteractionMatrix empty;
  KnrmCache cache;
  CHECK(knrm_score(empty, p, &cache) == 0.0);
  CHECK(cache.degenerate);

  KnrmParams grad = p.zeros_like();
  knrm_backward(Vec{}, p, cache, 1.0, grad);
  for (const auto& [name, vec] : std::as_const(grad).param_refs())
    for (double v : *vec) CHECK(v == 0.0);
}

TEST_CASE("knrm_backward matches finite differences") {
  Rng rng(79);
  auto p = KnrmParams::make();
  p.init(rng);
  auto m = random_matrix(rng, 3, 5);
  auto phi = knrm_features(m, p.mu, p.sigma);
  REQUIRE(phi.has_value());

  KnrmCache cache;
  knrm_score(*phi, p, &cache);
  KnrmParams grad = p.zeros_like();
  knrm_backward(*phi, p, cache, 1.0, grad);

  check_fd(p.param_refs(), std::as_const(grad).param_refs(),
           [&] { return knrm_score(*phi, p); });
}

TEST_CASE("knrm_backward rejects stale or missing caches") {
  Rng rng(83);
  auto p = KnrmParams::make();
  p.init(rng);
  Vec phi(11, 0.5);
  KnrmParams grad = p.zeros_like();
  KnrmCache never;
  CHECK_THROWS_WITH(knrm_backward(phi, p, never, 1.0, grad), doctest::Contains("missing"));

  KnrmCache cache;
  knrm_score(phi, p, &cache);
  p.revision++;
  CHECK_THROWS_WITH(knrm_backward(phi, p, cache, 1.0, grad), doctest::Contains("stale"));
}

TEST_CASE("knrm column permutation changes the score by at most rounding") {
  Rng rng(89);
  auto p = KnrmParams::make();
  p.init(rng);
  auto m = random_matrix(rng, 3, 6);
  std::vector<size_t> perm{5, 2, 0, 4, 1, 3};
  InteractionMatrix shuffled = m;
  for (size_t r = 0; r < m.rows(); r++)
    for (size_t c = 0; c < perm.size(); c++)
      shuffled.values[r * m.cols() + c] = m.at(r, perm[c]);
  CHECK(knrm_score(shuffled, p) == doctest::Approx(knrm_score(m, p)).epsilon(1e-12));
}
