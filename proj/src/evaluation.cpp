#include "nprf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "nprf/common.hpp"

namespace nprf {

void Qrels::add(const std::string& query_id, const std::string& doc_id, int grade) {
  if (grade < 0) throw std::invalid_argument("qrels grade must be >= 0");
  auto [it, inserted] = judgments_[query_id].emplace(doc_id, grade);
  (void)it;
  if (!inserted)
    throw std::runtime_error("duplicate qrels entry for (" + query_id + ", " + doc_id + ")");
}

int Qrels::grade(std::string_view query_id, std::string_view doc_id) const {
  const auto* q = query_judgments(query_id);
  if (!q) return 0;
  auto it = q->find(std::string(doc_id));
  return it == q->end() ? 0 : it->second;
}

bool Qrels::judged(std::string_view query_id, std::string_view doc_id) const {
  const auto* q = query_judgments(query_id);
  return q && q->count(std::string(doc_id)) > 0;
}

const std::map<std::string, int>* Qrels::query_judgments(std::string_view query_id) const {
  auto it = judgments_.find(std::string(query_id));
  return it == judgments_.end() ? nullptr : &it->second;
}

size_t Qrels::relevant_count(std::string_view query_id) const {
  const auto* q = query_judgments(query_id);
  if (!q) return 0;
  size_t n = 0;
  for (const auto& [doc, g] : *q)
    if (g > 0) n++;
  return n;
}

std::vector<std::string> Qrels::query_ids() const {
  std::vector<std::string> out;
  out.reserve(judgments_.size());
  for (const auto& [qid, j] : judgments_) out.push_back(qid);
  return out;
}

size_t Qrels::size() const {
  size_t n = 0;
  for (const auto& [qid, j] : judgments_) n += j.size();
  return n;
}

Qrels Qrels::load(std::istream& in) {
  Qrels out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string qid, iter, doc_id;
    int grade = 0;
    if (!(ls >> qid >> iter >> doc_id >> grade))
      throw std::runtime_error("qrels line " + std::to_string(lineno) + ": bad format");
    if (grade < 0)
      throw std::runtime_error("qrels line " + std::to_string(lineno) + ": negative grade");
    out.add(qid, doc_id, grade);
  }
  return out;
}

Qrels Qrels::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open qrels file: " + path);
  return load(in);
}

std::optional<double> average_precision(const RunList& run, const Qrels& qrels) {
  size_t r_total = qrels.relevant_count(run.query_id);
  if (r_total == 0) return std::nullopt;
  double sum = 0.0;
  size_t hits = 0;
  size_t depth = std::min<size_t>(run.entries.size(), kMapDepth);
  for (size_t i = 0; i < depth; i++) {
    if (qrels.grade(run.query_id, run.entries[i].doc_id) > 0) {
      hits++;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(r_total);
}

double precision_at(const RunList& run, const Qrels& qrels, int cutoff) {
  if (cutoff <= 0) throw std::invalid_argument("precision_at: cutoff must be positive");
  size_t depth = std::min<size_t>(run.entries.size(), static_cast<size_t>(cutoff));
  size_t hits = 0;
  for (size_t i = 0; i < depth; i++)
    if (qrels.grade(run.query_id, run.entries[i].doc_id) > 0) hits++;
  return static_cast<double>(hits) / static_cast<double>(cutoff);
}

std::optional<double> ndcg_at(const RunList& run, const Qrels& qrels, int cutoff) {
  if (cutoff <= 0) throw std::invalid_argument("ndcg_at: cutoff must be positive");
  const auto* judged = qrels.query_judgments(run.query_id);
  if (!judged) return std::nullopt;
  std::vector<int> ideal;
  ideal.reserve(judged->size());
  for (const auto& [doc, g] : *judged) ideal.push_back(g);
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  double idcg = 0.0;
  for (size_t i = 0; i < std::min<size_t>(ideal.size(), static_cast<size_t>(cutoff)); i++)
    idcg += (std::exp2(static_cast<double>(ideal[i])) - 1.0) /
            std::log2(static_cast<double>(i) + 2.0);
  if (idcg == 0.0) return std::nullopt;
  double dcg = 0.0;
  size_t depth = std::min<size_t>(run.entries.size(), static_cast<size_t>(cutoff));
  for (size_t i = 0; i < depth; i++) {
    int g = qrels.grade(run.query_id, run.entries[i].doc_id);
    dcg += (std::exp2(static_cast<double>(g)) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

double log_gamma(double x) {
  // Lanczos approximation, g = 7, 9 coefficients.
  static const double coef[] = {0.99999999999980993,  676.5203681218851,   -1259.1392167224028,
                                771.32342877765313,   -176.61502916214059, 12.507343278686905,
                                -0.13857109526572012, 9.9843695780195716e-6,
                                1.5056327351493116e-7};
  if (x <= 0.0) throw std::invalid_argument("log_gamma: x must be positive");
  if (x < 0.5) {
    // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
    return std::log(M_PI / std::sin(M_PI * x)) - log_gamma(1.0 - x);
  }
  double z = x - 1.0;
  double a = coef[0];
  double t = z + 7.5;
  for (int i = 1; i < 9; i++) a += coef[i] / (z + static_cast<double>(i));
  return 0.5 * std::log(2.0 * M_PI) + (z + 0.5) * std::log(t) - t + std::log(a);
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; m++) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("incomplete_beta: a, b must be positive");
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete_beta: x must be in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double ln_bt = log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(x) +
                 b * std::log(1.0 - x);
  double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
  return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_tailed_p(double t, int df) {
  if (df < 1) throw std::invalid_argument("student_t_two_tailed_p: df must be >= 1");
  if (std::isinf(t)) return 0.0;
  double d = static_cast<double>(df);
  double x = d / (d + t * t);
  return incomplete_beta(d / 2.0, 0.5, x);
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("paired_t_test: vectors must have equal length");
  size_t n = a.size();
  if (n < 2) throw std::invalid_argument("paired_t_test: need at least 2 pairs");
  double mean = 0.0;
  for (size_t i = 0; i < n; i++) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (size_t i = 0; i < n; i++) {
    double d = (a[i] - b[i]) - mean;
    ss += d * d;
  }
  double var = ss / static_cast<double>(n - 1);
  TTestResult out;
  if (var == 0.0) {
    if (mean == 0.0) {
      out.t = 0.0;
      out.p = 1.0;
      out.significant_at_95 = false;
    } else {
      out.t = mean > 0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
      out.p = 0.0;
      out.significant_at_95 = true;
    }
    return out;
  }
  out.t = mean / std::sqrt(var / static_cast<double>(n));
  out.p = student_t_two_tailed_p(out.t, static_cast<int>(n - 1));
  out.significant_at_95 = out.p < 0.05;
  return out;
}

MetricReport evaluate_runs(const std::vector<RunList>& runs, const Qrels& qrels) {
  MetricReport report;
  double ap_sum = 0.0, p20_sum = 0.0, ndcg_sum = 0.0;
  size_t ap_n = 0, ndcg_n = 0;
  for (const auto& run : runs) {
    QueryMetrics qm;
    qm.query_id = run.query_id;
    qm.ap = average_precision(run, qrels);
    qm.p20 = precision_at(run, qrels, 20);
    qm.ndcg20 = ndcg_at(run, qrels, 20);
    if (qm.ap) {
      ap_sum += *qm.ap;
      ap_n++;
    } else {
      report.map_excluded++;
    }
    if (qm.ndcg20) {
      ndcg_sum += *qm.ndcg20;
      ndcg_n++;
    } else {
      report.ndcg_excluded++;
    }
    p20_sum += qm.p20;
    report.per_query.push_back(std::move(qm));
  }
  report.query_count = runs.size();
  report.map = ap_n ? ap_sum / static_cast<double>(ap_n) : 0.0;
  report.mean_p20 = runs.empty() ? 0.0 : p20_sum / static_cast<double>(runs.size());
  report.mean_ndcg20 = ndcg_n ? ndcg_sum / static_cast<double>(ndcg_n) : 0.0;
  return report;
}

void write_report_table(std::ostream& out, const MetricReport& report) {
  char buf[128];
  size_t qw = 5;
  for (const auto& qm : report.per_query) qw = std::max(qw, qm.query_id.size());
  std::snprintf(buf, sizeof buf, "%-*s  %10s  %10s  %10s\n", static_cast<int>(qw), "query",
                "AP", "P@20", "NDCG@20");
  out << buf;
  auto fmt = [&](const std::optional<double>& v) -> std::string {
    if (!v) return "-";
    char num[32];
    std::snprintf(num, sizeof num, "%.4f", *v);
    return num;
  };
  for (const auto& qm : report.per_query) {
    std::snprintf(buf, sizeof buf, "%-*s  %10s  %10.4f  %10s\n", static_cast<int>(qw),
                  qm.query_id.c_str(), fmt(qm.ap).c_str(), qm.p20, fmt(qm.ndcg20).c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%-*s  %10.4f  %10.4f  %10.4f\n", static_cast<int>(qw), "all",
                report.map, report.mean_p20, report.mean_ndcg20);
  out << buf;
  if (report.map_excluded || report.ndcg_excluded) {
    out << "excluded: " << report.map_excluded << " from MAP, " << report.ndcg_excluded
        << " from NDCG@20\n";
  }
}

void write_report_jsonl(std::ostream& out, const MetricReport& report) {
  for (const auto& qm : report.per_query) {
    nlohmann::json row;
    row["query_id"] = qm.query_id;
    if (qm.ap)
      row["ap"] = *qm.ap;
    else
      row["ap"] = nullptr;
    row["p20"] = qm.p20;
    if (qm.ndcg20)
      row["ndcg20"] = *qm.ndcg20;
    else
      row["ndcg20"] = nullptr;
    out << row.dump() << "\n";
  }
  nlohmann::json all;
  all["query_id"] = "all";
  all["map"] = report.map;
  all["p20"] = report.mean_p20;
  all["ndcg20"] = report.mean_ndcg20;
  all["query_count"] = report.query_count;
  all["map_excluded"] = report.map_excluded;
  all["ndcg_excluded"] = report.ndcg_excluded;
  out << all.dump() << "\n";
}

}  // namespace nprf
