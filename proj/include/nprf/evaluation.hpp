#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nprf/first_stage.hpp"

namespace nprf {

// Relevance judgments. Grades are non-negative; absent pairs are unjudged and
// treated as grade 0 by the metrics.
class Qrels {
 public:
  void add(const std::string& query_id, const std::string& doc_id, int grade);
  int grade(std::string_view query_id, std::string_view doc_id) const;
  bool judged(std::string_view query_id, std::string_view doc_id) const;
  // doc_id -> grade for one query; nullptr when the query has no judgments.
  const std::map<std::string, int>* query_judgments(std::string_view query_id) const;
  size_t relevant_count(std::string_view query_id) const;  // grades > 0
  std::vector<std::string> query_ids() const;
  size_t size() const;

  // TREC format: `query_id 0 doc_id grade` per line.
  static Qrels load(std::istream& in);
  static Qrels load_file(const std::string& path);

 private:
  std::map<std::string, std::map<std::string, int>> judgments_;
};

inline constexpr int kMapDepth = 1000;

// AP over the top 1000 entries, divided by the query's total relevant count
// in the qrels. No relevant docs at all -> no value (query excluded).
std::optional<double> average_precision(const RunList& run, const Qrels& qrels);

// Relevant docs among the top `cutoff`, divided by cutoff even for short runs.
double precision_at(const RunList& run, const Qrels& qrels, int cutoff = 20);

// DCG with gain (2^g - 1) / log2(rank + 1), normalized by the ideal DCG over
// all judged docs. IDCG == 0 -> no value (query excluded).
std::optional<double> ndcg_at(const RunList& run, const Qrels& qrels, int cutoff = 20);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  bool significant_at_95 = false;
};

// Two-tailed paired t-test. Zero-variance diffs: nonzero mean -> t infinite,
// p = 0, significant; zero mean -> t = 0, p = 1.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// ln Gamma(x), x > 0 (Lanczos approximation).
double log_gamma(double x);
// Regularized incomplete beta I_x(a, b) via continued fraction.
double incomplete_beta(double a, double b, double x);
// Two-tailed p for Student's t with df degrees of freedom.
double student_t_two_tailed_p(double t, int df);

struct QueryMetrics {
  std::string query_id;
  std::optional<double> ap;
  double p20 = 0.0;
  std::optional<double> ndcg20;
};

struct MetricReport {
  std::vector<QueryMetrics> per_query;  // run order
  double map = 0.0;
  double mean_p20 = 0.0;
  double mean_ndcg20 = 0.0;
  size_t query_count = 0;    // evaluated runs
  size_t map_excluded = 0;   // no relevant docs
  size_t ndcg_excluded = 0;  // zero ideal DCG
};

MetricReport evaluate_runs(const std::vector<RunList>& runs, const Qrels& qrels);

// Aligned text table with one row per query plus a mean row.
void write_report_table(std::ostream& out, const MetricReport& report);
// JSON-lines: one object per query, then a summary object with query_id "all".
void write_report_jsonl(std::ostream& out, const MetricReport& report);

}  // namespace nprf
