#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/retrieval.hpp"

namespace clir::eval {

/// Mean reciprocal rank of 1-based ranks.
double mrr(std::span<const int> ranks);

/// Average precision of one ranking against a non-empty relevant set;
/// relevant documents never retrieved contribute zero.
double average_precision(std::span<const std::string> ranking,
                         const std::set<std::string>& relevant);

struct MapGmap {
  double map = 0.0;
  double gmap = 0.0;
};

/// Arithmetic and geometric mean of per-query average precisions. Any zero
/// AP pins the geometric mean to zero.
MapGmap map_gmap(std::span<const double> aps);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  /// All score differences identical, so the statistic is degenerate.
  bool degenerate = false;
};

/// Two-sided paired t test on per-query scores.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// CDF of Student's t distribution, exposed for direct checking.
double student_t_cdf(double t, double degrees_of_freedom);

struct Qrels {
  /// qid → relevant doc ids (graded judgments binarized at rel > 0)
  std::map<std::string, std::set<std::string>> relevant;
};

/// "qid 0 docid rel" lines; later duplicates overwrite earlier ones.
Qrels read_qrels(std::istream& in);
Qrels read_qrels_file(const std::filesystem::path& path);

struct EvalReport {
  std::map<std::string, double> reciprocal_rank;
  std::map<std::string, double> avg_precision;
  double mrr = 0.0;
  double map = 0.0;
  double gmap = 0.0;
  std::size_t queries_evaluated = 0;
  std::size_t queries_without_judgments = 0;  // in the run but not the qrels
  std::size_t queries_missing_from_run = 0;   // judged but never ranked
  std::size_t targets_not_retrieved = 0;      // mate evaluation only
};

EvalReport evaluate_run(const retrieval::ScoredRun& run, const Qrels& qrels);

/// Mate retrieval: each pair's target is the single relevant document for its
/// query. Queries absent from the run are an error listing every offender.
EvalReport mate_harness(const retrieval::ScoredRun& run, std::span<const MatePair> mates);

void write_report_csv(const EvalReport& report, std::ostream& out);
std::string format_report(const EvalReport& report);

}  // namespace clir::eval
