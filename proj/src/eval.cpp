#include "clir/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace clir::eval {

double mrr(std::span<const int> ranks) {
  if (ranks.empty()) throw std::invalid_argument("mrr: no ranks");
  double acc = 0.0;
  for (int r : ranks) {
    if (r < 1) throw std::invalid_argument("mrr: ranks are 1-based");
    acc += 1.0 / static_cast<double>(r);
  }
  return acc / static_cast<double>(ranks.size());
}

double average_precision(std::span<const std::string> ranking,
                         const std::set<std::string>& relevant) {
  if (relevant.empty()) throw std::invalid_argument("average_precision: empty relevant set");
  double acc = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    if (relevant.count(ranking[k])) {
      ++hits;
      acc += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return acc / static_cast<double>(relevant.size());
}

MapGmap map_gmap(std::span<const double> aps) {
  if (aps.empty()) throw std::invalid_argument("map_gmap: no values");
  MapGmap out;
  double log_acc = 0.0;
  bool any_zero = false;
  for (double ap : aps) {
    if (ap < 0.0 || ap > 1.0) throw std::invalid_argument("map_gmap: AP out of [0, 1]");
    out.map += ap;
    if (ap == 0.0)
      any_zero = true;
    else
      log_acc += std::log(ap);
  }
  out.map /= static_cast<double>(aps.size());
  out.gmap = any_zero ? 0.0 : std::exp(log_acc / static_cast<double>(aps.size()));
  return out;
}

double student_t_cdf(double t, double degrees_of_freedom) {
  boost::math::students_t dist(degrees_of_freedom);
  return boost::math::cdf(dist, t);
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("paired_t_test: score vectors differ in length");
  const std::size_t n = a.size();
  if (n < 2) throw std::invalid_argument("paired_t_test: need at least two pairs");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);
  const double sd = std::sqrt(var);

  TTestResult res;
  if (sd == 0.0) {
    res.degenerate = true;
    if (mean == 0.0) {
      res.t = 0.0;
      res.p = 1.0;
    } else {
      res.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
      res.p = 0.0;
    }
    return res;
  }
  res.t = mean * std::sqrt(static_cast<double>(n)) / sd;
  res.p = 2.0 * (1.0 - student_t_cdf(std::abs(res.t), static_cast<double>(n - 1)));
  return res;
}

Qrels read_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string qid, iter, doc;
    int rel;
    if (!(ss >> qid >> iter >> doc >> rel))
      throw std::runtime_error("qrels line " + std::to_string(line_no) +
                               ": expected 'qid 0 docid rel'");
    if (rel > 0)
      qrels.relevant[qid].insert(doc);
    else
      qrels.relevant[qid].erase(doc);
  }
  return qrels;
}

Qrels read_qrels_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open qrels file: " + path.string());
  return read_qrels(in);
}

namespace {

void finish_report(EvalReport& report) {
  if (report.avg_precision.empty()) return;
  std::vector<double> aps, rrs;
  for (const auto& [q, ap] : report.avg_precision) aps.push_back(ap);
  for (const auto& [q, rr] : report.reciprocal_rank) rrs.push_back(rr);
  const auto mg = map_gmap(aps);
  report.map = mg.map;
  report.gmap = mg.gmap;
  double acc = 0.0;
  for (double rr : rrs) acc += rr;
  report.mrr = acc / static_cast<double>(rrs.size());
  report.queries_evaluated = report.avg_precision.size();
}

}  // namespace

EvalReport evaluate_run(const retrieval::ScoredRun& run, const Qrels& qrels) {
  EvalReport report;
  for (const auto& [qid, ranking] : run.rankings) {
    auto it = qrels.relevant.find(qid);
    if (it == qrels.relevant.end() || it->second.empty()) {
      ++report.queries_without_judgments;
      continue;
    }
    std::vector<std::string> docs;
    docs.reserve(ranking.size());
    for (const auto& [doc, score] : ranking) docs.push_back(doc);
    report.avg_precision[qid] = average_precision(docs, it->second);
    double rr = 0.0;
    for (std::size_t k = 0; k < docs.size(); ++k) {
      if (it->second.count(docs[k])) {
        rr = 1.0 / static_cast<double>(k + 1);
        break;
      }
    }
    report.reciprocal_rank[qid] = rr;
  }
  for (const auto& [qid, rel] : qrels.relevant)
    if (!rel.empty() && !run.rankings.count(qid)) ++report.queries_missing_from_run;
  finish_report(report);
  return report;
}

EvalReport mate_harness(const retrieval::ScoredRun& run, std::span<const MatePair> mates) {
  if (mates.empty()) throw std::invalid_argument("mate_harness: no mate pairs");
  std::vector<std::string> missing;
  for (const auto& m : mates)
    if (!run.rankings.count(m.query_doc)) missing.push_back(m.query_doc);
  if (!missing.empty()) {
    std::string msg = "mate_harness: run is missing queries:";
    for (const auto& q : missing) msg += " " + q;
    throw std::invalid_argument(msg);
  }

  EvalReport report;
  for (const auto& m : mates) {
    const auto& ranking = run.rankings.at(m.query_doc);
    double rr = 0.0;
    for (std::size_t k = 0; k < ranking.size(); ++k) {
      if (ranking[k].first == m.target_doc) {
        rr = 1.0 / static_cast<double>(k + 1);
        break;
      }
    }
    if (rr == 0.0) ++report.targets_not_retrieved;
    report.reciprocal_rank[m.query_doc] = rr;
    // a single relevant document makes AP equal the reciprocal rank
    report.avg_precision[m.query_doc] = rr;
  }
  finish_report(report);
  return report;
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "query,reciprocal_rank,avg_precision\n";
  char buf[96];
  for (const auto& [q, rr] : report.reciprocal_rank) {
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g\n", rr, report.avg_precision.at(q));
    out << q << buf;
  }
  std::snprintf(buf, sizeof(buf), "ALL,%.17g,%.17g\n", report.mrr, report.map);
  out << buf;
}

std::string format_report(const EvalReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "queries=%zu mrr=%.4f map=%.4f gmap=%.4f unjudged=%zu missing=%zu",
                report.queries_evaluated, report.mrr, report.map, report.gmap,
                report.queries_without_judgments, report.queries_missing_from_run);
  return buf;
}

}  // namespace clir::eval
