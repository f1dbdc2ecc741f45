#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "clir/eval.hpp"
#include "clir/rng.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace clir;
using retrieval::ScoredRun;

namespace {

ScoredRun make_run(const std::string& tag,
                   std::map<std::string, std::vector<std::pair<std::string, double>>> scores) {
  return retrieval::run_from_scores(std::move(scores), tag);
}

}  // namespace

TEST_CASE("mean reciprocal rank of 1-based ranks") {
  const std::vector<int> ranks = {1, 2, 4};
  CHECK(eval::mrr(ranks) == doctest::Approx(0.583333).epsilon(1e-6));
  CHECK(eval::mrr(ranks) == doctest::Approx((1.0 + 0.5 + 0.25) / 3.0).epsilon(1e-15));
  CHECK_THROWS(eval::mrr(std::vector<int>{}));
  CHECK_THROWS(eval::mrr(std::vector<int>{1, 0}));
}

TEST_CASE("average precision worked example and unretrieved relevants") {
  const std::vector<std::string> ranking = {"r1", "x1", "r2", "x2", "x3"};
  CHECK(eval::average_precision(ranking, {"r1", "r2"}) ==
        doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  // A relevant document that never shows up contributes zero.
  CHECK(eval::average_precision(ranking, {"r1", "r2", "ghost"}) ==
        doctest::Approx(5.0 / 9.0).epsilon(1e-12));
  CHECK(eval::average_precision(ranking, {"ghost"}) == 0.0);
  CHECK_THROWS(eval::average_precision(ranking, {}));
}

TEST_CASE("map and gmap worked example") {
  const std::vector<double> aps = {0.04, 1.0};
  const auto mg = eval::map_gmap(aps);
  CHECK(mg.map == doctest::Approx(0.52).epsilon(1e-12));
  CHECK(mg.gmap == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("gmap never exceeds map and any zero AP pins it to zero") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> aps;
    for (int i = 0; i < 8; ++i) aps.push_back(rng.uniform());
    const auto mg = eval::map_gmap(aps);
    CHECK(mg.gmap <= mg.map + 1e-12);
    aps[3] = 0.0;
    CHECK(eval::map_gmap(aps).gmap == 0.0);
  }
  CHECK_THROWS(eval::map_gmap(std::vector<double>{}));
  CHECK_THROWS(eval::map_gmap(std::vector<double>{1.5}));
}

TEST_CASE("paired t test worked example at three pairs") {
  const std::vector<double> a = {2.0, 4.0, 6.0};
  const std::vector<double> b = {1.0, 2.0, 3.0};  // differences 1, 2, 3
  const auto res = eval::paired_t_test(a, b);
  CHECK(!res.degenerate);
  CHECK(res.t == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-12));
  CHECK(res.t == doctest::Approx(3.464102).epsilon(1e-6));
  // df = 2 has the closed form  p = 1 - t / sqrt(t^2 + 2).
  const double expect = 1.0 - res.t / std::sqrt(res.t * res.t + 2.0);
  CHECK(res.p == doctest::Approx(expect).epsilon(1e-9));
  CHECK(res.p == doctest::Approx(0.074180).epsilon(1e-6));
}

TEST_CASE("paired t test is antisymmetric in its arguments") {
  const std::vector<double> a = {0.31, 0.55, 0.21, 0.90, 0.48};
  const std::vector<double> b = {0.28, 0.61, 0.11, 0.85, 0.47};
  const auto ab = eval::paired_t_test(a, b);
  const auto ba = eval::paired_t_test(b, a);
  CHECK(ab.t == -ba.t);
  CHECK(ab.p == ba.p);
}

TEST_CASE("paired t test flags degenerate difference vectors") {
  // dyadic values keep the pairwise differences exactly equal
  const std::vector<double> base = {0.25, 0.5, 0.75};
  std::vector<double> shifted = base;
  for (auto& x : shifted) x += 0.5;
  const auto res = eval::paired_t_test(shifted, base);
  CHECK(res.degenerate);
  CHECK(res.p == 0.0);
  CHECK(std::isinf(res.t));
  CHECK(res.t > 0.0);

  const auto same = eval::paired_t_test(base, base);
  CHECK(same.degenerate);
  CHECK(same.p == 1.0);
  CHECK(same.t == 0.0);

  CHECK_THROWS(eval::paired_t_test(base, std::vector<double>{1.0}));
  CHECK_THROWS(eval::paired_t_test(std::vector<double>{1.0}, std::vector<double>{2.0}));
}

TEST_CASE("student t cdf at low degrees of freedom") {
  // df 1 is the Cauchy distribution: F(1) = 1/2 + atan(1)/pi = 3/4.
  CHECK(eval::student_t_cdf(1.0, 1.0) == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(eval::student_t_cdf(0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  // df 2: F(t) = 1/2 + t / (2 sqrt(t^2 + 2)).
  CHECK(eval::student_t_cdf(1.0, 2.0) ==
        doctest::Approx(0.5 + 1.0 / (2.0 * std::sqrt(3.0))).epsilon(1e-9));
  CHECK(eval::student_t_cdf(-2.5, 4.0) ==
        doctest::Approx(1.0 - eval::student_t_cdf(2.5, 4.0)).epsilon(1e-12));
}

TEST_CASE("qrels parsing binarizes judgments and lets later lines win") {
  std::istringstream in(
      "q1 0 d1 1\n"
      "q1 0 d2 0\n"
      "q1 0 d3 2\n"
      "\n"
      "q2 0 d1 1\n"
      "q2 0 d1 0\n");
  const auto qrels = eval::read_qrels(in);
  CHECK(qrels.relevant.at("q1") == std::set<std::string>{"d1", "d3"});
  CHECK(qrels.relevant.at("q2").empty());

  std::istringstream bad("q1 0 d1\n");
  CHECK_THROWS(eval::read_qrels(bad));
}

TEST_CASE("evaluate_run aggregates per-query metrics and bookkeeping") {
  const auto run = make_run("t", {{"q1", {{"d1", 0.9}, {"d2", 0.5}, {"d3", 0.1}}},
                                  {"q2", {{"d1", 1.0}}}});
  std::istringstream in(
      "q1 0 d2 1\n"
      "q3 0 d9 1\n");
  const auto qrels = eval::read_qrels(in);
  const auto report = eval::evaluate_run(run, qrels);
  CHECK(report.queries_evaluated == 1);
  CHECK(report.queries_without_judgments == 1);  // q2
  CHECK(report.queries_missing_from_run == 1);   // q3
  CHECK(report.reciprocal_rank.at("q1") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(report.avg_precision.at("q1") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(report.mrr == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(report.map == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("mate harness ranks each pair's target document") {
  const auto run = make_run("t", {{"q1", {{"m1", 0.9}, {"x", 0.5}}},
                                  {"q2", {{"x", 0.9}, {"y", 0.5}, {"m2", 0.1}}},
                                  {"q3", {{"x", 1.0}}}});
  const std::vector<MatePair> mates = {{"q1", "m1"}, {"q2", "m2"}, {"q3", "m3"}};
  const auto report = eval::mate_harness(run, mates);
  CHECK(report.queries_evaluated == 3);
  CHECK(report.reciprocal_rank.at("q1") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.reciprocal_rank.at("q2") == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(report.reciprocal_rank.at("q3") == 0.0);
  CHECK(report.targets_not_retrieved == 1);
  // One relevant document per query makes AP coincide with reciprocal rank.
  CHECK(report.avg_precision.at("q2") == report.reciprocal_rank.at("q2"));
  CHECK(report.mrr == doctest::Approx((1.0 + 1.0 / 3.0) / 3.0).epsilon(1e-12));

  const std::vector<MatePair> unmatched = {{"q1", "m1"}, {"qz", "m"}, {"qy", "m"}};
  CHECK_THROWS_WITH_AS(eval::mate_harness(run, unmatched), doctest::Contains("qz"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(eval::mate_harness(run, unmatched), doctest::Contains("qy"),
                       std::invalid_argument);
  CHECK_THROWS(eval::mate_harness(run, std::vector<MatePair>{}));
}

TEST_CASE("report serialization carries every query plus a summary row") {
  const auto run = make_run("t", {{"q1", {{"m1", 0.9}}}, {"q2", {{"m2", 0.9}}}});
  const std::vector<MatePair> mates = {{"q1", "m1"}, {"q2", "m2"}};
  const auto report = eval::mate_harness(run, mates);

  std::ostringstream out;
  eval::write_report_csv(report, out);
  const std::string csv = out.str();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 2 queries + ALL
  CHECK(csv.find("query,reciprocal_rank,avg_precision") == 0);
  CHECK(csv.find("ALL,1,1") != std::string::npos);

  const auto text = eval::format_report(report);
  CHECK(text.find("queries=2") != std::string::npos);
  CHECK(text.find("mrr=1.0000") != std::string::npos);
  CHECK(text.find("gmap=1.0000") != std::string::npos);
}
