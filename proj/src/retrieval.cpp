#include "clir/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace clir::retrieval {

double cosine(const SparseVec& a, const SparseVec& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

namespace {

void sort_ranking(std::vector<std::pair<std::string, double>>& ranking) {
  std::sort(ranking.begin(), ranking.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
}

void require_same_queries(const ScoredRun& a, const ScoredRun& b) {
  std::vector<std::string> only_a, only_b;
  for (const auto& [q, r] : a.rankings)
    if (!b.rankings.count(q)) only_a.push_back(q);
  for (const auto& [q, r] : b.rankings)
    if (!a.rankings.count(q)) only_b.push_back(q);
  if (only_a.empty() && only_b.empty()) return;
  std::string msg = "runs cover different queries;";
  if (!only_a.empty()) {
    msg += " only in first:";
    for (const auto& q : only_a) msg += " " + q;
  }
  if (!only_b.empty()) {
    msg += " only in second:";
    for (const auto& q : only_b) msg += " " + q;
  }
  throw std::invalid_argument(msg);
}

}  // namespace

ScoredRun rank_cosine(const std::vector<std::pair<std::string, SparseVec>>& queries,
                      const std::vector<std::pair<std::string, SparseVec>>& candidates,
                      const std::string& tag, int threads) {
  if (candidates.empty()) throw std::invalid_argument("rank_cosine: no candidate documents");
  {
    std::set<std::string> ids;
    for (const auto& [id, v] : candidates)
      if (!ids.insert(id).second)
        throw std::invalid_argument("rank_cosine: duplicate candidate id '" + id + "'");
    ids.clear();
    for (const auto& [id, v] : queries)
      if (!ids.insert(id).second)
        throw std::invalid_argument("rank_cosine: duplicate query id '" + id + "'");
  }

  std::vector<std::vector<std::pair<std::string, double>>> results(queries.size());
  auto score_query = [&](std::size_t qi) {
    auto& out = results[qi];
    out.reserve(candidates.size());
    for (const auto& [doc_id, doc_vec] : candidates)
      out.emplace_back(doc_id, cosine(queries[qi].second, doc_vec));
    sort_ranking(out);
  };

  const int worker_count = std::max(1, threads);
  if (worker_count == 1 || queries.size() <= 1) {
    for (std::size_t qi = 0; qi < queries.size(); ++qi) score_query(qi);
  } else {
    std::vector<std::thread> workers;
    std::size_t next = 0;
    const std::size_t chunk = (queries.size() + worker_count - 1) / worker_count;
    for (int w = 0; w < worker_count && next < queries.size(); ++w) {
      const std::size_t begin = next;
      const std::size_t end = std::min(queries.size(), begin + chunk);
      next = end;
      workers.emplace_back([&, begin, end] {
        for (std::size_t qi = begin; qi < end; ++qi) score_query(qi);
      });
    }
    for (auto& t : workers) t.join();
  }

  ScoredRun run;
  run.tag = tag;
  for (std::size_t qi = 0; qi < queries.size(); ++qi)
    run.rankings.emplace(queries[qi].first, std::move(results[qi]));
  return run;
}

SparseVec tfidf_vector(const DfStats& stats, std::span<const std::pair<TermId, double>> bag,
                       std::size_t* skipped) {
  double len = 0.0;
  for (const auto& [t, c] : bag) {
    if (c <= 0.0) throw std::invalid_argument("tfidf_vector: counts must be positive");
    len += c;
  }
  std::vector<SparseVec::Entry> entries;
  std::size_t missed = 0;
  for (const auto& [t, c] : bag) {
    const auto w = stats.idf_opt(t);
    if (!w) {
      ++missed;
      continue;
    }
    entries.emplace_back(t, c / len * *w);
  }
  if (skipped) *skipped = missed;
  return SparseVec::from_unsorted(std::move(entries));
}

ScoredRun interp_scores(const ScoredRun& a, const ScoredRun& b, double alpha,
                        const std::string& tag) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("interp_scores: alpha must be in [0, 1]");
  require_same_queries(a, b);
  ScoredRun out;
  out.tag = tag;
  for (const auto& [q, ra] : a.rankings) {
    const auto& rb = b.rankings.at(q);
    std::map<std::string, double> merged;
    for (const auto& [doc, s] : ra) merged[doc] += alpha * s;
    for (const auto& [doc, s] : rb) merged[doc] += (1.0 - alpha) * s;
    std::vector<std::pair<std::string, double>> ranking(merged.begin(), merged.end());
    sort_ranking(ranking);
    out.rankings.emplace(q, std::move(ranking));
  }
  return out;
}

ScoredRun concat_scores(const ScoredRun& a, const ScoredRun& b, double alpha,
                        const std::string& tag) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("concat_scores: alpha must be in [0, 1]");
  require_same_queries(a, b);
  // Cosine over the concatenation of alpha-scaled unit vectors: the squared
  // weights fall out of the dot product and the shared norm.
  const double wa = alpha * alpha;
  const double wb = (1.0 - alpha) * (1.0 - alpha);
  const double norm = wa + wb;
  ScoredRun out;
  out.tag = tag;
  for (const auto& [q, ra] : a.rankings) {
    const auto& rb = b.rankings.at(q);
    std::map<std::string, double> merged;
    for (const auto& [doc, s] : ra) merged[doc] += wa * s;
    for (const auto& [doc, s] : rb) merged[doc] += wb * s;
    std::vector<std::pair<std::string, double>> ranking;
    ranking.reserve(merged.size());
    for (const auto& [doc, s] : merged) ranking.emplace_back(doc, s / norm);
    sort_ranking(ranking);
    out.rankings.emplace(q, std::move(ranking));
  }
  return out;
}

ScoredRun average_runs(std::span<const ScoredRun> runs, const std::string& tag) {
  if (runs.empty()) throw std::invalid_argument("average_runs: no runs");
  for (std::size_t i = 1; i < runs.size(); ++i) require_same_queries(runs[0], runs[i]);
  ScoredRun out;
  out.tag = tag;
  const double k = static_cast<double>(runs.size());
  for (const auto& [q, first] : runs[0].rankings) {
    std::map<std::string, double> merged;
    for (const auto& run : runs)
      for (const auto& [doc, s] : run.rankings.at(q)) merged[doc] += s;
    std::vector<std::pair<std::string, double>> ranking;
    ranking.reserve(merged.size());
    for (const auto& [doc, s] : merged) ranking.emplace_back(doc, s / k);
    sort_ranking(ranking);
    out.rankings.emplace(q, std::move(ranking));
  }
  return out;
}

double ql_lda(std::span<const std::pair<TermId, double>> query, const lda::LdaModel& model,
              const lda::TopicStats& doc_stats, std::size_t* skipped) {
  const auto T = static_cast<std::size_t>(model.config.topics);
  if (doc_stats.counts.size() != T)
    throw std::invalid_argument("ql_lda: document stats topic dimension mismatch");
  const auto theta = lda::theta_hat(doc_stats, model.config.resolved_alpha());
  double ll = 0.0;
  std::size_t missed = 0;
  for (const auto& [t, c] : query) {
    if (c <= 0.0) throw std::invalid_argument("ql_lda: counts must be positive");
    if (t >= model.vocab_size) {
      ++missed;
      continue;
    }
    double p = 0.0;
    for (std::size_t j = 0; j < T; ++j)
      p += model.phi_hat(t, static_cast<int>(j)) * theta[j];
    ll += c * std::log(p);
  }
  if (skipped) *skipped = missed;
  return ll;
}

double ql_link(const link::Bag& query, const link::LinkTranslationModel& model,
               const link::Bag& article_dist, bool weighted,
               const link::LinkTranslationModel* weight_model) {
  const auto& weights = weight_model ? *weight_model : model;
  double ll = 0.0;
  for (const auto& [w, c] : query) {
    if (c <= 0.0) throw std::invalid_argument("ql_link: counts must be positive");
    const double p = link::link_lm_prob(model, w, article_dist);
    const double factor = weighted ? weights.p_linked(w) : 1.0;
    ll += c * factor * std::log(p);
  }
  return ll;
}

double combine_query_level(double link_ll, double lda_ll, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("combine_query_level: alpha must be in [0, 1]");
  return alpha * link_ll + (1.0 - alpha) * lda_ll;
}

double combine_word_level(std::span<const WordQuery> query,
                          const link::LinkTranslationModel& link_model,
                          const link::Bag& article_dist, const lda::LdaModel& lda_model,
                          const lda::TopicStats& doc_stats, double alpha, double beta,
                          const link::LinkTranslationModel* weight_model,
                          std::size_t* skipped) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw std::invalid_argument(
        "combine_word_level: alpha must be in [0, 1); the topic model component keeps the "
        "log argument positive");
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::invalid_argument("combine_word_level: beta must be in [0, 1]");
  const auto T = static_cast<std::size_t>(lda_model.config.topics);
  if (doc_stats.counts.size() != T)
    throw std::invalid_argument("combine_word_level: document stats topic dimension mismatch");
  const auto theta = lda::theta_hat(doc_stats, lda_model.config.resolved_alpha());
  const auto& weights = weight_model ? *weight_model : link_model;

  double ll = 0.0;
  std::size_t missed = 0;
  for (const auto& wq : query) {
    if (wq.count <= 0.0)
      throw std::invalid_argument("combine_word_level: counts must be positive");
    if (wq.lda_term == kInvalidTerm || wq.lda_term >= lda_model.vocab_size) {
      ++missed;
      continue;
    }
    const double p_link = link::chain_prob(link_model, wq.surface, article_dist);
    double p_lda = 0.0;
    for (std::size_t j = 0; j < T; ++j)
      p_lda += lda_model.phi_hat(wq.lda_term, static_cast<int>(j)) * theta[j];
    const double p_linked_word = weights.p_linked(wq.surface);
    ll += wq.count * (beta * p_linked_word + (1.0 - beta)) *
          std::log(alpha * p_link + (1.0 - alpha) * p_lda);
  }
  if (skipped) *skipped = missed;
  return ll;
}

GridResult grid_search(const std::function<double(double, double)>& evaluate, double alpha_lo,
                       double alpha_hi, double beta_lo, double beta_hi, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid_search: step must be positive");
  if (alpha_hi < alpha_lo || beta_hi < beta_lo)
    throw std::invalid_argument("grid_search: empty range");
  const auto steps_of = [step](double lo, double hi) {
    return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  };
  const std::size_t na = steps_of(alpha_lo, alpha_hi);
  const std::size_t nb = steps_of(beta_lo, beta_hi);

  GridResult res;
  res.surface.reserve(na * nb);
  bool first = true;
  for (std::size_t i = 0; i < na; ++i) {
    const double a = alpha_lo + static_cast<double>(i) * step;
    for (std::size_t j = 0; j < nb; ++j) {
      const double b = beta_lo + static_cast<double>(j) * step;
      const double score = evaluate(a, b);
      res.surface.push_back({a, b, score});
      // strict improvement keeps the smallest alpha, then beta, on ties
      if (first || score > res.best_score) {
        first = false;
        res.best_alpha = a;
        res.best_beta = b;
        res.best_score = score;
      }
    }
  }
  return res;
}

void write_grid_csv(const GridResult& grid, std::ostream& out) {
  out << "alpha,beta,score\n";
  char buf[96];
  for (const auto& p : grid.surface) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.17g\n", p.alpha, p.beta, p.score);
    out << buf;
  }
}

ScoredRun run_from_scores(
    std::map<std::string, std::vector<std::pair<std::string, double>>> scores,
    const std::string& tag) {
  ScoredRun run;
  run.tag = tag;
  for (auto& [qid, ranking] : scores) {
    sort_ranking(ranking);
    run.rankings.emplace(qid, std::move(ranking));
  }
  return run;
}

void write_trec_run(const ScoredRun& run, std::ostream& out) {
  char buf[64];
  for (const auto& [qid, ranking] : run.rankings) {
    int rank = 1;
    for (const auto& [doc, score] : ranking) {
      std::snprintf(buf, sizeof(buf), " %d %.6f ", rank, score);
      out << qid << " Q0 " << doc << buf << run.tag << "\n";
      ++rank;
    }
  }
}

ScoredRun read_trec_run(std::istream& in) {
  ScoredRun run;
  std::map<std::string, std::vector<std::pair<int, std::pair<std::string, double>>>> acc;
  std::string line;
  std::size_t line_no = 0;
  bool tag_set = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string qid, q0, doc, tag;
    int rank;
    double score;
    if (!(ss >> qid >> q0 >> doc >> rank >> score >> tag))
      throw std::runtime_error("run file line " + std::to_string(line_no) +
                               ": expected 'qid Q0 docid rank score tag'");
    if (q0 != "Q0" && q0 != "0")
      throw std::runtime_error("run file line " + std::to_string(line_no) +
                               ": second column must be Q0");
    acc[qid].emplace_back(rank, std::make_pair(doc, score));
    if (!tag_set) {
      run.tag = tag;
      tag_set = true;
    }
  }
  for (auto& [qid, entries] : acc) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& ranking = run.rankings[qid];
    ranking.reserve(entries.size());
    for (auto& [rank, entry] : entries) ranking.push_back(std::move(entry));
  }
  return run;
}

}  // namespace clir::retrieval
