#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/lda.hpp"
#include "clir/link_model.hpp"
#include "clir/sparse.hpp"

namespace clir::retrieval {

/// Rankings per query: docs in non-increasing score order, ties broken by
/// ascending doc id so runs are reproducible.
struct ScoredRun {
  std::string tag = "run";
  std::map<std::string, std::vector<std::pair<std::string, double>>> rankings;
};

/// Cosine similarity; any zero vector scores 0 rather than dividing by zero.
double cosine(const SparseVec& a, const SparseVec& b);

/// Ranks every candidate for every query by cosine. Queries may be scored in
/// parallel; output is independent of the thread count.
ScoredRun rank_cosine(const std::vector<std::pair<std::string, SparseVec>>& queries,
                      const std::vector<std::pair<std::string, SparseVec>>& candidates,
                      const std::string& tag, int threads = 1);

/// (tf / bag_len) * idf vector over the stats' document space. Terms unseen
/// in the stats are skipped and counted.
SparseVec tfidf_vector(const DfStats& stats, std::span<const std::pair<TermId, double>> bag,
                       std::size_t* skipped = nullptr);

/// Per-query score interpolation alpha * a + (1 - alpha) * b over the union
/// of ranked docs (missing docs contribute 0). Query sets must match.
ScoredRun interp_scores(const ScoredRun& a, const ScoredRun& b, double alpha,
                        const std::string& tag);

/// Concatenation-of-scaled-unit-vectors variant of score fusion:
/// (alpha^2 * a + (1-alpha)^2 * b) / (alpha^2 + (1-alpha)^2). Equivalent to
/// one cosine over the two alpha-scaled normalized vectors stacked end to end.
ScoredRun concat_scores(const ScoredRun& a, const ScoredRun& b, double alpha,
                        const std::string& tag);

/// Mean of k runs' scores with the same union semantics.
ScoredRun average_runs(std::span<const ScoredRun> runs, const std::string& tag);

/// Query log likelihood under an LDA document model:
/// sum_w n(w, Q) * log(sum_j psi_hat(w, j) * theta_hat(d, j)).
/// Query terms outside the model vocabulary are skipped and counted.
double ql_lda(std::span<const std::pair<TermId, double>> query, const lda::LdaModel& model,
              const lda::TopicStats& doc_stats, std::size_t* skipped = nullptr);

/// Query log likelihood under the link translation document model:
/// sum_w n(w, Q) * log(max(chain, floor)), optionally weighting each term's
/// contribution by P(linked | w) taken from weight_model (defaults to model).
double ql_link(const link::Bag& query, const link::LinkTranslationModel& model,
               const link::Bag& article_dist, bool weighted = false,
               const link::LinkTranslationModel* weight_model = nullptr);

/// Query-level combination of two document log likelihoods.
double combine_query_level(double link_ll, double lda_ll, double alpha);

/// One query word for word-level combination: the link model addresses it by
/// surface, the LDA model by term id (kInvalidTerm when out of vocabulary).
struct WordQuery {
  std::string surface;
  TermId lda_term = kInvalidTerm;
  double count = 1.0;
};

/// Word-level combination
///   sum_w n(w, Q) * [beta * P(linked | w) + (1 - beta)]
///                 * log(alpha * P_link(w | D) + (1 - alpha) * P_lda(w | D))
/// with the unfloored link chain probability; alpha must be < 1 so the LDA
/// component keeps the log argument positive. Words outside the LDA
/// vocabulary are skipped and counted.
double combine_word_level(std::span<const WordQuery> query,
                          const link::LinkTranslationModel& link_model,
                          const link::Bag& article_dist, const lda::LdaModel& lda_model,
                          const lda::TopicStats& doc_stats, double alpha, double beta,
                          const link::LinkTranslationModel* weight_model = nullptr,
                          std::size_t* skipped = nullptr);

struct GridPoint {
  double alpha = 0.0;
  double beta = 0.0;
  double score = 0.0;
};

struct GridResult {
  double best_alpha = 0.0;
  double best_beta = 0.0;
  double best_score = 0.0;
  std::vector<GridPoint> surface;  // row-major, alpha outer, beta inner
};

/// Exhaustive evaluation over the [lo, hi] x [lo, hi] grid with the given
/// step. The argmax prefers the smallest alpha, then the smallest beta, on
/// ties.
GridResult grid_search(const std::function<double(double alpha, double beta)>& evaluate,
                       double alpha_lo, double alpha_hi, double beta_lo, double beta_hi,
                       double step);

void write_grid_csv(const GridResult& grid, std::ostream& out);

/// Orders each query's scored documents into a ranking (score descending,
/// doc id ascending on ties).
ScoredRun run_from_scores(
    std::map<std::string, std::vector<std::pair<std::string, double>>> scores,
    const std::string& tag);

/// TREC format: "qid Q0 docid rank score tag".
void write_trec_run(const ScoredRun& run, std::ostream& out);
ScoredRun read_trec_run(std::istream& in);

}  // namespace clir::retrieval
