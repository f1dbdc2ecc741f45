#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clir/corpus.hpp"

namespace clir::lda {

/// Multilingual mode smooths each word against its own language's vocabulary
/// (denominator n_t^lang + W_lang * beta); standard mode uses one global
/// vocabulary group. With a single language both modes produce identical
/// sampling traces.
enum class Mode { kStandard, kMultilingual };

struct LdaConfig {
  int topics = 10;
  double alpha = -1.0;  // negative means the 50 / topics default
  double beta = 0.1;
  int burnin_train = 100;
  int avg_train = 50;
  int burnin_infer = 10;
  int avg_infer = 5;
  std::uint64_t seed = 0;

  double resolved_alpha() const {
    return alpha < 0.0 ? 50.0 / static_cast<double>(topics) : alpha;
  }
};

struct LdaModel {
  LdaConfig config;
  Mode mode = Mode::kMultilingual;
  std::size_t vocab_size = 0;
  std::size_t num_languages = 1;
  std::vector<std::uint16_t> term_language;        // all zero in standard mode
  std::vector<std::size_t> language_vocab_sizes;   // W_l per language group

  /// Integer assignment counts after the final sweep.
  std::vector<std::int64_t> final_topic_word;    // vocab_size x topics
  std::vector<std::int64_t> final_topic_totals;  // num_languages x topics

  /// Averages over the post-burnin sweeps; these are the tables estimates
  /// and inference read.
  std::vector<double> topic_word;    // vocab_size x topics
  std::vector<double> topic_totals;  // num_languages x topics
  std::vector<double> doc_topic;     // num_docs x topics
  std::vector<std::string> doc_ids;

  /// Smoothed emission estimate (n_j^w + beta) / (n_j^lang + W_lang * beta).
  std::vector<double> phi_hat(TermId term) const;
  double phi_hat(TermId term, int topic) const;
  std::size_t doc_index_of(std::string_view doc_id) const;
};

/// Averaged topic counts for one document, the raw material for theta.
struct TopicStats {
  std::string doc_id;
  std::vector<double> counts;
  double total = 0.0;
  std::size_t skipped_terms = 0;  // tokens outside the model vocabulary
};

/// Log density of a Dirichlet(alpha) distribution at the simplex point p.
/// p must sum to 1 within 1e-9 and alpha must be positive. A zero component
/// with alpha != 1 yields -infinity (documented sentinel, not an exception).
double dirichlet_log_density(std::span<const double> p, std::span<const double> alpha);

/// Smoothed mixture estimate (counts[j] + alpha) / (total + T * alpha).
std::vector<double> theta_hat(const TopicStats& stats, double alpha);
/// Same for a training document's averaged counts.
std::vector<double> theta_hat(const LdaModel& model, std::size_t doc);

/// Inference keeps the per-position samples of every averaging sweep so
/// downstream weighting can reuse them.
struct InferenceResult {
  TopicStats stats;
  std::vector<TermId> positions;
  std::vector<std::vector<std::int32_t>> sweep_topics;  // avg sweeps x positions
};

using SweepObserver = std::function<void(int sweep, std::span<const std::int32_t> assignments)>;

/// Collapsed Gibbs training: burnin_train sweeps, then avg_train sweeps whose
/// count tables are averaged into the model. Counts must be integral. The
/// observer fires after every sweep with the flat doc-major assignment vector.
LdaModel train(const MultilingualCorpus& corpus, const LdaConfig& cfg, Mode mode,
               const SweepObserver& observer = {});

/// Gibbs inference for one held-out document against read-only model tables.
/// Entries with term ids outside the model vocabulary are skipped and counted.
InferenceResult infer(const LdaModel& model, const std::string& doc_id,
                      std::span<const std::pair<TermId, double>> counts, std::uint64_t seed);

/// Normalized topic distribution for assigning one position, all counts
/// excluding that position (the caller decrements first).
std::vector<double> sample_prob_standard(std::span<const std::int64_t> word_topic,
                                         std::span<const std::int64_t> topic_totals,
                                         std::span<const std::int64_t> doc_topic,
                                         std::int64_t doc_total, double alpha, double beta,
                                         std::size_t vocab_size);

/// Same with the word's own language group supplying totals and vocab size.
std::vector<double> sample_prob_multilingual(std::span<const std::int64_t> word_topic,
                                             std::span<const std::int64_t> language_totals,
                                             std::span<const std::int64_t> doc_topic,
                                             std::int64_t doc_total, double alpha, double beta,
                                             std::size_t language_vocab_size);

/// Re-aggregates the kept sweep samples with one weight per occurrence of a
/// term (e.g. its idf); terms without a weight contribute zero and are
/// counted. Weighted totals replace raw counts in theta.
TopicStats idf_weight_stats(const InferenceResult& result,
                            const std::function<std::optional<double>(TermId)>& weight_of,
                            std::size_t* missing_weights = nullptr);

/// One sweep's weighted aggregation: acc[topic] += weight(position).
std::vector<double> weight_topic_counts(std::span<const std::int32_t> topics,
                                        std::span<const double> weights, int num_topics);

void export_topics_csv(const LdaModel& model, const Vocabulary& vocab, int top_n,
                       std::ostream& out);

void save_lda(const LdaModel& model, const std::filesystem::path& path,
              const std::vector<std::string>& languages);
LdaModel load_lda(const std::filesystem::path& path);

}  // namespace clir::lda
