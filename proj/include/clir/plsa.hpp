#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "clir/corpus.hpp"

namespace clir::plsa {

/// In multilingual mode word emissions are normalized within each
/// (topic, language) group, so every language keeps probability mass in every
/// topic. Standard mode treats the whole vocabulary as one group.
enum class Mode { kMultilingual, kStandard };

struct PlsaConfig {
  int topics = 10;
  int iterations = 100;
  std::uint64_t seed = 0;
  Mode mode = Mode::kMultilingual;
};

struct PlsaModel {
  PlsaConfig config;
  std::size_t num_docs = 0;
  std::size_t vocab_size = 0;
  std::size_t num_languages = 1;
  std::vector<std::string> doc_ids;
  std::vector<std::uint16_t> term_language;  // all zero in standard mode

  /// P(d, l): joint of document and language, row-major docs x languages.
  /// Fixed in closed form from the counts, never re-estimated.
  std::vector<double> doc_language_prob;
  /// P(w | z, s(w)): vocab_size x topics, each (topic, language) column group
  /// sums to one.
  std::vector<double> word_given_topic;
  /// P(z | d): num_docs x topics rows summing to one.
  std::vector<double> topic_given_doc;

  std::vector<double> ll_trace;  // data log-likelihood entering each sweep

  std::size_t posterior_fallbacks = 0;  // zero-mass posteriors replaced by uniform
  std::size_t emission_fallbacks = 0;   // zero-mass (topic, language) groups
  std::size_t empty_doc_fallbacks = 0;  // empty docs given uniform mixtures
  std::uint64_t posterior_cells = 0;    // K-sized work units, for cost accounting

  std::span<const double> doc_topics(std::size_t doc) const;
  std::span<const double> word_topics(TermId term) const;
  std::size_t doc_index_of(std::string_view doc_id) const;  // throws if unknown
};

/// Per-cell posteriors P(z | d, w), laid out doc-major in corpus cell order:
/// values[cell * topics + k] for the cell-th stored (doc, term) pair.
struct Posteriors {
  int topics = 0;
  std::vector<double> values;
  double log_likelihood = 0.0;  // of the parameters the E-step was run with
};

using IterationCallback = std::function<void(const PlsaModel& model, int iteration)>;

/// EM training. Parameters are Dirichlet-initialized from the seed; the
/// language marginals come from the counts and stay fixed. The callback runs
/// after each M-step.
PlsaModel train(const MultilingualCorpus& corpus, const PlsaConfig& cfg,
                const IterationCallback& on_iteration = {});

/// E-step: posteriors for every stored cell, plus the log-likelihood of the
/// supplied model on the corpus. Cost is linear in nnz * topics.
Posteriors compute_posteriors(const PlsaModel& model, const MultilingualCorpus& corpus);

/// M-step for P(w | z, s(w)); group structure follows the model's mode.
std::vector<double> reestimate_word_emissions(const PlsaModel& model,
                                              const MultilingualCorpus& corpus,
                                              const Posteriors& post,
                                              std::size_t* fallbacks = nullptr);

/// M-step for P(z | d).
std::vector<double> reestimate_doc_topics(const PlsaModel& model,
                                          const MultilingualCorpus& corpus,
                                          const Posteriors& post,
                                          std::size_t* fallbacks = nullptr);

/// Sum over cells of n(d, w) * log p(d, w) with
/// p(d, w) = P(d, s(w)) * sum_k P(w | z_k, s(w)) P(z_k | d).
double log_likelihood(const PlsaModel& model, const MultilingualCorpus& corpus);

void write_ll_trace_csv(const PlsaModel& model, std::ostream& out);

void save_plsa(const PlsaModel& model, const std::filesystem::path& path,
               const std::vector<std::string>& languages);
PlsaModel load_plsa(const std::filesystem::path& path);

}  // namespace clir::plsa
