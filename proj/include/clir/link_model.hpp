#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "clir/corpus.hpp"

namespace clir::link {

/// Term bag keyed by surface form; ordered so accumulation is deterministic.
using Bag = std::map<std::string, double>;

/// Raw co-occurrence counts harvested from token and article events.
struct LinkStatistics {
  std::string source_lang;
  std::string target_lang;
  std::map<std::string, std::int64_t> word_total;          // n(w)
  std::map<std::string, std::int64_t> word_linked;         // n(linked, w)
  std::map<std::string, std::map<std::string, std::int64_t>> word_article;  // w → a → n(a, w)
  std::map<std::string, std::map<std::string, std::int64_t>> article_term;  // a → f → n(f, a)
  std::map<std::string, std::int64_t> article_total;       // n(a)
  std::size_t target_vocab = 0;                            // V
  std::int64_t max_article_total = 0;
};

/// Maximum-likelihood translation model over anchor links:
///   P(linked | w)        = n(linked, w) / n(w)
///   P(a | linked, w)     = n(a, w) / n(linked, w)
///   P(f | a)             = n(f, a) / n(a)
/// with the unseen-event floor P_min = 1 / (max_a n(a) + V).
class LinkTranslationModel {
 public:
  explicit LinkTranslationModel(LinkStatistics stats);

  double p_linked(const std::string& word) const;  // 0 for unseen words
  double p_article_given_linked(const std::string& article, const std::string& word) const;
  double p_target_given_article(const std::string& target_term,
                                const std::string& article) const;
  double floor_prob() const { return floor_; }
  const LinkStatistics& stats() const { return stats_; }

 private:
  LinkStatistics stats_;
  double floor_ = 0.0;
};

/// Reads link events as JSON lines. Two record kinds:
///   {"kind":"tokens","lang":L,"tokens":[{"t":word,"a":article-or-null},...]}
///   {"kind":"article","id":A,"lang":L,"text":...}
/// Token words and article text run through the corpus tokenizer with the
/// same filter config; multi-word anchors become independent events. Articles
/// referenced by a link must have non-empty text.
LinkTranslationModel estimate(std::istream& events_jsonl, const FilterConfig& cfg = {},
                              const Stemmer& stem = {});
LinkTranslationModel estimate_file(const std::filesystem::path& path,
                                   const FilterConfig& cfg = {}, const Stemmer& stem = {});

/// Distribution over articles given a source-side document:
///   P(a | D, linked) ∝ P(a | linked, w) P(linked | w) P(w | D).
/// Throws if the document has no linked mass.
Bag article_distribution(const LinkTranslationModel& model, const Bag& doc);

/// Target-word translation mass of a document, chained through articles. The
/// unnormalized version sums to the document's linked mass; normalized it is
/// P(f | D, linked). Normalizing a zero-mass document throws.
Bag translation_distribution(const LinkTranslationModel& model, const Bag& doc,
                             bool normalized);

/// Unfloored P(f | D, linked) for one target term against a precomputed
/// article distribution.
double chain_prob(const LinkTranslationModel& model, const std::string& target_term,
                  const Bag& article_dist);

/// Floored document model max(chain_prob, P_min).
double link_lm_prob(const LinkTranslationModel& model, const std::string& target_term,
                    const Bag& article_dist);

/// Query translation: normalized translation distribution scaled to
/// pseudo-counts (count = scale * P), keeping entries with count >= threshold.
/// Zero linked mass yields an empty bag and sets the warning flag.
Bag translate_query(const LinkTranslationModel& model, const Bag& query,
                    double threshold = 1.0, double scale = 100.0,
                    bool* zero_mass_warning = nullptr);

void save_link(const LinkTranslationModel& model, const std::filesystem::path& path);
LinkTranslationModel load_link(const std::filesystem::path& path);

}  // namespace clir::link
