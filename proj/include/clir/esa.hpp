#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/sparse.hpp"

namespace clir::esa {

struct EsaConfig {
  /// Concept vectors keep at most this many entries; the cut drops everything
  /// not strictly above the (c+1)-th largest value.
  int truncation_c = 10000;
  /// Build-time row filter: comparable docs with any side shorter than this
  /// are skipped (0 keeps everything).
  int min_doc_words_per_lang = 100;
  /// Build-time term filter within the index (1 keeps everything).
  int min_df = 2;
  /// Combine repeated query terms by occurrence count instead of as a set.
  bool bag_semantics = false;
};

struct Posting {
  std::uint32_t row;
  double weight;
};

/// One concept dimension per retained comparable document; the per-language
/// indexes share that row space, which is what makes concept vectors
/// comparable across languages.
struct EsaIndex {
  EsaConfig config;
  std::vector<std::string> languages;
  std::vector<std::string> row_doc_ids;
  std::uint32_t rows = 0;

  struct LanguageIndex {
    /// surface → postings with nonzero association strength, row-ascending
    std::unordered_map<std::string, std::vector<Posting>> postings;
    std::unordered_map<std::string, std::uint32_t> df;
  };
  std::vector<LanguageIndex> per_language;

  const LanguageIndex& language(const std::string& lang) const;
  std::size_t language_pos(const std::string& lang) const;
};

/// tf.idf association of a term with one concept document:
/// (tf / doc_len) * ln(N / df).
double association_strength(double tf, double doc_len, std::size_t num_docs, std::size_t df);

/// Builds row-aligned per-language indexes from the comparable block.
EsaIndex build_index(const MultilingualCorpus& corpus, const EsaConfig& cfg = {});

struct ConceptVector {
  SparseVec vec;
  bool empty_input = false;  // no query term was in the index vocabulary
};

/// Concept vector for a bag of surfaces: sum of the terms' posting lists
/// (distinct terms once under set semantics, weighted by multiplicity under
/// bag semantics), truncated to the strongest c entries. Ties at the cut
/// value are dropped with it.
ConceptVector text_vector(const EsaIndex& index, const std::vector<std::string>& terms,
                          const std::string& lang, int truncation_c);
ConceptVector text_vector(const EsaIndex& index, const std::vector<std::string>& terms,
                          const std::string& lang);

/// Concept vector for one corpus document's side in the given language.
ConceptVector doc_vector(const EsaIndex& index, const MultilingualCorpus& corpus,
                         const DocumentCounts& doc, const std::string& lang);

void save_esa(const EsaIndex& index, const std::filesystem::path& path);
EsaIndex load_esa(const std::filesystem::path& path);

}  // namespace clir::esa
