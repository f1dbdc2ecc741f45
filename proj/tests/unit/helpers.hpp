#pragma once

#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "clir/corpus.hpp"

namespace testutil {

/// Assembles a corpus directly from explicit (lang, surface, count) triples,
/// bypassing tokenization, so tests control the exact counts the models see.
struct CorpusBuilder {
  clir::MultilingualCorpus corpus;

  clir::TermId term(const std::string& lang, const std::string& surface) {
    const auto li = corpus.vocab.add_language(lang);
    return corpus.vocab.intern(li, surface);
  }

  clir::DocumentCounts& add_doc(
      const std::string& id, clir::Block block,
      const std::vector<std::tuple<std::string, std::string, double>>& bag) {
    std::map<clir::TermId, double> counts;
    for (const auto& [lang, surface, n] : bag) counts[term(lang, surface)] += n;
    clir::DocumentCounts doc;
    doc.id = id;
    doc.block = block;
    for (const auto& [t, n] : counts)
      if (n > 0) doc.counts.emplace_back(t, n);
    corpus.docs.push_back(std::move(doc));
    return corpus.docs.back();
  }

  void mate(const std::string& query_doc, const std::string& target_doc) {
    corpus.mates.push_back({query_doc, target_doc});
  }
};

inline clir::MultilingualCorpus corpus_from_jsonl(const std::string& jsonl,
                                                  const clir::FilterConfig& cfg = {},
                                                  std::vector<std::string> languages = {}) {
  std::istringstream in(jsonl);
  return clir::build_corpus(in, cfg, std::move(languages));
}

/// Filter config that keeps everything, for tests about model math rather
/// than corpus cleaning.
inline clir::FilterConfig keep_all() {
  clir::FilterConfig cfg;
  cfg.min_word_len = 1;
  cfg.min_global_count = 1;
  cfg.min_df = 1;
  return cfg;
}

}  // namespace testutil
