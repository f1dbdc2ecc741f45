#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "clir/corpus.hpp"
#include "clir/rng.hpp"

namespace clir {

namespace {

std::string padded(std::string_view prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%04d", std::string(prefix).c_str(), i);
  return buf;
}

// Letter-only surface so the word survives tokenization; fixed width keeps
// lexicographic order equal to numeric order.
std::string lettered(std::string_view prefix, int i) {
  std::string digits(4, 'a');
  for (int p = 3; p >= 0; --p) {
    digits[static_cast<std::size_t>(p)] = static_cast<char>('a' + i % 26);
    i /= 26;
  }
  return std::string(prefix) + digits;
}

std::vector<std::pair<TermId, double>> draw_counts(Rng& rng, const std::vector<double>& theta,
                                                   const std::vector<std::vector<double>>& phi,
                                                   TermId base, int length) {
  std::map<TermId, double> acc;
  for (int i = 0; i < length; ++i) {
    const std::size_t z = rng.categorical(theta);
    const std::size_t w = rng.categorical(phi[z]);
    acc[base + static_cast<TermId>(w)] += 1.0;
  }
  return {acc.begin(), acc.end()};
}

}  // namespace

MultilingualCorpus generate_planted_corpus(const PlantedSpec& spec) {
  if (spec.languages.size() != 2)
    throw std::invalid_argument("planted corpus needs exactly two languages");
  if (spec.topics < 1 || spec.vocab_per_lang < spec.topics)
    throw std::invalid_argument("planted corpus needs vocab_per_lang >= topics >= 1");
  if (spec.doc_lengths.size() != 2)
    throw std::invalid_argument("doc_lengths must give one length per language");
  if (spec.skew_fraction < 0.0 || spec.skew_fraction > 1.0)
    throw std::invalid_argument("skew_fraction must be in [0, 1]");
  if (spec.skew_fraction > 0.0 && spec.skewed_lengths.size() != 2)
    throw std::invalid_argument("skewed_lengths must give one length per language");

  Rng rng(spec.seed);
  MultilingualCorpus corpus;
  std::vector<std::string> langs = spec.languages;
  std::sort(langs.begin(), langs.end());
  if (langs != spec.languages)
    throw std::invalid_argument("languages must be listed in sorted order");
  for (const auto& l : langs) corpus.vocab.add_language(l);

  // full vocabulary interned up front, ids dense per language
  std::vector<TermId> lang_base(langs.size());
  for (std::size_t l = 0; l < langs.size(); ++l) {
    lang_base[l] = static_cast<TermId>(corpus.vocab.size());
    for (int w = 0; w < spec.vocab_per_lang; ++w)
      corpus.vocab.intern(static_cast<std::uint16_t>(l), lettered("w", w));
  }

  // Each topic owns a contiguous block of each language's vocabulary; the
  // leftover tail acts as shared noise vocabulary.
  const int block = spec.vocab_per_lang / spec.topics;
  const double out_alpha = 0.05;
  const double in_alpha = out_alpha * spec.topic_sharpness;

  // phi[lang][topic] is a distribution over that language's vocab_per_lang terms
  std::vector<std::vector<std::vector<double>>> phi(langs.size());
  for (std::size_t l = 0; l < langs.size(); ++l) {
    phi[l].resize(static_cast<std::size_t>(spec.topics));
    for (int k = 0; k < spec.topics; ++k) {
      auto& p = phi[l][static_cast<std::size_t>(k)];
      p.resize(static_cast<std::size_t>(spec.vocab_per_lang));
      double total = 0.0;
      for (int w = 0; w < spec.vocab_per_lang; ++w) {
        const bool in_block = w >= k * block && w < (k + 1) * block;
        p[static_cast<std::size_t>(w)] = rng.gamma(in_block ? in_alpha : out_alpha);
        total += p[static_cast<std::size_t>(w)];
      }
      for (auto& x : p) x /= total;
    }
  }

  const int num_skewed = static_cast<int>(
      std::llround(spec.skew_fraction * static_cast<double>(spec.comparable_docs)));

  for (int d = 0; d < spec.comparable_docs; ++d) {
    const auto theta = rng.dirichlet(spec.mixture_concentration,
                                     static_cast<std::size_t>(spec.topics));
    const bool skewed = d >= spec.comparable_docs - num_skewed;
    const auto& lengths = skewed ? spec.skewed_lengths : spec.doc_lengths;
    DocumentCounts doc;
    doc.id = padded("c", d);
    doc.block = Block::kComparable;
    std::vector<std::pair<TermId, double>> merged;
    for (std::size_t l = 0; l < langs.size(); ++l) {
      auto side = draw_counts(rng, theta, phi[l], lang_base[l], lengths[l]);
      merged.insert(merged.end(), side.begin(), side.end());
    }
    std::sort(merged.begin(), merged.end());
    doc.counts = std::move(merged);
    corpus.docs.push_back(std::move(doc));
  }

  for (int m = 0; m < spec.mate_pairs; ++m) {
    const auto theta = rng.dirichlet(spec.mixture_concentration,
                                     static_cast<std::size_t>(spec.topics));
    DocumentCounts query, target;
    query.id = padded("q", m);
    query.block = Block::kMono;
    query.counts = draw_counts(rng, theta, phi[0], lang_base[0], spec.doc_lengths[0]);
    target.id = padded("t", m);
    target.block = Block::kMono;
    target.counts = draw_counts(rng, theta, phi[1], lang_base[1], spec.doc_lengths[1]);
    corpus.mates.push_back({query.id, target.id});
    corpus.docs.push_back(std::move(query));
    corpus.docs.push_back(std::move(target));
  }

  return corpus;
}

void write_corpus_jsonl(const MultilingualCorpus& corpus, std::ostream& out) {
  std::map<std::string, std::string> mate_of;
  for (const auto& m : corpus.mates) mate_of[m.query_doc] = m.target_doc;

  for (const auto& doc : corpus.docs) {
    std::map<std::string, std::string> texts;
    for (const auto& [t, c] : doc.counts) {
      const double r = std::round(c);
      if (std::abs(c - r) > 1e-9)
        throw std::runtime_error("cannot serialize fractional count for document '" +
                                 doc.id + "'");
      auto& text = texts[corpus.vocab.term_language_name(t)];
      for (long long k = 0; k < std::llround(r); ++k) {
        if (!text.empty()) text.push_back(' ');
        text += corpus.vocab.surface(t);
      }
    }
    nlohmann::json rec;
    rec["id"] = doc.id;
    rec["block"] = std::string(block_name(doc.block));
    rec["texts"] = nlohmann::json::object();
    for (const auto& [lang, text] : texts) rec["texts"][lang] = text;
    if (auto it = mate_of.find(doc.id); it != mate_of.end()) rec["mate"] = it->second;
    out << rec.dump() << "\n";
  }
}

}  // namespace clir
