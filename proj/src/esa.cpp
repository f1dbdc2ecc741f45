#include "clir/esa.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "clir/container.hpp"

namespace clir::esa {

const EsaIndex::LanguageIndex& EsaIndex::language(const std::string& lang) const {
  return per_language[language_pos(lang)];
}

std::size_t EsaIndex::language_pos(const std::string& lang) const {
  for (std::size_t i = 0; i < languages.size(); ++i)
    if (languages[i] == lang) return i;
  throw std::out_of_range("index has no language '" + lang + "'");
}

double association_strength(double tf, double doc_len, std::size_t num_docs, std::size_t df) {
  if (tf < 0.0) throw std::invalid_argument("association_strength: negative term frequency");
  if (!(doc_len > 0.0)) throw std::invalid_argument("association_strength: document length must be positive");
  if (df == 0 || df > num_docs)
    throw std::invalid_argument("association_strength: document frequency out of range");
  return tf / doc_len * std::log(static_cast<double>(num_docs) / static_cast<double>(df));
}

EsaIndex build_index(const MultilingualCorpus& corpus, const EsaConfig& cfg) {
  if (cfg.truncation_c < 1) throw std::invalid_argument("esa: truncation must be >= 1");
  if (cfg.min_df < 1) throw std::invalid_argument("esa: min_df must be >= 1");
  if (corpus.vocab.languages().empty()) throw std::invalid_argument("esa: corpus has no languages");

  EsaIndex index;
  index.config = cfg;
  index.languages = corpus.vocab.languages();
  const std::size_t L = index.languages.size();

  // collect rows: comparable docs passing the per-side length filter
  std::vector<const DocumentCounts*> rows;
  for (const auto& doc : corpus.docs) {
    if (doc.block != Block::kComparable) continue;
    const auto lens = corpus.language_lengths(doc);
    bool keep = true;
    for (std::size_t l = 0; l < L; ++l) {
      if (cfg.min_doc_words_per_lang > 0) {
        if (lens[l] < static_cast<double>(cfg.min_doc_words_per_lang)) keep = false;
      } else if (lens[l] <= 0.0) {
        throw std::runtime_error("esa: comparable document '" + doc.id +
                                 "' is missing text in language '" + index.languages[l] + "'");
      }
    }
    if (keep) rows.push_back(&doc);
  }
  if (rows.empty()) throw std::runtime_error("esa: no comparable documents left to index");
  index.rows = static_cast<std::uint32_t>(rows.size());
  for (const auto* doc : rows) index.row_doc_ids.push_back(doc->id);

  index.per_language.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    // term frequencies per surface per row
    std::map<std::string, std::vector<std::pair<std::uint32_t, double>>> tf_lists;
    for (std::uint32_t r = 0; r < index.rows; ++r) {
      for (const auto& [t, c] : rows[r]->counts)
        if (corpus.vocab.term_language(t) == l)
          tf_lists[corpus.vocab.surface(t)].emplace_back(r, c);
    }

    // document frequency filter, then post-filter row lengths
    std::erase_if(tf_lists, [&](const auto& kv) {
      return kv.second.size() < static_cast<std::size_t>(cfg.min_df);
    });
    std::vector<double> row_len(index.rows, 0.0);
    for (const auto& [surface, list] : tf_lists)
      for (const auto& [r, tf] : list) row_len[r] += tf;

    auto& lang_index = index.per_language[l];
    for (const auto& [surface, list] : tf_lists) {
      lang_index.df[surface] = static_cast<std::uint32_t>(list.size());
      std::vector<Posting>& postings = lang_index.postings[surface];
      for (const auto& [r, tf] : list) {
        const double w = association_strength(tf, row_len[r], index.rows, list.size());
        if (w != 0.0) postings.push_back({r, w});
      }
    }
  }
  return index;
}

namespace {

ConceptVector vector_from_multiplicities(const EsaIndex& index,
                                         const std::map<std::string, double>& mult,
                                         const std::string& lang, int truncation_c) {
  if (truncation_c < 1) throw std::invalid_argument("esa: truncation must be >= 1");
  const auto& lang_index = index.language(lang);

  ConceptVector out;
  std::vector<double> dense(index.rows, 0.0);
  bool any = false;
  for (const auto& [surface, m] : mult) {
    if (!lang_index.df.count(surface)) continue;
    any = true;
    auto it = lang_index.postings.find(surface);
    if (it == lang_index.postings.end()) continue;
    for (const auto& p : it->second) dense[p.row] += m * p.weight;
  }
  out.empty_input = !any;

  std::vector<SparseVec::Entry> entries;
  for (std::uint32_t r = 0; r < index.rows; ++r)
    if (dense[r] != 0.0) entries.emplace_back(r, dense[r]);

  if (entries.size() > static_cast<std::size_t>(truncation_c)) {
    std::vector<double> values;
    values.reserve(entries.size());
    for (const auto& [r, v] : entries) values.push_back(v);
    std::nth_element(values.begin(), values.begin() + truncation_c, values.end(),
                     std::greater<>());
    const double threshold = values[static_cast<std::size_t>(truncation_c)];
    std::erase_if(entries,
                  [&](const SparseVec::Entry& e) { return e.second <= threshold; });
  }
  out.vec = SparseVec::from_unsorted(std::move(entries));
  return out;
}

}  // namespace

ConceptVector text_vector(const EsaIndex& index, const std::vector<std::string>& terms,
                          const std::string& lang, int truncation_c) {
  std::map<std::string, double> mult;
  for (const auto& t : terms) {
    if (index.config.bag_semantics)
      mult[t] += 1.0;
    else
      mult[t] = 1.0;
  }
  return vector_from_multiplicities(index, mult, lang, truncation_c);
}

ConceptVector text_vector(const EsaIndex& index, const std::vector<std::string>& terms,
                          const std::string& lang) {
  return text_vector(index, terms, lang, index.config.truncation_c);
}

ConceptVector doc_vector(const EsaIndex& index, const MultilingualCorpus& corpus,
                         const DocumentCounts& doc, const std::string& lang) {
  const auto lang_id = corpus.vocab.language_index(lang);
  std::map<std::string, double> mult;
  for (const auto& [t, c] : doc.counts)
    if (corpus.vocab.term_language(t) == lang_id)
      mult[corpus.vocab.surface(t)] = index.config.bag_semantics ? c : 1.0;
  return vector_from_multiplicities(index, mult, lang, index.config.truncation_c);
}

void save_esa(const EsaIndex& index, const std::filesystem::path& path) {
  std::size_t vocab_total = 0;
  for (const auto& li : index.per_language) vocab_total += li.df.size();

  io::ContainerHeader hdr;
  hdr.type = "esa";
  hdr.languages = index.languages;
  hdr.vocab_size = vocab_total;
  hdr.extra["truncation_c"] = index.config.truncation_c;
  hdr.extra["min_doc_words_per_lang"] = index.config.min_doc_words_per_lang;
  hdr.extra["min_df"] = index.config.min_df;
  hdr.extra["bag_semantics"] = index.config.bag_semantics;
  io::ContainerWriter writer(path, hdr);

  io::ByteWriter rows;
  rows.put_u64(index.row_doc_ids.size());
  for (const auto& id : index.row_doc_ids) rows.put_string(id);
  writer.add_section("rows", rows);

  io::ByteWriter body;
  body.put_u64(index.per_language.size());
  for (const auto& li : index.per_language) {
    std::vector<std::string> surfaces;
    surfaces.reserve(li.df.size());
    for (const auto& [s, d] : li.df) surfaces.push_back(s);
    std::sort(surfaces.begin(), surfaces.end());
    body.put_u64(surfaces.size());
    for (const auto& s : surfaces) {
      body.put_string(s);
      body.put_u32(li.df.at(s));
      auto it = li.postings.find(s);
      const std::size_t n = it == li.postings.end() ? 0 : it->second.size();
      body.put_u64(n);
      if (it != li.postings.end()) {
        for (const auto& p : it->second) {
          body.put_u32(p.row);
          body.put_f64(p.weight);
        }
      }
    }
  }
  writer.add_section("index", body);
  writer.finish();
}

EsaIndex load_esa(const std::filesystem::path& path) {
  io::ContainerReader reader(path);
  io::expect_type(reader, "esa");
  EsaIndex index;
  index.languages = reader.header().languages;
  const auto& hdr = reader.header_json();
  index.config.truncation_c = hdr.at("truncation_c").get<int>();
  index.config.min_doc_words_per_lang = hdr.at("min_doc_words_per_lang").get<int>();
  index.config.min_df = hdr.at("min_df").get<int>();
  index.config.bag_semantics = hdr.at("bag_semantics").get<bool>();

  io::ByteReader rows(reader.section("rows"));
  const std::uint64_t num_rows = rows.get_u64();
  for (std::uint64_t i = 0; i < num_rows; ++i) index.row_doc_ids.push_back(rows.get_string());
  index.rows = static_cast<std::uint32_t>(num_rows);

  io::ByteReader body(reader.section("index"));
  const std::uint64_t L = body.get_u64();
  if (L != index.languages.size()) throw std::runtime_error("esa container language mismatch");
  index.per_language.resize(L);
  for (std::uint64_t l = 0; l < L; ++l) {
    auto& li = index.per_language[l];
    const std::uint64_t num_surfaces = body.get_u64();
    for (std::uint64_t s = 0; s < num_surfaces; ++s) {
      const std::string surface = body.get_string();
      li.df[surface] = body.get_u32();
      const std::uint64_t n = body.get_u64();
      auto& postings = li.postings[surface];
      postings.reserve(n);
      for (std::uint64_t k = 0; k < n; ++k) {
        Posting p;
        p.row = body.get_u32();
        p.weight = body.get_f64();
        postings.push_back(p);
      }
    }
  }
  return index;
}

}  // namespace clir::esa
