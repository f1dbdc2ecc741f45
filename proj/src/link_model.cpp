#include "clir/link_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "clir/container.hpp"

namespace clir::link {

LinkTranslationModel::LinkTranslationModel(LinkStatistics stats) : stats_(std::move(stats)) {
  for (const auto& [w, n] : stats_.word_linked) {
    auto it = stats_.word_total.find(w);
    if (it == stats_.word_total.end() || it->second < n)
      throw std::invalid_argument("link statistics: linked count exceeds total for '" + w + "'");
  }
  const double denom =
      static_cast<double>(stats_.max_article_total) + static_cast<double>(stats_.target_vocab);
  floor_ = denom > 0.0 ? 1.0 / denom : 0.0;
}

double LinkTranslationModel::p_linked(const std::string& word) const {
  auto it = stats_.word_total.find(word);
  if (it == stats_.word_total.end() || it->second == 0) return 0.0;
  auto lit = stats_.word_linked.find(word);
  if (lit == stats_.word_linked.end()) return 0.0;
  return static_cast<double>(lit->second) / static_cast<double>(it->second);
}

double LinkTranslationModel::p_article_given_linked(const std::string& article,
                                                    const std::string& word) const {
  auto lit = stats_.word_linked.find(word);
  if (lit == stats_.word_linked.end() || lit->second == 0) return 0.0;
  auto wit = stats_.word_article.find(word);
  if (wit == stats_.word_article.end()) return 0.0;
  auto ait = wit->second.find(article);
  if (ait == wit->second.end()) return 0.0;
  return static_cast<double>(ait->second) / static_cast<double>(lit->second);
}

double LinkTranslationModel::p_target_given_article(const std::string& target_term,
                                                    const std::string& article) const {
  auto ait = stats_.article_total.find(article);
  if (ait == stats_.article_total.end() || ait->second == 0) return 0.0;
  auto tit = stats_.article_term.find(article);
  if (tit == stats_.article_term.end()) return 0.0;
  auto fit = tit->second.find(target_term);
  if (fit == tit->second.end()) return 0.0;
  return static_cast<double>(fit->second) / static_cast<double>(ait->second);
}

LinkTranslationModel estimate(std::istream& events_jsonl, const FilterConfig& cfg,
                              const Stemmer& stem) {
  LinkStatistics stats;
  std::map<std::string, std::vector<std::string>> referenced_by;  // article → sample words

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(events_jsonl, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("link events line " + std::to_string(line_no) +
                               ": invalid JSON: " + e.what());
    }
    try {
      const auto kind = rec.at("kind").get<std::string>();
      const auto lang = rec.at("lang").get<std::string>();
      if (kind == "tokens") {
        if (stats.source_lang.empty())
          stats.source_lang = lang;
        else if (stats.source_lang != lang)
          throw std::runtime_error("token events mix languages '" + stats.source_lang +
                                   "' and '" + lang + "'");
        for (const auto& tok : rec.at("tokens")) {
          const auto raw = tok.at("t").get<std::string>();
          std::string article;
          const bool linked = tok.contains("a") && !tok.at("a").is_null();
          if (linked) article = tok.at("a").get<std::string>();
          for (const auto& w : tokenize(raw, lang, cfg, stem)) {
            ++stats.word_total[w];
            if (linked) {
              ++stats.word_linked[w];
              ++stats.word_article[w][article];
              if (referenced_by[article].size() < 3) referenced_by[article].push_back(w);
            }
          }
        }
      } else if (kind == "article") {
        if (stats.target_lang.empty())
          stats.target_lang = lang;
        else if (stats.target_lang != lang)
          throw std::runtime_error("article events mix languages '" + stats.target_lang +
                                   "' and '" + lang + "'");
        const auto id = rec.at("id").get<std::string>();
        if (stats.article_total.count(id))
          throw std::runtime_error("duplicate article '" + id + "'");
        auto& terms = stats.article_term[id];
        std::int64_t total = 0;
        for (const auto& w : tokenize(rec.at("text").get<std::string>(), lang, cfg, stem)) {
          ++terms[w];
          ++total;
        }
        stats.article_total[id] = total;
      } else {
        throw std::runtime_error("unknown event kind '" + kind + "'");
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("link events line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  for (const auto& [article, words] : referenced_by) {
    auto it = stats.article_total.find(article);
    if (it == stats.article_total.end() || it->second == 0)
      throw std::runtime_error("article '" + article +
                               "' is link target (e.g. of '" + words.front() +
                               "') but has no usable text");
  }

  std::set<std::string> target_vocab;
  for (const auto& [a, terms] : stats.article_term)
    for (const auto& [f, n] : terms) target_vocab.insert(f);
  stats.target_vocab = target_vocab.size();
  for (const auto& [a, n] : stats.article_total)
    stats.max_article_total = std::max(stats.max_article_total, n);

  return LinkTranslationModel(std::move(stats));
}

LinkTranslationModel estimate_file(const std::filesystem::path& path, const FilterConfig& cfg,
                                   const Stemmer& stem) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open link events file: " + path.string());
  return estimate(in, cfg, stem);
}

namespace {

double doc_total(const Bag& doc) {
  double total = 0.0;
  for (const auto& [w, c] : doc) {
    if (c < 0.0) throw std::invalid_argument("negative count in document bag");
    total += c;
  }
  if (total <= 0.0) throw std::invalid_argument("document bag has no mass");
  return total;
}

}  // namespace

Bag article_distribution(const LinkTranslationModel& model, const Bag& doc) {
  const double total = doc_total(doc);
  const auto& stats = model.stats();
  Bag acc;
  double mass = 0.0;
  for (const auto& [w, c] : doc) {
    const double pw = c / total;
    const double pl = model.p_linked(w);
    if (pl == 0.0 || pw == 0.0) continue;
    auto wit = stats.word_article.find(w);
    if (wit == stats.word_article.end()) continue;
    const double linked = static_cast<double>(stats.word_linked.at(w));
    for (const auto& [a, n_aw] : wit->second) {
      const double contrib = static_cast<double>(n_aw) / linked * pl * pw;
      acc[a] += contrib;
      mass += contrib;
    }
  }
  if (mass <= 0.0)
    throw std::runtime_error("document has no linked mass; article distribution undefined");
  for (auto& [a, p] : acc) p /= mass;
  return acc;
}

Bag translation_distribution(const LinkTranslationModel& model, const Bag& doc,
                             bool normalized) {
  const double total = doc_total(doc);
  const auto& stats = model.stats();
  Bag acc;
  double mass = 0.0;
  for (const auto& [w, c] : doc) {
    const double pw = c / total;
    const double pl = model.p_linked(w);
    if (pl == 0.0 || pw == 0.0) continue;
    auto wit = stats.word_article.find(w);
    if (wit == stats.word_article.end()) continue;
    const double linked = static_cast<double>(stats.word_linked.at(w));
    for (const auto& [a, n_aw] : wit->second) {
      const double pa = static_cast<double>(n_aw) / linked * pl * pw;
      auto tit = stats.article_term.find(a);
      if (tit == stats.article_term.end()) continue;
      const double article_len = static_cast<double>(stats.article_total.at(a));
      for (const auto& [f, n_fa] : tit->second) {
        const double contrib = static_cast<double>(n_fa) / article_len * pa;
        acc[f] += contrib;
        mass += contrib;
      }
    }
  }
  if (!normalized) return acc;
  if (mass <= 0.0)
    throw std::runtime_error("document has no linked mass; translation distribution undefined");
  for (auto& [f, p] : acc) p /= mass;
  return acc;
}

double chain_prob(const LinkTranslationModel& model, const std::string& target_term,
                  const Bag& article_dist) {
  double acc = 0.0;
  for (const auto& [a, pa] : article_dist)
    acc += model.p_target_given_article(target_term, a) * pa;
  return acc;
}

double link_lm_prob(const LinkTranslationModel& model, const std::string& target_term,
                    const Bag& article_dist) {
  return std::max(chain_prob(model, target_term, article_dist), model.floor_prob());
}

Bag translate_query(const LinkTranslationModel& model, const Bag& query, double threshold,
                    double scale, bool* zero_mass_warning) {
  if (!(scale > 0.0)) throw std::invalid_argument("translate_query: scale must be positive");
  if (zero_mass_warning) *zero_mass_warning = false;
  Bag unnormalized = translation_distribution(model, query, false);
  double mass = 0.0;
  for (const auto& [f, p] : unnormalized) mass += p;
  if (mass <= 0.0) {
    if (zero_mass_warning) *zero_mass_warning = true;
    return {};
  }
  Bag out;
  for (const auto& [f, p] : unnormalized) {
    const double count = scale * (p / mass);
    if (count >= threshold) out[f] = count;
  }
  if (out.empty() && zero_mass_warning) *zero_mass_warning = true;
  return out;
}

void save_link(const LinkTranslationModel& model, const std::filesystem::path& path) {
  const auto& stats = model.stats();
  io::ContainerHeader hdr;
  hdr.type = "link";
  hdr.languages = {stats.source_lang, stats.target_lang};
  hdr.vocab_size = stats.word_total.size();
  hdr.extra["target_vocab"] = stats.target_vocab;
  hdr.extra["max_article_total"] = stats.max_article_total;
  io::ContainerWriter writer(path, hdr);

  io::ByteWriter words;
  words.put_u64(stats.word_total.size());
  for (const auto& [w, n] : stats.word_total) {
    words.put_string(w);
    words.put_i64(n);
    auto lit = stats.word_linked.find(w);
    words.put_i64(lit == stats.word_linked.end() ? 0 : lit->second);
    auto wit = stats.word_article.find(w);
    if (wit == stats.word_article.end()) {
      words.put_u64(0);
    } else {
      words.put_u64(wit->second.size());
      for (const auto& [a, n_aw] : wit->second) {
        words.put_string(a);
        words.put_i64(n_aw);
      }
    }
  }
  writer.add_section("words", words);

  io::ByteWriter articles;
  articles.put_u64(stats.article_total.size());
  for (const auto& [a, total] : stats.article_total) {
    articles.put_string(a);
    articles.put_i64(total);
    const auto& terms = stats.article_term.at(a);
    articles.put_u64(terms.size());
    for (const auto& [f, n] : terms) {
      articles.put_string(f);
      articles.put_i64(n);
    }
  }
  writer.add_section("articles", articles);
  writer.finish();
}

LinkTranslationModel load_link(const std::filesystem::path& path) {
  io::ContainerReader reader(path);
  io::expect_type(reader, "link");
  LinkStatistics stats;
  if (reader.header().languages.size() != 2)
    throw std::runtime_error("link container needs source and target language");
  stats.source_lang = reader.header().languages[0];
  stats.target_lang = reader.header().languages[1];
  stats.target_vocab = reader.header_json().at("target_vocab").get<std::size_t>();
  stats.max_article_total = reader.header_json().at("max_article_total").get<std::int64_t>();

  io::ByteReader words(reader.section("words"));
  const std::uint64_t num_words = words.get_u64();
  for (std::uint64_t i = 0; i < num_words; ++i) {
    const std::string w = words.get_string();
    stats.word_total[w] = words.get_i64();
    const std::int64_t linked = words.get_i64();
    if (linked > 0) stats.word_linked[w] = linked;
    const std::uint64_t n_articles = words.get_u64();
    for (std::uint64_t k = 0; k < n_articles; ++k) {
      const std::string a = words.get_string();
      stats.word_article[w][a] = words.get_i64();
    }
  }

  io::ByteReader articles(reader.section("articles"));
  const std::uint64_t num_articles = articles.get_u64();
  for (std::uint64_t i = 0; i < num_articles; ++i) {
    const std::string a = articles.get_string();
    stats.article_total[a] = articles.get_i64();
    auto& terms = stats.article_term[a];
    const std::uint64_t n_terms = articles.get_u64();
    for (std::uint64_t k = 0; k < n_terms; ++k) {
      const std::string f = articles.get_string();
      terms[f] = articles.get_i64();
    }
  }
  return LinkTranslationModel(std::move(stats));
}

}  // namespace clir::link
