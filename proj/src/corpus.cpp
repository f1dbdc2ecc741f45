#include "clir/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "clir/container.hpp"
#include "clir/rng.hpp"

namespace clir {

std::string_view block_name(Block b) {
  return b == Block::kComparable ? "comparable" : "mono";
}

Block parse_block(std::string_view name) {
  if (name == "comparable") return Block::kComparable;
  if (name == "mono") return Block::kMono;
  throw std::invalid_argument("unknown block '" + std::string(name) +
                              "' (expected comparable or mono)");
}

namespace {

struct CpRange {
  char32_t lo, hi;
};

// Approximation of Unicode letters by contiguous ranges; covers Latin with
// its extensions, Greek, Cyrillic, Armenian, Hebrew, Arabic, Devanagari,
// Kana, unified CJK and Hangul syllables.
constexpr CpRange kLetterRanges[] = {
    {0x41, 0x5A},     {0x61, 0x7A},     {0xC0, 0xD6},     {0xD8, 0xF6},
    {0xF8, 0x2AF},    {0x370, 0x373},   {0x376, 0x377},   {0x37B, 0x37D},
    {0x37F, 0x37F},   {0x386, 0x386},   {0x388, 0x38A},   {0x38C, 0x38C},
    {0x38E, 0x3A1},   {0x3A3, 0x3FF},   {0x400, 0x52F},   {0x531, 0x556},
    {0x561, 0x587},   {0x5D0, 0x5EA},   {0x620, 0x64A},   {0x66E, 0x6D3},
    {0x904, 0x939},   {0x93D, 0x93D},   {0x950, 0x950},   {0x958, 0x961},
    {0x3041, 0x3096}, {0x30A1, 0x30FA}, {0x4E00, 0x9FFF}, {0xAC00, 0xD7A3},
};

bool is_letter(char32_t c) {
  for (const auto& r : kLetterRanges)
    if (c >= r.lo && c <= r.hi) return true;
  return false;
}

char32_t to_lower(char32_t c) {
  if (c >= 0x41 && c <= 0x5A) return c + 0x20;
  if ((c >= 0xC0 && c <= 0xD6) || (c >= 0xD8 && c <= 0xDE)) return c + 0x20;
  if (c >= 0x100 && c <= 0x137) return (c % 2 == 0) ? c + 1 : c;
  if (c >= 0x139 && c <= 0x148) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x14A && c <= 0x177) return (c % 2 == 0) ? c + 1 : c;
  if (c == 0x178) return 0xFF;
  if (c >= 0x179 && c <= 0x17E) return (c % 2 == 1) ? c + 1 : c;
  if (c == 0x386) return 0x3AC;
  if (c >= 0x388 && c <= 0x38A) return c + 0x25;
  if (c == 0x38C) return 0x3CC;
  if (c >= 0x38E && c <= 0x38F) return c + 0x3F;
  if ((c >= 0x391 && c <= 0x3A1) || (c >= 0x3A3 && c <= 0x3AB)) return c + 0x20;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  return c;
}

// Decodes one code point starting at i, advancing i. Returns false and
// advances by one byte on malformed input.
bool decode_utf8(std::string_view s, std::size_t& i, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    cp = b0;
    ++i;
    return true;
  }
  int extra;
  char32_t acc;
  if ((b0 & 0xE0) == 0xC0) {
    extra = 1;
    acc = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    extra = 2;
    acc = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    extra = 3;
    acc = b0 & 0x07;
  } else {
    ++i;
    return false;
  }
  if (i + static_cast<std::size_t>(extra) >= s.size()) {
    ++i;
    return false;
  }
  for (int k = 1; k <= extra; ++k) {
    const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return false;
    }
    acc = (acc << 6) | (b & 0x3F);
  }
  i += static_cast<std::size_t>(extra) + 1;
  cp = acc;
  return true;
}

void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

void validate_language_code(const std::string& code) {
  if (code.empty()) throw std::invalid_argument("empty language code");
  for (char c : code)
    if (c < 'a' || c > 'z')
      throw std::invalid_argument("invalid language code '" + code +
                                  "' (lowercase ascii letters only)");
}

}  // namespace

Stemmer suffix_stemmer() {
  static const std::vector<std::string> suffixes = {
      "ungen", "lich", "isch", "ung", "ing", "ed", "er", "en", "es", "ly", "s", "e", "n"};
  return [](const std::string& w) -> std::string {
    for (const auto& suf : suffixes) {
      if (w.size() > suf.size() + 2 && w.compare(w.size() - suf.size(), suf.size(), suf) == 0)
        return w.substr(0, w.size() - suf.size());
    }
    return w;
  };
}

std::string lowercase_word(std::string_view word) {
  std::string out;
  out.reserve(word.size());
  std::size_t i = 0;
  while (i < word.size()) {
    char32_t cp;
    if (decode_utf8(word, i, cp))
      append_utf8(out, to_lower(cp));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text, const std::string& lang,
                                  const FilterConfig& cfg, const Stemmer& stem) {
  std::vector<std::string> out;
  std::string current;
  int current_len = 0;

  const std::set<std::string>* stop = nullptr;
  if (auto it = cfg.stopwords.find(lang); it != cfg.stopwords.end()) stop = &it->second;

  auto flush = [&] {
    if (current_len > 0) {
      if (current_len >= cfg.min_word_len && current_len <= cfg.max_word_len &&
          (!stop || !stop->count(current))) {
        std::string w = stem ? stem(current) : current;
        if (!w.empty()) out.push_back(std::move(w));
      }
      current.clear();
      current_len = 0;
    }
  };

  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp;
    if (decode_utf8(text, i, cp) && is_letter(cp)) {
      append_utf8(current, to_lower(cp));
      ++current_len;
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::uint16_t Vocabulary::add_language(const std::string& code) {
  validate_language_code(code);
  for (std::size_t i = 0; i < languages_.size(); ++i)
    if (languages_[i] == code) return static_cast<std::uint16_t>(i);
  if (languages_.size() >= 0xFFFF) throw std::length_error("too many languages");
  languages_.push_back(code);
  return static_cast<std::uint16_t>(languages_.size() - 1);
}

std::uint16_t Vocabulary::language_index(const std::string& code) const {
  for (std::size_t i = 0; i < languages_.size(); ++i)
    if (languages_[i] == code) return static_cast<std::uint16_t>(i);
  throw std::out_of_range("unknown language '" + code + "'");
}

TermId Vocabulary::intern(std::uint16_t lang, const std::string& surface) {
  if (lang >= languages_.size()) throw std::out_of_range("language index out of range");
  if (surface.empty()) throw std::invalid_argument("empty term surface");
  auto key = std::make_pair(lang, surface);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const TermId id = static_cast<TermId>(surfaces_.size());
  index_.emplace(std::move(key), id);
  surfaces_.push_back(surface);
  term_langs_.push_back(lang);
  return id;
}

std::optional<TermId> Vocabulary::find(const std::string& lang, const std::string& surface) const {
  for (std::size_t i = 0; i < languages_.size(); ++i) {
    if (languages_[i] == lang) {
      auto it = index_.find(std::make_pair(static_cast<std::uint16_t>(i), surface));
      if (it == index_.end()) return std::nullopt;
      return it->second;
    }
  }
  return std::nullopt;
}

const std::string& Vocabulary::surface(TermId t) const {
  if (t >= surfaces_.size()) throw std::out_of_range("term id out of range");
  return surfaces_[t];
}

std::uint16_t Vocabulary::term_language(TermId t) const {
  if (t >= term_langs_.size()) throw std::out_of_range("term id out of range");
  return term_langs_[t];
}

const std::string& Vocabulary::term_language_name(TermId t) const {
  return languages_[term_language(t)];
}

std::string Vocabulary::prefixed(TermId t) const {
  return term_language_name(t) + "_" + surface(t);
}

double DocumentCounts::length() const {
  double acc = 0.0;
  for (const auto& [t, c] : counts) acc += c;
  return acc;
}

double DocumentCounts::count_of(TermId t) const {
  auto it = std::lower_bound(
      counts.begin(), counts.end(), t,
      [](const std::pair<TermId, double>& e, TermId id) { return e.first < id; });
  return (it != counts.end() && it->first == t) ? it->second : 0.0;
}

std::size_t MultilingualCorpus::nnz() const {
  std::size_t acc = 0;
  for (const auto& d : docs) acc += d.counts.size();
  return acc;
}

double MultilingualCorpus::total_mass() const {
  double acc = 0.0;
  for (const auto& d : docs) acc += d.length();
  return acc;
}

const DocumentCounts* MultilingualCorpus::find_doc(std::string_view id) const {
  for (const auto& d : docs)
    if (d.id == id) return &d;
  return nullptr;
}

std::size_t MultilingualCorpus::doc_index(std::string_view id) const {
  for (std::size_t i = 0; i < docs.size(); ++i)
    if (docs[i].id == id) return i;
  throw std::out_of_range("unknown document id '" + std::string(id) + "'");
}

std::vector<double> MultilingualCorpus::language_lengths(const DocumentCounts& doc) const {
  std::vector<double> out(vocab.languages().size(), 0.0);
  for (const auto& [t, c] : doc.counts) out[vocab.term_language(t)] += c;
  return out;
}

std::vector<std::size_t> MultilingualCorpus::block_docs(Block b) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < docs.size(); ++i)
    if (docs[i].block == b) out.push_back(i);
  return out;
}

MultilingualCorpus MultilingualCorpus::restricted_to(Block b) const {
  MultilingualCorpus out;
  out.vocab = vocab;
  for (const auto& d : docs)
    if (d.block == b) out.docs.push_back(d);
  for (const auto& m : mates)
    if (out.find_doc(m.query_doc) && out.find_doc(m.target_doc)) out.mates.push_back(m);
  return out;
}

namespace {

struct RawDoc {
  std::string id;
  Block block;
  std::vector<std::pair<std::string, std::vector<std::string>>> tokens;  // lang → tokens
  std::optional<std::string> mate;
};

}  // namespace

MultilingualCorpus build_corpus(std::istream& jsonl, const FilterConfig& cfg,
                                std::vector<std::string> languages, const Stemmer& stem,
                                CorpusBuildStats* stats) {
  CorpusBuildStats local_stats;
  std::vector<RawDoc> raw;
  std::set<std::string> seen_ids;
  std::set<std::string> discovered;
  const bool fixed_languages = !languages.empty();
  for (const auto& l : languages) validate_language_code(l);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(jsonl, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) +
                               ": invalid JSON: " + e.what());
    }
    try {
      RawDoc d;
      d.id = rec.at("id").get<std::string>();
      if (d.id.empty()) throw std::runtime_error("empty document id");
      if (!seen_ids.insert(d.id).second)
        throw std::runtime_error("duplicate document id '" + d.id + "'");
      d.block = parse_block(rec.at("block").get<std::string>());
      const auto& texts = rec.at("texts");
      if (!texts.is_object()) throw std::runtime_error("'texts' must be an object");
      for (const auto& [lang, text] : texts.items()) {
        validate_language_code(lang);
        if (fixed_languages &&
            std::find(languages.begin(), languages.end(), lang) == languages.end())
          throw std::runtime_error("language '" + lang + "' not in corpus language list");
        discovered.insert(lang);
        d.tokens.emplace_back(lang, tokenize(text.get<std::string>(), lang, cfg, stem));
      }
      if (rec.contains("mate")) d.mate = rec.at("mate").get<std::string>();
      raw.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  if (!fixed_languages) languages.assign(discovered.begin(), discovered.end());

  // minimum words per language side, evaluated before term-level filters
  if (cfg.min_doc_words_per_lang > 0) {
    std::vector<RawDoc> kept;
    for (auto& d : raw) {
      bool ok = true;
      for (const auto& [lang, toks] : d.tokens)
        if (static_cast<int>(toks.size()) < cfg.min_doc_words_per_lang) ok = false;
      if (ok)
        kept.push_back(std::move(d));
      else
        ++local_stats.docs_dropped_short;
    }
    raw = std::move(kept);
  }

  // global counts and document frequencies per (language, surface)
  std::map<std::pair<std::string, std::string>, std::size_t> global_count;
  std::map<std::pair<std::string, std::string>, std::size_t> doc_freq;
  for (const auto& d : raw) {
    std::set<std::pair<std::string, std::string>> in_doc;
    for (const auto& [lang, toks] : d.tokens)
      for (const auto& t : toks) {
        auto key = std::make_pair(lang, t);
        ++global_count[key];
        in_doc.insert(key);
      }
    for (const auto& key : in_doc) ++doc_freq[key];
  }

  MultilingualCorpus corpus;
  for (const auto& l : languages) corpus.vocab.add_language(l);

  // ids assigned in (language index, surface) order so they are reproducible
  std::vector<std::pair<std::uint16_t, std::string>> admitted;
  for (const auto& [key, count] : global_count) {
    if (static_cast<int>(count) < cfg.min_global_count ||
        static_cast<int>(doc_freq[key]) < cfg.min_df) {
      ++local_stats.terms_dropped;
      continue;
    }
    admitted.emplace_back(corpus.vocab.language_index(key.first), key.second);
  }
  std::sort(admitted.begin(), admitted.end());
  for (const auto& [lang, surface] : admitted) corpus.vocab.intern(lang, surface);

  std::set<std::string> kept_ids;
  for (const auto& d : raw) {
    DocumentCounts doc;
    doc.id = d.id;
    doc.block = d.block;
    std::map<TermId, double> acc;
    for (const auto& [lang, toks] : d.tokens) {
      for (const auto& t : toks) {
        if (auto id = corpus.vocab.find(lang, t))
          acc[*id] += 1.0;
        else
          ++local_stats.tokens_dropped;
      }
    }
    doc.counts.assign(acc.begin(), acc.end());
    kept_ids.insert(doc.id);
    corpus.docs.push_back(std::move(doc));
  }

  for (const auto& d : raw) {
    if (!d.mate) continue;
    if (kept_ids.count(d.id) && kept_ids.count(*d.mate))
      corpus.mates.push_back({d.id, *d.mate});
    else
      ++local_stats.pairs_dropped;
  }

  if (stats) *stats = local_stats;
  return corpus;
}

MultilingualCorpus build_corpus_file(const std::filesystem::path& path, const FilterConfig& cfg,
                                     std::vector<std::string> languages, const Stemmer& stem,
                                     CorpusBuildStats* stats) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path.string());
  return build_corpus(in, cfg, std::move(languages), stem, stats);
}

double dynamic_weight(double len_a, double len_b, double floor_c) {
  if (len_a < 0.0 || len_b < 0.0)
    throw std::invalid_argument("dynamic_weight: lengths must be non-negative");
  if (!(floor_c >= 0.0 && floor_c < 1.0))
    throw std::invalid_argument("dynamic_weight: floor must be in [0, 1)");
  const double longest = std::max(len_a, len_b);
  if (longest <= 0.0)
    throw std::invalid_argument("dynamic_weight: both sides are empty");
  const double fa = (1.0 - floor_c) * len_a / longest + floor_c;
  const double fb = (1.0 - floor_c) * len_b / longest + floor_c;
  return std::sqrt(fa) * std::sqrt(fb);
}

WeightingScheme WeightingScheme::constant_weight(double k, Block block) {
  if (!(k > 0.0)) throw std::invalid_argument("constant weight must be positive");
  WeightingScheme w;
  w.kind = Kind::kConstant;
  w.constant = k;
  w.constant_block = block;
  return w;
}

WeightingScheme WeightingScheme::dynamic(double floor_c) {
  if (!(floor_c >= 0.0 && floor_c < 1.0))
    throw std::invalid_argument("dynamic weight floor must be in [0, 1)");
  WeightingScheme w;
  w.kind = Kind::kDynamic;
  w.dynamic_floor = floor_c;
  return w;
}

MultilingualCorpus apply_weighting(const MultilingualCorpus& corpus, const WeightingScheme& w) {
  MultilingualCorpus out = corpus;
  if (w.kind == WeightingScheme::Kind::kNone) return out;
  if (w.kind == WeightingScheme::Kind::kDynamic && corpus.vocab.languages().size() != 2)
    throw std::invalid_argument("dynamic weighting needs a two-language corpus");
  for (auto& doc : out.docs) {
    double factor;
    if (w.kind == WeightingScheme::Kind::kConstant) {
      if (doc.block != w.constant_block) continue;
      factor = w.constant;
    } else {
      if (doc.block != Block::kComparable) continue;
      const auto lens = corpus.language_lengths(doc);
      if (lens[0] + lens[1] <= 0.0)
        throw std::runtime_error("dynamic weighting: document '" + doc.id + "' is empty");
      factor = dynamic_weight(lens[0], lens[1], w.dynamic_floor);
    }
    doc.weight = factor;
    for (auto& [t, c] : doc.counts) c *= factor;
  }
  return out;
}

LengthNormalization LengthNormalization::cutoff_at(int n) {
  if (n <= 0) throw std::invalid_argument("cutoff must be positive");
  LengthNormalization l;
  l.kind = Kind::kCutoff;
  l.cutoff = n;
  return l;
}

LengthNormalization LengthNormalization::downsample(std::uint64_t seed) {
  LengthNormalization l;
  l.kind = Kind::kDownsample;
  l.seed = seed;
  return l;
}

LengthNormalization LengthNormalization::stretch() {
  LengthNormalization l;
  l.kind = Kind::kStretch;
  return l;
}

namespace {

void require_integer_counts(const DocumentCounts& doc, const Vocabulary& vocab) {
  for (const auto& [t, c] : doc.counts)
    if (std::abs(c - std::round(c)) > 1e-9)
      throw std::runtime_error("length normalization needs integer counts; document '" +
                               doc.id + "' has fractional count for term '" +
                               vocab.prefixed(t) + "'");
}

// Proportional scaling to target total with largest-remainder rounding.
// Ties on the fractional part break toward the smaller term id.
std::vector<std::pair<TermId, double>> scale_to_total(
    const std::vector<std::pair<TermId, double>>& side, double total, int target) {
  std::vector<double> raw(side.size()), floors(side.size());
  long long floor_sum = 0;
  for (std::size_t i = 0; i < side.size(); ++i) {
    raw[i] = side[i].second * static_cast<double>(target) / total;
    floors[i] = std::floor(raw[i]);
    floor_sum += static_cast<long long>(floors[i]);
  }
  long long deficit = target - floor_sum;
  std::vector<std::size_t> order(side.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double fa = raw[a] - floors[a], fb = raw[b] - floors[b];
    if (fa != fb) return fa > fb;
    return side[a].first < side[b].first;
  });
  for (std::size_t k = 0; k < order.size() && deficit > 0; ++k, --deficit)
    floors[order[k]] += 1.0;
  std::vector<std::pair<TermId, double>> out;
  for (std::size_t i = 0; i < side.size(); ++i)
    if (floors[i] > 0.0) out.emplace_back(side[i].first, floors[i]);
  return out;
}

}  // namespace

MultilingualCorpus normalize_lengths(const MultilingualCorpus& corpus,
                                     const LengthNormalization& n) {
  MultilingualCorpus out = corpus;
  if (n.kind == LengthNormalization::Kind::kNone) return out;
  const std::size_t num_langs = corpus.vocab.languages().size();
  if (n.kind != LengthNormalization::Kind::kCutoff && num_langs != 2)
    throw std::invalid_argument("length normalization by side needs a two-language corpus");

  Rng rng(n.seed);
  for (auto& doc : out.docs) {
    if (doc.block != Block::kComparable) continue;

    std::vector<std::vector<std::pair<TermId, double>>> sides(num_langs);
    for (const auto& e : doc.counts) sides[corpus.vocab.term_language(e.first)].push_back(e);
    std::vector<double> totals(num_langs, 0.0);
    for (std::size_t l = 0; l < num_langs; ++l)
      for (const auto& [t, c] : sides[l]) totals[l] += c;

    if (n.kind == LengthNormalization::Kind::kCutoff) {
      for (std::size_t l = 0; l < num_langs; ++l)
        if (totals[l] > static_cast<double>(n.cutoff))
          sides[l] = scale_to_total(sides[l], totals[l], n.cutoff);
    } else if (n.kind == LengthNormalization::Kind::kDownsample) {
      require_integer_counts(doc, corpus.vocab);
      if (totals[0] <= 0.0 || totals[1] <= 0.0)
        throw std::runtime_error("downsample: document '" + doc.id +
                                 "' has an empty language side");
      if (totals[0] != totals[1]) {
        const std::size_t longer = totals[0] > totals[1] ? 0 : 1;
        const auto keep = static_cast<std::size_t>(std::llround(std::min(totals[0], totals[1])));
        std::vector<TermId> positions;
        positions.reserve(static_cast<std::size_t>(totals[longer]));
        for (const auto& [t, c] : sides[longer])
          for (long long k = 0; k < std::llround(c); ++k) positions.push_back(t);
        for (std::size_t i = 0; i < keep; ++i) {
          const std::size_t j = i + static_cast<std::size_t>(
                                        rng.uniform_int(positions.size() - i));
          std::swap(positions[i], positions[j]);
        }
        std::map<TermId, double> acc;
        for (std::size_t i = 0; i < keep; ++i) acc[positions[i]] += 1.0;
        sides[longer].assign(acc.begin(), acc.end());
      }
    } else {  // stretch
      require_integer_counts(doc, corpus.vocab);
      if (totals[0] <= 0.0 || totals[1] <= 0.0)
        throw std::runtime_error("stretch: document '" + doc.id +
                                 "' has an empty language side");
      if (totals[0] != totals[1]) {
        const std::size_t shorter = totals[0] < totals[1] ? 0 : 1;
        const double ratio = std::max(totals[0], totals[1]) / std::min(totals[0], totals[1]);
        for (auto& [t, c] : sides[shorter])
          c = static_cast<double>(std::llround(c * ratio));
        std::erase_if(sides[shorter],
                      [](const std::pair<TermId, double>& e) { return e.second <= 0.0; });
      }
    }

    std::vector<std::pair<TermId, double>> merged;
    for (const auto& side : sides) merged.insert(merged.end(), side.begin(), side.end());
    std::sort(merged.begin(), merged.end());
    doc.counts = std::move(merged);
  }
  return out;
}

double idf(const MultilingualCorpus& corpus, TermId t) {
  if (t >= corpus.vocab.size()) throw std::out_of_range("term id out of range");
  std::size_t df = 0;
  for (const auto& d : corpus.docs)
    if (d.count_of(t) > 0.0) ++df;
  if (df == 0)
    throw std::runtime_error("idf undefined: term '" + corpus.vocab.prefixed(t) +
                             "' occurs in no document");
  return std::log(static_cast<double>(corpus.docs.size()) / static_cast<double>(df));
}

double DfStats::idf(TermId t) const {
  auto it = df.find(t);
  if (it == df.end() || it->second == 0)
    throw std::runtime_error("idf undefined: term occurs in no document");
  return std::log(static_cast<double>(num_docs) / static_cast<double>(it->second));
}

std::optional<double> DfStats::idf_opt(TermId t) const {
  auto it = df.find(t);
  if (it == df.end() || it->second == 0) return std::nullopt;
  return std::log(static_cast<double>(num_docs) / static_cast<double>(it->second));
}

DfStats df_stats(std::span<const DocumentCounts> docs) {
  DfStats s;
  s.num_docs = docs.size();
  for (const auto& d : docs)
    for (const auto& [t, c] : d.counts)
      if (c > 0.0) ++s.df[t];
  return s;
}

DfStats df_stats(const MultilingualCorpus& corpus) {
  return df_stats(std::span<const DocumentCounts>(corpus.docs));
}

std::set<std::string> read_stopword_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stopword file: " + path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t\r");
    std::string word = line.substr(start, end - start + 1);
    if (word.empty() || word[0] == '#') continue;
    out.insert(lowercase_word(word));
  }
  return out;
}

void save_corpus(const MultilingualCorpus& corpus, const std::filesystem::path& path) {
  io::ContainerHeader hdr;
  hdr.type = "corpus";
  hdr.languages = corpus.vocab.languages();
  hdr.vocab_size = corpus.vocab.size();
  io::ContainerWriter writer(path, hdr);

  io::ByteWriter vocab;
  vocab.put_u64(corpus.vocab.size());
  for (TermId t = 0; t < corpus.vocab.size(); ++t) {
    vocab.put_u16(corpus.vocab.term_language(t));
    vocab.put_string(corpus.vocab.surface(t));
  }
  writer.add_section("vocab", vocab);

  io::ByteWriter docs;
  docs.put_u64(corpus.docs.size());
  for (const auto& d : corpus.docs) {
    docs.put_string(d.id);
    docs.put_u8(d.block == Block::kComparable ? 0 : 1);
    docs.put_f64(d.weight);
    docs.put_u64(d.counts.size());
    for (const auto& [t, c] : d.counts) {
      docs.put_u32(t);
      docs.put_f64(c);
    }
  }
  writer.add_section("docs", docs);

  io::ByteWriter mates;
  mates.put_u64(corpus.mates.size());
  for (const auto& m : corpus.mates) {
    mates.put_string(m.query_doc);
    mates.put_string(m.target_doc);
  }
  writer.add_section("mates", mates);
  writer.finish();
}

MultilingualCorpus load_corpus(const std::filesystem::path& path) {
  io::ContainerReader reader(path);
  io::expect_type(reader, "corpus");
  MultilingualCorpus corpus;
  for (const auto& l : reader.header().languages) corpus.vocab.add_language(l);

  io::ByteReader vocab(reader.section("vocab"));
  const std::uint64_t num_terms = vocab.get_u64();
  for (std::uint64_t i = 0; i < num_terms; ++i) {
    const std::uint16_t lang = vocab.get_u16();
    const std::string surface = vocab.get_string();
    if (corpus.vocab.intern(lang, surface) != i)
      throw std::runtime_error("corrupt corpus vocabulary ordering");
  }
  if (corpus.vocab.size() != reader.header().vocab_size)
    throw std::runtime_error("corpus vocab size does not match header");

  io::ByteReader docs(reader.section("docs"));
  const std::uint64_t num_docs = docs.get_u64();
  for (std::uint64_t i = 0; i < num_docs; ++i) {
    DocumentCounts d;
    d.id = docs.get_string();
    d.block = docs.get_u8() == 0 ? Block::kComparable : Block::kMono;
    d.weight = docs.get_f64();
    const std::uint64_t n = docs.get_u64();
    d.counts.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) {
      const TermId t = docs.get_u32();
      const double c = docs.get_f64();
      d.counts.emplace_back(t, c);
    }
    corpus.docs.push_back(std::move(d));
  }

  io::ByteReader mates(reader.section("mates"));
  const std::uint64_t num_mates = mates.get_u64();
  for (std::uint64_t i = 0; i < num_mates; ++i) {
    MatePair m;
    m.query_doc = mates.get_string();
    m.target_doc = mates.get_string();
    corpus.mates.push_back(std::move(m));
  }
  return corpus;
}

}  // namespace clir
