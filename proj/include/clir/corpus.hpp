#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clir {

using TermId = std::uint32_t;
inline constexpr TermId kInvalidTerm = 0xFFFFFFFFu;

enum class Block { kComparable, kMono };

std::string_view block_name(Block b);
Block parse_block(std::string_view name);

/// Token stream filters applied during corpus construction. Length limits are
/// in code points; stopword sets are keyed by language code and matched after
/// lowercasing but before stemming.
struct FilterConfig {
  int min_word_len = 2;
  int max_word_len = 64;
  int min_global_count = 2;
  int min_df = 2;
  int min_doc_words_per_lang = 0;
  std::map<std::string, std::set<std::string>> stopwords;
};

/// Surface-form reducer plugged in behind the stopword filter. The default
/// (empty function) keeps surfaces unchanged.
using Stemmer = std::function<std::string(const std::string&)>;

/// Crude fixed-list suffix stripper. Not a linguistic stemmer; it exists so
/// pipelines can exercise the plug-in point with something non-trivial.
Stemmer suffix_stemmer();

/// Splits UTF-8 text on every character that is not a letter, lowercases,
/// then applies length and stopword filters and the stemmer, in that order.
/// Letters are recognized by Unicode range tables covering Latin (plus
/// extensions), Greek, Cyrillic, Armenian, Hebrew, Arabic, Devanagari, Kana,
/// CJK and Hangul; everything else delimits. Invalid UTF-8 bytes delimit too.
std::vector<std::string> tokenize(std::string_view text, const std::string& lang,
                                  const FilterConfig& cfg = {}, const Stemmer& stem = {});

/// Lowercase a single already-tokenized word (exposed for link anchor text).
std::string lowercase_word(std::string_view word);

/// Terms are language-scoped: the same surface in two languages gets two ids.
/// Ids are dense 0..size()-1 and assigned in (language, surface) sort order.
class Vocabulary {
 public:
  std::uint16_t add_language(const std::string& code);
  std::uint16_t language_index(const std::string& code) const;  // throws if unknown
  const std::vector<std::string>& languages() const { return languages_; }

  TermId intern(std::uint16_t lang, const std::string& surface);
  std::optional<TermId> find(const std::string& lang, const std::string& surface) const;

  std::size_t size() const { return surfaces_.size(); }
  const std::string& surface(TermId t) const;
  std::uint16_t term_language(TermId t) const;
  const std::string& term_language_name(TermId t) const;
  /// "<lang>_<surface>", the on-disk and display form.
  std::string prefixed(TermId t) const;

 private:
  std::vector<std::string> languages_;
  std::map<std::pair<std::uint16_t, std::string>, TermId> index_;
  std::vector<std::string> surfaces_;
  std::vector<std::uint16_t> term_langs_;
};

/// Bag-of-words document: counts sorted by term id, every value > 0.
struct DocumentCounts {
  std::string id;
  Block block = Block::kComparable;
  std::vector<std::pair<TermId, double>> counts;
  double weight = 1.0;

  double length() const;
  double count_of(TermId t) const;
};

struct MatePair {
  std::string query_doc;
  std::string target_doc;
};

struct CorpusBuildStats {
  std::size_t docs_dropped_short = 0;
  std::size_t terms_dropped = 0;
  std::size_t tokens_dropped = 0;
  std::size_t pairs_dropped = 0;
};

struct MultilingualCorpus {
  Vocabulary vocab;
  std::vector<DocumentCounts> docs;
  std::vector<MatePair> mates;

  std::size_t nnz() const;
  double total_mass() const;
  const DocumentCounts* find_doc(std::string_view id) const;
  std::size_t doc_index(std::string_view id) const;  // throws if unknown
  /// Per-language token mass of one document, indexed like vocab.languages().
  std::vector<double> language_lengths(const DocumentCounts& doc) const;
  /// Indices of docs in the given block.
  std::vector<std::size_t> block_docs(Block b) const;
  /// Same vocabulary, docs restricted to one block; mates kept only if both
  /// endpoints survive.
  MultilingualCorpus restricted_to(Block b) const;
};

/// Reads JSON-lines records {"id","block","texts":{lang:text},"mate"?}.
/// Languages not listed in `languages` are rejected unless the list is empty,
/// in which case languages are discovered in first-seen order then sorted.
MultilingualCorpus build_corpus(std::istream& jsonl, const FilterConfig& cfg = {},
                                std::vector<std::string> languages = {},
                                const Stemmer& stem = {}, CorpusBuildStats* stats = nullptr);
MultilingualCorpus build_corpus_file(const std::filesystem::path& path,
                                     const FilterConfig& cfg = {},
                                     std::vector<std::string> languages = {},
                                     const Stemmer& stem = {},
                                     CorpusBuildStats* stats = nullptr);

/// Geometric-mean length weight for a two-language comparable doc:
/// sqrt((1-c)*la/max + c) * sqrt((1-c)*lb/max + c) with max = max(la, lb).
/// The floor c keeps empty sides from zeroing the weight.
double dynamic_weight(double len_a, double len_b, double floor_c = 0.001);

struct WeightingScheme {
  enum class Kind { kNone, kConstant, kDynamic };
  Kind kind = Kind::kNone;
  double constant = 1.0;
  Block constant_block = Block::kComparable;
  double dynamic_floor = 0.001;

  static WeightingScheme none() { return {}; }
  static WeightingScheme constant_weight(double k, Block block = Block::kComparable);
  static WeightingScheme dynamic(double floor_c = 0.001);
};

/// Scales counts of the selected block (comparable for the dynamic scheme) by
/// the scheme's factor; other docs keep weight 1. The sparsity pattern is
/// unchanged.
MultilingualCorpus apply_weighting(const MultilingualCorpus& corpus, const WeightingScheme& w);

struct LengthNormalization {
  enum class Kind { kNone, kCutoff, kDownsample, kStretch };
  Kind kind = Kind::kNone;
  int cutoff = 100;
  std::uint64_t seed = 0;

  static LengthNormalization none() { return {}; }
  static LengthNormalization cutoff_at(int n);
  static LengthNormalization downsample(std::uint64_t seed);
  static LengthNormalization stretch();
};

/// Per-document length adjustment of comparable docs.
///  - cutoff: each language side longer than n is scaled to total n with
///    largest-remainder rounding, so results stay integral.
///  - downsample: the longer side is sampled without replacement down to the
///    shorter side's length (integer counts required).
///  - stretch: the shorter side's counts are multiplied by the length ratio
///    and rounded to the nearest integer.
MultilingualCorpus normalize_lengths(const MultilingualCorpus& corpus,
                                     const LengthNormalization& n);

/// ln(N / df) over all docs in the corpus. Throws if the term never occurs.
double idf(const MultilingualCorpus& corpus, TermId t);

/// Document frequencies over an arbitrary document set.
struct DfStats {
  std::size_t num_docs = 0;
  std::unordered_map<TermId, std::size_t> df;

  double idf(TermId t) const;  // throws if df is zero
  std::optional<double> idf_opt(TermId t) const;
};
DfStats df_stats(std::span<const DocumentCounts> docs);
DfStats df_stats(const MultilingualCorpus& corpus);

std::set<std::string> read_stopword_file(const std::filesystem::path& path);

void save_corpus(const MultilingualCorpus& corpus, const std::filesystem::path& path);
MultilingualCorpus load_corpus(const std::filesystem::path& path);

/// Synthetic two-block corpus with planted topics: each topic owns a block of
/// each language's vocabulary, comparable pairs share a topic mixture across
/// their two sides, and mate pairs are mono docs drawn from one shared
/// mixture. Ground truth is the mate links.
struct PlantedSpec {
  int topics = 5;
  int vocab_per_lang = 400;
  int comparable_docs = 200;
  int mate_pairs = 50;
  std::vector<std::string> languages = {"de", "en"};
  std::vector<int> doc_lengths = {100, 100};
  double skew_fraction = 0.0;
  std::vector<int> skewed_lengths = {};
  double mixture_concentration = 0.15;
  double topic_sharpness = 12.0;  // in-block vs out-of-block mass ratio
  std::uint64_t seed = 1;
};
MultilingualCorpus generate_planted_corpus(const PlantedSpec& spec);

/// Writes the corpus back out as JSON-lines, one record per document, texts
/// reconstructed by repeating each surface count-many times in term id order.
/// Counts must be integral.
void write_corpus_jsonl(const MultilingualCorpus& corpus, std::ostream& out);

}  // namespace clir
