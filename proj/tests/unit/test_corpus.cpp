#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "clir/corpus.hpp"
#include "doctest.h"
#include "helpers.hpp"

namespace fs = std::filesystem;
using namespace clir;
using testutil::CorpusBuilder;
using testutil::corpus_from_jsonl;
using testutil::keep_all;

TEST_CASE("tokenize splits on non-letters and lowercases") {
  FilterConfig cfg = testutil::keep_all();
  CHECK(tokenize("Brände, 2009!", "de", cfg) == std::vector<std::string>{"brände"});
  CHECK(tokenize("Haus-Boot", "de", cfg) == std::vector<std::string>{"haus", "boot"});
  CHECK(tokenize("", "de", cfg).empty());
}

TEST_CASE("tokenize enforces word-length bounds") {
  FilterConfig cfg;
  cfg.min_word_len = 2;
  CHECK(tokenize("a bb", "en", cfg) == std::vector<std::string>{"bb"});
  cfg.max_word_len = 3;
  CHECK(tokenize("bb cccc", "en", cfg) == std::vector<std::string>{"bb"});
}

TEST_CASE("tokenize drops stopwords after lowercasing") {
  FilterConfig cfg = keep_all();
  cfg.stopwords["de"] = {"und"};
  CHECK(tokenize("Doping und Fußball", "de", cfg) ==
        std::vector<std::string>{"doping", "fußball"});
  CHECK(tokenize("Doping UND Fußball", "de", cfg) ==
        std::vector<std::string>{"doping", "fußball"});
  CHECK(tokenize("Doping und Fußball", "en", cfg) ==
        std::vector<std::string>{"doping", "und", "fußball"});
}

TEST_CASE("tokenize applies the stemmer after filtering") {
  FilterConfig cfg = keep_all();
  const auto stem = suffix_stemmer();
  const auto toks = tokenize("Fires burning", "en", cfg, stem);
  REQUIRE(toks.size() == 2);
  CHECK(toks[0] == stem("fires"));
  CHECK(toks[1] == stem("burning"));
  CHECK(stem("fires") != "fires");
}

TEST_CASE("lowercase_word matches tokenizer casing") {
  CHECK(lowercase_word("FIRE") == "fire");
  CHECK(lowercase_word("Brände") == "brände");
}

TEST_CASE("vocabulary assigns dense ids and is language-scoped") {
  Vocabulary v;
  const auto de = v.add_language("de");
  const auto en = v.add_language("en");
  CHECK(v.add_language("de") == de);
  const auto a = v.intern(de, "feuer");
  const auto b = v.intern(en, "feuer");
  CHECK(a != b);
  CHECK(v.intern(de, "feuer") == a);
  CHECK(v.size() == 2);
  CHECK(v.term_language(a) == de);
  CHECK(v.surface(b) == "feuer");
  CHECK(v.prefixed(a) == "de_feuer");
  CHECK(v.find("en", "feuer") == b);
  CHECK_FALSE(v.find("en", "wasser").has_value());
  CHECK_THROWS(v.language_index("fr"));
}

static const char* kSmallJsonl = R"({"id":"c1","block":"comparable","texts":{"de":"feuer feuer wald","en":"fire fire forest"}}
{"id":"c2","block":"comparable","texts":{"de":"feuer wasser","en":"fire water"}}
{"id":"q1","block":"mono","texts":{"de":"feuer wald wald"},"mate":"t1"}
{"id":"t1","block":"mono","texts":{"en":"fire forest forest"}}
)";

TEST_CASE("build_corpus interns terms in (language, surface) order") {
  const auto corpus = corpus_from_jsonl(kSmallJsonl, keep_all());
  CHECK(corpus.vocab.languages() == std::vector<std::string>{"de", "en"});
  std::vector<std::string> prefixed;
  for (TermId t = 0; t < corpus.vocab.size(); ++t)
    prefixed.push_back(corpus.vocab.prefixed(t));
  auto sorted = prefixed;
  std::sort(sorted.begin(), sorted.end());
  CHECK(prefixed == sorted);
  CHECK(corpus.docs.size() == 4);
  REQUIRE(corpus.mates.size() == 1);
  CHECK(corpus.mates[0].query_doc == "q1");
  CHECK(corpus.mates[0].target_doc == "t1");

  const auto* c1 = corpus.find_doc("c1");
  REQUIRE(c1 != nullptr);
  CHECK(c1->block == Block::kComparable);
  CHECK(c1->count_of(*corpus.vocab.find("de", "feuer")) == 2.0);
  CHECK(c1->length() == 6.0);
  const auto* q1 = corpus.find_doc("q1");
  REQUIRE(q1 != nullptr);
  CHECK(q1->block == Block::kMono);
}

TEST_CASE("build_corpus frequency filters honor min_global_count and min_df") {
  FilterConfig cfg = keep_all();
  cfg.min_global_count = 2;
  cfg.min_df = 2;
  CorpusBuildStats stats;
  std::istringstream in(kSmallJsonl);
  const auto corpus = build_corpus(in, cfg, {}, {}, &stats);
  // "wasser"/"water" occur once in one doc; "wald"/"forest" pass both filters.
  CHECK_FALSE(corpus.vocab.find("de", "wasser").has_value());
  CHECK_FALSE(corpus.vocab.find("en", "water").has_value());
  CHECK(corpus.vocab.find("de", "wald").has_value());
  CHECK(corpus.vocab.find("de", "feuer").has_value());
  CHECK(stats.terms_dropped == 2);
}

TEST_CASE("build_corpus drops comparable docs with a short language side") {
  FilterConfig cfg = keep_all();
  cfg.min_doc_words_per_lang = 3;
  CorpusBuildStats stats;
  std::istringstream in(kSmallJsonl);
  const auto corpus = build_corpus(in, cfg, {}, {}, &stats);
  CHECK(corpus.find_doc("c1") != nullptr);   // 3 tokens per side
  CHECK(corpus.find_doc("c2") == nullptr);   // 2 tokens per side
  CHECK(stats.docs_dropped_short >= 1);
}

TEST_CASE("build_corpus rejects languages outside an explicit list") {
  std::istringstream in(kSmallJsonl);
  CHECK_THROWS(build_corpus(in, keep_all(), {"de", "fr"}));
}

TEST_CASE("restricted_to keeps one block and surviving mates") {
  const auto corpus = corpus_from_jsonl(kSmallJsonl, keep_all());
  const auto mono = corpus.restricted_to(Block::kMono);
  CHECK(mono.docs.size() == 2);
  CHECK(mono.mates.size() == 1);
  const auto comp = corpus.restricted_to(Block::kComparable);
  CHECK(comp.docs.size() == 2);
  CHECK(comp.mates.empty());
}

TEST_CASE("language_lengths splits a document by term language") {
  const auto corpus = corpus_from_jsonl(kSmallJsonl, keep_all());
  const auto lens = corpus.language_lengths(*corpus.find_doc("c1"));
  REQUIRE(lens.size() == 2);
  CHECK(lens[0] == 3.0);
  CHECK(lens[1] == 3.0);
}

TEST_CASE("dynamic_weight worked values") {
  CHECK(dynamic_weight(100, 100, 0.001) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dynamic_weight(0, 100, 0.001) == doctest::Approx(std::sqrt(0.001)).epsilon(1e-12));
  CHECK(dynamic_weight(50, 100, 0.001) == doctest::Approx(0.707460).epsilon(1e-6));
  // Symmetry and monotone growth toward the balanced case.
  CHECK(dynamic_weight(30, 70) == dynamic_weight(70, 30));
  CHECK(dynamic_weight(50, 100) < dynamic_weight(80, 100));
  CHECK(dynamic_weight(80, 100) < dynamic_weight(100, 100));
}

TEST_CASE("constant weighting scales only the selected block") {
  CorpusBuilder b;
  b.add_doc("c1", Block::kComparable, {{"de", "aa", 3}, {"en", "bb", 1}});
  b.add_doc("m1", Block::kMono, {{"de", "aa", 3}});
  const auto out = apply_weighting(b.corpus, WeightingScheme::constant_weight(16.0));
  CHECK(out.find_doc("c1")->count_of(0) == 48.0);
  CHECK(out.find_doc("c1")->weight == 16.0);
  CHECK(out.find_doc("m1")->count_of(0) == 3.0);
  CHECK(out.find_doc("m1")->weight == 1.0);

  const auto mono_w =
      apply_weighting(b.corpus, WeightingScheme::constant_weight(2.0, Block::kMono));
  CHECK(mono_w.find_doc("c1")->count_of(0) == 3.0);
  CHECK(mono_w.find_doc("m1")->count_of(0) == 6.0);
}

TEST_CASE("dynamic weighting multiplies comparable counts by the length weight") {
  CorpusBuilder b;
  b.add_doc("c1", Block::kComparable, {{"de", "aa", 50}, {"en", "bb", 100}});
  b.add_doc("m1", Block::kMono, {{"de", "aa", 5}});
  const auto out = apply_weighting(b.corpus, WeightingScheme::dynamic());
  const double w = dynamic_weight(50, 100, 0.001);
  CHECK(out.find_doc("c1")->count_of(0) == 50.0 * w);
  CHECK(out.find_doc("c1")->weight == w);
  CHECK(out.find_doc("m1")->count_of(0) == 5.0);
}

TEST_CASE("dynamic weighting requires exactly two languages") {
  CorpusBuilder b;
  b.add_doc("c1", Block::kComparable, {{"de", "aa", 2}});
  CHECK_THROWS(apply_weighting(b.corpus, WeightingScheme::dynamic()));
}

TEST_CASE("cutoff normalization rescales long sides to integral counts") {
  CorpusBuilder b;
  b.add_doc("c1", Block::kComparable,
            {{"de", "aa", 4}, {"de", "bb", 3}, {"en", "xx", 2}});
  b.add_doc("m1", Block::kMono, {{"de", "aa", 50}});
  const auto out = normalize_lengths(b.corpus, LengthNormalization::cutoff_at(5));
  const auto lens = out.language_lengths(*out.find_doc("c1"));
  CHECK(lens[0] == 5.0);  // 7 tokens scaled down to exactly the cutoff
  CHECK(lens[1] == 2.0);  // short side untouched
  for (const auto& [t, c] : out.find_doc("c1")->counts)
    CHECK(c == std::floor(c));
  // Largest-remainder split of (4,3) over 5 slots: 4*5/7=2.857, 3*5/7=2.143.
  CHECK(out.find_doc("c1")->count_of(0) == 3.0);
  CHECK(out.find_doc("c1")->count_of(1) == 2.0);
  // Mono docs are not length-normalized.
  CHECK(out.find_doc("m1")->count_of(0) == 50.0);
}

TEST_CASE("downsample normalization equalizes sides without replacement") {
  CorpusBuilder b;
  b.add_doc("c1", Block::kComparable,
            {{"de", "aa", 6}, {"de", "bb", 4}, {"en", "xx", 3}});
  const auto out = normalize_lengths(b.corpus, LengthNormalization::downsample(7));
  const auto lens = out.language_lengths(*out.find_doc("c1"));
  CHECK(lens[0] == 3.0);
  CHECK(lens[1] == 3.0);
  for (const auto& [t, c] : out.find_doc("c1")->counts) {
    CHECK(c == std::floor(c));
    CHECK(c <= b.corpus.find_doc("c1")->count_of(t));
  }
  // Deterministic per seed.
  const auto again = normalize_lengths(b.corpus, LengthNormalization::downsample(7));
  CHECK(again.find_doc("c1")->counts == out.find_doc("c1")->counts);
}

TEST_CASE("stretch normalization scales the short side up by the length ratio") {
  CorpusBuilder b;
  b.add_doc("c1", Block::kComparable,
            {{"de", "aa", 3}, {"de", "bb", 1}, {"en", "xx", 20}});
  const auto out = normalize_lengths(b.corpus, LengthNormalization::stretch());
  // Ratio 20/4 = 5: counts (3,1) become (15,5); long side unchanged.
  CHECK(out.find_doc("c1")->count_of(0) == 15.0);
  CHECK(out.find_doc("c1")->count_of(1) == 5.0);
  const auto lens = out.language_lengths(*out.find_doc("c1"));
  CHECK(lens[0] == 20.0);
  CHECK(lens[1] == 20.0);
}

TEST_CASE("stretch leaves balanced documents unchanged") {
  CorpusBuilder b;
  b.add_doc("c1", Block::kComparable, {{"de", "aa", 4}, {"en", "xx", 4}});
  const auto out = normalize_lengths(b.corpus, LengthNormalization::stretch());
  CHECK(out.find_doc("c1")->counts == b.corpus.find_doc("c1")->counts);
}

TEST_CASE("idf worked values") {
  CorpusBuilder b;
  b.add_doc("d1", Block::kMono, {{"en", "aa", 1}, {"en", "bb", 1}});
  b.add_doc("d2", Block::kMono, {{"en", "bb", 2}});
  const TermId aa = *b.corpus.vocab.find("en", "aa");
  const TermId bb = *b.corpus.vocab.find("en", "bb");
  CHECK(idf(b.corpus, aa) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(idf(b.corpus, bb) == 0.0);

  const auto stats = df_stats(b.corpus);
  CHECK(stats.num_docs == 2);
  CHECK(stats.idf(aa) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_FALSE(stats.idf_opt(999).has_value());
}

TEST_CASE("idf example: eight docs, df two") {
  CorpusBuilder b;
  for (int i = 0; i < 8; ++i) {
    std::vector<std::tuple<std::string, std::string, double>> bag = {{"en", "zz", 1}};
    if (i < 2) bag.push_back({"en", "rare", 1});
    b.add_doc("d" + std::to_string(i), Block::kMono, bag);
  }
  CHECK(idf(b.corpus, *b.corpus.vocab.find("en", "rare")) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("corpus container round-trips exactly") {
  const auto corpus = corpus_from_jsonl(kSmallJsonl, keep_all());
  const fs::path path = fs::temp_directory_path() / "clir_test_corpus.bin";
  save_corpus(corpus, path);
  const auto loaded = load_corpus(path);
  CHECK(loaded.vocab.languages() == corpus.vocab.languages());
  REQUIRE(loaded.vocab.size() == corpus.vocab.size());
  for (TermId t = 0; t < corpus.vocab.size(); ++t)
    CHECK(loaded.vocab.prefixed(t) == corpus.vocab.prefixed(t));
  REQUIRE(loaded.docs.size() == corpus.docs.size());
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    CHECK(loaded.docs[i].id == corpus.docs[i].id);
    CHECK(loaded.docs[i].block == corpus.docs[i].block);
    CHECK(loaded.docs[i].counts == corpus.docs[i].counts);
    CHECK(loaded.docs[i].weight == corpus.docs[i].weight);
  }
  REQUIRE(loaded.mates.size() == 1);
  CHECK(loaded.mates[0].query_doc == "q1");
  fs::remove(path);
}

TEST_CASE("planted corpus generation is deterministic and well-formed") {
  PlantedSpec spec;
  spec.topics = 3;
  spec.vocab_per_lang = 60;
  spec.comparable_docs = 20;
  spec.mate_pairs = 8;
  spec.doc_lengths = {40, 40};
  spec.seed = 5;
  const auto a = generate_planted_corpus(spec);
  const auto b = generate_planted_corpus(spec);
  REQUIRE(a.docs.size() == b.docs.size());
  for (std::size_t i = 0; i < a.docs.size(); ++i) {
    CHECK(a.docs[i].id == b.docs[i].id);
    CHECK(a.docs[i].counts == b.docs[i].counts);
  }
  CHECK(a.mates.size() == 8);
  CHECK(a.block_docs(Block::kComparable).size() == 20);
  CHECK(a.block_docs(Block::kMono).size() == 16);
  for (const auto& doc : a.docs)
    for (const auto& [t, c] : doc.counts) CHECK(c == std::floor(c));
  // Comparable docs carry both languages; mates are mono and single-language.
  for (auto i : a.block_docs(Block::kComparable)) {
    const auto lens = a.language_lengths(a.docs[i]);
    CHECK(lens[0] > 0.0);
    CHECK(lens[1] > 0.0);
  }
  for (const auto& m : a.mates) {
    const auto lq = a.language_lengths(*a.find_doc(m.query_doc));
    const auto lt = a.language_lengths(*a.find_doc(m.target_doc));
    CHECK(lq[0] > 0.0);
    CHECK(lq[1] == 0.0);
    CHECK(lt[0] == 0.0);
    CHECK(lt[1] > 0.0);
  }
}

TEST_CASE("planted corpus length skew stretches the marked fraction") {
  PlantedSpec spec;
  spec.topics = 2;
  spec.vocab_per_lang = 40;
  spec.comparable_docs = 10;
  spec.mate_pairs = 4;
  spec.doc_lengths = {50, 50};
  spec.skew_fraction = 1.0;
  spec.skewed_lengths = {20, 100};
  const auto corpus = generate_planted_corpus(spec);
  for (auto i : corpus.block_docs(Block::kComparable)) {
    const auto lens = corpus.language_lengths(corpus.docs[i]);
    CHECK(lens[0] == doctest::Approx(20.0).epsilon(0.5));
    CHECK(lens[1] == doctest::Approx(100.0).epsilon(0.5));
  }
}

TEST_CASE("write_corpus_jsonl round-trips through build_corpus") {
  PlantedSpec spec;
  spec.topics = 2;
  spec.vocab_per_lang = 30;
  spec.comparable_docs = 6;
  spec.mate_pairs = 3;
  spec.doc_lengths = {25, 25};
  const auto corpus = generate_planted_corpus(spec);
  std::ostringstream out;
  write_corpus_jsonl(corpus, out);
  const auto rebuilt = corpus_from_jsonl(out.str(), keep_all());
  REQUIRE(rebuilt.docs.size() == corpus.docs.size());
  CHECK(rebuilt.mates.size() == corpus.mates.size());
  for (const auto& doc : corpus.docs) {
    const auto* other = rebuilt.find_doc(doc.id);
    REQUIRE(other != nullptr);
    CHECK(other->length() == doc.length());
    for (const auto& [t, c] : doc.counts) {
      const auto lang = corpus.vocab.term_language_name(t);
      const auto ot = rebuilt.vocab.find(lang, corpus.vocab.surface(t));
      REQUIRE(ot.has_value());
      CHECK(other->count_of(*ot) == c);
    }
  }
}

TEST_CASE("read_stopword_file parses one word per line") {
  const fs::path path = fs::temp_directory_path() / "clir_test_stop.txt";
  {
    std::ofstream out(path);
    out << "Und\n\n der\n";
  }
  const auto words = read_stopword_file(path);
  CHECK(words == std::set<std::string>{"und", "der"});
  fs::remove(path);
}
