#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "clir/esa.hpp"
#include "clir/rng.hpp"
#include "doctest.h"
#include "helpers.hpp"

namespace fs = std::filesystem;
using namespace clir;
using testutil::CorpusBuilder;

namespace {

esa::EsaIndex tiny_index(std::vector<esa::Posting> postings_for_q, bool bag = false) {
  esa::EsaIndex idx;
  idx.config.truncation_c = 10000;
  idx.config.bag_semantics = bag;
  idx.languages = {"de"};
  idx.row_doc_ids = {"r0", "r1", "r2", "r3"};
  idx.rows = 4;
  idx.per_language.resize(1);
  idx.per_language[0].postings["q"] = std::move(postings_for_q);
  idx.per_language[0].df["q"] = 1;
  return idx;
}

// Independent re-evaluation of the concept-vector definition: accumulate
// idf-weighted postings per distinct term (sorted), truncate to the entries
// strictly above the (c+1)-th largest value.
std::vector<std::pair<std::uint32_t, double>> oracle_vector(
    const esa::EsaIndex& idx, const std::vector<std::string>& terms,
    const std::string& lang, int c) {
  const auto& li = idx.language(lang);
  std::map<std::string, double> mult;
  for (const auto& t : terms) {
    if (idx.config.bag_semantics)
      mult[t] += 1.0;
    else
      mult[t] = 1.0;
  }
  std::vector<double> dense(idx.rows, 0.0);
  for (const auto& [surface, m] : mult) {
    if (!li.df.count(surface)) continue;
    auto it = li.postings.find(surface);
    if (it == li.postings.end()) continue;
    for (const auto& p : it->second) dense[p.row] += m * p.weight;
  }
  std::vector<std::pair<std::uint32_t, double>> entries;
  for (std::uint32_t r = 0; r < idx.rows; ++r)
    if (dense[r] != 0.0) entries.emplace_back(r, dense[r]);
  if (entries.size() > static_cast<std::size_t>(c)) {
    std::vector<double> values;
    for (const auto& [r, v] : entries) values.push_back(v);
    std::sort(values.begin(), values.end(), std::greater<>());
    const double cut = values[static_cast<std::size_t>(c)];
    std::erase_if(entries, [&](const auto& e) { return e.second <= cut; });
  }
  return entries;
}

}  // namespace

TEST_CASE("association strength worked values") {
  CHECK(esa::association_strength(3, 10, 5, 5) == 0.0);
  CHECK(esa::association_strength(2, 4, 2, 1) ==
        doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
  CHECK(esa::association_strength(2, 4, 2, 1) == doctest::Approx(0.346574).epsilon(1e-6));
  CHECK(esa::association_strength(0, 4, 2, 1) == 0.0);
}

TEST_CASE("index build: postings carry tf.idf over post-filter lengths") {
  CorpusBuilder b;
  b.add_doc("c0", Block::kComparable,
            {{"de", "feuer", 2}, {"de", "wald", 2}, {"en", "fire", 2}});
  b.add_doc("c1", Block::kComparable,
            {{"de", "feuer", 1}, {"de", "wald", 1}, {"de", "bach", 1}, {"en", "fire", 2}});
  b.add_doc("c2", Block::kComparable, {{"de", "wald", 2}, {"en", "fire", 2}});
  esa::EsaConfig cfg;
  cfg.min_doc_words_per_lang = 0;
  cfg.min_df = 2;
  const auto idx = esa::build_index(b.corpus, cfg);
  CHECK(idx.rows == 3);
  CHECK(idx.row_doc_ids == std::vector<std::string>{"c0", "c1", "c2"});

  const auto& de = idx.language("de");
  CHECK(de.df.count("bach") == 0);          // df 1 < min_df
  CHECK(de.df.at("feuer") == 2);
  CHECK(de.df.at("wald") == 3);
  CHECK(de.postings.at("wald").empty());    // idf ln(3/3) = 0, postings dropped

  REQUIRE(de.postings.count("feuer") == 1);
  const auto& posts = de.postings.at("feuer");
  REQUIRE(posts.size() == 2);
  CHECK(posts[0].row == 0);
  CHECK(posts[0].weight == doctest::Approx(0.5 * std::log(1.5)).epsilon(1e-12));
  CHECK(posts[1].row == 1);
  // c1's de side shrinks to 2 tokens once "bach" falls to the df filter.
  CHECK(posts[1].weight == doctest::Approx(0.5 * std::log(1.5)).epsilon(1e-12));

  CHECK_THROWS(idx.language("fr"));
}

TEST_CASE("index build skips comparable docs with a short side") {
  CorpusBuilder b;
  b.add_doc("c0", Block::kComparable,
            {{"de", "aa", 3}, {"de", "bb", 1}, {"en", "xx", 4}});
  b.add_doc("c1", Block::kComparable, {{"de", "aa", 1}, {"en", "xx", 4}});
  b.add_doc("m0", Block::kMono, {{"de", "aa", 9}});
  esa::EsaConfig cfg;
  cfg.min_doc_words_per_lang = 2;
  cfg.min_df = 1;
  const auto idx = esa::build_index(b.corpus, cfg);
  CHECK(idx.rows == 1);
  CHECK(idx.row_doc_ids == std::vector<std::string>{"c0"});
}

TEST_CASE("single-row index is inert: every association is zero") {
  CorpusBuilder b;
  b.add_doc("c0", Block::kComparable, {{"de", "aa", 3}, {"en", "xx", 2}});
  esa::EsaConfig cfg;
  cfg.min_doc_words_per_lang = 0;
  cfg.min_df = 1;
  const auto idx = esa::build_index(b.corpus, cfg);
  CHECK(idx.rows == 1);
  for (const auto& [surface, posts] : idx.language("de").postings) CHECK(posts.empty());
  const auto v = esa::text_vector(idx, {"aa"}, "de");
  CHECK(v.vec.empty());
  CHECK_FALSE(v.empty_input);  // the term is known, it just has no signal
}

TEST_CASE("index build is invariant to uniform document scaling") {
  CorpusBuilder b;
  b.add_doc("c0", Block::kComparable,
            {{"de", "aa", 3}, {"de", "bb", 1}, {"en", "xx", 2}, {"en", "yy", 2}});
  b.add_doc("c1", Block::kComparable, {{"de", "bb", 2}, {"en", "yy", 4}});
  esa::EsaConfig cfg;
  cfg.min_doc_words_per_lang = 0;
  cfg.min_df = 1;
  const auto idx = esa::build_index(b.corpus, cfg);
  auto scaled = b.corpus;
  for (auto& doc : scaled.docs)
    for (auto& [t, c] : doc.counts) c *= 2.0;
  const auto idx2 = esa::build_index(scaled, cfg);
  for (std::size_t l = 0; l < idx.per_language.size(); ++l) {
    CHECK(idx2.per_language[l].df == idx.per_language[l].df);
    REQUIRE(idx2.per_language[l].postings.size() == idx.per_language[l].postings.size());
    for (const auto& [surface, posts] : idx.per_language[l].postings) {
      const auto& other = idx2.per_language[l].postings.at(surface);
      REQUIRE(other.size() == posts.size());
      for (std::size_t i = 0; i < posts.size(); ++i) {
        CHECK(other[i].row == posts[i].row);
        CHECK(other[i].weight == posts[i].weight);
      }
    }
  }
}

TEST_CASE("truncation keeps the entries strictly above the cut value") {
  const auto idx = tiny_index({{0, 5.0}, {1, 3.0}, {2, 1.0}});
  const auto v = esa::text_vector(idx, {"q"}, "de", 2);
  REQUIRE(v.vec.size() == 2);
  CHECK(v.vec.at(0) == 5.0);
  CHECK(v.vec.at(1) == 3.0);
  CHECK(v.vec.at(2) == 0.0);
}

TEST_CASE("truncation drops ties at the cut value") {
  const auto idx = tiny_index({{0, 5.0}, {1, 3.0}, {2, 3.0}, {3, 1.0}});
  const auto v = esa::text_vector(idx, {"q"}, "de", 2);
  REQUIRE(v.vec.size() == 1);
  CHECK(v.vec.at(0) == 5.0);
}

TEST_CASE("truncation is a no-op when c covers all entries") {
  const auto idx = tiny_index({{0, 5.0}, {1, 3.0}, {2, 1.0}});
  const auto v = esa::text_vector(idx, {"q"}, "de", 3);
  CHECK(v.vec.size() == 3);
  CHECK_THROWS(esa::text_vector(idx, {"q"}, "de", 0));
}

TEST_CASE("set semantics collapse repeated terms; bag semantics count them") {
  auto idx = tiny_index({{0, 2.0}});
  idx.per_language[0].postings["y"] = {{1, 1.0}};
  idx.per_language[0].df["y"] = 1;

  const auto dup = esa::text_vector(idx, {"q", "q", "y"}, "de");
  const auto once = esa::text_vector(idx, {"q", "y"}, "de");
  REQUIRE(dup.vec.entries() == once.vec.entries());
  CHECK(dup.vec.at(0) == 2.0);

  idx.config.bag_semantics = true;
  const auto bag = esa::text_vector(idx, {"q", "q", "y"}, "de");
  CHECK(bag.vec.at(0) == 4.0);
  CHECK(bag.vec.at(1) == 1.0);
}

TEST_CASE("unknown-only queries set the empty-input flag") {
  const auto idx = tiny_index({{0, 2.0}});
  const auto v = esa::text_vector(idx, {"zz", "yy"}, "de");
  CHECK(v.empty_input);
  CHECK(v.vec.empty());
  const auto mixed = esa::text_vector(idx, {"zz", "q"}, "de");
  CHECK_FALSE(mixed.empty_input);
}

TEST_CASE("doc_vector equals text_vector over the doc's distinct surfaces") {
  CorpusBuilder b;
  b.add_doc("c0", Block::kComparable,
            {{"de", "aa", 2}, {"de", "bb", 1}, {"en", "xx", 3}});
  b.add_doc("c1", Block::kComparable, {{"de", "aa", 1}, {"en", "yy", 2}});
  b.add_doc("c2", Block::kComparable, {{"de", "cc", 1}, {"en", "xx", 1}});
  esa::EsaConfig cfg;
  cfg.min_doc_words_per_lang = 0;
  cfg.min_df = 1;
  const auto idx = esa::build_index(b.corpus, cfg);
  const auto via_doc = esa::doc_vector(idx, b.corpus, *b.corpus.find_doc("c0"), "de");
  const auto via_text = esa::text_vector(idx, {"aa", "bb"}, "de");
  CHECK(via_doc.vec.entries() == via_text.vec.entries());
}

TEST_CASE("concept vectors match an independent oracle on random indexes") {
  Rng rng(2024);
  for (int rep = 0; rep < 25; ++rep) {
    const bool bag = rep % 2 == 1;
    esa::EsaIndex idx;
    idx.config.truncation_c = 10000;
    idx.config.bag_semantics = bag;
    idx.languages = {"de"};
    idx.rows = 6 + static_cast<std::uint32_t>(rng.uniform_int(5));
    for (std::uint32_t r = 0; r < idx.rows; ++r)
      idx.row_doc_ids.push_back("r" + std::to_string(r));
    idx.per_language.resize(1);
    const int vocab = 5;
    for (int t = 0; t < vocab; ++t) {
      const std::string surface(1, static_cast<char>('a' + t));
      std::vector<esa::Posting> posts;
      for (std::uint32_t r = 0; r < idx.rows; ++r)
        if (rng.uniform() < 0.6)
          posts.push_back({r, 0.25 * (1.0 + static_cast<double>(rng.uniform_int(8)))});
      idx.per_language[0].df[surface] = 1;
      if (!posts.empty()) idx.per_language[0].postings[surface] = std::move(posts);
    }
    std::vector<std::string> terms;
    const int qlen = 1 + static_cast<int>(rng.uniform_int(6));
    for (int i = 0; i < qlen; ++i)
      terms.push_back(std::string(1, static_cast<char>('a' + rng.uniform_int(vocab))));
    const int c = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(idx.rows)));

    const auto got = esa::text_vector(idx, terms, "de", c);
    const auto want = oracle_vector(idx, terms, "de", c);
    CHECK(got.vec.entries() == want);
  }
}

TEST_CASE("esa index container round-trips exactly") {
  CorpusBuilder b;
  b.add_doc("c0", Block::kComparable,
            {{"de", "aa", 2}, {"de", "bb", 1}, {"en", "xx", 3}, {"en", "yy", 1}});
  b.add_doc("c1", Block::kComparable, {{"de", "aa", 1}, {"en", "yy", 2}});
  b.add_doc("c2", Block::kComparable, {{"de", "bb", 2}, {"en", "xx", 1}});
  esa::EsaConfig cfg;
  cfg.min_doc_words_per_lang = 0;
  cfg.min_df = 1;
  cfg.truncation_c = 7;
  cfg.bag_semantics = true;
  const auto idx = esa::build_index(b.corpus, cfg);
  const fs::path path = fs::temp_directory_path() / "clir_test_esa.bin";
  esa::save_esa(idx, path);
  const auto loaded = esa::load_esa(path);
  CHECK(loaded.config.truncation_c == 7);
  CHECK(loaded.config.bag_semantics == true);
  CHECK(loaded.config.min_df == cfg.min_df);
  CHECK(loaded.languages == idx.languages);
  CHECK(loaded.rows == idx.rows);
  CHECK(loaded.row_doc_ids == idx.row_doc_ids);
  REQUIRE(loaded.per_language.size() == idx.per_language.size());
  for (std::size_t l = 0; l < idx.per_language.size(); ++l) {
    CHECK(loaded.per_language[l].df == idx.per_language[l].df);
    REQUIRE(loaded.per_language[l].postings.size() == idx.per_language[l].postings.size());
    for (const auto& [surface, posts] : idx.per_language[l].postings) {
      const auto& other = loaded.per_language[l].postings.at(surface);
      REQUIRE(other.size() == posts.size());
      for (std::size_t i = 0; i < posts.size(); ++i) {
        CHECK(other[i].row == posts[i].row);
        CHECK(other[i].weight == posts[i].weight);
      }
    }
  }
  fs::remove(path);
}

TEST_CASE("index build requires comparable rows") {
  CorpusBuilder b;
  b.add_doc("m0", Block::kMono, {{"de", "aa", 3}});
  esa::EsaConfig cfg;
  cfg.min_doc_words_per_lang = 0;
  cfg.min_df = 1;
  CHECK_THROWS(esa::build_index(b.corpus, cfg));
}
