// Command line front end for the cross-language retrieval toolkit. Every
// subcommand is deterministic for a fixed seed and input set, and all file
// outputs are written atomically (temp file plus rename).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "clir/corpus.hpp"
#include "clir/esa.hpp"
#include "clir/eval.hpp"
#include "clir/lda.hpp"
#include "clir/link_model.hpp"
#include "clir/plsa.hpp"
#include "clir/retrieval.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 0;
  int threads = 1;
  bool sequential = false;

  int effective_threads() const { return sequential ? 1 : std::max(1, threads); }
};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void atomic_write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

// Replaces "--config file.json" with the file's flag assignments, in place,
// so flags given on the command line afterwards still win.
std::vector<std::string> expand_config(std::vector<std::string> args, std::string* config_path) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] != "--config") continue;
    if (i + 1 >= args.size()) throw std::runtime_error("--config needs a file path");
    const std::string path = args[i + 1];
    *config_path = path;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json cfg;
    try {
      cfg = json::parse(in);
    } catch (const json::exception& e) {
      throw std::runtime_error("config file " + path + ": " + e.what());
    }
    if (!cfg.is_object()) throw std::runtime_error("config file must hold a JSON object");
    std::vector<std::string> tokens;
    for (const auto& [key, value] : cfg.items()) {
      const std::string flag = "--" + key;
      if (value.is_boolean()) {
        if (value.get<bool>()) tokens.push_back(flag);
      } else if (value.is_array()) {
        for (const auto& v : value) {
          tokens.push_back(flag);
          tokens.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        }
      } else if (value.is_string()) {
        tokens.push_back(flag);
        tokens.push_back(value.get<std::string>());
      } else {
        tokens.push_back(flag);
        tokens.push_back(value.dump());
      }
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin(), tokens.end());
    return args;
  }
  return args;
}

// Echoes the resolved command, config source and every explicitly set option,
// so a run's provenance survives in the log.
void echo_provenance(const CLI::App& root, const std::string& config_path) {
  json prov;
  std::string command;
  json opts = json::object();
  std::function<void(const CLI::App*)> walk = [&](const CLI::App* app) {
    if (!app->get_name().empty()) {
      if (!command.empty()) command += " ";
      command += app->get_name();
    }
    for (const auto* opt : app->get_options()) {
      if (opt->count() == 0) continue;
      const std::string name = opt->get_name();
      if (name == "--help" || name.empty()) continue;
      const auto& rs = opt->results();
      if (rs.empty())
        opts[name] = true;
      else if (rs.size() == 1)
        opts[name] = rs[0];
      else
        opts[name] = rs;
    }
    for (const auto* sub : app->get_subcommands(nullptr))
      if (sub->parsed()) walk(sub);
  };
  walk(&root);
  prov["command"] = command;
  prov["config"] = config_path.empty() ? json() : json(config_path);
  prov["options"] = opts;
  std::cerr << "provenance " << prov.dump() << "\n";
}

// ---------------------------------------------------------------------------
// shared option bundles

struct FilterOpts {
  int min_word_len = 2;
  int max_word_len = 64;
  int min_global_count = 2;
  int min_df = 2;
  int min_doc_words = 0;
  std::vector<std::string> stopword_specs;  // lang=path
  std::string stemmer = "none";

  void attach(CLI::App* cmd) {
    cmd->add_option("--min-word-len", min_word_len, "Drop tokens shorter than this")
        ->capture_default_str();
    cmd->add_option("--max-word-len", max_word_len, "Drop tokens longer than this")
        ->capture_default_str();
    cmd->add_option("--min-count", min_global_count,
                    "Drop terms with a smaller global count")
        ->capture_default_str();
    cmd->add_option("--min-df", min_df, "Drop terms in fewer documents")
        ->capture_default_str();
    cmd->add_option("--min-doc-words", min_doc_words,
                    "Drop documents with a shorter language side")
        ->capture_default_str();
    cmd->add_option("--stopwords", stopword_specs,
                    "Stopword list as lang=file, repeatable")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    cmd->add_option("--stemmer", stemmer, "Stemmer: none or suffix")
        ->check(CLI::IsMember({"none", "suffix"}))
        ->capture_default_str();
  }

  clir::FilterConfig filters() const {
    clir::FilterConfig cfg;
    cfg.min_word_len = min_word_len;
    cfg.max_word_len = max_word_len;
    cfg.min_global_count = min_global_count;
    cfg.min_df = min_df;
    cfg.min_doc_words_per_lang = min_doc_words;
    for (const auto& spec : stopword_specs) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0)
        throw std::runtime_error("--stopwords expects lang=file, got '" + spec + "'");
      cfg.stopwords[spec.substr(0, eq)] = clir::read_stopword_file(spec.substr(eq + 1));
    }
    return cfg;
  }

  clir::Stemmer stem() const {
    if (stemmer == "suffix") return clir::suffix_stemmer();
    return {};
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) out.push_back(std::stoi(item));
  return out;
}

clir::MultilingualCorpus load_corpus_block(const fs::path& path, const std::string& block) {
  auto corpus = clir::load_corpus(path);
  if (block == "all") return corpus;
  return corpus.restricted_to(clir::parse_block(block));
}

std::vector<const clir::DocumentCounts*> mono_docs_in(const clir::MultilingualCorpus& corpus,
                                                      const std::string& lang) {
  const auto li = corpus.vocab.language_index(lang);
  std::vector<const clir::DocumentCounts*> out;
  for (const auto& d : corpus.docs) {
    if (d.block != clir::Block::kMono || d.counts.empty()) continue;
    bool all = true;
    for (const auto& [t, c] : d.counts)
      if (corpus.vocab.term_language(t) != li) {
        all = false;
        break;
      }
    if (all) out.push_back(&d);
  }
  if (out.empty())
    throw std::runtime_error("no mono documents entirely in language '" + lang + "'");
  return out;
}

clir::link::Bag surface_bag(const clir::MultilingualCorpus& corpus,
                            const clir::DocumentCounts& doc) {
  clir::link::Bag bag;
  for (const auto& [t, c] : doc.counts) bag[corpus.vocab.surface(t)] += c;
  return bag;
}

clir::eval::Qrels qrels_from_mates(const clir::MultilingualCorpus& corpus) {
  if (corpus.mates.empty())
    throw std::runtime_error("corpus carries no mate pairs to evaluate against");
  clir::eval::Qrels q;
  for (const auto& m : corpus.mates) q.relevant[m.query_doc].insert(m.target_doc);
  return q;
}

std::string run_to_text(const clir::retrieval::ScoredRun& run) {
  std::ostringstream ss;
  clir::retrieval::write_trec_run(run, ss);
  return ss.str();
}

clir::retrieval::ScoredRun load_run(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run file: " + path.string());
  return clir::retrieval::read_trec_run(in);
}

// ---------------------------------------------------------------------------
// corpus subcommands

struct SynthOpts {
  GlobalOpts* global = nullptr;
  std::string output;
  int topics = 5;
  int vocab_per_lang = 400;
  int comparable = 200;
  int mates = 50;
  std::string languages = "de,en";
  std::string lengths = "100,100";
  double skew_fraction = 0.0;
  std::string skewed_lengths;
  double concentration = 0.15;
  double sharpness = 12.0;

  void run() const {
    clir::PlantedSpec spec;
    spec.topics = topics;
    spec.vocab_per_lang = vocab_per_lang;
    spec.comparable_docs = comparable;
    spec.mate_pairs = mates;
    spec.languages = split_list(languages);
    spec.doc_lengths = split_ints(lengths);
    spec.skew_fraction = skew_fraction;
    if (!skewed_lengths.empty()) spec.skewed_lengths = split_ints(skewed_lengths);
    spec.mixture_concentration = concentration;
    spec.topic_sharpness = sharpness;
    spec.seed = global->seed;
    const auto corpus = clir::generate_planted_corpus(spec);
    std::ostringstream ss;
    clir::write_corpus_jsonl(corpus, ss);
    atomic_write_text(output, ss.str());
    std::cerr << "wrote " << corpus.docs.size() << " documents, "
              << corpus.mates.size() << " mate pairs\n";
  }
};

struct BuildOpts {
  std::string input;
  std::string output;
  std::string languages;
  FilterOpts filter;

  void run() const {
    clir::CorpusBuildStats stats;
    auto corpus = clir::build_corpus_file(input, filter.filters(),
                                          languages.empty() ? std::vector<std::string>{}
                                                            : split_list(languages),
                                          filter.stem(), &stats);
    clir::save_corpus(corpus, output);
    std::cerr << "corpus: " << corpus.docs.size() << " docs, vocab "
              << corpus.vocab.size() << ", " << corpus.mates.size()
              << " mate pairs (dropped: " << stats.docs_dropped_short << " short docs, "
              << stats.terms_dropped << " terms, " << stats.pairs_dropped << " pairs)\n";
  }
};

struct WeightOpts {
  std::string input;
  std::string output;
  std::string scheme = "dynamic";
  double constant = 1.0;
  std::string block = "comparable";
  double floor = 0.001;

  void run() const {
    auto corpus = clir::load_corpus(input);
    clir::WeightingScheme w;
    if (scheme == "none")
      w = clir::WeightingScheme::none();
    else if (scheme == "constant")
      w = clir::WeightingScheme::constant_weight(constant, clir::parse_block(block));
    else
      w = clir::WeightingScheme::dynamic(floor);
    clir::save_corpus(clir::apply_weighting(corpus, w), output);
  }
};

struct NormalizeOpts {
  GlobalOpts* global = nullptr;
  std::string input;
  std::string output;
  std::string method = "cutoff";
  int cutoff = 100;

  void run() const {
    auto corpus = clir::load_corpus(input);
    clir::LengthNormalization n;
    if (method == "cutoff")
      n = clir::LengthNormalization::cutoff_at(cutoff);
    else if (method == "downsample")
      n = clir::LengthNormalization::downsample(global->seed);
    else
      n = clir::LengthNormalization::stretch();
    clir::save_corpus(clir::normalize_lengths(corpus, n), output);
  }
};

// ---------------------------------------------------------------------------
// training subcommands

struct TrainPlsaOpts {
  GlobalOpts* global = nullptr;
  std::string corpus_path;
  std::string output;
  int topics = 10;
  int iterations = 100;
  std::string mode = "multilingual";
  std::string block = "all";
  std::string ll_trace;

  void run() const {
    const auto corpus = load_corpus_block(corpus_path, block);
    clir::plsa::PlsaConfig cfg;
    cfg.topics = topics;
    cfg.iterations = iterations;
    cfg.seed = global->seed;
    cfg.mode = mode == "standard" ? clir::plsa::Mode::kStandard
                                  : clir::plsa::Mode::kMultilingual;
    const auto model = clir::plsa::train(corpus, cfg);
    clir::plsa::save_plsa(model, output, corpus.vocab.languages());
    if (!ll_trace.empty()) {
      std::ostringstream ss;
      clir::plsa::write_ll_trace_csv(model, ss);
      atomic_write_text(ll_trace, ss.str());
    }
    std::cerr << "plsa: " << model.num_docs << " docs, " << model.vocab_size
              << " terms, final log likelihood "
              << (model.ll_trace.empty() ? 0.0 : model.ll_trace.back()) << "\n";
  }
};

struct TrainLdaOpts {
  GlobalOpts* global = nullptr;
  std::string corpus_path;
  std::string output;
  int topics = 10;
  double alpha = -1.0;
  double beta = 0.1;
  int burnin = 100;
  int samples = 50;
  int infer_burnin = 10;
  int infer_samples = 5;
  std::string mode = "multilingual";
  std::string block = "comparable";
  std::string topics_csv;
  int top_terms = 10;

  void run() const {
    const auto corpus = load_corpus_block(corpus_path, block);
    clir::lda::LdaConfig cfg;
    cfg.topics = topics;
    cfg.alpha = alpha;
    cfg.beta = beta;
    cfg.burnin_train = burnin;
    cfg.avg_train = samples;
    cfg.burnin_infer = infer_burnin;
    cfg.avg_infer = infer_samples;
    cfg.seed = global->seed;
    const auto lda_mode =
        mode == "standard" ? clir::lda::Mode::kStandard : clir::lda::Mode::kMultilingual;
    const auto model = clir::lda::train(corpus, cfg, lda_mode);
    clir::lda::save_lda(model, output, corpus.vocab.languages());
    if (!topics_csv.empty()) {
      std::ostringstream ss;
      clir::lda::export_topics_csv(model, corpus.vocab, top_terms, ss);
      atomic_write_text(topics_csv, ss.str());
    }
    std::cerr << "lda: " << model.doc_ids.size() << " docs, alpha "
              << model.config.resolved_alpha() << ", beta " << model.config.beta << "\n";
  }
};

struct TrainEsaOpts {
  std::string corpus_path;
  std::string output;
  int truncation = 10000;
  int min_doc_words = 100;
  int min_df = 2;
  bool bag = false;

  void run() const {
    const auto corpus = clir::load_corpus(corpus_path);
    clir::esa::EsaConfig cfg;
    cfg.truncation_c = truncation;
    cfg.min_doc_words_per_lang = min_doc_words;
    cfg.min_df = min_df;
    cfg.bag_semantics = bag;
    const auto index = clir::esa::build_index(corpus, cfg);
    clir::esa::save_esa(index, output);
    std::cerr << "esa: " << index.rows << " concept rows\n";
  }
};

struct TrainLinkOpts {
  std::string events;
  std::string output;
  FilterOpts filter;

  void run() const {
    const auto model = clir::link::estimate_file(events, filter.filters(), filter.stem());
    clir::link::save_link(model, output);
    const auto& stats = model.stats();
    std::cerr << "link: " << stats.word_total.size() << " source words, "
              << stats.article_total.size() << " articles, floor "
              << model.floor_prob() << "\n";
  }
};

// ---------------------------------------------------------------------------
// retrieval and downstream subcommands

struct TranslateOpts {
  std::string model_path;
  std::string corpus_path;
  std::string query_lang;
  double threshold = 1.0;
  double scale = 100.0;
  std::string output;

  void run() const {
    const auto model = clir::link::load_link(model_path);
    const auto corpus = clir::load_corpus(corpus_path);
    const std::string lang = query_lang.empty() ? model.stats().source_lang : query_lang;
    std::ostringstream ss;
    std::size_t empties = 0;
    for (const auto* doc : mono_docs_in(corpus, lang)) {
      bool warned = false;
      const auto bag =
          clir::link::translate_query(model, surface_bag(corpus, *doc), threshold, scale,
                                      &warned);
      if (warned) ++empties;
      json rec;
      rec["id"] = doc->id;
      rec["counts"] = json::object();
      for (const auto& [term, count] : bag) rec["counts"][term] = count;
      ss << rec.dump() << "\n";
    }
    atomic_write_text(output, ss.str());
    if (empties > 0)
      std::cerr << "warning: " << empties << " queries had no linked mass\n";
  }
};

struct RetrieveOpts {
  GlobalOpts* global = nullptr;
  std::string corpus_path;
  std::string method;
  std::string model_path;
  std::string lda_model_path;
  std::string link_model_path;
  std::string weight_model_path;
  std::string translate_model_path;
  std::string query_lang;
  std::string target_lang;
  double alpha = 0.5;
  double beta = 0.5;
  bool idf_weight = false;
  bool weighted = false;
  double threshold = 1.0;
  double scale = 100.0;
  std::string tag;
  std::string output;

  using DocRefs = std::vector<const clir::DocumentCounts*>;

  void run() const {
    const auto corpus = clir::load_corpus(corpus_path);
    const auto queries = mono_docs_in(corpus, query_lang);
    const auto targets = mono_docs_in(corpus, target_lang);
    const std::string run_tag = tag.empty() ? method : tag;

    clir::retrieval::ScoredRun run;
    if (method == "esa")
      run = run_esa(corpus, queries, targets, run_tag);
    else if (method == "plsa")
      run = run_plsa(corpus, queries, targets, run_tag);
    else if (method == "lda")
      run = run_lda_cosine(corpus, queries, targets, run_tag);
    else if (method == "lda-ql")
      run = run_lda_ql(corpus, queries, targets, run_tag);
    else if (method == "link-ql")
      run = run_link_ql(corpus, queries, targets, run_tag);
    else if (method == "combined-query")
      run = run_combined_query(corpus, queries, targets, run_tag);
    else if (method == "combined-word")
      run = run_combined_word(corpus, queries, targets, run_tag);
    else if (method == "tfidf")
      run = run_tfidf(corpus, queries, targets, run_tag);
    else
      throw std::runtime_error("unknown retrieval method '" + method + "'");

    atomic_write_text(output, run_to_text(run));
    std::cerr << "run '" << run_tag << "': " << run.rankings.size() << " queries, "
              << targets.size() << " candidates\n";
  }

  clir::retrieval::ScoredRun run_esa(const clir::MultilingualCorpus& corpus,
                                     const DocRefs& queries, const DocRefs& targets,
                                     const std::string& run_tag) const {
    const auto index = clir::esa::load_esa(model_path);
    std::vector<std::pair<std::string, clir::SparseVec>> qv, tv;
    std::size_t empty_inputs = 0;
    for (const auto* d : queries) {
      auto v = clir::esa::doc_vector(index, corpus, *d, query_lang);
      if (v.empty_input) ++empty_inputs;
      qv.emplace_back(d->id, std::move(v.vec));
    }
    for (const auto* d : targets) {
      auto v = clir::esa::doc_vector(index, corpus, *d, target_lang);
      if (v.empty_input) ++empty_inputs;
      tv.emplace_back(d->id, std::move(v.vec));
    }
    if (empty_inputs > 0)
      std::cerr << "warning: " << empty_inputs
                << " documents shared no vocabulary with the index\n";
    return clir::retrieval::rank_cosine(qv, tv, run_tag, global->effective_threads());
  }

  clir::retrieval::ScoredRun run_plsa(const clir::MultilingualCorpus& corpus,
                                      const DocRefs& queries, const DocRefs& targets,
                                      const std::string& run_tag) const {
    (void)corpus;
    const auto model = clir::plsa::load_plsa(model_path);
    auto vec_of = [&](const clir::DocumentCounts& d) {
      const auto topics = model.doc_topics(model.doc_index_of(d.id));
      return clir::SparseVec::from_dense(topics);
    };
    std::vector<std::pair<std::string, clir::SparseVec>> qv, tv;
    for (const auto* d : queries) qv.emplace_back(d->id, vec_of(*d));
    for (const auto* d : targets) tv.emplace_back(d->id, vec_of(*d));
    return clir::retrieval::rank_cosine(qv, tv, run_tag, global->effective_threads());
  }

  clir::lda::TopicStats infer_stats(const clir::lda::LdaModel& model,
                                    const clir::DocumentCounts& doc,
                                    const clir::DfStats* idf_stats,
                                    std::size_t* missing) const {
    const auto res = clir::lda::infer(model, doc.id, doc.counts,
                                      global->seed ^ fnv1a(doc.id));
    if (!idf_stats) return res.stats;
    return clir::lda::idf_weight_stats(
        res, [&](clir::TermId t) { return idf_stats->idf_opt(t); }, missing);
  }

  clir::retrieval::ScoredRun run_lda_cosine(const clir::MultilingualCorpus& corpus,
                                            const DocRefs& queries, const DocRefs& targets,
                                            const std::string& run_tag) const {
    const auto model = clir::lda::load_lda(model_path);
    std::optional<clir::DfStats> idf_stats;
    if (idf_weight) {
      const auto comparable = corpus.restricted_to(clir::Block::kComparable);
      idf_stats = clir::df_stats(comparable);
    }
    std::size_t missing = 0;
    auto vec_of = [&](const clir::DocumentCounts& d) {
      std::size_t m = 0;
      const auto stats =
          infer_stats(model, d, idf_stats ? &*idf_stats : nullptr, &m);
      missing += m;
      const auto theta = clir::lda::theta_hat(stats, model.config.resolved_alpha());
      return clir::SparseVec::from_dense(theta);
    };
    std::vector<std::pair<std::string, clir::SparseVec>> qv, tv;
    for (const auto* d : queries) qv.emplace_back(d->id, vec_of(*d));
    for (const auto* d : targets) tv.emplace_back(d->id, vec_of(*d));
    if (missing > 0)
      std::cerr << "warning: " << missing << " terms had no idf weight\n";
    return clir::retrieval::rank_cosine(qv, tv, run_tag, global->effective_threads());
  }

  clir::retrieval::ScoredRun run_lda_ql(const clir::MultilingualCorpus& corpus,
                                        const DocRefs& queries, const DocRefs& targets,
                                        const std::string& run_tag) const {
    (void)corpus;
    const auto model = clir::lda::load_lda(model_path);
    std::vector<clir::lda::TopicStats> target_stats;
    target_stats.reserve(targets.size());
    for (const auto* d : targets)
      target_stats.push_back(infer_stats(model, *d, nullptr, nullptr));
    std::map<std::string, std::vector<std::pair<std::string, double>>> scores;
    for (const auto* q : queries) {
      auto& row = scores[q->id];
      row.reserve(targets.size());
      for (std::size_t ti = 0; ti < targets.size(); ++ti)
        row.emplace_back(targets[ti]->id,
                         clir::retrieval::ql_lda(q->counts, model, target_stats[ti]));
    }
    return clir::retrieval::run_from_scores(std::move(scores), run_tag);
  }

  std::vector<clir::link::Bag> article_dists(const clir::link::LinkTranslationModel& model,
                                             const clir::MultilingualCorpus& corpus,
                                             const DocRefs& targets) const {
    std::vector<clir::link::Bag> dists;
    dists.reserve(targets.size());
    std::size_t unlinked = 0;
    for (const auto* d : targets) {
      try {
        dists.push_back(clir::link::article_distribution(model, surface_bag(corpus, *d)));
      } catch (const std::runtime_error&) {
        // no linked mass: every target word falls back to the model floor
        dists.emplace_back();
        ++unlinked;
      }
    }
    if (unlinked > 0)
      std::cerr << "warning: " << unlinked << " documents had no linked words\n";
    return dists;
  }

  clir::retrieval::ScoredRun run_link_ql(const clir::MultilingualCorpus& corpus,
                                         const DocRefs& queries, const DocRefs& targets,
                                         const std::string& run_tag) const {
    const auto model = clir::link::load_link(model_path);
    std::optional<clir::link::LinkTranslationModel> weight_model;
    if (!weight_model_path.empty()) weight_model = clir::link::load_link(weight_model_path);
    const auto dists = article_dists(model, corpus, targets);
    std::map<std::string, std::vector<std::pair<std::string, double>>> scores;
    for (const auto* q : queries) {
      const auto qbag = surface_bag(corpus, *q);
      auto& row = scores[q->id];
      row.reserve(targets.size());
      for (std::size_t ti = 0; ti < targets.size(); ++ti)
        row.emplace_back(targets[ti]->id,
                         clir::retrieval::ql_link(qbag, model, dists[ti], weighted,
                                                  weight_model ? &*weight_model : nullptr));
    }
    return clir::retrieval::run_from_scores(std::move(scores), run_tag);
  }

  clir::retrieval::ScoredRun run_combined_query(const clir::MultilingualCorpus& corpus,
                                                const DocRefs& queries, const DocRefs& targets,
                                                const std::string& run_tag) const {
    const auto lda_model = clir::lda::load_lda(lda_model_path);
    const auto link_model = clir::link::load_link(link_model_path);
    std::optional<clir::link::LinkTranslationModel> weight_model;
    if (!weight_model_path.empty()) weight_model = clir::link::load_link(weight_model_path);
    const auto dists = article_dists(link_model, corpus, targets);
    std::vector<clir::lda::TopicStats> target_stats;
    target_stats.reserve(targets.size());
    for (const auto* d : targets)
      target_stats.push_back(infer_stats(lda_model, *d, nullptr, nullptr));
    std::map<std::string, std::vector<std::pair<std::string, double>>> scores;
    for (const auto* q : queries) {
      const auto qbag = surface_bag(corpus, *q);
      auto& row = scores[q->id];
      for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        const double link_ll =
            clir::retrieval::ql_link(qbag, link_model, dists[ti], weighted,
                                     weight_model ? &*weight_model : nullptr);
        const double lda_ll =
            clir::retrieval::ql_lda(q->counts, lda_model, target_stats[ti]);
        row.emplace_back(targets[ti]->id,
                         clir::retrieval::combine_query_level(link_ll, lda_ll, alpha));
      }
    }
    return clir::retrieval::run_from_scores(std::move(scores), run_tag);
  }

  clir::retrieval::ScoredRun run_combined_word(const clir::MultilingualCorpus& corpus,
                                               const DocRefs& queries, const DocRefs& targets,
                                               const std::string& run_tag) const {
    const auto lda_model = clir::lda::load_lda(lda_model_path);
    const auto link_model = clir::link::load_link(link_model_path);
    std::optional<clir::link::LinkTranslationModel> weight_model;
    if (!weight_model_path.empty()) weight_model = clir::link::load_link(weight_model_path);
    const auto dists = article_dists(link_model, corpus, targets);
    std::vector<clir::lda::TopicStats> target_stats;
    target_stats.reserve(targets.size());
    for (const auto* d : targets)
      target_stats.push_back(infer_stats(lda_model, *d, nullptr, nullptr));

    std::map<std::string, std::vector<std::pair<std::string, double>>> scores;
    std::size_t skipped = 0;
    for (const auto* q : queries) {
      std::vector<clir::retrieval::WordQuery> words;
      words.reserve(q->counts.size());
      for (const auto& [t, c] : q->counts)
        words.push_back({corpus.vocab.surface(t), t, c});
      auto& row = scores[q->id];
      for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        std::size_t s = 0;
        row.emplace_back(targets[ti]->id,
                         clir::retrieval::combine_word_level(
                             words, link_model, dists[ti], lda_model, target_stats[ti],
                             alpha, beta, weight_model ? &*weight_model : nullptr, &s));
        skipped += s;
      }
    }
    if (skipped > 0)
      std::cerr << "warning: " << skipped
                << " query word occurrences were outside the topic model vocabulary\n";
    return clir::retrieval::run_from_scores(std::move(scores), run_tag);
  }

  clir::retrieval::ScoredRun run_tfidf(const clir::MultilingualCorpus& corpus,
                                       const DocRefs& queries, const DocRefs& targets,
                                       const std::string& run_tag) const {
    clir::DfStats stats;
    stats.num_docs = targets.size();
    for (const auto* d : targets)
      for (const auto& [t, c] : d->counts)
        if (c > 0.0) ++stats.df[t];

    std::optional<clir::link::LinkTranslationModel> translator;
    if (!translate_model_path.empty())
      translator = clir::link::load_link(translate_model_path);

    std::size_t skipped = 0, empty_translations = 0;
    std::vector<std::pair<std::string, clir::SparseVec>> qv, tv;
    for (const auto* q : queries) {
      std::vector<std::pair<clir::TermId, double>> bag;
      if (translator) {
        bool warned = false;
        const auto translated = clir::link::translate_query(
            *translator, surface_bag(corpus, *q), threshold, scale, &warned);
        if (warned) ++empty_translations;
        for (const auto& [term, count] : translated)
          if (auto id = corpus.vocab.find(target_lang, term)) bag.emplace_back(*id, count);
        std::sort(bag.begin(), bag.end());
      } else {
        bag.assign(q->counts.begin(), q->counts.end());
      }
      std::size_t s = 0;
      clir::SparseVec v;
      if (!bag.empty()) v = clir::retrieval::tfidf_vector(stats, bag, &s);
      skipped += s;
      qv.emplace_back(q->id, std::move(v));
    }
    for (const auto* d : targets) {
      std::size_t s = 0;
      tv.emplace_back(d->id, clir::retrieval::tfidf_vector(stats, d->counts, &s));
      skipped += s;
    }
    if (empty_translations > 0)
      std::cerr << "warning: " << empty_translations << " queries translated to nothing\n";
    if (skipped > 0)
      std::cerr << "note: " << skipped << " term occurrences were outside the target df table\n";
    return clir::retrieval::rank_cosine(qv, tv, run_tag, global->effective_threads());
  }
};

struct FuseOpts {
  std::vector<std::string> runs;
  double alpha = -1.0;
  bool average = false;
  bool concat = false;
  std::string tag = "fused";
  std::string output;

  void run() const {
    if (average) {
      std::vector<clir::retrieval::ScoredRun> loaded;
      loaded.reserve(runs.size());
      for (const auto& r : runs) loaded.push_back(load_run(r));
      atomic_write_text(output, run_to_text(clir::retrieval::average_runs(loaded, tag)));
      return;
    }
    if (alpha < 0.0)
      throw std::runtime_error("fuse needs either --average or --alpha");
    if (runs.size() != 2)
      throw std::runtime_error("fuse --alpha interpolates exactly two runs");
    const auto a = load_run(runs[0]);
    const auto b = load_run(runs[1]);
    const auto fused = concat ? clir::retrieval::concat_scores(a, b, alpha, tag)
                              : clir::retrieval::interp_scores(a, b, alpha, tag);
    atomic_write_text(output, run_to_text(fused));
  }
};

struct EvalOpts {
  std::string run_path;
  std::string qrels_path;
  std::string corpus_path;
  std::string compare_path;
  std::string csv;

  void run() const {
    const auto run = load_run(run_path);
    clir::eval::Qrels qrels;
    clir::eval::EvalReport report;
    if (!qrels_path.empty()) {
      qrels = clir::eval::read_qrels_file(qrels_path);
      report = clir::eval::evaluate_run(run, qrels);
    } else if (!corpus_path.empty()) {
      const auto corpus = clir::load_corpus(corpus_path);
      report = clir::eval::mate_harness(run, corpus.mates);
      qrels = qrels_from_mates(corpus);
    } else {
      throw std::runtime_error("eval needs --qrels or --corpus for mate pairs");
    }
    std::cout << clir::eval::format_report(report) << "\n";
    if (!csv.empty()) {
      std::ostringstream ss;
      clir::eval::write_report_csv(report, ss);
      atomic_write_text(csv, ss.str());
    }
    if (!compare_path.empty()) {
      const auto other = clir::eval::evaluate_run(load_run(compare_path), qrels);
      std::vector<double> a, b;
      for (const auto& [q, ap] : report.avg_precision) {
        auto it = other.avg_precision.find(q);
        if (it != other.avg_precision.end()) {
          a.push_back(ap);
          b.push_back(it->second);
        }
      }
      const auto t = clir::eval::paired_t_test(a, b);
      std::cout << "paired t test vs " << compare_path << ": t=" << t.t << " p=" << t.p
                << (t.degenerate ? " (degenerate)" : "") << " over " << a.size()
                << " queries\n";
    }
  }
};

struct GridOpts {
  std::string run_a;
  std::string run_b;
  std::string run_c;
  std::string corpus_path;
  std::string qrels_path;
  std::string metric = "mrr";
  double lo = 0.0;
  double hi = 1.0;
  double step = 0.05;
  std::string surface;

  void run() const {
    const auto a = load_run(run_a);
    const auto b = load_run(run_b);
    std::optional<clir::retrieval::ScoredRun> c;
    if (!run_c.empty()) c = load_run(run_c);

    clir::eval::Qrels qrels;
    std::vector<clir::MatePair> mates;
    bool use_mates = false;
    if (!qrels_path.empty()) {
      qrels = clir::eval::read_qrels_file(qrels_path);
    } else if (!corpus_path.empty()) {
      const auto corpus = clir::load_corpus(corpus_path);
      mates = corpus.mates;
      use_mates = true;
    } else {
      throw std::runtime_error("grid needs --qrels or --corpus for mate pairs");
    }

    auto evaluate = [&](double alpha, double beta) {
      auto fused = clir::retrieval::interp_scores(a, b, alpha, "grid");
      if (c) fused = clir::retrieval::interp_scores(fused, *c, beta, "grid");
      const auto report = use_mates ? clir::eval::mate_harness(fused, mates)
                                    : clir::eval::evaluate_run(fused, qrels);
      return metric == "map" ? report.map : report.mrr;
    };
    const auto grid = clir::retrieval::grid_search(evaluate, lo, hi, lo, hi, step);
    if (!surface.empty()) {
      std::ostringstream ss;
      clir::retrieval::write_grid_csv(grid, ss);
      atomic_write_text(surface, ss.str());
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "best alpha=%.10g beta=%.10g %s=%.17g\n",
                  grid.best_alpha, grid.best_beta, metric.c_str(), grid.best_score);
    std::cout << buf;
  }
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  try {
    args = expand_config(std::move(args), &config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  CLI::App app{"cross-language topic models and retrieval"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto global = std::make_shared<GlobalOpts>();
  app.add_option("--seed", global->seed, "Random seed for everything stochastic")
      ->capture_default_str();
  app.add_option("--threads", global->threads, "Worker threads for ranking")
      ->capture_default_str();
  app.add_flag("--sequential", global->sequential, "Force single-threaded execution");

  // corpus
  auto* corpus_cmd = app.add_subcommand("corpus", "Build and transform corpora");
  corpus_cmd->require_subcommand(1);

  auto synth = std::make_shared<SynthOpts>();
  synth->global = global.get();
  auto* synth_cmd = corpus_cmd->add_subcommand("synth", "Generate a planted-topic corpus");
  synth_cmd->add_option("--output", synth->output, "Output JSONL path")->required();
  synth_cmd->add_option("--topics", synth->topics)->capture_default_str();
  synth_cmd->add_option("--vocab-per-lang", synth->vocab_per_lang)->capture_default_str();
  synth_cmd->add_option("--comparable", synth->comparable)->capture_default_str();
  synth_cmd->add_option("--mates", synth->mates)->capture_default_str();
  synth_cmd->add_option("--languages", synth->languages)->capture_default_str();
  synth_cmd->add_option("--lengths", synth->lengths, "Per-language document lengths")
      ->capture_default_str();
  synth_cmd->add_option("--skew-fraction", synth->skew_fraction)->capture_default_str();
  synth_cmd->add_option("--skewed-lengths", synth->skewed_lengths);
  synth_cmd->add_option("--concentration", synth->concentration)->capture_default_str();
  synth_cmd->add_option("--sharpness", synth->sharpness)->capture_default_str();
  synth_cmd->callback([synth] { synth->run(); });

  auto build = std::make_shared<BuildOpts>();
  auto* build_cmd = corpus_cmd->add_subcommand("build", "Tokenize JSONL into a corpus file");
  build_cmd->add_option("--input", build->input, "JSONL corpus")->required();
  build_cmd->add_option("--output", build->output, "Corpus container path")->required();
  build_cmd->add_option("--languages", build->languages, "Comma list; empty discovers");
  build->filter.attach(build_cmd);
  build_cmd->callback([build] { build->run(); });

  auto weight = std::make_shared<WeightOpts>();
  auto* weight_cmd = corpus_cmd->add_subcommand("weight", "Weight comparable documents");
  weight_cmd->add_option("--input", weight->input)->required();
  weight_cmd->add_option("--output", weight->output)->required();
  weight_cmd->add_option("--scheme", weight->scheme, "none, constant or dynamic")
      ->check(CLI::IsMember({"none", "constant", "dynamic"}))
      ->capture_default_str();
  weight_cmd->add_option("--constant", weight->constant)->capture_default_str();
  weight_cmd->add_option("--block", weight->block, "Block the constant scheme scales")
      ->check(CLI::IsMember({"comparable", "mono"}))
      ->capture_default_str();
  weight_cmd->add_option("--floor", weight->floor)->capture_default_str();
  weight_cmd->callback([weight] { weight->run(); });

  auto norm = std::make_shared<NormalizeOpts>();
  norm->global = global.get();
  auto* norm_cmd = corpus_cmd->add_subcommand("normalize", "Normalize document lengths");
  norm_cmd->add_option("--input", norm->input)->required();
  norm_cmd->add_option("--output", norm->output)->required();
  norm_cmd->add_option("--method", norm->method, "cutoff, downsample or stretch")
      ->check(CLI::IsMember({"cutoff", "downsample", "stretch"}))
      ->capture_default_str();
  norm_cmd->add_option("--cutoff", norm->cutoff)->capture_default_str();
  norm_cmd->callback([norm] { norm->run(); });

  // train
  auto* train_cmd = app.add_subcommand("train", "Train models");
  train_cmd->require_subcommand(1);

  auto plsa = std::make_shared<TrainPlsaOpts>();
  plsa->global = global.get();
  auto* plsa_cmd = train_cmd->add_subcommand("plsa", "EM-trained topic model");
  plsa_cmd->add_option("--corpus", plsa->corpus_path)->required();
  plsa_cmd->add_option("--output", plsa->output)->required();
  plsa_cmd->add_option("--topics", plsa->topics)->capture_default_str();
  plsa_cmd->add_option("--iterations", plsa->iterations)->capture_default_str();
  plsa_cmd->add_option("--mode", plsa->mode, "multilingual or standard")
      ->check(CLI::IsMember({"multilingual", "standard"}))
      ->capture_default_str();
  plsa_cmd->add_option("--block", plsa->block, "all, comparable or mono")
      ->check(CLI::IsMember({"all", "comparable", "mono"}))
      ->capture_default_str();
  plsa_cmd->add_option("--ll-trace", plsa->ll_trace, "CSV of per-iteration log likelihood");
  plsa_cmd->callback([plsa] { plsa->run(); });

  auto lda = std::make_shared<TrainLdaOpts>();
  lda->global = global.get();
  auto* lda_cmd = train_cmd->add_subcommand("lda", "Gibbs-sampled topic model");
  lda_cmd->add_option("--corpus", lda->corpus_path)->required();
  lda_cmd->add_option("--output", lda->output)->required();
  lda_cmd->add_option("--topics", lda->topics)->capture_default_str();
  lda_cmd->add_option("--alpha", lda->alpha, "Negative uses 50 / topics")
      ->capture_default_str();
  lda_cmd->add_option("--beta", lda->beta)->capture_default_str();
  lda_cmd->add_option("--burnin", lda->burnin)->capture_default_str();
  lda_cmd->add_option("--samples", lda->samples)->capture_default_str();
  lda_cmd->add_option("--infer-burnin", lda->infer_burnin)->capture_default_str();
  lda_cmd->add_option("--infer-samples", lda->infer_samples)->capture_default_str();
  lda_cmd->add_option("--mode", lda->mode, "multilingual or standard")
      ->check(CLI::IsMember({"multilingual", "standard"}))
      ->capture_default_str();
  lda_cmd->add_option("--block", lda->block, "all, comparable or mono")
      ->check(CLI::IsMember({"all", "comparable", "mono"}))
      ->capture_default_str();
  lda_cmd->add_option("--topics-csv", lda->topics_csv, "Dump the strongest terms per topic");
  lda_cmd->add_option("--top-terms", lda->top_terms)->capture_default_str();
  lda_cmd->callback([lda] { lda->run(); });

  auto esa = std::make_shared<TrainEsaOpts>();
  auto* esa_cmd = train_cmd->add_subcommand("esa", "Concept index over comparable documents");
  esa_cmd->add_option("--corpus", esa->corpus_path)->required();
  esa_cmd->add_option("--output", esa->output)->required();
  esa_cmd->add_option("--truncation", esa->truncation)->capture_default_str();
  esa_cmd->add_option("--min-doc-words", esa->min_doc_words)->capture_default_str();
  esa_cmd->add_option("--min-df", esa->min_df)->capture_default_str();
  esa_cmd->add_flag("--bag", esa->bag, "Bag instead of set query combination");
  esa_cmd->callback([esa] { esa->run(); });

  auto link = std::make_shared<TrainLinkOpts>();
  auto* link_cmd = train_cmd->add_subcommand("link", "Anchor-link translation model");
  link_cmd->add_option("--events", link->events, "Link events JSONL")->required();
  link_cmd->add_option("--output", link->output)->required();
  link->filter.attach(link_cmd);
  link_cmd->callback([link] { link->run(); });

  // retrieval pipeline
  auto translate = std::make_shared<TranslateOpts>();
  auto* translate_cmd = app.add_subcommand("translate", "Translate query documents");
  translate_cmd->add_option("--model", translate->model_path, "Link model")->required();
  translate_cmd->add_option("--corpus", translate->corpus_path)->required();
  translate_cmd->add_option("--query-lang", translate->query_lang,
                            "Defaults to the model's source language");
  translate_cmd->add_option("--threshold", translate->threshold)->capture_default_str();
  translate_cmd->add_option("--scale", translate->scale)->capture_default_str();
  translate_cmd->add_option("--output", translate->output)->required();
  translate_cmd->callback([translate] { translate->run(); });

  auto retrieve = std::make_shared<RetrieveOpts>();
  retrieve->global = global.get();
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Rank target documents per query");
  retrieve_cmd->add_option("--corpus", retrieve->corpus_path)->required();
  retrieve_cmd
      ->add_option("--method", retrieve->method,
                   "esa, plsa, lda, lda-ql, link-ql, combined-query, combined-word, tfidf")
      ->required()
      ->check(CLI::IsMember({"esa", "plsa", "lda", "lda-ql", "link-ql", "combined-query",
                             "combined-word", "tfidf"}));
  retrieve_cmd->add_option("--model", retrieve->model_path, "Model for single-model methods");
  retrieve_cmd->add_option("--lda-model", retrieve->lda_model_path);
  retrieve_cmd->add_option("--link-model", retrieve->link_model_path);
  retrieve_cmd->add_option("--weight-model", retrieve->weight_model_path,
                           "Link model supplying P(linked | word) weights");
  retrieve_cmd->add_option("--translate-model", retrieve->translate_model_path,
                           "Link model for tfidf query translation");
  retrieve_cmd->add_option("--query-lang", retrieve->query_lang)->required();
  retrieve_cmd->add_option("--target-lang", retrieve->target_lang)->required();
  retrieve_cmd->add_option("--alpha", retrieve->alpha)->capture_default_str();
  retrieve_cmd->add_option("--beta", retrieve->beta)->capture_default_str();
  retrieve_cmd->add_flag("--idf-weight", retrieve->idf_weight,
                         "Weight inferred topic counts by comparable-block idf");
  retrieve_cmd->add_flag("--weighted", retrieve->weighted,
                         "Weight link likelihood terms by P(linked | word)");
  retrieve_cmd->add_option("--threshold", retrieve->threshold)->capture_default_str();
  retrieve_cmd->add_option("--scale", retrieve->scale)->capture_default_str();
  retrieve_cmd->add_option("--tag", retrieve->tag, "Run tag; defaults to the method");
  retrieve_cmd->add_option("--output", retrieve->output, "TREC run file")->required();
  retrieve_cmd->callback([retrieve] { retrieve->run(); });

  auto fuse = std::make_shared<FuseOpts>();
  auto* fuse_cmd = app.add_subcommand("fuse", "Combine runs by score");
  fuse_cmd->add_option("--run", fuse->runs, "Run file, repeatable")
      ->required()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  fuse_cmd->add_option("--alpha", fuse->alpha, "Interpolation weight on the first run");
  fuse_cmd->add_flag("--average", fuse->average, "Average all runs instead");
  fuse_cmd->add_flag("--concat", fuse->concat,
                     "Concatenation-style fusion (squared-weight normalization)");
  fuse_cmd->add_option("--tag", fuse->tag)->capture_default_str();
  fuse_cmd->add_option("--output", fuse->output)->required();
  fuse_cmd->callback([fuse] { fuse->run(); });

  auto eval = std::make_shared<EvalOpts>();
  auto* eval_cmd = app.add_subcommand("eval", "Score a run");
  eval_cmd->add_option("--run", eval->run_path)->required();
  eval_cmd->add_option("--qrels", eval->qrels_path, "TREC qrels file");
  eval_cmd->add_option("--corpus", eval->corpus_path, "Corpus with mate pairs");
  eval_cmd->add_option("--compare", eval->compare_path, "Second run for a paired t test");
  eval_cmd->add_option("--csv", eval->csv, "Per-query CSV output");
  eval_cmd->callback([eval] { eval->run(); });

  auto grid = std::make_shared<GridOpts>();
  auto* grid_cmd = app.add_subcommand("grid", "Interpolation grid search over runs");
  grid_cmd->add_option("--run-a", grid->run_a)->required();
  grid_cmd->add_option("--run-b", grid->run_b)->required();
  grid_cmd->add_option("--run-c", grid->run_c, "Optional third run on the beta axis");
  grid_cmd->add_option("--corpus", grid->corpus_path, "Corpus with mate pairs");
  grid_cmd->add_option("--qrels", grid->qrels_path);
  grid_cmd->add_option("--metric", grid->metric)
      ->check(CLI::IsMember({"mrr", "map"}))
      ->capture_default_str();
  grid_cmd->add_option("--lo", grid->lo)->capture_default_str();
  grid_cmd->add_option("--hi", grid->hi)->capture_default_str();
  grid_cmd->add_option("--step", grid->step)->capture_default_str();
  grid_cmd->add_option("--surface", grid->surface, "CSV of the full grid surface");
  grid_cmd->callback([grid] { grid->run(); });

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  echo_provenance(app, config_path);
  return 0;
}
