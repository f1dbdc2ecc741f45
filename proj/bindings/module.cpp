// Python bindings over the core library. The surface mirrors what the CLI
// uses: corpus construction, the four models, score combination and
// evaluation. Sparse vectors cross the boundary as lists of (index, value).

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "clir/corpus.hpp"
#include "clir/esa.hpp"
#include "clir/eval.hpp"
#include "clir/lda.hpp"
#include "clir/link_model.hpp"
#include "clir/plsa.hpp"
#include "clir/retrieval.hpp"
#include "clir/rng.hpp"
#include "clir/sparse.hpp"

namespace py = pybind11;
using namespace clir;

namespace {

std::vector<SparseVec::Entry> sparse_entries(const SparseVec& v) { return v.entries(); }

SparseVec sparse_from(const std::vector<SparseVec::Entry>& entries) {
  return SparseVec::from_unsorted(entries);
}

FilterConfig filters_from_kwargs(int min_word_len, int max_word_len, int min_count,
                                 int min_df, int min_doc_words,
                                 const std::map<std::string, std::set<std::string>>& stopwords) {
  FilterConfig cfg;
  cfg.min_word_len = min_word_len;
  cfg.max_word_len = max_word_len;
  cfg.min_global_count = min_count;
  cfg.min_df = min_df;
  cfg.min_doc_words_per_lang = min_doc_words;
  cfg.stopwords = stopwords;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "cross-language topic models and retrieval";

  // ---- corpus ------------------------------------------------------------
  py::enum_<Block>(m, "Block")
      .value("COMPARABLE", Block::kComparable)
      .value("MONO", Block::kMono);

  py::class_<Vocabulary>(m, "Vocabulary")
      .def("__len__", &Vocabulary::size)
      .def_property_readonly("languages", &Vocabulary::languages)
      .def("find",
           [](const Vocabulary& v, const std::string& lang, const std::string& surface) {
             return v.find(lang, surface);
           })
      .def("surface", &Vocabulary::surface)
      .def("term_language", &Vocabulary::term_language)
      .def("prefixed", &Vocabulary::prefixed);

  py::class_<DocumentCounts>(m, "Document")
      .def_readonly("id", &DocumentCounts::id)
      .def_readonly("block", &DocumentCounts::block)
      .def_readonly("counts", &DocumentCounts::counts)
      .def_property_readonly("length", &DocumentCounts::length);

  py::class_<MatePair>(m, "MatePair")
      .def_readonly("query_doc", &MatePair::query_doc)
      .def_readonly("target_doc", &MatePair::target_doc);

  py::class_<MultilingualCorpus>(m, "Corpus")
      .def_readonly("vocab", &MultilingualCorpus::vocab)
      .def_readonly("docs", &MultilingualCorpus::docs)
      .def_readonly("mates", &MultilingualCorpus::mates)
      .def("nnz", &MultilingualCorpus::nnz)
      .def("total_mass", &MultilingualCorpus::total_mass)
      .def("restricted_to", &MultilingualCorpus::restricted_to);

  m.def(
      "tokenize",
      [](const std::string& text, const std::string& lang, int min_word_len,
         int max_word_len) {
        FilterConfig cfg;
        cfg.min_word_len = min_word_len;
        cfg.max_word_len = max_word_len;
        return tokenize(text, lang, cfg);
      },
      py::arg("text"), py::arg("lang"), py::arg("min_word_len") = 2,
      py::arg("max_word_len") = 64);

  m.def(
      "build_corpus",
      [](const std::string& jsonl, std::vector<std::string> languages, int min_word_len,
         int max_word_len, int min_count, int min_df, int min_doc_words,
         const std::map<std::string, std::set<std::string>>& stopwords) {
        std::istringstream in(jsonl);
        return build_corpus(in,
                            filters_from_kwargs(min_word_len, max_word_len, min_count,
                                                min_df, min_doc_words, stopwords),
                            std::move(languages));
      },
      py::arg("jsonl"), py::arg("languages") = std::vector<std::string>{},
      py::arg("min_word_len") = 2, py::arg("max_word_len") = 64, py::arg("min_count") = 1,
      py::arg("min_df") = 1, py::arg("min_doc_words") = 0,
      py::arg("stopwords") = std::map<std::string, std::set<std::string>>{});

  m.def("save_corpus", &save_corpus, py::arg("corpus"), py::arg("path"));
  m.def("load_corpus", &load_corpus, py::arg("path"));
  m.def("dynamic_weight", &dynamic_weight, py::arg("len_a"), py::arg("len_b"),
        py::arg("floor") = 0.001);

  py::class_<PlantedSpec>(m, "PlantedSpec")
      .def(py::init<>())
      .def_readwrite("topics", &PlantedSpec::topics)
      .def_readwrite("vocab_per_lang", &PlantedSpec::vocab_per_lang)
      .def_readwrite("comparable_docs", &PlantedSpec::comparable_docs)
      .def_readwrite("mate_pairs", &PlantedSpec::mate_pairs)
      .def_readwrite("languages", &PlantedSpec::languages)
      .def_readwrite("doc_lengths", &PlantedSpec::doc_lengths)
      .def_readwrite("skew_fraction", &PlantedSpec::skew_fraction)
      .def_readwrite("skewed_lengths", &PlantedSpec::skewed_lengths)
      .def_readwrite("mixture_concentration", &PlantedSpec::mixture_concentration)
      .def_readwrite("topic_sharpness", &PlantedSpec::topic_sharpness)
      .def_readwrite("seed", &PlantedSpec::seed);
  m.def("generate_planted_corpus", &generate_planted_corpus, py::arg("spec"));

  // ---- plsa --------------------------------------------------------------
  auto plsa_mod = m.def_submodule("plsa");
  py::enum_<plsa::Mode>(plsa_mod, "Mode")
      .value("MULTILINGUAL", plsa::Mode::kMultilingual)
      .value("STANDARD", plsa::Mode::kStandard);

  py::class_<plsa::PlsaModel>(plsa_mod, "Model")
      .def_readonly("doc_ids", &plsa::PlsaModel::doc_ids)
      .def_readonly("ll_trace", &plsa::PlsaModel::ll_trace)
      .def_property_readonly("topics",
                             [](const plsa::PlsaModel& mdl) { return mdl.config.topics; })
      .def("doc_topics",
           [](const plsa::PlsaModel& mdl, std::size_t doc) {
             auto s = mdl.doc_topics(doc);
             return std::vector<double>(s.begin(), s.end());
           })
      .def("word_topics",
           [](const plsa::PlsaModel& mdl, TermId term) {
             auto s = mdl.word_topics(term);
             return std::vector<double>(s.begin(), s.end());
           })
      .def("doc_index_of", &plsa::PlsaModel::doc_index_of);

  plsa_mod.def(
      "train",
      [](const MultilingualCorpus& corpus, int topics, int iterations, std::uint64_t seed,
         plsa::Mode mode) {
        plsa::PlsaConfig cfg;
        cfg.topics = topics;
        cfg.iterations = iterations;
        cfg.seed = seed;
        cfg.mode = mode;
        return plsa::train(corpus, cfg);
      },
      py::arg("corpus"), py::arg("topics") = 10, py::arg("iterations") = 100,
      py::arg("seed") = 0, py::arg("mode") = plsa::Mode::kMultilingual);
  plsa_mod.def("log_likelihood", &plsa::log_likelihood, py::arg("model"), py::arg("corpus"));
  plsa_mod.def(
      "save",
      [](const plsa::PlsaModel& mdl, const std::filesystem::path& path,
         const std::vector<std::string>& languages) { plsa::save_plsa(mdl, path, languages); },
      py::arg("model"), py::arg("path"), py::arg("languages"));
  plsa_mod.def("load", &plsa::load_plsa, py::arg("path"));

  // ---- lda ---------------------------------------------------------------
  auto lda_mod = m.def_submodule("lda");
  py::enum_<lda::Mode>(lda_mod, "Mode")
      .value("MULTILINGUAL", lda::Mode::kMultilingual)
      .value("STANDARD", lda::Mode::kStandard);

  py::class_<lda::TopicStats>(lda_mod, "TopicStats")
      .def_readonly("doc_id", &lda::TopicStats::doc_id)
      .def_readonly("counts", &lda::TopicStats::counts)
      .def_readonly("total", &lda::TopicStats::total)
      .def_readonly("skipped_terms", &lda::TopicStats::skipped_terms);

  py::class_<lda::InferenceResult>(lda_mod, "InferenceResult")
      .def_readonly("stats", &lda::InferenceResult::stats)
      .def_readonly("positions", &lda::InferenceResult::positions)
      .def_readonly("sweep_topics", &lda::InferenceResult::sweep_topics);

  py::class_<lda::LdaModel>(lda_mod, "Model")
      .def_readonly("doc_ids", &lda::LdaModel::doc_ids)
      .def_property_readonly("topics",
                             [](const lda::LdaModel& mdl) { return mdl.config.topics; })
      .def_property_readonly("alpha",
                             [](const lda::LdaModel& mdl) { return mdl.config.resolved_alpha(); })
      .def_property_readonly("beta", [](const lda::LdaModel& mdl) { return mdl.config.beta; })
      .def("phi_hat",
           [](const lda::LdaModel& mdl, TermId term) { return mdl.phi_hat(term); })
      .def("theta_hat",
           [](const lda::LdaModel& mdl, std::size_t doc) { return lda::theta_hat(mdl, doc); })
      .def("doc_index_of", &lda::LdaModel::doc_index_of);

  lda_mod.def(
      "train",
      [](const MultilingualCorpus& corpus, int topics, double alpha, double beta, int burnin,
         int samples, std::uint64_t seed, lda::Mode mode) {
        lda::LdaConfig cfg;
        cfg.topics = topics;
        cfg.alpha = alpha;
        cfg.beta = beta;
        cfg.burnin_train = burnin;
        cfg.avg_train = samples;
        cfg.seed = seed;
        return lda::train(corpus, cfg, mode);
      },
      py::arg("corpus"), py::arg("topics") = 10, py::arg("alpha") = -1.0,
      py::arg("beta") = 0.1, py::arg("burnin") = 100, py::arg("samples") = 50,
      py::arg("seed") = 0, py::arg("mode") = lda::Mode::kMultilingual);
  lda_mod.def(
      "infer",
      [](const lda::LdaModel& mdl, const std::string& doc_id,
         const std::vector<std::pair<TermId, double>>& counts, std::uint64_t seed) {
        return lda::infer(mdl, doc_id, counts, seed);
      },
      py::arg("model"), py::arg("doc_id"), py::arg("counts"), py::arg("seed"));
  lda_mod.def(
      "theta_hat",
      [](const lda::TopicStats& stats, double alpha) { return lda::theta_hat(stats, alpha); },
      py::arg("stats"), py::arg("alpha"));
  lda_mod.def(
      "dirichlet_log_density",
      [](const std::vector<double>& p, const std::vector<double>& alpha) {
        return lda::dirichlet_log_density(p, alpha);
      },
      py::arg("p"), py::arg("alpha"));
  lda_mod.def(
      "save",
      [](const lda::LdaModel& mdl, const std::filesystem::path& path,
         const std::vector<std::string>& languages) { lda::save_lda(mdl, path, languages); },
      py::arg("model"), py::arg("path"), py::arg("languages"));
  lda_mod.def("load", &lda::load_lda, py::arg("path"));

  // ---- esa ---------------------------------------------------------------
  auto esa_mod = m.def_submodule("esa");
  py::class_<esa::EsaIndex>(esa_mod, "Index")
      .def_readonly("rows", &esa::EsaIndex::rows)
      .def_readonly("row_doc_ids", &esa::EsaIndex::row_doc_ids)
      .def_readonly("languages", &esa::EsaIndex::languages);

  esa_mod.def("association_strength", &esa::association_strength, py::arg("tf"),
              py::arg("doc_len"), py::arg("num_docs"), py::arg("df"));
  esa_mod.def(
      "build_index",
      [](const MultilingualCorpus& corpus, int truncation, int min_doc_words, int min_df,
         bool bag) {
        esa::EsaConfig cfg;
        cfg.truncation_c = truncation;
        cfg.min_doc_words_per_lang = min_doc_words;
        cfg.min_df = min_df;
        cfg.bag_semantics = bag;
        return esa::build_index(corpus, cfg);
      },
      py::arg("corpus"), py::arg("truncation") = 10000, py::arg("min_doc_words") = 100,
      py::arg("min_df") = 2, py::arg("bag") = false);
  esa_mod.def(
      "text_vector",
      [](const esa::EsaIndex& index, const std::vector<std::string>& terms,
         const std::string& lang) {
        const auto cv = esa::text_vector(index, terms, lang);
        return py::make_tuple(sparse_entries(cv.vec), cv.empty_input);
      },
      py::arg("index"), py::arg("terms"), py::arg("lang"));
  esa_mod.def("save", &esa::save_esa, py::arg("index"), py::arg("path"));
  esa_mod.def("load", &esa::load_esa, py::arg("path"));

  // ---- link --------------------------------------------------------------
  auto link_mod = m.def_submodule("link");
  py::class_<link::LinkTranslationModel>(link_mod, "Model")
      .def("p_linked", &link::LinkTranslationModel::p_linked, py::arg("word"))
      .def("p_article_given_linked", &link::LinkTranslationModel::p_article_given_linked,
           py::arg("article"), py::arg("word"))
      .def("p_target_given_article", &link::LinkTranslationModel::p_target_given_article,
           py::arg("target_term"), py::arg("article"))
      .def_property_readonly("floor", &link::LinkTranslationModel::floor_prob);

  link_mod.def(
      "estimate",
      [](const std::string& events_jsonl) {
        std::istringstream in(events_jsonl);
        return link::estimate(in);
      },
      py::arg("events_jsonl"));
  link_mod.def("estimate_file", [](const std::filesystem::path& p) {
    return link::estimate_file(p);
  });
  link_mod.def("article_distribution", &link::article_distribution, py::arg("model"),
               py::arg("doc"));
  link_mod.def("translation_distribution", &link::translation_distribution, py::arg("model"),
               py::arg("doc"), py::arg("normalized"));
  link_mod.def("chain_prob", &link::chain_prob, py::arg("model"), py::arg("target_term"),
               py::arg("article_dist"));
  link_mod.def("link_lm_prob", &link::link_lm_prob, py::arg("model"), py::arg("target_term"),
               py::arg("article_dist"));
  link_mod.def(
      "translate_query",
      [](const link::LinkTranslationModel& mdl, const link::Bag& query, double threshold,
         double scale) {
        bool warned = false;
        auto bag = link::translate_query(mdl, query, threshold, scale, &warned);
        return py::make_tuple(bag, warned);
      },
      py::arg("model"), py::arg("query"), py::arg("threshold") = 1.0,
      py::arg("scale") = 100.0);
  link_mod.def("save", &link::save_link, py::arg("model"), py::arg("path"));
  link_mod.def("load", &link::load_link, py::arg("path"));

  // ---- retrieval ---------------------------------------------------------
  auto ret_mod = m.def_submodule("retrieval");
  py::class_<retrieval::ScoredRun>(ret_mod, "Run")
      .def_readonly("tag", &retrieval::ScoredRun::tag)
      .def_readonly("rankings", &retrieval::ScoredRun::rankings);

  ret_mod.def(
      "cosine",
      [](const std::vector<std::pair<std::uint32_t, double>>& a,
         const std::vector<std::pair<std::uint32_t, double>>& b) {
        return retrieval::cosine(sparse_from(a), sparse_from(b));
      },
      py::arg("a"), py::arg("b"));
  ret_mod.def(
      "rank_cosine",
      [](const std::vector<std::pair<std::string, std::vector<std::pair<std::uint32_t, double>>>>&
             queries,
         const std::vector<std::pair<std::string, std::vector<std::pair<std::uint32_t, double>>>>&
             candidates,
         const std::string& tag, int threads) {
        std::vector<std::pair<std::string, SparseVec>> q, c;
        for (const auto& [id, v] : queries) q.emplace_back(id, sparse_from(v));
        for (const auto& [id, v] : candidates) c.emplace_back(id, sparse_from(v));
        return retrieval::rank_cosine(q, c, tag, threads);
      },
      py::arg("queries"), py::arg("candidates"), py::arg("tag") = "run",
      py::arg("threads") = 1);
  ret_mod.def("interp_scores", &retrieval::interp_scores, py::arg("a"), py::arg("b"),
              py::arg("alpha"), py::arg("tag") = "interp");
  ret_mod.def("concat_scores", &retrieval::concat_scores, py::arg("a"), py::arg("b"),
              py::arg("alpha"), py::arg("tag") = "concat");
  ret_mod.def(
      "average_runs",
      [](const std::vector<retrieval::ScoredRun>& runs, const std::string& tag) {
        return retrieval::average_runs(runs, tag);
      },
      py::arg("runs"), py::arg("tag") = "avg");
  ret_mod.def(
      "ql_lda",
      [](const std::vector<std::pair<TermId, double>>& query, const lda::LdaModel& mdl,
         const lda::TopicStats& stats) { return retrieval::ql_lda(query, mdl, stats); },
      py::arg("query"), py::arg("model"), py::arg("doc_stats"));
  ret_mod.def("ql_link", &retrieval::ql_link, py::arg("query"), py::arg("model"),
              py::arg("article_dist"), py::arg("weighted") = false,
              py::arg("weight_model") = nullptr);
  ret_mod.def("combine_query_level", &retrieval::combine_query_level, py::arg("link_ll"),
              py::arg("lda_ll"), py::arg("alpha"));
  ret_mod.def(
      "grid_search",
      [](const std::function<double(double, double)>& evaluate, double lo, double hi,
         double step) {
        const auto g = retrieval::grid_search(evaluate, lo, hi, lo, hi, step);
        py::list surface;
        for (const auto& p : g.surface) surface.append(py::make_tuple(p.alpha, p.beta, p.score));
        return py::make_tuple(g.best_alpha, g.best_beta, g.best_score, surface);
      },
      py::arg("evaluate"), py::arg("lo") = 0.0, py::arg("hi") = 1.0, py::arg("step") = 0.05);
  ret_mod.def(
      "write_trec_run",
      [](const retrieval::ScoredRun& run) {
        std::ostringstream ss;
        retrieval::write_trec_run(run, ss);
        return ss.str();
      },
      py::arg("run"));
  ret_mod.def(
      "read_trec_run",
      [](const std::string& text) {
        std::istringstream in(text);
        return retrieval::read_trec_run(in);
      },
      py::arg("text"));

  // ---- eval --------------------------------------------------------------
  auto eval_mod = m.def_submodule("eval");
  py::class_<eval::EvalReport>(eval_mod, "Report")
      .def_readonly("reciprocal_rank", &eval::EvalReport::reciprocal_rank)
      .def_readonly("avg_precision", &eval::EvalReport::avg_precision)
      .def_readonly("mrr", &eval::EvalReport::mrr)
      .def_readonly("map", &eval::EvalReport::map)
      .def_readonly("gmap", &eval::EvalReport::gmap)
      .def_readonly("queries_evaluated", &eval::EvalReport::queries_evaluated)
      .def_readonly("targets_not_retrieved", &eval::EvalReport::targets_not_retrieved);

  eval_mod.def(
      "mrr", [](const std::vector<int>& ranks) { return eval::mrr(ranks); },
      py::arg("ranks"));
  eval_mod.def(
      "average_precision",
      [](const std::vector<std::string>& ranking, const std::set<std::string>& relevant) {
        return eval::average_precision(ranking, relevant);
      },
      py::arg("ranking"), py::arg("relevant"));
  eval_mod.def(
      "map_gmap",
      [](const std::vector<double>& aps) {
        const auto r = eval::map_gmap(aps);
        return py::make_tuple(r.map, r.gmap);
      },
      py::arg("aps"));
  eval_mod.def(
      "paired_t_test",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = eval::paired_t_test(a, b);
        return py::make_tuple(r.t, r.p, r.degenerate);
      },
      py::arg("a"), py::arg("b"));
  eval_mod.def("student_t_cdf", &eval::student_t_cdf, py::arg("t"),
               py::arg("degrees_of_freedom"));
  eval_mod.def(
      "evaluate_run",
      [](const retrieval::ScoredRun& run,
         const std::map<std::string, std::set<std::string>>& relevant) {
        eval::Qrels q;
        q.relevant = relevant;
        return eval::evaluate_run(run, q);
      },
      py::arg("run"), py::arg("qrels"));
  eval_mod.def(
      "mate_harness",
      [](const retrieval::ScoredRun& run,
         const std::vector<std::pair<std::string, std::string>>& mates) {
        std::vector<MatePair> pairs;
        pairs.reserve(mates.size());
        for (const auto& [q, t] : mates) pairs.push_back({q, t});
        return eval::mate_harness(run, pairs);
      },
      py::arg("run"), py::arg("mates"));

  // ---- rng ---------------------------------------------------------------
  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", &Rng::uniform)
      .def("uniform_int", &Rng::uniform_int, py::arg("bound"))
      .def("normal", &Rng::normal)
      .def("gamma", &Rng::gamma, py::arg("shape"))
      .def("dirichlet", &Rng::dirichlet, py::arg("concentration"), py::arg("dim"))
      .def("categorical",
           [](Rng& rng, const std::vector<double>& weights) {
             return rng.categorical(weights);
           },
           py::arg("weights"));
}
