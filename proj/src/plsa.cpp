#include "clir/plsa.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "clir/container.hpp"
#include "clir/rng.hpp"

namespace clir::plsa {

std::span<const double> PlsaModel::doc_topics(std::size_t doc) const {
  if (doc >= num_docs) throw std::out_of_range("document index out of range");
  return {topic_given_doc.data() + doc * static_cast<std::size_t>(config.topics),
          static_cast<std::size_t>(config.topics)};
}

std::span<const double> PlsaModel::word_topics(TermId term) const {
  if (term >= vocab_size) throw std::out_of_range("term id out of range");
  return {word_given_topic.data() + static_cast<std::size_t>(term) *
                                        static_cast<std::size_t>(config.topics),
          static_cast<std::size_t>(config.topics)};
}

std::size_t PlsaModel::doc_index_of(std::string_view doc_id) const {
  for (std::size_t i = 0; i < doc_ids.size(); ++i)
    if (doc_ids[i] == doc_id) return i;
  throw std::out_of_range("unknown document id '" + std::string(doc_id) + "'");
}

namespace {

// One pass over all stored cells: accumulates the data log-likelihood of the
// current parameters and, when out is non-null, fills in the per-cell
// posteriors. Shared by training, compute_posteriors and log_likelihood so
// the accumulation order (and therefore the floating point result) is
// identical everywhere.
double posterior_sweep(const PlsaModel& m, const MultilingualCorpus& corpus, Posteriors* out,
                       std::size_t* fallbacks, std::uint64_t* cells) {
  const auto K = static_cast<std::size_t>(m.config.topics);
  const std::size_t L = m.num_languages;
  double ll = 0.0;
  std::vector<double> tmp(K);
  std::size_t cell = 0;
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    const double* zd = m.topic_given_doc.data() + i * K;
    const double* pdl_row = m.doc_language_prob.data() + i * L;
    for (const auto& [t, n] : corpus.docs[i].counts) {
      const double* wz = m.word_given_topic.data() + static_cast<std::size_t>(t) * K;
      double denom = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        tmp[k] = wz[k] * zd[k];
        denom += tmp[k];
      }
      ll += n * std::log(pdl_row[m.term_language[t]] * denom);
      if (out) {
        double* dst = out->values.data() + cell * K;
        if (denom > 0.0 && std::isfinite(denom)) {
          for (std::size_t k = 0; k < K; ++k) dst[k] = tmp[k] / denom;
        } else {
          for (std::size_t k = 0; k < K; ++k) dst[k] = 1.0 / static_cast<double>(K);
          if (fallbacks) ++*fallbacks;
        }
      }
      if (cells) *cells += K;
      ++cell;
    }
  }
  return ll;
}

void check_shapes(const PlsaModel& m, const MultilingualCorpus& corpus) {
  if (m.num_docs != corpus.docs.size())
    throw std::invalid_argument("model and corpus disagree on document count");
  if (m.vocab_size != corpus.vocab.size())
    throw std::invalid_argument("model and corpus disagree on vocabulary size");
}

}  // namespace

Posteriors compute_posteriors(const PlsaModel& model, const MultilingualCorpus& corpus) {
  check_shapes(model, corpus);
  Posteriors post;
  post.topics = model.config.topics;
  post.values.resize(corpus.nnz() * static_cast<std::size_t>(model.config.topics));
  post.log_likelihood = posterior_sweep(model, corpus, &post, nullptr, nullptr);
  return post;
}

double log_likelihood(const PlsaModel& model, const MultilingualCorpus& corpus) {
  check_shapes(model, corpus);
  return posterior_sweep(model, corpus, nullptr, nullptr, nullptr);
}

std::vector<double> reestimate_word_emissions(const PlsaModel& model,
                                              const MultilingualCorpus& corpus,
                                              const Posteriors& post,
                                              std::size_t* fallbacks) {
  check_shapes(model, corpus);
  const auto K = static_cast<std::size_t>(model.config.topics);
  if (post.values.size() != corpus.nnz() * K)
    throw std::invalid_argument("posterior storage does not match corpus");

  std::vector<double> acc(model.vocab_size * K, 0.0);
  std::size_t cell = 0;
  for (const auto& doc : corpus.docs) {
    for (const auto& [t, n] : doc.counts) {
      const double* p = post.values.data() + cell * K;
      double* dst = acc.data() + static_cast<std::size_t>(t) * K;
      for (std::size_t k = 0; k < K; ++k) dst[k] += n * p[k];
      ++cell;
    }
  }

  // normalize each topic within each language group
  std::vector<std::size_t> lang_sizes(model.num_languages, 0);
  for (TermId t = 0; t < model.vocab_size; ++t) ++lang_sizes[model.term_language[t]];
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> denom(model.num_languages, 0.0);
    for (TermId t = 0; t < model.vocab_size; ++t)
      denom[model.term_language[t]] += acc[static_cast<std::size_t>(t) * K + k];
    for (std::size_t l = 0; l < model.num_languages; ++l) {
      if (denom[l] > 0.0) continue;
      if (fallbacks) ++*fallbacks;
    }
    for (TermId t = 0; t < model.vocab_size; ++t) {
      const std::size_t l = model.term_language[t];
      auto& x = acc[static_cast<std::size_t>(t) * K + k];
      x = denom[l] > 0.0 ? x / denom[l] : 1.0 / static_cast<double>(lang_sizes[l]);
    }
  }
  return acc;
}

std::vector<double> reestimate_doc_topics(const PlsaModel& model,
                                          const MultilingualCorpus& corpus,
                                          const Posteriors& post, std::size_t* fallbacks) {
  check_shapes(model, corpus);
  const auto K = static_cast<std::size_t>(model.config.topics);
  if (post.values.size() != corpus.nnz() * K)
    throw std::invalid_argument("posterior storage does not match corpus");

  std::vector<double> out(model.num_docs * K, 0.0);
  std::size_t cell = 0;
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    double* dst = out.data() + i * K;
    double total = 0.0;
    for (const auto& [t, n] : corpus.docs[i].counts) {
      const double* p = post.values.data() + cell * K;
      for (std::size_t k = 0; k < K; ++k) dst[k] += n * p[k];
      total += n;
      ++cell;
    }
    if (total > 0.0) {
      for (std::size_t k = 0; k < K; ++k) dst[k] /= total;
    } else {
      for (std::size_t k = 0; k < K; ++k) dst[k] = 1.0 / static_cast<double>(K);
      if (fallbacks) ++*fallbacks;
    }
  }
  return out;
}

PlsaModel train(const MultilingualCorpus& corpus, const PlsaConfig& cfg,
                const IterationCallback& on_iteration) {
  if (cfg.topics < 1) throw std::invalid_argument("plsa: topics must be >= 1");
  if (cfg.iterations < 0) throw std::invalid_argument("plsa: iterations must be >= 0");
  if (corpus.docs.empty()) throw std::invalid_argument("plsa: corpus has no documents");
  if (corpus.vocab.size() == 0) throw std::invalid_argument("plsa: corpus has no vocabulary");

  PlsaModel m;
  m.config = cfg;
  m.num_docs = corpus.docs.size();
  m.vocab_size = corpus.vocab.size();
  const auto K = static_cast<std::size_t>(cfg.topics);

  if (cfg.mode == Mode::kMultilingual) {
    m.num_languages = corpus.vocab.languages().size();
    m.term_language.resize(m.vocab_size);
    for (TermId t = 0; t < m.vocab_size; ++t) m.term_language[t] = corpus.vocab.term_language(t);
  } else {
    m.num_languages = 1;
    m.term_language.assign(m.vocab_size, 0);
  }

  m.doc_ids.reserve(m.num_docs);
  for (const auto& d : corpus.docs) m.doc_ids.push_back(d.id);

  // P(d, l) is fully determined by the counts
  const double total = corpus.total_mass();
  if (total <= 0.0) throw std::invalid_argument("plsa: corpus has no token mass");
  m.doc_language_prob.assign(m.num_docs * m.num_languages, 0.0);
  for (std::size_t i = 0; i < corpus.docs.size(); ++i)
    for (const auto& [t, n] : corpus.docs[i].counts)
      m.doc_language_prob[i * m.num_languages + m.term_language[t]] += n / total;

  Rng rng(cfg.seed);
  m.word_given_topic.assign(m.vocab_size * K, 0.0);
  std::vector<std::size_t> lang_sizes(m.num_languages, 0);
  for (TermId t = 0; t < m.vocab_size; ++t) ++lang_sizes[m.term_language[t]];
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> denom(m.num_languages, 0.0);
    for (TermId t = 0; t < m.vocab_size; ++t) {
      const double g = rng.gamma(1.0);
      m.word_given_topic[static_cast<std::size_t>(t) * K + k] = g;
      denom[m.term_language[t]] += g;
    }
    for (TermId t = 0; t < m.vocab_size; ++t) {
      const std::size_t l = m.term_language[t];
      auto& x = m.word_given_topic[static_cast<std::size_t>(t) * K + k];
      x = denom[l] > 0.0 ? x / denom[l] : 1.0 / static_cast<double>(lang_sizes[l]);
    }
  }
  m.topic_given_doc.resize(m.num_docs * K);
  for (std::size_t i = 0; i < m.num_docs; ++i) {
    const auto theta = rng.dirichlet(1.0, K);
    for (std::size_t k = 0; k < K; ++k) m.topic_given_doc[i * K + k] = theta[k];
  }

  Posteriors post;
  post.topics = cfg.topics;
  post.values.resize(corpus.nnz() * K);
  m.ll_trace.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int it = 0; it < cfg.iterations; ++it) {
    const double ll =
        posterior_sweep(m, corpus, &post, &m.posterior_fallbacks, &m.posterior_cells);
    m.ll_trace.push_back(ll);
    m.word_given_topic = reestimate_word_emissions(m, corpus, post, &m.emission_fallbacks);
    m.topic_given_doc = reestimate_doc_topics(m, corpus, post, &m.empty_doc_fallbacks);
    if (on_iteration) on_iteration(m, it);
  }
  return m;
}

void write_ll_trace_csv(const PlsaModel& model, std::ostream& out) {
  out << "iteration,log_likelihood\n";
  char buf[64];
  for (std::size_t i = 0; i < model.ll_trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, model.ll_trace[i]);
    out << buf;
  }
}

void save_plsa(const PlsaModel& model, const std::filesystem::path& path,
               const std::vector<std::string>& languages) {
  io::ContainerHeader hdr;
  hdr.type = "plsa";
  hdr.languages = languages;
  hdr.vocab_size = model.vocab_size;
  hdr.extra["topics"] = model.config.topics;
  hdr.extra["iterations"] = model.config.iterations;
  hdr.extra["seed"] = model.config.seed;
  hdr.extra["mode"] = model.config.mode == Mode::kMultilingual ? "multilingual" : "standard";
  hdr.extra["num_languages"] = model.num_languages;
  io::ContainerWriter writer(path, hdr);

  io::ByteWriter ids;
  ids.put_u64(model.doc_ids.size());
  for (const auto& id : model.doc_ids) ids.put_string(id);
  writer.add_section("doc_ids", ids);

  io::ByteWriter langs;
  langs.put_u64(model.term_language.size());
  for (auto l : model.term_language) langs.put_u16(l);
  writer.add_section("term_language", langs);

  io::ByteWriter pdl;
  pdl.put_f64_span(model.doc_language_prob);
  writer.add_section("doc_language_prob", pdl);

  io::ByteWriter wz;
  wz.put_f64_span(model.word_given_topic);
  writer.add_section("word_given_topic", wz);

  io::ByteWriter zd;
  zd.put_f64_span(model.topic_given_doc);
  writer.add_section("topic_given_doc", zd);

  io::ByteWriter trace;
  trace.put_f64_span(model.ll_trace);
  writer.add_section("ll_trace", trace);

  io::ByteWriter counters;
  counters.put_u64(model.posterior_fallbacks);
  counters.put_u64(model.emission_fallbacks);
  counters.put_u64(model.empty_doc_fallbacks);
  counters.put_u64(model.posterior_cells);
  writer.add_section("counters", counters);
  writer.finish();
}

PlsaModel load_plsa(const std::filesystem::path& path) {
  io::ContainerReader reader(path);
  io::expect_type(reader, "plsa");
  PlsaModel m;
  const auto& hdr = reader.header_json();
  m.config.topics = hdr.at("topics").get<int>();
  m.config.iterations = hdr.at("iterations").get<int>();
  m.config.seed = hdr.at("seed").get<std::uint64_t>();
  m.config.mode =
      hdr.at("mode").get<std::string>() == "standard" ? Mode::kStandard : Mode::kMultilingual;
  m.num_languages = hdr.at("num_languages").get<std::size_t>();
  m.vocab_size = reader.header().vocab_size;

  io::ByteReader ids(reader.section("doc_ids"));
  const std::uint64_t num_docs = ids.get_u64();
  m.num_docs = num_docs;
  for (std::uint64_t i = 0; i < num_docs; ++i) m.doc_ids.push_back(ids.get_string());

  io::ByteReader langs(reader.section("term_language"));
  const std::uint64_t num_terms = langs.get_u64();
  if (num_terms != m.vocab_size) throw std::runtime_error("plsa container vocab mismatch");
  m.term_language.resize(num_terms);
  for (auto& l : m.term_language) l = langs.get_u16();

  const auto K = static_cast<std::size_t>(m.config.topics);
  io::ByteReader pdl(reader.section("doc_language_prob"));
  m.doc_language_prob = pdl.get_f64_vec(m.num_docs * m.num_languages);
  io::ByteReader wz(reader.section("word_given_topic"));
  m.word_given_topic = wz.get_f64_vec(m.vocab_size * K);
  io::ByteReader zd(reader.section("topic_given_doc"));
  m.topic_given_doc = zd.get_f64_vec(m.num_docs * K);

  io::ByteReader trace(reader.section("ll_trace"));
  const std::uint64_t trace_len = trace.get_u64();
  m.ll_trace.resize(trace_len);
  for (auto& x : m.ll_trace) x = trace.get_f64();

  io::ByteReader counters(reader.section("counters"));
  m.posterior_fallbacks = counters.get_u64();
  m.emission_fallbacks = counters.get_u64();
  m.empty_doc_fallbacks = counters.get_u64();
  m.posterior_cells = counters.get_u64();
  return m;
}

}  // namespace clir::plsa
