#include "clir/lda.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "clir/container.hpp"
#include "clir/rng.hpp"

namespace clir::lda {

namespace {

// Unnormalized weights for one position. The shared shape guarantees that the
// standard and multilingual paths produce bit-identical numbers whenever
// their inputs coincide. The constant document denominator is dropped; it
// cancels under normalization and in categorical draws.
template <class Count>
void gibbs_weights(double* dst, std::size_t topics, const Count* word_topic,
                   const Count* totals, const std::int64_t* doc_topic, double alpha,
                   double beta, double w_beta) {
  for (std::size_t j = 0; j < topics; ++j) {
    dst[j] = (static_cast<double>(word_topic[j]) + beta) /
             (static_cast<double>(totals[j]) + w_beta) *
             (static_cast<double>(doc_topic[j]) + alpha);
  }
}

std::vector<double> sample_prob_impl(std::span<const std::int64_t> word_topic,
                                     std::span<const std::int64_t> totals,
                                     std::span<const std::int64_t> doc_topic,
                                     std::int64_t doc_total, double alpha, double beta,
                                     std::size_t vocab_size) {
  const std::size_t T = word_topic.size();
  if (T == 0 || totals.size() != T || doc_topic.size() != T)
    throw std::invalid_argument("sample_prob: count spans must share the topic dimension");
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("sample_prob: alpha and beta must be positive");
  if (vocab_size == 0) throw std::invalid_argument("sample_prob: empty vocabulary");
  for (std::size_t j = 0; j < T; ++j)
    if (word_topic[j] < 0 || totals[j] < 0 || doc_topic[j] < 0)
      throw std::invalid_argument("sample_prob: negative count after exclusion");
  if (doc_total < 0) throw std::invalid_argument("sample_prob: negative document total");

  std::vector<double> p(T);
  const double w_beta = static_cast<double>(vocab_size) * beta;
  const double d_denom = static_cast<double>(doc_total) + static_cast<double>(T) * alpha;
  double sum = 0.0;
  for (std::size_t j = 0; j < T; ++j) {
    p[j] = (static_cast<double>(word_topic[j]) + beta) /
           (static_cast<double>(totals[j]) + w_beta) *
           (static_cast<double>(doc_topic[j]) + alpha) / d_denom;
    sum += p[j];
  }
  for (auto& x : p) x /= sum;
  return p;
}

void validate_config(const LdaConfig& cfg) {
  if (cfg.topics < 1) throw std::invalid_argument("lda: topics must be >= 1");
  if (!(cfg.beta > 0.0)) throw std::invalid_argument("lda: beta must be positive");
  if (!(cfg.resolved_alpha() > 0.0)) throw std::invalid_argument("lda: alpha must be positive");
  if (cfg.burnin_train < 0 || cfg.burnin_infer < 0)
    throw std::invalid_argument("lda: burnin must be >= 0");
  if (cfg.avg_train < 1 || cfg.avg_infer < 1)
    throw std::invalid_argument("lda: averaging sweep count must be >= 1");
}

long long integer_count(double c, const std::string& doc_id, const std::string& term) {
  const double r = std::round(c);
  if (std::abs(c - r) > 1e-9 || r < 1.0)
    throw std::invalid_argument("gibbs sampling needs positive integer counts; document '" +
                                doc_id + "' has count " + std::to_string(c) + " for term '" +
                                term + "'");
  return std::llround(r);
}

}  // namespace

std::vector<double> sample_prob_standard(std::span<const std::int64_t> word_topic,
                                         std::span<const std::int64_t> topic_totals,
                                         std::span<const std::int64_t> doc_topic,
                                         std::int64_t doc_total, double alpha, double beta,
                                         std::size_t vocab_size) {
  return sample_prob_impl(word_topic, topic_totals, doc_topic, doc_total, alpha, beta,
                          vocab_size);
}

std::vector<double> sample_prob_multilingual(std::span<const std::int64_t> word_topic,
                                             std::span<const std::int64_t> language_totals,
                                             std::span<const std::int64_t> doc_topic,
                                             std::int64_t doc_total, double alpha, double beta,
                                             std::size_t language_vocab_size) {
  return sample_prob_impl(word_topic, language_totals, doc_topic, doc_total, alpha, beta,
                          language_vocab_size);
}

std::vector<double> LdaModel::phi_hat(TermId term) const {
  const auto T = static_cast<std::size_t>(config.topics);
  std::vector<double> out(T);
  for (std::size_t j = 0; j < T; ++j) out[j] = phi_hat(term, static_cast<int>(j));
  return out;
}

double LdaModel::phi_hat(TermId term, int topic) const {
  if (term >= vocab_size) throw std::out_of_range("term id out of range");
  const auto T = static_cast<std::size_t>(config.topics);
  if (topic < 0 || static_cast<std::size_t>(topic) >= T)
    throw std::out_of_range("topic index out of range");
  const std::size_t lang = term_language[term];
  const double w_beta = static_cast<double>(language_vocab_sizes[lang]) * config.beta;
  return (topic_word[static_cast<std::size_t>(term) * T + static_cast<std::size_t>(topic)] +
          config.beta) /
         (topic_totals[lang * T + static_cast<std::size_t>(topic)] + w_beta);
}

std::size_t LdaModel::doc_index_of(std::string_view doc_id) const {
  for (std::size_t i = 0; i < doc_ids.size(); ++i)
    if (doc_ids[i] == doc_id) return i;
  throw std::out_of_range("unknown document id '" + std::string(doc_id) + "'");
}

double dirichlet_log_density(std::span<const double> p, std::span<const double> alpha) {
  if (p.size() != alpha.size() || p.empty())
    throw std::invalid_argument("dirichlet_log_density: dimension mismatch");
  double p_sum = 0.0, alpha_sum = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (!(alpha[j] > 0.0))
      throw std::invalid_argument("dirichlet_log_density: alpha must be positive");
    if (p[j] < 0.0) throw std::invalid_argument("dirichlet_log_density: p must be nonnegative");
    p_sum += p[j];
    alpha_sum += alpha[j];
  }
  if (std::abs(p_sum - 1.0) > 1e-9)
    throw std::invalid_argument("dirichlet_log_density: p must lie on the simplex");
  double log_density = std::lgamma(alpha_sum);
  for (std::size_t j = 0; j < p.size(); ++j) {
    log_density -= std::lgamma(alpha[j]);
    if (alpha[j] == 1.0) continue;  // exponent 0, including at p[j] = 0
    if (p[j] == 0.0) return -std::numeric_limits<double>::infinity();
    log_density += (alpha[j] - 1.0) * std::log(p[j]);
  }
  return log_density;
}

std::vector<double> theta_hat(const TopicStats& stats, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("theta_hat: alpha must be positive");
  const std::size_t T = stats.counts.size();
  if (T == 0) throw std::invalid_argument("theta_hat: empty stats");
  std::vector<double> out(T);
  const double denom = stats.total + static_cast<double>(T) * alpha;
  for (std::size_t j = 0; j < T; ++j) out[j] = (stats.counts[j] + alpha) / denom;
  return out;
}

std::vector<double> theta_hat(const LdaModel& model, std::size_t doc) {
  const auto T = static_cast<std::size_t>(model.config.topics);
  if ((doc + 1) * T > model.doc_topic.size())
    throw std::out_of_range("document index out of range");
  TopicStats stats;
  stats.counts.assign(model.doc_topic.begin() + static_cast<std::ptrdiff_t>(doc * T),
                      model.doc_topic.begin() + static_cast<std::ptrdiff_t>((doc + 1) * T));
  stats.total = 0.0;
  for (double c : stats.counts) stats.total += c;
  return theta_hat(stats, model.config.resolved_alpha());
}

LdaModel train(const MultilingualCorpus& corpus, const LdaConfig& cfg, Mode mode,
               const SweepObserver& observer) {
  validate_config(cfg);
  if (corpus.docs.empty()) throw std::invalid_argument("lda: corpus has no documents");
  if (corpus.vocab.size() == 0) throw std::invalid_argument("lda: corpus has no vocabulary");

  LdaModel m;
  m.config = cfg;
  m.config.alpha = cfg.resolved_alpha();
  m.mode = mode;
  m.vocab_size = corpus.vocab.size();
  const auto T = static_cast<std::size_t>(cfg.topics);

  if (mode == Mode::kMultilingual) {
    m.num_languages = corpus.vocab.languages().size();
    m.term_language.resize(m.vocab_size);
    for (TermId t = 0; t < m.vocab_size; ++t) m.term_language[t] = corpus.vocab.term_language(t);
  } else {
    m.num_languages = 1;
    m.term_language.assign(m.vocab_size, 0);
  }
  m.language_vocab_sizes.assign(m.num_languages, 0);
  for (TermId t = 0; t < m.vocab_size; ++t) ++m.language_vocab_sizes[m.term_language[t]];

  m.doc_ids.reserve(corpus.docs.size());
  for (const auto& d : corpus.docs) m.doc_ids.push_back(d.id);

  // token stream, doc-major, each term repeated count-many times in id order
  std::vector<TermId> tokens;
  std::vector<std::size_t> doc_begin(corpus.docs.size() + 1, 0);
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    doc_begin[i] = tokens.size();
    for (const auto& [t, c] : corpus.docs[i].counts) {
      const long long n = integer_count(c, corpus.docs[i].id, corpus.vocab.prefixed(t));
      for (long long k = 0; k < n; ++k) tokens.push_back(t);
    }
  }
  doc_begin[corpus.docs.size()] = tokens.size();

  const double alpha = m.config.alpha;
  const double beta = cfg.beta;
  std::vector<double> w_beta(m.num_languages);
  for (std::size_t l = 0; l < m.num_languages; ++l)
    w_beta[l] = static_cast<double>(m.language_vocab_sizes[l]) * beta;

  std::vector<std::int64_t> n_wt(m.vocab_size * T, 0);
  std::vector<std::int64_t> n_lt(m.num_languages * T, 0);
  std::vector<std::int64_t> n_dt(corpus.docs.size() * T, 0);
  std::vector<std::int32_t> z(tokens.size());

  Rng rng(cfg.seed);
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    for (std::size_t p = doc_begin[i]; p < doc_begin[i + 1]; ++p) {
      const TermId w = tokens[p];
      const auto topic = static_cast<std::int32_t>(rng.uniform_int(T));
      z[p] = topic;
      ++n_wt[static_cast<std::size_t>(w) * T + static_cast<std::size_t>(topic)];
      ++n_lt[m.term_language[w] * T + static_cast<std::size_t>(topic)];
      ++n_dt[i * T + static_cast<std::size_t>(topic)];
    }
  }

  std::vector<std::int64_t> acc_wt(n_wt.size(), 0);
  std::vector<std::int64_t> acc_lt(n_lt.size(), 0);
  std::vector<std::int64_t> acc_dt(n_dt.size(), 0);
  std::vector<double> weights(T);

  const int total_sweeps = cfg.burnin_train + cfg.avg_train;
  for (int sweep = 0; sweep < total_sweeps; ++sweep) {
    for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
      std::int64_t* dt = n_dt.data() + i * T;
      for (std::size_t p = doc_begin[i]; p < doc_begin[i + 1]; ++p) {
        const TermId w = tokens[p];
        const std::size_t lang = m.term_language[w];
        std::int64_t* wt = n_wt.data() + static_cast<std::size_t>(w) * T;
        std::int64_t* lt = n_lt.data() + lang * T;
        const auto old_topic = static_cast<std::size_t>(z[p]);
        --wt[old_topic];
        --lt[old_topic];
        --dt[old_topic];
        gibbs_weights(weights.data(), T, wt, lt, dt, alpha, beta, w_beta[lang]);
        const std::size_t new_topic = rng.categorical(weights);
        z[p] = static_cast<std::int32_t>(new_topic);
        ++wt[new_topic];
        ++lt[new_topic];
        ++dt[new_topic];
      }
    }
    if (observer) observer(sweep, z);
    if (sweep >= cfg.burnin_train) {
      for (std::size_t k = 0; k < n_wt.size(); ++k) acc_wt[k] += n_wt[k];
      for (std::size_t k = 0; k < n_lt.size(); ++k) acc_lt[k] += n_lt[k];
      for (std::size_t k = 0; k < n_dt.size(); ++k) acc_dt[k] += n_dt[k];
    }
  }

  m.final_topic_word = std::move(n_wt);
  m.final_topic_totals = std::move(n_lt);
  const auto A = static_cast<double>(cfg.avg_train);
  m.topic_word.resize(acc_wt.size());
  for (std::size_t k = 0; k < acc_wt.size(); ++k)
    m.topic_word[k] = static_cast<double>(acc_wt[k]) / A;
  m.topic_totals.resize(acc_lt.size());
  for (std::size_t k = 0; k < acc_lt.size(); ++k)
    m.topic_totals[k] = static_cast<double>(acc_lt[k]) / A;
  m.doc_topic.resize(acc_dt.size());
  for (std::size_t k = 0; k < acc_dt.size(); ++k)
    m.doc_topic[k] = static_cast<double>(acc_dt[k]) / A;
  return m;
}

InferenceResult infer(const LdaModel& model, const std::string& doc_id,
                      std::span<const std::pair<TermId, double>> counts, std::uint64_t seed) {
  validate_config(model.config);
  const auto T = static_cast<std::size_t>(model.config.topics);

  InferenceResult res;
  res.stats.doc_id = doc_id;
  for (const auto& [t, c] : counts) {
    if (t >= model.vocab_size) {
      ++res.stats.skipped_terms;
      continue;
    }
    const long long n = integer_count(c, doc_id, std::to_string(t));
    for (long long k = 0; k < n; ++k) res.positions.push_back(t);
  }
  if (res.positions.empty())
    throw std::invalid_argument("lda inference: document '" + doc_id +
                                "' has no tokens in the model vocabulary");

  const double alpha = model.config.resolved_alpha();
  const double beta = model.config.beta;
  std::vector<double> w_beta(model.num_languages);
  for (std::size_t l = 0; l < model.num_languages; ++l)
    w_beta[l] = static_cast<double>(model.language_vocab_sizes[l]) * beta;

  std::vector<std::int64_t> local_dt(T, 0);
  std::vector<std::int32_t> z(res.positions.size());
  Rng rng(seed);
  for (std::size_t p = 0; p < res.positions.size(); ++p) {
    const auto topic = static_cast<std::int32_t>(rng.uniform_int(T));
    z[p] = topic;
    ++local_dt[static_cast<std::size_t>(topic)];
  }

  std::vector<double> weights(T);
  std::vector<std::int64_t> acc_dt(T, 0);
  const int total_sweeps = model.config.burnin_infer + model.config.avg_infer;
  for (int sweep = 0; sweep < total_sweeps; ++sweep) {
    for (std::size_t p = 0; p < res.positions.size(); ++p) {
      const TermId w = res.positions[p];
      const std::size_t lang = model.term_language[w];
      const auto old_topic = static_cast<std::size_t>(z[p]);
      --local_dt[old_topic];
      // model tables stay untouched; only the local document counts exclude
      // the current position
      gibbs_weights(weights.data(), T,
                    model.topic_word.data() + static_cast<std::size_t>(w) * T,
                    model.topic_totals.data() + lang * T, local_dt.data(), alpha, beta,
                    w_beta[lang]);
      const std::size_t new_topic = rng.categorical(weights);
      z[p] = static_cast<std::int32_t>(new_topic);
      ++local_dt[new_topic];
    }
    if (sweep >= model.config.burnin_infer) {
      res.sweep_topics.emplace_back(z.begin(), z.end());
      for (std::size_t j = 0; j < T; ++j) acc_dt[j] += local_dt[j];
    }
  }

  const auto A = static_cast<double>(model.config.avg_infer);
  res.stats.counts.resize(T);
  res.stats.total = 0.0;
  for (std::size_t j = 0; j < T; ++j) {
    res.stats.counts[j] = static_cast<double>(acc_dt[j]) / A;
    res.stats.total += res.stats.counts[j];
  }
  return res;
}

std::vector<double> weight_topic_counts(std::span<const std::int32_t> topics,
                                        std::span<const double> weights, int num_topics) {
  if (topics.size() != weights.size())
    throw std::invalid_argument("weight_topic_counts: span size mismatch");
  if (num_topics < 1) throw std::invalid_argument("weight_topic_counts: bad topic count");
  std::vector<double> acc(static_cast<std::size_t>(num_topics), 0.0);
  for (std::size_t p = 0; p < topics.size(); ++p) {
    const auto j = topics[p];
    if (j < 0 || j >= num_topics)
      throw std::invalid_argument("weight_topic_counts: topic out of range");
    acc[static_cast<std::size_t>(j)] += weights[p];
  }
  return acc;
}

TopicStats idf_weight_stats(const InferenceResult& result,
                            const std::function<std::optional<double>(TermId)>& weight_of,
                            std::size_t* missing_weights) {
  if (result.sweep_topics.empty())
    throw std::invalid_argument("idf_weight_stats: result has no kept sweeps");
  std::vector<double> weights(result.positions.size());
  std::map<TermId, double> memo;
  std::size_t missing = 0;
  for (std::size_t p = 0; p < result.positions.size(); ++p) {
    const TermId t = result.positions[p];
    auto it = memo.find(t);
    if (it == memo.end()) {
      const auto w = weight_of(t);
      if (!w) ++missing;  // once per distinct term
      it = memo.emplace(t, w.value_or(0.0)).first;
    }
    weights[p] = it->second;
  }
  if (missing_weights) *missing_weights = missing;

  const int T = static_cast<int>(result.stats.counts.size());
  TopicStats out;
  out.doc_id = result.stats.doc_id;
  out.skipped_terms = result.stats.skipped_terms;
  out.counts.assign(static_cast<std::size_t>(T), 0.0);
  for (const auto& sweep : result.sweep_topics) {
    const auto contrib = weight_topic_counts(sweep, weights, T);
    for (std::size_t j = 0; j < contrib.size(); ++j) out.counts[j] += contrib[j];
  }
  const auto A = static_cast<double>(result.sweep_topics.size());
  out.total = 0.0;
  for (auto& c : out.counts) {
    c /= A;
    out.total += c;
  }
  return out;
}

void export_topics_csv(const LdaModel& model, const Vocabulary& vocab, int top_n,
                       std::ostream& out) {
  if (vocab.size() != model.vocab_size)
    throw std::invalid_argument("vocabulary does not match model");
  out << "topic,language,term,phi\n";
  char buf[64];
  const auto T = static_cast<std::size_t>(model.config.topics);
  for (std::size_t j = 0; j < T; ++j) {
    for (std::size_t l = 0; l < model.num_languages; ++l) {
      std::vector<std::pair<double, TermId>> scored;
      for (TermId t = 0; t < model.vocab_size; ++t)
        if (model.term_language[t] == l)
          scored.emplace_back(model.phi_hat(t, static_cast<int>(j)), t);
      std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      const std::size_t n = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(top_n));
      for (std::size_t k = 0; k < n; ++k) {
        const auto [phi, t] = scored[k];
        std::snprintf(buf, sizeof(buf), ",%.17g\n", phi);
        const std::string lang_name =
            model.mode == Mode::kMultilingual ? vocab.term_language_name(t) : "all";
        out << j << "," << lang_name << "," << vocab.surface(t) << buf;
      }
    }
  }
}

void save_lda(const LdaModel& model, const std::filesystem::path& path,
              const std::vector<std::string>& languages) {
  io::ContainerHeader hdr;
  hdr.type = "lda";
  hdr.languages = languages;
  hdr.vocab_size = model.vocab_size;
  hdr.extra["topics"] = model.config.topics;
  hdr.extra["alpha"] = model.config.alpha;
  hdr.extra["beta"] = model.config.beta;
  hdr.extra["burnin_train"] = model.config.burnin_train;
  hdr.extra["avg_train"] = model.config.avg_train;
  hdr.extra["burnin_infer"] = model.config.burnin_infer;
  hdr.extra["avg_infer"] = model.config.avg_infer;
  hdr.extra["seed"] = model.config.seed;
  hdr.extra["mode"] = model.mode == Mode::kMultilingual ? "multilingual" : "standard";
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

  io::ByteWriter sizes;
  sizes.put_u64(model.language_vocab_sizes.size());
  for (auto s : model.language_vocab_sizes) sizes.put_u64(s);
  writer.add_section("language_vocab_sizes", sizes);

  io::ByteWriter fw;
  fw.put_i64_span(model.final_topic_word);
  writer.add_section("final_topic_word", fw);
  io::ByteWriter ft;
  ft.put_i64_span(model.final_topic_totals);
  writer.add_section("final_topic_totals", ft);

  io::ByteWriter tw;
  tw.put_f64_span(model.topic_word);
  writer.add_section("topic_word", tw);
  io::ByteWriter tt;
  tt.put_f64_span(model.topic_totals);
  writer.add_section("topic_totals", tt);
  io::ByteWriter dt;
  dt.put_f64_span(model.doc_topic);
  writer.add_section("doc_topic", dt);
  writer.finish();
}

LdaModel load_lda(const std::filesystem::path& path) {
  io::ContainerReader reader(path);
  io::expect_type(reader, "lda");
  LdaModel m;
  const auto& hdr = reader.header_json();
  m.config.topics = hdr.at("topics").get<int>();
  m.config.alpha = hdr.at("alpha").get<double>();
  m.config.beta = hdr.at("beta").get<double>();
  m.config.burnin_train = hdr.at("burnin_train").get<int>();
  m.config.avg_train = hdr.at("avg_train").get<int>();
  m.config.burnin_infer = hdr.at("burnin_infer").get<int>();
  m.config.avg_infer = hdr.at("avg_infer").get<int>();
  m.config.seed = hdr.at("seed").get<std::uint64_t>();
  m.mode = hdr.at("mode").get<std::string>() == "standard" ? Mode::kStandard
                                                           : Mode::kMultilingual;
  m.num_languages = hdr.at("num_languages").get<std::size_t>();
  m.vocab_size = reader.header().vocab_size;
  const auto T = static_cast<std::size_t>(m.config.topics);

  io::ByteReader ids(reader.section("doc_ids"));
  const std::uint64_t num_docs = ids.get_u64();
  for (std::uint64_t i = 0; i < num_docs; ++i) m.doc_ids.push_back(ids.get_string());

  io::ByteReader langs(reader.section("term_language"));
  if (langs.get_u64() != m.vocab_size) throw std::runtime_error("lda container vocab mismatch");
  m.term_language.resize(m.vocab_size);
  for (auto& l : m.term_language) l = langs.get_u16();

  io::ByteReader sizes(reader.section("language_vocab_sizes"));
  if (sizes.get_u64() != m.num_languages)
    throw std::runtime_error("lda container language count mismatch");
  m.language_vocab_sizes.resize(m.num_languages);
  for (auto& s : m.language_vocab_sizes) s = sizes.get_u64();

  io::ByteReader fw(reader.section("final_topic_word"));
  m.final_topic_word = fw.get_i64_vec(m.vocab_size * T);
  io::ByteReader ft(reader.section("final_topic_totals"));
  m.final_topic_totals = ft.get_i64_vec(m.num_languages * T);
  io::ByteReader tw(reader.section("topic_word"));
  m.topic_word = tw.get_f64_vec(m.vocab_size * T);
  io::ByteReader tt(reader.section("topic_totals"));
  m.topic_totals = tt.get_f64_vec(m.num_languages * T);
  io::ByteReader dt(reader.section("doc_topic"));
  m.doc_topic = dt.get_f64_vec(num_docs * T);
  return m;
}

}  // namespace clir::lda
