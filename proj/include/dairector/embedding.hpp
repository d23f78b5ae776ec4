#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <ranges>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dairector/corpus.hpp"
#include "dairector/errors.hpp"
#include "dairector/hash.hpp"
#include "dairector/text.hpp"

namespace dairector {

using Rng = std::mt19937_64;

// Paragraph-vector hyperparameters. Values not fixed by the model definition
// (epochs, lr floor, noise exponent) are explicit here rather than inherited.
struct TrainingConfig {
  std::size_t dim = 410;
  double initial_lr = 0.03;
  double min_lr = 1e-4;
  std::size_t window = 4;  // fixed, not randomly shrunk
  std::size_t min_count = 2;
  std::size_t negative_samples = 4;
  std::size_t epochs = 40;
  std::uint64_t seed = 1;
  double unigram_power = 0.75;
  // Frequent-word downsampling threshold; 0 keeps every token.
  double sample = 3e-3;

  void validate() const {
    if (dim == 0) throw InvalidArgument("dim must be > 0");
    if (window < 1) throw InvalidArgument("window must be >= 1");
    if (negative_samples < 1) throw InvalidArgument("negative_samples must be >= 1");
    if (!(initial_lr > 0)) throw InvalidArgument("initial_lr must be > 0");
    if (!(min_lr >= 0) || min_lr > initial_lr) throw InvalidArgument("min_lr must lie in [0, initial_lr]");
    if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (min_count < 1) throw InvalidArgument("min_count must be >= 1");
    if (!(sample >= 0)) throw InvalidArgument("sample must be >= 0");
  }

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

struct TokenizedDoc {
  std::string doc_id;
  std::vector<std::string> tokens;
};

inline std::string fragment_doc_id(std::string_view fragment_id) { return "frag:" + std::string(fragment_id); }
inline std::string trope_doc_id(std::string_view trope_name) { return "trope:" + std::string(trope_name); }

// Fragment texts then trope descriptions (names are never trained on).
inline std::vector<TokenizedDoc> assemble_training_docs(const PlotGraph& graph, const TropeCorpus& tropes) {
  std::vector<TokenizedDoc> docs;
  for (const auto& [id, f] : graph.fragments()) docs.push_back({fragment_doc_id(id), tokenize(f.text)});
  for (const auto& [name, t] : tropes.tropes()) docs.push_back({trope_doc_id(name), tokenize(t.description)});
  for (const auto& d : docs)
    if (d.tokens.empty()) throw InvalidArgument("document '" + d.doc_id + "' has no tokens");
  return docs;
}

inline std::string corpus_fingerprint(std::span<const TokenizedDoc> docs) {
  Fnv1a64 h;
  h.update_field("docs/1");
  h.update_u64(docs.size());
  for (const auto& d : docs) {
    h.update_field(d.doc_id);
    h.update_u64(d.tokens.size());
    for (const auto& t : d.tokens) h.update_field(t);
  }
  return h.hex();
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

class Vocab {
 public:
  Vocab() = default;

  // Words ordered by descending count, ties by word.
  static Vocab build(std::span<const TokenizedDoc> docs, std::size_t min_count) {
    if (docs.empty()) throw InvalidArgument("no documents");
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& d : docs)
      for (const auto& t : d.tokens) ++counts[t];
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [w, c] : counts)
      if (c >= min_count) kept.emplace_back(w, c);
    if (kept.empty()) throw InvalidArgument("vocabulary is empty after min_count filtering");
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    Vocab v;
    for (auto& [w, c] : kept) v.add(std::move(w), c);
    return v;
  }

  std::optional<std::size_t> find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const noexcept { return words_.size(); }
  const std::string& word(std::size_t i) const { return words_.at(i); }
  std::uint64_t count(std::size_t i) const { return counts_.at(i); }
  std::uint64_t total_tokens() const noexcept { return total_; }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.words_ == b.words_ && a.counts_ == b.counts_; }

 private:
  friend class EmbeddingModel;
  friend struct ModelIo;

  void add(std::string word, std::uint64_t count) {
    index_.emplace(word, words_.size());
    words_.push_back(std::move(word));
    counts_.push_back(count);
    total_ += count;
  }

  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t total_ = 0;
};

inline Vocab build_vocab(std::span<const TokenizedDoc> docs, const TrainingConfig& config) {
  return Vocab::build(docs, config.min_count);
}

// ---------------------------------------------------------------------------
// Cosine distance and neighbour search
// ---------------------------------------------------------------------------

struct Cosine {
  double distance;
  bool zero_norm;  // either side had zero norm; distance is then 1
};

inline Cosine cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw InvalidArgument("cosine distance of vectors with different dimensions");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * double(b[i]);
    na += double(a[i]) * double(a[i]);
    nb += double(b[i]) * double(b[i]);
  }
  if (na == 0 || nb == 0) return {1.0, true};
  double d = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
  return {std::clamp(d, 0.0, 2.0), false};
}

inline double cosine_distance(std::span<const float> a, std::span<const float> b) { return cosine(a, b).distance; }

struct InferredVector {
  std::vector<float> values;
  bool low_confidence = false;  // no in-vocabulary token contributed
};

// Anything that can hand out stored document vectors and embed new text.
template <class E>
concept DocumentEmbedding = requires(const E& e, std::string_view id, std::span<const std::string> tokens) {
  { e.dimension() } -> std::convertible_to<std::size_t>;
  { e.find_doc_vector(id) } -> std::same_as<std::optional<std::span<const float>>>;
  { e.embed_text(tokens) } -> std::same_as<InferredVector>;
};

struct Neighbor {
  std::string doc_id;
  double distance;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// The n pool members closest to `query`, ascending by distance then doc id.
template <DocumentEmbedding E, std::ranges::input_range Pool>
  requires std::convertible_to<std::ranges::range_reference_t<Pool>, std::string_view>
std::vector<Neighbor> nearest_documents(const E& model, std::span<const float> query, const Pool& pool,
                                        std::size_t n) {
  if (n == 0) throw InvalidArgument("n must be >= 1");
  std::vector<Neighbor> all;
  for (const auto& id_like : pool) {
    std::string_view id = id_like;
    auto v = model.find_doc_vector(id);
    if (!v) throw NotFoundError("no document vector for '" + std::string(id) + "'");
    all.push_back({std::string(id), cosine_distance(query, *v)});
  }
  if (all.empty()) throw InvalidArgument("empty candidate pool");
  auto less = [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.doc_id < b.doc_id;
  };
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) { return a.doc_id < b.doc_id; });
  all.erase(std::unique(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) { return a.doc_id == b.doc_id; }),
            all.end());
  std::size_t k = std::min(n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), less);
  all.resize(k);
  return all;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

class EmbeddingModel {
 public:
  EmbeddingModel() = default;

  std::size_t dimension() const noexcept { return config_.dim; }
  const TrainingConfig& config() const noexcept { return config_; }
  const Vocab& vocab() const noexcept { return vocab_; }
  const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
  const std::string& corpus_hash() const noexcept { return corpus_hash_; }
  // Mean negative-sampling loss per epoch, in training order.
  const std::vector<double>& loss_history() const noexcept { return loss_history_; }

  std::optional<std::span<const float>> find_doc_vector(std::string_view doc_id) const {
    auto it = doc_index_.find(std::string(doc_id));
    if (it == doc_index_.end()) return std::nullopt;
    return row(doc_vectors_, it->second);
  }

  std::span<const float> doc_vector(std::string_view doc_id) const {
    if (auto v = find_doc_vector(doc_id)) return *v;
    throw NotFoundError("no document vector for '" + std::string(doc_id) + "'");
  }

  std::optional<std::span<const float>> word_vector(std::string_view word) const {
    auto i = vocab_.find(word);
    if (!i) return std::nullopt;
    return row(word_vectors_, *i);
  }

  std::optional<std::span<const float>> output_weights(std::string_view word) const {
    auto i = vocab_.find(word);
    if (!i) return std::nullopt;
    return row(output_weights_, *i);
  }

  // Inference seeded from the model seed and the token content, so the same
  // text always maps to the same vector.
  InferredVector embed_text(std::span<const std::string> tokens) const;

  // Fingerprint over config, vocabulary and all weights.
  std::string fingerprint() const {
    Fnv1a64 h;
    h.update_field("model/1");
    h.update_field(corpus_hash_);
    h.update_u64(config_.dim);
    h.update_u64(config_.seed);
    h.update_u64(config_.epochs);
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
      h.update_field(vocab_.word(i));
      h.update_u64(vocab_.count(i));
    }
    for (const auto& id : doc_ids_) h.update_field(id);
    for (const auto* arr : {&word_vectors_, &output_weights_, &doc_vectors_})
      h.update(std::span(reinterpret_cast<const unsigned char*>(arr->data()), arr->size() * sizeof(float)));
    return h.hex();
  }

 private:
  friend struct ModelTrainer;
  friend struct ModelIo;
  friend EmbeddingModel train(std::span<const TokenizedDoc> docs, const TrainingConfig& config);

  std::span<const float> row(const std::vector<float>& m, std::size_t i) const {
    return std::span<const float>(m).subspan(i * config_.dim, config_.dim);
  }

  void index_docs() {
    doc_index_.clear();
    for (std::size_t i = 0; i < doc_ids_.size(); ++i)
      if (!doc_index_.emplace(doc_ids_[i], i).second) throw InvalidArgument("duplicate document id '" + doc_ids_[i] + "'");
  }

  void build_sampling_tables() {
    std::vector<double> weights(vocab_.size());
    for (std::size_t i = 0; i < vocab_.size(); ++i)
      weights[i] = std::pow(static_cast<double>(vocab_.count(i)), config_.unigram_power);
    noise_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());

    keep_prob_.assign(vocab_.size(), 1.0);
    if (config_.sample > 0) {
      const double threshold = config_.sample * static_cast<double>(vocab_.total_tokens());
      for (std::size_t i = 0; i < vocab_.size(); ++i) {
        const double c = static_cast<double>(vocab_.count(i));
        keep_prob_[i] = std::min(1.0, (std::sqrt(c / threshold) + 1.0) * threshold / c);
      }
    }
  }

  TrainingConfig config_;
  Vocab vocab_;
  std::vector<std::string> doc_ids_;
  std::unordered_map<std::string, std::size_t> doc_index_;
  std::vector<float> word_vectors_;    // V x D
  std::vector<float> output_weights_;  // V x D, negative-sampling output layer
  std::vector<float> doc_vectors_;     // N x D
  std::string corpus_hash_;
  std::vector<double> loss_history_;
  // Derived from counts and config, not persisted: unigram^power noise
  // distribution and per-word keep probabilities for downsampling.
  std::discrete_distribution<std::size_t> noise_;
  std::vector<double> keep_prob_;
};

// ---------------------------------------------------------------------------
// PV-DM training with negative sampling
// ---------------------------------------------------------------------------

struct ModelTrainer {
  const EmbeddingModel& m;
  // Set only while training; inference leaves both null.
  float* words_out = nullptr;
  float* output_out = nullptr;
  std::discrete_distribution<std::size_t> noise;
  std::vector<float> hidden;
  std::vector<float> error;
  std::vector<std::size_t> kept;

  explicit ModelTrainer(const EmbeddingModel& model)
      : m(model), noise(model.noise_), hidden(model.config_.dim), error(model.config_.dim) {}

  static float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

  // log(1 + exp(-x)), stable for large |x|.
  static double softplus_neg(double x) { return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x)); }

  std::vector<std::size_t> in_vocab(std::span<const std::string> tokens) const {
    std::vector<std::size_t> out;
    for (const auto& t : tokens)
      if (auto i = m.vocab_.find(t)) out.push_back(*i);
    return out;
  }

  // One prediction of sentence[pos] from the mean of the doc vector and the
  // context words. Returns the negative-sampling loss.
  double step(std::span<float> doc, std::span<const std::size_t> sentence, std::size_t pos, float alpha, Rng& rng) {
    const bool update_weights = words_out != nullptr;
    const std::size_t dim = m.config_.dim;
    const std::size_t window = m.config_.window;
    const std::size_t lo = pos >= window ? pos - window : 0;
    const std::size_t hi = std::min(sentence.size(), pos + window + 1);

    std::copy(doc.begin(), doc.end(), hidden.begin());
    std::size_t count = 1;
    for (std::size_t j = lo; j < hi; ++j) {
      if (j == pos) continue;
      const float* w = &m.word_vectors_[sentence[j] * dim];
      for (std::size_t c = 0; c < dim; ++c) hidden[c] += w[c];
      ++count;
    }
    const float inv = 1.0f / static_cast<float>(count);
    for (float& h : hidden) h *= inv;
    std::fill(error.begin(), error.end(), 0.0f);

    const std::size_t center = sentence[pos];
    double loss = 0;
    for (std::size_t d = 0; d <= m.config_.negative_samples; ++d) {
      std::size_t target;
      float label;
      if (d == 0) {
        target = center;
        label = 1;
      } else {
        target = noise(rng);
        if (target == center) continue;
        label = 0;
      }
      const float* out = &m.output_weights_[target * dim];
      float f = 0;
      for (std::size_t c = 0; c < dim; ++c) f += hidden[c] * out[c];
      loss += label > 0 ? softplus_neg(f) : softplus_neg(-f);
      const float g = (label - sigmoid(f)) * alpha;
      for (std::size_t c = 0; c < dim; ++c) error[c] += g * out[c];
      if (update_weights) {
        float* dst = output_out + target * dim;
        for (std::size_t c = 0; c < dim; ++c) dst[c] += g * hidden[c];
      }
    }
    // Every input of the mean receives the full error, as in the reference
    // CBOW implementation.
    if (update_weights) {
      for (std::size_t j = lo; j < hi; ++j) {
        if (j == pos) continue;
        float* w = words_out + sentence[j] * dim;
        for (std::size_t c = 0; c < dim; ++c) w[c] += error[c];
      }
    }
    for (std::size_t c = 0; c < dim; ++c) doc[c] += error[c];
    return loss;
  }

  // One pass over a document: drop frequent words at random, then predict
  // every remaining position. Adds the number of predictions to `examples`.
  double train_document(std::span<float> doc, std::span<const std::size_t> sentence, float alpha, Rng& rng,
                        std::uint64_t& examples) {
    kept.clear();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t w : sentence) {
      const double p = m.keep_prob_[w];
      if (p >= 1.0 || u(rng) < p) kept.push_back(w);
    }
    double loss = 0;
    for (std::size_t pos = 0; pos < kept.size(); ++pos) loss += step(doc, kept, pos, alpha, rng);
    examples += kept.size();
    return loss;
  }

  static void init_vector(std::span<float> v, Rng& rng) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    const float scale = 1.0f / static_cast<float>(v.size());
    for (float& x : v) x = (u(rng) - 0.5f) * scale;
  }
};

inline EmbeddingModel train(std::span<const TokenizedDoc> docs, const TrainingConfig& config) {
  config.validate();
  if (docs.size() < 2) throw InvalidArgument("training needs at least two documents");
  for (const auto& d : docs)
    if (d.tokens.empty()) throw InvalidArgument("document '" + d.doc_id + "' has no tokens");

  EmbeddingModel m;
  m.config_ = config;
  m.vocab_ = build_vocab(docs, config);
  m.corpus_hash_ = corpus_fingerprint(docs);
  for (const auto& d : docs) m.doc_ids_.push_back(d.doc_id);
  m.index_docs();
  m.build_sampling_tables();

  const std::size_t dim = config.dim;
  Rng rng(config.seed);
  m.word_vectors_.assign(m.vocab_.size() * dim, 0.0f);
  m.output_weights_.assign(m.vocab_.size() * dim, 0.0f);
  m.doc_vectors_.assign(docs.size() * dim, 0.0f);
  for (std::size_t i = 0; i < m.vocab_.size(); ++i)
    ModelTrainer::init_vector(std::span(m.word_vectors_).subspan(i * dim, dim), rng);
  for (std::size_t i = 0; i < docs.size(); ++i)
    ModelTrainer::init_vector(std::span(m.doc_vectors_).subspan(i * dim, dim), rng);

  ModelTrainer trainer(m);
  trainer.words_out = m.word_vectors_.data();
  trainer.output_out = m.output_weights_.data();
  std::vector<std::vector<std::size_t>> sentences;
  std::uint64_t words_per_epoch = 0;
  for (const auto& d : docs) {
    sentences.push_back(trainer.in_vocab(d.tokens));
    words_per_epoch += sentences.back().size();
  }
  const double total = static_cast<double>(words_per_epoch * config.epochs);
  std::uint64_t processed = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss = 0;
    std::uint64_t examples = 0;
    for (std::size_t di = 0; di < docs.size(); ++di) {
      auto doc = std::span(m.doc_vectors_).subspan(di * dim, dim);
      const double progress = total > 0 ? static_cast<double>(processed) / total : 0.0;
      const auto alpha = static_cast<float>(config.initial_lr - (config.initial_lr - config.min_lr) * progress);
      loss += trainer.train_document(doc, sentences[di], alpha, rng, examples);
      processed += sentences[di].size();
    }
    m.loss_history_.push_back(examples ? loss / static_cast<double>(examples) : 0.0);
  }
  return m;
}

// Fresh doc vector fitted by gradient descent with word and output weights frozen.
inline InferredVector infer_vector(const EmbeddingModel& model, std::span<const std::string> tokens, Rng& rng) {
  if (tokens.empty()) throw InvalidArgument("cannot infer a vector for an empty token list");
  const auto& cfg = model.config();
  InferredVector out;
  out.values.assign(cfg.dim, 0.0f);
  ModelTrainer::init_vector(out.values, rng);

  ModelTrainer trainer(model);
  auto sentence = trainer.in_vocab(tokens);
  if (sentence.empty()) {
    out.low_confidence = true;
    return out;
  }
  std::uint64_t examples = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double progress = static_cast<double>(epoch) / static_cast<double>(cfg.epochs);
    const auto alpha = static_cast<float>(cfg.initial_lr - (cfg.initial_lr - cfg.min_lr) * progress);
    trainer.train_document(out.values, sentence, alpha, rng, examples);
  }
  return out;
}

inline std::uint64_t inference_seed(const EmbeddingModel& model, std::span<const std::string> tokens) {
  Fnv1a64 h;
  h.update_u64(model.config().seed);
  for (const auto& t : tokens) h.update_field(t);
  return h.digest();
}

inline InferredVector EmbeddingModel::embed_text(std::span<const std::string> tokens) const {
  Rng rng(inference_seed(*this, tokens));
  return infer_vector(*this, tokens, rng);
}

// ---------------------------------------------------------------------------
// Binary model file
//
//   "DAIRPVEC" | u32 version | config | corpus hash | vocab | doc ids |
//   loss history | f32 word vectors | f32 output weights | f32 doc vectors
//
// All integers and floats little-endian; strings are u32 length + bytes.
// ---------------------------------------------------------------------------

inline constexpr char kModelMagic[8] = {'D', 'A', 'I', 'R', 'P', 'V', 'E', 'C'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

struct ModelIo {
  template <std::unsigned_integral T>
  static void put(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
  }
  static void put_f64(std::ostream& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }
  static void put_str(std::ostream& out, const std::string& s) {
    put(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  static void put_floats(std::ostream& out, const std::vector<float>& v) {
    for (float f : v) put(out, std::bit_cast<std::uint32_t>(f));
  }

  template <std::unsigned_integral T>
  static T get(std::istream& in) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw ParseError("truncated model file");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
  }
  static double get_f64(std::istream& in) { return std::bit_cast<double>(get<std::uint64_t>(in)); }
  static std::string get_str(std::istream& in) {
    auto n = get<std::uint32_t>(in);
    if (n > (1u << 26)) throw ParseError("implausible string length in model file");
    std::string s(n, '\0');
    if (n && !in.read(s.data(), n)) throw ParseError("truncated model file");
    return s;
  }
  static std::vector<float> get_floats(std::istream& in, std::size_t n) {
    std::vector<float> v(n);
    for (auto& f : v) f = std::bit_cast<float>(get<std::uint32_t>(in));
    return v;
  }

  static void save(const EmbeddingModel& m, std::ostream& out) {
    out.write(kModelMagic, sizeof kModelMagic);
    put(out, kModelFormatVersion);
    const auto& c = m.config_;
    put(out, static_cast<std::uint32_t>(c.dim));
    put_f64(out, c.initial_lr);
    put_f64(out, c.min_lr);
    put(out, static_cast<std::uint32_t>(c.window));
    put(out, static_cast<std::uint32_t>(c.min_count));
    put(out, static_cast<std::uint32_t>(c.negative_samples));
    put(out, static_cast<std::uint32_t>(c.epochs));
    put(out, static_cast<std::uint64_t>(c.seed));
    put_f64(out, c.unigram_power);
    put_f64(out, c.sample);
    put_str(out, m.corpus_hash_);
    put(out, static_cast<std::uint32_t>(m.vocab_.size()));
    for (std::size_t i = 0; i < m.vocab_.size(); ++i) {
      put_str(out, m.vocab_.word(i));
      put(out, static_cast<std::uint64_t>(m.vocab_.count(i)));
    }
    put(out, static_cast<std::uint32_t>(m.doc_ids_.size()));
    for (const auto& id : m.doc_ids_) put_str(out, id);
    put(out, static_cast<std::uint32_t>(m.loss_history_.size()));
    for (double l : m.loss_history_) put_f64(out, l);
    put_floats(out, m.word_vectors_);
    put_floats(out, m.output_weights_);
    put_floats(out, m.doc_vectors_);
    if (!out) throw Error("failed writing model");
  }

  static EmbeddingModel load(std::istream& in) {
    char magic[sizeof kModelMagic];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kModelMagic, sizeof magic) != 0)
      throw ParseError("not a model file (bad magic)");
    if (auto v = get<std::uint32_t>(in); v != kModelFormatVersion)
      throw ParseError("unsupported model format version " + std::to_string(v));
    EmbeddingModel m;
    auto& c = m.config_;
    c.dim = get<std::uint32_t>(in);
    c.initial_lr = get_f64(in);
    c.min_lr = get_f64(in);
    c.window = get<std::uint32_t>(in);
    c.min_count = get<std::uint32_t>(in);
    c.negative_samples = get<std::uint32_t>(in);
    c.epochs = get<std::uint32_t>(in);
    c.seed = get<std::uint64_t>(in);
    c.unigram_power = get_f64(in);
    c.sample = get_f64(in);
    try {
      c.validate();
    } catch (const InvalidArgument& e) {
      throw ParseError(std::string("bad config block in model file: ") + e.what());
    }
    m.corpus_hash_ = get_str(in);
    auto vsize = get<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < vsize; ++i) {
      auto w = get_str(in);
      auto n = get<std::uint64_t>(in);
      m.vocab_.add(std::move(w), n);
    }
    auto ndocs = get<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < ndocs; ++i) m.doc_ids_.push_back(get_str(in));
    auto nloss = get<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < nloss; ++i) m.loss_history_.push_back(get_f64(in));
    m.word_vectors_ = get_floats(in, std::size_t(vsize) * c.dim);
    m.output_weights_ = get_floats(in, std::size_t(vsize) * c.dim);
    m.doc_vectors_ = get_floats(in, std::size_t(ndocs) * c.dim);
    m.index_docs();
    m.build_sampling_tables();
    return m;
  }
};

inline void save_model(const EmbeddingModel& model, std::ostream& out) { ModelIo::save(model, out); }

inline void save_model(const EmbeddingModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  ModelIo::save(model, out);
}

inline std::string serialize_model(const EmbeddingModel& model) {
  std::ostringstream out(std::ios::binary);
  ModelIo::save(model, out);
  return out.str();
}

// When `expected_corpus_hash` is given, a model trained on different text is rejected.
inline EmbeddingModel load_model(std::istream& in, std::optional<std::string> expected_corpus_hash = std::nullopt) {
  auto m = ModelIo::load(in);
  if (expected_corpus_hash && *expected_corpus_hash != m.corpus_hash())
    throw HashMismatchError("model was trained on corpus " + m.corpus_hash() + ", loaded against " +
                            *expected_corpus_hash);
  return m;
}

inline EmbeddingModel load_model(const std::string& path, std::optional<std::string> expected_corpus_hash = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open model '" + path + "'");
  return load_model(in, std::move(expected_corpus_hash));
}

}  // namespace dairector
