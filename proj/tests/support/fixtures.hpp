#pragma once

// Shared test fixtures: data paths, synthetic corpora, injectable embeddings
// and brute-force reference implementations.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dairector/dairector.hpp"

namespace fixtures {

using namespace dairector;

inline std::string data_path(const std::string& name) { return std::string(DAIRECTOR_DATA_DIR) + "/" + name; }
inline std::string test_data_path(const std::string& name) {
  return std::string(DAIRECTOR_TEST_DATA_DIR) + "/" + name;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::uint64_t counter = 0;
  std::random_device rd;
  auto p = std::filesystem::temp_directory_path() /
           ("dairector-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(p);
  return p;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) : path(temp_dir(tag)) {}
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

// ---------------------------------------------------------------------------
// Three topic clusters with disjoint vocabularies, 20 documents each. Each
// document draws from a skewed mix of its cluster's words and also carries
// two signature words of its own (each used twice so they survive min_count 2).
// ---------------------------------------------------------------------------

struct ClusterCorpus {
  std::vector<TokenizedDoc> docs;
  std::vector<int> cluster;  // parallel to docs
};

inline ClusterCorpus make_cluster_corpus(std::uint64_t seed = 11, std::size_t per_cluster = 20,
                                         std::size_t doc_len = 40) {
  const std::vector<std::vector<std::string>> topics = {
      {"ship",  "sail",   "harbor", "anchor",  "captain", "mast",    "tide",   "storm",  "deck",   "crew",
       "ocean", "wave",   "port",   "rudder",  "voyage",  "island",  "reef",   "gull",   "cargo",  "compass"},
      {"court", "judge",  "verdict", "lawyer", "trial",   "witness", "jury",   "appeal", "evidence", "clerk",
       "bail",  "motion", "statute", "docket", "ruling",  "counsel", "oath",   "gavel",  "plea",   "summons"},
      {"oven",  "flour",  "butter", "sugar",   "dough",   "yeast",   "whisk",  "pastry", "crust",  "icing",
       "bread", "cream",  "batter", "kneading", "loaf",   "recipe",  "spoon",  "sieve",  "vanilla", "cinnamon"},
  };
  std::mt19937_64 rng(seed);
  ClusterCorpus out;
  for (std::size_t c = 0; c < topics.size(); ++c) {
    for (std::size_t d = 0; d < per_cluster; ++d) {
      // Each document leans on its own handful of the cluster's words.
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<double> weights(topics[c].size());
      for (auto& w : weights) w = std::pow(u(rng), 4.0);
      std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
      TokenizedDoc doc;
      doc.doc_id = "c" + std::to_string(c) + "d" + std::to_string(d);
      for (std::size_t t = 0; t < doc_len; ++t) doc.tokens.push_back(topics[c][pick(rng)]);
      std::string sig1 = "sig" + std::to_string(c) + "x" + std::to_string(d) + "a";
      std::string sig2 = "sig" + std::to_string(c) + "x" + std::to_string(d) + "b";
      for (std::string s : {sig1, sig2, sig1, sig2}) {
        std::uniform_int_distribution<std::size_t> at(0, doc.tokens.size());
        doc.tokens.insert(doc.tokens.begin() + static_cast<std::ptrdiff_t>(at(rng)), s);
      }
      out.docs.push_back(std::move(doc));
      out.cluster.push_back(static_cast<int>(c));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Injectable embedding: fixed vectors per doc id, and a fixed vector per
// query text (looked up by the joined tokens), falling back to a zero vector
// flagged low-confidence.
// ---------------------------------------------------------------------------

struct TableEmbedding {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<float>> docs;
  std::unordered_map<std::string, std::vector<float>> queries;

  std::size_t dimension() const { return dim; }

  std::optional<std::span<const float>> find_doc_vector(std::string_view id) const {
    auto it = docs.find(std::string(id));
    if (it == docs.end()) return std::nullopt;
    return std::span<const float>(it->second);
  }

  static std::string key(std::span<const std::string> tokens) {
    std::string k;
    for (const auto& t : tokens) k += t + " ";
    return k;
  }

  InferredVector embed_text(std::span<const std::string> tokens) const {
    InferredVector v;
    if (auto it = queries.find(key(tokens)); it != queries.end()) {
      v.values = it->second;
    } else {
      v.values.assign(dim, 0.0f);
      v.low_confidence = true;
    }
    return v;
  }

  void set_query(std::string_view text, std::vector<float> values) { queries[key(tokenize(text))] = std::move(values); }
};

static_assert(DocumentEmbedding<TableEmbedding>);

inline std::vector<float> random_vector(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

// ---------------------------------------------------------------------------
// Brute-force references
// ---------------------------------------------------------------------------

// Full scan with the same ordering contract as nearest_documents.
template <class E>
std::vector<Neighbor> brute_force_nearest(const E& model, std::span<const float> query,
                                          const std::vector<std::string>& pool, std::size_t n) {
  std::vector<std::string> ids = pool;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<Neighbor> all;
  for (const auto& id : ids) {
    auto v = *model.find_doc_vector(id);
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      dot += double(query[i]) * double(v[i]);
      na += double(query[i]) * double(query[i]);
      nb += double(v[i]) * double(v[i]);
    }
    double d = (na == 0 || nb == 0) ? 1.0 : std::clamp(1.0 - dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 2.0);
    all.push_back({id, d});
  }
  // Stable selection: repeatedly take the minimum.
  std::vector<Neighbor> out;
  std::vector<bool> used(all.size(), false);
  for (std::size_t k = 0; k < std::min(n, all.size()); ++k) {
    std::size_t best = all.size();
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (used[i]) continue;
      if (best == all.size() || all[i].distance < all[best].distance ||
          (all[i].distance == all[best].distance && all[i].doc_id < all[best].doc_id))
        best = i;
    }
    used[best] = true;
    out.push_back(all[best]);
  }
  return out;
}

// Random trope corpus of `n` nodes named t00..; each unordered pair linked
// with probability p. Every trope is a plot trope unless `plot_fraction` < 1.
inline TropeCorpus random_trope_graph(std::size_t n, double p, std::mt19937_64& rng, double plot_fraction = 1.0) {
  std::bernoulli_distribution link(p), plot(plot_fraction);
  std::vector<Trope> tropes(n);
  auto name = [](std::size_t i) { return std::string("t") + (i < 10 ? "0" : "") + std::to_string(i); };
  for (std::size_t i = 0; i < n; ++i) {
    tropes[i].name = name(i);
    tropes[i].description = "trope number " + std::to_string(i);
    tropes[i].is_plot_trope = plot(rng);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (link(rng)) {
        // Store the link on one side only; loading must symmetrize it.
        if (rng() & 1)
          tropes[i].links.insert(name(j));
        else
          tropes[j].links.insert(name(i));
      }
  return TropeCorpus::build(std::move(tropes));
}

// All-pairs shortest hop counts by Floyd-Warshall over the raw link lists
// (undirected). Unreachable pairs hold nullopt.
inline std::map<std::pair<std::string, std::string>, std::optional<std::size_t>> floyd_warshall(
    const TropeCorpus& corpus, bool plot_only = false) {
  std::vector<std::string> names;
  for (const auto& [name, t] : corpus.tropes())
    if (!plot_only || t.is_plot_trope) names.push_back(name);
  const std::size_t n = names.size();
  const std::size_t inf = std::numeric_limits<std::size_t>::max() / 4;
  std::vector<std::vector<std::size_t>> d(n, std::vector<std::size_t>(n, inf));
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[names[i]] = i;
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (const auto& l : corpus.trope(names[i]).links) {
      auto it = index.find(l);
      if (it == index.end() || it->second == i) continue;
      d[i][it->second] = d[it->second][i] = 1;
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  std::map<std::pair<std::string, std::string>, std::optional<std::size_t>> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[{names[i], names[j]}] = d[i][j] >= inf ? std::nullopt : std::optional<std::size_t>(d[i][j]);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation fixtures
// ---------------------------------------------------------------------------

// A four-trope link chain: Get Into Jail Free -> Can't Get in Trouble for
// Nuthin' -> Frame-Up -> Clear Their Name, plus a distractor off the chain.
inline TropeCorpus chain_corpus() {
  return load_trope_corpus(R"({"tropes": [
    {"name": "Get Into Jail Free", "description": "wants to be arrested", "plot": true,
     "links": ["Can't Get in Trouble for Nuthin'"]},
    {"name": "Can't Get in Trouble for Nuthin'", "description": "cannot get arrested", "links": ["Frame-Up"]},
    {"name": "Frame-Up", "description": "framed for a crime", "plot": true, "links": ["Clear Their Name"]},
    {"name": "Clear Their Name", "description": "proves innocence", "plot": true},
    {"name": "Road Trip", "description": "a long drive", "plot": true, "links": ["Frame-Up"]}
  ]})");
}

struct SyntheticEval {
  TropeCorpus corpus;
  TableEmbedding embedding;
  std::vector<LabelledPair> pairs;
};

// `tropes` plot tropes with random vectors and `pairs` labelled fragments.
// With `oracle`, each fragment's vector (stored and inferred from its text)
// is its gold trope's vector; otherwise it is an independent random vector.
inline SyntheticEval synthetic_eval(std::size_t tropes, std::size_t pairs, bool oracle, std::uint64_t seed,
                                    std::size_t dim = 16) {
  std::mt19937_64 rng(seed);
  SyntheticEval out;
  out.embedding.dim = dim;
  std::vector<Trope> ts(tropes);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < tropes; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "t%03zu", i);
    ts[i].name = buf;
    ts[i].description = "synthetic trope";
    ts[i].is_plot_trope = true;
    names.push_back(buf);
    out.embedding.docs[trope_doc_id(buf)] = random_vector(dim, rng);
  }
  out.corpus = TropeCorpus::build(std::move(ts));
  std::uniform_int_distribution<std::size_t> pick(0, tropes - 1);
  for (std::size_t i = 0; i < pairs; ++i) {
    LabelledPair p{std::to_string(i), "synthetic fragment number " + std::to_string(i), names[pick(rng)]};
    auto v = oracle ? out.embedding.docs.at(trope_doc_id(p.gold_trope)) : random_vector(dim, rng);
    out.embedding.docs[fragment_doc_id(p.fragment_id)] = v;
    out.embedding.set_query(p.fragment_text, std::move(v));
    out.pairs.push_back(std::move(p));
  }
  return out;
}

// Default-config model over the bundled corpora, trained once per test binary.
inline TrainingConfig bundled_config() {
  TrainingConfig cfg;
  cfg.seed = 5;
  return cfg;
}

struct BundledArtifacts {
  PlotGraph graph;
  TropeCorpus tropes;
  EmbeddingModel model;
};

inline const BundledArtifacts& bundled() {
  static const BundledArtifacts a = [] {
    BundledArtifacts b;
    b.graph = load_plot_corpus(data_path("plotto_excerpt.plotto"));
    b.tropes = load_trope_corpus_file(data_path("tropes.json"));
    b.model = train(assemble_training_docs(b.graph, b.tropes), bundled_config());
    return b;
  }();
  return a;
}

inline NameMap bundled_names() { return NameMap::load_file(data_path("names.json")); }

// The three-node subgraph with a model trained over it and the
// bundled tropes.
inline const BundledArtifacts& three_node_artifacts() {
  static const BundledArtifacts a = [] {
    BundledArtifacts b;
    b.graph = load_plot_corpus(data_path("three_node.plotto"));
    b.tropes = load_trope_corpus_file(data_path("tropes.json"));
    b.model = train(assemble_training_docs(b.graph, b.tropes), bundled_config());
    return b;
  }();
  return a;
}

// ---------------------------------------------------------------------------
// Scripted actor requests
// ---------------------------------------------------------------------------

struct ScriptedRequest {
  RequestKind kind = RequestKind::Platform;
  std::optional<std::string> prompt;
};

// Mixed platform/tilt requests, some with prompts (including an empty one
// and one with no known words).
inline std::vector<ScriptedRequest> random_script(std::size_t n, std::mt19937_64& rng) {
  static const std::vector<std::optional<std::string>> prompts = {
      std::nullopt,
      std::nullopt,
      std::string("he wants to be free of his meddlesome friends"),
      std::string("a prophecy and a forged letter"),
      std::string("prison, escape and a stolen relic"),
      std::string(""),
      std::string("zzyzx qwerty"),
  };
  std::uniform_int_distribution<std::size_t> pick(0, prompts.size() - 1);
  std::bernoulli_distribution platform(0.4);
  std::vector<ScriptedRequest> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({platform(rng) ? RequestKind::Platform : RequestKind::Tilt, prompts[pick(rng)]});
  return out;
}

// Applies a script in-process. Platform requests after the story ended are
// rejected and leave the transcript untouched, as on every front-end.
// Returns the number of rejected requests.
inline std::size_t apply_script(const Director& director, Session& s, const std::vector<ScriptedRequest>& script) {
  std::size_t rejected = 0;
  for (const auto& r : script) {
    try {
      director.handle_request(s, r.kind, r.prompt);
    } catch (const StateError&) {
      ++rejected;
    }
  }
  return rejected;
}

// Console input for a script.
inline std::string console_script(const std::vector<ScriptedRequest>& script) {
  std::string text;
  for (const auto& r : script) {
    text += r.kind == RequestKind::Platform ? "platform" : "tilt";
    if (r.prompt) text += ": " + *r.prompt;
    text += '\n';
  }
  return text;
}

}  // namespace fixtures
