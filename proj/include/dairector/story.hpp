#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dairector/corpus.hpp"
#include "dairector/embedding.hpp"
#include "dairector/errors.hpp"
#include "dairector/text.hpp"

namespace dairector {

inline constexpr std::size_t kTiltCandidates = 5;
inline constexpr std::size_t kDefaultTreeDepth = 6;
inline constexpr std::size_t kDefaultStoryLength = 5;

// ---------------------------------------------------------------------------
// Symbol substitution
// ---------------------------------------------------------------------------

// Function on symbols; absent keys map to themselves.
using SubstitutionMap = std::map<std::string, std::string, std::less<>>;

inline std::string_view apply_symbol(const SubstitutionMap& subs, std::string_view symbol) {
  auto it = subs.find(symbol);
  return it == subs.end() ? symbol : std::string_view(it->second);
}

// The pairs of one edge act simultaneously, so "ch A to B, ch B to A" swaps.
inline SubstitutionMap edge_substitutions(const SubstitutionEdge& edge) {
  SubstitutionMap m;
  for (const auto& s : edge.substitutions)
    if (s.from_symbol != s.to_symbol) m.emplace(s.from_symbol, s.to_symbol);
  return m;
}

// outer after inner: result(s) = outer(inner(s)).
inline SubstitutionMap compose(const SubstitutionMap& outer, const SubstitutionMap& inner) {
  SubstitutionMap out;
  std::set<std::string, std::less<>> domain;
  for (const auto& [k, _] : outer) domain.insert(k);
  for (const auto& [k, _] : inner) domain.insert(k);
  for (const auto& s : domain) {
    std::string_view r = apply_symbol(outer, apply_symbol(inner, s));
    if (r != s) out.emplace(s, std::string(r));
  }
  return out;
}

// Rewrite standalone tokens of `text` that are in `symbols` through `fn`.
template <class Fn>
std::string rewrite_symbols(std::string_view text, std::span<const std::string> symbols, Fn&& fn) {
  std::string out;
  out.reserve(text.size());
  std::size_t cursor = 0;
  for (const WordSpan& w : word_spans(text)) {
    auto tok = text.substr(w.offset, w.length);
    if (std::find(symbols.begin(), symbols.end(), tok) == symbols.end()) continue;
    out.append(text.substr(cursor, w.offset - cursor));
    out.append(fn(tok));
    cursor = w.offset + w.length;
  }
  out.append(text.substr(cursor));
  return out;
}

// ---------------------------------------------------------------------------
// Character names
// ---------------------------------------------------------------------------

class NameMap {
 public:
  NameMap() = default;

  explicit NameMap(std::map<std::string, std::string, std::less<>> names) : names_(std::move(names)) { validate(); }

  static NameMap defaults() { return NameMap({{"A", "Alfred"}, {"B", "Beatrice"}, {"AUX", "Aunt Augusta"}}); }

  static NameMap from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("name map must be a flat JSON object");
    std::map<std::string, std::string, std::less<>> names;
    for (const auto& [k, v] : j.items()) {
      if (!v.is_string()) throw ParseError("name for symbol '" + k + "' must be a string");
      names.emplace(k, v.get<std::string>());
    }
    return NameMap(std::move(names));
  }

  static NameMap load_file(const std::string& path) {
    try {
      return from_json(nlohmann::json::parse(detail::read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("malformed name map '" + path + "': " + e.what());
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : names_) j[k] = v;
    return j;
  }

  const std::string* find(std::string_view symbol) const {
    auto it = names_.find(symbol);
    return it == names_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, std::string, std::less<>>& entries() const noexcept { return names_; }

  friend bool operator==(const NameMap&, const NameMap&) = default;

 private:
  void validate() const {
    std::set<std::string_view> seen;
    for (const auto& [sym, name] : names_) {
      if (name.empty()) throw InvalidArgument("empty display name for symbol '" + sym + "'");
      if (!seen.insert(name).second) throw InvalidArgument("display name '" + name + "' used for two symbols");
    }
  }

  std::map<std::string, std::string, std::less<>> names_;
};

struct RenderedText {
  std::string text;
  std::vector<std::string> unnamed_symbols;  // rendered as-is
};

// Substitutions first, then names. Pronouns are left alone.
inline RenderedText render_fragment(const PlotFragment& fragment, const SubstitutionMap& subs, const NameMap& names) {
  RenderedText r;
  std::set<std::string> unnamed;
  r.text = rewrite_symbols(fragment.text, fragment.symbols, [&](std::string_view sym) {
    std::string_view mapped = apply_symbol(subs, sym);
    if (const auto* name = names.find(mapped)) return *name;
    unnamed.emplace(mapped);
    return std::string(mapped);
  });
  r.unnamed_symbols.assign(unnamed.begin(), unnamed.end());
  return r;
}

// ---------------------------------------------------------------------------
// Plot tree
// ---------------------------------------------------------------------------

struct PlotTreeNode {
  std::string fragment_id;
  std::vector<PlotTreeNode> children;
  SubstitutionMap accumulated_subs;  // maps this fragment's symbols into the root's frame
  std::size_t depth = 0;

  friend bool operator==(const PlotTreeNode&, const PlotTreeNode&) = default;
};

namespace detail {

inline void expand(const PlotGraph& graph, PlotTreeNode& node, std::size_t max_depth, std::vector<std::string>& path) {
  if (node.depth + 1 >= max_depth) return;
  for (const SubstitutionEdge* e : graph.successors(node.fragment_id)) {
    if (std::find(path.begin(), path.end(), e->to) != path.end()) continue;
    PlotTreeNode child;
    child.fragment_id = e->to;
    child.depth = node.depth + 1;
    child.accumulated_subs = compose(node.accumulated_subs, edge_substitutions(*e));
    path.push_back(e->to);
    expand(graph, child, max_depth, path);
    path.pop_back();
    node.children.push_back(std::move(child));
  }
}

}  // namespace detail

// Uniform over fragments with at least one successor.
inline std::string random_root(const PlotGraph& graph, Rng& rng) {
  auto candidates = graph.non_terminal_ids();
  if (candidates.empty()) throw InvalidArgument("every fragment is terminal; cannot choose a random root");
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  return candidates[pick(rng)];
}

// `root` empty means RANDOM. Expands every successor down to `max_depth`
// levels, skipping fragments already on the path.
inline PlotTreeNode generate_plot_tree(const PlotGraph& graph, std::optional<std::string> root, std::size_t max_depth,
                                       Rng& rng) {
  if (max_depth < 1) throw InvalidArgument("max_depth must be >= 1");
  if (graph.size() == 0) throw InvalidArgument("empty plot graph");
  std::string root_id = root ? *root : random_root(graph, rng);
  if (!graph.find(root_id)) throw NotFoundError("unknown root fragment '" + root_id + "'");
  PlotTreeNode node;
  node.fragment_id = root_id;
  std::vector<std::string> path{root_id};
  detail::expand(graph, node, max_depth, path);
  return node;
}

// Walk child indices from `root`; nullptr if the path leaves the tree.
inline const PlotTreeNode* node_at(const PlotTreeNode& root, std::span<const std::size_t> path) {
  const PlotTreeNode* n = &root;
  for (std::size_t i : path) {
    if (i >= n->children.size()) return nullptr;
    n = &n->children[i];
  }
  return n;
}

// ---------------------------------------------------------------------------
// Platform choice
// ---------------------------------------------------------------------------

template <DocumentEmbedding E>
InferredVector embed_prompt(const E& model, std::string_view text) {
  auto tokens = tokenize(text);
  if (tokens.empty()) throw InvalidArgument("empty context text");
  return model.embed_text(tokens);
}

// Index of the child closest to `context`, or nullopt at a leaf.
template <DocumentEmbedding E>
std::optional<std::size_t> next_platform_index(const E& model, const PlotTreeNode& node, std::span<const float> context) {
  if (node.children.empty()) return std::nullopt;
  if (node.children.size() == 1) return 0;
  std::optional<std::size_t> best;
  double best_d = 0;
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    const auto& id = node.children[i].fragment_id;
    auto v = model.find_doc_vector(fragment_doc_id(id));
    if (!v) throw NotFoundError("model has no vector for fragment '" + id + "'");
    double d = cosine_distance(context, *v);
    if (!best || d < best_d || (d == best_d && id < node.children[*best].fragment_id)) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

template <DocumentEmbedding E>
const PlotTreeNode* next_platform(const E& model, const PlotTreeNode& node, std::span<const float> context) {
  auto i = next_platform_index(model, node, context);
  return i ? &node.children[*i] : nullptr;
}

// Custom-prompt form: the context text is embedded by inference.
template <DocumentEmbedding E>
const PlotTreeNode* next_platform(const E& model, const PlotTreeNode& node, std::string_view context_text) {
  auto ctx = embed_prompt(model, context_text);
  return next_platform(model, node, std::span<const float>(ctx.values));
}

// ---------------------------------------------------------------------------
// Tilts
// ---------------------------------------------------------------------------

struct RedundancyVerdict {
  bool keep = true;
  std::vector<std::string> shared;  // words longer than 3 letters found in both
};

inline std::set<std::string> long_words(std::string_view text) {
  std::set<std::string> out;
  for (auto& t : tokenize(text))
    if (t.size() > 3) out.insert(std::move(t));
  return out;
}

inline RedundancyVerdict redundancy_filter(std::string_view platform_text, std::string_view trope_name) {
  auto platform = long_words(platform_text);
  RedundancyVerdict v;
  for (const auto& w : long_words(trope_name))
    if (platform.contains(w)) v.shared.push_back(w);
  v.keep = v.shared.empty();
  return v;
}

struct TiltCandidate {
  std::string name;
  double distance;

  friend bool operator==(const TiltCandidate&, const TiltCandidate&) = default;
};

struct FilteredTrope {
  std::string name;
  std::vector<std::string> shared;

  friend bool operator==(const FilteredTrope&, const FilteredTrope&) = default;
};

struct TiltResult {
  std::string chosen;
  std::vector<TiltCandidate> candidates;
  std::vector<FilteredTrope> filtered_out;

  friend bool operator==(const TiltResult&, const TiltResult&) = default;
};

struct TiltCandidates {
  std::vector<TiltCandidate> candidates;
  std::vector<FilteredTrope> filtered_out;
};

// Filters the whole plot-trope pool against the platform, then keeps the n
// closest survivors.
template <DocumentEmbedding E>
TiltCandidates tilt_candidates(const E& model, const TropeCorpus& corpus, std::string_view platform_text,
                               std::span<const float> context, std::size_t n = kTiltCandidates) {
  auto subset = plot_trope_subset(corpus);
  if (subset.empty()) throw InvalidArgument("corpus has no plot tropes");
  TiltCandidates out;
  std::vector<std::string> pool;
  for (const auto& name : subset) {
    auto verdict = redundancy_filter(platform_text, name);
    if (verdict.keep)
      pool.push_back(trope_doc_id(name));
    else
      out.filtered_out.push_back({name, std::move(verdict.shared)});
  }
  if (pool.empty()) throw InvalidArgument("no tilt candidates left after redundancy filtering");
  constexpr std::size_t prefix = std::string_view("trope:").size();
  for (auto& nb : nearest_documents(model, context, pool, n))
    out.candidates.push_back({nb.doc_id.substr(prefix), nb.distance});
  return out;
}

template <DocumentEmbedding E>
TiltResult select_tilt(const E& model, const TropeCorpus& corpus, std::string_view platform_text,
                       std::span<const float> context, Rng& rng) {
  auto tc = tilt_candidates(model, corpus, platform_text, context);
  std::uniform_int_distribution<std::size_t> pick(0, tc.candidates.size() - 1);
  TiltResult r;
  r.chosen = tc.candidates[pick(rng)].name;
  r.candidates = std::move(tc.candidates);
  r.filtered_out = std::move(tc.filtered_out);
  return r;
}

template <DocumentEmbedding E>
TiltResult select_tilt(const E& model, const TropeCorpus& corpus, std::string_view platform_text,
                       std::string_view context_text, Rng& rng) {
  auto ctx = embed_prompt(model, context_text);
  return select_tilt(model, corpus, platform_text, std::span<const float>(ctx.values), rng);
}

// ---------------------------------------------------------------------------
// Whole stories
// ---------------------------------------------------------------------------

struct StoryBeat {
  std::string fragment_id;
  std::string text;

  friend bool operator==(const StoryBeat&, const StoryBeat&) = default;
};

// Random root, then repeatedly the best-matching child using the current
// fragment's own vector as context, for at most `length_limit` beats.
template <DocumentEmbedding E>
std::vector<StoryBeat> generate_story(const PlotGraph& graph, const E& model, const NameMap& names,
                                      std::size_t length_limit, Rng& rng) {
  if (length_limit < 1) throw InvalidArgument("length_limit must be >= 1");
  auto tree = generate_plot_tree(graph, std::nullopt, length_limit, rng);
  std::vector<StoryBeat> beats;
  const PlotTreeNode* node = &tree;
  while (node && beats.size() < length_limit) {
    const auto& frag = graph.fragment(node->fragment_id);
    beats.push_back({node->fragment_id, render_fragment(frag, node->accumulated_subs, names).text});
    auto self = model.find_doc_vector(fragment_doc_id(node->fragment_id));
    if (!self) throw NotFoundError("model has no vector for fragment '" + node->fragment_id + "'");
    node = next_platform(model, *node, *self);
  }
  return beats;
}

}  // namespace dairector
