#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dairector/errors.hpp"
#include "dairector/hash.hpp"
#include "dairector/text.hpp"

namespace dairector {

// ---------------------------------------------------------------------------
// Plot fragments and the substitution graph
// ---------------------------------------------------------------------------

struct PlotFragment {
  std::string id;
  std::string text;
  std::vector<std::string> symbols;  // sorted, unique

  friend bool operator==(const PlotFragment&, const PlotFragment&) = default;
};

// "ch <from_symbol> to <to_symbol>" on an edge label.
struct Substitution {
  std::string from_symbol;
  std::string to_symbol;

  friend bool operator==(const Substitution&, const Substitution&) = default;
};

struct SubstitutionEdge {
  std::string from;
  std::string to;
  std::vector<Substitution> substitutions;

  friend bool operator==(const SubstitutionEdge&, const SubstitutionEdge&) = default;
};

class PlotGraph {
 public:
  PlotGraph() = default;

  // Validates ids and edge endpoints. Fragment symbols are recomputed from
  // text with the given alphabet.
  static PlotGraph build(std::vector<PlotFragment> fragments, std::vector<SubstitutionEdge> edges,
                         const SymbolAlphabet& alphabet = SymbolAlphabet::defaults()) {
    if (fragments.empty()) throw ParseError("no fragments");
    PlotGraph g;
    for (auto& f : fragments) {
      if (f.id.empty()) throw ParseError("empty fragment id");
      f.symbols = extract_symbols(f.text, alphabet);
      std::string id = f.id;
      if (!g.fragments_.emplace(id, std::move(f)).second)
        throw ParseError("duplicate fragment id '" + id + "'");
    }
    for (const auto& e : edges) {
      check_edge(g, e);
    }
    g.edges_ = std::move(edges);
    g.rebuild_adjacency();
    return g;
  }

  const std::map<std::string, PlotFragment, std::less<>>& fragments() const noexcept { return fragments_; }
  const std::vector<SubstitutionEdge>& edges() const noexcept { return edges_; }
  std::size_t size() const noexcept { return fragments_.size(); }

  const PlotFragment* find(std::string_view id) const {
    auto it = fragments_.find(id);
    return it == fragments_.end() ? nullptr : &it->second;
  }

  const PlotFragment& fragment(std::string_view id) const {
    if (const auto* f = find(id)) return *f;
    throw NotFoundError("unknown fragment id '" + std::string(id) + "'");
  }

  // Outgoing edges of `id`, in source order.
  std::vector<const SubstitutionEdge*> successors(std::string_view id) const {
    std::vector<const SubstitutionEdge*> out;
    auto it = adjacency_.find(id);
    if (it == adjacency_.end()) return out;
    out.reserve(it->second.size());
    for (std::size_t idx : it->second) out.push_back(&edges_[idx]);
    return out;
  }

  bool is_terminal(std::string_view id) const {
    auto it = adjacency_.find(id);
    return it == adjacency_.end() || it->second.empty();
  }

  // Fragments with at least one successor, in id order.
  std::vector<std::string> non_terminal_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, _] : fragments_)
      if (!is_terminal(id)) ids.push_back(id);
    return ids;
  }

  // Fingerprint of the canonical content (ids, texts, edges in order).
  std::string content_hash() const {
    Fnv1a64 h;
    h.update_field("plot-graph/1");
    for (const auto& [id, f] : fragments_) {
      h.update_field(id);
      h.update_field(f.text);
    }
    for (const auto& e : edges_) {
      h.update_field(e.from);
      h.update_field(e.to);
      h.update_u64(e.substitutions.size());
      for (const auto& s : e.substitutions) {
        h.update_field(s.from_symbol);
        h.update_field(s.to_symbol);
      }
    }
    return h.hex();
  }

  friend bool operator==(const PlotGraph& a, const PlotGraph& b) {
    return a.fragments_ == b.fragments_ && a.edges_ == b.edges_;
  }

 private:
  static void check_edge(const PlotGraph& g, const SubstitutionEdge& e) {
    if (!g.find(e.from)) throw ParseError("edge from unknown fragment id '" + e.from + "'");
    if (!g.find(e.to)) throw ParseError("edge to unknown fragment id '" + e.to + "'");
    std::set<std::string_view> seen;
    for (const auto& s : e.substitutions) {
      if (!seen.insert(s.from_symbol).second)
        throw ParseError("symbol '" + s.from_symbol + "' substituted twice on edge " + e.from + " -> " + e.to);
    }
  }

  void rebuild_adjacency() {
    adjacency_.clear();
    for (const auto& [id, _] : fragments_) adjacency_[id];
    for (std::size_t i = 0; i < edges_.size(); ++i) adjacency_[edges_[i].from].push_back(i);
  }

  std::map<std::string, PlotFragment, std::less<>> fragments_;
  std::vector<SubstitutionEdge> edges_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> adjacency_;
};

// ---------------------------------------------------------------------------
// Line-oriented fixture DSL
//
//   # comment
//   FRAG 746: B, who was thought ... a great sorrow
//   -> 1441a ch A to B
//   -> 1373 ch A to B
//
// Lines after a FRAG header and before its first edge continue the text.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
  auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

inline std::size_t leading_ws(std::string_view s) {
  std::size_t n = 0;
  while (n < s.size() && (s[n] == ' ' || s[n] == '\t')) ++n;
  return n;
}

inline bool is_id_char(char c) {
  return c != ':' && c != ' ' && c != '\t' && c != ',' && c != '\r';
}

struct LabelCursor {
  std::string_view line;
  std::size_t pos;
  std::size_t line_no;

  void skip_ws() {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= line.size();
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_no, pos + 1); }

  std::string_view word() {
    skip_ws();
    std::size_t start = pos;
    while (pos < line.size() && is_word_byte(line[pos])) ++pos;
    if (start == pos) fail("expected a word");
    return line.substr(start, pos - start);
  }

  void keyword(std::string_view kw) {
    skip_ws();
    std::size_t start = pos;
    if (word() != kw) {
      pos = start;
      fail("unknown edge label text, expected '" + std::string(kw) + "'");
    }
  }
};

inline std::vector<Substitution> parse_edge_label(std::string_view line, std::size_t pos, std::size_t line_no) {
  LabelCursor cur{line, pos, line_no};
  std::vector<Substitution> subs;
  if (cur.done()) return subs;
  while (true) {
    cur.keyword("ch");
    std::string from(cur.word());
    cur.keyword("to");
    std::string to(cur.word());
    for (const auto& s : subs)
      if (s.from_symbol == from) cur.fail("symbol '" + from + "' substituted twice on one edge");
    subs.push_back({std::move(from), std::move(to)});
    if (cur.done()) break;
    if (line[cur.pos] != ',') cur.fail("unknown edge label text, expected ','");
    ++cur.pos;
  }
  return subs;
}

}  // namespace detail

inline PlotGraph parse_plotto(std::istream& in, const SymbolAlphabet& alphabet = SymbolAlphabet::defaults()) {
  struct PendingEdge {
    SubstitutionEdge edge;
    std::size_t line;
    std::size_t column;
  };
  std::vector<PlotFragment> fragments;
  std::vector<PendingEdge> edges;
  std::map<std::string, std::size_t> first_seen;
  bool in_text = false;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t indent = detail::leading_ws(line);
    std::string_view body = line.substr(indent);
    if (detail::trim(body).empty() || body.front() == '#') continue;

    if (body.starts_with("FRAG") && (body.size() == 4 || body[4] == ' ' || body[4] == '\t')) {
      std::size_t pos = indent + 4;
      pos += detail::leading_ws(line.substr(pos));
      std::size_t id_start = pos;
      while (pos < line.size() && detail::is_id_char(line[pos])) ++pos;
      if (pos == id_start) throw ParseError("expected fragment id", line_no, id_start + 1);
      std::string id(line.substr(id_start, pos - id_start));
      pos += detail::leading_ws(line.substr(pos));
      if (pos >= line.size() || line[pos] != ':') throw ParseError("expected ':' after fragment id", line_no, pos + 1);
      ++pos;
      if (auto [it, inserted] = first_seen.emplace(id, line_no); !inserted)
        throw ParseError("duplicate fragment id '" + id + "' (first defined on line " +
                             std::to_string(it->second) + ")",
                         line_no, id_start + 1);
      fragments.push_back({std::move(id), std::string(detail::trim(line.substr(pos))), {}});
      in_text = true;
    } else if (body.starts_with("->")) {
      if (fragments.empty()) throw ParseError("edge before any FRAG record", line_no, indent + 1);
      std::size_t pos = indent + 2;
      pos += detail::leading_ws(line.substr(pos));
      std::size_t id_start = pos;
      while (pos < line.size() && detail::is_id_char(line[pos])) ++pos;
      if (pos == id_start) throw ParseError("expected target fragment id", line_no, id_start + 1);
      SubstitutionEdge e{fragments.back().id, std::string(line.substr(id_start, pos - id_start)),
                         detail::parse_edge_label(line, pos, line_no)};
      edges.push_back({std::move(e), line_no, id_start + 1});
      in_text = false;
    } else if (in_text) {
      auto& text = fragments.back().text;
      if (!text.empty()) text += ' ';
      text += detail::trim(body);
    } else {
      throw ParseError("unexpected text outside a FRAG record", line_no, indent + 1);
    }
  }

  if (fragments.empty()) throw ParseError("no fragments");
  for (const auto& f : fragments)
    if (detail::trim(f.text).empty()) throw ParseError("fragment '" + f.id + "' has empty text", first_seen[f.id], 1);
  for (const auto& pe : edges)
    if (!first_seen.contains(pe.edge.to))
      throw ParseError("edge references unknown fragment id '" + pe.edge.to + "'", pe.line, pe.column);

  std::vector<SubstitutionEdge> plain;
  plain.reserve(edges.size());
  for (auto& pe : edges) plain.push_back(std::move(pe.edge));
  return PlotGraph::build(std::move(fragments), std::move(plain), alphabet);
}

inline PlotGraph parse_plotto(std::string_view source, const SymbolAlphabet& alphabet = SymbolAlphabet::defaults()) {
  std::istringstream in{std::string(source)};
  return parse_plotto(in, alphabet);
}

// ---------------------------------------------------------------------------
// Canonical JSON form
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const PlotGraph& g) {
  nlohmann::json frags = nlohmann::json::array();
  for (const auto& [id, f] : g.fragments()) frags.push_back({{"id", id}, {"text", f.text}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges()) {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& s : e.substitutions) subs.push_back({{"old", s.from_symbol}, {"new", s.to_symbol}});
    edges.push_back({{"from", e.from}, {"to", e.to}, {"subs", std::move(subs)}});
  }
  return {{"fragments", std::move(frags)}, {"edges", std::move(edges)}};
}

inline PlotGraph plot_graph_from_json(const nlohmann::json& j, const SymbolAlphabet& alphabet = SymbolAlphabet::defaults()) {
  try {
    std::vector<PlotFragment> fragments;
    for (const auto& f : j.at("fragments"))
      fragments.push_back({f.at("id").get<std::string>(), f.at("text").get<std::string>(), {}});
    std::vector<SubstitutionEdge> edges;
    if (j.contains("edges")) {
      for (const auto& e : j.at("edges")) {
        SubstitutionEdge edge{e.at("from").get<std::string>(), e.at("to").get<std::string>(), {}};
        if (e.contains("subs"))
          for (const auto& s : e.at("subs"))
            edge.substitutions.push_back({s.at("old").get<std::string>(), s.at("new").get<std::string>()});
        edges.push_back(std::move(edge));
      }
    }
    return PlotGraph::build(std::move(fragments), std::move(edges), alphabet);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed plot corpus JSON: ") + e.what());
  }
}

inline PlotGraph parse_plot_json(std::string_view source, const SymbolAlphabet& alphabet = SymbolAlphabet::defaults()) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(source);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed plot corpus JSON: ") + e.what());
  }
  return plot_graph_from_json(j, alphabet);
}

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

// Dispatches on extension: ".json" is the canonical form, anything else the DSL.
inline PlotGraph load_plot_corpus(const std::string& path, const SymbolAlphabet& alphabet = SymbolAlphabet::defaults()) {
  std::string content = detail::read_file(path);
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) return parse_plot_json(content, alphabet);
  return parse_plotto(std::string_view(content), alphabet);
}

// ---------------------------------------------------------------------------
// Validation report
// ---------------------------------------------------------------------------

struct SubstitutionWarning {
  std::string from;
  std::string to;
  std::string symbol;  // substituted symbol absent from the target fragment

  friend bool operator==(const SubstitutionWarning&, const SubstitutionWarning&) = default;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::size_t source_count = 0;              // fragments with no incoming edge
  std::size_t unreachable_from_sources = 0;  // informational
  std::vector<std::string> terminal;         // fragments with no successor
  std::vector<SubstitutionWarning> warnings;
};

inline ValidationReport validate_graph(const PlotGraph& g) {
  ValidationReport r;
  std::map<std::string_view, std::size_t> in_degree;
  for (const auto& [id, f] : g.fragments()) {
    in_degree[id];
    for (const auto& s : f.symbols) {
      bool present = false;
      for (const auto& w : word_spans(f.text))
        if (std::string_view(f.text).substr(w.offset, w.length) == s) present = true;
      if (!present) r.errors.push_back("fragment " + id + ": symbol " + s + " not in text");
    }
  }
  for (const auto& e : g.edges()) {
    const auto* target = g.find(e.to);
    if (!g.find(e.from) || !target) {
      r.errors.push_back("edge " + e.from + " -> " + e.to + " does not resolve");
      continue;
    }
    ++in_degree[e.to];
    for (const auto& s : e.substitutions)
      if (!std::binary_search(target->symbols.begin(), target->symbols.end(), s.from_symbol))
        r.warnings.push_back({e.from, e.to, s.from_symbol});
  }

  std::set<std::string_view> reached;
  std::vector<std::string_view> stack;
  for (const auto& [id, deg] : in_degree) {
    if (deg != 0) continue;
    ++r.source_count;
    stack.push_back(id);
    reached.insert(id);
  }
  while (!stack.empty()) {
    auto id = stack.back();
    stack.pop_back();
    for (const auto* e : g.successors(id))
      if (reached.insert(e->to).second) stack.push_back(e->to);
  }
  r.unreachable_from_sources = g.size() - reached.size();

  for (const auto& [id, _] : g.fragments())
    if (g.is_terminal(id)) r.terminal.push_back(id);
  return r;
}

// ---------------------------------------------------------------------------
// Trope corpus
// ---------------------------------------------------------------------------

struct Trope {
  std::string name;
  std::string description;
  std::set<std::string> links;
  bool is_plot_trope = false;

  friend bool operator==(const Trope&, const Trope&) = default;
};

struct TropeLoadReport {
  // (source trope, missing target) for every link that named no trope.
  std::vector<std::pair<std::string, std::string>> dropped_links;
  std::size_t self_links = 0;
};

class TropeCorpus {
 public:
  TropeCorpus() = default;

  static TropeCorpus build(std::vector<Trope> tropes) {
    TropeCorpus c;
    for (auto& t : tropes) {
      if (t.name.empty()) throw ParseError("trope with empty name");
      std::string name = t.name;
      if (!c.tropes_.emplace(name, std::move(t)).second) throw ParseError("duplicate trope name '" + name + "'");
    }
    for (auto& [name, t] : c.tropes_) {
      for (auto it = t.links.begin(); it != t.links.end();) {
        if (*it == name) {
          ++c.report_.self_links;
          it = t.links.erase(it);
        } else if (!c.tropes_.contains(*it)) {
          c.report_.dropped_links.emplace_back(name, *it);
          it = t.links.erase(it);
        } else {
          ++it;
        }
      }
    }
    std::map<std::string, std::set<std::string>, std::less<>> adj;
    for (const auto& [name, t] : c.tropes_) {
      adj[name];
      for (const auto& l : t.links) {
        adj[name].insert(l);
        adj[l].insert(name);
      }
    }
    for (auto& [name, ns] : adj) c.link_graph_.emplace(name, std::vector<std::string>(ns.begin(), ns.end()));
    return c;
  }

  const std::map<std::string, Trope, std::less<>>& tropes() const noexcept { return tropes_; }
  std::size_t size() const noexcept { return tropes_.size(); }
  bool contains(std::string_view name) const { return tropes_.find(name) != tropes_.end(); }

  const Trope& trope(std::string_view name) const {
    auto it = tropes_.find(name);
    if (it == tropes_.end()) throw NotFoundError("unknown trope '" + std::string(name) + "'");
    return it->second;
  }

  // Undirected neighbours, sorted by name.
  const std::vector<std::string>& neighbors(std::string_view name) const {
    auto it = link_graph_.find(name);
    if (it == link_graph_.end()) throw NotFoundError("unknown trope '" + std::string(name) + "'");
    return it->second;
  }

  const TropeLoadReport& load_report() const noexcept { return report_; }

  std::string content_hash() const {
    Fnv1a64 h;
    h.update_field("trope-corpus/1");
    for (const auto& [name, t] : tropes_) {
      h.update_field(name);
      h.update_field(t.description);
      h.update_u64(t.is_plot_trope ? 1 : 0);
      h.update_u64(t.links.size());
      for (const auto& l : t.links) h.update_field(l);
    }
    return h.hex();
  }

 private:
  std::map<std::string, Trope, std::less<>> tropes_;
  std::map<std::string, std::vector<std::string>, std::less<>> link_graph_;
  TropeLoadReport report_;
};

inline TropeCorpus trope_corpus_from_json(const nlohmann::json& j) {
  std::vector<Trope> tropes;
  try {
    for (const auto& r : j.at("tropes")) {
      Trope t;
      t.name = r.at("name").get<std::string>();
      t.description = r.at("description").get<std::string>();
      if (r.contains("links"))
        for (const auto& l : r.at("links")) t.links.insert(l.get<std::string>());
      t.is_plot_trope = r.value("plot", false);
      tropes.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed trope record: ") + e.what());
  }
  return TropeCorpus::build(std::move(tropes));
}

inline TropeCorpus load_trope_corpus(std::string_view source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(source);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed trope corpus JSON: ") + e.what());
  }
  return trope_corpus_from_json(j);
}

inline TropeCorpus load_trope_corpus_file(const std::string& path) {
  return load_trope_corpus(detail::read_file(path));
}

// Candidate pool for tilts.
inline std::set<std::string> plot_trope_subset(const TropeCorpus& corpus) {
  std::set<std::string> out;
  for (const auto& [name, t] : corpus.tropes())
    if (t.is_plot_trope) out.insert(name);
  return out;
}

}  // namespace dairector
