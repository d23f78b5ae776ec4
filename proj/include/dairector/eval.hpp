#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <istream>
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
#include "dairector/story.hpp"

namespace dairector {

// ---------------------------------------------------------------------------
// Link distances
// ---------------------------------------------------------------------------

enum class LinkScope {
  Full,        // every loaded trope
  PlotSubset,  // only plot tropes, and only links between them
};

// Shortest undirected hop count, nullopt when unreachable.
inline std::optional<std::size_t> trope_link_distance(const TropeCorpus& corpus, std::string_view a, std::string_view b,
                                                      LinkScope scope = LinkScope::Full) {
  const Trope& ta = corpus.trope(a);
  const Trope& tb = corpus.trope(b);
  if (scope == LinkScope::PlotSubset && !(ta.is_plot_trope && tb.is_plot_trope))
    throw InvalidArgument("link distance restricted to plot tropes, but an endpoint is not one");
  if (a == b) return 0;
  std::map<std::string_view, std::size_t> dist{{a, 0}};
  std::deque<std::string_view> queue{a};
  while (!queue.empty()) {
    auto u = queue.front();
    queue.pop_front();
    const std::size_t du = dist[u];
    for (const auto& v : corpus.neighbors(u)) {
      if (scope == LinkScope::PlotSubset && !corpus.trope(v).is_plot_trope) continue;
      if (!dist.emplace(v, du + 1).second) continue;
      if (v == b) return du + 1;
      queue.push_back(v);
    }
  }
  return std::nullopt;
}

struct DistanceStats {
  std::size_t count = 0;        // pairs with a defined distance
  std::size_t unreachable = 0;  // excluded from the moments
  std::size_t excluded_exact = 0;
  double median = 0;
  double mean = 0;
  double stddev = 0;  // population
};

// Median/mean/population stddev of a non-empty sample.
inline DistanceStats summarize(std::vector<std::size_t> values) {
  if (values.empty()) throw InvalidArgument("no distances to summarize");
  std::sort(values.begin(), values.end());
  DistanceStats s;
  s.count = values.size();
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 ? double(values[mid]) : (double(values[mid - 1]) + double(values[mid])) / 2.0;
  double sum = 0;
  for (auto v : values) sum += double(v);
  s.mean = sum / double(values.size());
  double sq = 0;
  for (auto v : values) sq += (double(v) - s.mean) * (double(v) - s.mean);
  s.stddev = std::sqrt(sq / double(values.size()));
  return s;
}

// pairs are (predicted, gold).
inline DistanceStats distance_stats(const TropeCorpus& corpus, std::span<const std::pair<std::string, std::string>> pairs,
                                    bool exclude_exact, LinkScope scope = LinkScope::Full) {
  std::vector<std::size_t> defined;
  std::size_t unreachable = 0, excluded = 0;
  for (const auto& [pred, gold] : pairs) {
    if (exclude_exact && pred == gold) {
      ++excluded;
      continue;
    }
    if (auto d = trope_link_distance(corpus, pred, gold, scope))
      defined.push_back(*d);
    else
      ++unreachable;
  }
  if (excluded == pairs.size()) throw InvalidArgument("all pairs excluded");
  if (defined.empty()) {
    DistanceStats s;
    s.unreachable = unreachable;
    s.excluded_exact = excluded;
    s.median = s.mean = s.stddev = std::nan("");
    return s;
  }
  DistanceStats s = summarize(std::move(defined));
  s.unreachable = unreachable;
  s.excluded_exact = excluded;
  return s;
}

// Same statistics over uniformly drawn pairs of distinct tropes.
inline DistanceStats baseline_distance_stats(const TropeCorpus& corpus, std::size_t samples, Rng& rng,
                                             LinkScope scope = LinkScope::Full) {
  std::vector<std::string> names;
  for (const auto& [name, t] : corpus.tropes())
    if (scope == LinkScope::Full || t.is_plot_trope) names.push_back(name);
  if (names.size() < 2) throw InvalidArgument("baseline needs at least two tropes");
  std::uniform_int_distribution<std::size_t> pick(0, names.size() - 1);
  std::vector<std::pair<std::string, std::string>> pairs;
  while (pairs.size() < samples) {
    std::size_t i = pick(rng), j = pick(rng);
    if (i != j) pairs.emplace_back(names[i], names[j]);
  }
  return distance_stats(corpus, pairs, false, scope);
}

// ---------------------------------------------------------------------------
// Labelled pairs
// ---------------------------------------------------------------------------

struct LabelledPair {
  std::string fragment_id;
  std::string fragment_text;
  std::string gold_trope;

  friend bool operator==(const LabelledPair&, const LabelledPair&) = default;
};

// JSON-lines: {"fragment_id": str, "fragment_text": str, "gold_trope": str}
inline std::vector<LabelledPair> load_pairs(std::istream& in) {
  std::vector<LabelledPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.at("fragment_id").get<std::string>(), j.at("fragment_text").get<std::string>(),
                     j.at("gold_trope").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed labelled pair: ") + e.what(), line_no, 1);
    }
  }
  return out;
}

inline std::vector<LabelledPair> load_pairs_file(const std::string& path) {
  std::istringstream in(detail::read_file(path));
  return load_pairs(in);
}

// ---------------------------------------------------------------------------
// Top-n retrieval error
// ---------------------------------------------------------------------------

enum class MissReason { None, NotInTopN, Filtered, NotPlotTrope };

inline std::string_view to_string(MissReason r) {
  switch (r) {
    case MissReason::None: return "";
    case MissReason::NotInTopN: return "not_in_top_n";
    case MissReason::Filtered: return "filtered";
    case MissReason::NotPlotTrope: return "not_plot_trope";
  }
  return "?";
}

struct PairRecord {
  std::string fragment_id;
  std::string gold;
  std::vector<TiltCandidate> predicted;
  std::optional<std::size_t> hit_rank;  // 1-based
  MissReason miss_reason = MissReason::None;
  std::optional<std::size_t> link_distance;  // misses: closest predicted trope to gold
  bool low_confidence = false;
};

struct EvalReport {
  std::size_t n = kTiltCandidates;
  std::size_t evaluated = 0;
  double top1_error = 0;
  double topn_error = 0;
  std::vector<PairRecord> records;
  std::vector<std::string> notes;  // rejected pairs
  std::optional<DistanceStats> tilt_distance;
  std::optional<DistanceStats> baseline;
};

struct EvalOptions {
  // When set, use the trained vector of a pair's fragment if the model has
  // one instead of embedding the pair's fragment text.
  bool prefer_fragment_vectors = false;
  LinkScope scope = LinkScope::Full;
  std::size_t baseline_samples = 0;  // 0 disables the random-pair baseline
  std::uint64_t baseline_seed = 1;
};

template <DocumentEmbedding E>
EvalReport evaluate_topn(const E& model, const TropeCorpus& corpus, std::span<const LabelledPair> pairs,
                         std::size_t n = kTiltCandidates, const EvalOptions& options = {}) {
  if (pairs.empty()) throw InvalidArgument("no labelled pairs");
  if (n == 0) throw InvalidArgument("n must be >= 1");
  EvalReport report;
  report.n = n;
  std::size_t top1_miss = 0, topn_miss = 0;
  std::vector<std::pair<std::string, std::string>> tilt_pairs;

  for (const auto& pair : pairs) {
    if (!corpus.contains(pair.gold_trope)) {
      report.notes.push_back("pair " + pair.fragment_id + " rejected: gold trope '" + pair.gold_trope +
                             "' is not in the corpus");
      continue;
    }
    PairRecord rec;
    rec.fragment_id = pair.fragment_id;
    rec.gold = pair.gold_trope;

    InferredVector query;
    std::optional<std::span<const float>> stored;
    if (options.prefer_fragment_vectors) stored = model.find_doc_vector(fragment_doc_id(pair.fragment_id));
    if (stored) {
      query.values.assign(stored->begin(), stored->end());
    } else {
      query = embed_prompt(model, pair.fragment_text);
      rec.low_confidence = query.low_confidence;
    }

    auto tc = tilt_candidates(model, corpus, pair.fragment_text, std::span<const float>(query.values), n);
    rec.predicted = std::move(tc.candidates);
    for (std::size_t i = 0; i < rec.predicted.size(); ++i)
      if (rec.predicted[i].name == pair.gold_trope) rec.hit_rank = i + 1;

    if (!rec.hit_rank) {
      if (!corpus.trope(pair.gold_trope).is_plot_trope)
        rec.miss_reason = MissReason::NotPlotTrope;
      else if (std::any_of(tc.filtered_out.begin(), tc.filtered_out.end(),
                           [&](const FilteredTrope& f) { return f.name == pair.gold_trope; }))
        rec.miss_reason = MissReason::Filtered;
      else
        rec.miss_reason = MissReason::NotInTopN;
      const bool scoped_ok = options.scope == LinkScope::Full || corpus.trope(pair.gold_trope).is_plot_trope;
      if (scoped_ok)
        for (const auto& p : rec.predicted)
          if (auto d = trope_link_distance(corpus, p.name, pair.gold_trope, options.scope))
            rec.link_distance = rec.link_distance ? std::min(*rec.link_distance, *d) : *d;
    }
    if (options.scope == LinkScope::Full || corpus.trope(pair.gold_trope).is_plot_trope)
      for (const auto& p : rec.predicted) tilt_pairs.emplace_back(p.name, pair.gold_trope);

    if (rec.hit_rank != 1) ++top1_miss;
    if (!rec.hit_rank) ++topn_miss;
    report.records.push_back(std::move(rec));
  }

  report.evaluated = report.records.size();
  if (report.evaluated == 0) throw InvalidArgument("every labelled pair was rejected");
  report.top1_error = double(top1_miss) / double(report.evaluated);
  report.topn_error = double(topn_miss) / double(report.evaluated);

  bool any_inexact = std::any_of(tilt_pairs.begin(), tilt_pairs.end(), [](const auto& p) { return p.first != p.second; });
  if (any_inexact) report.tilt_distance = distance_stats(corpus, tilt_pairs, true, options.scope);
  if (options.baseline_samples > 0) {
    Rng rng(options.baseline_seed);
    report.baseline = baseline_distance_stats(corpus, options.baseline_samples, rng, options.scope);
  }
  return report;
}

inline nlohmann::json to_json(const DistanceStats& s) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  return {{"count", s.count},       {"unreachable", s.unreachable}, {"excluded_exact", s.excluded_exact},
          {"median", num(s.median)}, {"mean", num(s.mean)},         {"stddev", num(s.stddev)}};
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& rec : r.records) {
    nlohmann::json pred = nlohmann::json::array();
    for (const auto& p : rec.predicted) pred.push_back({{"name", p.name}, {"distance", p.distance}});
    nlohmann::json j = {{"fragment_id", rec.fragment_id}, {"gold", rec.gold}, {"predicted", std::move(pred)}};
    j["hit_rank"] = rec.hit_rank ? nlohmann::json(*rec.hit_rank) : nlohmann::json("MISS");
    if (!rec.hit_rank) j["miss_reason"] = to_string(rec.miss_reason);
    j["link_distance"] = rec.link_distance ? nlohmann::json(*rec.link_distance) : nlohmann::json(nullptr);
    if (rec.low_confidence) j["low_confidence"] = true;
    records.push_back(std::move(j));
  }
  nlohmann::json j = {{"schema", "dairector.eval/1"},
                      {"n", r.n},
                      {"evaluated", r.evaluated},
                      {"top1_error", r.top1_error},
                      {"topn_error", r.topn_error},
                      {"records", std::move(records)},
                      {"notes", r.notes}};
  j["tilt_distance"] = r.tilt_distance ? to_json(*r.tilt_distance) : nlohmann::json(nullptr);
  j["baseline"] = r.baseline ? to_json(*r.baseline) : nlohmann::json(nullptr);
  return j;
}

}  // namespace dairector
