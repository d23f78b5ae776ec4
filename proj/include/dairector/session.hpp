#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dairector/corpus.hpp"
#include "dairector/embedding.hpp"
#include "dairector/errors.hpp"
#include "dairector/hash.hpp"
#include "dairector/story.hpp"

namespace dairector {

enum class RequestKind { Platform, Tilt };
enum class EntryKind { Platform, Tilt, End };

inline std::string_view to_string(RequestKind k) { return k == RequestKind::Platform ? "platform" : "tilt"; }

inline std::string_view to_string(EntryKind k) {
  switch (k) {
    case EntryKind::Platform: return "platform";
    case EntryKind::Tilt: return "tilt";
    case EntryKind::End: return "end";
  }
  return "?";
}

inline RequestKind parse_request_kind(std::string_view s) {
  if (s == "platform") return RequestKind::Platform;
  if (s == "tilt") return RequestKind::Tilt;
  throw InvalidArgument("unknown request '" + std::string(s) + "', expected platform or tilt");
}

inline EntryKind parse_entry_kind(std::string_view s) {
  if (s == "platform") return EntryKind::Platform;
  if (s == "tilt") return EntryKind::Tilt;
  if (s == "end") return EntryKind::End;
  throw ParseError("unknown transcript entry kind '" + std::string(s) + "'");
}

inline constexpr std::string_view kEndNotice = "The story has ended.";

struct TranscriptEntry {
  std::uint64_t seq = 0;
  EntryKind kind = EntryKind::Platform;
  std::string text;         // rendered platform, chosen trope name, or end notice
  std::string fragment_id;  // platform entries only
  std::optional<TiltResult> tilt;
  std::optional<std::string> prompt;
  bool low_confidence = false;  // prompt had no in-vocabulary words
  std::int64_t timestamp = 0;   // ms since epoch

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

// ---------------------------------------------------------------------------
// JSON forms
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const TiltResult& t) {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : t.candidates) cands.push_back({{"name", c.name}, {"distance", c.distance}});
  nlohmann::json filtered = nlohmann::json::array();
  for (const auto& f : t.filtered_out) filtered.push_back({{"name", f.name}, {"shared", f.shared}});
  return {{"chosen", t.chosen}, {"candidates", std::move(cands)}, {"filtered_out", std::move(filtered)}};
}

inline TiltResult tilt_from_json(const nlohmann::json& j) {
  TiltResult t;
  t.chosen = j.at("chosen").get<std::string>();
  for (const auto& c : j.at("candidates")) t.candidates.push_back({c.at("name"), c.at("distance")});
  for (const auto& f : j.at("filtered_out"))
    t.filtered_out.push_back({f.at("name"), f.at("shared").get<std::vector<std::string>>()});
  return t;
}

inline nlohmann::json to_json(const TranscriptEntry& e) {
  nlohmann::json j = {{"seq", e.seq}, {"kind", to_string(e.kind)}, {"text", e.text}};
  if (e.kind == EntryKind::Platform) j["fragment_id"] = e.fragment_id;
  if (e.tilt) j["tilt"] = to_json(*e.tilt);
  j["prompt"] = e.prompt ? nlohmann::json(*e.prompt) : nlohmann::json(nullptr);
  if (e.low_confidence) j["low_confidence"] = true;
  j["timestamp"] = e.timestamp;
  return j;
}

inline TranscriptEntry entry_from_json(const nlohmann::json& j) {
  TranscriptEntry e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.kind = parse_entry_kind(j.at("kind").get<std::string>());
  e.text = j.at("text").get<std::string>();
  if (j.contains("fragment_id")) e.fragment_id = j.at("fragment_id").get<std::string>();
  if (j.contains("tilt")) e.tilt = tilt_from_json(j.at("tilt"));
  if (j.contains("prompt") && !j.at("prompt").is_null()) e.prompt = j.at("prompt").get<std::string>();
  e.low_confidence = j.value("low_confidence", false);
  e.timestamp = j.at("timestamp").get<std::int64_t>();
  return e;
}

// ---------------------------------------------------------------------------
// Session state
// ---------------------------------------------------------------------------

struct SessionConfig {
  std::optional<std::uint64_t> seed;  // drawn from the OS when absent
  std::optional<std::string> root;    // random non-terminal fragment when absent
  std::size_t max_depth = kDefaultTreeDepth;
};

using Clock = std::function<std::int64_t()>;

inline std::int64_t system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

// Deterministic clock for replay tests: start, start + step, ...
inline Clock logical_clock(std::int64_t start = 0, std::int64_t step = 1) {
  auto t = std::make_shared<std::int64_t>(start - step);
  return [t, step] { return *t += step; };
}

inline std::string new_session_id() {
  static thread_local std::random_device rd;
  std::uint64_t hi = (std::uint64_t(rd()) << 32) ^ rd();
  std::uint64_t lo = (std::uint64_t(rd()) << 32) ^ rd();
  return Fnv1a64::to_hex(hi) + Fnv1a64::to_hex(lo);
}

inline bool is_valid_session_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id)
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  return true;
}

class Session {
 public:
  const std::string& id() const noexcept { return id_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::optional<std::string>& requested_root() const noexcept { return requested_root_; }
  std::size_t max_depth() const noexcept { return max_depth_; }
  const PlotTreeNode& tree() const noexcept { return tree_; }
  const std::vector<std::size_t>& path() const noexcept { return path_; }
  const PlotTreeNode& current() const { return *node_at(tree_, path_); }
  bool ended() const noexcept { return ended_; }
  const std::vector<TranscriptEntry>& transcript() const noexcept { return transcript_; }
  const NameMap& names() const noexcept { return names_; }
  std::int64_t created_at() const noexcept { return created_at_; }
  std::int64_t updated_at() const noexcept { return updated_at_; }
  std::uint64_t last_seq() const noexcept { return transcript_.empty() ? 0 : transcript_.back().seq; }

  std::string rng_state() const {
    std::ostringstream ss;
    ss << rng_;
    return ss.str();
  }

  // Events not yet written to the store.
  const std::vector<nlohmann::json>& pending_events() const noexcept { return pending_events_; }
  void clear_pending_events() { pending_events_.clear(); }

 private:
  friend class Director;
  friend class SessionStore;

  std::string id_;
  std::uint64_t seed_ = 0;
  std::optional<std::string> requested_root_;
  std::size_t max_depth_ = kDefaultTreeDepth;
  PlotTreeNode tree_;
  std::vector<std::size_t> path_;  // child indices from the root to the current platform
  bool ended_ = false;
  std::vector<TranscriptEntry> transcript_;
  Rng rng_;
  NameMap names_;
  std::int64_t created_at_ = 0;
  std::int64_t updated_at_ = 0;
  std::string corpus_hash_;
  std::string model_hash_;
  std::vector<nlohmann::json> pending_events_;
};

inline nlohmann::json transcript_json(const Session& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : s.transcript()) arr.push_back(to_json(e));
  return arr;
}

// ---------------------------------------------------------------------------
// The interaction loop over shared, read-only corpus and model
// ---------------------------------------------------------------------------

class Director {
 public:
  Director(const PlotGraph& graph, const EmbeddingModel& model, const TropeCorpus& tropes,
           Clock clock = system_clock_ms)
      : graph_(graph),
        model_(model),
        tropes_(tropes),
        clock_(std::move(clock)),
        corpus_hash_(combined_corpus_hash(graph, tropes)),
        model_hash_(model.fingerprint()) {}

  static std::string combined_corpus_hash(const PlotGraph& graph, const TropeCorpus& tropes) {
    Fnv1a64 h;
    h.update_field(graph.content_hash());
    h.update_field(tropes.content_hash());
    return h.hex();
  }

  const PlotGraph& graph() const noexcept { return graph_; }
  const EmbeddingModel& model() const noexcept { return model_; }
  const TropeCorpus& tropes() const noexcept { return tropes_; }
  const std::string& corpus_hash() const noexcept { return corpus_hash_; }
  const std::string& model_hash() const noexcept { return model_hash_; }

  Session create_session(const NameMap& names, const SessionConfig& config) const {
    Session s;
    s.id_ = new_session_id();
    s.seed_ = config.seed ? *config.seed : std::random_device{}();
    s.requested_root_ = config.root;
    s.max_depth_ = config.max_depth;
    s.names_ = names;
    s.rng_.seed(s.seed_);
    s.tree_ = generate_plot_tree(graph_, config.root, config.max_depth, s.rng_);
    s.corpus_hash_ = corpus_hash_;
    s.model_hash_ = model_hash_;
    s.created_at_ = clock_();
    s.updated_at_ = s.created_at_;

    nlohmann::json cfg = {{"seed", s.seed_}, {"max_depth", s.max_depth_}, {"names", names.to_json()}};
    cfg["root"] = config.root ? nlohmann::json(*config.root) : nlohmann::json(nullptr);
    s.pending_events_.push_back({{"type", "create"}, {"config", cfg}, {"timestamp", s.created_at_}});

    append(s, platform_entry(s, s.tree_, std::nullopt, false));
    return s;
  }

  // One actor request. An empty prompt counts as no prompt.
  const TranscriptEntry& handle_request(Session& s, RequestKind request, std::optional<std::string> prompt) const {
    if (prompt && prompt->empty()) prompt.reset();
    if (request == RequestKind::Platform && s.ended_) throw StateError("the story has ended; only tilts remain");

    const PlotTreeNode& current = s.current();
    InferredVector context = context_vector(current, prompt);
    s.updated_at_ = clock_();

    nlohmann::json ev = {{"type", "request"}, {"request", to_string(request)}, {"timestamp", s.updated_at_}};
    ev["prompt"] = prompt ? nlohmann::json(*prompt) : nlohmann::json(nullptr);
    s.pending_events_.push_back(std::move(ev));

    if (request == RequestKind::Platform) {
      auto idx = next_platform_index(model_, current, std::span<const float>(context.values));
      if (!idx) {
        s.ended_ = true;
        TranscriptEntry e;
        e.kind = EntryKind::End;
        e.text = std::string(kEndNotice);
        e.prompt = prompt;
        e.low_confidence = context.low_confidence;
        return append(s, std::move(e));
      }
      s.path_.push_back(*idx);
      return append(s, platform_entry(s, current.children[*idx], prompt, context.low_confidence));
    }

    std::string platform_text = render(current, s.names_);
    TranscriptEntry e;
    e.kind = EntryKind::Tilt;
    e.tilt = select_tilt(model_, tropes_, platform_text, std::span<const float>(context.values), s.rng_);
    e.text = e.tilt->chosen;
    e.prompt = prompt;
    e.low_confidence = context.low_confidence;
    return append(s, std::move(e));
  }

  std::string render(const PlotTreeNode& node, const NameMap& names) const {
    return render_fragment(graph_.fragment(node.fragment_id), node.accumulated_subs, names).text;
  }

  // Rebuilds the tree for a persisted session (roots are stored resolved).
  PlotTreeNode rebuild_tree(const std::string& root_id, std::size_t max_depth) const {
    Rng unused(0);
    return generate_plot_tree(graph_, root_id, max_depth, unused);
  }

  std::int64_t now() const { return clock_(); }

 private:
  InferredVector context_vector(const PlotTreeNode& current, const std::optional<std::string>& prompt) const {
    if (prompt) return embed_prompt(model_, *prompt);
    InferredVector v;
    auto self = model_.find_doc_vector(fragment_doc_id(current.fragment_id));
    if (!self) throw NotFoundError("model has no vector for fragment '" + current.fragment_id + "'");
    v.values.assign(self->begin(), self->end());
    return v;
  }

  TranscriptEntry platform_entry(const Session& s, const PlotTreeNode& node, const std::optional<std::string>& prompt,
                                 bool low_confidence) const {
    TranscriptEntry e;
    e.kind = EntryKind::Platform;
    e.fragment_id = node.fragment_id;
    e.text = render(node, s.names_);
    e.prompt = prompt;
    e.low_confidence = low_confidence;
    return e;
  }

  const TranscriptEntry& append(Session& s, TranscriptEntry e) const {
    e.seq = s.last_seq() + 1;
    e.timestamp = s.updated_at_;
    s.transcript_.push_back(std::move(e));
    return s.transcript_.back();
  }

  const PlotGraph& graph_;
  const EmbeddingModel& model_;
  const TropeCorpus& tropes_;
  Clock clock_;
  std::string corpus_hash_;
  std::string model_hash_;
};

// Re-executes a recorded event list ("create" then "request" events) on a
// fresh session.
inline Session replay_events(const Director& director, std::span<const nlohmann::json> events) {
  if (events.empty() || events.front().at("type") != "create") throw InvalidArgument("event log must start with create");
  const auto& cfg = events.front().at("config");
  SessionConfig sc;
  sc.seed = cfg.at("seed").get<std::uint64_t>();
  sc.max_depth = cfg.at("max_depth").get<std::size_t>();
  if (!cfg.at("root").is_null()) sc.root = cfg.at("root").get<std::string>();
  Session s = director.create_session(NameMap::from_json(cfg.at("names")), sc);
  for (std::size_t i = 1; i < events.size(); ++i) {
    const auto& ev = events[i];
    std::optional<std::string> prompt;
    if (!ev.at("prompt").is_null()) prompt = ev.at("prompt").get<std::string>();
    director.handle_request(s, parse_request_kind(ev.at("request").get<std::string>()), prompt);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Store: <root>/<id>/events.jsonl (append-only) and <root>/<id>/snapshot.json
// ---------------------------------------------------------------------------

class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const noexcept { return root_; }

  void save(Session& s) const {
    namespace fs = std::filesystem;
    fs::path dir = root_ / s.id_;
    fs::create_directories(dir);
    {
      std::ofstream ev(dir / "events.jsonl", std::ios::app);
      if (!ev) throw Error("cannot append to " + (dir / "events.jsonl").string());
      for (const auto& e : s.pending_events_) ev << e.dump() << '\n';
      if (!ev) throw Error("failed writing " + (dir / "events.jsonl").string());
    }
    s.pending_events_.clear();
    fs::path tmp = dir / "snapshot.json.tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw Error("cannot write " + tmp.string());
      out << snapshot(s).dump(2) << '\n';
      if (!out) throw Error("failed writing " + tmp.string());
    }
    fs::rename(tmp, dir / "snapshot.json");
  }

  bool exists(std::string_view id) const {
    return is_valid_session_id(id) && std::filesystem::exists(root_ / std::string(id) / "snapshot.json");
  }

  Session load(std::string_view id, const Director& director) const {
    if (!exists(id)) throw NotFoundError("unknown session '" + std::string(id) + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(detail::read_file((root_ / std::string(id) / "snapshot.json").string()));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("corrupt session snapshot: " + std::string(e.what()));
    }
    if (!j.is_object() || j.value("format", "") != "dairector.session/1")
      throw ParseError("session snapshot has an unknown format");
    if (j.at("corpus_hash") != director.corpus_hash())
      throw HashMismatchError("session was recorded against corpus " + j.at("corpus_hash").get<std::string>() +
                              ", current corpus is " + director.corpus_hash());
    if (j.at("model_hash") != director.model_hash())
      throw HashMismatchError("session was recorded against model " + j.at("model_hash").get<std::string>() +
                              ", current model is " + director.model_hash());
    Session s;
    s.id_ = j.at("id").get<std::string>();
    s.seed_ = j.at("seed").get<std::uint64_t>();
    if (!j.at("requested_root").is_null()) s.requested_root_ = j.at("requested_root").get<std::string>();
    s.max_depth_ = j.at("max_depth").get<std::size_t>();
    s.names_ = NameMap::from_json(j.at("names"));
    s.tree_ = director.rebuild_tree(j.at("root").get<std::string>(), s.max_depth_);
    s.path_ = j.at("path").get<std::vector<std::size_t>>();
    if (!node_at(s.tree_, s.path_)) throw ParseError("session path does not lie in the plot tree");
    s.ended_ = j.at("ended").get<bool>();
    std::istringstream rs(j.at("rng_state").get<std::string>());
    rs >> s.rng_;
    if (!rs) throw ParseError("corrupt rng state in session snapshot");
    for (const auto& e : j.at("transcript")) s.transcript_.push_back(entry_from_json(e));
    s.created_at_ = j.at("created").get<std::int64_t>();
    s.updated_at_ = j.at("updated").get<std::int64_t>();
    s.corpus_hash_ = j.at("corpus_hash").get<std::string>();
    s.model_hash_ = j.at("model_hash").get<std::string>();
    return s;
  }

  // The recorded event log, one JSON object per line.
  std::vector<nlohmann::json> events(std::string_view id) const {
    if (!exists(id)) throw NotFoundError("unknown session '" + std::string(id) + "'");
    std::ifstream in(root_ / std::string(id) / "events.jsonl");
    std::vector<nlohmann::json> out;
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) out.push_back(nlohmann::json::parse(line));
    return out;
  }

  static nlohmann::json snapshot(const Session& s) {
    nlohmann::json j = {
        {"format", "dairector.session/1"},
        {"id", s.id_},
        {"seed", s.seed_},
        {"root", s.tree_.fragment_id},
        {"max_depth", s.max_depth_},
        {"names", s.names_.to_json()},
        {"path", s.path_},
        {"ended", s.ended_},
        {"rng_state", s.rng_state()},
        {"created", s.created_at_},
        {"updated", s.updated_at_},
        {"corpus_hash", s.corpus_hash_},
        {"model_hash", s.model_hash_},
        {"transcript", transcript_json(s)},
    };
    j["requested_root"] = s.requested_root_ ? nlohmann::json(*s.requested_root_) : nlohmann::json(nullptr);
    return j;
  }

 private:
  std::filesystem::path root_;
};

}  // namespace dairector
