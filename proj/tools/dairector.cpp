// dairector: serve | console | story | train | eval
#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dairector/dairector.hpp"
#include "dairector/service.hpp"

namespace {

using namespace dairector;

struct CorpusPaths {
  std::string plot = "data/plotto_excerpt.plotto";
  std::string tropes = "data/tropes.json";
  std::string model;  // empty: train in memory
  std::string names;  // empty: built-in defaults
  std::size_t epochs = TrainingConfig{}.epochs;
  std::uint64_t model_seed = TrainingConfig{}.seed;
};

void add_corpus_options(CLI::App* cmd, CorpusPaths& p, bool with_names = true) {
  cmd->add_option("--plot-corpus", p.plot, "plot fragment corpus (.plotto DSL or .json)")->capture_default_str();
  cmd->add_option("--trope-corpus", p.tropes, "trope corpus JSON")->capture_default_str();
  cmd->add_option("--model", p.model, "trained model file; trains in memory when omitted");
  cmd->add_option("--epochs", p.epochs, "epochs for in-memory training")->capture_default_str();
  cmd->add_option("--model-seed", p.model_seed, "seed for in-memory training")->capture_default_str();
  if (with_names) cmd->add_option("--names", p.names, "character name map JSON");
}

struct Artifacts {
  PlotGraph graph;
  TropeCorpus tropes;
  EmbeddingModel model;
  NameMap names;
};

Artifacts load_artifacts(const CorpusPaths& p) {
  Artifacts a;
  a.graph = load_plot_corpus(p.plot);
  a.tropes = load_trope_corpus_file(p.tropes);
  auto docs = assemble_training_docs(a.graph, a.tropes);
  if (p.model.empty()) {
    TrainingConfig cfg;
    cfg.epochs = p.epochs;
    cfg.seed = p.model_seed;
    std::cerr << "training model on " << docs.size() << " documents (" << cfg.epochs << " epochs)\n";
    a.model = train(docs, cfg);
  } else {
    a.model = load_model(p.model, corpus_fingerprint(docs));
  }
  a.names = p.names.empty() ? NameMap::defaults() : NameMap::load_file(p.names);
  return a;
}

std::string session_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("DAIRECTOR_SESSION_DIR")) return env;
  return "sessions";
}

std::atomic<httplib::Server*> g_server{nullptr};

extern "C" void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

int cmd_serve(const CorpusPaths& paths, const std::string& host, int port, const std::string& sessions) {
  Artifacts a = load_artifacts(paths);
  Director director(a.graph, a.model, a.tropes);
  DirectorService service(director, a.names, SessionStore(session_dir(sessions)));
  httplib::Server server;
  service.mount(server);
  if (!server.bind_to_port(host, port)) {
    std::cerr << "error: cannot bind " << host << ":" << port << '\n';
    return 1;
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on http://" << host << ":" << port << " (sessions in " << session_dir(sessions) << ")\n";
  server.listen_after_bind();
  g_server = nullptr;
  service.persist_all();
  std::cerr << "stopped; sessions persisted\n";
  return 0;
}

int cmd_console(const CorpusPaths& paths, std::optional<std::uint64_t> seed, std::optional<std::string> root,
                std::size_t depth, const std::string& resume, const std::string& sessions, bool persist) {
  Artifacts a = load_artifacts(paths);
  Director director(a.graph, a.model, a.tropes);
  std::optional<SessionStore> store;
  if (persist || !resume.empty()) store.emplace(session_dir(sessions));
  Session s;
  if (!resume.empty()) {
    s = store->load(resume, director);
  } else {
    SessionConfig cfg;
    cfg.seed = seed;
    cfg.root = root;
    cfg.max_depth = depth;
    s = director.create_session(a.names, cfg);
  }
  std::cout << kConsoleHelp;
  int rc = run_console(director, s, std::cin, std::cout, store ? &*store : nullptr);
  if (store) std::cerr << "session " << s.id() << " saved\n";
  return rc;
}

int cmd_story(const CorpusPaths& paths, std::uint64_t seed, std::size_t length, std::size_t count) {
  Artifacts a = load_artifacts(paths);
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng(seed + k);
    if (count > 1) std::cout << (k ? "\n" : "") << "Story " << k + 1 << '\n';
    auto beats = generate_story(a.graph, a.model, a.names, length, rng);
    for (std::size_t i = 0; i < beats.size(); ++i) std::cout << i + 1 << ". " << beats[i].text << '\n';
  }
  return 0;
}

int cmd_train(const std::string& plot, const std::string& tropes, const std::string& out, TrainingConfig cfg) {
  auto graph = load_plot_corpus(plot);
  auto corpus = load_trope_corpus_file(tropes);
  auto docs = assemble_training_docs(graph, corpus);
  auto model = train(docs, cfg);
  save_model(model, out);
  std::cout << "docs " << docs.size() << ", vocab " << model.vocab().size() << ", dim " << cfg.dim << ", epochs "
            << cfg.epochs << '\n';
  std::cout << "loss first " << model.loss_history().front() << ", last " << model.loss_history().back() << '\n';
  std::cout << "corpus hash " << model.corpus_hash() << "\nwrote " << out << '\n';
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& tropes_path, const std::string& pairs_path,
             const std::string& plot_path, std::size_t n, const std::string& report_path, bool subset,
             bool stored_vectors, std::size_t baseline, std::uint64_t seed) {
  auto tropes = load_trope_corpus_file(tropes_path);
  std::optional<std::string> expected;
  if (!plot_path.empty()) {
    auto graph = load_plot_corpus(plot_path);
    expected = corpus_fingerprint(assemble_training_docs(graph, tropes));
  }
  auto model = load_model(model_path, expected);
  auto pairs = load_pairs_file(pairs_path);
  EvalOptions opt;
  opt.scope = subset ? LinkScope::PlotSubset : LinkScope::Full;
  opt.prefer_fragment_vectors = stored_vectors;
  opt.baseline_samples = baseline;
  opt.baseline_seed = seed;
  auto report = evaluate_topn(model, tropes, pairs, n, opt);
  auto j = to_json(report);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw Error("cannot write " + report_path);
    out << j.dump(2) << '\n';
  }
  std::cout << "pairs evaluated " << report.evaluated << '\n';
  std::cout << "top-1 error " << report.top1_error << '\n';
  std::cout << "top-" << n << " error " << report.topn_error << '\n';
  auto print_stats = [](const char* label, const DistanceStats& s) {
    std::cout << label << ": median " << s.median << ", mean " << s.mean << ", stddev " << s.stddev << " (n "
              << s.count << ", unreachable " << s.unreachable << ")\n";
  };
  if (report.tilt_distance) print_stats("tilt distance", *report.tilt_distance);
  if (report.baseline) print_stats("random-pair baseline", *report.baseline);
  for (const auto& note : report.notes) std::cout << "note: " << note << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dAIrector: plot-graph story beats with trope tilts"};
  app.set_version_flag("--version", std::string(dairector::kVersion));
  app.require_subcommand(1);

  CorpusPaths serve_paths;
  std::string host = "127.0.0.1", serve_sessions;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "run the HTTP session service");
  add_corpus_options(serve, serve_paths);
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--sessions", serve_sessions, "session store directory (default $DAIRECTOR_SESSION_DIR or ./sessions)");

  CorpusPaths console_paths;
  std::optional<std::uint64_t> console_seed;
  std::optional<std::string> console_root;
  std::size_t console_depth = dairector::kDefaultTreeDepth;
  std::string resume, console_sessions;
  bool persist = false;
  auto* console = app.add_subcommand("console", "interactive terminal session");
  add_corpus_options(console, console_paths);
  console->add_option("--seed", console_seed);
  console->add_option("--root", console_root, "root fragment id (random when omitted)");
  console->add_option("--max-depth", console_depth)->capture_default_str();
  console->add_option("--resume", resume, "continue a stored session by id");
  console->add_option("--sessions", console_sessions, "session store directory");
  console->add_flag("--persist", persist, "save the session to the store");

  CorpusPaths story_paths;
  std::uint64_t story_seed = 1;
  std::size_t length = dairector::kDefaultStoryLength, count = 1;
  auto* story = app.add_subcommand("story", "print a generated story");
  add_corpus_options(story, story_paths);
  story->add_option("--seed", story_seed)->capture_default_str();
  story->add_option("--length", length)->capture_default_str()->check(CLI::PositiveNumber);
  story->add_option("--count", count, "number of stories (seeds seed, seed+1, ...)")->capture_default_str();

  std::string train_plot = "data/plotto_excerpt.plotto", train_tropes = "data/tropes.json", train_out;
  dairector::TrainingConfig train_cfg;
  auto* trainc = app.add_subcommand("train", "train and save a paragraph-vector model");
  trainc->add_option("--plot-corpus", train_plot)->capture_default_str();
  trainc->add_option("--trope-corpus", train_tropes)->capture_default_str();
  trainc->add_option("--out", train_out)->required();
  trainc->add_option("--seed", train_cfg.seed)->capture_default_str();
  trainc->add_option("--epochs", train_cfg.epochs)->capture_default_str();
  trainc->add_option("--dim", train_cfg.dim)->capture_default_str();
  trainc->add_option("--window", train_cfg.window)->capture_default_str();
  trainc->add_option("--min-count", train_cfg.min_count)->capture_default_str();
  trainc->add_option("--negative", train_cfg.negative_samples)->capture_default_str();

  std::string eval_model, eval_tropes = "data/tropes.json", eval_pairs, eval_plot, eval_report;
  std::size_t eval_n = dairector::kTiltCandidates, baseline = 0;
  std::uint64_t eval_seed = 1;
  bool subset = false, stored_vectors = false;
  auto* evalc = app.add_subcommand("eval", "top-n tilt retrieval error and link-distance statistics");
  evalc->add_option("--model", eval_model)->required();
  evalc->add_option("--tropes", eval_tropes)->capture_default_str();
  evalc->add_option("--pairs", eval_pairs)->required();
  evalc->add_option("--plot-corpus", eval_plot, "check the model's corpus hash against this plot corpus");
  evalc->add_option("--n", eval_n)->capture_default_str()->check(CLI::PositiveNumber);
  evalc->add_option("--report", eval_report, "write the JSON report here");
  evalc->add_flag("--subset", subset, "link distances over plot tropes only");
  evalc->add_flag("--stored-vectors", stored_vectors,
                  "use the model's trained fragment vectors instead of embedding the pair text");
  evalc->add_option("--baseline", baseline, "random trope pairs for the baseline statistics")->capture_default_str();
  evalc->add_option("--seed", eval_seed, "baseline sampling seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) return cmd_serve(serve_paths, host, port, serve_sessions);
    if (*console)
      return cmd_console(console_paths, console_seed, console_root, console_depth, resume, console_sessions, persist);
    if (*story) return cmd_story(story_paths, story_seed, length, count);
    if (*trainc) return cmd_train(train_plot, train_tropes, train_out, train_cfg);
    if (*evalc)
      return cmd_eval(eval_model, eval_tropes, eval_pairs, eval_plot, eval_n, eval_report, subset, stored_vectors, baseline,
                      eval_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
