// Parses the three-fragment corpus, prints its plot tree from 746 and the
// rendered text of every node with B played by Lana.
#include <iostream>

#include "dairector/dairector.hpp"

using namespace dairector;

static void print(const PlotGraph& g, const PlotTreeNode& n, const NameMap& names) {
  std::cout << std::string(n.depth * 2, ' ') << n.fragment_id << ": "
            << render_fragment(g.fragment(n.fragment_id), n.accumulated_subs, names).text << '\n';
  for (const auto& c : n.children) print(g, c, names);
}

int main(int argc, char** argv) {
  std::string path = argc > 1 ? argv[1] : DAIRECTOR_DATA_DIR "/three_node.plotto";
  auto graph = load_plot_corpus(path);
  NameMap names({{"A", "Albert"}, {"B", "Lana"}});

  for (const auto& e : graph.edges()) {
    std::cout << e.from << " -> " << e.to;
    for (const auto& s : e.substitutions) std::cout << "  ch " << s.from_symbol << " to " << s.to_symbol;
    std::cout << '\n';
  }
  std::cout << '\n';
  Rng rng(1);
  print(graph, generate_plot_tree(graph, "746", 3, rng), names);

  auto report = validate_graph(graph);
  std::cout << "\nterminal:";
  for (const auto& t : report.terminal) std::cout << ' ' << t;
  std::cout << "\nwarnings: " << report.warnings.size() << '\n';
}
