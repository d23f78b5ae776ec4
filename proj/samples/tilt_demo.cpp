// Trains a small model on the bundled corpora and asks for a tilt on one
// platform, printing the candidate list and what the redundancy filter removed.
#include <iostream>

#include "dairector/dairector.hpp"

using namespace dairector;

int main(int argc, char** argv) {
  std::string fragment_id = argc > 1 ? argv[1] : "401";
  auto graph = load_plot_corpus(DAIRECTOR_DATA_DIR "/plotto_excerpt.plotto");
  auto tropes = load_trope_corpus_file(DAIRECTOR_DATA_DIR "/tropes.json");
  TrainingConfig cfg;
  cfg.dim = 100;
  cfg.epochs = 20;
  auto model = train(assemble_training_docs(graph, tropes), cfg);

  NameMap names({{"A", "Albert"}, {"B", "Lana"}});
  std::string platform = render_fragment(graph.fragment(fragment_id), {}, names).text;
  std::cout << "platform: " << platform << "\n\n";

  Rng rng(7);
  auto tilt = select_tilt(model, tropes, platform, model.doc_vector(fragment_doc_id(fragment_id)), rng);
  for (std::size_t i = 0; i < tilt.candidates.size(); ++i)
    std::cout << i + 1 << ". " << tilt.candidates[i].name << "  " << tilt.candidates[i].distance << '\n';
  for (const auto& f : tilt.filtered_out) {
    std::cout << "filtered: " << f.name << " (";
    for (std::size_t i = 0; i < f.shared.size(); ++i) std::cout << (i ? ", " : "") << f.shared[i];
    std::cout << ")\n";
  }
  std::cout << "\ntilt: " << tilt.chosen << '\n';
}
