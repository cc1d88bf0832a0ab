// Writes a synthetic corpus with a planted correct-usage pattern. Records carry
// the noisy annotator label (or the clean truth with --clean); --foreign
// appends graphs made only of labels the planted corpora never use.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "apiguard/synthetic.hpp"

using namespace apiguard;

int main(int argc, char** argv) {
  CLI::App app{"Generate a planted-pattern corpus."};
  PlantedConfig cfg;
  std::uint64_t seed = 1;
  std::string out, prefix = "u";
  std::size_t foreign = 0;
  bool clean = false, unlabeled = false;
  app.add_option("-o,--out", out, "Output corpus")->required();
  app.add_option("--size", cfg.size, "Planted graphs")->capture_default_str();
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("--misuse-rate", cfg.misuse_rate)->capture_default_str();
  app.add_option("--noise", cfg.label_noise, "Annotator label flip rate")->capture_default_str();
  app.add_option("--prefix", prefix, "Example id prefix")->capture_default_str();
  app.add_option("--foreign", foreign, "Extra graphs with unseen labels")->capture_default_str();
  app.add_flag("--clean", clean, "Write ground truth instead of annotator labels");
  app.add_flag("--unlabeled", unlabeled, "Write null labels");
  CLI11_PARSE(app, argc, argv);

  try {
    PlantedCorpus p = generate_planted(cfg, seed, prefix);
    for (auto& ex : p.corpus.examples)
      if (!unlabeled) ex.label = clean ? p.truth.at(ex.id) : p.annotator.at(ex.id);
    if (foreign > 0)
      for (auto& ex : generate_foreign(foreign, derive_seed(seed, 99), prefix + "ood").examples)
        p.corpus.examples.push_back(std::move(ex));
    save_corpus(p.corpus, out);
    std::cout << Json{{"written", p.corpus.size()}, {"path", out}}.dump() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
