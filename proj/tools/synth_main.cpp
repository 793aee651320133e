// Writes a synthetic paired-embedding fixture for trying out the CLI.

#include <iostream>

#include "CLI11.hpp"
#include "asif/error.hpp"
#include "asif/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic anchor/query fixture", "asif-synth"};
  asif::SyntheticConfig cfg;
  std::size_t anchors = 1000, queries = 500;
  std::string dir;
  app.add_option("--out-dir", dir, "output directory")->required();
  app.add_option("--anchors", anchors, "anchor pairs");
  app.add_option("--queries", queries, "labeled queries");
  app.add_option("--seed", cfg.seed, "generator seed");
  app.add_option("--classes", cfg.num_classes, "number of classes");
  app.add_option("--dim", cfg.embed_dim, "embedding dimension");
  app.add_option("--noise", cfg.noise_sigma, "per-coordinate noise sigma");
  app.add_option("--spread", cfg.class_spread, "latent scatter around class centers");
  CLI11_PARSE(app, argc, argv);
  try {
    asif::write_synthetic_fixture(asif::generate_synthetic(cfg, anchors, queries), dir);
  } catch (const asif::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  std::cout << "wrote " << anchors << " anchors and " << queries << " queries to " << dir << '\n';
  return 0;
}
