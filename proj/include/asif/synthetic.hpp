#pragma once

// Synthetic paired embeddings with a known shared latent structure: class
// centers on the unit sphere of a small latent space, items scattered around
// them, and each modality an independent random isometry of the latent
// space plus Gaussian noise.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "asif/evalsweep.hpp"

namespace asif {

struct SyntheticConfig {
  std::size_t latent_dim = 16;
  std::size_t embed_dim = 64;
  std::size_t num_classes = 10;
  double noise_sigma = 0.05;
  /// Expected norm of the latent perturbation around a class center.
  double class_spread = 1.0;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  EmbeddingMatrix anchors_a;
  EmbeddingMatrix anchors_b;
  std::vector<ClassId> anchor_labels;
  LabeledQueries queries;
  /// One pre-embedded prompt per class: the class center mapped into mode b.
  PromptSet prompts;
};

/// Deterministic for a given config: the same seed yields the same bytes on
/// every platform. Anchors and queries come from separate streams, so the
/// first m anchors do not depend on the total anchor count.
SyntheticData generate_synthetic(const SyntheticConfig& cfg, std::size_t n_anchors,
                                 std::size_t n_queries);

/// Small portable generator: splitmix64 stream, Box-Muller normals.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double normal();
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Writes anchors_a.bin, anchors_b.bin, anchors_meta.jsonl, queries.bin,
/// labels.jsonl, prompts.json and per-class prompt vector files to `dir`.
void write_synthetic_fixture(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace asif
