#include "asif/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "asif/embedding_format.hpp"
#include "asif/error.hpp"
#include "json.hpp"

namespace asif {

std::uint64_t SplitMix::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double SplitMix::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double SplitMix::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

using Vec = std::vector<double>;

void normalize(Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  s = std::sqrt(s);
  for (double& x : v) x /= s;
}

// embed_dim x latent_dim matrix with orthonormal columns (Gram-Schmidt on a
// Gaussian matrix), stored column-major as latent_dim columns.
std::vector<Vec> random_isometry(SplitMix& rng, std::size_t embed_dim, std::size_t latent_dim) {
  std::vector<Vec> cols;
  while (cols.size() < latent_dim) {
    Vec c(embed_dim);
    for (double& x : c) x = rng.normal();
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& prev : cols) {
        double d = 0.0;
        for (std::size_t i = 0; i < embed_dim; ++i) d += c[i] * prev[i];
        for (std::size_t i = 0; i < embed_dim; ++i) c[i] -= d * prev[i];
      }
    }
    normalize(c);
    cols.push_back(std::move(c));
  }
  return cols;
}

Vec map_latent(const std::vector<Vec>& q, const Vec& z) {
  Vec out(q.front().size(), 0.0);
  for (std::size_t l = 0; l < z.size(); ++l) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += q[l][i] * z[l];
  }
  return out;
}

struct World {
  std::vector<Vec> centers;
  std::vector<Vec> q_a;
  std::vector<Vec> q_b;
};

Vec sample_latent(SplitMix& rng, const Vec& center, double spread) {
  Vec z = center;
  const double s = spread / std::sqrt(static_cast<double>(center.size()));
  for (double& x : z) x += s * rng.normal();
  normalize(z);
  return z;
}

void push_noisy(EmbeddingMatrix& m, SplitMix& rng, const Vec& clean, double sigma) {
  std::vector<float> row(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    row[i] = static_cast<float>(clean[i] + sigma * rng.normal());
  }
  m.append_row(row);
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& cfg, std::size_t n_anchors,
                                 std::size_t n_queries) {
  if (cfg.latent_dim < 1 || cfg.embed_dim < cfg.latent_dim || cfg.num_classes < 1) {
    throw Error(ErrorKind::InvalidArgument, "bad synthetic dimensions");
  }
  SplitMix world_rng(cfg.seed * 3 + 1);
  World w;
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    Vec v(cfg.latent_dim);
    for (double& x : v) x = world_rng.normal();
    normalize(v);
    w.centers.push_back(std::move(v));
  }
  w.q_a = random_isometry(world_rng, cfg.embed_dim, cfg.latent_dim);
  w.q_b = random_isometry(world_rng, cfg.embed_dim, cfg.latent_dim);

  SyntheticData out{EmbeddingMatrix(cfg.embed_dim), EmbeddingMatrix(cfg.embed_dim), {},
                    {EmbeddingMatrix(cfg.embed_dim), {}}, {}};

  SplitMix anchor_rng(cfg.seed * 3 + 2);
  for (std::size_t i = 0; i < n_anchors; ++i) {
    const std::size_t c = anchor_rng.below(cfg.num_classes);
    const Vec z = sample_latent(anchor_rng, w.centers[c], cfg.class_spread);
    push_noisy(out.anchors_a, anchor_rng, map_latent(w.q_a, z), cfg.noise_sigma);
    push_noisy(out.anchors_b, anchor_rng, map_latent(w.q_b, z), cfg.noise_sigma);
    out.anchor_labels.push_back(static_cast<ClassId>(c));
  }

  SplitMix query_rng(cfg.seed * 3 + 3);
  for (std::size_t i = 0; i < n_queries; ++i) {
    const std::size_t c = query_rng.below(cfg.num_classes);
    const Vec z = sample_latent(query_rng, w.centers[c], cfg.class_spread);
    push_noisy(out.queries.embeddings, query_rng, map_latent(w.q_a, z), cfg.noise_sigma);
    out.queries.labels.push_back(static_cast<ClassId>(c));
  }

  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    PromptClass pc;
    pc.class_id = static_cast<ClassId>(c);
    pc.name = "class_" + std::to_string(c);
    const Vec e = map_latent(w.q_b, w.centers[c]);
    EmbeddingMatrix m(cfg.embed_dim);
    std::vector<float> row(e.begin(), e.end());
    m.append_row(row);
    pc.vectors = std::move(m);
    out.prompts.classes.push_back(std::move(pc));
  }
  return out;
}

void write_synthetic_fixture(const SyntheticData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_embedding_file(dir / "anchors_a.bin", data.anchors_a);
  write_embedding_file(dir / "anchors_b.bin", data.anchors_b);
  write_embedding_file(dir / "queries.bin", data.queries.embeddings);
  {
    std::ofstream meta(dir / "anchors_meta.jsonl");
    for (std::size_t i = 0; i < data.anchor_labels.size(); ++i) {
      meta << nlohmann::json{{"id", i},
                             {"text", "synthetic item of class " +
                                          std::to_string(data.anchor_labels[i])}}
                  .dump()
           << '\n';
    }
  }
  {
    std::ofstream labels(dir / "labels.jsonl");
    for (std::size_t i = 0; i < data.queries.labels.size(); ++i) {
      labels << nlohmann::json{{"row", i}, {"class_id", data.queries.labels[i]}}.dump() << '\n';
    }
  }
  auto doc = nlohmann::json::array();
  for (const auto& c : data.prompts.classes) {
    const std::string file = "prompt_" + std::to_string(c.class_id) + ".bin";
    if (c.vectors) write_embedding_file(dir / file, *c.vectors);
    doc.push_back({{"class_id", c.class_id}, {"name", c.name}, {"vectors_file", file}});
  }
  std::ofstream(dir / "prompts.json") << doc.dump(2) << '\n';
}

}  // namespace asif
