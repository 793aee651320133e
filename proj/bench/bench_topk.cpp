// Serial reference vs blocked parallel top-k, and single vs batched classify.
//
//   ./build/bench/asif_bench --benchmark_filter=TopK
//   ASIF threads follow OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "asif/classifier.hpp"
#include "asif/search.hpp"
#include "asif/synthetic.hpp"

namespace {

struct Fixture {
  asif::AnchorStore store;
  asif::EmbeddingMatrix queries;
  asif::CandidateSet candidates;
};

const Fixture& fixture(std::size_t n) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    asif::SyntheticConfig cfg;
    cfg.seed = 7;
    auto data = asif::generate_synthetic(cfg, n, 256);
    auto store = asif::AnchorStore::from_pairs(std::move(data.anchors_a), std::move(data.anchors_b));
    asif::ProcessingConfig pc;
    auto candidates = asif::build_candidates(data.prompts, store, pc);
    it = cache.emplace(n, Fixture{std::move(store), std::move(data.queries.embeddings),
                                  std::move(candidates)})
             .first;
  }
  return it->second;
}

void BM_TopKReference(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  const auto nq = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    for (std::size_t q = 0; q < nq; ++q) {
      benchmark::DoNotOptimize(asif::topk_bruteforce(f.queries.row(q), f.store.mode_a(), 800));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(nq));
}

void BM_TopKBatched(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  const auto nq = static_cast<std::size_t>(state.range(1));
  std::vector<float> rows(f.queries.data().begin(),
                          f.queries.data().begin() + static_cast<std::ptrdiff_t>(nq * f.queries.dim()));
  const asif::EmbeddingMatrix q(nq, f.queries.dim(), std::move(rows));
  for (auto _ : state) {
    benchmark::DoNotOptimize(asif::topk_batched(q, f.store.mode_a(), 800, asif::kDefaultBlockSize));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(nq));
}

void BM_ClassifySingle(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  const asif::ProcessingConfig pc;
  for (auto _ : state) {
    for (std::size_t q = 0; q < f.queries.rows(); ++q) {
      benchmark::DoNotOptimize(asif::classify(f.queries.row(q), f.store, f.candidates, pc));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.queries.rows()));
}

void BM_ClassifyBatch(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  const asif::ProcessingConfig pc;
  for (auto _ : state) {
    benchmark::DoNotOptimize(asif::classify_batch(f.queries, f.store, f.candidates, pc));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.queries.rows()));
}

}  // namespace

BENCHMARK(BM_TopKReference)->Args({10000, 64})->Args({100000, 16})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TopKBatched)->Args({10000, 64})->Args({100000, 16})->Args({100000, 256})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassifySingle)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassifyBatch)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
