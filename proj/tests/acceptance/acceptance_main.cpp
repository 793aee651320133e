// Acceptance suite: one [PASS]/[FAIL] line per criterion. Run with no
// arguments for every criterion, or with criterion names to select some.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "asif/anchor_store.hpp"
#include "asif/classifier.hpp"
#include "asif/embedding_format.hpp"
#include "asif/error.hpp"
#include "asif/evalsweep.hpp"
#include "asif/parallel.hpp"
#include "asif/relrep.hpp"
#include "asif/search.hpp"
#include "asif/synthetic.hpp"
#include "oracle.hpp"

namespace asif::acceptance {
namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

EmbeddingMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t dim) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> data(rows * dim);
  for (auto& x : data) x = normal(rng);
  return EmbeddingMatrix(rows, dim, std::move(data));
}

std::vector<float> random_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (auto& x : v) x = normal(rng);
  return v;
}

// Components uniform in [-1, 1] on a 2^-20 grid, so c*q is exact in float for c in {0.5, 3}.
std::vector<float> grid_vector(std::mt19937_64& rng, std::size_t dim) {
  std::uniform_int_distribution<std::int32_t> u(-(1 << 20), 1 << 20);
  std::vector<float> v(dim);
  do {
    for (auto& x : v) x = std::ldexp(static_cast<float>(u(rng)), -20);
  } while (std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; }));
  return v;
}

PromptSet random_prompts(std::mt19937_64& rng, std::size_t classes, std::size_t dim) {
  PromptSet ps;
  for (std::size_t c = 0; c < classes; ++c) {
    PromptClass pc;
    pc.class_id = static_cast<ClassId>(c);
    pc.name = "class" + std::to_string(c);
    pc.vectors = random_matrix(rng, 1 + rng() % 3, dim);
    ps.classes.push_back(std::move(pc));
  }
  return ps;
}

std::vector<AnchorId> candidate_union(const CandidateSet& cands) {
  std::set<AnchorId> ids;
  for (const auto& c : cands.classes) {
    for (const auto& r : c.reps) {
      for (const auto& e : r.entries) ids.insert(e.anchor_id);
    }
  }
  return {ids.begin(), ids.end()};
}

// --- criteria -------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  const std::size_t ns[] = {1, 7, 256, 2048};
  const std::size_t ds[] = {2, 64, 128};
  std::mt19937_64 rng(20240601);
  std::size_t instances = 0, tie_instances = 0, mismatches = 0, comparisons = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const std::size_t combo = i % 108;
    const std::size_t n = ns[combo % 4], d = ds[(combo / 4) % 3];
    const std::size_t k_choice = (combo / 12) % 3, b_choice = combo / 36;
    const std::size_t k = k_choice == 0 ? 1 : k_choice == 1 ? 10 : n;
    const std::size_t block = b_choice == 0 ? 1 : b_choice == 1 ? 16 : n;

    auto matrix = random_matrix(rng, n, d);
    matrix.normalize_rows();
    auto queries = random_matrix(rng, 3, d);
    queries.normalize_rows();
    // Every other instance duplicates rows and aims a query at a duplicate.
    if (i % 2 == 1 && n > 1) {
      std::vector<float> data(matrix.data().begin(), matrix.data().end());
      const std::size_t copies = std::max<std::size_t>(1, n / 4);
      std::size_t src = 0;
      for (std::size_t c = 0; c < copies; ++c) {
        src = rng() % n;
        const std::size_t dst = rng() % n;
        std::copy_n(data.begin() + src * d, d, data.begin() + dst * d);
      }
      matrix = EmbeddingMatrix(n, d, std::move(data), true);
      std::vector<float> qd(queries.data().begin(), queries.data().end());
      std::copy_n(matrix.row(src).begin(), d, qd.begin());
      queries = EmbeddingMatrix(3, d, std::move(qd), true);
      ++tie_instances;
    }
    const auto batched = topk_batched(queries, matrix, k, block);
    for (std::size_t q = 0; q < queries.rows(); ++q) {
      ++comparisons;
      if (!(batched[q] == topk_bruteforce(queries.row(q), matrix, k))) ++mismatches;
    }
    ++instances;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 60.0,
          fmt("%zu instances (%zu with duplicated rows), %zu query comparisons, %zu mismatches, "
              "%.1f s (limit 60 s)",
              instances, tie_instances, comparisons, mismatches, secs)};
}

Outcome pipeline_invariants() {
  std::mt19937_64 rng(7);
  std::size_t reps = 0, support_fail = 0, norm_fail = 0, scale_fail = 0, perm_fail = 0,
              kernel_fail = 0, perm_checks = 0, kernel_checks = 0;
  double worst_norm = 0, worst_kernel = 0;
  for (std::size_t s = 0; s < 100; ++s) {
    const std::size_t n = 2 + rng() % 300, d = 2 + rng() % 127;
    const auto store = AnchorStore::from_pairs(random_matrix(rng, n, d), random_matrix(rng, n, d));
    const ProcessingConfig cfg{1 + rng() % n, 1.0 + (rng() % 71) / 10.0,
                               rng() % 4 ? SignPolicy::SignedPower : SignPolicy::ClampNegative};
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto shuffled = store.permuted(order);
    const auto prompts = random_prompts(rng, 2 + rng() % 4, d);
    std::optional<CandidateSet> cands, cands_perm;
    try {
      cands = build_candidates(prompts, store, cfg);
      cands_perm = build_candidates(prompts, shuffled, cfg);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptyRepresentation) throw;
    }
    const ProcessingConfig kernel_cfg{n, 1.0};
    const auto y = random_vector(rng, d);
    const auto y_rep = process(y, store, Side::B, kernel_cfg);
    const auto y_sims = raw_relrep(y, store.mode_b());

    for (std::size_t q = 0; q < 100; ++q) {
      const auto query = grid_vector(rng, d);
      SparseRelRep rep;
      try {
        rep = process(query, store, Side::A, cfg);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::EmptyRepresentation) throw;
        continue;
      }
      ++reps;
      if (rep.entries.size() > cfg.k) ++support_fail;
      double sq = 0;
      for (const auto& e : rep.entries) sq += double(e.value) * e.value;
      const double dev = std::abs(std::sqrt(sq) - 1.0);
      worst_norm = std::max(worst_norm, dev);
      if (dev > 1e-5) ++norm_fail;
      for (float c : {0.5f, 3.0f}) {
        std::vector<float> scaled(query);
        for (float& x : scaled) x *= c;
        if (!(process(scaled, store, Side::A, cfg) == rep)) ++scale_fail;
      }
      if (cands) {
        ++perm_checks;
        if (!(classify(query, store, *cands, cfg) == classify(query, shuffled, *cands_perm, cfg))) {
          ++perm_fail;
        }
      }
      // k = n, p = 1: sparse cosine equals the dense cosine of similarity vectors.
      ++kernel_checks;
      const auto q_rep = process(query, store, Side::A, kernel_cfg);
      const auto q_sims = raw_relrep(query, store.mode_a());
      double dot = 0, nq = 0, ny = 0;
      for (std::size_t i = 0; i < n; ++i) {
        dot += double(q_sims.values[i]) * y_sims.values[i];
        nq += double(q_sims.values[i]) * q_sims.values[i];
        ny += double(y_sims.values[i]) * y_sims.values[i];
      }
      const double dense = dot / std::sqrt(nq * ny);
      const double err = std::abs(sparse_cosine(q_rep, y_rep) - dense);
      worst_kernel = std::max(worst_kernel, err);
      if (err > 1e-6) ++kernel_fail;
    }
  }
  const bool pass = reps >= 10000 && support_fail + norm_fail + scale_fail + perm_fail + kernel_fail == 0;
  return {pass, fmt("%zu reps; support>k %zu; norm off by >1e-5 %zu (worst %.2e); scale "
                    "mismatches %zu; permutation mismatches %zu/%zu; kernel >1e-6 %zu/%zu (worst %.2e)",
                    reps, support_fail, norm_fail, worst_norm, scale_fail, perm_fail, perm_checks,
                    kernel_fail, kernel_checks, worst_kernel)};
}

Outcome support_locality() {
  std::mt19937_64 rng(11);
  std::size_t cases = 0, class_changes = 0, attempts = 0;
  double worst = 0;
  while (cases < 200) {
    ++attempts;
    const std::size_t n = 30 + rng() % 270, d = 4 + rng() % 29;
    auto store = AnchorStore::from_pairs(random_matrix(rng, n, d), random_matrix(rng, n, d));
    const ProcessingConfig cfg{1 + rng() % (n / 6), 1.0 + (rng() % 71) / 10.0};
    const auto agg = rng() % 2 ? Aggregation::MaxScore : Aggregation::MeanThenRenormalize;
    const auto prompts = random_prompts(rng, 2 + rng() % 5, d);
    const auto query = random_vector(rng, d);
    const auto cands = build_candidates(prompts, store, cfg, agg);
    const auto before = classify(query, store, cands, cfg);
    auto used = candidate_union(cands);
    used.insert(used.end(), before.query_support.begin(), before.query_support.end());
    std::sort(used.begin(), used.end());
    std::vector<AnchorId> outside;
    for (AnchorId id : store.ids()) {
      if (!std::binary_search(used.begin(), used.end(), id)) outside.push_back(id);
    }
    if (outside.empty()) continue;
    store.remove_pair(outside[rng() % outside.size()]);
    const auto after = classify(query, store, build_candidates(prompts, store, cfg, agg), cfg);
    ++cases;
    if (after.class_id != before.class_id) ++class_changes;
    for (std::size_t i = 0; i < before.ranked.size(); ++i) {
      worst = std::max(worst, double(std::abs(before.ranked[i].score - after.ranked[i].score)));
    }
  }
  return {class_changes == 0 && worst <= 1e-6,
          fmt("%zu cases (%zu drawn), %zu class changes, worst score change %.2e (limit 1e-6)",
              cases, attempts, class_changes, worst)};
}

Outcome edit_semantics() {
  std::size_t trials = 0, differing = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticConfig scfg;
    scfg.seed = 100 + seed;
    const auto data = generate_synthetic(scfg, 400, 100);
    auto store = AnchorStore::from_pairs(data.anchors_a, data.anchors_b);
    const ProcessingConfig cfg{40, 4.0};
    const auto before = classify_batch(data.queries.embeddings, store,
                                       build_candidates(data.prompts, store, cfg), cfg);
    std::mt19937_64 rng(seed);
    const AnchorId victim = store.ids()[rng() % store.size()];
    const auto pos = *store.position_of(victim);
    const std::vector<float> a(store.mode_a().row(pos).begin(), store.mode_a().row(pos).end());
    const std::vector<float> b(store.mode_b().row(pos).begin(), store.mode_b().row(pos).end());
    store.remove_pair(victim);
    const AnchorId fresh = store.add_pair(a, b);
    const auto after = classify_batch(data.queries.embeddings, store,
                                      build_candidates(data.prompts, store, cfg), cfg);
    for (std::size_t q = 0; q < before.size(); ++q) {
      ++trials;
      auto expected = before[q];
      for (auto& t : expected.trace) {
        if (t.anchor_id == victim) t.anchor_id = fresh;
      }
      for (auto& id : expected.query_support) {
        if (id == victim) id = fresh;
      }
      std::sort(expected.query_support.begin(), expected.query_support.end());
      if (!(expected == after[q])) ++differing;
    }
  }
  return {differing == 0,
          fmt("%zu replayed predictions over 10 remove/re-add edits, %zu differ", trials, differing)};
}

Outcome trace_soundness() {
  std::mt19937_64 rng(13);
  std::size_t preds = 0, sum_fail = 0, membership_fail = 0, traced = 0;
  double worst = 0;
  while (preds < 500) {
    const std::size_t n = 20 + rng() % 400, d = 3 + rng() % 30;
    const auto store = AnchorStore::from_pairs(random_matrix(rng, n, d), random_matrix(rng, n, d));
    const ProcessingConfig cfg{1 + rng() % n, 1.0 + (rng() % 71) / 10.0};
    const auto agg = rng() % 2 ? Aggregation::MaxScore : Aggregation::MeanThenRenormalize;
    const auto cands = build_candidates(random_prompts(rng, 2 + rng() % 5, d), store, cfg, agg);
    const auto queries = random_matrix(rng, 25, d);
    for (const auto& p : classify_batch(queries, store, cands, cfg)) {
      if (p.unknown) continue;
      ++preds;
      double sum = 0;
      for (const auto& t : p.trace) sum += t.contribution;
      const double err = std::abs(sum - p.score);
      worst = std::max(worst, err);
      if (err > 1e-5) ++sum_fail;
      const auto& cls = *std::find_if(cands.classes.begin(), cands.classes.end(),
                                      [&](const CandidateClass& c) { return c.class_id == *p.class_id; });
      for (const auto& t : p.trace) {
        ++traced;
        const bool in_query = std::binary_search(p.query_support.begin(), p.query_support.end(), t.anchor_id);
        const bool in_class = std::any_of(cls.reps.begin(), cls.reps.end(), [&](const SparseRelRep& r) {
          return std::any_of(r.entries.begin(), r.entries.end(),
                             [&](const SparseEntry& e) { return e.anchor_id == t.anchor_id; });
        });
        if (!in_query || !in_class) ++membership_fail;
      }
    }
  }
  return {sum_fail == 0 && membership_fail == 0,
          fmt("%zu predictions, %zu traced anchors; sum off by >1e-5 %zu (worst %.2e); anchors "
              "outside both supports %zu",
              preds, traced, sum_fail, worst, membership_fail)};
}

// Frozen regression baseline: mean accuracy over seeds 0-4 for m = 10, 100, 1000,
// recorded after the engine matched the dense reference on every query.
constexpr double kBaseline[3] = {0.664, 0.924, 0.9548};

Outcome synthetic_benchmark() {
  const std::size_t ms[] = {10, 100, 1000};
  constexpr std::size_t kQueries = 500;
  double mean[3] = {0, 0, 0};
  std::size_t class_mismatches = 0, total = 0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticConfig scfg;
    scfg.seed = seed;
    const auto data = generate_synthetic(scfg, 1000, kQueries);
    const auto full = AnchorStore::from_pairs(data.anchors_a, data.anchors_b);
    for (std::size_t mi = 0; mi < 3; ++mi) {
      const std::size_t m = ms[mi];
      const ProcessingConfig cfg{std::min<std::size_t>(100, m), 4.0};
      const auto store = full.prefix(m);
      const auto cands = build_candidates(data.prompts, store, cfg);
      const auto preds = classify_batch(data.queries.embeddings, store, cands, cfg);
      const double acc = accuracy(preds, data.queries.labels);

      // Dense long-double reference of the full recipe on the raw inputs.
      std::vector<std::vector<float>> rows_a, rows_b;
      for (std::size_t i = 0; i < m; ++i) {
        rows_a.emplace_back(data.anchors_a.row(i).begin(), data.anchors_a.row(i).end());
        rows_b.emplace_back(data.anchors_b.row(i).begin(), data.anchors_b.row(i).end());
      }
      std::vector<oracle::Dense> class_reps;
      for (const auto& c : data.prompts.classes) {
        const auto v = c.vectors->row(0);
        class_reps.push_back(
            *oracle::process(oracle::cosine_sims(oracle::Dense(v.begin(), v.end()), rows_b), cfg.k, 4));
      }
      std::size_t correct = 0;
      for (std::size_t q = 0; q < kQueries; ++q) {
        const auto v = data.queries.embeddings.row(q);
        const auto rep = oracle::process(oracle::cosine_sims(oracle::Dense(v.begin(), v.end()), rows_a), cfg.k, 4);
        std::optional<ClassId> want;
        if (rep) {
          const auto [best, score] = oracle::argmax(*rep, class_reps);
          if (score > 0) want = data.prompts.classes[best].class_id;
        }
        if (want && *want == data.queries.labels[q]) ++correct;
        ++total;
        if (want != preds[q].class_id) ++class_mismatches;
      }
      const double oracle_acc = double(correct) / kQueries;
      if (oracle_acc != acc) ++class_mismatches;
      mean[mi] += acc / 5.0;
      per_seed += fmt(" s%llu/m%zu=%.3f", static_cast<unsigned long long>(seed), m, acc);
    }
  }
  const bool monotone = mean[0] <= mean[1] && mean[1] <= mean[2];
  const bool above_chance = mean[2] > 0.10;
  bool baseline_ok = true;
  for (int i = 0; i < 3; ++i) baseline_ok = baseline_ok && std::abs(mean[i] - kBaseline[i]) < 1e-9;
  std::printf("  per-seed accuracy:%s\n", per_seed.c_str());
  return {class_mismatches == 0 && monotone && above_chance && baseline_ok,
          fmt("mean accuracy m=10 %.4f, m=100 %.4f, m=1000 %.4f (baseline %.4f/%.4f/%.4f); "
              "non-decreasing %s; m=1000 above 10%% chance %s; reference disagreements %zu of %zu",
              mean[0], mean[1], mean[2], kBaseline[0], kBaseline[1], kBaseline[2],
              monotone ? "yes" : "no", above_chance ? "yes" : "no", class_mismatches, total)};
}

Outcome prune_safety() {
  std::size_t removed_total = 0, differing = 0, replays = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticConfig scfg;
    scfg.seed = 200 + seed;
    const auto data = generate_synthetic(scfg, 2000, 300);
    auto store = AnchorStore::from_pairs(data.anchors_a, data.anchors_b);
    const ProcessingConfig cfg{30, 4.0};
    const auto cands = build_candidates(data.prompts, store, cfg);
    const auto before = classify_batch(data.queries.embeddings, store, cands, cfg);
    auto stats = make_usage_stats(store);
    record_workload_usage(stats, cands, before);
    removed_total += prune_unused(store, stats, 1).size();
    const auto after = classify_batch(data.queries.embeddings, store,
                                      build_candidates(data.prompts, store, cfg), cfg);
    for (std::size_t q = 0; q < before.size(); ++q) {
      ++replays;
      if (!(before[q] == after[q])) ++differing;
    }
  }
  return {differing == 0 && removed_total > 0,
          fmt("%zu anchors pruned over 5 workloads, %zu replayed predictions, %zu differ",
              removed_total, replays, differing)};
}

struct PerfFixture {
  AnchorStore store;
  EmbeddingMatrix queries;
  CandidateSet cands;
  ProcessingConfig cfg{800, 8.0};
};

PerfFixture& perf_fixture() {
  static PerfFixture f = [] {
    SyntheticConfig scfg;
    scfg.seed = 42;
    auto data = generate_synthetic(scfg, 100000, 10000);
    PerfFixture p{AnchorStore::from_pairs(std::move(data.anchors_a), std::move(data.anchors_b)),
                  std::move(data.queries.embeddings), {}};
    p.cands = build_candidates(data.prompts, p.store, p.cfg);
    return p;
  }();
  return f;
}

double timed_classify(int threads, std::vector<Prediction>* out) {
  auto& f = perf_fixture();
  set_num_threads(threads);
  const auto t0 = Clock::now();
  auto preds = classify_batch(f.queries, f.store, f.cands, f.cfg);
  const double secs = seconds_since(t0);
  if (out) *out = std::move(preds);
  return secs;
}

Outcome performance_time() {
  perf_fixture();
  const double secs = timed_classify(1, nullptr);
  return {secs < 120.0, fmt("10000 queries x 100000 anchors, d=64, k=800, 1 thread: %.1f s (limit 120 s)", secs)};
}

Outcome performance_speedup() {
  perf_fixture();
  std::vector<Prediction> one, four;
  const double t1 = timed_classify(1, &one);
  const double t4 = timed_classify(4, &four);
  const double speedup = t1 / t4;
  const bool same = one == four;
  return {speedup >= 2.0 && same,
          fmt("1 thread %.1f s, 4 threads %.1f s, speedup %.2fx (need >= 2x); %u hardware "
              "threads available; outputs identical: %s",
              t1, t4, speedup, std::thread::hardware_concurrency(), same ? "yes" : "no")};
}

std::vector<std::byte> bytes(std::initializer_list<int> v) {
  std::vector<std::byte> out;
  for (int x : v) out.push_back(static_cast<std::byte>(x));
  return out;
}

Outcome format_golden() {
  // "ASIF", version 1, dtype 1, reserved, n=2, d=2, then 1.0, 0.0, 0.5, -2.0 (f32 LE).
  const auto valid = bytes({'A', 'S', 'I', 'F', 1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0,
                            2, 0, 0, 0, 0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0x00,
                            0x00, 0x00, 0x00, 0x3f, 0x00, 0x00, 0x00, 0xc0});
  std::size_t checks = 0, failures = 0;
  std::string notes;
  auto expect_format_error = [&](const char* name, std::vector<std::byte> b) {
    ++checks;
    try {
      parse_embeddings(b);
      ++failures;
      notes += std::string(" ") + name + " parsed;";
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::FormatError) {
        ++failures;
        notes += std::string(" ") + name + " gave " + std::string(e.name()) + ";";
      }
    }
  };
  ++checks;
  try {
    const auto m = parse_embeddings(valid);
    const std::vector<float> want{1.0f, 0.0f, 0.5f, -2.0f};
    if (m.rows() != 2 || m.dim() != 2 || !std::equal(want.begin(), want.end(), m.data().begin())) {
      ++failures;
      notes += " valid fixture decoded wrongly;";
    }
    if (serialize_embeddings(m) != valid) {
      ++failures;
      notes += " re-serialization differs;";
    }
  } catch (const Error& e) {
    ++failures;
    notes += std::string(" valid fixture rejected: ") + e.what() + ";";
  }
  expect_format_error("truncated payload", {valid.begin(), valid.end() - 1});
  expect_format_error("truncated header", {valid.begin(), valid.begin() + 10});
  auto magic = valid;
  magic[0] = std::byte{'X'};
  expect_format_error("wrong magic", magic);
  auto version = valid;
  version[4] = std::byte{2};
  expect_format_error("wrong version", version);
  auto trailing = valid;
  trailing.push_back(std::byte{0});
  expect_format_error("trailing byte", trailing);
  return {failures == 0, fmt("%zu fixtures checked, %zu failed%s", checks, failures, notes.c_str())};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> list{
      {"oracle_equivalence", oracle_equivalence},
      {"pipeline_invariants", pipeline_invariants},
      {"support_locality", support_locality},
      {"edit_semantics", edit_semantics},
      {"trace_soundness", trace_soundness},
      {"synthetic_benchmark", synthetic_benchmark},
      {"prune_safety", prune_safety},
      {"performance_time", performance_time},
      {"performance_speedup", performance_speedup},
      {"format_golden", format_golden},
  };
  return list;
}

}  // namespace
}  // namespace asif::acceptance

int main(int argc, char** argv) {
  using namespace asif::acceptance;
  std::set<std::string> wanted(argv + 1, argv + argc);
  for (const auto& name : wanted) {
    if (std::none_of(criteria().begin(), criteria().end(), [&](const auto& c) { return c.first == name; })) {
      std::fprintf(stderr, "unknown criterion: %s\n", name.c_str());
      return 2;
    }
  }
  int failed = 0;
  for (const auto& [name, run] : criteria()) {
    if (!wanted.empty() && !wanted.count(name)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
