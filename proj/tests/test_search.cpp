#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "asif/error.hpp"
#include "asif/parallel.hpp"
#include "asif/search.hpp"
#include "test_support.hpp"

namespace asif {
namespace {

using testing::matrix_from;

// Rows chosen so that dot products with e0 are exactly [0.9, 0.1, 0.5, 0.3].
EmbeddingMatrix four_rows() {
  return matrix_from(2, {{0.9f, 0.0f}, {0.1f, 0.0f}, {0.5f, 0.0f}, {0.3f, 0.0f}});
}

TEST(TopkBruteforce, Examples) {
  const auto m = four_rows();
  const std::vector<float> q{1, 0};
  const auto r = topk_bruteforce(q, m, 2);
  EXPECT_EQ(r.indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(r.values, (std::vector<float>{0.9f, 0.5f}));
  EXPECT_EQ(r.k_effective, 2u);

  const auto all = topk_bruteforce(q, m, 4);
  EXPECT_EQ(all.indices, (std::vector<std::size_t>{0, 2, 3, 1}));
  EXPECT_EQ(topk_bruteforce(q, m, 10).k_effective, 4u);

  const auto eq = matrix_from(2, {{1, 0}, {1, 0}, {1, 0}});
  EXPECT_EQ(topk_bruteforce(q, eq, 2).indices, (std::vector<std::size_t>{0, 1}));
  const std::vector<AnchorId> keys{8, 3, 5};
  EXPECT_EQ(topk_bruteforce(q, eq, 2, keys).indices, (std::vector<std::size_t>{1, 2}));
}

TEST(TopkBruteforce, DimMismatch) {
  try {
    topk_bruteforce(std::vector<float>{1, 0, 0}, four_rows(), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimMismatch);
  }
}

TEST(TopkBatched, ZeroQueriesAndErrors) {
  EXPECT_TRUE(topk_batched(EmbeddingMatrix(2), four_rows(), 3, 16).empty());
  EXPECT_THROW(topk_batched(matrix_from(3, {{1, 0, 0}}), four_rows(), 1, 16), Error);
  EXPECT_THROW(topk_batched(matrix_from(2, {{1, 0}}), four_rows(), 1, 0), Error);
}

TEST(TopkBatched, EmptyMatrix) {
  const auto r = topk_batched(matrix_from(2, {{1, 0}}), EmbeddingMatrix(2), 3, 4);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].k_effective, 0u);
  EXPECT_EQ(r[0], topk_bruteforce(std::vector<float>{1, 0}, EmbeddingMatrix(2), 3));
}

class TopkEquivalence : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(TopkEquivalence, BatchedMatchesBruteforceExactly) {
  std::mt19937_64 rng(GetParam());
  const std::size_t n = 1 + rng() % 300, d = 1 + rng() % 40, nq = rng() % 40;
  auto matrix = testing::random_matrix(rng, n, d);
  matrix.normalize_rows();
  // Duplicate some rows to force exact ties.
  for (std::size_t i = 0; i < n / 5; ++i) {
    const auto src = matrix.row(rng() % n);
    std::vector<float> copy(src.begin(), src.end());
    matrix.append_row(copy);
  }
  auto queries = testing::random_matrix(rng, nq, d);
  queries.normalize_rows();
  const std::size_t k = 1 + rng() % (matrix.rows() + 5);
  std::vector<AnchorId> keys(matrix.rows());
  std::iota(keys.rbegin(), keys.rend(), 100);  // reversed keys exercise the tie rule

  for (std::size_t block : {std::size_t{1}, std::size_t{7}, std::size_t{16}, matrix.rows()}) {
    const auto batched = topk_batched(queries, matrix, k, block);
    const auto keyed = topk_batched(queries, matrix, k, block, keys);
    ASSERT_EQ(batched.size(), nq);
    for (std::size_t q = 0; q < nq; ++q) {
      ASSERT_EQ(batched[q], topk_bruteforce(queries.row(q), matrix, k)) << "block " << block;
      ASSERT_EQ(keyed[q], topk_bruteforce(queries.row(q), matrix, k, keys)) << "block " << block;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, TopkEquivalence, ::testing::Range<std::uint64_t>(0, 60));

TEST(TopkBatched, ThreadCountInvariance) {
  std::mt19937_64 rng(77);
  auto matrix = testing::random_matrix(rng, 500, 32);
  matrix.normalize_rows();
  auto queries = testing::random_matrix(rng, 200, 32);
  const int saved = max_threads();
  set_num_threads(1);
  const auto one = topk_batched(queries, matrix, 25, 64);
  set_num_threads(4);
  const auto four = topk_batched(queries, matrix, 25, 64);
  set_num_threads(saved);
  EXPECT_EQ(one, four);
}

TEST(Usage, RecordExamples) {
  UsageStats s;
  record_usage(s, std::vector<AnchorId>{0, 5});
  record_usage(s, std::vector<AnchorId>{5});
  EXPECT_EQ(s.count(0), 1u);
  EXPECT_EQ(s.count(5), 2u);
  EXPECT_EQ(s.total_queries, 2u);
  record_usage(s, {});
  EXPECT_EQ(s.total_queries, 3u);
  EXPECT_EQ(s.count(0), 1u);
  record_candidate_usage(s, std::vector<AnchorId>{0});
  EXPECT_EQ(s.count(0), 2u);
  EXPECT_EQ(s.total_queries, 3u);
}

TEST(Usage, CountsNeverDecrease) {
  std::mt19937_64 rng(5);
  UsageStats s;
  std::map<AnchorId, std::uint64_t> prev;
  for (int r = 0; r < 200; ++r) {
    std::vector<AnchorId> sup;
    for (AnchorId id = 0; id < 20; ++id) {
      if (rng() % 3 == 0) sup.push_back(id);
    }
    record_usage(s, sup);
    for (const auto& [id, c] : prev) EXPECT_GE(s.count(id), c);
    prev = s.counts;
  }
}

TEST(Prune, Examples) {
  std::mt19937_64 rng(9);
  auto store = testing::random_store(rng, 5, 3, 3);
  auto stats = make_usage_stats(store);
  record_usage(stats, std::vector<AnchorId>{0, 1, 2, 4});

  auto copy = store;
  EXPECT_TRUE(prune_unused(copy, stats, 0).empty());
  EXPECT_EQ(copy.size(), 5u);

  const auto gen = store.generation();
  EXPECT_EQ(prune_unused(store, stats, 1), (std::vector<AnchorId>{3}));
  EXPECT_FALSE(store.contains(3));
  EXPECT_EQ(store.size(), 4u);
  EXPECT_NE(store.generation(), gen);

  try {
    prune_unused(store, stats, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StoreGenerationMismatch);
  }
}

TEST(Usage, CsvOrdering) {
  UsageStats s;
  record_usage(s, std::vector<AnchorId>{4, 7, 9});
  record_usage(s, std::vector<AnchorId>{7, 9});
  record_usage(s, std::vector<AnchorId>{9});
  s.counts[1] = 2;
  std::ostringstream out;
  write_usage_csv(s, out);
  EXPECT_EQ(out.str(), "anchor_id,count\n9,3\n1,2\n7,2\n4,1\n");

  testing::TempDir dir;
  export_usage_csv(s, dir / "usage.csv");
  std::ifstream in(dir / "usage.csv");
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_EQ(buf.str(), out.str());
  EXPECT_THROW(export_usage_csv(s, dir / "missing" / "usage.csv"), Error);
}

}  // namespace
}  // namespace asif
