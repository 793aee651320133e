#include "asif/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <set>
#include <sstream>

#include "asif/error.hpp"

namespace asif {

void PromptSet::validate() const {
  if (classes.empty()) throw Error(ErrorKind::InvalidArgument, "prompt set has no classes");
  std::set<ClassId> seen;
  for (const auto& c : classes) {
    if (!seen.insert(c.class_id).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate class_id " + std::to_string(c.class_id));
    }
    if (c.prompt_count() == 0) {
      throw Error(ErrorKind::InvalidArgument, "class " + std::to_string(c.class_id) + " has no prompts");
    }
  }
}

bool PromptSet::contains(ClassId id) const {
  return std::any_of(classes.begin(), classes.end(),
                     [id](const PromptClass& c) { return c.class_id == id; });
}

void EmbeddingLookup::insert(std::string text, std::vector<float> embedding) {
  table_.insert_or_assign(std::move(text), std::move(embedding));
}

const std::vector<float>* EmbeddingLookup::find(std::string_view text) const {
  auto it = table_.find(std::string(text));
  return it == table_.end() ? nullptr : &it->second;
}

namespace {

// Elementwise mean over the union support. Each anchor's values are summed
// in sorted order so the result does not depend on prompt order.
SparseRelRep mean_then_renormalize(const std::vector<SparseRelRep>& reps) {
  if (reps.size() == 1) return reps.front();
  std::map<AnchorId, std::vector<float>> columns;
  for (const auto& r : reps) {
    for (const auto& e : r.entries) columns[e.anchor_id].push_back(e.value);
  }
  std::vector<std::pair<AnchorId, double>> mean;
  mean.reserve(columns.size());
  double sq = 0.0;
  for (auto& [id, values] : columns) {
    std::sort(values.begin(), values.end());
    double s = 0.0;
    for (float v : values) s += v;
    s /= static_cast<double>(reps.size());
    if (s != 0.0) mean.emplace_back(id, s);
    sq += s * s;
  }
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0)) throw Error(ErrorKind::EmptyRepresentation, "prompt reps cancel out");
  // A mean that is already unit within 1e-6 (identical prompts) is kept as is.
  const double scale = std::abs(norm - 1.0) <= 1e-6 ? 1.0 : norm;
  SparseRelRep out;
  out.source_mode = reps.front().source_mode;
  out.generation = reps.front().generation;
  for (const auto& [id, v] : mean) {
    const auto f = static_cast<float>(v / scale);
    if (f != 0.0f) out.entries.push_back({id, f});
  }
  return out;
}

std::vector<TraceEntry> trace_against(const SparseRelRep& q, const SparseRelRep& c) {
  std::vector<TraceEntry> trace;
  auto i = q.entries.begin();
  auto j = c.entries.begin();
  while (i != q.entries.end() && j != c.entries.end()) {
    if (i->anchor_id < j->anchor_id) {
      ++i;
    } else if (j->anchor_id < i->anchor_id) {
      ++j;
    } else {
      const auto contribution = static_cast<float>(static_cast<double>(i->value) * j->value);
      trace.push_back({i->anchor_id, i->value, j->value, contribution});
      ++i;
      ++j;
    }
  }
  std::stable_sort(trace.begin(), trace.end(), [](const TraceEntry& a, const TraceEntry& b) {
    return a.contribution > b.contribution;
  });
  return trace;
}

void check_generation(const AnchorStore& store, const CandidateSet& candidates) {
  if (candidates.store_generation != store.generation()) {
    throw Error(ErrorKind::StoreGenerationMismatch,
                "candidates were built against a different store generation; rebuild them");
  }
}

Prediction score_query(const std::optional<SparseRelRep>& q, const CandidateSet& candidates,
                       float unknown_threshold) {
  Prediction pred;
  std::vector<std::pair<ClassScore, const SparseRelRep*>> scored;
  scored.reserve(candidates.classes.size());
  for (const auto& c : candidates.classes) {
    float best = 0.0f;
    const SparseRelRep* best_rep = c.reps.empty() ? nullptr : &c.reps.front();
    if (q) {
      for (std::size_t r = 0; r < c.reps.size(); ++r) {
        const float s = sparse_cosine(*q, c.reps[r]);
        if (r == 0 || s > best) {
          best = s;
          best_rep = &c.reps[r];
        }
      }
    }
    scored.push_back({{c.class_id, best}, best_rep});
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first.score > b.first.score ||
           (a.first.score == b.first.score && a.first.class_id < b.first.class_id);
  });
  for (const auto& s : scored) pred.ranked.push_back(s.first);
  if (!q || scored.empty()) {
    pred.unknown = true;
    return pred;
  }
  pred.query_support = q->support();
  pred.score = scored.front().first.score;
  pred.trace = trace_against(*q, *scored.front().second);
  pred.unknown = pred.score < unknown_threshold || pred.trace.empty();
  if (!pred.unknown) pred.class_id = scored.front().first.class_id;
  return pred;
}

}  // namespace

CandidateSet build_candidates(const PromptSet& prompts, const AnchorStore& store,
                              const ProcessingConfig& cfg, Aggregation aggregation,
                              const EmbeddingLookup* lookup) {
  prompts.validate();
  cfg.validate();
  if (store.empty()) throw Error(ErrorKind::EmptyStore, "cannot build candidates on an empty store");
  CandidateSet out;
  out.aggregation = aggregation;
  out.store_generation = store.generation();
  for (const auto& c : prompts.classes) {
    std::vector<SparseRelRep> reps;
    for (const auto& text : c.prompts) {
      const std::vector<float>* emb = lookup ? lookup->find(text) : nullptr;
      if (!emb) {
        throw Error(ErrorKind::InvalidArgument, "no embedding for prompt \"" + text + "\"");
      }
      reps.push_back(process(*emb, store, Side::B, cfg));
    }
    if (c.vectors) {
      for (std::size_t r = 0; r < c.vectors->rows(); ++r) {
        reps.push_back(process(c.vectors->row(r), store, Side::B, cfg));
      }
    }
    CandidateClass cc{c.class_id, c.name, {}};
    if (aggregation == Aggregation::MeanThenRenormalize) {
      cc.reps.push_back(mean_then_renormalize(reps));
    } else {
      cc.reps = std::move(reps);
    }
    out.classes.push_back(std::move(cc));
  }
  return out;
}

Prediction classify(std::span<const float> query, const AnchorStore& store,
                    const CandidateSet& candidates, const ProcessingConfig& cfg,
                    float unknown_threshold) {
  check_generation(store, candidates);
  std::optional<SparseRelRep> q;
  try {
    q = process(query, store, Side::A, cfg);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::EmptyRepresentation) throw;
  }
  return score_query(q, candidates, unknown_threshold);
}

std::vector<Prediction> classify_batch(const EmbeddingMatrix& queries, const AnchorStore& store,
                                       const CandidateSet& candidates,
                                       const ProcessingConfig& cfg, float unknown_threshold,
                                       std::size_t block_size) {
  check_generation(store, candidates);
  cfg.validate();
  if (queries.dim() != store.dim_a()) {
    throw Error(ErrorKind::DimMismatch, "queries have dimension " + std::to_string(queries.dim()) +
                                            ", mode_a has " + std::to_string(store.dim_a()));
  }
  const std::size_t nq = queries.rows();
  std::vector<float> unit(nq * queries.dim());
  for (std::size_t i = 0; i < nq; ++i) {
    std::span<float> dst(unit.data() + i * queries.dim(), queries.dim());
    if (!normalize_into(queries.row(i), dst)) {
      throw Error(ErrorKind::DegenerateQuery, "query row " + std::to_string(i) + " has zero norm", i);
    }
  }
  const EmbeddingMatrix canonical(nq, queries.dim(), std::move(unit), true);
  const auto tops = topk_batched(canonical, store.mode_a(), cfg.k, block_size, store.ids());

  std::vector<Prediction> out(nq);
  std::exception_ptr failure;
  const long long count = static_cast<long long>(nq);
#pragma omp parallel for schedule(dynamic, 64)
  for (long long i = 0; i < count; ++i) {
    const auto row = static_cast<std::size_t>(i);
    try {
      std::optional<SparseRelRep> q;
      try {
        q = process_selection(tops[row], store, Side::A, cfg);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::EmptyRepresentation) throw;
      }
      out[row] = score_query(q, candidates, unknown_threshold);
    } catch (...) {
#pragma omp critical(asif_classify_batch_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::string trace_report(const Prediction& pred, const AnchorStore& store) {
  for (const auto& t : pred.trace) {
    if (!store.contains(t.anchor_id)) {
      throw Error(ErrorKind::UnknownAnchor,
                  "trace references anchor " + std::to_string(t.anchor_id) +
                      ", which is no longer in the store (stale prediction)");
    }
  }
  std::ostringstream out;
  char buf[160];
  if (pred.unknown) {
    std::snprintf(buf, sizeof buf, "prediction: unknown (best score %.6f)\n", pred.score);
    out << buf;
    if (pred.trace.empty()) {
      out << "no anchor overlap between the query and any class above threshold\n";
      return out.str();
    }
    out << "the closest class scored below the threshold; its overlap follows\n";
  } else {
    std::snprintf(buf, sizeof buf, "prediction: class %lld (score %.6f)\n",
                  static_cast<long long>(*pred.class_id), pred.score);
    out << buf;
  }
  out << "anchor_id  query_value  candidate_value  contribution  caption\n";
  double sum = 0.0;
  for (const auto& t : pred.trace) {
    std::snprintf(buf, sizeof buf, "%9llu  %11.6f  %15.6f  %12.6f  ",
                  static_cast<unsigned long long>(t.anchor_id), t.query_value, t.candidate_value,
                  t.contribution);
    out << buf;
    auto caption = store.text(t.anchor_id);
    if (caption.empty()) {
      out << "-";
    } else {
      out << '"' << caption << '"';
    }
    out << '\n';
    sum += t.contribution;
  }
  std::snprintf(buf, sizeof buf, "sum of contributions: %.6f\n", sum);
  out << buf;
  out << "anchors listed: " << pred.trace.size()
      << "; no other anchor influenced the winning score\n";
  return out.str();
}

void record_workload_usage(UsageStats& stats, const CandidateSet& candidates,
                           std::span<const Prediction> predictions) {
  for (const auto& c : candidates.classes) {
    for (const auto& r : c.reps) record_candidate_usage(stats, r.support());
  }
  for (const auto& p : predictions) record_usage(stats, p.query_support);
}

}  // namespace asif
