#include "plsa/retrieval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "plsa/util.h"

namespace plsa {

double recall_level(int index) { return (index + 1) / 10.0; }

double cosine_score(std::span<const TermCount> doc, std::span<const TermCount> query) {
  double dot = 0.0;
  double doc_sq = 0.0;
  double query_sq = 0.0;
  for (const auto& c : doc) doc_sq += static_cast<double>(c.count) * static_cast<double>(c.count);
  for (const auto& c : query) query_sq += static_cast<double>(c.count) * static_cast<double>(c.count);
  if (doc_sq == 0.0 || query_sq == 0.0) throw InvalidArgument("cosine of a zero vector");
  // Both sides are sorted by term id.
  auto i = doc.begin();
  auto j = query.begin();
  while (i != doc.end() && j != query.end()) {
    if (i->term < j->term) {
      ++i;
    } else if (j->term < i->term) {
      ++j;
    } else {
      dot += static_cast<double>(i->count) * static_cast<double>(j->count);
      ++i;
      ++j;
    }
  }
  return dot / (std::sqrt(doc_sq) * std::sqrt(query_sq));
}

double cosine_score(const TermVector& doc, const TermVector& query) {
  return cosine_score(std::span<const TermCount>(doc), std::span<const TermCount>(query));
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw InvalidArgument("latent vectors differ in length");
  const double norms = a.norm() * b.norm();
  if (norms == 0.0) throw InvalidArgument("cosine of a zero vector");
  return a.dot(b) / norms;
}

double dot_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw InvalidArgument("latent vectors differ in length");
  return a.dot(b);
}

double latent_score(const LatentRepresentation& doc, const LatentRepresentation& query) {
  return cosine_similarity(doc, query);
}

double combined_score(double lambda, double cos_score, double latent) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
  if (lambda == 1.0) return cos_score;
  if (lambda == 0.0) return latent;
  return lambda * cos_score + (1.0 - lambda) * latent;
}

double plsi_star_score(std::span<const LatentRepresentation> doc_reps,
                       std::span<const LatentRepresentation> query_reps, double lambda,
                       double cos_score, const LatentSimilarity& similarity) {
  if (doc_reps.empty()) throw InvalidArgument("PLSI* needs at least one model");
  if (doc_reps.size() != query_reps.size()) {
    throw InvalidArgument("document and query representations are not aligned");
  }
  std::vector<double> sims(doc_reps.size());
  for (std::size_t i = 0; i < doc_reps.size(); ++i) {
    sims[i] = similarity(doc_reps[i], query_reps[i]);
  }
  // Summing in sorted order makes the result independent of model order.
  std::sort(sims.begin(), sims.end());
  double sum = 0.0;
  for (double s : sims) sum += s;
  return combined_score(lambda, cos_score, sum / static_cast<double>(doc_reps.size()));
}

RetrievalRun rank_all(const Scorer& scorer, DocId n_docs,
                      std::span<const std::int64_t> query_ids, RelevanceJudgments judgments) {
  RetrievalRun run;
  run.judgments = std::move(judgments);
  run.lists.reserve(query_ids.size());
  std::size_t failures = 0;
  for (std::size_t q = 0; q < query_ids.size(); ++q) {
    RankedList list{query_ids[q], {}};
    list.docs.reserve(n_docs);
    for (DocId d = 0; d < n_docs; ++d) {
      double score = -std::numeric_limits<double>::infinity();
      try {
        score = scorer(d, q);
      } catch (const Error&) {
        ++failures;
      }
      list.docs.push_back({d, score});
    }
    std::stable_sort(list.docs.begin(), list.docs.end(),
                     [](const ScoredDoc& a, const ScoredDoc& b) { return a.score > b.score; });
    run.lists.push_back(std::move(list));
  }
  if (failures > 0) {
    warn("rank_all: " + std::to_string(failures) +
         " (document, query) pair(s) could not be scored and rank last");
  }
  return run;
}

PrSummary precision_recall(const RetrievalRun& run) {
  PrSummary summary;
  std::size_t skipped = 0;
  for (const auto& list : run.lists) {
    auto it = run.judgments.find(list.query_id);
    if (it == run.judgments.end() || it->second.empty()) {
      ++skipped;
      continue;
    }
    const auto& relevant = it->second;
    const auto n_relevant = static_cast<std::int64_t>(relevant.size());
    // precision at each relevant hit, indexed by number of hits - 1
    std::vector<double> hit_precision;
    std::int64_t hits = 0;
    for (std::size_t rank = 0; rank < list.docs.size(); ++rank) {
      if (relevant.count(list.docs[rank].doc)) {
        ++hits;
        hit_precision.push_back(static_cast<double>(hits) / static_cast<double>(rank + 1));
      }
    }
    // Interpolate: max precision over all hits at or beyond the level.
    std::vector<double> best_after(hit_precision.size() + 1, 0.0);
    for (std::size_t h = hit_precision.size(); h-- > 0;) {
      best_after[h] = std::max(hit_precision[h], best_after[h + 1]);
    }
    QueryPrecision qp{list.query_id, {}, 0.0};
    for (int level = 0; level < kRecallLevels; ++level) {
      // Smallest hit count with hits / n_relevant >= (level + 1) / 10.
      const std::int64_t needed = ((level + 1) * n_relevant + 9) / 10;
      const auto idx = static_cast<std::size_t>(std::max<std::int64_t>(needed, 1) - 1);
      qp.precision[level] = idx < hit_precision.size() ? best_after[idx] : 0.0;
      qp.average += qp.precision[level];
    }
    qp.average /= kRecallLevels;
    summary.queries.push_back(qp);
  }
  if (skipped > 0) {
    warn("precision_recall: " + std::to_string(skipped) +
         " quer(ies) without relevant documents excluded");
  }
  if (summary.queries.empty()) throw DataError("no query has relevance judgments");
  const double n = static_cast<double>(summary.queries.size());
  for (const auto& qp : summary.queries) {
    for (int level = 0; level < kRecallLevels; ++level) {
      summary.mean_precision[level] += qp.precision[level];
    }
    summary.average_precision += qp.average;
  }
  for (auto& p : summary.mean_precision) p /= n;
  summary.average_precision /= n;
  return summary;
}

void write_run(std::ostream& out, const RetrievalRun& run,
               std::span<const std::int64_t> doc_ids) {
  for (const auto& list : run.lists) {
    for (std::size_t rank = 0; rank < list.docs.size(); ++rank) {
      const auto& sd = list.docs[rank];
      const std::int64_t id = doc_ids.empty() ? sd.doc : doc_ids[sd.doc];
      out << list.query_id << ' ' << id << ' ' << rank + 1 << ' ' << format_double(sd.score)
          << '\n';
    }
  }
}

void write_pr_table(std::ostream& out, const PrSummary& summary, const std::string& method) {
  out << "# method " << method << " queries " << summary.queries.size() << '\n';
  out << "recall\tprecision\n";
  for (int level = 0; level < kRecallLevels; ++level) {
    out << format_double(recall_level(level)) << '\t'
        << format_double(summary.mean_precision[level]) << '\n';
  }
  out << "average\t" << format_double(summary.average_precision) << '\n';
}

void write_pr_curve(std::ostream& out, const PrSummary& summary) {
  for (int level = 0; level < kRecallLevels; ++level) {
    out << format_double(recall_level(level)) << '\t'
        << format_double(summary.mean_precision[level]) << '\n';
  }
}

}  // namespace plsa
