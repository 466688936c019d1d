#ifndef PLSA_RETRIEVAL_H_
#define PLSA_RETRIEVAL_H_

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "plsa/aspect_model.h"
#include "plsa/corpus.h"

namespace plsa {

struct ScoredDoc {
  DocId doc;
  double score;
};

// Documents sorted by descending score, ties by ascending doc id.
struct RankedList {
  std::int64_t query_id = 0;
  std::vector<ScoredDoc> docs;
};

struct RetrievalRun {
  std::vector<RankedList> lists;
  RelevanceJudgments judgments;
};

inline constexpr int kRecallLevels = 9;  // 0.1, 0.2, ..., 0.9

struct QueryPrecision {
  std::int64_t query_id = 0;
  std::array<double, kRecallLevels> precision{};
  double average = 0.0;
};

struct PrSummary {
  std::vector<QueryPrecision> queries;
  // Per-level precision averaged over queries.
  std::array<double, kRecallLevels> mean_precision{};
  // Mean over the 9 levels, then over queries.
  double average_precision = 0.0;
};

double recall_level(int index);

// Cosine of raw term-frequency vectors. Throws InvalidArgument on a zero
// vector.
double cosine_score(const TermVector& doc, const TermVector& query);
double cosine_score(std::span<const TermCount> doc, std::span<const TermCount> query);

// Similarity between two factor-space representations.
using LatentSimilarity =
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double dot_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Cosine of two mixing-weight vectors of equal length.
double latent_score(const LatentRepresentation& doc, const LatentRepresentation& query);

// lambda * cos_score + (1 - lambda) * latent; lambda in [0, 1].
double combined_score(double lambda, double cos_score, double latent);

// Uniform average of per-model latent similarities, then lambda-combined
// with the term-matching cosine. doc_reps[i] and query_reps[i] come from
// the i-th model.
double plsi_star_score(std::span<const LatentRepresentation> doc_reps,
                       std::span<const LatentRepresentation> query_reps, double lambda,
                       double cos_score, const LatentSimilarity& similarity = cosine_similarity);

// Scores a (document, query index) pair.
using Scorer = std::function<double(DocId doc, std::size_t query)>;

// One ranked list per query over all n_docs documents. A scorer failure
// (plsa::Error) scores the pair as -infinity and logs a warning.
RetrievalRun rank_all(const Scorer& scorer, DocId n_docs,
                      std::span<const std::int64_t> query_ids,
                      RelevanceJudgments judgments = {});

// Interpolated precision at recall 0.1..0.9 per query, macro averaged.
// Queries without relevant documents are skipped with a warning; throws
// DataError if none are left.
PrSummary precision_recall(const RetrievalRun& run);

// "query_id doc_id rank score" per line, rank 1-based. doc_ids maps
// collection rows to external ids (identity when empty).
void write_run(std::ostream& out, const RetrievalRun& run,
               std::span<const std::int64_t> doc_ids = {});
// Recall levels against precision with per-query rows and the average.
void write_pr_table(std::ostream& out, const PrSummary& summary, const std::string& method);
// Two columns "recall precision" for plotting.
void write_pr_curve(std::ostream& out, const PrSummary& summary);

}  // namespace plsa

#endif  // PLSA_RETRIEVAL_H_
