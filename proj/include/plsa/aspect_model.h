#ifndef PLSA_ASPECT_MODEL_H_
#define PLSA_ASPECT_MODEL_H_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "plsa/corpus.h"

namespace plsa {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Probabilities below this are clamped before taking logs, so held-out
// events the model cannot generate cost a large finite penalty.
inline constexpr double kProbabilityFloor = 1e-12;

// Tolerance for the column-sum checks on model parameters.
inline constexpr double kNormalizationTolerance = 1e-10;

// K-factor aspect model in the symmetric parameterization
//
//   P(d, w) = sum_z P(z) P(d|z) P(w|z).
//
// doc_given_z is N x K (column k is P(.|z_k) over documents), word_given_z
// is M x K. In matrix form the joint is doc_given_z * diag(prior) *
// word_given_z^T. Asymmetric quantities such as P(d) and P(z|d) are always
// derived from these three blocks, never stored. Immutable once built.
class AspectModel {
 public:
  AspectModel() = default;

  // Throws InvalidArgument unless every distribution is nonnegative and
  // sums to one within kNormalizationTolerance.
  AspectModel(Eigen::VectorXd prior, RowMatrix doc_given_z, RowMatrix word_given_z);

  int n_factors() const { return static_cast<int>(prior_.size()); }
  DocId n_docs() const { return static_cast<DocId>(doc_given_z_.rows()); }
  TermId n_terms() const { return static_cast<TermId>(word_given_z_.rows()); }

  const Eigen::VectorXd& prior() const { return prior_; }
  const RowMatrix& doc_given_z() const { return doc_given_z_; }
  const RowMatrix& word_given_z() const { return word_given_z_; }

  friend bool operator==(const AspectModel& a, const AspectModel& b) {
    return a.prior_ == b.prior_ && a.doc_given_z_ == b.doc_given_z_ &&
           a.word_given_z_ == b.word_given_z_;
  }

 private:
  Eigen::VectorXd prior_;
  RowMatrix doc_given_z_;
  RowMatrix word_given_z_;
};

using PosteriorRow = Eigen::VectorXd;
using LatentRepresentation = Eigen::VectorXd;

// Variational posteriors for every nonzero cell of a CountMatrix: row i
// belongs to the i-th cell in CountMatrix::cells() order.
using PosteriorTable = RowMatrix;

AspectModel init_model(int n_factors, DocId n_docs, TermId n_terms, std::uint64_t seed);

// Tempered posterior P~(z; d, w) proportional to [P(z) P(d|z) P(w|z)]^beta,
// evaluated in the log domain. Factors whose joint term is exactly zero
// keep zero weight for every beta, including beta = 0. Throws
// NumericalError when all K joint terms vanish.
PosteriorRow posterior(const AspectModel& model, DocId d, TermId w, double beta);

// Posteriors for every nonzero cell of `counts`.
PosteriorTable posterior_table(const AspectModel& model, const CountMatrix& counts,
                               double beta);

// P(d) = sum_z P(z) P(d|z).
double doc_prob(const AspectModel& model, DocId d);

// Mixing weights P(z|d) obtained by Bayes' rule. Throws NumericalError
// when P(d) = 0.
LatentRepresentation factor_given_doc(const AspectModel& model, DocId d);

// P(w|d) = sum_z P(w|z) P(z|d), a length-M distribution.
Eigen::VectorXd word_given_doc(const AspectModel& model, DocId d);

double joint_prob(const AspectModel& model, DocId d, TermId w);

inline constexpr std::int64_t kDefaultMaxJointCells = 10'000'000;

// Dense N x M joint distribution. Throws InvalidArgument when N * M
// exceeds max_cells.
RowMatrix joint_matrix(const AspectModel& model,
                       std::int64_t max_cells = kDefaultMaxJointCells);

// sum_{d,w} n(d,w) log P(d,w) in nats, with P clamped at kProbabilityFloor.
double log_likelihood(const AspectModel& model, const CountMatrix& counts);

// exp(-sum n log Q / sum n) with Q = P(w|d) when conditional, else P(d,w).
double perplexity(const AspectModel& model, const CountMatrix& counts, bool conditional);

// K = 1 model with P(d) and P(w) proportional to the marginal counts.
AspectModel unigram_baseline(const CountMatrix& counts);

// Free energy of the aspect model for given variational posteriors:
//
//   F = -beta sum n sum_z P~ log[P(d|z) P(w|z) P(z)] + sum n sum_z P~ log P~
//
// with 0 log 0 = 0. Throws NumericalError if P~ > 0 where the joint term is 0.
double free_energy(const AspectModel& model, const CountMatrix& counts,
                   const PosteriorTable& posteriors, double beta);

// Free energy minimized over the posteriors, -sum n log sum_z J^beta.
// Equals -log_likelihood (without flooring) at beta = 1.
double tempered_free_energy(const AspectModel& model, const CountMatrix& counts,
                            double beta);

struct RankedTerm {
  TermId term;
  double prob;
};

// Most probable words of factor z, descending, ties by ascending term id.
std::vector<RankedTerm> top_words(const AspectModel& model, int z, int count);

void check_dimensions(const AspectModel& model, const CountMatrix& counts);

}  // namespace plsa

#endif  // PLSA_ASPECT_MODEL_H_
