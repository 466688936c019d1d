#ifndef PLSA_LSA_H_
#define PLSA_LSA_H_

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "plsa/corpus.h"

namespace plsa {

// Rank-K truncated SVD, counts ~ U diag(sigma) V^T. U is N x K and V is M x K
// with orthonormal columns; sigma is descending. Each column of V has its
// largest-magnitude entry positive.
struct SvdDecomposition {
  Eigen::MatrixXd u;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd v;

  int rank() const { return static_cast<int>(sigma.size()); }
};

// Largest residual max(|A v - s u|, |A^T u - s v|) accepted per triplet.
inline constexpr double kSvdResidualTolerance = 1e-8;

Eigen::SparseMatrix<double> to_sparse(const CountMatrix& counts);

// Top-K singular triplets of the raw count matrix, computed by Lanczos
// bidiagonalization with full reorthogonalization. The Krylov space grows
// until every triplet meets kSvdResidualTolerance (or spans the full
// space). Requires 1 <= K <= min(N, M).
SvdDecomposition truncated_svd(const CountMatrix& counts, int k);
SvdDecomposition truncated_svd(const Eigen::SparseMatrix<double>& matrix, int k);

// Rows of U diag(sigma): document coordinates in the latent space.
Eigen::MatrixXd lsi_doc_coords(const SvdDecomposition& decomp);

// q^T V for a query count vector. Throws DataError when no query term falls
// inside the decomposition's vocabulary.
Eigen::VectorXd lsi_fold_in(const SvdDecomposition& decomp, const TermVector& query);

}  // namespace plsa

#endif  // PLSA_LSA_H_
