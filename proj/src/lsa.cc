#include "plsa/lsa.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "plsa/util.h"

namespace plsa {

namespace {

using Sparse = Eigen::SparseMatrix<double>;

constexpr std::uint64_t kStartSeed = 0x5eedf00dULL;

// Removes the components of `x` along the first `n` columns of `basis`.
// Two passes of classical Gram-Schmidt keep orthogonality at working
// precision.
void reorthogonalize(const Eigen::MatrixXd& basis, Eigen::Index n, Eigen::VectorXd& x) {
  if (n == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::VectorXd coeffs = basis.leftCols(n).transpose() * x;
    x.noalias() -= basis.leftCols(n) * coeffs;
  }
}

// Unit vector orthogonal to the first `n` columns of `basis`, used to
// restart the recurrence after an invariant subspace has been exhausted.
Eigen::VectorXd random_orthogonal(const Eigen::MatrixXd& basis, Eigen::Index n, Rng& rng) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::VectorXd x(basis.rows());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = unit_uniform(rng) - 0.5;
    reorthogonalize(basis, n, x);
    const double norm = x.norm();
    if (norm > 1e-8) return x / norm;
  }
  throw NumericalError("Lanczos restart failed to find an orthogonal direction");
}

struct Bidiagonalization {
  Eigen::MatrixXd left;   // n x steps
  Eigen::MatrixXd right;  // m x steps
  Eigen::VectorXd alpha;  // diagonal
  Eigen::VectorXd beta;   // superdiagonal, beta[j] couples columns j and j+1
};

// Golub-Kahan-Lanczos bidiagonalization of an n x m matrix (n >= m) with
// full reorthogonalization: a * right = left * B for upper bidiagonal B.
Bidiagonalization bidiagonalize(const Sparse& a, const Sparse& at, Eigen::Index steps,
                                double breakdown) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = a.cols();
  Bidiagonalization bd{Eigen::MatrixXd::Zero(n, steps), Eigen::MatrixXd::Zero(m, steps),
                       Eigen::VectorXd::Zero(steps), Eigen::VectorXd::Zero(steps)};
  Rng rng(kStartSeed);
  bd.right.col(0) = random_orthogonal(bd.right, 0, rng);
  for (Eigen::Index j = 0; j < steps; ++j) {
    Eigen::VectorXd p = a * bd.right.col(j);
    if (j > 0) p -= bd.beta[j - 1] * bd.left.col(j - 1);
    reorthogonalize(bd.left, j, p);
    double alpha = p.norm();
    if (alpha <= breakdown) {
      alpha = 0.0;
      p = random_orthogonal(bd.left, j, rng);
    } else {
      p /= alpha;
    }
    bd.alpha[j] = alpha;
    bd.left.col(j) = p;
    if (j + 1 == steps) break;

    Eigen::VectorXd q = at * bd.left.col(j) - alpha * bd.right.col(j);
    reorthogonalize(bd.right, j + 1, q);
    double beta = q.norm();
    if (beta <= breakdown) {
      beta = 0.0;
      q = random_orthogonal(bd.right, j + 1, rng);
    } else {
      q /= beta;
    }
    bd.beta[j] = beta;
    bd.right.col(j + 1) = q;
  }
  return bd;
}

double max_residual(const Sparse& a, const Sparse& at, const Eigen::MatrixXd& u,
                    const Eigen::VectorXd& sigma, const Eigen::MatrixXd& v) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < sigma.size(); ++j) {
    worst = std::max(worst, (a * v.col(j) - sigma[j] * u.col(j)).norm());
    worst = std::max(worst, (at * u.col(j) - sigma[j] * v.col(j)).norm());
  }
  return worst;
}

}  // namespace

Sparse to_sparse(const CountMatrix& counts) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(counts.nnz());
  for (const auto& t : counts.triples()) {
    entries.emplace_back(t.doc, t.term, static_cast<double>(t.count));
  }
  Sparse m(counts.n_docs(), counts.n_terms());
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

SvdDecomposition truncated_svd(const CountMatrix& counts, int k) {
  return truncated_svd(to_sparse(counts), k);
}

SvdDecomposition truncated_svd(const Sparse& matrix, int k) {
  const Eigen::Index full = std::min(matrix.rows(), matrix.cols());
  if (k < 1 || k > full) {
    throw InvalidArgument("truncated_svd needs 1 <= K <= min(N, M) = " + std::to_string(full));
  }
  // Work on the orientation whose right space is the smaller one; a full
  // run then spans it completely and the decomposition becomes exact.
  const bool transposed = matrix.rows() < matrix.cols();
  const Sparse a = transposed ? Sparse(matrix.transpose()) : matrix;
  const Sparse at = a.transpose();
  const double breakdown = 1e-12 * std::max(1.0, a.norm());

  Eigen::Index steps = std::min<Eigen::Index>(full, std::max<Eigen::Index>(2 * k + 10, 20));
  SvdDecomposition out;
  while (true) {
    const Bidiagonalization bd = bidiagonalize(a, at, steps, breakdown);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(steps, steps);
    b.diagonal() = bd.alpha;
    for (Eigen::Index j = 0; j + 1 < steps; ++j) b(j, j + 1) = bd.beta[j];
    Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.u = bd.left * svd.matrixU().leftCols(k);
    out.v = bd.right * svd.matrixV().leftCols(k);
    out.sigma = svd.singularValues().head(k);
    const double residual = max_residual(a, at, out.u, out.sigma, out.v);
    if (residual <= kSvdResidualTolerance) break;
    if (steps == full) {
      warn("truncated_svd: residual " + format_double(residual) +
           " above tolerance after a full Lanczos run");
      break;
    }
    steps = std::min(full, 2 * steps);
  }
  if (transposed) std::swap(out.u, out.v);

  for (Eigen::Index j = 0; j < out.v.cols(); ++j) {
    Eigen::Index arg = 0;
    out.v.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.v(arg, j) < 0.0) {
      out.v.col(j) *= -1.0;
      out.u.col(j) *= -1.0;
    }
  }
  return out;
}

Eigen::MatrixXd lsi_doc_coords(const SvdDecomposition& decomp) {
  return decomp.u * decomp.sigma.asDiagonal();
}

Eigen::VectorXd lsi_fold_in(const SvdDecomposition& decomp, const TermVector& query) {
  Eigen::VectorXd coords = Eigen::VectorXd::Zero(decomp.rank());
  bool any = false;
  for (const auto& tc : query) {
    if (tc.term < 0 || tc.term >= decomp.v.rows() || tc.count == 0) continue;
    coords += static_cast<double>(tc.count) * decomp.v.row(tc.term).transpose();
    any = true;
  }
  if (!any) throw DataError("cannot fold in an empty query");
  return coords;
}

}  // namespace plsa
