#include "plsa/lsa.h"

#include <algorithm>
#include <random>
#include <tuple>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "plsa/util.h"

namespace plsa {
namespace {

Eigen::SparseMatrix<double> sparse(const Eigen::MatrixXd& dense) {
  return dense.sparseView();
}

Eigen::MatrixXd random_integer_matrix(Rng& rng, int rows, int cols, int max_value = 5) {
  Eigen::MatrixXd a(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) a(r, c) = static_cast<double>(rng() % (max_value + 1));
  }
  return a;
}

Eigen::MatrixXd reconstruct(const SvdDecomposition& d) {
  return d.u * d.sigma.asDiagonal() * d.v.transpose();
}

void expect_valid(const SvdDecomposition& d, const Eigen::MatrixXd& a) {
  const int k = d.rank();
  ASSERT_EQ(d.u.rows(), a.rows());
  ASSERT_EQ(d.v.rows(), a.cols());
  ASSERT_EQ(d.u.cols(), k);
  ASSERT_EQ(d.v.cols(), k);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(k, k);
  EXPECT_LT((d.u.transpose() * d.u - eye).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((d.v.transpose() * d.v - eye).cwiseAbs().maxCoeff(), 1e-8);
  for (int i = 0; i < k; ++i) {
    EXPECT_GE(d.sigma[i], 0.0);
    if (i > 0) EXPECT_LE(d.sigma[i], d.sigma[i - 1]);
    // Residual of each triplet in both directions.
    EXPECT_LT((a * d.v.col(i) - d.sigma[i] * d.u.col(i)).norm(), 1e-8 * std::max(1.0, a.norm()));
    EXPECT_LT((a.transpose() * d.u.col(i) - d.sigma[i] * d.v.col(i)).norm(),
              1e-8 * std::max(1.0, a.norm()));
  }
}

TEST(TruncatedSvdTest, Diagonal) {
  Eigen::MatrixXd a = Eigen::Vector3d(5, 3, 1).asDiagonal();
  auto d = truncated_svd(sparse(a), 3);
  ASSERT_EQ(d.rank(), 3);
  EXPECT_NEAR(d.sigma[0], 5.0, 1e-12);
  EXPECT_NEAR(d.sigma[1], 3.0, 1e-12);
  EXPECT_NEAR(d.sigma[2], 1.0, 1e-12);
  expect_valid(d, a);
}

TEST(TruncatedSvdTest, TwoByTwoHandCase) {
  // NtN = [[25,0],[0,0]], so sigma = 5 with right vector e1.
  Eigen::MatrixXd a(2, 2);
  a << 3, 0,
       4, 0;
  auto d = truncated_svd(sparse(a), 1);
  EXPECT_NEAR(d.sigma[0], 5.0, 1e-12);
  EXPECT_NEAR(d.v(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(d.v(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(d.u(0, 0), 0.6, 1e-12);
  EXPECT_NEAR(d.u(1, 0), 0.8, 1e-12);
}

TEST(TruncatedSvdTest, RankOneReconstruction) {
  Eigen::VectorXd x(4), y(6);
  x << 1, 2, 0, 3;
  y << 2, 1, 1, 0, 4, 1;
  Eigen::MatrixXd a = x * y.transpose();
  auto d = truncated_svd(sparse(a), 1);
  EXPECT_LT((reconstruct(d) - a).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(TruncatedSvdTest, SingularValuesArePrefixOfFullSvd) {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const int rows = 2 + static_cast<int>(rng() % 9);
    const int cols = 2 + static_cast<int>(rng() % 9);
    Eigen::MatrixXd a = random_integer_matrix(rng, rows, cols);
    if (a.norm() == 0.0) continue;
    Eigen::JacobiSVD<Eigen::MatrixXd> full(a);
    const int k = 1 + static_cast<int>(rng() % std::min(rows, cols));
    auto d = truncated_svd(sparse(a), k);
    for (int i = 0; i < k; ++i) {
      EXPECT_NEAR(d.sigma[i], full.singularValues()[i], 1e-8) << rows << "x" << cols;
    }
    expect_valid(d, a);
  }
}

TEST(TruncatedSvdTest, EckartYoungSpotCheck) {
  Rng rng(2);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd a = random_integer_matrix(rng, 4, 4);
    for (int k = 1; k <= 3; ++k) {
      const double best = (a - reconstruct(truncated_svd(sparse(a), k))).norm();
      for (int draw = 0; draw < 1000; ++draw) {
        Eigen::MatrixXd b(4, k), c(k, 4);
        for (int i = 0; i < b.size(); ++i) b.data()[i] = normal(rng);
        for (int i = 0; i < c.size(); ++i) c.data()[i] = normal(rng);
        ASSERT_LE(best, (a - b * c).norm() + 1e-12);
      }
    }
  }
}

TEST(TruncatedSvdTest, SignConvention) {
  Rng rng(3);
  Eigen::MatrixXd a = random_integer_matrix(rng, 6, 5);
  auto d = truncated_svd(sparse(a), 4);
  for (int i = 0; i < d.rank(); ++i) {
    Eigen::Index at = 0;
    d.v.col(i).cwiseAbs().maxCoeff(&at);
    EXPECT_GT(d.v(at, i), 0.0);
  }
  auto again = truncated_svd(sparse(a), 4);
  EXPECT_EQ(d.v, again.v);
  EXPECT_EQ(d.u, again.u);
}

TEST(TruncatedSvdTest, WideTallAndRankDeficient) {
  Rng rng(4);
  Eigen::MatrixXd wide = random_integer_matrix(rng, 3, 40);
  expect_valid(truncated_svd(sparse(wide), 3), wide);
  Eigen::MatrixXd tall = random_integer_matrix(rng, 40, 3);
  expect_valid(truncated_svd(sparse(tall), 3), tall);

  // Rank 2 matrix asked for 4 triplets: trailing singular values vanish but
  // the returned vectors still have to be orthonormal.
  Eigen::MatrixXd x = random_integer_matrix(rng, 7, 2);
  Eigen::MatrixXd y = random_integer_matrix(rng, 2, 6);
  Eigen::MatrixXd deficient = x * y;
  auto d = truncated_svd(sparse(deficient), 4);
  expect_valid(d, deficient);
  EXPECT_LT(d.sigma[2], 1e-8);
  EXPECT_LT(d.sigma[3], 1e-8);
}

TEST(TruncatedSvdTest, LargerSparseMatrix) {
  Rng rng(5);
  std::vector<CountTriple> triples;
  for (int d = 0; d < 300; ++d) {
    for (int j = 0; j < 8; ++j) {
      triples.push_back({d, static_cast<TermId>(rng() % 120), 1});
    }
  }
  // CountMatrix rejects duplicate cells.
  std::sort(triples.begin(), triples.end(), [](const auto& a, const auto& b) {
    return std::tie(a.doc, a.term) < std::tie(b.doc, b.term);
  });
  triples.erase(std::unique(triples.begin(), triples.end(),
                            [](const auto& a, const auto& b) {
                              return a.doc == b.doc && a.term == b.term;
                            }),
                triples.end());
  CountMatrix counts(300, 120, triples);
  Eigen::MatrixXd dense = Eigen::MatrixXd(to_sparse(counts));
  auto d = truncated_svd(counts, 10);
  expect_valid(d, dense);
  Eigen::JacobiSVD<Eigen::MatrixXd> full(dense);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(d.sigma[i], full.singularValues()[i], 1e-8);
}

TEST(TruncatedSvdTest, RankOutOfRange) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(3, 2);
  EXPECT_THROW(truncated_svd(sparse(a), 0), InvalidArgument);
  EXPECT_THROW(truncated_svd(sparse(a), 3), InvalidArgument);
  EXPECT_NO_THROW(truncated_svd(sparse(a), 2));
}

TEST(TruncatedSvdTest, ToSparseMatchesCounts) {
  CountMatrix counts(2, 3, {{0, 1, 4}, {1, 0, 2}, {1, 2, 7}});
  Eigen::MatrixXd dense = Eigen::MatrixXd(to_sparse(counts));
  Eigen::MatrixXd expected(2, 3);
  expected << 0, 4, 0,
              2, 0, 7;
  EXPECT_EQ(dense, expected);
}

TermVector row_vector(const Eigen::MatrixXd& a, int r) {
  TermVector q;
  for (int c = 0; c < a.cols(); ++c) {
    if (a(r, c) != 0.0) q.push_back({c, static_cast<Count>(a(r, c))});
  }
  return q;
}

TEST(LsiFoldInTest, FullRankReproducesDocumentRows) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd a = random_integer_matrix(rng, 5, 7);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    const int r = static_cast<int>(lu.rank());
    if (r == 0) continue;
    auto d = truncated_svd(sparse(a), r);
    Eigen::MatrixXd coords = lsi_doc_coords(d);
    for (int row = 0; row < 5; ++row) {
      TermVector q = row_vector(a, row);
      if (q.empty()) continue;
      Eigen::VectorXd folded = lsi_fold_in(d, q);
      EXPECT_LT((folded.transpose() - coords.row(row)).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(LsiFoldInTest, RankOneCoordinatesFollowRowScale) {
  Eigen::VectorXd x(3), y(4);
  x << 1, 2, 4;
  y << 1, 0, 3, 2;
  Eigen::MatrixXd a = x * y.transpose();
  Eigen::MatrixXd coords = lsi_doc_coords(truncated_svd(sparse(a), 1));
  for (int d = 0; d < 3; ++d) {
    EXPECT_NEAR(coords(d, 0) / x[d], coords(0, 0) / x[0], 1e-10);
  }
}

TEST(LsiFoldInTest, OrthogonalQueryIsNearZero) {
  // Term 3 never occurs, so it is orthogonal to every retained right vector.
  Eigen::MatrixXd a(3, 4);
  a << 2, 1, 0, 0,
       0, 3, 1, 0,
       1, 0, 2, 0;
  auto d = truncated_svd(sparse(a), 2);
  Eigen::VectorXd folded = lsi_fold_in(d, {{3, 5}});
  EXPECT_LT(folded.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(LsiFoldInTest, EmptyQueryIsAnError) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(2, 2);
  auto d = truncated_svd(sparse(a), 1);
  EXPECT_THROW(lsi_fold_in(d, {}), DataError);
}

}  // namespace
}  // namespace plsa
