// Test-only helpers: random fixtures, brute-force oracles and a synthetic
// corpus generator. Nothing here calls into the log-domain kernels the
// library uses, so the oracles stay independent of the code they check.
#ifndef PLSA_TESTS_TEST_SUPPORT_H_
#define PLSA_TESTS_TEST_SUPPORT_H_

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "plsa/aspect_model.h"
#include "plsa/corpus.h"
#include "plsa/util.h"

namespace plsa::testing {

using Dense = std::vector<std::vector<double>>;

// Random sparse counts with at most nnz_max nonzero cells, every document
// and term hit at least once when nnz_max allows.
inline CountMatrix random_counts(Rng& rng, int n_docs, int n_terms, int nnz_max,
                                 int max_count = 5) {
  std::vector<CountTriple> triples;
  std::vector<std::vector<bool>> used(n_docs, std::vector<bool>(n_terms, false));
  auto add = [&](int d, int w) {
    if (used[d][w]) return;
    used[d][w] = true;
    triples.push_back({d, w, 1 + static_cast<Count>(rng() % max_count)});
  };
  for (int d = 0; d < n_docs && static_cast<int>(triples.size()) < nnz_max; ++d) {
    add(d, static_cast<int>(rng() % n_terms));
  }
  for (int w = 0; w < n_terms && static_cast<int>(triples.size()) < nnz_max; ++w) {
    add(static_cast<int>(rng() % n_docs), w);
  }
  const int target = std::min(nnz_max, n_docs * n_terms);
  int guard = 0;
  while (static_cast<int>(triples.size()) < target && guard++ < 100 * target) {
    add(static_cast<int>(rng() % n_docs), static_cast<int>(rng() % n_terms));
  }
  return CountMatrix(n_docs, n_terms, std::move(triples));
}

inline Eigen::VectorXd random_simplex(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 0.05 + unit_uniform(rng);
  return v / v.sum();
}

inline AspectModel random_model(Rng& rng, int k, int n_docs, int n_terms) {
  Eigen::VectorXd prior = random_simplex(rng, k);
  RowMatrix doc(n_docs, k);
  RowMatrix word(n_terms, k);
  for (int z = 0; z < k; ++z) doc.col(z) = random_simplex(rng, n_docs);
  for (int z = 0; z < k; ++z) word.col(z) = random_simplex(rng, n_terms);
  return AspectModel(prior, doc, word);
}

inline Dense dense_counts(const CountMatrix& counts) {
  Dense n(counts.n_docs(), std::vector<double>(counts.n_terms(), 0.0));
  for (const auto& t : counts.triples()) n[t.doc][t.term] = static_cast<double>(t.count);
  return n;
}

// P(d,w) by the triple loop over (d, w, z).
inline Dense brute_joint(const AspectModel& m) {
  Dense p(m.n_docs(), std::vector<double>(m.n_terms(), 0.0));
  for (int d = 0; d < m.n_docs(); ++d) {
    for (int w = 0; w < m.n_terms(); ++w) {
      for (int z = 0; z < m.n_factors(); ++z) {
        p[d][w] += m.prior()[z] * m.doc_given_z()(d, z) * m.word_given_z()(w, z);
      }
    }
  }
  return p;
}

// Posterior by direct powering and normalization in the linear domain.
inline std::vector<double> brute_posterior(const AspectModel& m, int d, int w, double beta) {
  std::vector<double> q(m.n_factors());
  double sum = 0.0;
  for (int z = 0; z < m.n_factors(); ++z) {
    const double j = m.prior()[z] * m.doc_given_z()(d, z) * m.word_given_z()(w, z);
    q[z] = j > 0.0 ? std::pow(j, beta) : 0.0;
    sum += q[z];
  }
  for (auto& v : q) v /= sum;
  return q;
}

inline double brute_log_likelihood(const AspectModel& m, const CountMatrix& counts) {
  const Dense n = dense_counts(counts);
  const Dense p = brute_joint(m);
  double ll = 0.0;
  for (int d = 0; d < m.n_docs(); ++d) {
    for (int w = 0; w < m.n_terms(); ++w) {
      if (n[d][w] > 0.0) ll += n[d][w] * std::log(std::max(p[d][w], kProbabilityFloor));
    }
  }
  return ll;
}

inline double brute_free_energy(const AspectModel& m, const CountMatrix& counts, double beta) {
  const Dense n = dense_counts(counts);
  double f = 0.0;
  for (int d = 0; d < m.n_docs(); ++d) {
    for (int w = 0; w < m.n_terms(); ++w) {
      if (n[d][w] == 0.0) continue;
      auto q = brute_posterior(m, d, w, beta);
      for (int z = 0; z < m.n_factors(); ++z) {
        if (q[z] == 0.0) continue;
        const double j = m.prior()[z] * m.doc_given_z()(d, z) * m.word_given_z()(w, z);
        f += -beta * n[d][w] * q[z] * std::log(j) + n[d][w] * q[z] * std::log(q[z]);
      }
    }
  }
  return f;
}

inline double entropy(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  }
  return h;
}

inline double max_abs_diff(const AspectModel& a, const AspectModel& b) {
  return std::max({(a.prior() - b.prior()).cwiseAbs().maxCoeff(),
                   (a.doc_given_z() - b.doc_given_z()).cwiseAbs().maxCoeff(),
                   (a.word_given_z() - b.word_given_z()).cwiseAbs().maxCoeff()});
}

// Synthetic corpus drawn from a known aspect model: every document mixes
// the factors with Dirichlet weights and emits tokens z ~ theta_d,
// w ~ phi_z.
struct SyntheticCorpus {
  CountMatrix counts;
  AspectModel generator;  // P(w|d) of this model is the true distribution
};

inline Eigen::VectorXd dirichlet(std::mt19937_64& rng, Eigen::Index n, double alpha) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  Eigen::VectorXd v(n);
  do {
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gamma(rng);
  } while (v.sum() <= 0.0);
  return v / v.sum();
}

inline std::size_t sample_index(std::mt19937_64& rng, const Eigen::VectorXd& p) {
  double u = unit_uniform(rng);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    u -= p[i];
    if (u < 0.0) return static_cast<std::size_t>(i);
  }
  return static_cast<std::size_t>(p.size() - 1);
}

inline SyntheticCorpus sample_corpus(int n_docs, int n_terms, int k, int tokens_per_doc,
                                     std::uint64_t seed, double word_alpha = 0.1,
                                     double mix_alpha = 0.3) {
  std::mt19937_64 rng(seed);
  RowMatrix phi(n_terms, k);
  for (int z = 0; z < k; ++z) {
    // Keep a little mass everywhere so every term stays reachable.
    Eigen::VectorXd p = dirichlet(rng, n_terms, word_alpha);
    phi.col(z) = 0.98 * p + Eigen::VectorXd::Constant(n_terms, 0.02 / n_terms);
  }
  RowMatrix theta(n_docs, k);
  std::vector<CountTriple> triples;
  Eigen::VectorXd lengths(n_docs);
  for (int d = 0; d < n_docs; ++d) {
    theta.row(d) = dirichlet(rng, k, mix_alpha).transpose();
    const int len = tokens_per_doc / 2 + static_cast<int>(rng() % (tokens_per_doc + 1));
    lengths[d] = len;
    std::vector<Count> row(n_terms, 0);
    Eigen::VectorXd mix = theta.row(d).transpose();
    for (int t = 0; t < len; ++t) {
      const auto z = sample_index(rng, mix);
      const auto w = sample_index(rng, phi.col(static_cast<Eigen::Index>(z)));
      ++row[w];
    }
    for (int w = 0; w < n_terms; ++w) {
      if (row[w] > 0) triples.push_back({d, w, row[w]});
    }
  }
  // Symmetric parameters with P(d) proportional to document length.
  Eigen::VectorXd p_doc = lengths / lengths.sum();
  Eigen::VectorXd prior = theta.transpose() * p_doc;
  RowMatrix doc(n_docs, k);
  for (int z = 0; z < k; ++z) {
    doc.col(z) = p_doc.cwiseProduct(theta.col(z)) / prior[z];
  }
  return {CountMatrix(n_docs, n_terms, std::move(triples)),
          AspectModel(prior / prior.sum(), doc, phi)};
}

}  // namespace plsa::testing

#endif  // PLSA_TESTS_TEST_SUPPORT_H_
