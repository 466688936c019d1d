#include "plsa/aspect_model.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "posterior_kernel.h"

namespace plsa {

namespace {

using internal::kNegInf;
using internal::safe_log;

void check_distribution(const Eigen::Ref<const Eigen::VectorXd>& v, const char* what) {
  if ((v.array() < 0.0).any() || !v.allFinite()) {
    throw InvalidArgument(std::string(what) + " has negative or non-finite entries");
  }
  if (std::abs(v.sum() - 1.0) > kNormalizationTolerance) {
    throw InvalidArgument(std::string(what) + " does not sum to one");
  }
}

Eigen::VectorXd noisy_uniform(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * unit_uniform(rng);
  return v / v.sum();
}

void check_doc(const AspectModel& model, DocId d) {
  if (d < 0 || d >= model.n_docs()) {
    throw InvalidArgument("document index " + std::to_string(d) + " out of range");
  }
}

void check_term(const AspectModel& model, TermId w) {
  if (w < 0 || w >= model.n_terms()) {
    throw InvalidArgument("term index " + std::to_string(w) + " out of range");
  }
}

// P(w|d) for one cell, or 0 when the document has no mass.
double conditional_prob(const AspectModel& model, DocId d, TermId w, double p_doc) {
  if (p_doc <= 0.0) return 0.0;
  return joint_prob(model, d, w) / p_doc;
}

}  // namespace

AspectModel::AspectModel(Eigen::VectorXd prior, RowMatrix doc_given_z,
                         RowMatrix word_given_z)
    : prior_(std::move(prior)),
      doc_given_z_(std::move(doc_given_z)),
      word_given_z_(std::move(word_given_z)) {
  const auto k = prior_.size();
  if (k < 1) throw InvalidArgument("aspect model needs at least one factor");
  if (doc_given_z_.cols() != k || word_given_z_.cols() != k) {
    throw InvalidArgument("parameter blocks disagree on the number of factors");
  }
  if (doc_given_z_.rows() < 1 || word_given_z_.rows() < 1) {
    throw InvalidArgument("aspect model needs at least one document and one term");
  }
  check_distribution(prior_, "P(z)");
  for (Eigen::Index z = 0; z < k; ++z) {
    check_distribution(doc_given_z_.col(z), "P(d|z)");
    check_distribution(word_given_z_.col(z), "P(w|z)");
  }
}

AspectModel init_model(int n_factors, DocId n_docs, TermId n_terms, std::uint64_t seed) {
  if (n_factors < 1 || n_docs < 1 || n_terms < 1) {
    throw InvalidArgument("init_model needs K, N, M >= 1");
  }
  Rng rng(seed);
  Eigen::VectorXd prior = noisy_uniform(n_factors, rng);
  RowMatrix doc(n_docs, n_factors);
  RowMatrix word(n_terms, n_factors);
  for (int z = 0; z < n_factors; ++z) doc.col(z) = noisy_uniform(n_docs, rng);
  for (int z = 0; z < n_factors; ++z) word.col(z) = noisy_uniform(n_terms, rng);
  return AspectModel(std::move(prior), std::move(doc), std::move(word));
}

PosteriorRow posterior(const AspectModel& model, DocId d, TermId w, double beta) {
  check_doc(model, d);
  check_term(model, w);
  if (!(beta >= 0.0)) throw InvalidArgument("beta must be >= 0");
  const int k = model.n_factors();
  Eigen::VectorXd lp = model.prior().unaryExpr(&safe_log);
  Eigen::VectorXd ld = model.doc_given_z().row(d).transpose().unaryExpr(&safe_log);
  Eigen::VectorXd lw = model.word_given_z().row(w).transpose().unaryExpr(&safe_log);
  PosteriorRow out(k);
  internal::tempered_posterior(lp.data(), ld.data(), lw.data(), k, beta, out.data());
  return out;
}

PosteriorTable posterior_table(const AspectModel& model, const CountMatrix& counts,
                               double beta) {
  check_dimensions(model, counts);
  if (!(beta >= 0.0)) throw InvalidArgument("beta must be >= 0");
  const int k = model.n_factors();
  internal::LogParams logs(model);
  PosteriorTable table(static_cast<Eigen::Index>(counts.nnz()), k);
  for (DocId d = 0; d < counts.n_docs(); ++d) {
    std::size_t i = counts.row_offset(d);
    for (const auto& cell : counts.row(d)) {
      internal::tempered_posterior(logs.prior.data(), logs.doc.row(d).data(),
                                   logs.word.row(cell.term).data(), k, beta,
                                   table.row(static_cast<Eigen::Index>(i)).data());
      ++i;
    }
  }
  return table;
}

double doc_prob(const AspectModel& model, DocId d) {
  check_doc(model, d);
  return model.doc_given_z().row(d).dot(model.prior());
}

LatentRepresentation factor_given_doc(const AspectModel& model, DocId d) {
  const double p_doc = doc_prob(model, d);
  if (!(p_doc > 0.0)) {
    throw NumericalError("document " + std::to_string(d) + " has zero probability");
  }
  Eigen::VectorXd weights =
      model.prior().cwiseProduct(model.doc_given_z().row(d).transpose());
  return weights / weights.sum();
}

Eigen::VectorXd word_given_doc(const AspectModel& model, DocId d) {
  return model.word_given_z() * factor_given_doc(model, d);
}

double joint_prob(const AspectModel& model, DocId d, TermId w) {
  check_doc(model, d);
  check_term(model, w);
  double p = 0.0;
  for (int z = 0; z < model.n_factors(); ++z) {
    p += model.prior()[z] * model.doc_given_z()(d, z) * model.word_given_z()(w, z);
  }
  return p;
}

RowMatrix joint_matrix(const AspectModel& model, std::int64_t max_cells) {
  const std::int64_t cells =
      static_cast<std::int64_t>(model.n_docs()) * static_cast<std::int64_t>(model.n_terms());
  if (cells > max_cells) {
    throw InvalidArgument("joint matrix has " + std::to_string(cells) +
                          " cells, above the limit of " + std::to_string(max_cells));
  }
  return model.doc_given_z() * model.prior().asDiagonal() *
         model.word_given_z().transpose();
}

double log_likelihood(const AspectModel& model, const CountMatrix& counts) {
  check_dimensions(model, counts);
  double ll = 0.0;
  for (DocId d = 0; d < counts.n_docs(); ++d) {
    for (const auto& cell : counts.row(d)) {
      const double p = std::max(joint_prob(model, d, cell.term), kProbabilityFloor);
      ll += static_cast<double>(cell.count) * std::log(p);
    }
  }
  return ll;
}

double perplexity(const AspectModel& model, const CountMatrix& counts, bool conditional) {
  check_dimensions(model, counts);
  if (counts.total() <= 0) throw InvalidArgument("perplexity needs at least one token");
  if (!conditional) {
    return std::exp(-log_likelihood(model, counts) / static_cast<double>(counts.total()));
  }
  double ll = 0.0;
  for (DocId d = 0; d < counts.n_docs(); ++d) {
    auto row = counts.row(d);
    if (row.empty()) continue;
    const double p_doc = doc_prob(model, d);
    for (const auto& cell : row) {
      const double q = std::max(conditional_prob(model, d, cell.term, p_doc), kProbabilityFloor);
      ll += static_cast<double>(cell.count) * std::log(q);
    }
  }
  return std::exp(-ll / static_cast<double>(counts.total()));
}

AspectModel unigram_baseline(const CountMatrix& counts) {
  if (counts.total() <= 0) throw DataError("unigram baseline needs at least one token");
  const double total = static_cast<double>(counts.total());
  RowMatrix doc(counts.n_docs(), 1);
  RowMatrix word(counts.n_terms(), 1);
  auto rows = counts.row_sums();
  auto cols = counts.col_sums();
  for (DocId d = 0; d < counts.n_docs(); ++d) doc(d, 0) = static_cast<double>(rows[d]) / total;
  for (TermId w = 0; w < counts.n_terms(); ++w) word(w, 0) = static_cast<double>(cols[w]) / total;
  return AspectModel(Eigen::VectorXd::Ones(1), std::move(doc), std::move(word));
}

double free_energy(const AspectModel& model, const CountMatrix& counts,
                   const PosteriorTable& posteriors, double beta) {
  check_dimensions(model, counts);
  if (!(beta > 0.0)) throw InvalidArgument("free energy needs beta > 0");
  const int k = model.n_factors();
  if (posteriors.rows() != static_cast<Eigen::Index>(counts.nnz()) || posteriors.cols() != k) {
    throw InvalidArgument("posterior table does not match the nonzero cells");
  }
  internal::LogParams logs(model);
  double energy = 0.0;
  double entropy = 0.0;
  for (DocId d = 0; d < counts.n_docs(); ++d) {
    std::size_t i = counts.row_offset(d);
    for (const auto& cell : counts.row(d)) {
      const double n = static_cast<double>(cell.count);
      for (int z = 0; z < k; ++z) {
        const double q = posteriors(static_cast<Eigen::Index>(i), z);
        if (q < 0.0) throw InvalidArgument("posterior entries must be nonnegative");
        if (q == 0.0) continue;
        const double log_joint = logs.prior[z] + logs.doc(d, z) + logs.word(cell.term, z);
        if (log_joint == kNegInf) {
          throw NumericalError("posterior puts mass on a factor with zero joint probability");
        }
        energy += n * q * log_joint;
        entropy += n * q * std::log(q);
      }
      ++i;
    }
  }
  return -beta * energy + entropy;
}

double tempered_free_energy(const AspectModel& model, const CountMatrix& counts,
                            double beta) {
  check_dimensions(model, counts);
  if (!(beta > 0.0)) throw InvalidArgument("free energy needs beta > 0");
  const int k = model.n_factors();
  internal::LogParams logs(model);
  std::vector<double> scratch(k);
  double f = 0.0;
  for (DocId d = 0; d < counts.n_docs(); ++d) {
    for (const auto& cell : counts.row(d)) {
      f -= static_cast<double>(cell.count) *
           internal::tempered_posterior(logs.prior.data(), logs.doc.row(d).data(),
                                        logs.word.row(cell.term).data(), k, beta,
                                        scratch.data());
    }
  }
  return f;
}

std::vector<RankedTerm> top_words(const AspectModel& model, int z, int count) {
  if (z < 0 || z >= model.n_factors()) throw InvalidArgument("factor index out of range");
  if (count < 1) throw InvalidArgument("top_words needs count >= 1");
  std::vector<RankedTerm> terms(model.n_terms());
  for (TermId w = 0; w < model.n_terms(); ++w) terms[w] = {w, model.word_given_z()(w, z)};
  const auto n = std::min<std::size_t>(terms.size(), static_cast<std::size_t>(count));
  std::partial_sort(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(n), terms.end(),
                    [](const RankedTerm& a, const RankedTerm& b) {
                      return a.prob != b.prob ? a.prob > b.prob : a.term < b.term;
                    });
  terms.resize(n);
  return terms;
}

void check_dimensions(const AspectModel& model, const CountMatrix& counts) {
  if (model.n_docs() != counts.n_docs() || model.n_terms() != counts.n_terms()) {
    throw DataError("model is " + std::to_string(model.n_docs()) + "x" +
                    std::to_string(model.n_terms()) + " but counts are " +
                    std::to_string(counts.n_docs()) + "x" + std::to_string(counts.n_terms()));
  }
}

}  // namespace plsa
