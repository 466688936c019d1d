#ifndef PLSA_SRC_POSTERIOR_KERNEL_H_
#define PLSA_SRC_POSTERIOR_KERNEL_H_

#include <cmath>
#include <limits>

#include "plsa/aspect_model.h"
#include "plsa/util.h"

namespace plsa::internal {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

// Element-wise logs of the three parameter blocks, log 0 = -inf.
struct LogParams {
  Eigen::VectorXd prior;
  RowMatrix doc;
  RowMatrix word;

  explicit LogParams(const AspectModel& m)
      : prior(m.prior().unaryExpr(&safe_log)),
        doc(m.doc_given_z().unaryExpr(&safe_log)),
        word(m.word_given_z().unaryExpr(&safe_log)) {}
};

// Writes the normalized tempered posterior over K factors into `out` and
// returns log sum_z [P(z) P(d|z) P(w|z)]^beta. Works with max subtraction
// so small joint terms raised to beta do not underflow.
inline double tempered_posterior(const double* log_prior, const double* log_doc,
                                 const double* log_word, int k_count, double beta,
                                 double* out) {
  double top = kNegInf;
  for (int k = 0; k < k_count; ++k) {
    double s = log_prior[k] + log_doc[k] + log_word[k];
    s = (s == kNegInf) ? kNegInf : beta * s;
    out[k] = s;
    if (s > top) top = s;
  }
  if (top == kNegInf) {
    throw NumericalError("observation is unreachable: every joint term is zero");
  }
  double sum = 0.0;
  for (int k = 0; k < k_count; ++k) {
    out[k] = (out[k] == kNegInf) ? 0.0 : std::exp(out[k] - top);
    sum += out[k];
  }
  for (int k = 0; k < k_count; ++k) out[k] /= sum;
  return top + std::log(sum);
}

}  // namespace plsa::internal

#endif  // PLSA_SRC_POSTERIOR_KERNEL_H_
