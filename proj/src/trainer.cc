#include "plsa/trainer.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <thread>

#include "posterior_kernel.h"
#include "plsa/util.h"

namespace plsa {

namespace {

// Cells are cut into contiguous document ranges of roughly equal size. The
// layout depends only on the data, never on the thread count.
constexpr std::size_t kCellsPerChunk = 16384;
constexpr std::size_t kMaxChunks = 8;

struct Chunk {
  DocId first_doc = 0;
  DocId end_doc = 0;
};

std::vector<Chunk> make_chunks(const CountMatrix& counts) {
  const std::size_t nnz = counts.nnz();
  const std::size_t n_chunks = std::clamp<std::size_t>(nnz / kCellsPerChunk, 1, kMaxChunks);
  std::vector<Chunk> chunks;
  DocId d = 0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    const std::size_t target = nnz * (c + 1) / n_chunks;
    Chunk chunk{d, d};
    while (chunk.end_doc < counts.n_docs() &&
           (c + 1 == n_chunks || counts.row_offset(chunk.end_doc) < target)) {
      ++chunk.end_doc;
    }
    d = chunk.end_doc;
    chunks.push_back(chunk);
  }
  return chunks;
}

template <typename Fn>
void run_parallel(std::size_t n_tasks, int threads, Fn&& fn) {
  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n_tasks);
  if (n_workers <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n_tasks);
  {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < n_workers; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n_tasks; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct ChunkAccumulator {
  RowMatrix word;  // M x K
  double free_energy = 0.0;
};

struct Evaluation {
  double train_perplexity;
  double heldout_perplexity;
  double free_energy;
};

class Session {
 public:
  Session(const CountMatrix& counts, int n_factors, const TemConfig& config)
      : config_(config) {
    config.validate();
    if (n_factors < 1) throw InvalidArgument("number of factors must be >= 1");
    if (counts.total() <= 0) throw DataError("cannot train on an empty count matrix");
    split_ = split_heldout(counts, config.heldout_fraction,
                           derive_seed(config.seed, "split"));
    if (split_.heldout.total() == 0 || split_.train.total() == 0) {
      throw DataError("corpus too small for a held-out split of " +
                      format_double(config.heldout_fraction));
    }
    initial_ = init_model(n_factors, counts.n_docs(), counts.n_terms(),
                          derive_seed(config.seed, "init"));
  }

  struct Phase {
    AspectModel best;
    double best_heldout;
    bool improved = false;
    bool total_cap = false;
  };

  // Iterates at `beta` from `start` for as long as each iteration lowers the
  // best held-out perplexity of the phase by more than the tolerance.
  Phase run_phase(const AspectModel& start, double start_heldout, double beta) {
    Phase phase{start, start_heldout};
    AspectModel current = start;
    for (int i = 0; i < config_.max_iters_per_beta; ++i) {
      if (iteration_ >= config_.max_total_iters) {
        phase.total_cap = true;
        break;
      }
      current = em_step(current, split_.train, beta, nullptr, config_.threads);
      ++iteration_;
      const Evaluation e = evaluate(current, beta);
      trace_.records.push_back({iteration_, beta, e.train_perplexity,
                                e.heldout_perplexity, e.free_energy});
      if (e.heldout_perplexity < phase.best_heldout * (1.0 - config_.improvement_tol)) {
        phase.best = current;
        phase.best_heldout = e.heldout_perplexity;
        phase.improved = true;
        best_iteration_ = iteration_;
      } else {
        return phase;
      }
    }
    if (iteration_ >= config_.max_total_iters) phase.total_cap = true;
    phase_cap_ = true;
    return phase;
  }

  FitResult fit(bool tempered) {
    // The random initialisation is never a candidate: the first step always
    // counts as an improvement.
    Phase em = run_phase(initial_, std::numeric_limits<double>::infinity(), 1.0);
    AspectModel best = em.best;
    double best_heldout = em.best_heldout;
    double best_beta = 1.0;
    int best_iteration = best_iteration_;
    StopReason reason = (phase_cap_ || em.total_cap) ? StopReason::kIterationCap
                                                     : StopReason::kHeldoutDeterioration;
    if (tempered && !em.total_cap) {
      double beta = 1.0;
      while (true) {
        beta *= config_.eta;
        if (beta < config_.beta_min) {
          reason = StopReason::kBetaFloor;
          break;
        }
        Phase ph = run_phase(best, best_heldout, beta);
        if (!ph.improved) {
          reason = ph.total_cap ? StopReason::kIterationCap
                                : StopReason::kHeldoutDeterioration;
          break;
        }
        best = std::move(ph.best);
        best_heldout = ph.best_heldout;
        best_beta = beta;
        best_iteration = best_iteration_;
        if (ph.total_cap) {
          reason = StopReason::kIterationCap;
          break;
        }
      }
    }
    trace_.stopping_reason = reason;
    trace_.best_beta = best_beta;
    trace_.best_iteration = best_iteration;
    trace_.best_heldout_perplexity = best_heldout;
    return {std::move(best), std::move(trace_)};
  }

 private:
  Evaluation evaluate(const AspectModel& model, double beta) const {
    return {perplexity(model, split_.train, true), perplexity(model, split_.heldout, true),
            tempered_free_energy(model, split_.train, beta)};
  }

  TemConfig config_;
  SplitPair split_;
  AspectModel initial_;
  TrainTrace trace_;
  int iteration_ = 0;
  int best_iteration_ = 0;
  bool phase_cap_ = false;
};

}  // namespace

void TemConfig::validate() const {
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("eta must lie in (0, 1)");
  if (!(beta_min > 0.0 && beta_min <= 1.0)) throw InvalidArgument("beta_min must lie in (0, 1]");
  if (max_iters_per_beta < 1) throw InvalidArgument("max_iters_per_beta must be >= 1");
  if (max_total_iters < 1) throw InvalidArgument("max_total_iters must be >= 1");
  if (!(improvement_tol > 0.0)) throw InvalidArgument("improvement_tol must be > 0");
  if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0)) {
    throw InvalidArgument("heldout_fraction must lie in (0, 1)");
  }
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kHeldoutDeterioration: return "heldout-deterioration";
    case StopReason::kBetaFloor: return "beta-floor";
    case StopReason::kIterationCap: return "iteration-cap";
  }
  return "unknown";
}

AspectModel em_step(const AspectModel& model, const CountMatrix& counts, double beta,
                    EmStepStats* stats, int threads) {
  check_dimensions(model, counts);
  if (!(beta > 0.0)) throw InvalidArgument("em_step needs beta > 0");
  const int k = model.n_factors();
  const internal::LogParams logs(model);
  const auto chunks = make_chunks(counts);

  RowMatrix doc_acc = RowMatrix::Zero(counts.n_docs(), k);
  std::vector<ChunkAccumulator> partial(chunks.size());

  run_parallel(chunks.size(), threads, [&](std::size_t c) {
    ChunkAccumulator& acc = partial[c];
    acc.word = RowMatrix::Zero(counts.n_terms(), k);
    std::vector<double> post(k);
    for (DocId d = chunks[c].first_doc; d < chunks[c].end_doc; ++d) {
      double* doc_row = doc_acc.row(d).data();
      for (const auto& cell : counts.row(d)) {
        const double n = static_cast<double>(cell.count);
        const double log_norm = internal::tempered_posterior(
            logs.prior.data(), logs.doc.row(d).data(), logs.word.row(cell.term).data(), k,
            beta, post.data());
        acc.free_energy -= n * log_norm;
        double* word_row = acc.word.row(cell.term).data();
        for (int z = 0; z < k; ++z) {
          const double mass = n * post[z];
          word_row[z] += mass;
          doc_row[z] += mass;
        }
      }
    }
  });

  RowMatrix word_acc = std::move(partial[0].word);
  double energy = partial[0].free_energy;
  for (std::size_t c = 1; c < partial.size(); ++c) {
    word_acc += partial[c].word;
    energy += partial[c].free_energy;
  }

  Eigen::VectorXd factor_mass = word_acc.colwise().sum().transpose();
  int degenerate = 0;
  for (int z = 0; z < k; ++z) {
    if (factor_mass[z] > 0.0) {
      word_acc.col(z) /= factor_mass[z];
      doc_acc.col(z) /= doc_acc.col(z).sum();
    } else {
      ++degenerate;
      factor_mass[z] = 0.0;
      word_acc.col(z).setConstant(1.0 / counts.n_terms());
      doc_acc.col(z).setConstant(1.0 / counts.n_docs());
    }
  }
  if (degenerate > 0) {
    warn("em_step: " + std::to_string(degenerate) +
         " factor(s) received no posterior mass; conditionals reset to uniform");
  }
  const double mass = factor_mass.sum();
  if (!(mass > 0.0)) throw NumericalError("em_step: no posterior mass at all");
  if (stats) *stats = {energy, degenerate};
  return AspectModel(factor_mass / mass, std::move(doc_acc), std::move(word_acc));
}

FitResult fit_em(const CountMatrix& counts, int n_factors, const TemConfig& config) {
  Session session(counts, n_factors, config);
  return session.fit(false);
}

FitResult fit_tem(const CountMatrix& counts, int n_factors, const TemConfig& config) {
  Session session(counts, n_factors, config);
  return session.fit(true);
}

LatentRepresentation fold_in(const AspectModel& model, const TermVector& query,
                             const FoldInOptions& options) {
  if (!(options.beta > 0.0)) throw InvalidArgument("fold-in needs beta > 0");
  if (options.max_iters < 1) throw InvalidArgument("fold-in needs max_iters >= 1");
  const int k = model.n_factors();
  std::vector<TermCount> terms;
  for (const auto& tc : query) {
    if (tc.term < 0 || tc.term >= model.n_terms() || tc.count < 1) continue;
    if (model.word_given_z().row(tc.term).maxCoeff() > 0.0) terms.push_back(tc);
  }
  if (terms.empty()) throw DataError("unmatchable query: no term known to the model");

  RowMatrix log_word(static_cast<Eigen::Index>(terms.size()), k);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    log_word.row(static_cast<Eigen::Index>(i)) =
        model.word_given_z().row(terms[i].term).unaryExpr(&internal::safe_log);
  }
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  Eigen::VectorXd log_weights(k);
  Eigen::VectorXd acc(k);
  std::vector<double> post(k);
  for (int it = 0; it < options.max_iters; ++it) {
    log_weights = weights.unaryExpr(&internal::safe_log);
    acc.setZero();
    for (std::size_t i = 0; i < terms.size(); ++i) {
      internal::tempered_posterior(log_weights.data(), zeros.data(),
                                   log_word.row(static_cast<Eigen::Index>(i)).data(), k,
                                   options.beta, post.data());
      const double n = static_cast<double>(terms[i].count);
      for (int z = 0; z < k; ++z) acc[z] += n * post[z];
    }
    Eigen::VectorXd next = acc / acc.sum();
    const double change = (next - weights).cwiseAbs().maxCoeff();
    weights = std::move(next);
    if (change < options.tol) break;
  }
  return weights;
}

void write_trace(std::ostream& out, const TrainTrace& trace) {
  out << "# iter\tbeta\ttrain_ppx\theldout_ppx\tfree_energy\n";
  for (const auto& r : trace.records) {
    out << r.iteration << '\t' << format_double(r.beta) << '\t'
        << format_double(r.train_perplexity) << '\t' << format_double(r.heldout_perplexity)
        << '\t' << format_double(r.free_energy) << '\n';
  }
  out << "# stopping_reason " << to_string(trace.stopping_reason) << '\n';
  out << "# best_iteration " << trace.best_iteration << " best_beta "
      << format_double(trace.best_beta) << " best_heldout_ppx "
      << format_double(trace.best_heldout_perplexity) << '\n';
}

void save_trace(const std::string& path, const TrainTrace& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_trace(out, trace);
}

}  // namespace plsa
