#ifndef PLSA_TRAINER_H_
#define PLSA_TRAINER_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "plsa/aspect_model.h"
#include "plsa/corpus.h"

namespace plsa {

// Tempered EM settings. The same struct drives plain EM, which only uses
// the beta = 1 phase.
struct TemConfig {
  double eta = 0.9;               // beta <- eta * beta between phases
  double beta_min = 0.5;          // stop once beta would drop below this
  int max_iters_per_beta = 100;
  double improvement_tol = 1e-4;  // relative held-out perplexity gain that counts
  int max_total_iters = 1000;
  std::uint64_t seed = 0;
  double heldout_fraction = 0.1;
  int threads = 1;

  // Throws InvalidArgument on out-of-range settings.
  void validate() const;
};

enum class StopReason { kHeldoutDeterioration, kBetaFloor, kIterationCap };

const char* to_string(StopReason reason);

struct TraceRecord {
  int iteration = 0;
  double beta = 1.0;
  double train_perplexity = 0.0;
  double heldout_perplexity = 0.0;
  // Free energy at this beta of the model produced by the iteration, with
  // posteriors at their minimizing value (see tempered_free_energy).
  double free_energy = 0.0;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
  StopReason stopping_reason = StopReason::kIterationCap;
  // Beta at which the returned model was produced.
  double best_beta = 1.0;
  int best_iteration = 0;
  double best_heldout_perplexity = 0.0;
};

struct EmStepStats {
  // Free energy of the input model at the step's own posteriors.
  double free_energy = 0.0;
  int degenerate_factors = 0;
};

// One fused E+M sweep over the nonzero cells at inverse temperature beta.
// A factor that receives no posterior mass gets uniform conditionals (and a
// warning). Work may be spread over `threads` workers; partial sums are
// merged in a fixed order, so the result does not depend on the thread count.
AspectModel em_step(const AspectModel& model, const CountMatrix& counts, double beta,
                    EmStepStats* stats = nullptr, int threads = 1);

struct FitResult {
  AspectModel model;
  TrainTrace trace;
};

// EM at beta = 1 with early stopping on an internal held-out split.
// Returns the snapshot with the lowest held-out conditional perplexity.
FitResult fit_em(const CountMatrix& counts, int n_factors, const TemConfig& config);

// Tempered EM with inverse annealing: EM with early stopping, then
// repeatedly lower beta and keep iterating while held-out perplexity
// improves, until lowering beta no longer helps or beta < beta_min.
FitResult fit_tem(const CountMatrix& counts, int n_factors, const TemConfig& config);

struct FoldInOptions {
  double beta = 1.0;
  int max_iters = 50;
  double tol = 1e-6;
};

// Estimates P(z|q) for an unseen query with P(w|z) held fixed. Terms outside
// the model vocabulary, or with zero probability under every factor, are
// ignored. Throws DataError when nothing of the query is left.
LatentRepresentation fold_in(const AspectModel& model, const TermVector& query,
                             const FoldInOptions& options = {});

// Plain-text trace table: one "iter beta train_ppx heldout_ppx free_energy"
// line per iteration, after a '#' header.
void write_trace(std::ostream& out, const TrainTrace& trace);
void save_trace(const std::string& path, const TrainTrace& trace);

}  // namespace plsa

#endif  // PLSA_TRAINER_H_
