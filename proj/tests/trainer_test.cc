#include "plsa/trainer.h"

#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "test_support.h"

namespace plsa {
namespace {

using testing::max_abs_diff;
using testing::random_counts;
using testing::random_model;

class WarningCapture {
 public:
  WarningCapture() {
    set_warning_sink([this](std::string_view m) { messages.emplace_back(m); });
  }
  ~WarningCapture() {
    set_warning_sink([](std::string_view) {});
  }
  std::vector<std::string> messages;
};

void expect_normalized(const AspectModel& m) {
  EXPECT_NEAR(m.prior().sum(), 1.0, kNormalizationTolerance);
  for (int z = 0; z < m.n_factors(); ++z) {
    EXPECT_NEAR(m.doc_given_z().col(z).sum(), 1.0, kNormalizationTolerance);
    EXPECT_NEAR(m.word_given_z().col(z).sum(), 1.0, kNormalizationTolerance);
  }
  EXPECT_GE(m.doc_given_z().minCoeff(), 0.0);
  EXPECT_GE(m.word_given_z().minCoeff(), 0.0);
}

TEST(EmStepTest, SingleFactorLandsOnUnigram) {
  Rng rng(1);
  auto counts = random_counts(rng, 6, 8, 30);
  auto m = em_step(init_model(1, 6, 8, 3), counts, 1.0);
  EXPECT_LT(max_abs_diff(m, unigram_baseline(counts)), 1e-12);
}

TEST(EmStepTest, LikelihoodNeverDecreases) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto counts = random_counts(rng, 3, 4, 10);
    auto m = random_model(rng, 2, 3, 4);
    for (int step = 0; step < 30; ++step) {
      const double before = log_likelihood(m, counts);
      m = em_step(m, counts, 1.0);
      const double after = log_likelihood(m, counts);
      EXPECT_GE(after, before - 1e-9 * std::abs(before));
      expect_normalized(m);
    }
  }
}

TEST(EmStepTest, ConvergedModelIsAFixedPoint) {
  for (std::uint64_t seed : {3, 4, 5, 6}) {
    Rng rng(seed);
    auto counts = random_counts(rng, 3, 4, 12, 4);  // every cell filled
    auto m = random_model(rng, 2, 3, 4);
    for (int step = 0; step < 500; ++step) m = em_step(m, counts, 1.0);
    auto again = em_step(m, counts, 1.0);
    EXPECT_LT(max_abs_diff(m, again), 1e-8) << "seed " << seed;
  }
}

TEST(EmStepTest, InputModelIsUntouched) {
  Rng rng(4);
  auto counts = random_counts(rng, 5, 5, 15);
  auto m = random_model(rng, 3, 5, 5);
  const AspectModel copy = m;
  (void)em_step(m, counts, 0.8);
  EXPECT_EQ(m, copy);
}

TEST(EmStepTest, ResultIndependentOfThreadCount) {
  // Large enough for several accumulation chunks.
  auto corpus = testing::sample_corpus(800, 300, 3, 200, 5);
  ASSERT_GT(corpus.counts.nnz(), 2u * 16384u);
  auto m = init_model(3, 800, 300, 8);
  auto one = em_step(m, corpus.counts, 0.9, nullptr, 1);
  auto four = em_step(m, corpus.counts, 0.9, nullptr, 4);
  EXPECT_EQ(one, four);
}

TEST(EmStepTest, FreeEnergyDescendsAtFixedBeta) {
  Rng rng(6);
  for (double beta : {1.0, 0.8, 0.5}) {
    auto counts = random_counts(rng, 6, 7, 25);
    auto m = random_model(rng, 3, 6, 7);
    double previous = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 40; ++step) {
      EmStepStats stats;
      m = em_step(m, counts, beta, &stats);
      EXPECT_LE(stats.free_energy, previous + 1e-9 * std::abs(previous));
      previous = stats.free_energy;
    }
  }
}

TEST(EmStepTest, StatsFreeEnergyMatchesDirectEvaluation) {
  Rng rng(7);
  auto counts = random_counts(rng, 4, 5, 12);
  auto m = random_model(rng, 3, 4, 5);
  EmStepStats stats;
  (void)em_step(m, counts, 0.6, &stats);
  auto post = posterior_table(m, counts, 0.6);
  EXPECT_NEAR(stats.free_energy, free_energy(m, counts, post, 0.6), 1e-9);
}

TEST(EmStepTest, DeadFactorIsResetToUniform) {
  Eigen::VectorXd prior(2);
  prior << 1.0, 0.0;
  RowMatrix doc(2, 2);
  doc << 0.5, 0.5,
         0.5, 0.5;
  RowMatrix word(3, 2);
  word << 0.2, 0.1,
          0.3, 0.1,
          0.5, 0.8;
  AspectModel m(prior, doc, word);
  CountMatrix counts(2, 3, {{0, 0, 2}, {1, 2, 1}});
  WarningCapture warnings;
  EmStepStats stats;
  auto next = em_step(m, counts, 1.0, &stats);
  EXPECT_EQ(stats.degenerate_factors, 1);
  ASSERT_EQ(warnings.messages.size(), 1u);
  EXPECT_EQ(next.prior()[1], 0.0);
  for (int w = 0; w < 3; ++w) EXPECT_NEAR(next.word_given_z()(w, 1), 1.0 / 3, 1e-15);
  for (int d = 0; d < 2; ++d) EXPECT_NEAR(next.doc_given_z()(d, 1), 0.5, 1e-15);
  expect_normalized(next);
}

TEST(EmStepTest, RejectsMismatchedShapes) {
  auto m = init_model(2, 3, 3, 1);
  CountMatrix counts(3, 4, {{0, 0, 1}});
  EXPECT_THROW(em_step(m, counts, 1.0), DataError);
  CountMatrix ok(3, 3, {{0, 0, 1}});
  EXPECT_THROW(em_step(m, ok, 0.0), InvalidArgument);
}

TemConfig small_config(std::uint64_t seed) {
  TemConfig c;
  c.seed = seed;
  return c;
}

TEST(FitEmTest, TrainPerplexityNonIncreasing) {
  auto corpus = testing::sample_corpus(60, 30, 3, 80, 11);
  auto fit = fit_em(corpus.counts, 5, small_config(1));
  ASSERT_GE(fit.trace.records.size(), 2u);
  for (std::size_t i = 1; i < fit.trace.records.size(); ++i) {
    const auto& a = fit.trace.records[i - 1];
    const auto& b = fit.trace.records[i];
    EXPECT_LE(b.train_perplexity, a.train_perplexity * (1.0 + 1e-9));
    EXPECT_EQ(b.beta, 1.0);
    EXPECT_GT(b.iteration, a.iteration);
  }
  EXPECT_NE(fit.trace.stopping_reason, StopReason::kBetaFloor);
  expect_normalized(fit.model);
}

TEST(FitEmTest, ReturnsBestHeldoutSnapshot) {
  auto corpus = testing::sample_corpus(60, 30, 3, 80, 12);
  auto fit = fit_em(corpus.counts, 8, small_config(2));
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : fit.trace.records) best = std::min(best, r.heldout_perplexity);
  EXPECT_EQ(fit.trace.best_heldout_perplexity, best);
  auto split = split_heldout(corpus.counts, 0.1, derive_seed(2, "split"));
  EXPECT_NEAR(perplexity(fit.model, split.heldout, true), best, 1e-9 * best);
}

TEST(FitEmTest, Deterministic) {
  auto corpus = testing::sample_corpus(40, 25, 3, 60, 13);
  auto a = fit_em(corpus.counts, 4, small_config(3));
  auto b = fit_em(corpus.counts, 4, small_config(3));
  EXPECT_EQ(a.model, b.model);
  ASSERT_EQ(a.trace.records.size(), b.trace.records.size());
  auto c = fit_tem(corpus.counts, 4, small_config(3));
  auto d = fit_tem(corpus.counts, 4, small_config(3));
  EXPECT_EQ(c.model, d.model);
}

TEST(FitEmTest, EmptyCountsAreAnError) {
  EXPECT_THROW(fit_em(CountMatrix(3, 3, {}), 2, {}), DataError);
  EXPECT_THROW(fit_tem(CountMatrix(3, 3, {}), 2, {}), DataError);
}

TEST(FitEmTest, RejectsBadConfig) {
  CountMatrix counts(1, 1, {{0, 0, 50}});
  TemConfig c;
  c.eta = 1.0;
  EXPECT_THROW(fit_tem(counts, 1, c), InvalidArgument);
  c = {};
  c.beta_min = 0.0;
  EXPECT_THROW(fit_tem(counts, 1, c), InvalidArgument);
  c = {};
  c.heldout_fraction = 1.5;
  EXPECT_THROW(fit_em(counts, 1, c), InvalidArgument);
  EXPECT_THROW(fit_em(counts, 0, {}), InvalidArgument);
}

TEST(FitEmTest, SingleFactorCollapsesToUnigram) {
  auto corpus = testing::sample_corpus(30, 20, 2, 50, 14);
  auto fit = fit_em(corpus.counts, 1, small_config(4));
  auto split = split_heldout(corpus.counts, 0.1, derive_seed(4, "split"));
  EXPECT_LT(max_abs_diff(fit.model, unigram_baseline(split.train)), 1e-10);
}

TEST(FitEmTest, RecoversGeneratingModelPerplexity) {
  auto corpus = testing::sample_corpus(200, 50, 3, 100, 21);
  auto eval = split_heldout(corpus.counts, 0.1, 77);
  auto fit = fit_em(eval.train, 3, small_config(5));
  const double fitted = perplexity(fit.model, eval.heldout, true);
  const double truth = perplexity(corpus.generator, eval.heldout, true);
  EXPECT_LE(fitted, 1.1 * truth) << "fitted " << fitted << " truth " << truth;
}

TEST(FitTemTest, DegenerateScheduleMatchesEm) {
  auto corpus = testing::sample_corpus(50, 30, 3, 60, 15);
  TemConfig c = small_config(6);
  c.eta = 0.999999;
  c.beta_min = 1.0;
  auto em = fit_em(corpus.counts, 4, c);
  auto tem = fit_tem(corpus.counts, 4, c);
  EXPECT_EQ(em.model, tem.model);
  EXPECT_EQ(em.trace.records.size(), tem.trace.records.size());
  EXPECT_EQ(tem.trace.stopping_reason, StopReason::kBetaFloor);
}

TEST(FitTemTest, BetaScheduleIsGeometric) {
  auto corpus = testing::sample_corpus(100, 40, 4, 80, 16);
  TemConfig c = small_config(7);
  c.eta = 0.8;
  c.beta_min = 0.2;
  auto fit = fit_tem(corpus.counts, 24, c);
  const auto& recs = fit.trace.records;
  ASSERT_FALSE(recs.empty());
  EXPECT_EQ(recs.front().beta, 1.0);
  double expected = 1.0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].beta != expected) {
      expected *= c.eta;  // each phase lowers beta by exactly one factor of eta
      EXPECT_EQ(recs[i].beta, expected) << "record " << i;
    }
    if (i > 0) EXPECT_LE(recs[i].beta, recs[i - 1].beta);
  }
  EXPECT_GE(fit.trace.best_beta, c.beta_min);
}

TEST(FitTemTest, TemperingDoesNotHurtAnOverfitProneModel) {
  auto corpus = testing::sample_corpus(200, 50, 4, 100, 31);
  auto eval = split_heldout(corpus.counts, 0.1, 99);
  auto em = fit_em(eval.train, 64, small_config(8));
  auto tem = fit_tem(eval.train, 64, small_config(8));
  EXPECT_LE(perplexity(tem.model, eval.heldout, true),
            perplexity(em.model, eval.heldout, true));
}

TEST(FoldInTest, SingleFactor) {
  auto m = init_model(1, 3, 5, 1);
  auto rep = fold_in(m, {{0, 2}, {3, 1}});
  ASSERT_EQ(rep.size(), 1);
  EXPECT_EQ(rep[0], 1.0);
}

TEST(FoldInTest, ConcentratesOnTheOnlyFactorThatExplainsTheQuery) {
  Eigen::VectorXd prior = Eigen::VectorXd::Constant(3, 1.0 / 3);
  RowMatrix doc = RowMatrix::Constant(2, 3, 0.5);
  RowMatrix word(3, 3);
  word << 0.7, 0.0, 0.0,
          0.3, 0.5, 0.5,
          0.0, 0.5, 0.5;
  AspectModel m(prior, doc, word);
  const AspectModel copy = m;
  auto rep = fold_in(m, {{0, 3}});
  EXPECT_GE(rep[0], 1.0 - 1e-9);
  EXPECT_NEAR(rep.sum(), 1.0, 1e-10);
  EXPECT_EQ(m, copy);
}

TEST(FoldInTest, ScaleInvariantAtBetaOne) {
  Rng rng(8);
  auto m = random_model(rng, 4, 5, 10);
  TermVector q{{1, 2}, {4, 1}, {7, 3}};
  TermVector q3{{1, 6}, {4, 3}, {7, 9}};
  FoldInOptions opts;
  opts.max_iters = 2000;
  opts.tol = 1e-12;
  auto a = fold_in(m, q, opts);
  auto b = fold_in(m, q3, opts);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(FoldInTest, UnmatchableQuery) {
  Eigen::VectorXd prior = Eigen::VectorXd::Ones(1);
  RowMatrix doc = RowMatrix::Ones(1, 1);
  RowMatrix word(2, 1);
  word << 1.0, 0.0;
  AspectModel m(prior, doc, word);
  EXPECT_THROW(fold_in(m, {}), DataError);
  EXPECT_THROW(fold_in(m, {{5, 1}}), DataError);  // out of vocabulary
  EXPECT_THROW(fold_in(m, {{1, 1}}), DataError);  // zero probability everywhere
  EXPECT_NO_THROW(fold_in(m, {{0, 1}, {9, 2}}));
}

TEST(TraceTest, WritesOneLinePerIteration) {
  TrainTrace trace;
  trace.records = {{1, 1.0, 10.0, 12.0, 100.0}, {2, 0.9, 9.5, 11.0, 95.0}};
  trace.stopping_reason = StopReason::kBetaFloor;
  std::ostringstream out;
  write_trace(out, trace);
  std::istringstream in(out.str());
  std::string line;
  int data_lines = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') ++data_lines;
  }
  EXPECT_EQ(data_lines, 2);
  EXPECT_NE(out.str().find("2\t0.9\t9.5\t11\t95"), std::string::npos);
  EXPECT_NE(out.str().find("beta-floor"), std::string::npos);
}

}  // namespace
}  // namespace plsa
