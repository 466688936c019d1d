#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "CLI11.hpp"
#include "manifest.h"
#include "plsa/aspect_model.h"
#include "plsa/cli.h"
#include "plsa/container.h"
#include "plsa/corpus.h"
#include "plsa/lsa.h"
#include "plsa/retrieval.h"
#include "plsa/trainer.h"
#include "plsa/util.h"

namespace plsa {

namespace {

namespace fs = std::filesystem;
using cli::Manifest;

struct Context {
  std::vector<std::string> args;
  std::ostream& out;
  std::ostream& err;
};

std::string join(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

void make_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

std::unordered_set<std::string> maybe_stopwords(const std::string& path) {
  if (path.empty()) return {};
  return load_stopwords(path);
}

// ---------------------------------------------------------------- ingest

struct IngestOptions {
  std::string format = "raw";
  std::string stopwords;
  std::string out;
  std::vector<std::string> inputs;
};

int cmd_ingest(const IngestOptions& o, Context& ctx) {
  const auto stop = maybe_stopwords(o.stopwords);
  const auto* stop_ptr = o.stopwords.empty() ? nullptr : &stop;
  Vocabulary vocab;
  CountMatrix counts;
  std::vector<std::int64_t> ids;

  if (o.format == "triples") {
    if (o.inputs.size() != 1) throw InvalidArgument("triples format takes exactly one input");
    counts = load_counts(o.inputs[0]);
    if (counts.total() == 0) throw DataError("empty corpus");
    for (TermId w = 0; w < counts.n_terms(); ++w) vocab.add(std::to_string(w));
    for (DocId d = 0; d < counts.n_docs(); ++d) ids.push_back(d);
  } else {
    std::vector<std::vector<std::string>> docs;
    if (o.format == "raw") {
      // One document per non-blank line, numbered by line across all inputs.
      std::int64_t line_no = 0;
      for (const auto& path : o.inputs) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open '" + path + "'");
        std::string line;
        while (std::getline(in, line)) {
          ++line_no;
          if (line.find_first_not_of(" \t\r\f\v") == std::string::npos) continue;
          docs.push_back(tokenize(line, stop_ptr));
          ids.push_back(line_no);
        }
      }
    } else {
      std::set<std::int64_t> seen;
      for (const auto& path : o.inputs) {
        for (auto& record : parse_smart_collection(path)) {
          if (!seen.insert(record.id).second) {
            throw DataError(path + ": duplicate document id " + std::to_string(record.id));
          }
          docs.push_back(tokenize(record.text, stop_ptr));
          ids.push_back(record.id);
        }
      }
    }
    if (docs.empty()) throw DataError("empty corpus");
    auto built = build_counts(docs);
    vocab = std::move(built.first);
    counts = std::move(built.second);
  }

  make_output_dir(o.out);
  const fs::path dir(o.out);
  save_counts(join(dir, "counts.tsv"), counts);
  save_vocabulary(join(dir, "vocab.tsv"), vocab);
  save_doc_ids(join(dir, "docids.tsv"), ids);

  Manifest manifest("ingest", ctx.args);
  manifest.parameter("format", o.format);
  manifest.parameter("stopwords", o.stopwords);
  manifest.parameter("out", o.out);
  manifest.inputs("documents", o.inputs);
  if (!o.stopwords.empty()) manifest.input("stopwords", o.stopwords);
  for (const char* name : {"counts.tsv", "vocab.tsv", "docids.tsv"}) manifest.output(o.out, name);
  manifest.save(o.out);

  ctx.out << "N=" << counts.n_docs() << " M=" << counts.n_terms() << " total=" << counts.total()
          << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- split

struct SplitOptions {
  std::string counts;
  double fraction = 0.1;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_split(const SplitOptions& o, Context& ctx) {
  const auto counts = load_counts(o.counts);
  // Separate sub-stream from the trainer's own internal split.
  const auto split = split_heldout(counts, o.fraction, derive_seed(o.seed, "eval-split"));
  make_output_dir(o.out);
  const fs::path dir(o.out);
  save_counts(join(dir, "train.tsv"), split.train);
  save_counts(join(dir, "heldout.tsv"), split.heldout);

  Manifest manifest("split", ctx.args);
  manifest.parameter("fraction", o.fraction);
  manifest.parameter("seed", o.seed);
  manifest.parameter("out", o.out);
  manifest.input("counts", o.counts);
  manifest.output(o.out, "train.tsv");
  manifest.output(o.out, "heldout.tsv");
  manifest.save(o.out);

  ctx.out << "train=" << split.train.total() << " heldout=" << split.heldout.total() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string counts;
  std::vector<int> ks;
  std::string mode = "tem";
  TemConfig config;
  std::string out;
};

int cmd_train(const TrainOptions& o, Context& ctx) {
  o.config.validate();
  const auto counts = load_counts(o.counts);
  make_output_dir(o.out);
  const fs::path dir(o.out);

  Manifest manifest("train", ctx.args);
  manifest.parameter("k", o.ks);
  manifest.parameter("mode", o.mode);
  manifest.parameter("eta", o.config.eta);
  manifest.parameter("beta_min", o.config.beta_min);
  manifest.parameter("improvement_tol", o.config.improvement_tol);
  manifest.parameter("heldout_fraction", o.config.heldout_fraction);
  manifest.parameter("max_iters_per_beta", o.config.max_iters_per_beta);
  manifest.parameter("max_total_iters", o.config.max_total_iters);
  manifest.parameter("seed", o.config.seed);
  manifest.parameter("threads", o.config.threads);
  manifest.parameter("out", o.out);
  manifest.input("counts", o.counts);

  for (int k : o.ks) {
    const FitResult fit =
        o.mode == "em" ? fit_em(counts, k, o.config) : fit_tem(counts, k, o.config);
    const std::string model_name = "model-k" + std::to_string(k) + ".plsa";
    const std::string trace_name = "trace-k" + std::to_string(k) + ".tsv";
    save_model(join(dir, model_name), fit.model, fit.trace.best_beta);
    save_trace(join(dir, trace_name), fit.trace);
    manifest.output(o.out, model_name);
    manifest.output(o.out, trace_name);
    ctx.out << "K=" << k << " mode=" << o.mode
            << " iterations=" << fit.trace.records.size()
            << " best_iteration=" << fit.trace.best_iteration
            << " best_beta=" << format_double(fit.trace.best_beta)
            << " heldout_perplexity=" << format_double(fit.trace.best_heldout_perplexity)
            << " stop=" << to_string(fit.trace.stopping_reason) << '\n';
  }
  manifest.save(o.out);
  return kExitOk;
}

// ---------------------------------------------------------------- perplexity

struct PerplexityOptions {
  std::string model;
  std::string counts;
  bool conditional = false;
  std::string baseline;
  std::string unigram_from;
  std::string out;
};

int cmd_perplexity(const PerplexityOptions& o, Context& ctx) {
  if (!o.baseline.empty() && !o.unigram_from.empty()) {
    throw InvalidArgument("--baseline and --unigram-from are mutually exclusive");
  }
  const auto model = load_model(o.model).model;
  const auto counts = load_counts(o.counts);
  check_dimensions(model, counts);
  const double ppx = perplexity(model, counts, o.conditional);

  std::ostringstream report;
  report << "perplexity\t" << format_double(ppx) << '\n';
  std::optional<AspectModel> baseline;
  if (!o.baseline.empty()) baseline = load_model(o.baseline).model;
  if (!o.unigram_from.empty()) baseline = unigram_baseline(load_counts(o.unigram_from));
  if (baseline) {
    check_dimensions(*baseline, counts);
    const double base = perplexity(*baseline, counts, o.conditional);
    report << "baseline_perplexity\t" << format_double(base) << '\n';
    report << "reduction\t" << format_double(base / ppx) << '\n';
  }
  ctx.out << report.str();

  if (!o.out.empty()) {
    make_output_dir(o.out);
    auto file = open_output(join(o.out, "perplexity.tsv"));
    file << report.str();
    file.close();
    Manifest manifest("perplexity", ctx.args);
    manifest.parameter("conditional", o.conditional);
    manifest.parameter("out", o.out);
    manifest.input("model", o.model);
    manifest.input("counts", o.counts);
    if (!o.baseline.empty()) manifest.input("baseline", o.baseline);
    if (!o.unigram_from.empty()) manifest.input("unigram_from", o.unigram_from);
    manifest.output(o.out, "perplexity.tsv");
    manifest.save(o.out);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- query

struct QueryOptions {
  std::vector<std::string> models;
  std::string counts;
  std::string vocab;
  std::string docids;
  std::string queries;
  std::string query_format = "smart";
  std::string qrels;
  std::string qrels_format = "pairs";
  std::string stopwords;
  std::string similarity = "cosine";
  double lambda = 0.5;
  bool baseline_only = false;
  std::vector<int> lsi_ks;
  int fold_in_iters = 50;
  std::string out;
};

struct Query {
  std::int64_t id;
  TermVector terms;
};

std::vector<Query> load_queries(const QueryOptions& o, const Vocabulary& vocab) {
  const auto stop = maybe_stopwords(o.stopwords);
  const auto* stop_ptr = o.stopwords.empty() ? nullptr : &stop;
  std::vector<SmartRecord> records;
  if (o.query_format == "smart") {
    records = parse_smart_queries(o.queries);
  } else {
    std::ifstream in(o.queries, std::ios::binary);
    if (!in) throw DataError("cannot open '" + o.queries + "'");
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r\f\v") != std::string::npos) {
        records.push_back({line_no, line});
      }
    }
  }
  std::vector<Query> queries;
  std::set<std::int64_t> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.id).second) {
      throw DataError(o.queries + ": duplicate query id " + std::to_string(r.id));
    }
    TermVector terms = count_terms(tokenize(r.text, stop_ptr), vocab);
    if (terms.empty()) {
      warn("query " + std::to_string(r.id) + " shares no term with the vocabulary; skipped");
      continue;
    }
    queries.push_back({r.id, std::move(terms)});
  }
  if (queries.empty()) throw DataError("no usable queries in '" + o.queries + "'");
  return queries;
}

// Per-model document and query representations. An empty vector marks a
// document or query the model cannot represent; scoring it throws and the
// pair ranks last.
struct ModelReps {
  std::vector<LatentRepresentation> docs;
  std::vector<LatentRepresentation> queries;
};

ModelReps represent(const StoredModel& stored, const std::vector<Query>& queries,
                    int fold_in_iters) {
  ModelReps reps;
  const auto& m = stored.model;
  reps.docs.resize(m.n_docs());
  for (DocId d = 0; d < m.n_docs(); ++d) {
    try {
      reps.docs[d] = factor_given_doc(m, d);
    } catch (const NumericalError&) {
    }
  }
  FoldInOptions fold;
  fold.beta = stored.beta.value_or(1.0);
  fold.max_iters = fold_in_iters;
  reps.queries.resize(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    try {
      reps.queries[q] = fold_in(m, queries[q].terms, fold);
    } catch (const DataError& e) {
      warn("query " + std::to_string(queries[q].id) + ": " + e.what());
    }
  }
  return reps;
}

int cmd_query(const QueryOptions& o, Context& ctx) {
  if (o.baseline_only && (!o.models.empty() || !o.lsi_ks.empty())) {
    throw InvalidArgument("--baseline-only excludes --model and --lsi-k");
  }
  if (!o.baseline_only && o.models.empty() && o.lsi_ks.empty()) {
    throw InvalidArgument("give at least one --model, an --lsi-k, or --baseline-only");
  }
  if (!(o.lambda >= 0.0 && o.lambda <= 1.0)) throw InvalidArgument("--lambda must lie in [0, 1]");

  const auto counts = load_counts(o.counts);
  const auto vocab = load_vocabulary(o.vocab);
  if (static_cast<TermId>(vocab.size()) != counts.n_terms()) {
    throw DataError("vocabulary has " + std::to_string(vocab.size()) + " terms but counts have " +
                    std::to_string(counts.n_terms()));
  }
  std::string docids_path = o.docids;
  if (docids_path.empty()) {
    const auto sibling = fs::path(o.counts).parent_path() / "docids.tsv";
    if (fs::exists(sibling)) docids_path = sibling.string();
  }
  std::vector<std::int64_t> doc_ids;
  if (docids_path.empty()) {
    for (DocId d = 0; d < counts.n_docs(); ++d) doc_ids.push_back(d);
  } else {
    doc_ids = load_doc_ids(docids_path);
    if (static_cast<DocId>(doc_ids.size()) != counts.n_docs()) {
      throw DataError("document id file lists " + std::to_string(doc_ids.size()) +
                      " documents but counts have " + std::to_string(counts.n_docs()));
    }
  }

  const auto queries = load_queries(o, vocab);
  std::vector<std::int64_t> qids;
  for (const auto& q : queries) qids.push_back(q.id);

  RelevanceJudgments judgments;
  if (!o.qrels.empty()) {
    const auto format = o.qrels_format == "trec" ? QrelsFormat::kTrec : QrelsFormat::kPairs;
    RawJudgments raw = parse_qrels(o.qrels, format);
    std::erase_if(raw, [&](const auto& entry) {
      return std::find(qids.begin(), qids.end(), entry.first) == qids.end();
    });
    judgments = resolve_judgments(raw, doc_ids);
  }

  std::vector<StoredModel> models;
  for (const auto& path : o.models) {
    models.push_back(load_model(path));
    const auto& m = models.back().model;
    if (m.n_docs() != counts.n_docs() || m.n_terms() != counts.n_terms()) {
      throw DataError("model '" + path + "' is " + std::to_string(m.n_docs()) + "x" +
                      std::to_string(m.n_terms()) + " but the collection is " +
                      std::to_string(counts.n_docs()) + "x" + std::to_string(counts.n_terms()) +
                      " (vocabulary mismatch)");
    }
  }
  const LatentSimilarity similarity =
      o.similarity == "dot" ? LatentSimilarity(dot_similarity) : LatentSimilarity(cosine_similarity);

  auto cos = [&](DocId d, std::size_t q) {
    return cosine_score(counts.row(d), std::span<const TermCount>(queries[q].terms));
  };

  struct Method {
    std::string name;
    Scorer scorer;
  };
  std::vector<Method> methods;
  methods.push_back({"cos", cos});

  std::vector<ModelReps> reps;
  for (const auto& m : models) reps.push_back(represent(m, queries, o.fold_in_iters));
  if (!models.empty()) {
    auto scorer = [&](DocId d, std::size_t q) {
      std::vector<LatentRepresentation> doc_reps, query_reps;
      for (const auto& r : reps) {
        if (r.docs[d].size() == 0) throw DataError("document has no latent representation");
        if (r.queries[q].size() == 0) throw DataError("query has no latent representation");
        doc_reps.push_back(r.docs[d]);
        query_reps.push_back(r.queries[q]);
      }
      return plsi_star_score(doc_reps, query_reps, o.lambda, cos(d, q), similarity);
    };
    methods.push_back({models.size() == 1 ? "plsi" : "plsi-star", scorer});
  }

  make_output_dir(o.out);
  const fs::path dir(o.out);
  Manifest manifest("query", ctx.args);

  struct Lsi {
    Eigen::MatrixXd doc_coords;
    std::vector<Eigen::VectorXd> query_coords;
  };
  std::vector<std::unique_ptr<Lsi>> lsi;
  for (int k : o.lsi_ks) {
    const auto decomp = truncated_svd(counts, k);
    const std::string svd_name = "lsi-k" + std::to_string(k) + ".svd";
    save_svd(join(dir, svd_name), decomp);
    manifest.output(o.out, svd_name);
    auto state = std::make_unique<Lsi>();
    state->doc_coords = lsi_doc_coords(decomp);
    for (const auto& q : queries) state->query_coords.push_back(lsi_fold_in(decomp, q.terms));
    const Lsi* s = state.get();
    lsi.push_back(std::move(state));
    methods.push_back({"lsi-k" + std::to_string(k), [&, s](DocId d, std::size_t q) {
                         const Eigen::VectorXd row = s->doc_coords.row(d).transpose();
                         return combined_score(o.lambda, cos(d, q),
                                               cosine_similarity(row, s->query_coords[q]));
                       }});
  }

  std::ostringstream summary;
  for (const auto& method : methods) {
    const auto run = rank_all(method.scorer, counts.n_docs(), qids, judgments);
    const std::string run_name = method.name + ".run";
    {
      auto file = open_output(join(dir, run_name));
      write_run(file, run, doc_ids);
    }
    manifest.output(o.out, run_name);
    if (o.qrels.empty()) continue;
    const auto pr = precision_recall(run);
    const std::string pr_name = method.name + ".pr.tsv";
    const std::string curve_name = method.name + ".curve.tsv";
    {
      auto file = open_output(join(dir, pr_name));
      write_pr_table(file, pr, method.name);
      auto curve = open_output(join(dir, curve_name));
      write_pr_curve(curve, pr);
    }
    manifest.output(o.out, pr_name);
    manifest.output(o.out, curve_name);
    summary << method.name << '\t' << format_double(pr.average_precision) << '\n';
  }
  if (!o.qrels.empty()) {
    {
      auto file = open_output(join(dir, "summary.tsv"));
      file << "method\taverage_precision\n" << summary.str();
    }
    manifest.output(o.out, "summary.tsv");
    ctx.out << "method\taverage_precision\n" << summary.str();
  } else {
    ctx.out << "wrote " << methods.size() << " run file(s) for " << queries.size()
            << " queries\n";
  }

  manifest.parameter("lambda", o.lambda);
  manifest.parameter("similarity", o.similarity);
  manifest.parameter("baseline_only", o.baseline_only);
  manifest.parameter("lsi_k", o.lsi_ks);
  manifest.parameter("fold_in_iters", o.fold_in_iters);
  manifest.parameter("query_format", o.query_format);
  manifest.parameter("qrels_format", o.qrels_format);
  manifest.parameter("out", o.out);
  manifest.inputs("models", o.models);
  manifest.input("counts", o.counts);
  manifest.input("vocab", o.vocab);
  manifest.input("queries", o.queries);
  if (!docids_path.empty()) manifest.input("docids", docids_path);
  if (!o.qrels.empty()) manifest.input("qrels", o.qrels);
  if (!o.stopwords.empty()) manifest.input("stopwords", o.stopwords);
  manifest.save(o.out);
  return kExitOk;
}

// ---------------------------------------------------------------- topics

struct TopicsOptions {
  std::string model;
  std::string vocab;
  int top = 10;
  std::string out;
};

int cmd_topics(const TopicsOptions& o, Context& ctx) {
  const auto model = load_model(o.model).model;
  const auto vocab = load_vocabulary(o.vocab);
  if (static_cast<TermId>(vocab.size()) != model.n_terms()) {
    throw DataError("vocabulary has " + std::to_string(vocab.size()) + " terms but the model has " +
                    std::to_string(model.n_terms()));
  }
  std::ostringstream table;
  for (int z = 0; z < model.n_factors(); ++z) {
    table << "factor\t" << z << "\tprior\t" << format_double(model.prior()[z]) << '\n';
    for (const auto& t : top_words(model, z, o.top)) {
      table << '\t' << vocab.term(t.term) << '\t' << format_double(t.prob) << '\n';
    }
  }
  ctx.out << table.str();
  if (!o.out.empty()) {
    make_output_dir(o.out);
    {
      auto file = open_output(join(o.out, "topics.tsv"));
      file << table.str();
    }
    Manifest manifest("topics", ctx.args);
    manifest.parameter("top", o.top);
    manifest.parameter("out", o.out);
    manifest.input("model", o.model);
    manifest.input("vocab", o.vocab);
    manifest.output(o.out, "topics.tsv");
    manifest.save(o.out);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- rerun

struct RerunOptions {
  std::string manifest;
  std::string out;
};

class ScopedWorkingDirectory {
 public:
  explicit ScopedWorkingDirectory(const fs::path& dir) : saved_(fs::current_path()) {
    std::error_code ec;
    fs::current_path(dir, ec);
    if (ec) throw DataError("cannot enter '" + dir.string() + "': " + ec.message());
  }
  ~ScopedWorkingDirectory() {
    std::error_code ec;
    fs::current_path(saved_, ec);
  }
  ScopedWorkingDirectory(const ScopedWorkingDirectory&) = delete;
  ScopedWorkingDirectory& operator=(const ScopedWorkingDirectory&) = delete;

 private:
  fs::path saved_;
};

void check_inputs(const nlohmann::json& inputs) {
  auto check = [](const nlohmann::json& entry) {
    const std::string path = entry.at("path");
    if (cli::sha256_file(path) != entry.at("sha256").get<std::string>()) {
      throw DataError("input '" + path + "' changed since the manifest was written");
    }
  };
  for (const auto& [role, value] : inputs.items()) {
    if (value.is_array()) {
      for (const auto& entry : value) check(entry);
    } else {
      check(value);
    }
  }
}

int cmd_rerun(const RerunOptions& o, Context& ctx) {
  const auto doc = cli::load_manifest(o.manifest);
  std::vector<std::string> args;
  try {
    args = doc.at("argv").get<std::vector<std::string>>();
    if (args.empty() || args[0] == "rerun") throw DataError("manifest does not record a command");
    const std::string out_override = o.out.empty() ? "" : fs::absolute(o.out).string();
    std::string out_dir = doc.at("parameters").at("out").get<std::string>();
    if (!out_override.empty()) {
      auto it = std::find(args.begin(), args.end(), "--out");
      if (it == args.end() || std::next(it) == args.end()) {
        throw DataError("manifest arguments carry no --out to redirect");
      }
      *std::next(it) = out_override;
      out_dir = out_override;
    }
    ScopedWorkingDirectory cwd(doc.at("working_directory").get<std::string>());
    check_inputs(doc.at("inputs"));
    std::ostringstream sub_out;
    const int code = run_cli(args, sub_out, ctx.err);
    if (code != kExitOk) return code;
    std::size_t matched = 0;
    std::vector<std::string> mismatched;
    for (const auto& [name, sha] : doc.at("outputs").items()) {
      const auto path = join(fs::path(out_dir), name);
      if (fs::exists(path) && cli::sha256_file(path) == sha.get<std::string>()) {
        ++matched;
      } else {
        mismatched.push_back(name);
      }
    }
    for (const auto& name : mismatched) ctx.out << "mismatch\t" << name << '\n';
    ctx.out << "reproduced " << matched << " of " << doc.at("outputs").size() << " artifact(s)\n";
    return mismatched.empty() ? kExitOk : kExitData;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(o.manifest + ": " + e.what());
  }
}

// ---------------------------------------------------------------- wiring

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probabilistic latent semantic analysis toolkit", "plsa"};
  app.require_subcommand(1);
  Context ctx{args, out, err};

  IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Build counts, vocabulary and doc ids from text");
  ingest_cmd->add_option("--format", ingest.format, "Input format")
      ->check(CLI::IsMember({"raw", "smart", "triples"}));
  ingest_cmd->add_option("--stopwords", ingest.stopwords, "Stop-word list, one word per line");
  ingest_cmd->add_option("--out", ingest.out, "Output directory")->required();
  ingest_cmd->add_option("inputs", ingest.inputs, "Input files")->required();

  SplitOptions split;
  auto* split_cmd = app.add_subcommand("split", "Split token occurrences into train / held-out");
  split_cmd->add_option("--counts", split.counts, "Counts file")->required();
  split_cmd->add_option("--fraction", split.fraction, "Held-out fraction")
      ->check(CLI::Range(0.0, 1.0));
  split_cmd->add_option("--seed", split.seed, "Random seed");
  split_cmd->add_option("--out", split.out, "Output directory")->required();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Fit aspect models by EM or tempered EM");
  train_cmd->add_option("--counts", train.counts, "Counts file")->required();
  train_cmd->add_option("--k", train.ks, "Number of factors (several values train several models)")
      ->required()
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--mode", train.mode, "em or tem")->check(CLI::IsMember({"em", "tem"}));
  train_cmd->add_option("--eta", train.config.eta, "Beta decay factor");
  train_cmd->add_option("--beta-min", train.config.beta_min, "Lowest beta tried");
  train_cmd->add_option("--tol", train.config.improvement_tol,
                        "Relative held-out improvement that counts");
  train_cmd->add_option("--heldout", train.config.heldout_fraction, "Held-out fraction");
  train_cmd->add_option("--max-iters-per-beta", train.config.max_iters_per_beta,
                        "Iteration cap per beta phase");
  train_cmd->add_option("--max-iters", train.config.max_total_iters, "Total iteration cap");
  train_cmd->add_option("--seed", train.config.seed, "Random seed");
  train_cmd->add_option("--threads", train.config.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--out", train.out, "Output directory")->required();

  PerplexityOptions ppx;
  auto* ppx_cmd = app.add_subcommand("perplexity", "Evaluate a model's perplexity on counts");
  ppx_cmd->add_option("--model", ppx.model, "Model file")->required();
  ppx_cmd->add_option("--counts", ppx.counts, "Counts to evaluate")->required();
  ppx_cmd->add_flag("--conditional", ppx.conditional, "Use P(w|d) instead of P(d,w)");
  ppx_cmd->add_option("--baseline", ppx.baseline, "Baseline model for the reduction factor");
  ppx_cmd->add_option("--unigram-from", ppx.unigram_from,
                      "Use the unigram model of these counts as baseline");
  ppx_cmd->add_option("--out", ppx.out, "Optional output directory");

  QueryOptions query;
  auto* query_cmd = app.add_subcommand("query", "Rank documents for queries and evaluate");
  query_cmd->add_option("--model", query.models, "Model file(s); several average as PLSI*");
  query_cmd->add_option("--counts", query.counts, "Collection counts")->required();
  query_cmd->add_option("--vocab", query.vocab, "Collection vocabulary")->required();
  query_cmd->add_option("--docids", query.docids,
                        "Document id file (defaults to docids.tsv beside the counts)");
  query_cmd->add_option("--queries", query.queries, "Query file")->required();
  query_cmd->add_option("--query-format", query.query_format, "smart or raw")
      ->check(CLI::IsMember({"smart", "raw"}));
  query_cmd->add_option("--qrels", query.qrels, "Relevance judgments");
  query_cmd->add_option("--qrels-format", query.qrels_format, "pairs or trec")
      ->check(CLI::IsMember({"pairs", "trec"}));
  query_cmd->add_option("--stopwords", query.stopwords, "Stop-word list for queries");
  query_cmd->add_option("--similarity", query.similarity, "Latent similarity: cosine or dot")
      ->check(CLI::IsMember({"cosine", "dot"}));
  query_cmd->add_option("--lambda", query.lambda, "Weight of the term-matching score")
      ->check(CLI::Range(0.0, 1.0));
  query_cmd->add_flag("--baseline-only", query.baseline_only, "Only the cosine baseline");
  query_cmd->add_option("--lsi-k", query.lsi_ks, "LSI dimensions to compare")
      ->check(CLI::PositiveNumber);
  query_cmd->add_option("--fold-in-iters", query.fold_in_iters, "Fold-in EM iterations")
      ->check(CLI::PositiveNumber);
  query_cmd->add_option("--out", query.out, "Output directory")->required();

  TopicsOptions topics;
  auto* topics_cmd = app.add_subcommand("topics", "Print the most probable terms of each factor");
  topics_cmd->add_option("--model", topics.model, "Model file")->required();
  topics_cmd->add_option("--vocab", topics.vocab, "Vocabulary file")->required();
  topics_cmd->add_option("--top", topics.top, "Terms per factor")->check(CLI::PositiveNumber);
  topics_cmd->add_option("--out", topics.out, "Optional output directory");

  RerunOptions rerun;
  auto* rerun_cmd = app.add_subcommand("rerun", "Repeat a recorded run and verify its outputs");
  rerun_cmd->add_option("--manifest", rerun.manifest, "manifest.json of the run")->required();
  rerun_cmd->add_option("--out", rerun.out, "Write to this directory instead");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  if (*ingest_cmd) return cmd_ingest(ingest, ctx);
  if (*split_cmd) return cmd_split(split, ctx);
  if (*train_cmd) return cmd_train(train, ctx);
  if (*ppx_cmd) return cmd_perplexity(ppx, ctx);
  if (*query_cmd) return cmd_query(query, ctx);
  if (*topics_cmd) return cmd_topics(topics, ctx);
  if (*rerun_cmd) return cmd_rerun(rerun, ctx);
  return kExitUsage;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace plsa
