#ifndef PLSA_CORPUS_H_
#define PLSA_CORPUS_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace plsa {

using DocId = std::int32_t;
using TermId = std::int32_t;
using Count = std::int64_t;

struct TermCount {
  TermId term;
  Count count;
  friend bool operator==(const TermCount&, const TermCount&) = default;
};

// Sparse term-count vector, sorted by ascending term id, no duplicates,
// all counts >= 1.
using TermVector = std::vector<TermCount>;

struct CountTriple {
  DocId doc;
  TermId term;
  Count count;
  friend bool operator==(const CountTriple&, const CountTriple&) = default;
};

// Ordered set of unique terms with dense ids assigned in first-seen order.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> terms);

  // Returns the id of `term`, inserting it if new.
  TermId add(std::string_view term);
  std::optional<TermId> find(std::string_view term) const;
  const std::string& term(TermId id) const { return terms_.at(id); }
  std::size_t size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, TermId> index_;
};

// Sparse N x M table of co-occurrence counts n(d,w), stored row-compressed
// with entries sorted by (doc, term).
class CountMatrix {
 public:
  CountMatrix() = default;

  // Validates and sorts the triples. Duplicate (doc, term) pairs, zero or
  // negative counts and out-of-range ids are rejected with InvalidArgument.
  CountMatrix(DocId n_docs, TermId n_terms, std::vector<CountTriple> triples);

  DocId n_docs() const { return n_docs_; }
  TermId n_terms() const { return n_terms_; }
  Count total() const { return total_; }
  std::size_t nnz() const { return cells_.size(); }

  std::span<const TermCount> row(DocId d) const {
    return {cells_.data() + row_offsets_[d], cells_.data() + row_offsets_[d + 1]};
  }
  // Offset of row d's first cell in the flat cell order; cell indices in
  // [row_offset(d), row_offset(d+1)) belong to document d.
  std::size_t row_offset(DocId d) const { return row_offsets_[d]; }
  std::span<const TermCount> cells() const { return cells_; }

  std::vector<CountTriple> triples() const;
  std::vector<Count> row_sums() const;
  std::vector<Count> col_sums() const;
  Count at(DocId d, TermId w) const;

  friend bool operator==(const CountMatrix&, const CountMatrix&) = default;

 private:
  DocId n_docs_ = 0;
  TermId n_terms_ = 0;
  Count total_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<TermCount> cells_;
};

struct SplitPair {
  CountMatrix train;
  CountMatrix heldout;
  std::uint64_t seed = 0;
  double fraction = 0.0;
};

struct SmartRecord {
  std::int64_t id = 0;
  std::string text;
};

// Query id -> set of relevant document indices (0-based rows of the
// collection's CountMatrix).
using RelevanceJudgments = std::map<std::int64_t, std::set<DocId>>;

// Query id -> set of external document ids, as written in a qrels file.
using RawJudgments = std::map<std::int64_t, std::set<std::int64_t>>;

enum class QrelsFormat {
  kPairs,  // query_id doc_id [ignored...]
  kTrec,   // query_id iteration doc_id relevance; relevance > 0 kept
};

std::vector<std::string> tokenize(
    std::string_view text,
    const std::unordered_set<std::string>* stopwords = nullptr);

// Throws DataError when every document is empty.
std::pair<Vocabulary, CountMatrix> build_counts(
    const std::vector<std::vector<std::string>>& docs);

// Counts tokens against a fixed vocabulary; unknown terms are dropped.
TermVector count_terms(const std::vector<std::string>& tokens,
                       const Vocabulary& vocab);

std::vector<SmartRecord> parse_smart(std::istream& in,
                                     const std::string& source = "<stream>");
std::vector<SmartRecord> parse_smart_collection(const std::string& path);
std::vector<SmartRecord> parse_smart_queries(const std::string& path);

RawJudgments parse_qrels(std::istream& in, QrelsFormat format = QrelsFormat::kPairs,
                         const std::string& source = "<stream>");
RawJudgments parse_qrels(const std::string& path,
                         QrelsFormat format = QrelsFormat::kPairs);

// Maps external document ids onto collection rows. Throws DataError on a
// reference to a document that is not in the collection.
RelevanceJudgments resolve_judgments(const RawJudgments& raw,
                                     std::span<const std::int64_t> doc_ids);

// Assigns every token occurrence independently to the held-out side with
// probability `fraction`.
SplitPair split_heldout(const CountMatrix& counts, double fraction,
                        std::uint64_t seed);

CountMatrix merge_counts(const CountMatrix& a, const CountMatrix& b);

// Sparse triple file: "doc<TAB>term<TAB>count" per line, preceded by a
// "#plsa-counts N M" header line. Readers accept files without the header
// and then infer N and M from the largest ids (or take them from the
// optional hints).
void write_counts(std::ostream& out, const CountMatrix& counts);
CountMatrix read_counts(std::istream& in, const std::string& source = "<stream>",
                        std::optional<DocId> n_docs_hint = std::nullopt,
                        std::optional<TermId> n_terms_hint = std::nullopt);
void save_counts(const std::string& path, const CountMatrix& counts);
CountMatrix load_counts(const std::string& path);

// Vocabulary sidecar: "term_id<TAB>term" per line, ids dense from 0.
void write_vocabulary(std::ostream& out, const Vocabulary& vocab);
Vocabulary read_vocabulary(std::istream& in, const std::string& source = "<stream>");
void save_vocabulary(const std::string& path, const Vocabulary& vocab);
Vocabulary load_vocabulary(const std::string& path);

// External document ids sidecar: "row<TAB>external_id" per line.
void save_doc_ids(const std::string& path, std::span<const std::int64_t> ids);
std::vector<std::int64_t> load_doc_ids(const std::string& path);

std::unordered_set<std::string> load_stopwords(const std::string& path);

}  // namespace plsa

#endif  // PLSA_CORPUS_H_
