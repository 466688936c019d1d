#include "plsa/corpus.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "plsa/util.h"

namespace plsa {

namespace {

bool is_token_char(unsigned char c) {
  // Bytes >= 0x80 belong to multi-byte UTF-8 sequences and stay inside tokens.
  return std::isalnum(c) || c >= 0x80;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

template <typename Int>
bool parse_int(std::string_view text, Int& value) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    fields.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> terms) {
  for (auto& t : terms) {
    if (index_.count(t)) throw InvalidArgument("duplicate vocabulary term '" + t + "'");
    index_.emplace(t, static_cast<TermId>(terms_.size()));
    terms_.push_back(std::move(t));
  }
}

TermId Vocabulary::add(std::string_view term) {
  auto it = index_.find(std::string(term));
  if (it != index_.end()) return it->second;
  auto id = static_cast<TermId>(terms_.size());
  terms_.emplace_back(term);
  index_.emplace(terms_.back(), id);
  return id;
}

std::optional<TermId> Vocabulary::find(std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

CountMatrix::CountMatrix(DocId n_docs, TermId n_terms,
                         std::vector<CountTriple> triples)
    : n_docs_(n_docs), n_terms_(n_terms) {
  if (n_docs < 0 || n_terms < 0) throw InvalidArgument("negative matrix dimension");
  std::sort(triples.begin(), triples.end(), [](const auto& a, const auto& b) {
    return a.doc != b.doc ? a.doc < b.doc : a.term < b.term;
  });
  row_offsets_.assign(static_cast<std::size_t>(n_docs) + 1, 0);
  cells_.reserve(triples.size());
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto& t = triples[i];
    if (t.doc < 0 || t.doc >= n_docs || t.term < 0 || t.term >= n_terms) {
      throw InvalidArgument("count entry (" + std::to_string(t.doc) + ", " +
                            std::to_string(t.term) + ") out of range");
    }
    if (t.count < 1) throw InvalidArgument("count entries must be >= 1");
    if (i > 0 && triples[i - 1].doc == t.doc && triples[i - 1].term == t.term) {
      throw InvalidArgument("duplicate count entry (" + std::to_string(t.doc) +
                            ", " + std::to_string(t.term) + ")");
    }
    cells_.push_back({t.term, t.count});
    ++row_offsets_[t.doc + 1];
    total_ += t.count;
  }
  for (std::size_t d = 0; d < static_cast<std::size_t>(n_docs); ++d) {
    row_offsets_[d + 1] += row_offsets_[d];
  }
}

std::vector<CountTriple> CountMatrix::triples() const {
  std::vector<CountTriple> out;
  out.reserve(cells_.size());
  for (DocId d = 0; d < n_docs_; ++d) {
    for (const auto& c : row(d)) out.push_back({d, c.term, c.count});
  }
  return out;
}

std::vector<Count> CountMatrix::row_sums() const {
  std::vector<Count> sums(n_docs_, 0);
  for (DocId d = 0; d < n_docs_; ++d) {
    for (const auto& c : row(d)) sums[d] += c.count;
  }
  return sums;
}

std::vector<Count> CountMatrix::col_sums() const {
  std::vector<Count> sums(n_terms_, 0);
  for (const auto& c : cells_) sums[c.term] += c.count;
  return sums;
}

Count CountMatrix::at(DocId d, TermId w) const {
  auto r = row(d);
  auto it = std::lower_bound(r.begin(), r.end(), w,
                             [](const TermCount& c, TermId t) { return c.term < t; });
  return (it != r.end() && it->term == w) ? it->count : 0;
}

std::vector<std::string> tokenize(std::string_view text,
                                  const std::unordered_set<std::string>* stopwords) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    if (!stopwords || !stopwords->count(current)) tokens.push_back(current);
    current.clear();
  };
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_token_char(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::pair<Vocabulary, CountMatrix> build_counts(
    const std::vector<std::vector<std::string>>& docs) {
  Vocabulary vocab;
  std::vector<CountTriple> triples;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::map<TermId, Count> row;
    for (const auto& tok : docs[d]) ++row[vocab.add(tok)];
    for (auto [term, count] : row) {
      triples.push_back({static_cast<DocId>(d), term, count});
    }
  }
  if (triples.empty()) throw DataError("unusable corpus: every document is empty");
  CountMatrix counts(static_cast<DocId>(docs.size()),
                     static_cast<TermId>(vocab.size()), std::move(triples));
  return {std::move(vocab), std::move(counts)};
}

TermVector count_terms(const std::vector<std::string>& tokens,
                       const Vocabulary& vocab) {
  std::map<TermId, Count> row;
  for (const auto& tok : tokens) {
    if (auto id = vocab.find(tok)) ++row[*id];
  }
  TermVector out;
  out.reserve(row.size());
  for (auto [term, count] : row) out.push_back({term, count});
  return out;
}

std::vector<SmartRecord> parse_smart(std::istream& in, const std::string& source) {
  std::vector<SmartRecord> records;
  std::string line;
  std::size_t line_no = 0;
  std::size_t record_line = 0;
  bool in_text = false;
  bool has_section = false;

  auto finish_record = [&] {
    if (!records.empty() && !has_section) {
      throw ParseError(source, record_line,
                       "record .I " + std::to_string(records.back().id) +
                           " has no .W/.T/.A/.B section");
    }
  };

  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    bool is_marker = line.size() >= 2 && line[0] == '.' &&
                     std::isupper(static_cast<unsigned char>(line[1])) &&
                     (line.size() == 2 || std::isspace(static_cast<unsigned char>(line[2])));
    if (is_marker) {
      char tag = line[1];
      std::string_view rest = std::string_view(line).substr(2);
      if (tag == 'I') {
        finish_record();
        auto fields = split_whitespace(rest);
        std::int64_t id = 0;
        if (fields.size() != 1 || !parse_int(fields[0], id)) {
          throw ParseError(source, line_no, "malformed .I marker: '" + line + "'");
        }
        records.push_back({id, {}});
        record_line = line_no;
        in_text = false;
        has_section = false;
        continue;
      }
      if (records.empty()) {
        throw ParseError(source, line_no, "section marker before first .I record");
      }
      switch (tag) {
        case 'T': case 'A': case 'B': case 'W':
          in_text = true;
          has_section = true;
          break;
        case 'X': case 'K': case 'N': case 'C':
          // Cross-reference and bookkeeping sections carry no document text.
          in_text = false;
          break;
        default:
          throw ParseError(source, line_no, "unknown SMART marker '." +
                                                std::string(1, tag) + "'");
      }
      // Text may follow the marker on the same line.
      auto trailing = split_whitespace(rest);
      if (in_text && !trailing.empty()) {
        auto& text = records.back().text;
        if (!text.empty()) text.push_back('\n');
        text.append(rest.substr(rest.find_first_not_of(" \t")));
      }
      continue;
    }
    if (records.empty()) {
      if (split_whitespace(line).empty()) continue;
      throw ParseError(source, line_no, "text before first .I record");
    }
    if (!in_text) continue;
    auto& text = records.back().text;
    if (!text.empty()) text.push_back('\n');
    text.append(line);
  }
  if (records.empty()) throw ParseError(source, line_no, "no .I records found");
  finish_record();
  return records;
}

std::vector<SmartRecord> parse_smart_collection(const std::string& path) {
  auto in = open_input(path);
  return parse_smart(in, path);
}

std::vector<SmartRecord> parse_smart_queries(const std::string& path) {
  auto in = open_input(path);
  return parse_smart(in, path);
}

RawJudgments parse_qrels(std::istream& in, QrelsFormat format,
                         const std::string& source) {
  RawJudgments judgments;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    std::int64_t query = 0;
    std::int64_t doc = 0;
    if (format == QrelsFormat::kPairs) {
      if (fields.size() < 2 || !parse_int(fields[0], query) || !parse_int(fields[1], doc)) {
        throw ParseError(source, line_no, "expected 'query_id doc_id'");
      }
    } else {
      double relevance = 0.0;
      if (fields.size() < 4 || !parse_int(fields[0], query) ||
          !parse_int(fields[2], doc)) {
        throw ParseError(source, line_no, "expected 'query_id iter doc_id relevance'");
      }
      try {
        relevance = parse_double(fields[3]);
      } catch (const DataError&) {
        throw ParseError(source, line_no, "bad relevance value");
      }
      if (relevance <= 0.0) continue;
    }
    judgments[query].insert(doc);
  }
  return judgments;
}

RawJudgments parse_qrels(const std::string& path, QrelsFormat format) {
  auto in = open_input(path);
  return parse_qrels(in, format, path);
}

RelevanceJudgments resolve_judgments(const RawJudgments& raw,
                                     std::span<const std::int64_t> doc_ids) {
  std::unordered_map<std::int64_t, DocId> rows;
  for (std::size_t i = 0; i < doc_ids.size(); ++i) {
    rows.emplace(doc_ids[i], static_cast<DocId>(i));
  }
  RelevanceJudgments out;
  for (const auto& [query, docs] : raw) {
    auto& dst = out[query];
    for (auto doc : docs) {
      auto it = rows.find(doc);
      if (it == rows.end()) {
        throw DataError("judgment for query " + std::to_string(query) +
                        " references unknown document " + std::to_string(doc));
      }
      dst.insert(it->second);
    }
  }
  return out;
}

SplitPair split_heldout(const CountMatrix& counts, double fraction,
                        std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidArgument("held-out fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  std::vector<CountTriple> train;
  std::vector<CountTriple> heldout;
  for (const auto& t : counts.triples()) {
    Count held = 0;
    for (Count i = 0; i < t.count; ++i) {
      if (unit_uniform(rng) < fraction) ++held;
    }
    if (held > 0) heldout.push_back({t.doc, t.term, held});
    if (held < t.count) train.push_back({t.doc, t.term, t.count - held});
  }
  return {CountMatrix(counts.n_docs(), counts.n_terms(), std::move(train)),
          CountMatrix(counts.n_docs(), counts.n_terms(), std::move(heldout)), seed,
          fraction};
}

CountMatrix merge_counts(const CountMatrix& a, const CountMatrix& b) {
  if (a.n_docs() != b.n_docs() || a.n_terms() != b.n_terms()) {
    throw InvalidArgument("cannot merge count matrices of different shapes");
  }
  std::map<std::pair<DocId, TermId>, Count> cells;
  for (const auto& t : a.triples()) cells[{t.doc, t.term}] += t.count;
  for (const auto& t : b.triples()) cells[{t.doc, t.term}] += t.count;
  std::vector<CountTriple> triples;
  triples.reserve(cells.size());
  for (const auto& [key, count] : cells) triples.push_back({key.first, key.second, count});
  return CountMatrix(a.n_docs(), a.n_terms(), std::move(triples));
}

void write_counts(std::ostream& out, const CountMatrix& counts) {
  out << "#plsa-counts " << counts.n_docs() << ' ' << counts.n_terms() << '\n';
  for (const auto& t : counts.triples()) {
    out << t.doc << '\t' << t.term << '\t' << t.count << '\n';
  }
}

CountMatrix read_counts(std::istream& in, const std::string& source,
                        std::optional<DocId> n_docs_hint,
                        std::optional<TermId> n_terms_hint) {
  std::optional<DocId> n_docs = n_docs_hint;
  std::optional<TermId> n_terms = n_terms_hint;
  std::vector<CountTriple> triples;
  DocId max_doc = -1;
  TermId max_term = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto fields = split_whitespace(line);
      if (!fields.empty() && fields[0] == "#plsa-counts") {
        DocId n = 0;
        TermId m = 0;
        if (fields.size() != 3 || !parse_int(fields[1], n) || !parse_int(fields[2], m)) {
          throw ParseError(source, line_no, "malformed #plsa-counts header");
        }
        n_docs = n;
        n_terms = m;
      }
      continue;
    }
    auto fields = split_fields(line, '\t');
    CountTriple t{};
    if (fields.size() != 3 || !parse_int(fields[0], t.doc) ||
        !parse_int(fields[1], t.term) || !parse_int(fields[2], t.count)) {
      throw ParseError(source, line_no, "expected 'doc<TAB>term<TAB>count'");
    }
    if (t.doc < 0 || t.term < 0 || t.count < 1) {
      throw ParseError(source, line_no, "negative id or non-positive count");
    }
    max_doc = std::max(max_doc, t.doc);
    max_term = std::max(max_term, t.term);
    triples.push_back(t);
  }
  DocId n = n_docs.value_or(max_doc + 1);
  TermId m = n_terms.value_or(max_term + 1);
  if (max_doc >= n || max_term >= m) {
    throw DataError(source + ": entry outside declared " + std::to_string(n) + "x" +
                    std::to_string(m) + " shape");
  }
  try {
    return CountMatrix(n, m, std::move(triples));
  } catch (const InvalidArgument& e) {
    throw DataError(source + ": " + e.what());
  }
}

void save_counts(const std::string& path, const CountMatrix& counts) {
  auto out = open_output(path);
  write_counts(out, counts);
}

CountMatrix load_counts(const std::string& path) {
  auto in = open_input(path);
  return read_counts(in, path);
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (std::size_t i = 0; i < vocab.size(); ++i) out << i << '\t' << vocab.term(i) << '\n';
}

Vocabulary read_vocabulary(std::istream& in, const std::string& source) {
  std::vector<std::string> terms;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    auto tab = line.find('\t');
    std::size_t id = 0;
    if (tab == std::string::npos || !parse_int(std::string_view(line).substr(0, tab), id)) {
      throw ParseError(source, line_no, "expected 'term_id<TAB>term'");
    }
    if (id != terms.size()) {
      throw ParseError(source, line_no, "vocabulary ids must be dense and ascending");
    }
    terms.push_back(line.substr(tab + 1));
  }
  try {
    return Vocabulary(std::move(terms));
  } catch (const InvalidArgument& e) {
    throw DataError(source + ": " + e.what());
  }
}

void save_vocabulary(const std::string& path, const Vocabulary& vocab) {
  auto out = open_output(path);
  write_vocabulary(out, vocab);
}

Vocabulary load_vocabulary(const std::string& path) {
  auto in = open_input(path);
  return read_vocabulary(in, path);
}

void save_doc_ids(const std::string& path, std::span<const std::int64_t> ids) {
  auto out = open_output(path);
  for (std::size_t i = 0; i < ids.size(); ++i) out << i << '\t' << ids[i] << '\n';
}

std::vector<std::int64_t> load_doc_ids(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::int64_t> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_fields(line, '\t');
    std::size_t row = 0;
    std::int64_t id = 0;
    if (fields.size() != 2 || !parse_int(fields[0], row) || !parse_int(fields[1], id) ||
        row != ids.size()) {
      throw ParseError(path, line_no, "expected dense 'row<TAB>external_id'");
    }
    ids.push_back(id);
  }
  return ids;
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  auto in = open_input(path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& tok : tokenize(line)) words.insert(std::move(tok));
  }
  return words;
}

}  // namespace plsa
