#include "plsa/container.h"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "plsa/util.h"

namespace plsa {

namespace {

constexpr const char* kMagic = "plsa-container";

class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::string next() {
    std::string line;
    ++line_;
    if (!std::getline(in_, line)) fail("unexpected end of file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  // Reads "key value" and returns value.
  std::string field(const std::string& key) {
    std::string line = next();
    if (line.compare(0, key.size() + 1, key + " ") != 0) fail("expected '" + key + " ...'");
    return line.substr(key.size() + 1);
  }

  long long integer(const std::string& key) {
    std::string text = field(key);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) fail("bad integer for " + key);
    return value;
  }

  void expect(const std::string& token) {
    if (next() != token) fail("expected '" + token + "'");
  }

  void values(std::size_t count, double* out) {
    std::string line = next();
    std::size_t i = 0;
    std::size_t pos = 0;
    while (pos < line.size()) {
      std::size_t end = line.find(' ', pos);
      if (end == std::string::npos) end = line.size();
      if (end > pos) {
        if (i == count) fail("too many values on line");
        try {
          out[i++] = parse_double(std::string_view(line).substr(pos, end - pos));
        } catch (const DataError& e) {
          fail(e.what());
        }
      }
      pos = end + 1;
    }
    if (i != count) fail("expected " + std::to_string(count) + " values");
  }

  template <typename Matrix>
  void block(const std::string& name, Matrix& m) {
    expect(name);
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      values(row.size(), row.data());
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = row[static_cast<std::size_t>(c)];
    }
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_, what); }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

void header(LineReader& reader, const std::string& object) {
  std::string magic = reader.next();
  if (magic != std::string(kMagic) + " " + std::to_string(kContainerVersion)) {
    reader.fail("not a version " + std::to_string(kContainerVersion) + " plsa container");
  }
  if (reader.field("object") != object) reader.fail("container does not hold a " + object);
}

template <typename Matrix>
void write_block(std::ostream& out, const char* name, const Matrix& m) {
  out << name << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

Eigen::Index positive(LineReader& reader, const std::string& key) {
  const long long v = reader.integer(key);
  if (v < 1) reader.fail(key + " must be >= 1");
  return static_cast<Eigen::Index>(v);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

}  // namespace

void write_model(std::ostream& out, const AspectModel& model, std::optional<double> beta) {
  out << kMagic << ' ' << kContainerVersion << '\n';
  out << "object aspect-model\n";
  out << "factors " << model.n_factors() << '\n';
  out << "docs " << model.n_docs() << '\n';
  out << "terms " << model.n_terms() << '\n';
  if (beta) out << "beta " << format_double(*beta) << '\n';
  write_block(out, "prior", model.prior());
  write_block(out, "doc_given_z", model.doc_given_z());
  write_block(out, "word_given_z", model.word_given_z());
  out << "end\n";
}

StoredModel read_model(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  header(reader, "aspect-model");
  const Eigen::Index k = positive(reader, "factors");
  const Eigen::Index n = positive(reader, "docs");
  const Eigen::Index m = positive(reader, "terms");
  std::optional<double> beta;
  std::string line = reader.next();
  if (line.rfind("beta ", 0) == 0) {
    try {
      beta = parse_double(std::string_view(line).substr(5));
    } catch (const DataError& e) {
      reader.fail(e.what());
    }
    line = reader.next();
  }
  if (line != "prior") reader.fail("expected 'prior'");
  Eigen::VectorXd prior(k);
  for (Eigen::Index z = 0; z < k; ++z) reader.values(1, &prior[z]);
  RowMatrix doc(n, k);
  RowMatrix word(m, k);
  reader.block("doc_given_z", doc);
  reader.block("word_given_z", word);
  reader.expect("end");
  try {
    return {AspectModel(std::move(prior), std::move(doc), std::move(word)), beta};
  } catch (const InvalidArgument& e) {
    throw DataError(source + ": " + e.what());
  }
}

void save_model(const std::string& path, const AspectModel& model, std::optional<double> beta) {
  auto out = open_output(path);
  write_model(out, model, beta);
}

StoredModel load_model(const std::string& path) {
  auto in = open_input(path);
  return read_model(in, path);
}

void write_svd(std::ostream& out, const SvdDecomposition& decomp) {
  out << kMagic << ' ' << kContainerVersion << '\n';
  out << "object svd\n";
  out << "rank " << decomp.rank() << '\n';
  out << "rows " << decomp.u.rows() << '\n';
  out << "cols " << decomp.v.rows() << '\n';
  write_block(out, "sigma", decomp.sigma);
  write_block(out, "u", decomp.u);
  write_block(out, "v", decomp.v);
  out << "end\n";
}

SvdDecomposition read_svd(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  header(reader, "svd");
  const Eigen::Index k = positive(reader, "rank");
  const Eigen::Index n = positive(reader, "rows");
  const Eigen::Index m = positive(reader, "cols");
  SvdDecomposition d{Eigen::MatrixXd(n, k), Eigen::VectorXd(k), Eigen::MatrixXd(m, k)};
  reader.block("sigma", d.sigma);
  reader.block("u", d.u);
  reader.block("v", d.v);
  reader.expect("end");
  return d;
}

void save_svd(const std::string& path, const SvdDecomposition& decomp) {
  auto out = open_output(path);
  write_svd(out, decomp);
}

SvdDecomposition load_svd(const std::string& path) {
  auto in = open_input(path);
  return read_svd(in, path);
}

}  // namespace plsa
