#ifndef PLSA_UTIL_H_
#define PLSA_UTIL_H_

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace plsa {

// Error taxonomy. The CLI maps each family onto a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated a documented precondition (bad K, lambda out of range...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data is unusable: empty corpus, malformed file, dimension mismatch.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A quantity could not be computed (zero normalizer, unreachable observation).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Warnings go through a replaceable sink so tests can capture or silence them.
using WarningSink = std::function<void(std::string_view)>;
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

// Derives an independent seed for a named sub-stream ("init", "split", ...)
// so that changing one stage's randomness never shifts another's.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits; portable across standard
// libraries, unlike std::uniform_real_distribution.
inline double unit_uniform(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace plsa

#endif  // PLSA_UTIL_H_
