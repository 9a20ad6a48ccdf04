#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace relclass {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; message carries "<source>:<line>: ".
class ParseError : public Error {
 public:
  ParseError(std::string_view source, std::size_t line, std::string_view what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Probability of the positive class emitted by any classifier.
class ModelScore {
 public:
  ModelScore() = default;
  explicit ModelScore(double value);
  double value() const { return value_; }
  bool positive(double threshold = 0.5) const { return value_ >= threshold; }

 private:
  double value_ = 0.0;
};

std::uint64_t fnv1a(std::string_view data);

// Named sub-seed: the same (root, name) pair always yields the same seed and
// distinct names do not perturb each other.
std::uint64_t derive_seed(std::uint64_t root, std::string_view name);

// Portable deterministic RNG. Only the raw mt19937_64 stream is used, so the
// sequence does not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform in [0, n); n must be positive.
  std::size_t below(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::vector<std::string_view> split(std::string_view text, char sep);
std::vector<std::string> split_whitespace(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string_view trim(std::string_view text);
std::string lowercase(std::string_view text);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);
// Exact hexadecimal form (e.g. 0x1.8p+1).
std::string format_hex(double value);
// Accepts decimal and hexadecimal floating-point; throws Error on junk.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Iterates lines of a text buffer, tracking 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}
  bool next(std::string_view& line);
  std::size_t line_number() const { return line_no_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

}  // namespace relclass
