#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sparsebench {

// ---------------------------------------------------------------------------
// Errors. Every failure surfaces as a subclass with a stable category tag so
// the CLI can print one machine-parseable line.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}
  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

struct FileError : Error {
  explicit FileError(const std::string& m) : Error("io", m) {}
};
struct RaggedRowError : Error {
  explicit RaggedRowError(const std::string& m) : Error("parse", m) {}
};
struct MissingColumnError : Error {
  explicit MissingColumnError(const std::string& m) : Error("parse", m) {}
};
struct UnmappedLabelError : Error {
  explicit UnmappedLabelError(const std::string& m) : Error("value", m) {}
};
struct ValueError : Error {
  explicit ValueError(const std::string& m) : Error("value", m) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error("numeric", m) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& m) : Error("format", m) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

// ---------------------------------------------------------------------------
// Dense row-major matrix. Heavy lifting stays in plain loops; shapes are
// small enough that a linear algebra dependency would buy nothing.
// ---------------------------------------------------------------------------

using Vec = std::vector<double>;

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::size_t size() const { return data.size(); }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// y = W x, W is out x in.
inline Vec matvec(const Matrix& w, const Vec& x) {
  if (x.size() != w.cols) {
    throw ShapeError("matvec: vector length " + std::to_string(x.size()) +
                     " does not match matrix columns " + std::to_string(w.cols));
  }
  Vec y(w.rows, 0.0);
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double* row = &w.data[i * w.cols];
    double acc = 0.0;
    for (std::size_t j = 0; j < w.cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

// ---------------------------------------------------------------------------
// Deterministic RNG. mt19937_64 output is pinned by the standard and all
// derived draws below avoid std::uniform_* distributions, whose streams are
// implementation-defined. Same seed, same bytes, everywhere.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  // Unbiased draw from [0, n), n > 0.
  std::size_t index(std::size_t n) {
    const std::uint64_t bound = UINT64_MAX - UINT64_MAX % static_cast<std::uint64_t>(n);
    std::uint64_t r;
    do {
      r = next();
    } while (r >= bound);
    return static_cast<std::size_t>(r % n);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  // Independent child stream; derivation depends only on the original seed.
  Rng fork(std::string_view label) const { return Rng(mix64(seed_ ^ fnv1a64(label))); }
  Rng fork(std::uint64_t n) const { return Rng(mix64(seed_ ^ mix64(n))); }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sparsebench
